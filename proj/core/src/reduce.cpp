#include "gridreduce/reduce.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

namespace gridreduce {

ZonePartition singleton_partition(const Network& net) {
    ZonePartition zp;
    zp.assignment.resize(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i) zp.assignment[i] = i;
    zp.zone_count = net.bus_count();
    zp.ref_zone = net.ref_index();
    return zp;
}

ZonePartition load_partition(const std::string& json_text, const Network& net) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedCase(std::string("zone file is not valid JSON: ") + e.what());
    }
    if (!j.contains("zones") || !j["zones"].is_array())
        throw MalformedCase("zone file must contain a \"zones\" array");

    ZonePartition zp;
    zp.assignment.assign(net.bus_count(), -1);
    int zone = 0;
    for (const auto& zlist : j["zones"]) {
        if (!zlist.is_array()) throw MalformedCase("each zone must be an array of bus ids");
        for (const auto& jb : zlist) {
            if (!jb.is_number_integer()) throw MalformedCase("bus ids must be integers");
            int id = jb.get<int>();
            int idx = net.bus_index(id);
            if (idx < 0) throw UnknownBus("zone file references unknown bus " + std::to_string(id));
            if (zp.assignment[idx] != -1)
                throw OverlappingZones("bus " + std::to_string(id) + " assigned to two zones");
            zp.assignment[idx] = zone;
        }
        ++zone;
    }
    // unlisted buses become singleton zones, in ascending bus-id order
    std::vector<std::pair<int, int>> rest; // (id, index)
    for (int i = 0; i < net.bus_count(); ++i)
        if (zp.assignment[i] == -1) rest.emplace_back(net.buses[i].id, i);
    std::sort(rest.begin(), rest.end());
    for (const auto& [id, idx] : rest) zp.assignment[idx] = zone++;

    zp.zone_count = zone;
    zp.ref_zone = zp.assignment[net.ref_index()];
    return zp;
}

std::tuple<ReducedNetwork, FlowAggregator, InjectionAggregator>
build_reduction(const Network& net, const ZonePartition& zp) {
    const int n = net.bus_count();
    const int m = net.branch_count();
    const int nz = zp.zone_count;

    // tie lines keyed by (low zone, high zone), deterministic order
    std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> ties;
    for (int k = 0; k < m; ++k) {
        const Branch& br = net.branches[k];
        int za = zp.assignment[net.bus_index(br.from_bus)];
        int zb = zp.assignment[net.bus_index(br.to_bus)];
        if (za == zb) continue;
        // orientation: from lower zone id to higher; sign +1 when the branch
        // agrees with the tie orientation
        double sign = za < zb ? 1.0 : -1.0;
        ties[{std::min(za, zb), std::max(za, zb)}].emplace_back(k, sign);
    }

    ReducedNetwork rn;
    rn.zone_count = nz;
    rn.ref_zone = zp.ref_zone;
    for (auto& [pair, crossings] : ties)
        rn.tie_lines.push_back({pair.first, pair.second, std::move(crossings)});

    const int ne = rn.tie_count();

    // reduced graph connectivity
    {
        std::vector<std::vector<int>> adj(nz);
        for (const TieLine& t : rn.tie_lines) {
            adj[t.zone_a].push_back(t.zone_b);
            adj[t.zone_b].push_back(t.zone_a);
        }
        std::vector<char> seen(nz, 0);
        std::vector<int> stack{rn.ref_zone};
        seen[rn.ref_zone] = 1;
        int visited = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (!seen[v]) {
                    seen[v] = 1;
                    ++visited;
                    stack.push_back(v);
                }
        }
        if (visited != nz)
            throw DisconnectedReduction("reduced graph is not connected (" +
                                        std::to_string(visited) + "/" + std::to_string(nz) +
                                        " zones reachable)");
    }

    // A_R with the ref-zone column deleted
    rn.incidence = Eigen::MatrixXd::Zero(ne, nz - 1);
    for (int e = 0; e < ne; ++e) {
        const TieLine& t = rn.tie_lines[e];
        int ca = rn.zone_column(t.zone_a);
        int cb = rn.zone_column(t.zone_b);
        if (ca >= 0) rn.incidence(e, ca) = 1.0;
        if (cb >= 0) rn.incidence(e, cb) = -1.0;
    }

    FlowAggregator fagg;
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (int e = 0; e < ne; ++e)
            for (const auto& [k, sign] : rn.tie_lines[e].crossings) trip.emplace_back(e, k, sign);
        fagg.psi.resize(ne, m);
        fagg.psi.setFromTriplets(trip.begin(), trip.end());
    }

    InjectionAggregator iagg;
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (int i = 0; i < n; ++i) trip.emplace_back(zp.assignment[i], i, 1.0);
        iagg.psi.resize(nz, n);
        iagg.psi.setFromTriplets(trip.begin(), trip.end());
    }

    return {std::move(rn), std::move(fagg), std::move(iagg)};
}

Eigen::VectorXd aggregate_injections(const Eigen::VectorXd& p, const InjectionAggregator& agg,
                                     const ZonePartition& zp) {
    if (p.size() != agg.psi.cols())
        throw DimensionMismatch("aggregate_injections: injection vector size");
    Eigen::VectorXd full = agg.psi * p; // length |N_R|
    Eigen::VectorXd out(full.size() - 1);
    int r = 0;
    for (int z = 0; z < full.size(); ++z)
        if (z != zp.ref_zone) out[r++] = full[z];
    return out;
}

Eigen::VectorXd aggregate_flows(const Eigen::VectorXd& p_ac, const FlowAggregator& agg) {
    if (p_ac.size() != agg.psi.cols())
        throw DimensionMismatch("aggregate_flows: flow vector size");
    return agg.psi * p_ac;
}

EquivalentParams init_params(const Network& net, const ReducedNetwork& rn) {
    EquivalentParams p;
    p.b.resize(rn.tie_count());
    for (int e = 0; e < rn.tie_count(); ++e) {
        double sum = 0.0;
        for (const auto& [k, sign] : rn.tie_lines[e].crossings) {
            double x = net.branches[k].reactance;
            if (x == 0.0)
                throw ZeroReactanceBranch("branch " + std::to_string(k) +
                                          " has zero reactance; baseline susceptance undefined");
            sum += 1.0 / x;
        }
        p.b[e] = sum;
    }
    p.gamma = Eigen::VectorXd::Zero(rn.zone_count - 1);
    p.rho = Eigen::VectorXd::Zero(rn.tie_count());
    return p;
}

} // namespace gridreduce
