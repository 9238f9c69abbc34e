#include "gridreduce/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gridreduce {

namespace {

// Column layout of the standard case tables (only the columns we read).
enum BusCol { BUS_I = 0, BUS_TYPE = 1, PD = 2, QD = 3, GS = 4, BS = 5, VM = 7, VA = 8, BASE_KV = 9 };
enum GenCol { GEN_BUS = 0, PG = 1, QG = 2, VG = 5, GEN_STATUS = 7 };
enum BranchCol { F_BUS = 0, T_BUS = 1, BR_R = 2, BR_X = 3, BR_B = 4, TAP = 8, SHIFT = 9, BR_STATUS = 10 };

std::string strip_comments(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    for (char c : text) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        out.push_back(in_comment ? ' ' : c);
    }
    return out;
}

// Reads the numeric matrix assigned to `name` ("mpc.bus = [ ... ];").
std::vector<std::vector<double>> read_table(const std::string& text, const std::string& name) {
    const std::string key = name + " ";
    size_t pos = std::string::npos;
    for (const std::string& pat : {name + " =", name + "=", name + " \t="}) {
        pos = text.find(pat);
        if (pos != std::string::npos) break;
    }
    if (pos == std::string::npos) throw MalformedCase("missing table: " + name);
    size_t open = text.find('[', pos);
    size_t close = text.find(']', open);
    if (open == std::string::npos || close == std::string::npos)
        throw MalformedCase("unterminated table: " + name);

    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    std::string body = text.substr(open + 1, close - open - 1);
    const char* p = body.c_str();
    const char* end = p + body.size();
    while (p < end) {
        if (*p == ';' || *p == '\n') {
            if (!row.empty()) rows.push_back(std::move(row)), row.clear();
            ++p;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(*p)) || *p == ',') {
            ++p;
            continue;
        }
        char* next = nullptr;
        double v = std::strtod(p, &next);
        if (next == p) throw MalformedCase("non-numeric field in table " + name);
        row.push_back(v);
        p = next;
    }
    if (!row.empty()) rows.push_back(std::move(row));
    return rows;
}

double read_scalar(const std::string& text, const std::string& name) {
    size_t pos = text.find(name);
    if (pos == std::string::npos) throw MalformedCase("missing scalar: " + name);
    pos = text.find('=', pos);
    if (pos == std::string::npos) throw MalformedCase("missing value: " + name);
    char* next = nullptr;
    double v = std::strtod(text.c_str() + pos + 1, &next);
    if (next == text.c_str() + pos + 1) throw MalformedCase("non-numeric value: " + name);
    return v;
}

bool connected(const Network& net) {
    int n = net.bus_count();
    if (n == 0) return false;
    std::vector<std::vector<int>> adj(n);
    for (const Branch& br : net.branches) {
        int a = net.bus_index(br.from_bus);
        int bi = net.bus_index(br.to_bus);
        if (a < 0 || bi < 0) continue;
        adj[a].push_back(bi);
        adj[bi].push_back(a);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
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
    return visited == n;
}

} // namespace

int Network::bus_index(int id) const {
    if (index_cache_.size() != buses.size()) {
        index_cache_.clear();
        for (size_t i = 0; i < buses.size(); ++i) index_cache_[buses[i].id] = static_cast<int>(i);
    }
    auto it = index_cache_.find(id);
    return it == index_cache_.end() ? -1 : it->second;
}

Eigen::VectorXd Network::nominal_p() const {
    Eigen::VectorXd p(bus_count());
    for (int i = 0; i < bus_count(); ++i) p[i] = buses[i].p_inj;
    return p;
}

Eigen::VectorXd Network::nominal_q() const {
    Eigen::VectorXd q(bus_count());
    for (int i = 0; i < bus_count(); ++i) q[i] = buses[i].q_inj;
    return q;
}

Network parse_case(const std::string& raw) {
    const std::string text = strip_comments(raw);

    Network net;
    net.base_mva = read_scalar(text, "baseMVA");
    if (net.base_mva <= 0) throw MalformedCase("baseMVA must be positive");

    auto bus_rows = read_table(text, "bus");
    auto gen_rows = read_table(text, "gen");
    auto branch_rows = read_table(text, "branch");

    for (const auto& r : bus_rows) {
        if (r.size() < 10) throw MalformedCase("bus row too short");
        Bus b;
        b.id = static_cast<int>(r[BUS_I]);
        int type = static_cast<int>(r[BUS_TYPE]);
        switch (type) {
            case 3: b.kind = BusKind::Slack; break;
            case 2: b.kind = BusKind::PV; break;
            case 1: case 4: b.kind = BusKind::PQ; break;
            default: throw MalformedCase("bus " + std::to_string(b.id) + ": bad type");
        }
        b.pd_mw = r[PD];
        b.qd_mvar = r[QD];
        b.gs_mw = r[GS];
        b.bs_mvar = r[BS];
        b.vm = r[VM];
        b.va_deg = r[VA];
        b.base_kv = r[BASE_KV];
        net.buses.push_back(b);
    }
    if (net.buses.empty()) throw MalformedCase("empty bus table");

    {
        std::map<int, int> seen;
        for (const Bus& b : net.buses)
            if (++seen[b.id] > 1) throw MalformedCase("duplicate bus id " + std::to_string(b.id));
    }

    for (const auto& r : gen_rows) {
        if (r.size() < 8) throw MalformedCase("gen row too short");
        if (r[GEN_STATUS] <= 0) continue; // out of service
        int bus_id = static_cast<int>(r[GEN_BUS]);
        int idx = net.bus_index(bus_id);
        if (idx < 0) throw MalformedCase("generator at unknown bus " + std::to_string(bus_id));
        Bus& b = net.buses[idx];
        b.pg_mw += r[PG];
        b.qg_mvar += r[QG];
        if (b.kind != BusKind::PQ) b.v_mag_setpoint = r[VG];
    }

    int slack_count = 0;
    for (Bus& b : net.buses) {
        b.p_inj = (b.pg_mw - b.pd_mw) / net.base_mva;
        b.q_inj = (b.qg_mvar - b.qd_mvar) / net.base_mva;
        b.shunt_g = b.gs_mw / net.base_mva;
        b.shunt_b = b.bs_mvar / net.base_mva;
        if (b.kind == BusKind::PQ) b.v_mag_setpoint = b.vm > 0 ? b.vm : 1.0;
        if (b.kind != BusKind::PQ && b.v_mag_setpoint <= 0) b.v_mag_setpoint = b.vm > 0 ? b.vm : 1.0;
        if (b.kind == BusKind::Slack) {
            net.ref_bus = b.id;
            ++slack_count;
        }
    }
    if (slack_count == 0) throw NoSlack("no bus flagged as reference");
    if (slack_count > 1) throw MalformedCase("multiple slack buses");

    for (const auto& r : branch_rows) {
        if (r.size() < 11) throw MalformedCase("branch row too short");
        if (r[BR_STATUS] <= 0) continue; // out of service
        Branch br;
        br.from_bus = static_cast<int>(r[F_BUS]);
        br.to_bus = static_cast<int>(r[T_BUS]);
        if (net.bus_index(br.from_bus) < 0 || net.bus_index(br.to_bus) < 0)
            throw MalformedCase("branch endpoint references unknown bus");
        br.resistance = r[BR_R];
        br.reactance = r[BR_X];
        std::complex<double> y = 1.0 / std::complex<double>(br.resistance, br.reactance);
        if (!std::isfinite(y.real()) || !std::isfinite(y.imag()))
            throw MalformedCase("branch with zero impedance");
        br.series_g = y.real();
        br.series_b = y.imag();
        br.shunt_b = r[BR_B];
        br.tap_ratio = r[TAP] != 0.0 ? r[TAP] : 1.0;
        br.shift_deg = r[SHIFT];
        br.phase_shift = br.shift_deg * std::numbers::pi / 180.0;
        net.branches.push_back(br);
    }

    if (!connected(net)) throw Disconnected("branch graph is not connected");
    return net;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string to_case_text(const Network& net) {
    std::ostringstream os;
    os << "function mpc = case_export\n";
    os << "mpc.version = '2';\n";
    os << "mpc.baseMVA = " << fmt(net.base_mva) << ";\n\n";

    os << "mpc.bus = [\n";
    for (const Bus& b : net.buses) {
        int type = b.kind == BusKind::Slack ? 3 : (b.kind == BusKind::PV ? 2 : 1);
        os << '\t' << b.id << '\t' << type << '\t' << fmt(b.pd_mw) << '\t' << fmt(b.qd_mvar)
           << '\t' << fmt(b.gs_mw) << '\t' << fmt(b.bs_mvar) << "\t1\t" << fmt(b.vm) << '\t'
           << fmt(b.va_deg) << '\t' << fmt(b.base_kv) << "\t1\t1.1\t0.9;\n";
    }
    os << "];\n\n";

    os << "mpc.gen = [\n";
    for (const Bus& b : net.buses) {
        if (b.kind == BusKind::PQ && b.pg_mw == 0.0 && b.qg_mvar == 0.0) continue;
        os << '\t' << b.id << '\t' << fmt(b.pg_mw) << '\t' << fmt(b.qg_mvar)
           << "\t9999\t-9999\t" << fmt(b.v_mag_setpoint) << '\t' << fmt(net.base_mva)
           << "\t1\t9999\t-9999;\n";
    }
    os << "];\n\n";

    os << "mpc.branch = [\n";
    for (const Branch& br : net.branches) {
        double tap = br.tap_ratio; // 1.0 round-trips as 1.0
        os << '\t' << br.from_bus << '\t' << br.to_bus << '\t' << fmt(br.resistance) << '\t'
           << fmt(br.reactance) << '\t' << fmt(br.shunt_b) << "\t0\t0\t0\t" << fmt(tap) << '\t'
           << fmt(br.shift_deg) << "\t1\t-360\t360;\n";
    }
    os << "];\n";
    return os.str();
}

std::vector<Violation> validate(const Network& net) {
    std::vector<Violation> out;

    int slack_count = 0;
    std::map<int, int> id_count;
    for (const Bus& b : net.buses) {
        ++id_count[b.id];
        if (b.kind == BusKind::Slack) ++slack_count;
        if (b.kind != BusKind::PQ && b.v_mag_setpoint <= 0)
            out.push_back({"NonPositiveSetpoint", "bus " + std::to_string(b.id)});
    }
    if (slack_count == 0) out.push_back({"NoSlack", "no slack bus"});
    if (slack_count > 1) out.push_back({"DuplicateSlack", std::to_string(slack_count) + " slack buses"});
    for (const auto& [id, n] : id_count)
        if (n > 1) out.push_back({"DuplicateBusId", "bus " + std::to_string(id)});

    for (size_t k = 0; k < net.branches.size(); ++k) {
        const Branch& br = net.branches[k];
        std::string tag = "branch " + std::to_string(k) + " (" + std::to_string(br.from_bus) +
                          "-" + std::to_string(br.to_bus) + ")";
        if (net.bus_index(br.from_bus) < 0 || net.bus_index(br.to_bus) < 0)
            out.push_back({"DanglingBranch", tag});
        if (br.from_bus == br.to_bus) out.push_back({"SelfLoop", tag});
        if (br.series_g == 0.0 && br.series_b == 0.0) out.push_back({"ZeroAdmittance", tag});
        if (br.tap_ratio <= 0) out.push_back({"NonPositiveTap", tag});
    }

    bool dangling = std::any_of(out.begin(), out.end(),
                                [](const Violation& v) { return v.rule == "DanglingBranch"; });
    if (!dangling && !connected(net)) out.push_back({"Disconnected", "branch graph"});
    return out;
}

nlohmann::json network_to_json(const Network& net) {
    nlohmann::json j;
    j["base_mva"] = net.base_mva;
    j["ref_bus"] = net.ref_bus;
    auto& buses = j["buses"] = nlohmann::json::array();
    for (const Bus& b : net.buses) {
        buses.push_back({{"id", b.id},
                         {"kind", b.kind == BusKind::Slack ? "slack" : (b.kind == BusKind::PV ? "pv" : "pq")},
                         {"p_inj", b.p_inj},
                         {"q_inj", b.q_inj},
                         {"v_setpoint", b.v_mag_setpoint},
                         {"shunt_g", b.shunt_g},
                         {"shunt_b", b.shunt_b}});
    }
    auto& branches = j["branches"] = nlohmann::json::array();
    for (const Branch& br : net.branches) {
        branches.push_back({{"from", br.from_bus},
                            {"to", br.to_bus},
                            {"r", br.resistance},
                            {"x", br.reactance},
                            {"charging_b", br.shunt_b},
                            {"tap", br.tap_ratio},
                            {"shift_deg", br.shift_deg}});
    }
    return j;
}

bool networks_equal(const Network& a, const Network& b) {
    if (a.base_mva != b.base_mva || a.ref_bus != b.ref_bus) return false;
    if (a.buses.size() != b.buses.size() || a.branches.size() != b.branches.size()) return false;
    for (size_t i = 0; i < a.buses.size(); ++i) {
        const Bus &x = a.buses[i], &y = b.buses[i];
        if (x.id != y.id || x.kind != y.kind || x.p_inj != y.p_inj || x.q_inj != y.q_inj ||
            x.v_mag_setpoint != y.v_mag_setpoint || x.shunt_g != y.shunt_g ||
            x.shunt_b != y.shunt_b || x.pd_mw != y.pd_mw || x.qd_mvar != y.qd_mvar ||
            x.pg_mw != y.pg_mw || x.qg_mvar != y.qg_mvar)
            return false;
    }
    for (size_t i = 0; i < a.branches.size(); ++i) {
        const Branch &x = a.branches[i], &y = b.branches[i];
        if (x.from_bus != y.from_bus || x.to_bus != y.to_bus || x.series_g != y.series_g ||
            x.series_b != y.series_b || x.shunt_g != y.shunt_g || x.shunt_b != y.shunt_b ||
            x.tap_ratio != y.tap_ratio || x.phase_shift != y.phase_shift ||
            x.resistance != y.resistance || x.reactance != y.reactance)
            return false;
    }
    return true;
}

} // namespace gridreduce
