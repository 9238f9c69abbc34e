#include "gridreduce/artifact_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gridreduce {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string case_hash(const std::string& case_text) { return hash_hex(case_text); }

std::string zone_hash(const ZonePartition& zp) {
    std::ostringstream os;
    os << zp.zone_count << '|' << zp.ref_zone << '|';
    for (int z : zp.assignment) os << z << ',';
    return hash_hex(os.str());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << content;
    if (!out) throw InputError("write failed: " + path);
}

nlohmann::json reduction_bundle_json(const Network& net, const ZonePartition& zp,
                                     const ReducedNetwork& rn, const EquivalentParams& init,
                                     const std::string& casehash) {
    nlohmann::json j;
    j["version"] = kToolVersion;
    j["case_hash"] = casehash;
    j["zone_hash"] = zone_hash(zp);
    j["zone_count"] = rn.zone_count;
    j["ref_zone"] = rn.ref_zone;

    std::vector<std::vector<int>> zones(zp.zone_count);
    for (int i = 0; i < net.bus_count(); ++i) zones[zp.assignment[i]].push_back(net.buses[i].id);
    j["zones"] = zones;

    auto& ties = j["tie_lines"] = nlohmann::json::array();
    for (const TieLine& t : rn.tie_lines) {
        nlohmann::json jt;
        jt["zone_a"] = t.zone_a;
        jt["zone_b"] = t.zone_b;
        auto& xs = jt["crossings"] = nlohmann::json::array();
        for (const auto& [k, sign] : t.crossings) {
            const Branch& br = net.branches[k];
            xs.push_back({{"branch", k},
                          {"from", br.from_bus},
                          {"to", br.to_bus},
                          {"sign", sign}});
        }
        ties.push_back(jt);
    }

    j["init_params"] = {{"b", std::vector<double>(init.b.begin(), init.b.end())},
                        {"gamma", std::vector<double>(init.gamma.begin(), init.gamma.end())},
                        {"rho", std::vector<double>(init.rho.begin(), init.rho.end())}};
    return j;
}

void write_scenarios_csv(const std::string& path, const Network& net, const ScenarioSet& scen,
                         const std::string& casehash) {
    std::ostringstream os;
    os << "scenario,split";
    for (const Bus& b : net.buses) os << ",p_bus_" << b.id;
    os << '\n';
    for (int m = 0; m < scen.count(); ++m) {
        os << m << ',' << (m < scen.train_count ? "train" : "test");
        for (int i = 0; i < scen.injections.cols(); ++i)
            os << ',' << format_double(scen.injections(m, i));
        os << '\n';
    }
    write_text_file(path, os.str());

    nlohmann::json meta;
    meta["version"] = kToolVersion;
    meta["case_hash"] = casehash;
    meta["seed"] = scen.seed;
    meta["sigma"] = scen.sigma;
    meta["base_mva"] = net.base_mva;
    meta["train_count"] = scen.train_count;
    meta["test_count"] = scen.test_count;
    write_text_file(path + ".json", meta.dump(2) + "\n");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

ScenarioSet read_scenarios_csv(const std::string& path, ScenarioFileMeta* meta_out) {
    nlohmann::json meta = nlohmann::json::parse(read_text_file(path + ".json"));
    std::istringstream in(read_text_file(path));

    std::string header;
    std::getline(in, header);
    auto cols = split_csv_line(header);
    if (cols.size() < 3 || cols[0] != "scenario" || cols[1] != "split")
        throw InputError("bad scenario CSV header in " + path);
    const int n = static_cast<int>(cols.size()) - 2;

    std::vector<Eigen::VectorXd> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (static_cast<int>(f.size()) != n + 2) throw InputError("ragged scenario CSV row");
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) r[i] = std::strtod(f[i + 2].c_str(), nullptr);
        rows.push_back(r);
    }

    ScenarioSet scen;
    scen.injections.resize(static_cast<int>(rows.size()), n);
    for (size_t m = 0; m < rows.size(); ++m) scen.injections.row(static_cast<int>(m)) = rows[m];
    scen.seed = meta.at("seed").get<std::uint64_t>();
    scen.sigma = meta.at("sigma").get<double>();
    scen.train_count = meta.at("train_count").get<int>();
    scen.test_count = meta.at("test_count").get<int>();
    if (scen.train_count + scen.test_count != scen.count())
        throw InputError("scenario sidecar split does not match row count");

    if (meta_out) {
        meta_out->version = meta.value("version", "");
        meta_out->casehash = meta.value("case_hash", "");
        meta_out->seed = scen.seed;
        meta_out->sigma = scen.sigma;
        meta_out->base_mva = meta.value("base_mva", 100.0);
        meta_out->train_count = scen.train_count;
        meta_out->test_count = scen.test_count;
    }
    return scen;
}

void write_dataset_csv(const std::string& path, const Dataset& data, const DatasetFileMeta& meta) {
    std::ostringstream os;
    os << "scenario,split";
    for (int z = 0, col = 0; z < meta.zone_count; ++z) {
        if (z == meta.ref_zone) continue;
        os << ",p_r_zone" << z;
        ++col;
    }
    for (const auto& [a, b] : meta.ties) os << ",tie_" << a << '_' << b;
    os << '\n';
    for (int m = 0; m < data.count(); ++m) {
        os << m << ',' << (m < data.train_count ? "train" : "test");
        for (int i = 0; i < data.p_r.cols(); ++i) os << ',' << format_double(data.p_r(m, i));
        for (int e = 0; e < data.targets.cols(); ++e)
            os << ',' << format_double(data.targets(m, e));
        os << '\n';
    }
    write_text_file(path, os.str());

    nlohmann::json j;
    j["version"] = meta.version.empty() ? kToolVersion : meta.version;
    j["case_hash"] = meta.casehash;
    j["zone_hash"] = meta.zonehash;
    j["seed"] = meta.seed;
    j["sigma"] = meta.sigma;
    j["base_mva"] = meta.base_mva;
    j["zone_count"] = meta.zone_count;
    j["ref_zone"] = meta.ref_zone;
    j["ties"] = meta.ties;
    j["init_b"] = std::vector<double>(meta.init_b.begin(), meta.init_b.end());
    j["train_count"] = data.train_count;
    j["test_count"] = data.test_count;
    j["discarded"] = data.discarded;
    write_text_file(path + ".json", j.dump(2) + "\n");
}

Dataset read_dataset_csv(const std::string& path, DatasetFileMeta* meta_out) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path + ".json"));
    const int zone_count = j.at("zone_count").get<int>();
    const int nz = zone_count - 1;
    std::vector<std::pair<int, int>> ties = j.at("ties").get<std::vector<std::pair<int, int>>>();
    const int ne = static_cast<int>(ties.size());

    std::istringstream in(read_text_file(path));
    std::string header;
    std::getline(in, header);
    auto cols = split_csv_line(header);
    if (static_cast<int>(cols.size()) != 2 + nz + ne)
        throw InputError("dataset CSV column count does not match sidecar");

    std::vector<Eigen::VectorXd> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (static_cast<int>(f.size()) != 2 + nz + ne) throw InputError("ragged dataset CSV row");
        Eigen::VectorXd r(nz + ne);
        for (int i = 0; i < nz + ne; ++i) r[i] = std::strtod(f[i + 2].c_str(), nullptr);
        rows.push_back(r);
    }

    Dataset data;
    data.p_r.resize(static_cast<int>(rows.size()), nz);
    data.targets.resize(static_cast<int>(rows.size()), ne);
    for (size_t m = 0; m < rows.size(); ++m) {
        data.p_r.row(static_cast<int>(m)) = rows[m].segment(0, nz);
        data.targets.row(static_cast<int>(m)) = rows[m].segment(nz, ne);
    }
    data.train_count = j.at("train_count").get<int>();
    data.test_count = j.at("test_count").get<int>();
    data.discarded = j.value("discarded", 0);
    if (data.train_count + data.test_count != data.count())
        throw InputError("dataset sidecar split does not match row count");

    if (meta_out) {
        meta_out->version = j.value("version", "");
        meta_out->casehash = j.value("case_hash", "");
        meta_out->zonehash = j.value("zone_hash", "");
        meta_out->seed = j.value("seed", std::uint64_t{0});
        meta_out->sigma = j.value("sigma", 0.0);
        meta_out->base_mva = j.value("base_mva", 100.0);
        meta_out->zone_count = zone_count;
        meta_out->ref_zone = j.at("ref_zone").get<int>();
        meta_out->ties = ties;
        auto ib = j.at("init_b").get<std::vector<double>>();
        meta_out->init_b = Eigen::Map<Eigen::VectorXd>(ib.data(), static_cast<int>(ib.size()));
        meta_out->discarded = data.discarded;
    }
    return data;
}

ReducedNetwork reduced_from_meta(const DatasetFileMeta& meta) {
    ReducedNetwork rn;
    rn.zone_count = meta.zone_count;
    rn.ref_zone = meta.ref_zone;
    for (const auto& [a, b] : meta.ties) rn.tie_lines.push_back({a, b, {}});
    rn.incidence = Eigen::MatrixXd::Zero(static_cast<int>(meta.ties.size()), meta.zone_count - 1);
    for (int e = 0; e < rn.tie_count(); ++e) {
        int ca = rn.zone_column(rn.tie_lines[e].zone_a);
        int cb = rn.zone_column(rn.tie_lines[e].zone_b);
        if (ca >= 0) rn.incidence(e, ca) = 1.0;
        if (cb >= 0) rn.incidence(e, cb) = -1.0;
    }
    return rn;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json j;
    j["version"] = kToolVersion;
    j["b"] = std::vector<double>(ckpt.params.b.begin(), ckpt.params.b.end());
    j["gamma"] = std::vector<double>(ckpt.params.gamma.begin(), ckpt.params.gamma.end());
    j["rho"] = std::vector<double>(ckpt.params.rho.begin(), ckpt.params.rho.end());
    j["tie_order"] = ckpt.tie_order;
    j["ref_zone"] = ckpt.ref_zone;
    j["zone_count"] = ckpt.zone_count;
    j["zone_hash"] = ckpt.zonehash;
    j["case_hash"] = ckpt.casehash;
    j["method"] = ckpt.method;
    write_text_file(path, j.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    Checkpoint c;
    auto b = j.at("b").get<std::vector<double>>();
    auto g = j.at("gamma").get<std::vector<double>>();
    auto r = j.at("rho").get<std::vector<double>>();
    c.params.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<int>(b.size()));
    c.params.gamma = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<int>(g.size()));
    c.params.rho = Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<int>(r.size()));
    c.tie_order = j.at("tie_order").get<std::vector<std::pair<int, int>>>();
    c.ref_zone = j.at("ref_zone").get<int>();
    c.zone_count = j.value("zone_count", 0);
    c.zonehash = j.value("zone_hash", "");
    c.casehash = j.value("case_hash", "");
    c.method = j.value("method", "");
    return c;
}

} // namespace gridreduce
