// gridreduce: zonal reduction and DC-equivalent parameter training pipeline.
//
// Stages: inspect -> reduce -> gen -> dataset -> train -> eval. Every output
// file embeds the tool version and the hashes of its inputs so stages refuse
// to combine artifacts built from different cases or zone maps.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gridreduce/acpf.hpp"
#include "gridreduce/artifact_io.hpp"
#include "gridreduce/learn.hpp"

using namespace gridreduce;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

Network load_case(const std::string& path, std::string* hash_out = nullptr) {
    std::string text = read_text_file(path);
    if (hash_out) *hash_out = case_hash(text);
    return parse_case(text);
}

ZonePartition load_zones(const std::string& zones_path, const Network& net) {
    if (zones_path.empty()) {
        std::cerr << "warning: no zone file given; every bus becomes its own zone\n";
        return singleton_partition(net);
    }
    return load_partition(read_text_file(zones_path), net);
}

int cmd_inspect(const std::string& case_path, const std::string& out_path) {
    std::string hash;
    Network net = load_case(case_path, &hash);
    auto violations = validate(net);
    nlohmann::json j = network_to_json(net);
    j["version"] = kToolVersion;
    j["case_hash"] = hash;
    std::string dump = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << dump;
    else
        write_text_file(out_path, dump);
    std::fprintf(stderr, "%d buses, %d branches, ref bus %d, base %.10g MVA\n", net.bus_count(),
                 net.branch_count(), net.ref_bus, net.base_mva);
    if (!violations.empty()) {
        for (const auto& v : violations)
            std::fprintf(stderr, "violation: %s (%s)\n", v.rule.c_str(), v.detail.c_str());
        return kExitInput;
    }
    return kExitOk;
}

int cmd_reduce(const std::string& case_path, const std::string& zones_path,
               const std::string& out_path) {
    std::string hash;
    Network net = load_case(case_path, &hash);
    ZonePartition zp = load_zones(zones_path, net);
    auto [rn, fagg, iagg] = build_reduction(net, zp);
    EquivalentParams init = init_params(net, rn);

    write_text_file(out_path, reduction_bundle_json(net, zp, rn, init, hash).dump(2) + "\n");

    std::printf("zones: %d (ref zone %d)\n", rn.zone_count, rn.ref_zone);
    std::printf("tie lines: %d\n", rn.tie_count());
    std::printf("%-14s %-10s %s\n", "tie", "init b", "crossing branches");
    for (int e = 0; e < rn.tie_count(); ++e) {
        const TieLine& t = rn.tie_lines[e];
        std::string name = std::to_string(t.zone_a) + "-" + std::to_string(t.zone_b);
        std::printf("%-14s %-10.4g %zu\n", name.c_str(), init.b[e], t.crossings.size());
    }
    return kExitOk;
}

int cmd_gen(const std::string& case_path, int count, double sigma, std::uint64_t seed,
            std::pair<int, int> split, const std::string& out_path) {
    std::string hash;
    Network net = load_case(case_path, &hash);
    ScenarioSet scen = generate_scenarios(net, count, sigma, seed, split);
    write_scenarios_csv(out_path, net, scen, hash);
    std::printf("%d scenarios (%d train / %d test), sigma %.4g, seed %llu -> %s\n", scen.count(),
                scen.train_count, scen.test_count, sigma,
                static_cast<unsigned long long>(seed), out_path.c_str());
    return kExitOk;
}

int cmd_dataset(const std::string& case_path, const std::string& zones_path,
                const std::string& scen_path, const std::string& out_path) {
    std::string hash;
    Network net = load_case(case_path, &hash);
    ZonePartition zp = load_zones(zones_path, net);

    ScenarioFileMeta smeta;
    ScenarioSet scen = read_scenarios_csv(scen_path, &smeta);
    if (!smeta.casehash.empty() && smeta.casehash != hash)
        throw HashMismatch("scenario file was generated from a different case (" +
                           smeta.casehash + " != " + hash + ")");

    Dataset data = build_dataset(net, zp, scen);
    auto [rn, fagg, iagg] = build_reduction(net, zp);
    EquivalentParams init = init_params(net, rn);

    DatasetFileMeta meta;
    meta.version = kToolVersion;
    meta.casehash = hash;
    meta.zonehash = zone_hash(zp);
    meta.seed = scen.seed;
    meta.sigma = scen.sigma;
    meta.base_mva = net.base_mva;
    meta.zone_count = rn.zone_count;
    meta.ref_zone = rn.ref_zone;
    for (const TieLine& t : rn.tie_lines) meta.ties.emplace_back(t.zone_a, t.zone_b);
    meta.init_b = init.b;
    write_dataset_csv(out_path, data, meta);

    std::printf("%d rows (%d train / %d test), %d discarded -> %s\n", data.count(),
                data.train_count, data.test_count, data.discarded, out_path.c_str());
    return kExitOk;
}

int cmd_train(const std::string& data_path, const std::string& method_str, int max_iter,
              int max_epochs, double tol, int batch_size, std::uint64_t seed, bool bound_b,
              const std::string& out_path) {
    DatasetFileMeta meta;
    Dataset data = read_dataset_csv(data_path, &meta);
    ReducedNetwork rn = reduced_from_meta(meta);

    EquivalentParams start;
    start.b = meta.init_b;
    start.gamma = Eigen::VectorXd::Zero(rn.zone_count - 1);
    start.rho = Eigen::VectorXd::Zero(rn.tie_count());

    HyperParams hp;
    hp.max_iter = max_iter;
    hp.max_epochs = max_epochs;
    hp.tol = tol;
    hp.batch_size = batch_size;
    hp.seed = seed;
    hp.enforce_b_lower_bound = bound_b;

    Method method = method_from_string(method_str);
    TrainReport report = optimize_from(rn, start, data, method, hp);

    Checkpoint ckpt;
    ckpt.params = report.final_params;
    for (const TieLine& t : rn.tie_lines) ckpt.tie_order.emplace_back(t.zone_a, t.zone_b);
    ckpt.ref_zone = rn.ref_zone;
    ckpt.zone_count = rn.zone_count;
    ckpt.zonehash = meta.zonehash;
    ckpt.casehash = meta.casehash;
    ckpt.method = method_to_string(method);
    write_checkpoint(out_path, ckpt);

    std::printf("method %s: %d %s, loss %.6g -> %.6g, grad inf-norm %.3g, %.2f s\n",
                method_str.c_str(), report.iterations,
                batch_size > 0 ? "epochs" : "iterations",
                report.loss_history.empty() ? 0.0 : report.loss_history.front(),
                report.loss_history.empty() ? 0.0 : report.loss_history.back(),
                report.grad_norm_history.empty() ? 0.0 : report.grad_norm_history.back(),
                report.wall_time_s);
    std::printf("checkpoint -> %s\n", out_path.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& data_path, const std::string& ckpt_path,
             const std::string& subset, const std::string& out_path,
             const std::string& plots_prefix) {
    DatasetFileMeta meta;
    Dataset data = read_dataset_csv(data_path, &meta);
    Checkpoint ckpt = read_checkpoint(ckpt_path);

    if (!ckpt.zonehash.empty() && !meta.zonehash.empty() && ckpt.zonehash != meta.zonehash)
        throw HashMismatch("checkpoint zone map (" + ckpt.zonehash +
                           ") does not match dataset zone map (" + meta.zonehash + ")");
    if (ckpt.tie_order != meta.ties)
        throw HashMismatch("checkpoint tie order does not match dataset");

    ReducedNetwork rn = reduced_from_meta(meta);
    DataSlice slice = subset == "train" ? train_slice(data)
                      : subset == "all" ? full_slice(data)
                                        : test_slice(data);
    if (slice.count() == 0) throw InputError("requested subset '" + subset + "' is empty");

    Metrics m = evaluate(rn, ckpt.params, slice, meta.base_mva);

    nlohmann::json j;
    j["version"] = kToolVersion;
    j["case_hash"] = meta.casehash;
    j["zone_hash"] = meta.zonehash;
    j["subset"] = subset;
    j["scenarios"] = slice.count();
    j["sq_two_norm_loss"] = m.sq_two_norm_loss;
    j["sq_two_norm_loss_per_scenario"] = m.sq_two_norm_loss_per_scenario;
    j["inf_norm_loss"] = m.inf_norm_loss;
    j["mae_mw"] = m.mae_mw;
    j["mae_mw_per_tie"] = std::vector<double>(m.per_tie_mae_mw.begin(), m.per_tie_mae_mw.end());
    write_text_file(out_path, j.dump(2) + "\n");

    if (!plots_prefix.empty()) {
        std::string mae_csv = "tie,mae_mw\n";
        for (int e = 0; e < m.per_tie_mae_mw.size(); ++e) {
            const auto& [a, b] = meta.ties[e];
            mae_csv += std::to_string(a) + "-" + std::to_string(b) + "," +
                       format_double(m.per_tie_mae_mw[e]) + "\n";
        }
        write_text_file(plots_prefix + "_mae.csv", mae_csv);

        std::string cdf_csv = "abs_error_pu,cumulative_fraction\n";
        for (const auto& [err, frac] : m.cumulative_abs_error_curve)
            cdf_csv += format_double(err) + "," + format_double(frac) + "\n";
        write_text_file(plots_prefix + "_error_cdf.csv", cdf_csv);
    }

    std::printf("subset %s (%d scenarios): loss %.6g, inf-norm %.4g pu, MAE %.4g MW\n",
                subset.c_str(), slice.count(), m.sq_two_norm_loss, m.inf_norm_loss, m.mae_mw);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zonal network reduction with trained DC power flow equivalents"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI/TOML config file");
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string case_path, zones_path, out_path, scen_path, data_path, ckpt_path;
    std::string method = "lbfgs", subset = "test", plots_prefix;
    int count = 10000, batch_size = 100, max_iter = 500, max_epochs = 50;
    double sigma = 0.15, tol = 1e-6;
    std::uint64_t seed = 0;
    std::pair<int, int> split{0, 0};
    bool full_batch = false, bound_b = false;

    auto* inspect = app.add_subcommand("inspect", "Parse and validate a case file, dump JSON");
    inspect->add_option("case", case_path, "case file")->required();
    inspect->add_option("-o,--out", out_path, "write JSON here instead of stdout");

    auto* reduce = app.add_subcommand("reduce", "Build the zonal reduction bundle");
    reduce->add_option("--case", case_path)->required();
    reduce->add_option("--zones", zones_path, "zone JSON file (omit for singleton zones)");
    reduce->add_option("-o,--out", out_path)->required();

    auto* gen = app.add_subcommand("gen", "Generate injection scenarios");
    gen->add_option("--case", case_path)->required();
    gen->add_option("--count", count)->check(CLI::PositiveNumber);
    gen->add_option("--sigma", sigma);
    gen->add_option("--seed", seed);
    gen->add_option("--split", split, "train,test counts (default: all train)")->delimiter(',');
    gen->add_option("-o,--out", out_path)->required();

    auto* dataset = app.add_subcommand("dataset", "Solve AC per scenario and build training data");
    dataset->add_option("--case", case_path)->required();
    dataset->add_option("--zones", zones_path);
    dataset->add_option("--scenarios", scen_path)->required();
    dataset->add_option("-o,--out", out_path)->required();

    auto* train = app.add_subcommand("train", "Fit equivalent parameters on a dataset");
    train->add_option("--dataset", data_path)->required();
    train->add_option("--method", method)->check(CLI::IsMember({"gd", "bfgs", "lbfgs", "tnc"}));
    train->add_option("--batch-size", batch_size, "mini-batch size (default 100)");
    train->add_flag("--full-batch", full_batch, "disable mini-batching");
    train->add_option("--max-iter", max_iter);
    train->add_option("--max-epochs", max_epochs);
    train->add_option("--tol", tol, "gradient inf-norm stopping tolerance");
    train->add_option("--seed", seed, "batch shuffling seed");
    train->add_flag("--bound-b", bound_b, "clamp coefficient b at a small positive lower bound");
    train->add_option("-o,--out", out_path)->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset subset");
    eval->add_option("--dataset", data_path)->required();
    eval->add_option("--checkpoint", ckpt_path)->required();
    eval->add_option("--subset", subset)->check(CLI::IsMember({"train", "test", "all"}));
    eval->add_option("-o,--out", out_path)->required();
    eval->add_option("--plots", plots_prefix, "prefix for the per-tie MAE and error-CDF CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        if (inspect->parsed()) return cmd_inspect(case_path, out_path);
        if (reduce->parsed()) return cmd_reduce(case_path, zones_path, out_path);
        if (gen->parsed()) return cmd_gen(case_path, count, sigma, seed, split, out_path);
        if (dataset->parsed()) return cmd_dataset(case_path, zones_path, scen_path, out_path);
        if (train->parsed())
            return cmd_train(data_path, method, max_iter, max_epochs, tol,
                             full_batch ? 0 : batch_size, seed, bound_b, out_path);
        if (eval->parsed()) return cmd_eval(data_path, ckpt_path, subset, out_path, plots_prefix);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
