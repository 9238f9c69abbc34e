#include <benchmark/benchmark.h>

#include "gridreduce/acpf.hpp"
#include "gridreduce/artifact_io.hpp"
#include "gridreduce/dcpf.hpp"
#include "gridreduce/learn.hpp"

using namespace gridreduce;

namespace {

std::string data_path(const std::string& name) {
    return std::string(GRIDREDUCE_TEST_DATA) + "/" + name;
}

const Network& case6() {
    static Network net = parse_case(read_text_file(data_path("case6.m")));
    return net;
}

const Network& case118() {
    static Network net = parse_case(read_text_file(data_path("case118.m")));
    return net;
}

void bm_solve_ac_6(benchmark::State& state) {
    const Network& net = case6();
    Eigen::VectorXd p = net.nominal_p();
    for (auto _ : state) benchmark::DoNotOptimize(solve_ac(net, p));
}
BENCHMARK(bm_solve_ac_6);

void bm_solve_ac_118(benchmark::State& state) {
    const Network& net = case118();
    Eigen::VectorXd p = net.nominal_p();
    for (auto _ : state) benchmark::DoNotOptimize(solve_ac(net, p));
}
BENCHMARK(bm_solve_ac_118);

void bm_dc_flows_118(benchmark::State& state) {
    const Network& net = case118();
    ZonePartition zp = load_partition(read_text_file(data_path("zones118.json")), net);
    auto [rn, fagg, iagg] = build_reduction(net, zp);
    EquivalentParams p = init_params(net, rn);
    Eigen::VectorXd p_r = aggregate_injections(net.nominal_p(), iagg, zp);
    for (auto _ : state) benchmark::DoNotOptimize(dc_flows(rn, p, p_r));
}
BENCHMARK(bm_dc_flows_118);

void bm_grad_118(benchmark::State& state) {
    const Network& net = case118();
    ZonePartition zp = load_partition(read_text_file(data_path("zones118.json")), net);
    auto [rn, fagg, iagg] = build_reduction(net, zp);
    EquivalentParams p = init_params(net, rn);

    const int s = static_cast<int>(state.range(0));
    ScenarioSet scen = generate_scenarios(net, s, 0.15, 1);
    Dataset data = build_dataset(net, zp, scen);
    DataSlice slice = full_slice(data);
    for (auto _ : state) benchmark::DoNotOptimize(grad(rn, p, slice));
    state.SetItemsProcessed(state.iterations() * s);
}
BENCHMARK(bm_grad_118)->Arg(100)->Arg(1000);

void bm_build_dataset_6(benchmark::State& state) {
    const Network& net = case6();
    ZonePartition zp = load_partition(read_text_file(data_path("zones6.json")), net);
    const int s = static_cast<int>(state.range(0));
    ScenarioSet scen = generate_scenarios(net, s, 0.15, 1);
    for (auto _ : state) benchmark::DoNotOptimize(build_dataset(net, zp, scen));
    state.SetItemsProcessed(state.iterations() * s);
}
BENCHMARK(bm_build_dataset_6)->Arg(1000);

} // namespace

BENCHMARK_MAIN();
