#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridreduce/dcpf.hpp"
#include "gridreduce/reduce.hpp"

namespace gridreduce {

struct ScenarioSet {
    Eigen::MatrixXd injections; // S x |N|, pu, row m = P_nom .* (1 + eps_m)
    std::uint64_t seed = 0;
    double sigma = 0.15;
    int train_count = 0;
    int test_count = 0;

    int count() const { return static_cast<int>(injections.rows()); }
};

// Training data: per scenario the reduced injections (ref zone dropped) and
// the AC inter-zonal target flows. Scenarios whose AC solve failed are
// absent; `discarded` counts them.
struct Dataset {
    Eigen::MatrixXd p_r;     // S x (|N_R|-1)
    Eigen::MatrixXd targets; // S x |E_R|
    int train_count = 0;
    int test_count = 0;
    int discarded = 0;

    int count() const { return static_cast<int>(p_r.rows()); }
    int tie_count() const { return static_cast<int>(targets.cols()); }
};

// Row range [begin, end) of a Dataset; the unit loss/grad/evaluate work on.
struct DataSlice {
    const Dataset* data = nullptr;
    int begin = 0;
    int end = 0;

    int count() const { return end - begin; }
};

inline DataSlice full_slice(const Dataset& d) { return {&d, 0, d.count()}; }
inline DataSlice train_slice(const Dataset& d) { return {&d, 0, d.train_count}; }
inline DataSlice test_slice(const Dataset& d) { return {&d, d.train_count, d.count()}; }

enum class Method { GD, BFGS, LBFGS, TNC };

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);

struct HyperParams {
    int max_iter = 500;      // full-batch iterations
    int max_epochs = 50;     // mini-batch epochs
    double tol = 1e-6;       // gradient inf-norm
    int batch_size = 0;      // 0 = full batch
    std::uint64_t seed = 0;  // batch shuffling
    int lbfgs_memory = 10;
    bool enforce_b_lower_bound = false;
    double b_lower_bound = 1e-6;
};

struct TrainReport {
    EquivalentParams final_params;
    std::vector<double> loss_history;      // training loss per iteration/epoch
    std::vector<double> grad_norm_history; // inf-norm
    Method method = Method::LBFGS;
    double wall_time_s = 0.0;
    int iterations = 0;
    bool reached_tolerance = false;
};

struct Metrics {
    double sq_two_norm_loss = 0.0;              // (1/|E_R|) sum_m ||r_m||^2, summed over scenarios
    double sq_two_norm_loss_per_scenario = 0.0; // divided by scenario count
    double inf_norm_loss = 0.0;                 // pu
    Eigen::VectorXd per_tie_mae_mw;             // |E_R|
    double mae_mw = 0.0;                        // over all (scenario, tie) residuals
    // sorted |error| (pu) vs cumulative fraction, for the error-CDF plot
    std::vector<std::pair<double, double>> cumulative_abs_error_curve;
};

// P_m = P_nom .* (1 + eps), eps ~ N(0, sigma) iid per bus and scenario,
// deterministic in `seed`. split = (train, test); train + test must equal
// count.
ScenarioSet generate_scenarios(const Network& net, int count, double sigma,
                               std::uint64_t seed,
                               std::pair<int, int> split = {0, 0});

// Solves AC for every scenario (scaling reactive specs by the same per-bus
// factor as the active ones), aggregates flows and injections. Throws
// TooManyFailures if more than 1% of scenarios fail to converge.
Dataset build_dataset(const Network& net, const ZonePartition& zp,
                      const ScenarioSet& scenarios);

double loss(const ReducedNetwork& rn, const EquivalentParams& params,
            const DataSlice& slice);

struct Gradients {
    Eigen::VectorXd b;
    Eigen::VectorXd gamma;
    Eigen::VectorXd rho;
};

Gradients grad(const ReducedNetwork& rn, const EquivalentParams& params,
               const DataSlice& slice);

// Trains from init_params(bprime-baseline) unless `start` is given.
TrainReport optimize(const ReducedNetwork& rn, const Network& net,
                     const Dataset& data, Method method,
                     const HyperParams& hp = {});
TrainReport optimize_from(const ReducedNetwork& rn,
                          const EquivalentParams& start, const Dataset& data,
                          Method method, const HyperParams& hp = {});

Metrics evaluate(const ReducedNetwork& rn, const EquivalentParams& params,
                 const DataSlice& slice, double base_mva = 100.0);

} // namespace gridreduce
