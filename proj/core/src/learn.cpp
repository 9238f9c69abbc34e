#include "gridreduce/learn.hpp"

#include <algorithm>
#include <functional>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "gridreduce/acpf.hpp"

namespace gridreduce {

Method method_from_string(const std::string& s) {
    if (s == "gd") return Method::GD;
    if (s == "bfgs") return Method::BFGS;
    if (s == "lbfgs") return Method::LBFGS;
    if (s == "tnc") return Method::TNC;
    throw InputError("unknown method '" + s + "' (expected gd|bfgs|lbfgs|tnc)");
}

std::string method_to_string(Method m) {
    switch (m) {
        case Method::GD: return "gd";
        case Method::BFGS: return "bfgs";
        case Method::LBFGS: return "lbfgs";
        case Method::TNC: return "tnc";
    }
    return "?";
}

namespace {

// Runs fn(begin, end) over fixed-size index chunks. Chunk boundaries do not
// depend on the thread count, so any per-chunk results can be combined in
// chunk order to keep results bit-identical across machines.
constexpr int kChunk = 256;

void parallel_chunks(int count, const std::function<void(int, int, int)>& fn) {
    const int nchunks = (count + kChunk - 1) / kChunk;
    if (nchunks <= 1) {
        if (count > 0) fn(0, 0, count);
        return;
    }
    unsigned hw = std::thread::hardware_concurrency();
    int nthreads = std::max(1, static_cast<int>(std::min<unsigned>(hw ? hw : 1, nchunks)));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            int c = next.fetch_add(1);
            if (c >= nchunks) return;
            fn(c, c * kChunk, std::min(count, (c + 1) * kChunk));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

} // namespace

ScenarioSet generate_scenarios(const Network& net, int count, double sigma, std::uint64_t seed,
                               std::pair<int, int> split) {
    if (count < 1) throw InputError("scenario count must be >= 1");
    if (sigma < 0) throw InputError("sigma must be >= 0");
    auto [train, test] = split;
    if (train == 0 && test == 0) train = count;
    if (train + test != count)
        throw InputError("split (" + std::to_string(train) + "," + std::to_string(test) +
                         ") does not sum to count " + std::to_string(count));

    const int n = net.bus_count();
    Eigen::VectorXd p_nom = net.nominal_p();

    ScenarioSet scen;
    scen.injections.resize(count, n);
    scen.seed = seed;
    scen.sigma = sigma;
    scen.train_count = train;
    scen.test_count = test;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma > 0 ? sigma : 1.0);
    for (int m = 0; m < count; ++m)
        for (int i = 0; i < n; ++i) {
            double eps = sigma > 0 ? dist(rng) : 0.0;
            scen.injections(m, i) = p_nom[i] * (1.0 + eps);
        }
    return scen;
}

Dataset build_dataset(const Network& net, const ZonePartition& zp, const ScenarioSet& scenarios) {
    auto [rn, fagg, iagg] = build_reduction(net, zp);
    const int s = scenarios.count();
    const int n = net.bus_count();
    Eigen::VectorXd p_nom = net.nominal_p();
    Eigen::VectorXd q_nom = net.nominal_q();

    Eigen::MatrixXd p_r(s, rn.zone_count - 1);
    Eigen::MatrixXd targets(s, rn.tie_count());
    std::vector<char> ok(s, 0);

    parallel_chunks(s, [&](int, int begin, int end) {
        for (int m = begin; m < end; ++m) {
            Eigen::VectorXd p = scenarios.injections.row(m).transpose();
            // reactive specs follow the same per-bus factor (constant power factor)
            Eigen::VectorXd q(n);
            for (int i = 0; i < n; ++i)
                q[i] = p_nom[i] != 0.0 ? q_nom[i] * (p[i] / p_nom[i]) : q_nom[i];
            ACSolution sol = try_solve_ac(net, p, q);
            if (!sol.converged) continue;
            targets.row(m) = aggregate_flows(sol.p_flow_from, fagg).transpose();
            p_r.row(m) = aggregate_injections(p, iagg, zp).transpose();
            ok[m] = 1;
        }
    });

    Dataset data;
    data.p_r.resize(s, p_r.cols());
    data.targets.resize(s, targets.cols());
    int kept = 0;
    for (int m = 0; m < s; ++m) {
        if (!ok[m]) {
            ++data.discarded;
            continue;
        }
        data.p_r.row(kept) = p_r.row(m);
        data.targets.row(kept) = targets.row(m);
        if (m < scenarios.train_count)
            ++data.train_count;
        else
            ++data.test_count;
        ++kept;
    }
    data.p_r.conservativeResize(kept, Eigen::NoChange);
    data.targets.conservativeResize(kept, Eigen::NoChange);

    if (data.discarded * 100 > s)
        throw TooManyFailures(std::to_string(data.discarded) + " of " + std::to_string(s) +
                              " scenarios failed to converge (>1%); lower sigma");
    return data;
}

namespace detail {

// Shared per-parameter-vector state for loss/grad evaluation: one
// factorization of B'_R reused across every scenario (read-only).
struct ReducedModelEval {
    const ReducedNetwork& rn;
    const EquivalentParams& params;
    BprimeFactor factor;

    ReducedModelEval(const ReducedNetwork& r, const EquivalentParams& p)
        : rn(r), params(p), factor(r, p.b) {}

    // residual r_m = p_dc - target for one scenario row
    Eigen::VectorXd residual(const Eigen::VectorXd& p_r, const Eigen::VectorXd& target,
                             Eigen::VectorXd* w_out = nullptr) const {
        Eigen::VectorXd theta = factor.solve((p_r - params.gamma).eval());
        Eigen::VectorXd w = rn.incidence * theta;
        if (w_out) *w_out = w;
        return params.b.cwiseProduct(w) + params.rho - target;
    }
};

} // namespace detail

double loss(const ReducedNetwork& rn, const EquivalentParams& params, const DataSlice& slice) {
    if (slice.count() <= 0) throw InputError("loss: empty dataset slice");
    detail::ReducedModelEval eval(rn, params);
    const int count = slice.count();
    const int nchunks = (count + kChunk - 1) / kChunk;
    std::vector<double> partial(nchunks, 0.0);
    parallel_chunks(count, [&](int chunk, int begin, int end) {
        double acc = 0.0;
        for (int m = begin; m < end; ++m) {
            int row = slice.begin + m;
            Eigen::VectorXd r = eval.residual(slice.data->p_r.row(row).transpose(),
                                              slice.data->targets.row(row).transpose());
            acc += r.squaredNorm();
        }
        partial[chunk] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total / rn.tie_count();
}

Gradients grad(const ReducedNetwork& rn, const EquivalentParams& params, const DataSlice& slice) {
    if (slice.count() <= 0) throw InputError("grad: empty dataset slice");
    detail::ReducedModelEval eval(rn, params);
    const int ne = rn.tie_count();
    const int nz = rn.zone_count - 1;
    const int count = slice.count();
    const int nchunks = (count + kChunk - 1) / kChunk;

    // d p / d b   = (I - diag(b) A K A^T) diag(w)   with K = B'^{-1}, w = A theta;
    // accumulated as  w .* (r - A K A^T (b .* r))  per scenario residual r.
    // d p / d gamma = -diag(b) A K  => contribution  -K A^T (b .* r).
    // d p / d rho   =  I           => contribution   r.
    Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(ne, nchunks);
    Eigen::MatrixXd gg = Eigen::MatrixXd::Zero(nz, nchunks);
    Eigen::MatrixXd gr = Eigen::MatrixXd::Zero(ne, nchunks);

    parallel_chunks(count, [&](int chunk, int begin, int end) {
        Eigen::VectorXd ab(ne), az(nz), ar(ne);
        ab.setZero();
        az.setZero();
        ar.setZero();
        for (int m = begin; m < end; ++m) {
            int row = slice.begin + m;
            Eigen::VectorXd w;
            Eigen::VectorXd r = eval.residual(slice.data->p_r.row(row).transpose(),
                                              slice.data->targets.row(row).transpose(), &w);
            Eigen::VectorXd s = params.b.cwiseProduct(r);
            Eigen::VectorXd z = eval.factor.solve((rn.incidence.transpose() * s).eval());
            ab += w.cwiseProduct(r - rn.incidence * z);
            az += z;
            ar += r;
        }
        gb.col(chunk) = ab;
        gg.col(chunk) = az;
        gr.col(chunk) = ar;
    });

    const double scale = 2.0 / ne;
    Gradients out;
    out.b = Eigen::VectorXd::Zero(ne);
    out.gamma = Eigen::VectorXd::Zero(nz);
    out.rho = Eigen::VectorXd::Zero(ne);
    for (int c = 0; c < nchunks; ++c) {
        out.b += gb.col(c);
        out.gamma -= gg.col(c);
        out.rho += gr.col(c);
    }
    out.b *= scale;
    out.gamma *= scale;
    out.rho *= scale;
    return out;
}

Metrics evaluate(const ReducedNetwork& rn, const EquivalentParams& params, const DataSlice& slice,
                 double base_mva) {
    if (slice.count() <= 0) throw InputError("evaluate: empty dataset slice");
    detail::ReducedModelEval eval(rn, params);
    const int ne = rn.tie_count();
    const int count = slice.count();

    Metrics m;
    m.per_tie_mae_mw = Eigen::VectorXd::Zero(ne);
    std::vector<double> abs_errors;
    abs_errors.reserve(static_cast<size_t>(count) * ne);

    double sq_sum = 0.0;
    double inf = 0.0;
    Eigen::VectorXd tie_abs_sum = Eigen::VectorXd::Zero(ne);
    for (int i = 0; i < count; ++i) {
        int row = slice.begin + i;
        Eigen::VectorXd r = eval.residual(slice.data->p_r.row(row).transpose(),
                                          slice.data->targets.row(row).transpose());
        sq_sum += r.squaredNorm();
        Eigen::VectorXd a = r.cwiseAbs();
        inf = std::max(inf, a.maxCoeff());
        tie_abs_sum += a;
        for (int e = 0; e < ne; ++e) abs_errors.push_back(a[e]);
    }

    m.sq_two_norm_loss = sq_sum / ne;
    m.sq_two_norm_loss_per_scenario = m.sq_two_norm_loss / count;
    m.inf_norm_loss = inf;
    m.per_tie_mae_mw = tie_abs_sum / count * base_mva;
    m.mae_mw = tie_abs_sum.sum() / (static_cast<double>(count) * ne) * base_mva;

    std::sort(abs_errors.begin(), abs_errors.end());
    m.cumulative_abs_error_curve.reserve(abs_errors.size());
    const double total = static_cast<double>(abs_errors.size());
    for (size_t i = 0; i < abs_errors.size(); ++i)
        m.cumulative_abs_error_curve.emplace_back(abs_errors[i],
                                                  static_cast<double>(i + 1) / total);
    return m;
}

} // namespace gridreduce
