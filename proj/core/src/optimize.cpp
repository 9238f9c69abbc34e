#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

#include "gridreduce/learn.hpp"

namespace gridreduce {

namespace {

// Parameter packing for the optimizers: x = [b; gamma; rho].
struct Packing {
    int ne, nz;

    Eigen::VectorXd pack(const EquivalentParams& p) const {
        Eigen::VectorXd x(2 * ne + nz);
        x.segment(0, ne) = p.b;
        x.segment(ne, nz) = p.gamma;
        x.segment(ne + nz, ne) = p.rho;
        return x;
    }
    EquivalentParams unpack(const Eigen::VectorXd& x) const {
        EquivalentParams p;
        p.b = x.segment(0, ne);
        p.gamma = x.segment(ne, nz);
        p.rho = x.segment(ne + nz, ne);
        return p;
    }
    Eigen::VectorXd pack(const Gradients& g) const {
        Eigen::VectorXd x(2 * ne + nz);
        x.segment(0, ne) = g.b;
        x.segment(ne, nz) = g.gamma;
        x.segment(ne + nz, ne) = g.rho;
        return x;
    }
};

// Objective over a row subset of a Dataset (sum of squared residuals / |E_R|).
struct Objective {
    const ReducedNetwork& rn;
    const Dataset& data;
    Packing pk;

    // rows: contiguous [begin,end) for full batches, or a gathered copy for
    // mini-batches; gathering costs little next to the linear solves.
    double eval(const Eigen::VectorXd& x, const std::vector<int>& rows,
                Eigen::VectorXd* grad_out) const {
        EquivalentParams p = pk.unpack(x);
        Dataset sub;
        sub.p_r.resize(static_cast<int>(rows.size()), data.p_r.cols());
        sub.targets.resize(static_cast<int>(rows.size()), data.targets.cols());
        for (size_t i = 0; i < rows.size(); ++i) {
            sub.p_r.row(static_cast<int>(i)) = data.p_r.row(rows[i]);
            sub.targets.row(static_cast<int>(i)) = data.targets.row(rows[i]);
        }
        DataSlice slice{&sub, 0, sub.count()};
        double f = loss(rn, p, slice);
        if (grad_out) *grad_out = pk.pack(grad(rn, p, slice));
        return f;
    }

    double eval_slice(const Eigen::VectorXd& x, const DataSlice& slice,
                      Eigen::VectorXd* grad_out) const {
        EquivalentParams p = pk.unpack(x);
        double f = loss(rn, p, slice);
        if (grad_out) *grad_out = pk.pack(grad(rn, p, slice));
        return f;
    }
};

constexpr double kArmijoC1 = 1e-4;
constexpr int kMaxSingularHalvings = 20;
constexpr int kMaxHalvings = 50;

// Backtracking line search. Singular reduced systems reject the step and
// halve, up to kMaxSingularHalvings, then the whole run aborts.
template <typename F>
bool armijo(F&& f_only, const Eigen::VectorXd& x, double fx, const Eigen::VectorXd& g,
            const Eigen::VectorXd& d, double alpha0, Eigen::VectorXd* x_out, double* f_out,
            double* alpha_out) {
    double slope = g.dot(d);
    if (!(slope < 0)) return false; // not a descent direction
    double alpha = alpha0;
    int singular = 0;
    for (int k = 0; k < kMaxHalvings; ++k) {
        Eigen::VectorXd xt = x + alpha * d;
        double ft;
        try {
            ft = f_only(xt);
        } catch (const SingularSystem&) {
            if (++singular > kMaxSingularHalvings)
                throw SingularSystem("line search hit singular B' " +
                                     std::to_string(singular) +
                                     " times; coefficient vector degenerate");
            alpha *= 0.5;
            continue;
        }
        if (std::isfinite(ft) && ft <= fx + kArmijoC1 * alpha * slope) {
            *x_out = xt;
            *f_out = ft;
            *alpha_out = alpha;
            return true;
        }
        alpha *= 0.5;
    }
    return false;
}

// L-BFGS two-loop recursion with memory pairs (s, y), newest last.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g,
                                const std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& mem) {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(mem.size());
    std::vector<double> rho(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
        const auto& [s, y] = mem[i];
        rho[i] = 1.0 / y.dot(s);
        alpha[i] = rho[i] * s.dot(q);
        q -= alpha[i] * y;
    }
    if (!mem.empty()) {
        const auto& [s, y] = mem.back();
        q *= s.dot(y) / y.dot(y);
    }
    for (size_t i = 0; i < mem.size(); ++i) {
        const auto& [s, y] = mem[i];
        double beta = rho[i] * y.dot(q);
        q += (alpha[i] - beta) * s;
    }
    return -q;
}

// Truncated-Newton direction: CG on H d = -g with Hessian-vector products by
// forward gradient differencing. Stops on the Eisenstat-Walker forcing term
// or on negative curvature.
template <typename GradFn>
Eigen::VectorXd tnc_direction(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                              GradFn&& grad_at) {
    const int n = static_cast<int>(x.size());
    const double gnorm = g.norm();
    if (gnorm == 0.0) return -g;
    const double tol = std::min(0.5, std::sqrt(gnorm)) * gnorm;
    const double h_base = 1e-7 * (1.0 + x.norm());

    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = -g; // residual of H d = -g
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    const int max_cg = 2 * n;
    for (int it = 0; it < max_cg; ++it) {
        if (std::sqrt(rr) <= tol) break;
        double pn = p.norm();
        if (pn == 0.0) break;
        double h = h_base / pn;
        Eigen::VectorXd hp;
        try {
            hp = (grad_at((x + h * p).eval()) - g) / h;
        } catch (const SingularSystem&) {
            break; // keep whatever direction we have
        }
        double curv = p.dot(hp);
        if (curv <= 1e-12 * p.squaredNorm()) {
            if (it == 0) d = r; // steepest descent fallback
            break;
        }
        double alpha = rr / curv;
        d += alpha * p;
        r -= alpha * hp;
        double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    if (d.squaredNorm() == 0.0) d = -g;
    return d;
}

struct StepState {
    // quasi-Newton curvature memory
    Eigen::MatrixXd h_inv;                                       // BFGS
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem; // L-BFGS
    double gd_alpha = 1.0;                                       // GD warm start

    void reset(int n) {
        h_inv = Eigen::MatrixXd::Identity(n, n);
        mem.clear();
        gd_alpha = 1.0;
    }
};

} // namespace

TrainReport optimize_from(const ReducedNetwork& rn, const EquivalentParams& start,
                          const Dataset& data, Method method, const HyperParams& hp) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();

    if (data.train_count <= 0) throw InputError("optimize: dataset has no training rows");

    Packing pk{rn.tie_count(), rn.zone_count - 1};
    Objective obj{rn, data, pk};
    const int n = 2 * pk.ne + pk.nz;
    const bool minibatch = hp.batch_size > 0 && hp.batch_size < data.train_count;
    DataSlice train{&data, 0, data.train_count};

    Eigen::VectorXd x = pk.pack(start);
    auto project = [&](Eigen::VectorXd& v) {
        if (hp.enforce_b_lower_bound)
            v.segment(0, pk.ne) = v.segment(0, pk.ne).cwiseMax(hp.b_lower_bound);
    };
    project(x);

    TrainReport report;
    report.method = method;

    StepState st;
    st.reset(n);

    auto full_f = [&](const Eigen::VectorXd& v) { return obj.eval_slice(v, train, nullptr); };
    auto full_fg = [&](const Eigen::VectorXd& v, Eigen::VectorXd* g) {
        return obj.eval_slice(v, train, g);
    };

    if (!minibatch) {
        Eigen::VectorXd g(n);
        double fx = full_fg(x, &g);
        report.loss_history.push_back(fx);
        report.grad_norm_history.push_back(g.lpNorm<Eigen::Infinity>());

        for (int it = 0; it < hp.max_iter; ++it) {
            if (g.lpNorm<Eigen::Infinity>() <= hp.tol) {
                report.reached_tolerance = true;
                break;
            }
            Eigen::VectorXd d;
            double alpha0 = 1.0;
            switch (method) {
                case Method::GD:
                    d = -g;
                    alpha0 = st.gd_alpha;
                    break;
                case Method::BFGS:
                    d = -(st.h_inv * g);
                    break;
                case Method::LBFGS:
                    d = lbfgs_direction(g, st.mem);
                    break;
                case Method::TNC:
                    d = tnc_direction(x, g, [&](const Eigen::VectorXd& v) {
                        Eigen::VectorXd gt(n);
                        obj.eval_slice(v, train, &gt);
                        return gt;
                    });
                    break;
            }

            Eigen::VectorXd x_new;
            double f_new, alpha;
            if (!armijo(full_f, x, fx, g, d, alpha0, &x_new, &f_new, &alpha)) {
                // no acceptable step along d; try plain descent once before stopping
                if (method != Method::GD &&
                    armijo(full_f, x, fx, g, (-g).eval(), 1.0, &x_new, &f_new, &alpha)) {
                    st.reset(n);
                } else {
                    break;
                }
            }
            project(x_new);

            Eigen::VectorXd g_new(n);
            full_fg(x_new, &g_new); // recompute at the accepted point

            Eigen::VectorXd s = x_new - x;
            Eigen::VectorXd y = g_new - g;
            double sy = s.dot(y);
            if (method == Method::BFGS && sy > 1e-12 * s.norm() * y.norm()) {
                Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
                double rho_k = 1.0 / sy;
                st.h_inv = (i - rho_k * s * y.transpose()) * st.h_inv *
                               (i - rho_k * y * s.transpose()) +
                           rho_k * s * s.transpose();
            }
            if (method == Method::LBFGS && sy > 1e-12 * s.norm() * y.norm()) {
                st.mem.emplace_back(s, y);
                if (static_cast<int>(st.mem.size()) > hp.lbfgs_memory) st.mem.pop_front();
            }
            if (method == Method::GD) st.gd_alpha = std::min(alpha * 2.0, 1e6);

            x = x_new;
            fx = f_new;
            g = g_new;
            report.loss_history.push_back(fx);
            report.grad_norm_history.push_back(g.lpNorm<Eigen::Infinity>());
            report.iterations = it + 1;
        }
        if (!report.reached_tolerance &&
            report.grad_norm_history.back() <= hp.tol)
            report.reached_tolerance = true;
    } else {
        // Mini-batch epochs: shuffled batches, per-batch quasi-Newton steps,
        // curvature memory reset at each epoch boundary.
        std::vector<int> order(data.train_count);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(hp.seed);

        for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            st.reset(n);

            for (int lo = 0; lo < data.train_count; lo += hp.batch_size) {
                int hi = std::min(lo + hp.batch_size, data.train_count);
                std::vector<int> rows(order.begin() + lo, order.begin() + hi);

                Eigen::VectorXd g(n);
                double fx = obj.eval(x, rows, &g);
                if (g.lpNorm<Eigen::Infinity>() <= hp.tol) continue;

                Eigen::VectorXd d;
                double alpha0 = 1.0;
                switch (method) {
                    case Method::GD:
                        d = -g;
                        alpha0 = st.gd_alpha;
                        break;
                    case Method::BFGS:
                        d = -(st.h_inv * g);
                        break;
                    case Method::LBFGS:
                        d = lbfgs_direction(g, st.mem);
                        break;
                    case Method::TNC:
                        d = tnc_direction(x, g, [&](const Eigen::VectorXd& v) {
                            Eigen::VectorXd gt(n);
                            obj.eval(v, rows, &gt);
                            return gt;
                        });
                        break;
                }

                auto batch_f = [&](const Eigen::VectorXd& v) { return obj.eval(v, rows, nullptr); };
                Eigen::VectorXd x_new;
                double f_new, alpha;
                if (!armijo(batch_f, x, fx, g, d, alpha0, &x_new, &f_new, &alpha)) continue;
                project(x_new);

                if (method == Method::BFGS || method == Method::LBFGS) {
                    Eigen::VectorXd g_new(n);
                    obj.eval(x_new, rows, &g_new);
                    Eigen::VectorXd s = x_new - x;
                    Eigen::VectorXd y = g_new - g;
                    double sy = s.dot(y);
                    if (method == Method::BFGS && sy > 1e-12 * s.norm() * y.norm()) {
                        Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
                        double rho_k = 1.0 / sy;
                        st.h_inv = (i - rho_k * s * y.transpose()) * st.h_inv *
                                       (i - rho_k * y * s.transpose()) +
                                   rho_k * s * s.transpose();
                    }
                    if (method == Method::LBFGS && sy > 1e-12 * s.norm() * y.norm()) {
                        st.mem.emplace_back(s, y);
                        if (static_cast<int>(st.mem.size()) > hp.lbfgs_memory) st.mem.pop_front();
                    }
                }
                if (method == Method::GD) st.gd_alpha = std::min(alpha * 2.0, 1e6);
                x = x_new;
            }

            Eigen::VectorXd g_full(n);
            double f_full = full_fg(x, &g_full);
            report.loss_history.push_back(f_full);
            report.grad_norm_history.push_back(g_full.lpNorm<Eigen::Infinity>());
            report.iterations = epoch + 1;
            if (g_full.lpNorm<Eigen::Infinity>() <= hp.tol) {
                report.reached_tolerance = true;
                break;
            }
        }
    }

    report.final_params = pk.unpack(x);
    report.wall_time_s = std::chrono::duration<double>(clock::now() - t0).count();
    return report;
}

TrainReport optimize(const ReducedNetwork& rn, const Network& net, const Dataset& data,
                     Method method, const HyperParams& hp) {
    return optimize_from(rn, init_params(net, rn), data, method, hp);
}

} // namespace gridreduce
