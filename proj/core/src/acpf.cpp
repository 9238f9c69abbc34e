#include "gridreduce/acpf.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SparseLU>

namespace gridreduce {

using cd = std::complex<double>;

AdmittanceModel::AdmittanceModel(const Network& net) : n_(net.bus_count()) {
    std::vector<Eigen::Triplet<cd>> trip;
    trip.reserve(net.branch_count() * 4 + n_);
    yff_.resize(net.branch_count());
    yft_.resize(net.branch_count());

    for (int k = 0; k < net.branch_count(); ++k) {
        const Branch& br = net.branches[k];
        int f = net.bus_index(br.from_bus);
        int t = net.bus_index(br.to_bus);
        cd ys(br.series_g, br.series_b);
        cd ysh(br.shunt_g / 2.0, br.shunt_b / 2.0);
        cd tap = std::polar(br.tap_ratio, br.phase_shift);
        cd yff = (ys + ysh) / (tap * std::conj(tap));
        cd yft = -ys / std::conj(tap);
        cd ytf = -ys / tap;
        cd ytt = ys + ysh;
        yff_[k] = yff;
        yft_[k] = yft;
        trip.emplace_back(f, f, yff);
        trip.emplace_back(f, t, yft);
        trip.emplace_back(t, f, ytf);
        trip.emplace_back(t, t, ytt);
    }
    for (int i = 0; i < n_; ++i) {
        const Bus& b = net.buses[i];
        if (b.shunt_g != 0.0 || b.shunt_b != 0.0)
            trip.emplace_back(i, i, cd(b.shunt_g, b.shunt_b));
    }
    ybus_.resize(n_, n_);
    ybus_.setFromTriplets(trip.begin(), trip.end());
}

namespace {

// Complex power injections S_i = V_i conj((Y V)_i) at a polar state.
Eigen::VectorXcd bus_power(const AdmittanceModel& adm, const Eigen::VectorXd& v_mag,
                           const Eigen::VectorXd& v_ang) {
    Eigen::VectorXcd v(v_mag.size());
    for (int i = 0; i < v_mag.size(); ++i) v[i] = std::polar(v_mag[i], v_ang[i]);
    Eigen::VectorXcd iy = adm.ybus() * v;
    return v.cwiseProduct(iy.conjugate());
}

struct Unknowns {
    std::vector<int> ang_idx; // buses with free angle (non-slack)
    std::vector<int> mag_idx; // buses with free magnitude (PQ)
};

Unknowns classify(const Network& net) {
    Unknowns u;
    for (int i = 0; i < net.bus_count(); ++i) {
        if (net.buses[i].kind != BusKind::Slack) u.ang_idx.push_back(i);
        if (net.buses[i].kind == BusKind::PQ) u.mag_idx.push_back(i);
    }
    return u;
}

Eigen::VectorXd mismatch_at(const Network& net, const AdmittanceModel& adm,
                            const Eigen::VectorXd& v_mag, const Eigen::VectorXd& v_ang,
                            const Eigen::VectorXd& p_spec, const Eigen::VectorXd& q_spec,
                            const Unknowns& u) {
    Eigen::VectorXcd s = bus_power(adm, v_mag, v_ang);
    Eigen::VectorXd mis(u.ang_idx.size() + u.mag_idx.size());
    int r = 0;
    for (int i : u.ang_idx) mis[r++] = p_spec[i] - s[i].real();
    for (int i : u.mag_idx) mis[r++] = q_spec[i] - s[i].imag();
    return mis;
}

// Polar Newton Jacobian of the computed powers w.r.t. [theta_free; V_pq].
// Standard blocks (G + jB = Ybus):
//   dP_i/dth_j = V_i V_j (G_ij sin th_ij - B_ij cos th_ij)       (j != i)
//   dP_i/dth_i = -Q_i - B_ii V_i^2
//   dP_i/dV_j  = V_i (G_ij cos th_ij + B_ij sin th_ij)           (j != i)
//   dP_i/dV_i  = P_i/V_i + G_ii V_i
//   dQ_i/dth_j = -V_i V_j (G_ij cos th_ij + B_ij sin th_ij)      (j != i)
//   dQ_i/dth_i = P_i - G_ii V_i^2
//   dQ_i/dV_j  = V_i (G_ij sin th_ij - B_ij cos th_ij)           (j != i)
//   dQ_i/dV_i  = Q_i/V_i - B_ii V_i
Eigen::SparseMatrix<double> jacobian(const AdmittanceModel& adm, const Eigen::VectorXd& v_mag,
                                     const Eigen::VectorXd& v_ang, const Eigen::VectorXcd& s,
                                     const Unknowns& u) {
    const int n = adm.size();
    const int na = static_cast<int>(u.ang_idx.size());
    const int nm = static_cast<int>(u.mag_idx.size());
    std::vector<int> ang_pos(n, -1), mag_pos(n, -1);
    for (int k = 0; k < na; ++k) ang_pos[u.ang_idx[k]] = k;
    for (int k = 0; k < nm; ++k) mag_pos[u.mag_idx[k]] = k;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(adm.ybus().nonZeros() * 4);
    const auto& y = adm.ybus();
    for (int j = 0; j < y.outerSize(); ++j) {
        for (Eigen::SparseMatrix<cd>::InnerIterator it(y, j); it; ++it) {
            int i = static_cast<int>(it.row());
            double g = it.value().real();
            double bsus = it.value().imag();
            double th = v_ang[i] - v_ang[j];
            double ct = std::cos(th), st = std::sin(th);
            double vi = v_mag[i], vj = v_mag[j];

            double dp_dth, dq_dth, dp_dv, dq_dv;
            if (i == j) {
                dp_dth = -s[i].imag() - bsus * vi * vi;
                dq_dth = s[i].real() - g * vi * vi;
                dp_dv = s[i].real() / vi + g * vi;
                dq_dv = s[i].imag() / vi - bsus * vi;
            } else {
                dp_dth = vi * vj * (g * st - bsus * ct);
                dq_dth = -vi * vj * (g * ct + bsus * st);
                dp_dv = vi * (g * ct + bsus * st);
                dq_dv = vi * (g * st - bsus * ct);
            }

            int pi = ang_pos[i], pj = ang_pos[j];
            int qi = mag_pos[i], vjc = mag_pos[j];
            if (pi >= 0 && pj >= 0) trip.emplace_back(pi, pj, dp_dth);
            if (pi >= 0 && vjc >= 0) trip.emplace_back(pi, na + vjc, dp_dv);
            if (qi >= 0 && pj >= 0) trip.emplace_back(na + qi, pj, dq_dth);
            if (qi >= 0 && vjc >= 0) trip.emplace_back(na + qi, na + vjc, dq_dv);
        }
    }
    Eigen::SparseMatrix<double> jac(na + nm, na + nm);
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> branch_flows_at(const Network& net,
                                                            const AdmittanceModel& adm,
                                                            const Eigen::VectorXd& v_mag,
                                                            const Eigen::VectorXd& v_ang) {
    const int m = net.branch_count();
    Eigen::VectorXd p(m), q(m);
    for (int k = 0; k < m; ++k) {
        const Branch& br = net.branches[k];
        cd vf = std::polar(v_mag[net.bus_index(br.from_bus)], v_ang[net.bus_index(br.from_bus)]);
        cd vt = std::polar(v_mag[net.bus_index(br.to_bus)], v_ang[net.bus_index(br.to_bus)]);
        cd sf = vf * std::conj(adm.yff(k) * vf + adm.yft(k) * vt);
        p[k] = sf.real();
        q[k] = sf.imag();
    }
    return {p, q};
}

constexpr int kDenseLimit = 500;

Eigen::VectorXd solve_step(const Eigen::SparseMatrix<double>& jac, const Eigen::VectorXd& rhs,
                           int bus_count) {
    if (bus_count < kDenseLimit) {
        Eigen::MatrixXd dense(jac);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
        double scale = dense.cwiseAbs().maxCoeff();
        double pivot_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (!(pivot_min > 1e-12 * std::max(scale, 1.0)))
            throw SingularJacobian("power flow Jacobian is singular");
        return lu.solve(rhs);
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(jac);
    lu.factorize(jac);
    if (lu.info() != Eigen::Success)
        throw SingularJacobian("power flow Jacobian is singular (sparse)");
    return lu.solve(rhs);
}

} // namespace

Eigen::VectorXd ac_mismatch(const Network& net, const Eigen::VectorXd& v_mag,
                            const Eigen::VectorXd& v_ang, const Eigen::VectorXd& p_spec,
                            const Eigen::VectorXd& q_spec) {
    if (v_mag.size() != net.bus_count() || v_ang.size() != net.bus_count() ||
        p_spec.size() != net.bus_count() || q_spec.size() != net.bus_count())
        throw DimensionMismatch("ac_mismatch: vectors must be sized to bus count");
    AdmittanceModel adm(net);
    return mismatch_at(net, adm, v_mag, v_ang, p_spec, q_spec, classify(net));
}

Eigen::VectorXd ac_mismatch(const Network& net, const Eigen::VectorXd& v_mag,
                            const Eigen::VectorXd& v_ang) {
    return ac_mismatch(net, v_mag, v_ang, net.nominal_p(), net.nominal_q());
}

Eigen::MatrixXd ac_jacobian(const Network& net, const Eigen::VectorXd& v_mag,
                            const Eigen::VectorXd& v_ang) {
    if (v_mag.size() != net.bus_count() || v_ang.size() != net.bus_count())
        throw DimensionMismatch("ac_jacobian: vectors must be sized to bus count");
    AdmittanceModel adm(net);
    Unknowns u = classify(net);
    Eigen::VectorXcd s = bus_power(adm, v_mag, v_ang);
    return Eigen::MatrixXd(jacobian(adm, v_mag, v_ang, s, u));
}

ACSolution try_solve_ac(const Network& net, const Eigen::VectorXd& injections,
                        const Eigen::VectorXd& q_injections, const AcOptions& opts) {
    const int n = net.bus_count();
    if (injections.size() != n || q_injections.size() != n)
        throw DimensionMismatch("solve_ac: injection vector size");

    AdmittanceModel adm(net);
    Unknowns u = classify(net);

    // flat start: setpoint magnitudes, zero angles
    Eigen::VectorXd v_mag(n), v_ang = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        v_mag[i] = net.buses[i].kind == BusKind::PQ ? 1.0 : net.buses[i].v_mag_setpoint;

    Eigen::VectorXd p_spec = injections, q_spec = q_injections;
    int ref = net.ref_index();
    p_spec[ref] = 0.0; // slack balances; spec value unused

    ACSolution sol;
    const int na = static_cast<int>(u.ang_idx.size());
    for (int it = 0; it <= opts.max_iter; ++it) {
        Eigen::VectorXd mis = mismatch_at(net, adm, v_mag, v_ang, p_spec, q_spec, u);
        sol.max_mismatch = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
        sol.iterations = it;
        if (sol.max_mismatch <= opts.tol) {
            sol.converged = true;
            break;
        }
        if (it == opts.max_iter) break;

        Eigen::VectorXcd s = bus_power(adm, v_mag, v_ang);
        Eigen::SparseMatrix<double> jac = jacobian(adm, v_mag, v_ang, s, u);
        // mismatch = spec - computed, so J dx = mis gives the Newton update
        Eigen::VectorXd dx = solve_step(jac, mis, n);
        for (int k = 0; k < na; ++k) v_ang[u.ang_idx[k]] += dx[k];
        for (size_t k = 0; k < u.mag_idx.size(); ++k) v_mag[u.mag_idx[k]] += dx[na + static_cast<int>(k)];
    }

    sol.v_mag = v_mag;
    sol.v_ang = v_ang;
    auto [pf, qf] = branch_flows_at(net, adm, v_mag, v_ang);
    sol.p_flow_from = pf;
    sol.q_flow_from = qf;
    return sol;
}

ACSolution try_solve_ac(const Network& net, const Eigen::VectorXd& injections,
                        const AcOptions& opts) {
    return try_solve_ac(net, injections, net.nominal_q(), opts);
}

ACSolution solve_ac(const Network& net, const Eigen::VectorXd& injections,
                    const AcOptions& opts) {
    ACSolution sol = try_solve_ac(net, injections, opts);
    if (!sol.converged)
        throw NonConvergence("AC power flow did not converge in " +
                             std::to_string(opts.max_iter) + " iterations (mismatch " +
                             std::to_string(sol.max_mismatch) + " pu)");
    return sol;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> branch_flows(const Network& net,
                                                         const ACSolution& sol) {
    AdmittanceModel adm(net);
    return branch_flows_at(net, adm, sol.v_mag, sol.v_ang);
}

} // namespace gridreduce
