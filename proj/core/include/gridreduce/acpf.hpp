#pragma once

#include <complex>
#include <optional>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridreduce/netmodel.hpp"

namespace gridreduce {

struct AcOptions {
    double tol = 1e-8;  // pu, on the mismatch inf-norm
    int max_iter = 20;
};

// Complex bus admittance matrix plus the per-branch two-port admittances
// needed for flow recovery. Built once per network and reused across solves.
class AdmittanceModel {
public:
    explicit AdmittanceModel(const Network& net);

    int size() const { return n_; }
    const Eigen::SparseMatrix<std::complex<double>>& ybus() const { return ybus_; }

    // from-end and to-end two-port entries for branch k:
    // S_f = V_f conj(yff V_f + yft V_t)
    std::complex<double> yff(int k) const { return yff_[k]; }
    std::complex<double> yft(int k) const { return yft_[k]; }

private:
    int n_;
    Eigen::SparseMatrix<std::complex<double>> ybus_;
    std::vector<std::complex<double>> yff_, yft_;
};

// Power mismatch at (v_mag, v_ang): dP for every non-slack bus (network
// order) followed by dQ for every PQ bus, where dP_i = P_spec - P_i(V,theta).
// p_spec/q_spec are full per-bus vectors in pu.
Eigen::VectorXd ac_mismatch(const Network& net, const Eigen::VectorXd& v_mag,
                            const Eigen::VectorXd& v_ang,
                            const Eigen::VectorXd& p_spec,
                            const Eigen::VectorXd& q_spec);

// Convenience overload using the network's own injections.
Eigen::VectorXd ac_mismatch(const Network& net, const Eigen::VectorXd& v_mag,
                            const Eigen::VectorXd& v_ang);

// Newton matrix at a state: J such that mismatch(x + dx) ~ mismatch(x) - J dx
// with x = [theta at non-slack buses; V at PQ buses]. Exposed for the
// finite-difference consistency check.
Eigen::MatrixXd ac_jacobian(const Network& net, const Eigen::VectorXd& v_mag,
                            const Eigen::VectorXd& v_ang);

// Newton-Raphson from flat start. `injections` overrides p_inj at non-slack
// buses; reactive specs come from the network. Returns a solution with
// converged=false when the iteration cap is hit (no throw); throws
// SingularJacobian if a Jacobian factorization fails.
ACSolution try_solve_ac(const Network& net, const Eigen::VectorXd& injections,
                        const AcOptions& opts = {});

// As above with explicit reactive specs for PQ buses (pu, full-length).
ACSolution try_solve_ac(const Network& net, const Eigen::VectorXd& injections,
                        const Eigen::VectorXd& q_injections,
                        const AcOptions& opts = {});

// Throwing variant: NonConvergence if the cap is hit.
ACSolution solve_ac(const Network& net, const Eigen::VectorXd& injections,
                    const AcOptions& opts = {});

// From-end (p, q) per branch at a solved state, pu, positive from->to.
std::pair<Eigen::VectorXd, Eigen::VectorXd> branch_flows(const Network& net,
                                                         const ACSolution& sol);

} // namespace gridreduce
