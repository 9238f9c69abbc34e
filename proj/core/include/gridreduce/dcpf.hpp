#pragma once

#include <Eigen/Dense>

#include "gridreduce/reduce.hpp"

namespace gridreduce {

struct DcFlowResult {
    Eigen::VectorXd flows;  // |E_R|, pu
    Eigen::VectorXd angles; // |N_R|-1, radians
};

// B' = A^T diag(b) A. A is |E| x (|N|-1) with +/-1 rows.
Eigen::MatrixXd build_bprime(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

// Solves B' theta = rhs by LU. Throws SingularSystem when a pivot falls
// below 1e-12 of the matrix scale.
Eigen::VectorXd solve_angles(const Eigen::MatrixXd& bprime, const Eigen::VectorXd& rhs);

// Holds one LU factorization of B'_R for a fixed coefficient vector; shared
// read-only across concurrent scenario evaluations. Any parameter update
// means building a new factor.
class BprimeFactor {
public:
    BprimeFactor(const ReducedNetwork& rn, const Eigen::VectorXd& b);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

private:
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

// p_R^DC = diag(b) A_R [A_R^T diag(b) A_R]^{-1} (P_R - gamma) + rho,
// evaluated via an angle solve.
DcFlowResult dc_flows(const ReducedNetwork& rn, const EquivalentParams& params,
                      const Eigen::VectorXd& p_r);

// PTDF: Phi = diag(b) A_R B'_R^{-1}; dc_flows(P_R) == Phi (P_R - gamma) + rho.
Eigen::MatrixXd ptdf_matrix(const ReducedNetwork& rn, const Eigen::VectorXd& b);

} // namespace gridreduce
