#include "gridreduce/dcpf.hpp"

#include <cmath>

#include <Eigen/LU>

namespace gridreduce {

Eigen::MatrixXd build_bprime(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    if (a.rows() != b.size()) throw DimensionMismatch("build_bprime: rows(A) != len(b)");
    return a.transpose() * b.asDiagonal() * a;
}

namespace {

Eigen::PartialPivLU<Eigen::MatrixXd> checked_lu(const Eigen::MatrixXd& bprime) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bprime);
    double scale = bprime.cwiseAbs().maxCoeff();
    double pivot_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(pivot_min > 1e-12 * std::max(scale, 1e-300)) || !std::isfinite(pivot_min))
        throw SingularSystem("B' is singular or near-singular");
    return lu;
}

} // namespace

Eigen::VectorXd solve_angles(const Eigen::MatrixXd& bprime, const Eigen::VectorXd& rhs) {
    if (bprime.rows() != bprime.cols() || bprime.rows() != rhs.size())
        throw DimensionMismatch("solve_angles: shape mismatch");
    return checked_lu(bprime).solve(rhs);
}

BprimeFactor::BprimeFactor(const ReducedNetwork& rn, const Eigen::VectorXd& b)
    : lu_(checked_lu(build_bprime(rn.incidence, b))) {}

Eigen::VectorXd BprimeFactor::solve(const Eigen::VectorXd& rhs) const { return lu_.solve(rhs); }
Eigen::MatrixXd BprimeFactor::solve(const Eigen::MatrixXd& rhs) const { return lu_.solve(rhs); }

DcFlowResult dc_flows(const ReducedNetwork& rn, const EquivalentParams& params,
                      const Eigen::VectorXd& p_r) {
    if (p_r.size() != rn.zone_count - 1)
        throw DimensionMismatch("dc_flows: P_R must have |N_R|-1 entries");
    if (params.b.size() != rn.tie_count() || params.gamma.size() != rn.zone_count - 1 ||
        params.rho.size() != rn.tie_count())
        throw DimensionMismatch("dc_flows: parameter sizes do not match the reduction");

    BprimeFactor factor(rn, params.b);
    DcFlowResult out;
    out.angles = factor.solve((p_r - params.gamma).eval());
    out.flows = params.b.cwiseProduct(rn.incidence * out.angles) + params.rho;
    return out;
}

Eigen::MatrixXd ptdf_matrix(const ReducedNetwork& rn, const Eigen::VectorXd& b) {
    if (b.size() != rn.tie_count()) throw DimensionMismatch("ptdf_matrix: len(b)");
    BprimeFactor factor(rn, b);
    // Phi = diag(b) A B'^{-1}  ==  diag(b) (B'^{-1} A^T)^T since B' is symmetric
    Eigen::MatrixXd x = factor.solve(Eigen::MatrixXd(rn.incidence.transpose()));
    return b.asDiagonal() * x.transpose();
}

} // namespace gridreduce
