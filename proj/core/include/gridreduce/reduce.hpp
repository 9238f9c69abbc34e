#pragma once

#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridreduce/netmodel.hpp"

namespace gridreduce {

struct ZonePartition {
    std::vector<int> assignment; // bus index (network order) -> zone id
    int zone_count = 0;
    int ref_zone = 0;            // zone containing the network's ref bus

    int zone_of_bus_index(int bus_idx) const { return assignment[bus_idx]; }
};

// One equivalent line between two zones: the ordered zone pair plus every
// original branch crossing it with its orientation sign (+1 when the branch's
// from-bus lies in zone_a).
struct TieLine {
    int zone_a = 0; // zone_a < zone_b
    int zone_b = 0;
    std::vector<std::pair<int, double>> crossings; // (branch index, sign)
};

struct ReducedNetwork {
    int zone_count = 0;
    std::vector<TieLine> tie_lines;
    Eigen::MatrixXd incidence; // |E_R| x (|N_R|-1), ref zone column deleted
    int ref_zone = 0;

    int tie_count() const { return static_cast<int>(tie_lines.size()); }
    // column of `incidence` for a zone, or -1 for the ref zone
    int zone_column(int zone) const { return zone < ref_zone ? zone : (zone == ref_zone ? -1 : zone - 1); }
};

struct FlowAggregator {
    Eigen::SparseMatrix<double> psi; // |E_R| x |E|, entries in {-1,0,+1}
};

struct InjectionAggregator {
    Eigen::SparseMatrix<double> psi; // |N_R| x |N|, entries in {0,1}
};

// Learnable parameters of the reduced DC model.
struct EquivalentParams {
    Eigen::VectorXd b;     // |E_R|
    Eigen::VectorXd gamma; // |N_R|-1, non-reference zones in zone order
    Eigen::VectorXd rho;   // |E_R|
};

// Zone file: JSON {"zones": [[bus ids]...]}. Listed zones get ids 0..k-1 in
// file order; unlisted buses become singleton zones in ascending bus-id
// order. Throws OverlappingZones / UnknownBus / MalformedCase.
ZonePartition load_partition(const std::string& json_text, const Network& net);

ZonePartition singleton_partition(const Network& net);

std::tuple<ReducedNetwork, FlowAggregator, InjectionAggregator>
build_reduction(const Network& net, const ZonePartition& zp);

// Psi_g * P with the ref-zone entry dropped: length |N_R|-1.
Eigen::VectorXd aggregate_injections(const Eigen::VectorXd& p,
                                     const InjectionAggregator& agg,
                                     const ZonePartition& zp);

// Psi_flow * p_ac: signed per-tie flows, length |E_R|.
Eigen::VectorXd aggregate_flows(const Eigen::VectorXd& p_ac,
                                const FlowAggregator& agg);

// Baseline parameters: b_k = sum of 1/x over crossing branches, gamma = 0,
// rho = 0. Throws ZeroReactanceBranch.
EquivalentParams init_params(const Network& net, const ReducedNetwork& rn);

} // namespace gridreduce
