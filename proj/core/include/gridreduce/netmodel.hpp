#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "gridreduce/errors.hpp"

namespace gridreduce {

enum class BusKind { Slack, PV, PQ };

// One bus of the original network. Per-unit quantities are derived from the
// raw case-table values (kept in MW/MVAr so a parsed network reserializes
// bit-exactly).
struct Bus {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double p_inj = 0.0;          // pu, generation minus load
    double q_inj = 0.0;          // pu
    double v_mag_setpoint = 1.0; // pu, meaningful for Slack/PV
    double shunt_g = 0.0;        // pu
    double shunt_b = 0.0;        // pu

    // raw case-table values
    double pd_mw = 0.0;
    double qd_mvar = 0.0;
    double pg_mw = 0.0;   // in-service generation summed over the bus
    double qg_mvar = 0.0;
    double gs_mw = 0.0;
    double bs_mvar = 0.0;
    double vm = 1.0;
    double va_deg = 0.0;
    double base_kv = 0.0;
};

// One branch. Series admittance is derived from raw r, x; tap and shift use
// the standard two-port transformer model (tap on the from side).
struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double series_g = 0.0;  // pu
    double series_b = 0.0;  // pu
    double shunt_g = 0.0;   // pu, total line charging conductance (normally 0)
    double shunt_b = 0.0;   // pu, total line charging susceptance
    double tap_ratio = 1.0; // 1.0 = nominal
    double phase_shift = 0.0; // radians

    // raw case-table values
    double resistance = 0.0; // pu
    double reactance = 0.0;  // pu
    double shift_deg = 0.0;
};

struct Network {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    int ref_bus = 0;

    int bus_count() const { return static_cast<int>(buses.size()); }
    int branch_count() const { return static_cast<int>(branches.size()); }

    // index of a bus id in `buses`, or -1
    int bus_index(int id) const;
    int ref_index() const { return bus_index(ref_bus); }

    Eigen::VectorXd nominal_p() const; // pu injections in bus order
    Eigen::VectorXd nominal_q() const;

private:
    mutable std::unordered_map<int, int> index_cache_;
};

struct ACSolution {
    Eigen::VectorXd v_mag;        // per bus, network order
    Eigen::VectorXd v_ang;        // radians
    Eigen::VectorXd p_flow_from;  // per branch, pu, from-end, positive from->to
    Eigen::VectorXd q_flow_from;
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
};

struct Violation {
    std::string rule;   // e.g. "DuplicateSlack", "DanglingBranch"
    std::string detail;
};

// Parses the matrix-text case format (baseMVA, bus, gen, branch tables).
// Out-of-service generators and branches are dropped. Throws MalformedCase,
// NoSlack or Disconnected.
Network parse_case(const std::string& text);

// Canonical case text for a Network; parse_case(to_case_text(n)) == n
// field-by-field for any parsed network.
std::string to_case_text(const Network& net);

// Invariant check as data, one entry per violated rule.
std::vector<Violation> validate(const Network& net);

nlohmann::json network_to_json(const Network& net);

bool networks_equal(const Network& a, const Network& b);

} // namespace gridreduce
