#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "gridreduce/learn.hpp"
#include "gridreduce/netmodel.hpp"
#include "gridreduce/reduce.hpp"

namespace gridreduce {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a over bytes, hex-encoded. Used to tie pipeline artifacts together.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

// Canonical content hashes embedded in every output file.
std::string case_hash(const std::string& case_text);
std::string zone_hash(const ZonePartition& zp);

// --- reduction bundle (cmd_reduce output) ---------------------------------
nlohmann::json reduction_bundle_json(const Network& net, const ZonePartition& zp,
                                     const ReducedNetwork& rn,
                                     const EquivalentParams& init,
                                     const std::string& casehash);

// --- scenario file (cmd_gen output): CSV + JSON sidecar --------------------
struct ScenarioFileMeta {
    std::string version;
    std::string casehash;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    double base_mva = 100.0;
    int train_count = 0;
    int test_count = 0;
};

void write_scenarios_csv(const std::string& path, const Network& net,
                         const ScenarioSet& scen, const std::string& casehash);
ScenarioSet read_scenarios_csv(const std::string& path, ScenarioFileMeta* meta = nullptr);

// --- dataset file (cmd_dataset output): CSV + JSON sidecar -----------------
struct DatasetFileMeta {
    std::string version;
    std::string casehash;
    std::string zonehash;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    double base_mva = 100.0;
    int zone_count = 0;
    int ref_zone = 0;
    std::vector<std::pair<int, int>> ties;
    Eigen::VectorXd init_b;
    int discarded = 0;
};

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const DatasetFileMeta& meta);
Dataset read_dataset_csv(const std::string& path, DatasetFileMeta* meta = nullptr);

// Rebuilds the reduced incidence structure recorded in a dataset sidecar.
ReducedNetwork reduced_from_meta(const DatasetFileMeta& meta);

// --- checkpoint (cmd_train output) -----------------------------------------
struct Checkpoint {
    EquivalentParams params;
    std::vector<std::pair<int, int>> tie_order;
    int ref_zone = 0;
    int zone_count = 0;
    std::string zonehash;
    std::string casehash;
    std::string method;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// --- helpers ---------------------------------------------------------------
std::string read_text_file(const std::string& path);   // throws InputError
void write_text_file(const std::string& path, const std::string& content);
std::string format_double(double v);                   // round-trip exact

} // namespace gridreduce
