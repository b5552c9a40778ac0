#ifndef DYBW_CONFIG_HPP
#define DYBW_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dybw/learning.hpp"
#include "dybw/scheduler.hpp"
#include "dybw/straggler.hpp"
#include "dybw/topology.hpp"

namespace dybw::cli {

// Schema or file problems; the launcher maps these to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GraphConfig {
    topology::TopologyKind kind = topology::TopologyKind::kRandom;
    int n = 6;
    double edge_probability = 0.5;
    std::optional<std::uint64_t> seed;  // defaults to the experiment seed
    bool is_explicit = false;
    std::vector<topology::Edge> edges;
};

struct DatasetConfig {
    bool use_idx = false;
    // synth
    int examples = 600;
    int dim = 10;
    int classes = 3;
    int test_examples = 200;
    std::optional<std::uint64_t> seed;  // defaults to the experiment seed
    // idx
    std::string images, labels, test_images, test_labels;
    long limit = -1;
    long test_limit = -1;
    std::optional<int> project_dim;
};

struct PartitionConfig {
    learning::PartitionMode mode = learning::PartitionMode::kIid;
    int classes_per_worker = 2;
};

// Strategy as configured; a scalar p is broadcast per worker (clamped to the
// degree) once the graph is known.
struct StrategySpec {
    scheduler::StrategyKind kind = scheduler::StrategyKind::kDtur;
    std::vector<int> p;
    std::optional<int> p_scalar;
};

struct ExperimentConfig {
    std::uint64_t seed = 42;
    int replications = 1;
    long k_max = 500;
    int batch = 32;
    std::optional<double> eps_target;
    bool early_stop = false;
    bool straggler_applies_local = false;
    GraphConfig graph;
    DatasetConfig dataset;
    PartitionConfig partition;
    StrategySpec strategy;
    straggler::DelayModel delay;
    learning::LearningRateSchedule eta;
    double consensus_tol = 1e-6;
    long consensus_max_iters = 500;
    std::string out_dir = "out";
};

// Load + validate. Keys starting with "//" are comments; any other unknown
// key is an error naming the offending field path. Defaults documented in
// the generated config (see default_config_text).
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_file(const std::string& path);

nlohmann::json load_config_json(const std::string& path);

// Apply one "dotted.path=value" assignment; the value is parsed as JSON when
// possible and treated as a bare string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Commented default config for `gen-config`.
std::string default_config_text();

// Seed for replication r; datasets and graphs stay on the base seed so all
// replications share them.
std::uint64_t replication_seed(const ExperimentConfig& cfg, int r);

}  // namespace dybw::cli

#endif  // DYBW_CONFIG_HPP
