#ifndef DYBW_RUNNER_HPP
#define DYBW_RUNNER_HPP

#include <string>
#include <vector>

#include "dybw/config.hpp"
#include "dybw/engine.hpp"

namespace dybw::cli {

struct RunOptions {
    std::string out_dir;  // overrides the config's out_dir when non-empty
    int jobs = 1;
    bool log_delays = false;
    bool log_plans = false;
};

// Graph and datasets are fixed across replications; only the replication
// seed (partition, delays, batch sampling) varies.
struct Experiment {
    topology::Graph graph;
    learning::Dataset train;
    learning::Dataset test;
};

Experiment build_experiment(const ExperimentConfig& cfg);

// Per-worker p for static_p: configured vector/scalar, or ceil(degree/2)
// when the config leaves it open.
std::vector<int> resolve_static_p(const ExperimentConfig& cfg, const topology::Graph& g);

engine::RunInputs make_run_inputs(const ExperimentConfig& cfg, const Experiment& exp,
                                  scheduler::StrategyKind kind, std::uint64_t rep_seed,
                                  std::vector<learning::Shard> shards);

std::string records_csv_text(const std::vector<engine::IterationRecord>& records);

// Commands return the process exit code: 0 ok, 2 runtime/assertion failure
// (validation problems throw ConfigError and the launcher maps them to 1).
int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_compare(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_check(const ExperimentConfig& cfg, const RunOptions& opt, bool inject_asymmetry = false);

}  // namespace dybw::cli

#endif  // DYBW_RUNNER_HPP
