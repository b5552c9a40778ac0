#ifndef DYBW_ENGINE_HPP
#define DYBW_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dybw/consensus.hpp"
#include "dybw/learning.hpp"
#include "dybw/rng.hpp"
#include "dybw/scheduler.hpp"
#include "dybw/straggler.hpp"
#include "dybw/topology.hpp"

namespace dybw::engine {

struct WorkerState {
    int index = 0;
    learning::ParamVector params;
    learning::Shard shard;
    rng::Stream stream;
};

struct IterationRecord {
    long k = 0;
    double global_loss = 0.0;
    double test_error = 0.0;
    double consensus_disagreement = 0.0;
    double duration = 0.0;
    std::vector<int> backup_counts;
    std::optional<double> theta;
};

struct RunResult {
    std::vector<IterationRecord> records;
    std::vector<learning::ParamVector> final_params;
    double total_sim_time = 0.0;
    long consensus_phase_iters = 0;
    double consensus_phase_disagreement = 0.0;
    bool consensus_phase_converged = true;
    // First iteration (and cumulative simulated time) at which the global
    // loss reached the configured target, if it ever did.
    std::optional<long> k_eps;
    std::optional<double> time_to_eps;
};

// max_j ||w_j - mean||_2: how far the workers are from agreement.
double consensus_disagreement(const std::vector<learning::ParamVector>& params);

// One gradient step on the worker's shard; advances the worker's stream.
// Throws if the result is non-finite (divergence).
learning::ParamVector local_update(const learning::Dataset& ds, WorkerState& ws, double eta,
                                   int batch);

// Mix the stacked parameters through P: w_j = sum_i P(i,j) w~_i. P must be
// doubly stochastic; the worker mean is preserved to rounding.
std::vector<learning::ParamVector> consensus_update(
    const std::vector<learning::ParamVector>& tilde_params, const consensus::MixingMatrix& p);

struct ConsensusPhaseResult {
    std::vector<learning::ParamVector> params;
    long iterations = 0;
    double disagreement = 0.0;
    bool converged = true;
};

// Post-training exchange rounds with zero gradients and full participation,
// until the disagreement drops below tol or max_iters runs out (the latter
// is reported, not fatal).
ConsensusPhaseResult consensus_phase(std::vector<learning::ParamVector> params,
                                     const topology::Graph& g, double tol, long max_iters);

struct EvalResult {
    double loss = 0.0;
    double error = 0.0;
};

EvalResult evaluate(const learning::ParamVector& params, const learning::Dataset& test);

// Everything one simulation needs. Pointers are borrowed and must outlive
// the run; test is evaluated every iteration.
struct RunInputs {
    const topology::Graph* graph = nullptr;
    const learning::Dataset* train = nullptr;
    const learning::Dataset* test = nullptr;
    std::vector<learning::Shard> shards;
    scheduler::StrategyConfig strategy;
    straggler::DelayModel delay;
    learning::LearningRateSchedule eta;
    long k_max = 500;
    int batch = 32;
    double consensus_tol = 1e-6;
    long consensus_max_iters = 500;
    // When a worker misses the cutoff its gradient work is abandoned and it
    // keeps last iteration's parameters; this flag makes it apply the local
    // step anyway (no mixing either way).
    bool straggler_applies_local = false;
    std::optional<double> eps_target;
    bool early_stop = false;
    std::uint64_t seed = 0;
};

// Per-iteration view handed to the observer before metrics are recorded.
struct IterationTrace {
    const scheduler::ParticipationPlan& plan;
    const consensus::MixingMatrix& matrix;
    const straggler::DelayDraw& delays;
    const std::vector<learning::ParamVector>& params;
};

using IterationObserver = std::function<void(const IterationTrace&)>;

RunResult run(const RunInputs& in, const IterationObserver& observer = {});

}  // namespace dybw::engine

#endif  // DYBW_ENGINE_HPP
