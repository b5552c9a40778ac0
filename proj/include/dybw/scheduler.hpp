#ifndef DYBW_SCHEDULER_HPP
#define DYBW_SCHEDULER_HPP

#include <optional>
#include <utility>
#include <vector>

#include "dybw/straggler.hpp"
#include "dybw/topology.hpp"

namespace dybw::scheduler {

// One iteration's participation decision. active_sets[j] holds the neighbors
// worker j waits for (sorted, mutually consistent with the other workers).
// theta and established_edge are only set by the round-robin scheduler.
struct ParticipationPlan {
    long iteration = 0;
    std::vector<std::vector<int>> active_sets;
    std::optional<double> theta;
    std::optional<topology::Edge> established_edge;
};

// Progress through one coverage-path epoch: `covered` collects the links
// established so far, step_in_epoch runs 1..d and wraps.
struct EpochState {
    long epoch_index = 0;
    std::vector<topology::Edge> covered;
    int step_in_epoch = 1;
};

enum class StrategyKind { kFull, kStaticP, kDtur };

struct StrategyConfig {
    StrategyKind kind = StrategyKind::kDtur;
    std::vector<int> p;  // static_p only, one entry per worker
};

// Everyone waits for all neighbors.
ParticipationPlan plan_full(const topology::Graph& g, long k);

// Worker j waits for its p_j fastest neighbors (ties to the lower index),
// then the sets are intersect-symmetrized so that i in S_j iff j in S_i.
ParticipationPlan plan_static_p(const topology::Graph& g, const straggler::DelayDraw& d,
                                const std::vector<int>& p);

// Deterministic round-robin over the coverage path: the iteration closes at
// theta, the earliest time an uncovered link has both endpoints finished;
// workers done by theta aggregate everything they heard, the rest sit out.
std::pair<ParticipationPlan, EpochState> plan_dtur(const topology::Graph& g,
                                                   const topology::CoveragePath& path,
                                                   const EpochState& state,
                                                   const straggler::DelayDraw& d);

// Edges realized by the plan: {(i,j) : i in S_j, i < j}, sorted.
std::vector<topology::Edge> edge_set_of(const ParticipationPlan& plan);

}  // namespace dybw::scheduler

#endif  // DYBW_SCHEDULER_HPP
