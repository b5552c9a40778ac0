#ifndef DYBW_STRAGGLER_HPP
#define DYBW_STRAGGLER_HPP

#include <cstdint>
#include <vector>

namespace dybw::scheduler {
struct ParticipationPlan;
}

namespace dybw::straggler {

enum class DelayKind {
    kExponential,
    kShiftedExponential,
    kLognormal,
    kFixedHeterogeneous,
};

// Per-worker compute-time distribution. Only the fields of the selected kind
// are read; fixed_heterogeneous needs one mean per worker and models
// persistently slow machines (jitter scales a lognormal wobble around each
// mean).
struct DelayModel {
    DelayKind kind = DelayKind::kShiftedExponential;
    double rate = 2.0;
    double shift = 0.5;
    double mu = 0.0;
    double sigma = 1.0;
    std::vector<double> means;
    double jitter = 0.0;
    std::uint64_t seed = 0;
};

struct DelayDraw {
    long iteration = 0;
    std::vector<double> times;
};

// One delay per worker, keyed by (seed, k, j) so every strategy compared
// under the same seed sees identical realizations.
DelayDraw draw(const DelayModel& model, long k, int n);

// max_j t_j: how long the iteration takes when everyone waits for everyone.
double duration_full(const DelayDraw& d);

// Iteration time under partial participation: for each worker that appears
// in someone's active set, T_j = max over S_j plus its own time; the
// iteration ends when the last such worker finishes.
double duration_partial(const DelayDraw& d, const scheduler::ParticipationPlan& plan);

double mean_duration(const std::vector<double>& samples);

}  // namespace dybw::straggler

#endif  // DYBW_STRAGGLER_HPP
