#include "dybw/straggler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dybw/rng.hpp"
#include "dybw/scheduler.hpp"

namespace dybw::straggler {

namespace {

void validate(const DelayModel& model, int n) {
    switch (model.kind) {
        case DelayKind::kExponential:
            if (!(model.rate > 0.0)) throw std::invalid_argument("exponential rate must be > 0");
            break;
        case DelayKind::kShiftedExponential:
            if (!(model.rate > 0.0)) throw std::invalid_argument("exponential rate must be > 0");
            if (model.shift < 0.0) throw std::invalid_argument("shift must be >= 0");
            break;
        case DelayKind::kLognormal:
            if (!(model.sigma > 0.0)) throw std::invalid_argument("lognormal sigma must be > 0");
            break;
        case DelayKind::kFixedHeterogeneous:
            if (static_cast<int>(model.means.size()) != n) {
                throw std::invalid_argument("fixed_heterogeneous needs one mean per worker");
            }
            for (double m : model.means) {
                if (!(m > 0.0)) throw std::invalid_argument("per-worker means must be > 0");
            }
            if (model.jitter < 0.0) throw std::invalid_argument("jitter must be >= 0");
            break;
    }
}

}  // namespace

DelayDraw draw(const DelayModel& model, long k, int n) {
    if (n < 1) throw std::invalid_argument("worker count must be >= 1");
    validate(model, n);
    DelayDraw out;
    out.iteration = k;
    out.times.resize(n);
    for (int j = 0; j < n; ++j) {
        rng::Stream stream = rng::Stream::make(
            model.seed,
            {rng::kTagDelay, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j)});
        double t = 0.0;
        switch (model.kind) {
            case DelayKind::kExponential:
                t = -std::log(stream.next_unit()) / model.rate;
                break;
            case DelayKind::kShiftedExponential:
                t = model.shift - std::log(stream.next_unit()) / model.rate;
                break;
            case DelayKind::kLognormal:
                t = std::exp(model.mu + model.sigma * stream.next_gaussian());
                break;
            case DelayKind::kFixedHeterogeneous:
                t = model.means[j] * std::exp(model.jitter * stream.next_gaussian());
                break;
        }
        out.times[j] = t;
    }
    return out;
}

double duration_full(const DelayDraw& d) {
    if (d.times.empty()) throw std::invalid_argument("empty delay draw");
    return *std::max_element(d.times.begin(), d.times.end());
}

double duration_partial(const DelayDraw& d, const scheduler::ParticipationPlan& plan) {
    if (plan.iteration != d.iteration) {
        throw std::invalid_argument("plan is for iteration " + std::to_string(plan.iteration) +
                                    " but draw is for " + std::to_string(d.iteration));
    }
    const int n = static_cast<int>(d.times.size());
    if (static_cast<int>(plan.active_sets.size()) != n) {
        throw std::invalid_argument("plan worker count does not match draw");
    }
    std::vector<char> participates(n, 0);
    for (const auto& s : plan.active_sets) {
        for (int i : s) participates[i] = 1;
    }
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        if (!participates[j]) continue;
        double tj = d.times[j];
        for (int i : plan.active_sets[j]) tj = std::max(tj, d.times[i]);
        worst = std::max(worst, tj);
    }
    return worst;
}

double mean_duration(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("no duration samples");
    double total = 0.0;
    for (double s : samples) total += s;
    return total / samples.size();
}

}  // namespace dybw::straggler
