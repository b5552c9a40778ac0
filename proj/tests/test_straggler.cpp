#include "dybw/straggler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "dybw/rng.hpp"
#include "dybw/scheduler.hpp"
#include "dybw/topology.hpp"

using namespace dybw::straggler;
using dybw::scheduler::ParticipationPlan;

namespace {

DelayModel fixed_model(std::vector<double> means, double jitter = 0.0, std::uint64_t seed = 0) {
    DelayModel m;
    m.kind = DelayKind::kFixedHeterogeneous;
    m.means = std::move(means);
    m.jitter = jitter;
    m.seed = seed;
    return m;
}

ParticipationPlan plan_with(long k, std::vector<std::vector<int>> sets) {
    ParticipationPlan p;
    p.iteration = k;
    p.active_sets = std::move(sets);
    return p;
}

}  // namespace

TEST(Draw, FixedHeterogeneousZeroJitterIsExact) {
    const DelayModel m = fixed_model({1.0, 2.0, 3.0});
    for (long k : {1L, 7L, 500L}) {
        const DelayDraw d = draw(m, k, 3);
        EXPECT_EQ(d.iteration, k);
        EXPECT_EQ(d.times, (std::vector<double>{1.0, 2.0, 3.0}));
    }
}

TEST(Draw, DeterministicPerSeedAndIteration) {
    DelayModel m;
    m.kind = DelayKind::kExponential;
    m.rate = 1.5;
    m.seed = 9;
    const DelayDraw a = draw(m, 4, 5);
    const DelayDraw b = draw(m, 4, 5);
    EXPECT_EQ(a.times, b.times);
    const DelayDraw c = draw(m, 5, 5);
    EXPECT_NE(a.times, c.times);
    m.seed = 10;
    const DelayDraw e = draw(m, 4, 5);
    EXPECT_NE(a.times, e.times);
}

TEST(Draw, WorkerPrefixStableWhenCountGrows) {
    DelayModel m;
    m.kind = DelayKind::kExponential;
    m.rate = 2.0;
    m.seed = 3;
    const DelayDraw small = draw(m, 2, 3);
    const DelayDraw big = draw(m, 2, 6);
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(small.times[j], big.times[j]);
}

TEST(Draw, ShiftedExponentialMeanMatches) {
    DelayModel m;
    m.kind = DelayKind::kShiftedExponential;
    m.shift = 0.5;
    m.rate = 2.0;
    m.seed = 21;
    double total = 0.0;
    int count = 0;
    for (long k = 1; k <= 1000; ++k) {
        const DelayDraw d = draw(m, k, 10);
        for (double t : d.times) {
            EXPECT_GE(t, 0.5);
            total += t;
            ++count;
        }
    }
    // mean shift + 1/rate = 1.0, sd = 0.5, so 3 standard errors over 10^4 draws
    EXPECT_EQ(count, 10000);
    EXPECT_NEAR(total / count, 1.0, 3.0 * 0.5 / 100.0);
}

TEST(Draw, LognormalMeanMatches) {
    DelayModel m;
    m.kind = DelayKind::kLognormal;
    m.mu = 0.0;
    m.sigma = 0.5;
    m.seed = 22;
    double total = 0.0;
    for (long k = 1; k <= 1000; ++k) {
        const DelayDraw d = draw(m, k, 10);
        for (double t : d.times) {
            EXPECT_GT(t, 0.0);
            total += t;
        }
    }
    const double want = std::exp(0.125);  // exp(sigma^2 / 2)
    const double sd = std::sqrt((std::exp(0.25) - 1.0) * std::exp(0.25));
    EXPECT_NEAR(total / 10000.0, want, 3.0 * sd / 100.0);
}

TEST(Draw, Validation) {
    DelayModel m;
    m.kind = DelayKind::kExponential;
    m.rate = 0.0;
    EXPECT_THROW(draw(m, 1, 2), std::invalid_argument);
    m.kind = DelayKind::kShiftedExponential;
    m.rate = 1.0;
    m.shift = -0.1;
    EXPECT_THROW(draw(m, 1, 2), std::invalid_argument);
    m.kind = DelayKind::kLognormal;
    m.sigma = 0.0;
    EXPECT_THROW(draw(m, 1, 2), std::invalid_argument);
    EXPECT_THROW(draw(fixed_model({1.0, 2.0}), 1, 3), std::invalid_argument);
    EXPECT_THROW(draw(fixed_model({1.0, 0.0}), 1, 2), std::invalid_argument);
    EXPECT_THROW(draw(fixed_model({1.0}, -0.5), 1, 1), std::invalid_argument);
    EXPECT_THROW(draw(fixed_model({}), 1, 0), std::invalid_argument);
}

TEST(DurationFull, MaxOfTimes) {
    DelayDraw d;
    d.iteration = 1;
    d.times = {1.0, 2.0, 3.0};
    EXPECT_DOUBLE_EQ(duration_full(d), 3.0);
    d.times = {5.0};
    EXPECT_DOUBLE_EQ(duration_full(d), 5.0);
    d.times = {0.5, 0.2, 0.9};
    EXPECT_DOUBLE_EQ(duration_full(d), 0.9);
    d.times.clear();
    EXPECT_THROW(duration_full(d), std::invalid_argument);
}

TEST(DurationPartial, SingleEstablishedLinkWaitsOnlyForIt) {
    // 3-node path, times [0.5, 0.2, 0.9]: link (0,1) active, worker 2 idle.
    DelayDraw d;
    d.iteration = 1;
    d.times = {0.5, 0.2, 0.9};
    const ParticipationPlan p = plan_with(1, {{1}, {0}, {}});
    EXPECT_DOUBLE_EQ(duration_partial(d, p), 0.5);
}

TEST(DurationPartial, OnlyConsumersWait) {
    // Worker 0 pulls from 1, nobody pulls from 0: only worker 1 participates
    // and it waits for no one, so the slow worker 2 and worker 0 are ignored.
    DelayDraw d;
    d.iteration = 3;
    d.times = {1.0, 2.0, 9.0};
    const ParticipationPlan p = plan_with(3, {{1}, {}, {}});
    EXPECT_DOUBLE_EQ(duration_partial(d, p), 2.0);
}

TEST(DurationPartial, EmptyPlanCostsNothing) {
    DelayDraw d;
    d.iteration = 2;
    d.times = {4.0, 7.0};
    const ParticipationPlan p = plan_with(2, {{}, {}});
    EXPECT_DOUBLE_EQ(duration_partial(d, p), 0.0);
}

TEST(DurationPartial, FullPlanEqualsDurationFull) {
    const dybw::topology::Graph g =
        dybw::topology::generate_graph(6, dybw::topology::TopologyKind::kRandom, 0.6, 11);
    DelayModel m;
    m.kind = DelayKind::kExponential;
    m.rate = 1.0;
    m.seed = 5;
    for (long k = 1; k <= 50; ++k) {
        const DelayDraw d = draw(m, k, 6);
        const ParticipationPlan p = dybw::scheduler::plan_full(g, k);
        EXPECT_DOUBLE_EQ(duration_partial(d, p), duration_full(d));
    }
}

TEST(DurationPartial, NeverExceedsDurationFull) {
    // Random mutually consistent active sets on random graphs.
    dybw::rng::Stream pick = dybw::rng::Stream::make(77, {1});
    DelayModel m;
    m.kind = DelayKind::kLognormal;
    m.mu = 0.2;
    m.sigma = 0.8;
    m.seed = 6;
    int trials = 0;
    for (std::uint64_t gseed = 0; gseed < 40; ++gseed) {
        const dybw::topology::Graph g =
            dybw::topology::generate_graph(5, dybw::topology::TopologyKind::kRandom, 0.7, gseed);
        for (long k = 1; k <= 30; ++k) {
            ParticipationPlan p;
            p.iteration = k;
            p.active_sets.assign(5, {});
            for (const auto& [a, b] : g.edges()) {
                if (pick.next_unit() < 0.5) {
                    p.active_sets[a].push_back(b);
                    p.active_sets[b].push_back(a);
                }
            }
            const DelayDraw d = draw(m, k, 5);
            EXPECT_LE(duration_partial(d, p), duration_full(d));
            ++trials;
        }
    }
    EXPECT_EQ(trials, 1200);
}

TEST(DurationPartial, IterationMismatchRejected) {
    DelayDraw d;
    d.iteration = 4;
    d.times = {1.0, 1.0};
    const ParticipationPlan p = plan_with(5, {{1}, {0}});
    try {
        duration_partial(d, p);
        FAIL() << "accepted mismatched iterations";
    } catch (const std::invalid_argument& e) {
        EXPECT_STREQ(e.what(), "plan is for iteration 5 but draw is for 4");
    }
    const ParticipationPlan wrong_n = plan_with(4, {{}, {}, {}});
    EXPECT_THROW(duration_partial(d, wrong_n), std::invalid_argument);
}

TEST(MeanDuration, Values) {
    EXPECT_DOUBLE_EQ(mean_duration({3.0, 3.0, 3.0}), 3.0);
    EXPECT_DOUBLE_EQ(mean_duration({1.0, 2.0, 3.0, 4.0}), 2.5);
    EXPECT_THROW(mean_duration({}), std::invalid_argument);
}

TEST(MeanDuration, MaxOfFourExponentialsMatchesHarmonicSum) {
    DelayModel m;
    m.kind = DelayKind::kExponential;
    m.rate = 1.0;
    m.seed = 30;
    std::vector<double> samples;
    for (long k = 1; k <= 10000; ++k) samples.push_back(duration_full(draw(m, k, 4)));
    // E[max of 4 iid exp(1)] = 1 + 1/2 + 1/3 + 1/4
    const double want = 25.0 / 12.0;
    const double sd = std::sqrt(1.0 + 1.0 / 4.0 + 1.0 / 9.0 + 1.0 / 16.0);
    EXPECT_NEAR(mean_duration(samples), want, 3.0 * sd / 100.0);
}
