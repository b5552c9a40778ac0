#include "dybw/scheduler.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "dybw/rng.hpp"
#include "dybw/straggler.hpp"
#include "dybw/topology.hpp"

using namespace dybw::scheduler;
using dybw::straggler::DelayDraw;
using dybw::topology::CoveragePath;
using dybw::topology::Edge;
using dybw::topology::Graph;
using dybw::topology::make_edge;

namespace {

DelayDraw times(long k, std::vector<double> t) {
    DelayDraw d;
    d.iteration = k;
    d.times = std::move(t);
    return d;
}

Graph path3() { return Graph(3, {{0, 1}, {1, 2}}); }

}  // namespace

TEST(PlanFull, EveryNeighborActive) {
    const Graph tri(3, {{0, 1}, {0, 2}, {1, 2}});
    const ParticipationPlan p = plan_full(tri, 7);
    EXPECT_EQ(p.iteration, 7);
    EXPECT_EQ(p.active_sets[0], (std::vector<int>{1, 2}));
    EXPECT_EQ(p.active_sets[1], (std::vector<int>{0, 2}));
    EXPECT_EQ(p.active_sets[2], (std::vector<int>{0, 1}));
    EXPECT_FALSE(p.theta.has_value());
    EXPECT_FALSE(p.established_edge.has_value());

    const ParticipationPlan line = plan_full(path3(), 1);
    EXPECT_EQ(line.active_sets[1], (std::vector<int>{0, 2}));
    EXPECT_EQ(edge_set_of(line), path3().edges());
}

TEST(PlanStaticP, FastestNeighborsThenIntersection) {
    // p = 1 everywhere on the path, times [0.5, 0.2, 0.9]: 0 and 1 pick each
    // other, 2's wish for 1 is unreciprocated so 2 ends up alone.
    const ParticipationPlan p = plan_static_p(path3(), times(1, {0.5, 0.2, 0.9}), {1, 1, 1});
    EXPECT_EQ(p.active_sets[0], (std::vector<int>{1}));
    EXPECT_EQ(p.active_sets[1], (std::vector<int>{0}));
    EXPECT_TRUE(p.active_sets[2].empty());
    EXPECT_EQ(edge_set_of(p), (std::vector<Edge>{{0, 1}}));
}

TEST(PlanStaticP, FullBudgetEqualsPlanFull) {
    dybw::straggler::DelayModel m;
    m.kind = dybw::straggler::DelayKind::kExponential;
    m.rate = 1.0;
    m.seed = 4;
    for (std::uint64_t gseed = 0; gseed < 10; ++gseed) {
        const Graph g =
            dybw::topology::generate_graph(6, dybw::topology::TopologyKind::kRandom, 0.6, gseed);
        std::vector<int> p(6);
        for (int j = 0; j < 6; ++j) p[j] = g.degree(j);
        for (long k = 1; k <= 20; ++k) {
            const DelayDraw d = dybw::straggler::draw(m, k, 6);
            EXPECT_EQ(plan_static_p(g, d, p).active_sets, plan_full(g, k).active_sets);
        }
    }
}

TEST(PlanStaticP, MutualConsistencyProperty) {
    dybw::straggler::DelayModel m;
    m.kind = dybw::straggler::DelayKind::kLognormal;
    m.sigma = 1.0;
    m.seed = 8;
    dybw::rng::Stream pick = dybw::rng::Stream::make(12, {3});
    for (std::uint64_t gseed = 0; gseed < 20; ++gseed) {
        const Graph g =
            dybw::topology::generate_graph(7, dybw::topology::TopologyKind::kRandom, 0.5, gseed);
        std::vector<int> p(7);
        for (int j = 0; j < 7; ++j) {
            p[j] = g.degree(j) == 0 ? 1 : 1 + static_cast<int>(pick.next_below(g.degree(j)));
        }
        const DelayDraw d = dybw::straggler::draw(m, 1 + static_cast<long>(gseed), 7);
        const ParticipationPlan plan = plan_static_p(g, d, p);
        for (int j = 0; j < 7; ++j) {
            EXPECT_LE(plan.active_sets[j].size(), static_cast<std::size_t>(p[j]));
            EXPECT_TRUE(std::is_sorted(plan.active_sets[j].begin(), plan.active_sets[j].end()));
            for (int i : plan.active_sets[j]) {
                EXPECT_TRUE(g.has_edge(i, j));
                const auto& back = plan.active_sets[i];
                EXPECT_TRUE(std::binary_search(back.begin(), back.end(), j));
            }
        }
    }
}

TEST(PlanStaticP, BudgetOutOfRangeRejected) {
    EXPECT_THROW(plan_static_p(path3(), times(1, {1, 1, 1}), {1, 1}), std::invalid_argument);
    EXPECT_THROW(plan_static_p(path3(), times(1, {1, 1, 1}), {0, 1, 1}), std::invalid_argument);
    EXPECT_THROW(plan_static_p(path3(), times(1, {1, 1, 1}), {1, 3, 1}), std::invalid_argument);
}

TEST(PlanDtur, FirstStepEstablishesCheapestLink) {
    const Graph g = path3();
    const CoveragePath path = coverage_path(g);
    ASSERT_EQ(path.links, (std::vector<Edge>{{0, 1}, {1, 2}}));
    ASSERT_EQ(path.length_d, 2);

    EpochState fresh;
    const auto [plan, next] = plan_dtur(g, path, fresh, times(1, {0.5, 0.2, 0.9}));
    // link (0,1) ready at max(0.5, 0.2) = 0.5, link (1,2) at 0.9
    ASSERT_TRUE(plan.theta.has_value());
    EXPECT_DOUBLE_EQ(*plan.theta, 0.5);
    ASSERT_TRUE(plan.established_edge.has_value());
    EXPECT_EQ(*plan.established_edge, make_edge(0, 1));
    EXPECT_EQ(plan.active_sets[0], (std::vector<int>{1}));
    EXPECT_EQ(plan.active_sets[1], (std::vector<int>{0}));
    EXPECT_TRUE(plan.active_sets[2].empty());
    EXPECT_EQ(next.covered, (std::vector<Edge>{{0, 1}}));
    EXPECT_EQ(next.step_in_epoch, 2);
    EXPECT_EQ(next.epoch_index, 0);
}

TEST(PlanDtur, SecondStepDrainsPathAndRollsEpoch) {
    const Graph g = path3();
    const CoveragePath path = coverage_path(g);
    EpochState state;
    state.covered = {make_edge(0, 1)};
    state.step_in_epoch = 2;

    const auto [plan, next] = plan_dtur(g, path, state, times(2, {0.3, 0.4, 0.6}));
    // only (1,2) is uncovered, so theta = max(0.4, 0.6) even though (0,1) was faster
    EXPECT_DOUBLE_EQ(*plan.theta, 0.6);
    EXPECT_EQ(*plan.established_edge, make_edge(1, 2));
    // everyone finished by 0.6, so all neighbors aggregate
    EXPECT_EQ(plan.active_sets[0], (std::vector<int>{1}));
    EXPECT_EQ(plan.active_sets[1], (std::vector<int>{0, 2}));
    EXPECT_EQ(plan.active_sets[2], (std::vector<int>{1}));
    // epoch complete: coverage resets
    EXPECT_TRUE(next.covered.empty());
    EXPECT_EQ(next.step_in_epoch, 1);
    EXPECT_EQ(next.epoch_index, 1);
}

TEST(PlanDtur, SingleEdgeGraph) {
    const Graph g(2, {{0, 1}});
    const CoveragePath path = coverage_path(g);
    EpochState state;
    const auto [plan, next] = plan_dtur(g, path, state, times(1, {2.0, 1.0}));
    EXPECT_DOUBLE_EQ(*plan.theta, 2.0);
    EXPECT_EQ(*plan.established_edge, make_edge(0, 1));
    EXPECT_EQ(next.epoch_index, 1);
    EXPECT_EQ(next.step_in_epoch, 1);
}

TEST(PlanDtur, ThetaTieBreaksToLexSmallestLink) {
    // Star 0-1, 0-2 with equal times: both links ready at the same moment.
    const Graph g(3, {{0, 1}, {0, 2}});
    const CoveragePath path = coverage_path(g);
    EpochState state;
    const auto [plan, next] = plan_dtur(g, path, state, times(1, {1.0, 1.0, 1.0}));
    EXPECT_EQ(*plan.established_edge, make_edge(0, 1));
    (void)next;
}

TEST(PlanDtur, ActiveSetsAreWorkersDoneByTheta) {
    dybw::straggler::DelayModel m;
    m.kind = dybw::straggler::DelayKind::kExponential;
    m.rate = 1.0;
    m.seed = 14;
    for (std::uint64_t gseed = 0; gseed < 15; ++gseed) {
        const Graph g =
            dybw::topology::generate_graph(6, dybw::topology::TopologyKind::kRandom, 0.5, gseed);
        const CoveragePath path = coverage_path(g);
        EpochState state;
        for (long k = 1; k <= 40; ++k) {
            const DelayDraw d = dybw::straggler::draw(m, k, 6);
            const auto [plan, next] = plan_dtur(g, path, state, d);
            const double theta = *plan.theta;
            const auto [ea, eb] = *plan.established_edge;
            EXPECT_LE(d.times[ea], theta);
            EXPECT_LE(d.times[eb], theta);
            for (int j = 0; j < 6; ++j) {
                if (d.times[j] <= theta) {
                    std::vector<int> want;
                    for (int i : g.neighbors(j)) {
                        if (d.times[i] <= theta) want.push_back(i);
                    }
                    EXPECT_EQ(plan.active_sets[j], want);
                } else {
                    EXPECT_TRUE(plan.active_sets[j].empty());
                }
            }
            state = next;
        }
    }
}

TEST(PlanDtur, EpochsCoverPathExactly) {
    for (std::uint64_t gseed = 0; gseed < 8; ++gseed) {
        const Graph g =
            dybw::topology::generate_graph(7, dybw::topology::TopologyKind::kRandom, 0.4,
                                           100 + gseed);
        const CoveragePath path = coverage_path(g);
        std::vector<Edge> want = path.links;
        std::sort(want.begin(), want.end());

        dybw::straggler::DelayModel m;
        m.kind = dybw::straggler::DelayKind::kLognormal;
        m.sigma = 1.2;
        m.seed = gseed;
        EpochState state;
        std::vector<Edge> epoch_links;
        int epochs_seen = 0;
        for (long k = 1; k <= 12L * path.length_d; ++k) {
            const auto [plan, next] = plan_dtur(g, path, state, dybw::straggler::draw(m, k, 7));
            epoch_links.push_back(*plan.established_edge);
            if (next.step_in_epoch == 1) {
                std::sort(epoch_links.begin(), epoch_links.end());
                EXPECT_EQ(epoch_links, want);
                epoch_links.clear();
                ++epochs_seen;
            }
            state = next;
        }
        EXPECT_EQ(epochs_seen, 12);
    }
}

TEST(PlanDtur, Validation) {
    const Graph g = path3();
    CoveragePath empty;
    EpochState state;
    EXPECT_THROW(plan_dtur(g, empty, state, times(1, {1, 1, 1})), std::invalid_argument);

    const CoveragePath path = coverage_path(g);
    EpochState overfull;
    overfull.covered = path.links;
    EXPECT_THROW(plan_dtur(g, path, overfull, times(1, {1, 1, 1})), std::logic_error);
}

TEST(EdgeSetOf, CollectsRealizedLinks) {
    ParticipationPlan plan;
    plan.active_sets = {{1, 2}, {0}, {0}};
    EXPECT_EQ(edge_set_of(plan), (std::vector<Edge>{{0, 1}, {0, 2}}));
    ParticipationPlan idle;
    idle.active_sets = {{}, {}};
    EXPECT_TRUE(edge_set_of(idle).empty());
}
