#include "dybw/consensus.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "dybw/rng.hpp"
#include "dybw/topology.hpp"

using namespace dybw::consensus;
using dybw::topology::Edge;
using dybw::topology::Graph;

namespace {

std::vector<std::vector<int>> full_sets(const Graph& g) {
    std::vector<std::vector<int>> sets(g.n_workers());
    for (int j = 0; j < g.n_workers(); ++j) sets[j] = g.neighbors(j);
    return sets;
}

// Active sets induced by an edge subset; mutually consistent by construction.
std::vector<std::vector<int>> sets_from_edges(int n, const std::vector<Edge>& edges) {
    std::vector<std::vector<int>> sets(n);
    for (const auto& [a, b] : edges) {
        sets[a].push_back(b);
        sets[b].push_back(a);
    }
    return sets;
}

}  // namespace

TEST(Metropolis, PathGraphFullParticipation) {
    const Graph g(3, {{0, 1}, {1, 2}});
    const MixingMatrix m = build_metropolis(g, full_sets(g), 1);
    // Degrees 1,2,1; shared weight 1/(1+2) on both links, residual diagonal.
    const double third = 1.0 / 3.0;
    EXPECT_DOUBLE_EQ(m.entries(0, 0), 1.0 - third);
    EXPECT_DOUBLE_EQ(m.entries(0, 1), third);
    EXPECT_DOUBLE_EQ(m.entries(0, 2), 0.0);
    EXPECT_DOUBLE_EQ(m.entries(1, 1), third);
    EXPECT_DOUBLE_EQ(m.entries(1, 2), third);
    EXPECT_DOUBLE_EQ(m.entries(2, 2), 1.0 - third);
    EXPECT_TRUE(is_symmetric(m.entries));
    EXPECT_TRUE(is_doubly_stochastic(m.entries, 1e-12));
    EXPECT_EQ(m.iteration, 1);
}

TEST(Metropolis, InactiveWorkerKeepsIdentityRow) {
    const Graph g(3, {{0, 1}, {1, 2}});
    std::vector<std::vector<int>> sets = {{1}, {0}, {}};  // worker 2 sits out
    const MixingMatrix m = build_metropolis(g, sets, 4);
    EXPECT_DOUBLE_EQ(m.entries(2, 2), 1.0);
    EXPECT_DOUBLE_EQ(m.entries(2, 0), 0.0);
    EXPECT_DOUBLE_EQ(m.entries(2, 1), 0.0);
    EXPECT_DOUBLE_EQ(m.entries(0, 1), 0.5);  // p_0 = p_1 = 1
    EXPECT_DOUBLE_EQ(m.entries(0, 0), 0.5);
    EXPECT_TRUE(is_doubly_stochastic(m.entries, 1e-12));
}

TEST(Metropolis, RejectsInconsistentSets) {
    const Graph g(3, {{0, 1}, {1, 2}});
    EXPECT_THROW(build_metropolis(g, {{1}, {}, {}}, 0), std::invalid_argument);   // asymmetric
    EXPECT_THROW(build_metropolis(g, {{2}, {}, {0}}, 0), std::invalid_argument);  // non-neighbor
    EXPECT_THROW(build_metropolis(g, {{0}, {}, {}}, 0), std::invalid_argument);   // self
    EXPECT_THROW(build_metropolis(g, {{3}, {}, {}}, 0), std::invalid_argument);   // out of range
    EXPECT_THROW(build_metropolis(g, {{}, {}}, 0), std::invalid_argument);        // wrong size
}

TEST(Metropolis, RandomActiveSetsAlwaysDoublyStochastic) {
    dybw::rng::Stream s = dybw::rng::Stream::make(17, {3});
    for (int trial = 0; trial < 100; ++trial) {
        const Graph g = dybw::topology::generate_graph(
            4 + static_cast<int>(s.next_below(5)), dybw::topology::TopologyKind::kRandom, 0.5,
            s.next_u64());
        std::vector<Edge> subset;
        for (const Edge& e : g.edges()) {
            if (s.next_unit() < 0.5) subset.push_back(e);
        }
        const MixingMatrix m = build_metropolis(g, sets_from_edges(g.n_workers(), subset), trial);
        EXPECT_TRUE(is_symmetric(m.entries));
        EXPECT_TRUE(is_doubly_stochastic(m.entries, 1e-12));
    }
}

TEST(ProductChain, IdentityStart) {
    const ProductChain chain = chain_identity(3, 1);
    EXPECT_EQ(chain.start_s, 1);
    EXPECT_EQ(chain.end_k, 0);
    EXPECT_DOUBLE_EQ(chain.beta, 1.0);
    // Identity is as far from uniform as it gets: |1 - 1/3|.
    EXPECT_DOUBLE_EQ(consensus_deviation(chain), 2.0 / 3.0);
}

TEST(ProductChain, SquareOfPathMatrixMatchesHandComputation) {
    const Graph g(3, {{0, 1}, {1, 2}});
    const MixingMatrix p1 = build_metropolis(g, full_sets(g), 1);
    MixingMatrix p2 = p1;
    p2.iteration = 2;
    ProductChain chain = chain_identity(3, 1);
    chain = multiply_chain(chain, p1);
    chain = multiply_chain(chain, p2);
    // P^2 for P = [[2/3,1/3,0],[1/3,1/3,1/3],[0,1/3,2/3]].
    const double want[3][3] = {{5.0 / 9.0, 1.0 / 3.0, 1.0 / 9.0},
                               {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                               {1.0 / 9.0, 1.0 / 3.0, 5.0 / 9.0}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(chain.phi(i, j), want[i][j], 1e-15);
    }
    EXPECT_EQ(chain.end_k, 2);
    EXPECT_NEAR(chain.beta, 1.0 / 3.0, 1e-15);
}

TEST(ProductChain, RejectsIterationGap) {
    const Graph g(3, {{0, 1}, {1, 2}});
    const MixingMatrix p5 = build_metropolis(g, full_sets(g), 5);
    ProductChain chain = chain_identity(3, 1);
    EXPECT_THROW(multiply_chain(chain, p5), std::invalid_argument);
}

TEST(ProductChain, DeviationNeverIncreases) {
    dybw::rng::Stream s = dybw::rng::Stream::make(23, {7});
    const Graph g = dybw::topology::generate_graph(5, dybw::topology::TopologyKind::kRandom, 0.5,
                                                   99);
    ProductChain chain = chain_identity(5, 1);
    double last = consensus_deviation(chain);
    for (long k = 1; k <= 200; ++k) {
        std::vector<Edge> subset;
        for (const Edge& e : g.edges()) {
            if (s.next_unit() < 0.5) subset.push_back(e);
        }
        const MixingMatrix m = build_metropolis(g, sets_from_edges(5, subset), k);
        chain = multiply_chain(chain, m);
        const double dev = consensus_deviation(chain);
        EXPECT_LE(dev, last + 1e-15);
        last = dev;
    }
}

TEST(Lemma2Bound, FrozenValue) {
    // beta = 1/3, n*b = 6, k-s = 6: the constant and the decay factor cancel
    // to exactly 1460.
    ProductChain chain = chain_identity(3, 1);
    chain.beta = 1.0 / 3.0;
    chain.end_k = 7;  // end_k - start_s = 6
    EXPECT_NEAR(lemma2_bound(chain, 3, 2), 1460.0, 1e-9);
}

TEST(Lemma2Bound, Validation) {
    ProductChain fresh = chain_identity(3, 1);
    EXPECT_THROW(lemma2_bound(fresh, 3, 2), std::domain_error);  // beta still 1
    fresh.beta = 0.5;
    EXPECT_THROW(lemma2_bound(fresh, 0, 2), std::invalid_argument);
    EXPECT_THROW(lemma2_bound(fresh, 3, 0), std::invalid_argument);
}

TEST(Lemma2Bound, DominatesObservedDeviation) {
    const Graph g(3, {{0, 1}, {1, 2}});
    ProductChain chain = chain_identity(3, 1);
    for (long k = 1; k <= 60; ++k) {
        const MixingMatrix m = build_metropolis(g, full_sets(g), k);
        chain = multiply_chain(chain, m);
        EXPECT_LE(consensus_deviation(chain), lemma2_bound(chain, 3, 1));
    }
    // Full participation mixes the 3-path to uniform quickly.
    EXPECT_LT(consensus_deviation(chain), 1e-6);
}

TEST(SquareMatrix, MultiplySizeMismatch) {
    EXPECT_THROW(SquareMatrix(2).multiplied_by(SquareMatrix(3)), std::invalid_argument);
}
