#include "dybw/scheduler.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dybw::scheduler {

ParticipationPlan plan_full(const topology::Graph& g, long k) {
    ParticipationPlan plan;
    plan.iteration = k;
    plan.active_sets.resize(g.n_workers());
    for (int j = 0; j < g.n_workers(); ++j) plan.active_sets[j] = g.neighbors(j);
    return plan;
}

ParticipationPlan plan_static_p(const topology::Graph& g, const straggler::DelayDraw& d,
                                const std::vector<int>& p) {
    const int n = g.n_workers();
    if (static_cast<int>(p.size()) != n) {
        throw std::invalid_argument("p must have one entry per worker");
    }
    if (static_cast<int>(d.times.size()) != n) {
        throw std::invalid_argument("delay draw does not match worker count");
    }
    for (int j = 0; j < n; ++j) {
        if (p[j] < 1 || p[j] > g.degree(j)) {
            throw std::invalid_argument("p out of range for worker " + std::to_string(j));
        }
    }

    // Each worker picks its p_j fastest neighbors, ties to the lower index.
    std::vector<std::vector<int>> wish(n);
    for (int j = 0; j < n; ++j) {
        std::vector<int> order = g.neighbors(j);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (d.times[a] != d.times[b]) return d.times[a] < d.times[b];
            return a < b;
        });
        wish[j].assign(order.begin(), order.begin() + p[j]);
        std::sort(wish[j].begin(), wish[j].end());
    }

    // Intersect-symmetrize: keep i in S_j only if j is also in S_i.
    ParticipationPlan plan;
    plan.iteration = d.iteration;
    plan.active_sets.resize(n);
    for (int j = 0; j < n; ++j) {
        for (int i : wish[j]) {
            if (std::binary_search(wish[i].begin(), wish[i].end(), j)) {
                plan.active_sets[j].push_back(i);
            }
        }
    }
    return plan;
}

std::pair<ParticipationPlan, EpochState> plan_dtur(const topology::Graph& g,
                                                   const topology::CoveragePath& path,
                                                   const EpochState& state,
                                                   const straggler::DelayDraw& d) {
    if (path.links.empty()) throw std::invalid_argument("coverage path is empty");
    const int n = g.n_workers();
    if (static_cast<int>(d.times.size()) != n) {
        throw std::invalid_argument("delay draw does not match worker count");
    }
    if (static_cast<int>(state.covered.size()) >= path.length_d) {
        throw std::logic_error("epoch state already covers the whole path");
    }

    // theta = earliest time an uncovered link has both endpoints finished.
    double theta = 0.0;
    std::optional<topology::Edge> established;
    for (const topology::Edge& link : path.links) {
        if (std::find(state.covered.begin(), state.covered.end(), link) != state.covered.end()) {
            continue;
        }
        const double ready = std::max(d.times[link.first], d.times[link.second]);
        if (!established || ready < theta || (ready == theta && link < *established)) {
            theta = ready;
            established = link;
        }
    }

    ParticipationPlan plan;
    plan.iteration = d.iteration;
    plan.theta = theta;
    plan.established_edge = established;
    plan.active_sets.resize(n);
    for (int j = 0; j < n; ++j) {
        if (d.times[j] > theta) continue;
        for (int i : g.neighbors(j)) {
            if (d.times[i] <= theta) plan.active_sets[j].push_back(i);
        }
    }

    EpochState next = state;
    next.covered.push_back(*established);
    next.step_in_epoch += 1;
    if (next.step_in_epoch > path.length_d) {
        next.covered.clear();
        next.step_in_epoch = 1;
        next.epoch_index += 1;
    }
    return {std::move(plan), std::move(next)};
}

std::vector<topology::Edge> edge_set_of(const ParticipationPlan& plan) {
    std::vector<topology::Edge> edges;
    for (int j = 0; j < static_cast<int>(plan.active_sets.size()); ++j) {
        for (int i : plan.active_sets[j]) {
            if (i < j) edges.push_back({i, j});
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

}  // namespace dybw::scheduler
