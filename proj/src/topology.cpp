#include "dybw/topology.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "dybw/rng.hpp"
#include "json.hpp"

namespace dybw::topology {

Edge make_edge(int i, int j) {
    if (i == j) throw std::invalid_argument("edge endpoints must differ");
    return i < j ? Edge{i, j} : Edge{j, i};
}

Graph::Graph(int n_workers, std::vector<Edge> edges) : n_workers_(n_workers) {
    if (n_workers < 2) throw std::invalid_argument("graph needs at least 2 workers");
    std::set<Edge> unique;
    for (const auto& [i, j] : edges) {
        if (i == j) throw std::invalid_argument("self-loop edge rejected");
        if (i < 0 || j < 0 || i >= n_workers || j >= n_workers)
            throw std::invalid_argument("edge index out of range");
        unique.insert(make_edge(i, j));
    }
    edges_.assign(unique.begin(), unique.end());
    if (!is_connected(n_workers_, edges_))
        throw std::invalid_argument("graph not connected");
    adjacency_.assign(n_workers_, {});
    for (const auto& [i, j] : edges_) {
        adjacency_[i].push_back(j);
        adjacency_[j].push_back(i);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

const std::vector<int>& Graph::neighbors(int j) const {
    if (j < 0 || j >= n_workers_) throw std::out_of_range("worker index out of range");
    return adjacency_[j];
}

bool Graph::has_edge(int i, int j) const {
    if (i == j) return false;
    const auto& nbrs = neighbors(i);
    return std::binary_search(nbrs.begin(), nbrs.end(), j);
}

std::string Graph::to_json() const {
    nlohmann::json doc;
    doc["n"] = n_workers_;
    auto& arr = doc["edges"] = nlohmann::json::array();
    for (const auto& [i, j] : edges_) arr.push_back({i, j});
    return doc.dump();
}

Graph Graph::from_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.contains("n") || !doc.contains("edges"))
        throw std::invalid_argument("graph document needs \"n\" and \"edges\"");
    std::vector<Edge> edges;
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2)
            throw std::invalid_argument("each edge must be a two-element array");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return Graph(doc["n"].get<int>(), std::move(edges));
}

TopologyKind topology_kind_from_string(const std::string& name) {
    if (name == "ring") return TopologyKind::kRing;
    if (name == "path") return TopologyKind::kPath;
    if (name == "complete") return TopologyKind::kComplete;
    if (name == "random") return TopologyKind::kRandom;
    throw std::invalid_argument("unknown topology kind: " + name);
}

Graph generate_graph(int n, TopologyKind kind, double edge_probability, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("graph needs at least 2 workers");
    std::vector<Edge> edges;
    switch (kind) {
        case TopologyKind::kPath:
            for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
            break;
        case TopologyKind::kRing:
            for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
            edges.push_back(make_edge(n - 1, 0));
            break;
        case TopologyKind::kComplete:
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
            break;
        case TopologyKind::kRandom: {
            if (!(edge_probability > 0.0 && edge_probability <= 1.0))
                throw std::invalid_argument("random topology needs p in (0,1]");
            auto stream = rng::Stream::make(seed, {rng::kTagGraph});
            // Random spanning-tree backbone on a shuffled labeling, then
            // independent edge coin flips on the remaining pairs.
            std::vector<int> order(n);
            std::iota(order.begin(), order.end(), 0);
            for (int i = n - 1; i > 0; --i)
                std::swap(order[i], order[stream.next_below(i + 1)]);
            std::set<Edge> picked;
            for (int i = 1; i < n; ++i) {
                int parent = order[stream.next_below(i)];
                picked.insert(make_edge(order[i], parent));
            }
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    double u = stream.next_unit();
                    if (u < edge_probability) picked.insert({i, j});
                }
            }
            edges.assign(picked.begin(), picked.end());
            break;
        }
    }
    return Graph(n, std::move(edges));
}

bool is_connected(int n_workers, const std::vector<Edge>& edges) {
    if (n_workers <= 0) return false;
    std::vector<std::vector<int>> adj(n_workers);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<char> seen(n_workers, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop();
        for (int w : adj[v]) {
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                frontier.push(w);
            }
        }
    }
    return reached == n_workers;
}

bool is_connected(const Graph& g) { return is_connected(g.n_workers(), g.edges()); }

namespace {

// Feasibility DP for the exact covering-walk search: can a walk standing at
// `node` with `mask` already visited cover everything in `steps_left` moves?
class WalkSearch {
  public:
    explicit WalkSearch(const Graph& g)
        : graph_(g), n_(g.n_workers()), full_mask_((1u << n_) - 1) {}

    bool feasible(int node, unsigned mask, int steps_left) {
        if (mask == full_mask_) return true;
        int missing = n_ - std::popcount(mask);
        if (steps_left < missing) return false;
        const std::size_t idx = key(node, mask, steps_left);
        if (memo_[idx] != 0) return memo_[idx] > 0;
        bool ok = false;
        for (int next : graph_.neighbors(node)) {
            if (feasible(next, mask | (1u << next), steps_left - 1)) {
                ok = true;
                break;
            }
        }
        memo_[idx] = ok ? 1 : -1;
        return ok;
    }

    // Lexicographically first covering walk of exactly `steps` edges, if one
    // exists: starts are tried in ascending node order, extensions in
    // ascending neighbor order.
    bool build(int steps, std::vector<int>& walk) {
        memo_.assign(static_cast<std::size_t>(n_) * (full_mask_ + 1) * (steps + 1), 0);
        for (int start = 0; start < n_; ++start) {
            if (!feasible(start, 1u << start, steps)) continue;
            walk.clear();
            walk.push_back(start);
            int node = start;
            unsigned mask = 1u << start;
            for (int left = steps; left > 0; --left) {
                for (int next : graph_.neighbors(node)) {
                    unsigned next_mask = mask | (1u << next);
                    if (feasible(next, next_mask, left - 1)) {
                        walk.push_back(next);
                        node = next;
                        mask = next_mask;
                        break;
                    }
                }
            }
            return true;
        }
        return false;
    }

  private:
    std::size_t key(int node, unsigned mask, int steps_left) const {
        return (static_cast<std::size_t>(steps_left) * (full_mask_ + 1) + mask) * n_ + node;
    }

    const Graph& graph_;
    int n_;
    unsigned full_mask_;
    std::vector<signed char> memo_;
};

std::vector<int> spanning_tree_walk(const Graph& g) {
    // BFS tree from worker 0 (neighbors ascending), then a DFS traversal of
    // the tree; each tree edge appears when first crossed.
    const int n = g.n_workers();
    std::vector<std::vector<int>> children(n);
    std::vector<char> seen(n, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop();
        for (int w : g.neighbors(v)) {
            if (!seen[w]) {
                seen[w] = 1;
                children[v].push_back(w);
                frontier.push(w);
            }
        }
    }
    std::vector<int> walk;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    walk.push_back(0);
    while (!stack.empty()) {
        auto& [v, idx] = stack.back();
        if (idx < children[v].size()) {
            int child = children[v][idx++];
            walk.push_back(child);
            stack.push_back({child, 0});
        } else {
            stack.pop_back();
            if (!stack.empty()) walk.push_back(stack.back().first);
        }
    }
    return walk;
}

}  // namespace

std::vector<int> covering_walk_nodes(const Graph& g) {
    if (!is_connected(g)) throw std::invalid_argument("coverage path needs a connected graph");
    const int n = g.n_workers();
    if (n > 10) return spanning_tree_walk(g);
    WalkSearch search(g);
    std::vector<int> walk;
    for (int steps = n - 1; steps <= 2 * (n - 1); ++steps) {
        if (search.build(steps, walk)) return walk;
    }
    // A DFS walk of any spanning tree uses at most 2(n-1) steps, so the
    // deepening loop cannot fall through on a connected graph.
    throw std::logic_error("covering walk search exhausted its bound");
}

CoveragePath coverage_path(const Graph& g) {
    std::vector<int> walk = covering_walk_nodes(g);
    CoveragePath path;
    std::set<Edge> seen;
    for (std::size_t i = 0; i + 1 < walk.size(); ++i) {
        Edge e = make_edge(walk[i], walk[i + 1]);
        if (seen.insert(e).second) path.links.push_back(e);
    }
    path.length_d = static_cast<int>(path.links.size());
    return path;
}

bool check_b_connectivity(const Graph& g, const EdgeSetSequence& seq, int b) {
    if (seq.sets.empty()) throw std::invalid_argument("empty edge-set sequence");
    if (b < 1) throw std::invalid_argument("connectivity window must be positive");
    for (const auto& set : seq.sets) {
        for (const auto& [i, j] : set) {
            if (!g.has_edge(i, j))
                throw std::invalid_argument("sequence contains a non-graph edge");
        }
    }
    const std::size_t count = seq.sets.size();
    for (std::size_t start = 0; start + b <= count; start += b) {
        std::set<Edge> window;
        for (std::size_t t = start; t < start + b; ++t)
            window.insert(seq.sets[t].begin(), seq.sets[t].end());
        std::vector<Edge> edges(window.begin(), window.end());
        if (!is_connected(g.n_workers(), edges)) return false;
    }
    return true;
}

}  // namespace dybw::topology
