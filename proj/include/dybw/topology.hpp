#ifndef DYBW_TOPOLOGY_HPP
#define DYBW_TOPOLOGY_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dybw::topology {

// Undirected edge, normalized so first < second.
using Edge = std::pair<int, int>;

Edge make_edge(int i, int j);

// Static communication topology: worker indices 0..n-1 plus an undirected
// edge set. Construction validates (no self-loops, no duplicates, indices in
// range, connected); instances are immutable afterwards.
class Graph {
  public:
    Graph(int n_workers, std::vector<Edge> edges);

    int n_workers() const { return n_workers_; }
    const std::vector<Edge>& edges() const { return edges_; }
    // Neighbor indices of j, ascending; never contains j itself.
    const std::vector<int>& neighbors(int j) const;
    bool has_edge(int i, int j) const;
    int degree(int j) const { return static_cast<int>(neighbors(j).size()); }

    std::string to_json() const;
    static Graph from_json(const std::string& text);

  private:
    int n_workers_;
    std::vector<Edge> edges_;         // sorted, unique
    std::vector<std::vector<int>> adjacency_;
};

enum class TopologyKind { kRing, kPath, kComplete, kRandom };

TopologyKind topology_kind_from_string(const std::string& name);

// Ring/path/complete are deterministic; random(p) draws Erdos-Renyi edges on
// top of a random spanning-tree backbone so the result is always connected.
Graph generate_graph(int n, TopologyKind kind, double edge_probability, std::uint64_t seed);

// True iff a traversal from worker 0 reaches all workers (edge list form,
// used before a Graph can be constructed).
bool is_connected(int n_workers, const std::vector<Edge>& edges);
bool is_connected(const Graph& g);

// Ordered list of distinct links whose union touches every worker and forms
// a connected subgraph. length_d == links.size() is the epoch length d.
struct CoveragePath {
    std::vector<Edge> links;
    int length_d = 0;
};

// Minimum-length node-covering walk for n <= 10 (iterative deepening over
// walk steps, ties broken lexicographically); spanning-tree DFS fallback
// beyond that, giving d = n-1. The returned links are the walk's distinct
// edges in first-traversal order.
CoveragePath coverage_path(const Graph& g);

// Node sequence of the covering walk behind coverage_path; exposed so tests
// can compare its step count against an exhaustive oracle.
std::vector<int> covering_walk_nodes(const Graph& g);

// One edge set per iteration, e.g. the realized links of a scheduled run.
struct EdgeSetSequence {
    std::vector<std::vector<Edge>> sets;
};

// Bounded-connectivity check: every complete window [k*b, (k+1)*b) of the
// sequence must union to a connected graph on all workers.
bool check_b_connectivity(const Graph& g, const EdgeSetSequence& seq, int b);

}  // namespace dybw::topology

#endif  // DYBW_TOPOLOGY_HPP
