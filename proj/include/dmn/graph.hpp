#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmn {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unordered node pair, stored with u < v.
struct Link {
  int u = 0;
  int v = 0;

  Link() = default;
  Link(int a, int b);

  friend auto operator<=>(const Link&, const Link&) = default;
};

using LinkSet = std::vector<Link>;
using NodeSet = std::vector<int>;

// Simple undirected graph over nodes 0..n-1: adjacency matrix for lookups,
// sorted adjacency lists for traversal.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int nodes);
  Graph(int nodes, const std::vector<Link>& edges);

  int node_count() const { return n_; }
  std::size_t edge_count() const { return edges_; }

  bool has_edge(int u, int v) const { return adj_[index(u, v)] != 0; }
  void add_edge(int u, int v);
  void add_links(const LinkSet& links);

  // Neighbours in ascending order.
  const std::vector<int>& neighbours(int u) const { return nbrs_[u]; }
  // All edges in lexicographic order.
  std::vector<Link> edges() const;

  bool contains_edges_of(const Graph& other) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(u) * n_ + v; }

  int n_ = 0;
  std::size_t edges_ = 0;
  std::vector<char> adj_;
  std::vector<std::vector<int>> nbrs_;
};

struct ChordalityResult {
  bool chordal = false;
  // Perfect elimination ordering, present when chordal.
  std::vector<int> elimination_order;
};

// Maximum cardinality search (ties to the lowest index) followed by the
// zero fill-in test.
ChordalityResult is_chordal(const Graph& g);

// Brute force: enumerates every simple cycle of length >= 4 and looks for a
// chord. Exponential; limited to 10 nodes.
bool oracle_is_chordal(const Graph& g);

// Maximal cliques of a chordal graph, each sorted ascending, listed in
// lexicographic order. Throws GraphError if `order` is not a perfect
// elimination ordering of g.
std::vector<NodeSet> maximal_cliques(const Graph& g, const std::vector<int>& order);

struct ForestEdge {
  int a = 0;  // clique indices, a < b
  int b = 0;
  NodeSet sepset;
};

struct JunctionForest {
  std::vector<NodeSet> cliques;
  std::vector<ForestEdge> edges;

  std::vector<NodeSet> sepsets() const;
};

enum class TieBreak { lowest_pair, highest_pair };

// Maximum-weight spanning forest over cliques (weight = intersection size).
// Throws GraphError when the result violates the running intersection
// property, i.e. the cliques do not come from a chordal graph.
JunctionForest junction_forest(const std::vector<NodeSet>& cliques, TieBreak ties = TieBreak::lowest_pair);

// True when every pair of cliques in one tree has its intersection contained
// in each clique on the path between them, and cliques in different trees are
// disjoint.
bool satisfies_running_intersection(const JunctionForest& forest);

// Chordality + cliques + forest in one step; throws GraphError for
// non-chordal input.
JunctionForest build_forest(const Graph& g);

// First maximal clique of g_star (in clique order) with at most `eta` nodes
// containing both endpoints of every link in L.
std::optional<NodeSet> implied_by_single_clique(const Graph& g_star, const LinkSet& links, int eta);
std::optional<NodeSet> implied_by_single_clique(const std::vector<NodeSet>& cliques_of_g_star,
                                                const LinkSet& links, int eta);

std::string format_graph(const Graph& g);
Graph parse_graph(const std::string& text);
void write_graph(const Graph& g, const std::filesystem::path& path);
Graph read_graph(const std::filesystem::path& path);

}  // namespace dmn
