#include "dmn/graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace dmn {

Link::Link(int a, int b) : u(std::min(a, b)), v(std::max(a, b)) {
  if (a == b) throw GraphError("self-loop link " + std::to_string(a));
}

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(int nodes) {
  if (nodes < 0) throw GraphError("negative node count");
  n_ = nodes;
  adj_.assign(static_cast<std::size_t>(nodes) * nodes, 0);
  nbrs_.resize(nodes);
}

Graph::Graph(int nodes, const std::vector<Link>& edges) : Graph(nodes) {
  for (const auto& e : edges) add_edge(e.u, e.v);
}

void Graph::add_edge(int u, int v) {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) throw GraphError("edge endpoint out of range");
  if (u == v) throw GraphError("self-loop on node " + std::to_string(u));
  if (has_edge(u, v)) throw GraphError("duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
  adj_[index(u, v)] = adj_[index(v, u)] = 1;
  nbrs_[u].insert(std::upper_bound(nbrs_[u].begin(), nbrs_[u].end(), v), v);
  nbrs_[v].insert(std::upper_bound(nbrs_[v].begin(), nbrs_[v].end(), u), u);
  ++edges_;
}

void Graph::add_links(const LinkSet& links) {
  for (const auto& l : links) add_edge(l.u, l.v);
}

std::vector<Link> Graph::edges() const {
  std::vector<Link> out;
  out.reserve(edges_);
  for (int u = 0; u < n_; ++u)
    for (int v : nbrs_[u])
      if (v > u) out.emplace_back(u, v);
  return out;
}

bool Graph::contains_edges_of(const Graph& other) const {
  if (other.n_ != n_) return false;
  for (std::size_t i = 0; i < adj_.size(); ++i)
    if (other.adj_[i] && !adj_[i]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Chordality

namespace {

// Later neighbours of each node with respect to `position`.
std::vector<std::vector<int>> later_neighbours(const Graph& g, const std::vector<int>& order,
                                               const std::vector<int>& position) {
  std::vector<std::vector<int>> later(g.node_count());
  for (int v : order)
    for (int w : g.neighbours(v))
      if (position[w] > position[v]) later[v].push_back(w);
  return later;
}

// Zero fill-in test: each node's later neighbours, minus the earliest one,
// must all be adjacent to that earliest one.
bool is_perfect_elimination(const Graph& g, const std::vector<int>& order) {
  const int n = g.node_count();
  if (static_cast<int>(order.size()) != n) return false;
  std::vector<int> position(n, -1);
  for (int i = 0; i < n; ++i) {
    if (order[i] < 0 || order[i] >= n || position[order[i]] != -1) return false;
    position[order[i]] = i;
  }
  auto later = later_neighbours(g, order, position);
  for (int v = 0; v < n; ++v) {
    if (later[v].size() < 2) continue;
    int follow = *std::min_element(later[v].begin(), later[v].end(),
                                   [&](int a, int b) { return position[a] < position[b]; });
    for (int w : later[v])
      if (w != follow && !g.has_edge(follow, w)) return false;
  }
  return true;
}

}  // namespace

ChordalityResult is_chordal(const Graph& g) {
  const int n = g.node_count();
  std::vector<int> weight(n, 0);
  std::vector<char> numbered(n, 0);
  std::vector<int> visit;
  visit.reserve(n);
  // Max-heap on (weight, lowest index) with stale entries skipped.
  std::vector<std::pair<int, int>> heap;
  heap.reserve(static_cast<std::size_t>(n) + 2 * g.edge_count());
  for (int v = 0; v < n; ++v) heap.emplace_back(0, -v);
  std::make_heap(heap.begin(), heap.end());
  while (static_cast<int>(visit.size()) < n) {
    std::pop_heap(heap.begin(), heap.end());
    auto [w, neg] = heap.back();
    heap.pop_back();
    const int best = -neg;
    if (numbered[best] || w != weight[best]) continue;
    numbered[best] = 1;
    visit.push_back(best);
    for (int x : g.neighbours(best))
      if (!numbered[x]) {
        heap.emplace_back(++weight[x], -x);
        std::push_heap(heap.begin(), heap.end());
      }
  }
  std::vector<int> order(visit.rbegin(), visit.rend());
  if (!is_perfect_elimination(g, order)) return {false, {}};
  return {true, std::move(order)};
}

bool oracle_is_chordal(const Graph& g) {
  const int n = g.node_count();
  if (n > 10) throw GraphError("oracle_is_chordal is limited to 10 nodes");
  std::vector<int> path;
  std::vector<char> on_path(n, 0);
  bool chordless_found = false;

  auto has_chord = [&](const std::vector<int>& cycle) {
    const std::size_t k = cycle.size();
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 2; j < k; ++j) {
        if (i == 0 && j == k - 1) continue;
        if (g.has_edge(cycle[i], cycle[j])) return true;
      }
    return false;
  };

  // Cycles are rooted at their smallest node so each is visited from one start.
  std::function<void(int, int)> extend = [&](int start, int cur) {
    if (chordless_found) return;
    for (int next = start + 1; next < n; ++next) {
      if (!g.has_edge(cur, next) || on_path[next]) continue;
      path.push_back(next);
      on_path[next] = 1;
      if (path.size() >= 4 && g.has_edge(next, start) && !has_chord(path)) chordless_found = true;
      extend(start, next);
      on_path[next] = 0;
      path.pop_back();
    }
  };
  for (int s = 0; s < n && !chordless_found; ++s) {
    path = {s};
    on_path[s] = 1;
    extend(s, s);
    on_path[s] = 0;
  }
  return !chordless_found;
}

std::vector<NodeSet> maximal_cliques(const Graph& g, const std::vector<int>& order) {
  const int n = g.node_count();
  if (!is_perfect_elimination(g, order)) throw GraphError("order is not a perfect elimination ordering");
  std::vector<int> position(n);
  for (int i = 0; i < n; ++i) position[order[i]] = i;
  auto later = later_neighbours(g, order, position);

  // C_v = {v} + later(v). C_f is contained in C_u exactly when f is u's
  // earliest later neighbour and |later(f)| = |later(u)| - 1.
  std::vector<char> maximal(n, 1);
  for (int u = 0; u < n; ++u) {
    if (later[u].empty()) continue;
    int follow = *std::min_element(later[u].begin(), later[u].end(),
                                   [&](int a, int b) { return position[a] < position[b]; });
    if (later[follow].size() + 1 == later[u].size()) maximal[follow] = 0;
  }
  std::vector<NodeSet> cliques;
  for (int v = 0; v < n; ++v) {
    if (!maximal[v]) continue;
    NodeSet c = later[v];
    c.push_back(v);
    std::sort(c.begin(), c.end());
    cliques.push_back(std::move(c));
  }
  std::sort(cliques.begin(), cliques.end());
  return cliques;
}

// ---------------------------------------------------------------------------
// Junction forests

namespace {

NodeSet intersect(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool includes(const NodeSet& big, const NodeSet& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

std::vector<NodeSet> JunctionForest::sepsets() const {
  std::vector<NodeSet> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.sepset);
  return out;
}

JunctionForest junction_forest(const std::vector<NodeSet>& cliques, TieBreak ties) {
  struct Candidate {
    std::size_t weight;
    int a, b;
  };
  const int c = static_cast<int>(cliques.size());
  // Only pairs sharing a node can carry weight.
  int nodes = 0;
  for (const auto& k : cliques)
    for (int v : k) nodes = std::max(nodes, v + 1);
  std::vector<std::vector<int>> holders(nodes);
  for (int a = 0; a < c; ++a)
    for (int v : cliques[a]) holders[v].push_back(a);
  std::vector<std::pair<int, int>> pairs;
  for (const auto& h : holders)
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t j = i + 1; j < h.size(); ++j) pairs.emplace_back(h[i], h[j]);
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<Candidate> candidates;
  for (auto [a, b] : pairs) candidates.push_back({intersect(cliques[a], cliques[b]).size(), a, b});
  std::stable_sort(candidates.begin(), candidates.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (ties == TieBreak::lowest_pair) return std::pair(x.a, x.b) < std::pair(y.a, y.b);
    return std::pair(x.a, x.b) > std::pair(y.a, y.b);
  });

  std::vector<int> parent(c);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };

  JunctionForest forest;
  forest.cliques = cliques;
  for (const auto& cand : candidates) {
    int ra = root(cand.a), rb = root(cand.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    forest.edges.push_back({cand.a, cand.b, intersect(cliques[cand.a], cliques[cand.b])});
  }
  std::sort(forest.edges.begin(), forest.edges.end(),
            [](const ForestEdge& x, const ForestEdge& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  if (!satisfies_running_intersection(forest))
    throw GraphError("cliques admit no junction forest (running intersection fails)");
  return forest;
}

// For a forest, RIP holds exactly when the cliques containing each node v
// induce a connected subgraph: the edges whose endpoints both contain v
// number one less than the cliques containing v.
bool satisfies_running_intersection(const JunctionForest& forest) {
  const int c = static_cast<int>(forest.cliques.size());
  std::vector<int> parent(c);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
  int nodes = 0;
  for (const auto& k : forest.cliques)
    for (int v : k) nodes = std::max(nodes, v + 1);
  std::vector<int> holders(nodes, 0), links(nodes, 0);
  for (const auto& k : forest.cliques)
    for (int v : k) ++holders[v];
  for (const auto& e : forest.edges) {
    if (e.a < 0 || e.b < 0 || e.a >= c || e.b >= c || e.a == e.b) return false;
    int ra = root(e.a), rb = root(e.b);
    if (ra == rb) return false;
    parent[ra] = rb;
    for (int v : intersect(forest.cliques[e.a], forest.cliques[e.b])) ++links[v];
  }
  for (int v = 0; v < nodes; ++v)
    if (holders[v] > 0 && links[v] != holders[v] - 1) return false;
  return true;
}

JunctionForest build_forest(const Graph& g) {
  auto chordal = is_chordal(g);
  if (!chordal.chordal) throw GraphError("graph is not chordal");
  return junction_forest(maximal_cliques(g, chordal.elimination_order));
}

std::optional<NodeSet> implied_by_single_clique(const std::vector<NodeSet>& cliques, const LinkSet& links,
                                                int eta) {
  NodeSet ends;
  for (const auto& l : links) {
    ends.push_back(l.u);
    ends.push_back(l.v);
  }
  std::sort(ends.begin(), ends.end());
  ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
  for (const auto& c : cliques)
    if (static_cast<int>(c.size()) <= eta && includes(c, ends)) return c;
  return std::nullopt;
}

std::optional<NodeSet> implied_by_single_clique(const Graph& g_star, const LinkSet& links, int eta) {
  auto chordal = is_chordal(g_star);
  if (!chordal.chordal) throw GraphError("implied_by_single_clique requires a chordal graph");
  return implied_by_single_clique(maximal_cliques(g_star, chordal.elimination_order), links, eta);
}

// ---------------------------------------------------------------------------
// Text format

std::string format_graph(const Graph& g) {
  std::ostringstream out;
  out << "dmn-graph v1\n" << g.node_count() << "\n";
  for (const auto& e : g.edges()) out << e.u << " " << e.v << "\n";
  return out.str();
}

Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "dmn-graph v1") throw GraphError("malformed graph: expected 'dmn-graph v1'");
  int n = -1;
  if (!std::getline(in, line) || !(std::istringstream(line) >> n) || n < 0)
    throw GraphError("malformed graph: expected node count");
  Graph g(n);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    int u, v;
    if (!(row >> u)) continue;
    if (!(row >> v)) throw GraphError("malformed graph edge line '" + line + "'");
    g.add_edge(u, v);
  }
  return g;
}

void write_graph(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw GraphError("cannot write graph '" + path.string() + "'");
  out << format_graph(g);
}

Graph read_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph(buf.str());
}

}  // namespace dmn
