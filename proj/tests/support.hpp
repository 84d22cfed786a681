#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "dmn/data.hpp"
#include "dmn/graph.hpp"
#include "dmn/modelgen.hpp"
#include "dmn/rng.hpp"

namespace dmn::test {

inline FrequencyTable table1_data(double total = 10000) { return expected_counts(table1_model(), total); }

inline int below(SplitMix64& rng, int n) { return static_cast<int>(rng.next() % static_cast<std::uint64_t>(n)); }

// Random table over `k` variables with cardinalities in [2, max_card].
inline FrequencyTable random_table(SplitMix64& rng, int k, int rows, int max_card = 3, bool fractional = false) {
  std::vector<Variable> vars;
  for (int i = 0; i < k; ++i) vars.push_back({"V" + std::to_string(i), 2 + below(rng, max_card - 1)});
  std::map<Config, std::int64_t> cells;
  for (int r = 0; r < rows; ++r) {
    Config c;
    for (const auto& v : vars) c.push_back(static_cast<std::uint8_t>(below(rng, v.cardinality)));
    cells[c] += fractional ? 1 + below(rng, 5'000'000) : Count::kScale * (1 + below(rng, 9));
  }
  std::vector<FrequencyTable::Row> out;
  for (auto& [c, n] : cells) out.push_back({c, Count::from_micros(n)});
  return FrequencyTable(Scheme(std::move(vars)), std::move(out));
}

// Chordal graph grown by repeatedly attaching a new node to a clique of the
// current graph (or to nothing).
inline Graph random_chordal(SplitMix64& rng, int nodes, int max_attach = 3) {
  Graph g(nodes);
  std::vector<int> perm(nodes);
  for (int i = 0; i < nodes; ++i) perm[i] = i;
  for (int i = nodes - 1; i > 0; --i) std::swap(perm[i], perm[below(rng, i + 1)]);
  for (int i = 1; i < nodes; ++i) {
    if (below(rng, 4) == 0) continue;
    // Neighbourhood: a random node plus some of its earlier neighbours that
    // form a clique with it.
    int anchor = perm[below(rng, i)];
    std::vector<int> attach{anchor};
    for (int j = 0; j < i; ++j) {
      int w = perm[j];
      if (w == anchor || static_cast<int>(attach.size()) >= max_attach || below(rng, 2)) continue;
      bool clique = std::all_of(attach.begin(), attach.end(), [&](int a) { return g.has_edge(a, w); });
      if (clique) attach.push_back(w);
    }
    for (int a : attach) g.add_edge(std::min(a, perm[i]), std::max(a, perm[i]));
  }
  return g;
}

inline Graph random_graph(SplitMix64& rng, int nodes, int percent) {
  Graph g(nodes);
  for (int u = 0; u < nodes; ++u)
    for (int v = u + 1; v < nodes; ++v)
      if (below(rng, 100) < percent) g.add_edge(u, v);
  return g;
}

// Entropy in bits of the empirical distribution over `vars`, straight from
// the rows with a std::map.
inline double oracle_entropy(const FrequencyTable& t, const std::vector<int>& vars) {
  if (vars.empty()) return 0.0;
  std::map<Config, double> cells;
  double total = 0.0;
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    Config c;
    for (int v : vars) c.push_back(t.config(r)[v]);
    cells[c] += t.count(r).value();
    total += t.count(r).value();
  }
  double h = 0.0;
  for (auto& [c, n] : cells)
    if (n > 0) h -= n / total * std::log2(n / total);
  return h;
}

// Maximal cliques by subset enumeration.
inline std::vector<NodeSet> brute_cliques(const Graph& g) {
  const int n = g.node_count();
  std::vector<unsigned> cliques;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    bool ok = true;
    for (int u = 0; u < n && ok; ++u)
      for (int v = u + 1; v < n && ok; ++v)
        if ((mask >> u & 1) && (mask >> v & 1) && !g.has_edge(u, v)) ok = false;
    if (ok) cliques.push_back(mask);
  }
  std::vector<NodeSet> out;
  for (unsigned c : cliques) {
    bool maximal = std::none_of(cliques.begin(), cliques.end(), [&](unsigned d) { return d != c && (d & c) == c; });
    if (!maximal) continue;
    NodeSet s;
    for (int u = 0; u < n; ++u)
      if (c >> u & 1) s.push_back(u);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Chain rule along the reversed elimination order: each node is conditioned
// on its neighbours eliminated after it.
inline double oracle_model_entropy(const Graph& g, const FrequencyTable& t) {
  auto r = is_chordal(g);
  if (!r.chordal) throw GraphError("oracle_model_entropy: not chordal");
  std::vector<int> pos(g.node_count());
  for (std::size_t i = 0; i < r.elimination_order.size(); ++i) pos[r.elimination_order[i]] = static_cast<int>(i);
  double h = 0.0;
  for (int v = 0; v < g.node_count(); ++v) {
    std::vector<int> later;
    for (int w : g.neighbours(v))
      if (pos[w] > pos[v]) later.push_back(w);
    std::vector<int> with = later;
    with.push_back(v);
    std::sort(with.begin(), with.end());
    h += test::oracle_entropy(t, with) - test::oracle_entropy(t, later);
  }
  return h;
}

struct OracleStep {
  LinkSet links;
  double dh = 0.0;
};

// Add-only lookahead search written from scratch: brute-force chordality and
// cliques, entropies from raw rows, every i-subset of non-edges tried.
inline std::vector<OracleStep> oracle_learn(const FrequencyTable& t, int eta, int kappa, double delta_h,
                                            Graph* final_graph = nullptr) {
  const int n = static_cast<int>(t.scheme().size());
  Graph g(n);
  std::vector<OracleStep> steps;
  for (int level = 1; level <= kappa; ++level) {
    for (;;) {
      std::vector<Link> free;
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
          if (!g.has_edge(u, v)) free.emplace_back(u, v);
      if (static_cast<int>(free.size()) < level) break;
      const double h = oracle_model_entropy(g, t);
      std::optional<OracleStep> best;
      std::vector<int> pick(level);
      for (int i = 0; i < level; ++i) pick[i] = i;
      for (;;) {
        LinkSet links;
        for (int i : pick) links.push_back(free[i]);
        Graph star = g;
        star.add_links(links);
        if (oracle_is_chordal(star)) {
          bool implied = false;
          for (const auto& c : brute_cliques(star)) {
            if (static_cast<int>(c.size()) > eta) continue;
            bool all = std::all_of(links.begin(), links.end(), [&](const Link& l) {
              return std::binary_search(c.begin(), c.end(), l.u) && std::binary_search(c.begin(), c.end(), l.v);
            });
            if (all) implied = true;
          }
          if (implied) {
            const double dh = h - oracle_model_entropy(star, t);
            if (!best || dh > best->dh + 1e-12) best = OracleStep{links, dh};
          }
        }
        int i = level - 1;
        while (i >= 0 && pick[i] == static_cast<int>(free.size()) - level + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < level; ++j) pick[j] = pick[j - 1] + 1;
      }
      if (!best || !(best->dh > delta_h)) break;
      g.add_links(best->links);
      steps.push_back(*best);
    }
  }
  if (final_graph) *final_graph = g;
  return steps;
}

}  // namespace dmn::test
