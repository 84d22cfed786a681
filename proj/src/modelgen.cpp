#include "dmn/modelgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dmn/graph.hpp"
#include "dmn/rng.hpp"

namespace dmn {

namespace {

constexpr std::size_t kMaxFactorSize = std::size_t{1} << 24;

std::size_t space_of(const std::vector<int>& cards) {
  std::size_t s = 1;
  for (int c : cards) {
    if (s > kMaxFactorSize / static_cast<std::size_t>(c)) throw ModelError("probability table too large");
    s *= static_cast<std::size_t>(c);
  }
  return s;
}

// Dense factor over variables in ascending index order.
struct Factor {
  VarSubset vars;
  std::vector<int> cards;
  std::vector<double> values;
};

std::vector<std::size_t> strides_of(const std::vector<int>& cards) {
  std::vector<std::size_t> stride(cards.size());
  std::size_t s = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    stride[i] = s;
    s *= static_cast<std::size_t>(cards[i]);
  }
  return stride;
}

// Re-expresses `table` (over `vars` in the given order) on `target` order,
// summing out variables of `vars` that are not in `target`.
std::vector<double> marginalize(const VarSubset& vars, const std::vector<int>& cards,
                                const std::vector<double>& table, const VarSubset& target,
                                std::vector<int>* target_cards = nullptr) {
  std::vector<int> tcards;
  for (int t : target) {
    auto it = std::find(vars.begin(), vars.end(), t);
    if (it == vars.end()) throw ModelError("marginal variable not in table");
    tcards.push_back(cards[it - vars.begin()]);
  }
  auto tstride = strides_of(tcards);
  // Contribution of each source position to the target key.
  std::vector<std::size_t> weight(vars.size(), 0);
  for (std::size_t i = 0; i < target.size(); ++i)
    weight[std::find(vars.begin(), vars.end(), target[i]) - vars.begin()] = tstride[i];
  std::vector<double> out(space_of(tcards), 0.0);
  std::vector<int> digit(vars.size(), 0);
  std::size_t key = 0;
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    out[key] += table[idx];
    for (std::size_t p = vars.size(); p-- > 0;) {
      if (++digit[p] < cards[p]) {
        key += weight[p];
        break;
      }
      key -= weight[p] * static_cast<std::size_t>(cards[p] - 1);
      digit[p] = 0;
    }
  }
  if (target_cards) *target_cards = tcards;
  return out;
}

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
  std::vector<std::size_t> wa(out.vars.size(), 0), wb(out.vars.size(), 0);
  auto sa = strides_of(a.cards), sb = strides_of(b.cards);
  for (std::size_t i = 0; i < out.vars.size(); ++i) {
    const int v = out.vars[i];
    auto ia = std::find(a.vars.begin(), a.vars.end(), v);
    auto ib = std::find(b.vars.begin(), b.vars.end(), v);
    if (ia != a.vars.end()) {
      out.cards.push_back(a.cards[ia - a.vars.begin()]);
      wa[i] = sa[ia - a.vars.begin()];
    } else {
      out.cards.push_back(b.cards[ib - b.vars.begin()]);
    }
    if (ib != b.vars.end()) wb[i] = sb[ib - b.vars.begin()];
  }
  out.values.assign(space_of(out.cards), 0.0);
  std::vector<int> digit(out.vars.size(), 0);
  std::size_t ka = 0, kb = 0;
  for (std::size_t idx = 0; idx < out.values.size(); ++idx) {
    out.values[idx] = a.values[ka] * b.values[kb];
    for (std::size_t p = out.vars.size(); p-- > 0;) {
      if (++digit[p] < out.cards[p]) {
        ka += wa[p];
        kb += wb[p];
        break;
      }
      ka -= wa[p] * static_cast<std::size_t>(out.cards[p] - 1);
      kb -= wb[p] * static_cast<std::size_t>(out.cards[p] - 1);
      digit[p] = 0;
    }
  }
  return out;
}

Factor sum_out(const Factor& f, int var) {
  Factor out;
  for (std::size_t i = 0; i < f.vars.size(); ++i)
    if (f.vars[i] != var) {
      out.vars.push_back(f.vars[i]);
      out.cards.push_back(f.cards[i]);
    }
  out.values = marginalize(f.vars, f.cards, f.values, out.vars);
  return out;
}

Factor cluster_factor(const Cluster& c, const Scheme& scheme) {
  Factor f;
  f.vars = c.members;
  std::sort(f.vars.begin(), f.vars.end());
  std::vector<int> member_cards;
  for (int v : c.members) member_cards.push_back(scheme.cardinality(v));
  f.values = marginalize(c.members, member_cards, c.table, f.vars, &f.cards);
  return f;
}

VarSubset sorted_members(const Cluster& c) {
  VarSubset m = c.members;
  std::sort(m.begin(), m.end());
  return m;
}

VarSubset intersection(const Cluster& a, const Cluster& b) {
  VarSubset x = sorted_members(a), y = sorted_members(b), out;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

std::vector<int> cards_of(const Scheme& scheme, const VarSubset& vars) {
  std::vector<int> out;
  for (int v : vars) out.push_back(scheme.cardinality(v));
  return out;
}

ProbabilityTable cluster_marginal(const Cluster& c, const Scheme& scheme, const VarSubset& target) {
  ProbabilityTable t;
  t.subset = target;
  t.probs = marginalize(c.members, cards_of(scheme, c.members), c.table, target, &t.cardinalities);
  return t;
}

std::string fmt_prob(double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

double ProbabilityTable::at(std::span<const std::uint8_t> config) const {
  if (config.size() != cardinalities.size()) throw ModelError("configuration width does not match table");
  std::size_t key = 0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (config[i] >= cardinalities[i]) throw ModelError("value index out of range");
    key = key * static_cast<std::size_t>(cardinalities[i]) + config[i];
  }
  return probs[key];
}

double ClusterModel::joint(std::span<const std::uint8_t> config) const {
  if (config.size() != scheme_.size()) throw ModelError("configuration width does not match scheme");
  auto sub = [&](const VarSubset& vars) {
    Config c;
    for (int v : vars) c.push_back(config[v]);
    return c;
  };
  double p = 1.0;
  for (const auto& c : clusters_) {
    ProbabilityTable t{c.members, cards_of(scheme_, c.members), c.table};
    p *= t.at(sub(c.members));
    if (p == 0.0) return 0.0;
  }
  for (const auto& s : sepsets_) {
    const double q = s.at(sub(s.subset));
    if (q == 0.0) return 0.0;
    p /= q;
  }
  return p;
}

ClusterModel compose_model(Scheme scheme, std::vector<Cluster> clusters, std::vector<std::pair<int, int>> tree) {
  const int k = static_cast<int>(scheme.size());
  std::vector<char> covered(k, 0);
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    auto& c = clusters[ci];
    std::set<int> seen;
    for (int v : c.members) {
      if (v < 0 || v >= k) throw ModelError("cluster member out of range");
      if (!seen.insert(v).second) throw ModelError("repeated cluster member");
      covered[v] = 1;
    }
    if (c.members.empty()) throw ModelError("empty cluster");
    if (c.table.size() != space_of(cards_of(scheme, c.members)))
      throw ModelError("cluster " + std::to_string(ci) + " table has the wrong number of rows");
    double sum = 0.0;
    for (double p : c.table) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ModelError("cluster probabilities must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ModelError("cluster " + std::to_string(ci) + " table does not sum to 1");
  }
  for (int v = 0; v < k; ++v)
    if (!covered[v]) throw ModelError("variable '" + scheme[v].name + "' belongs to no cluster");

  const int c = static_cast<int>(clusters.size());
  std::vector<int> parent(c);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
  JunctionForest forest;
  for (const auto& cl : clusters) forest.cliques.push_back(sorted_members(cl));
  for (auto& [a, b] : tree) {
    if (a < 0 || b < 0 || a >= c || b >= c || a == b) throw ModelError("invalid tree edge");
    if (a > b) std::swap(a, b);
    if (root(a) == root(b)) throw ModelError("tree edges form a cycle");
    parent[root(a)] = root(b);
    forest.edges.push_back({a, b, intersection(clusters[a], clusters[b])});
  }
  if (!satisfies_running_intersection(forest)) throw ModelError("cluster tree violates running intersection");

  ClusterModel model;
  for (const auto& e : forest.edges) {
    auto left = cluster_marginal(clusters[e.a], scheme, e.sepset);
    auto right = cluster_marginal(clusters[e.b], scheme, e.sepset);
    for (std::size_t i = 0; i < left.probs.size(); ++i)
      if (std::abs(left.probs[i] - right.probs[i]) > 1e-9)
        throw ModelError("clusters " + std::to_string(e.a) + " and " + std::to_string(e.b) +
                         " disagree on their sepset marginal");
    model.sepsets_.push_back(std::move(left));
  }
  model.scheme_ = std::move(scheme);
  model.clusters_ = std::move(clusters);
  model.tree_ = std::move(tree);
  return model;
}

ClusterModel table1_model() {
  Scheme scheme({{"X1", 2}, {"X2", 2}, {"X3", 2}, {"X4", 2}});
  // Rows in (X1, X2, X3, X4) lexicographic order.
  std::vector<double> p{0.0225, 0.2025, 0.005, 0.02, 0.0175, 0.0075, 0.135, 0.09,
                        0.02,   0.18,   0.01,  0.04, 0.035,  0.015,  0.12,  0.08};
  return compose_model(std::move(scheme), {{{0, 1, 2, 3}, std::move(p)}}, {});
}

ClusterModel parity_model(int k, double epsilon) {
  if (k < 3) throw ModelError("parity model needs at least 3 variables");
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ModelError("epsilon must lie in [0, 0.5)");
  if (k > 24) throw ModelError("parity model limited to 24 variables");
  std::vector<Variable> vars;
  VarSubset members;
  for (int i = 0; i < k; ++i) {
    vars.push_back({"X" + std::to_string(i + 1), 2});
    members.push_back(i);
  }
  const std::size_t rows = std::size_t{1} << k;
  const double base = 1.0 / static_cast<double>(rows >> 1);
  std::vector<double> table(rows);
  for (std::size_t key = 0; key < rows; ++key) {
    // The last variable is the least significant bit.
    const bool parity_ok = (std::popcount(key >> 1) & 1) == static_cast<int>(key & 1);
    table[key] = base * (parity_ok ? 1.0 - epsilon : epsilon);
  }
  return compose_model(Scheme(std::move(vars)), {{std::move(members), std::move(table)}}, {});
}

ClusterModel pim_like_model(int variables, const std::vector<int>& parity_sizes, double epsilon,
                            std::uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ModelError("epsilon must lie in [0, 0.5)");
  int remaining = variables - 1;
  for (int p : parity_sizes) {
    if (p < 3 || p > 12) throw ModelError("parity cluster sizes must lie in [3, 12]");
    remaining -= p - 1;
  }
  if (remaining < 0) throw ModelError("too few variables for the requested parity clusters");

  // Chain layout: 3-variable random clusters (plus one 2-variable cluster
  // when the count is odd), parity clusters spread evenly between them.
  std::vector<int> sizes(remaining / 2, 3);
  if (remaining % 2) sizes.push_back(2);
  const std::size_t total = sizes.size() + parity_sizes.size();
  std::vector<int> layout(total, 0);  // 0 = random, else parity size
  for (std::size_t j = 0; j < parity_sizes.size(); ++j) {
    std::size_t at = (j + 1) * total / (parity_sizes.size() + 1);
    while (layout[at] != 0) ++at;
    layout[at] = parity_sizes[j];
  }
  std::size_t next_random = 0;
  for (auto& slot : layout)
    if (slot == 0) slot = -sizes[next_random++];

  SplitMix64 rng(seed);
  std::vector<Cluster> clusters;
  std::vector<std::pair<int, int>> tree;
  int next_var = 0;
  double shared_p0 = 0.5;  // P(shared variable = 0)
  for (std::size_t ci = 0; ci < layout.size(); ++ci) {
    const bool parity = layout[ci] > 0;
    const int size = parity ? layout[ci] : -layout[ci];
    const bool next_is_parity = ci + 1 < layout.size() && layout[ci + 1] > 0;
    if (ci == 0) {
      ++next_var;
      shared_p0 = parity ? 0.5 : rng.uniform(0.3, 0.7);
    }
    const int shared = next_var - 1;
    VarSubset members{shared};
    for (int i = 1; i < size; ++i) members.push_back(next_var++);

    std::vector<double> table(std::size_t{1} << size);
    if (parity) {
      const double base = 1.0 / static_cast<double>(table.size() >> 1);
      for (std::size_t key = 0; key < table.size(); ++key) {
        const bool ok = (std::popcount(key >> 1) & 1) == static_cast<int>(key & 1);
        table[key] = base * (ok ? 1.0 - epsilon : epsilon);
      }
      shared_p0 = 0.5;
    } else {
      // P(t=1 | s) for the outgoing variable t; uniform P(t) when a parity
      // cluster follows.
      double a = 0.8, b = 0.2;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        a = rng.uniform(0.1, 0.9);
        b = next_is_parity ? (0.5 - shared_p0 * a) / (1.0 - shared_p0) : rng.uniform(0.1, 0.9);
        if (b >= 0.05 && b <= 0.95 && std::abs(a - b) >= 0.3) break;
      }
      const double t_given_s[2] = {a, b};
      const double next_p0 = 1.0 - (shared_p0 * a + (1.0 - shared_p0) * b);
      const double ps[2] = {shared_p0, 1.0 - shared_p0};
      if (size == 2) {
        for (int s = 0; s < 2; ++s)
          for (int t = 0; t < 2; ++t) table[s * 2 + t] = ps[s] * (t ? t_given_s[s] : 1.0 - t_given_s[s]);
      } else {
        // members (s, y, t): P(y=1 | s, t) spread so y depends on both.
        double q[4];
        for (int attempt = 0; attempt < 1000; ++attempt) {
          for (double& x : q) x = rng.uniform(0.05, 0.95);
          if (*std::max_element(q, q + 4) - *std::min_element(q, q + 4) >= 0.4) break;
        }
        for (int s = 0; s < 2; ++s)
          for (int y = 0; y < 2; ++y)
            for (int t = 0; t < 2; ++t) {
              const double pt = t ? t_given_s[s] : 1.0 - t_given_s[s];
              const double py = y ? q[s * 2 + t] : 1.0 - q[s * 2 + t];
              table[s * 4 + y * 2 + t] = ps[s] * pt * py;
            }
      }
      shared_p0 = next_is_parity ? 0.5 : next_p0;
    }
    if (ci > 0) tree.emplace_back(static_cast<int>(ci) - 1, static_cast<int>(ci));
    clusters.push_back({std::move(members), std::move(table)});
  }
  std::vector<Variable> vars;
  for (int v = 0; v < next_var; ++v) vars.push_back({"x" + std::to_string(v + 1), 2});
  return compose_model(Scheme(std::move(vars)), std::move(clusters), std::move(tree));
}

ProbabilityTable exact_marginal(const ClusterModel& model, std::span<const int> subset) {
  const Scheme& scheme = model.scheme();
  VarSubset target(subset.begin(), subset.end());
  std::set<int> keep;
  for (int v : target) {
    if (v < 0 || static_cast<std::size_t>(v) >= scheme.size()) throw ModelError("unknown variable in subset");
    if (!keep.insert(v).second) throw ModelError("repeated variable in subset");
  }

  // Joint = Π cluster tables × Π 1/sepset marginals (0 where the marginal is 0).
  std::vector<Factor> factors;
  for (const auto& c : model.clusters()) factors.push_back(cluster_factor(c, scheme));
  for (const auto& [a, b] : model.tree()) {
    VarSubset sep = intersection(model.clusters()[a], model.clusters()[b]);
    if (sep.empty()) continue;
    auto m = cluster_marginal(model.clusters()[a], scheme, sep);
    for (double& p : m.probs) p = p > 0.0 ? 1.0 / p : 0.0;
    factors.push_back({sep, m.cardinalities, std::move(m.probs)});
  }

  // Greedy elimination: smallest resulting factor first, ties to lowest index.
  for (;;) {
    int best = -1;
    std::size_t best_size = 0;
    std::set<int> present;
    for (const auto& f : factors) present.insert(f.vars.begin(), f.vars.end());
    for (int v : present) {
      if (keep.count(v)) continue;
      std::set<int> merged;
      for (const auto& f : factors)
        if (std::binary_search(f.vars.begin(), f.vars.end(), v)) merged.insert(f.vars.begin(), f.vars.end());
      std::size_t size = 1;
      for (int u : merged) size *= static_cast<std::size_t>(scheme.cardinality(u));
      if (best < 0 || size < best_size) {
        best = v;
        best_size = size;
      }
    }
    if (best < 0) break;
    if (best_size > kMaxFactorSize) throw ModelError("exact marginal too large to compute");
    std::vector<Factor> rest;
    Factor product{{}, {}, {1.0}};
    for (auto& f : factors) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), best))
        product = multiply(product, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(product, best));
    factors = std::move(rest);
  }
  Factor product{{}, {}, {1.0}};
  for (const auto& f : factors) product = multiply(product, f);

  ProbabilityTable out;
  out.subset = target;
  out.probs = marginalize(product.vars, product.cards, product.values, target, &out.cardinalities);
  return out;
}

FrequencyTable expected_counts(const ClusterModel& model, double total) {
  if (!(total > 0.0)) throw ModelError("total must be positive");
  VarSubset all(model.scheme().size());
  std::iota(all.begin(), all.end(), 0);
  ProbabilityTable joint;
  try {
    joint = exact_marginal(model, all);
  } catch (const ModelError&) {
    throw ModelError("expected_counts: joint state space too large, sample instead");
  }
  std::vector<FrequencyTable::Row> rows;
  Config cfg(all.size(), 0);
  for (std::size_t key = 0; key < joint.probs.size(); ++key) {
    if (joint.probs[key] > 0.0) {
      Count c = Count::from_real(joint.probs[key] * total);
      if (!c.is_zero()) rows.push_back({cfg, c});
    }
    for (std::size_t p = cfg.size(); p-- > 0;) {
      if (++cfg[p] < joint.cardinalities[p]) break;
      cfg[p] = 0;
    }
  }
  return FrequencyTable(model.scheme(), std::move(rows));
}

FrequencyTable sample(const ClusterModel& model, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ModelError("sample count must be at least 1");
  const Scheme& scheme = model.scheme();
  const auto& clusters = model.clusters();
  const int c = static_cast<int>(clusters.size());

  // Visit order: breadth-first per tree, rooted at its lowest cluster index.
  std::vector<std::vector<int>> adj(c);
  for (auto [a, b] : model.tree()) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> order, parent(c, -2);
  for (int r = 0; r < c; ++r) {
    if (parent[r] != -2) continue;
    parent[r] = -1;
    std::vector<int> queue{r};
    for (std::size_t i = 0; i < queue.size(); ++i) {
      int x = queue[i];
      order.push_back(x);
      auto next = adj[x];
      std::sort(next.begin(), next.end());
      for (int y : next)
        if (parent[y] == -2) {
          parent[y] = x;
          queue.push_back(y);
        }
    }
  }

  // Per cluster: conditioning positions (members shared with the parent) and
  // cumulative tables grouped by the conditioning sub-configuration.
  struct Sampler {
    std::vector<std::size_t> cond_pos;
    std::vector<int> cond_cards;
    std::map<std::size_t, std::vector<std::pair<double, std::size_t>>> groups;
  };
  std::vector<Sampler> samplers(c);
  for (int ci : order) {
    const auto& cl = clusters[ci];
    auto& s = samplers[ci];
    if (parent[ci] >= 0) {
      VarSubset sep = intersection(cl, clusters[parent[ci]]);
      for (std::size_t i = 0; i < cl.members.size(); ++i)
        if (std::binary_search(sep.begin(), sep.end(), cl.members[i])) {
          s.cond_pos.push_back(i);
          s.cond_cards.push_back(scheme.cardinality(cl.members[i]));
        }
    }
    auto cards = cards_of(scheme, cl.members);
    Config digit(cl.members.size(), 0);
    for (std::size_t key = 0; key < cl.table.size(); ++key) {
      if (cl.table[key] > 0.0) {
        std::size_t g = 0;
        for (std::size_t j = 0; j < s.cond_pos.size(); ++j) g = g * s.cond_cards[j] + digit[s.cond_pos[j]];
        auto& list = s.groups[g];
        list.emplace_back((list.empty() ? 0.0 : list.back().first) + cl.table[key], key);
      }
      for (std::size_t p = digit.size(); p-- > 0;) {
        if (++digit[p] < cards[p]) break;
        digit[p] = 0;
      }
    }
  }

  SplitMix64 rng(seed);
  std::map<Config, std::int64_t> tally;
  Config values(scheme.size(), 0);
  for (std::size_t n = 0; n < count; ++n) {
    for (int ci : order) {
      const auto& cl = clusters[ci];
      const auto& s = samplers[ci];
      std::size_t g = 0;
      for (std::size_t j = 0; j < s.cond_pos.size(); ++j)
        g = g * s.cond_cards[j] + values[cl.members[s.cond_pos[j]]];
      auto it = s.groups.find(g);
      if (it == s.groups.end()) throw ModelError("sampling reached a zero-probability sepset configuration");
      const auto& list = it->second;
      const double u = rng.uniform() * list.back().first;
      auto pick = std::upper_bound(list.begin(), list.end(), u,
                                   [](double x, const auto& e) { return x < e.first; });
      if (pick == list.end()) --pick;
      std::size_t key = pick->second;
      for (std::size_t p = cl.members.size(); p-- > 0;) {
        const auto card = static_cast<std::size_t>(scheme.cardinality(cl.members[p]));
        values[cl.members[p]] = static_cast<std::uint8_t>(key % card);
        key /= card;
      }
    }
    ++tally[values];
  }
  std::vector<FrequencyTable::Row> rows;
  rows.reserve(tally.size());
  for (auto& [cfg, n] : tally) rows.push_back({cfg, Count::from_whole(n)});
  return FrequencyTable(scheme, std::move(rows));
}

// ---------------------------------------------------------------------------
// PI verification

namespace {

PiReport verify_joint(const ProbabilityTable& joint, double tolerance) {
  const int k = static_cast<int>(joint.subset.size());
  if (k < 3) throw ModelError("PI verification needs at least three variables");
  VarSubset pos(k);
  std::iota(pos.begin(), pos.end(), 0);
  auto marg = [&](const VarSubset& which) { return marginalize(pos, joint.cardinalities, joint.probs, which); };

  PiReport report;
  report.subset = joint.subset;
  report.tolerance = tolerance;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      auto pab = marg({a, b}), pa = marg({a}), pb = marg({b});
      double dev = 0.0;
      const int cb = joint.cardinalities[b];
      for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pb.size(); ++j) dev = std::max(dev, std::abs(pab[i * cb + j] - pa[i] * pb[j]));
      report.pairs.push_back({joint.subset[a], joint.subset[b], dev, dev <= tolerance});
    }

  // X is collectively dependent when P(X | all others) differs by more than
  // the tolerance from P(X | R) for every proper subset R of the others.
  auto strides = strides_of(joint.cardinalities);
  for (int x = 0; x < k && !report.collective; ++x) {
    VarSubset others;
    for (int i = 0; i < k; ++i)
      if (i != x) others.push_back(i);
    const int r = static_cast<int>(others.size());
    auto p_rest = marg(others);
    bool every_subset_differs = true;
    for (unsigned mask = 0; mask + 1 < (1u << r) && every_subset_differs; ++mask) {
      VarSubset cond;
      for (int i = 0; i < r; ++i)
        if (mask >> i & 1) cond.push_back(others[i]);
      VarSubset with_x = cond;
      with_x.insert(std::lower_bound(with_x.begin(), with_x.end(), x), x);
      auto p_cond = marg(cond), p_cond_x = marg(with_x);
      auto cond_strides = strides_of([&] {
        std::vector<int> c;
        for (int v : cond) c.push_back(joint.cardinalities[v]);
        return c;
      }());
      auto wx_strides = strides_of([&] {
        std::vector<int> c;
        for (int v : with_x) c.push_back(joint.cardinalities[v]);
        return c;
      }());
      auto rest_strides = strides_of([&] {
        std::vector<int> c;
        for (int v : others) c.push_back(joint.cardinalities[v]);
        return c;
      }());
      double dev = 0.0;
      for (std::size_t key = 0; key < joint.probs.size(); ++key) {
        std::vector<int> digit(k);
        for (int i = 0; i < k; ++i) digit[i] = static_cast<int>(key / strides[i] % joint.cardinalities[i]);
        std::size_t rk = 0, ck = 0, wk = 0;
        for (int i = 0; i < r; ++i) rk += digit[others[i]] * rest_strides[i];
        if (p_rest[rk] <= 0.0) continue;
        for (std::size_t i = 0; i < cond.size(); ++i) ck += digit[cond[i]] * cond_strides[i];
        for (std::size_t i = 0; i < with_x.size(); ++i) wk += digit[with_x[i]] * wx_strides[i];
        const double full = joint.probs[key] / p_rest[rk];
        const double partial = p_cond[ck] > 0.0 ? p_cond_x[wk] / p_cond[ck] : 0.0;
        dev = std::max(dev, std::abs(full - partial));
      }
      if (dev <= tolerance) every_subset_differs = false;
    }
    if (every_subset_differs) report.collective = true;
  }
  return report;
}

}  // namespace

bool PiReport::is_pi() const {
  return collective && std::any_of(pairs.begin(), pairs.end(), [](const PairVerdict& p) { return p.independent; });
}

PiReport verify_pi(const ClusterModel& model, std::span<const int> subset, double tolerance) {
  return verify_joint(exact_marginal(model, subset), tolerance);
}

PiReport verify_pi(const FrequencyTable& data, std::span<const int> subset, double tolerance) {
  if (data.total().is_zero()) throw ModelError("cannot verify an empty dataset");
  MarginalTable m = project(data, subset);
  ProbabilityTable joint;
  joint.subset = m.subset();
  joint.cardinalities = m.cardinalities();
  joint.probs.assign(space_of(joint.cardinalities), 0.0);
  const double total = static_cast<double>(m.total().micros());
  for (const auto& e : m.entries()) joint.probs[e.key] = static_cast<double>(e.count.micros()) / total;
  return verify_joint(joint, tolerance);
}

// ---------------------------------------------------------------------------
// Model files

std::string format_model(const ClusterModel& model) {
  const Scheme& scheme = model.scheme();
  std::ostringstream out;
  out << "dmn-model v1\n";
  out << "vars " << scheme.size() << "\n";
  for (const auto& v : scheme.variables()) out << v.name << " " << v.cardinality << "\n";
  out << "clusters " << model.clusters().size() << "\n";
  for (const auto& c : model.clusters()) {
    out << "cluster";
    for (int v : c.members) out << " " << scheme[v].name;
    out << "\n";
    auto cards = cards_of(scheme, c.members);
    std::size_t nonzero = std::count_if(c.table.begin(), c.table.end(), [](double p) { return p != 0.0; });
    out << "rows " << nonzero << "\n";
    Config digit(c.members.size(), 0);
    for (std::size_t key = 0; key < c.table.size(); ++key) {
      if (c.table[key] != 0.0) {
        for (auto d : digit) out << static_cast<int>(d) << " ";
        out << fmt_prob(c.table[key]) << "\n";
      }
      for (std::size_t p = digit.size(); p-- > 0;) {
        if (++digit[p] < cards[p]) break;
        digit[p] = 0;
      }
    }
  }
  out << "tree " << model.tree().size() << "\n";
  for (auto [a, b] : model.tree()) out << a << " " << b << "\n";
  return out.str();
}

ClusterModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::vector<std::string> {
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream row(line);
      std::vector<std::string> tok;
      for (std::string t; row >> t;) tok.push_back(t);
      if (!tok.empty() && tok[0][0] != '#') return tok;
    }
    throw ModelError("model file ends unexpectedly");
  };
  auto fail = [&](const std::string& what) -> ModelError {
    return ModelError("model line " + std::to_string(line_no) + ": " + what);
  };
  auto number = [&](const std::string& s) -> long {
    try {
      std::size_t used = 0;
      long v = std::stol(s, &used);
      if (used != s.size() || v < 0) throw fail("expected a non-negative integer, got '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      throw fail("expected a non-negative integer, got '" + s + "'");
    }
  };

  auto tok = next();
  if (tok.size() != 2 || tok[0] != "dmn-model" || tok[1] != "v1") throw fail("expected 'dmn-model v1'");
  tok = next();
  if (tok.size() != 2 || tok[0] != "vars") throw fail("expected 'vars k'");
  std::vector<Variable> vars;
  for (long i = 0, k = number(tok[1]); i < k; ++i) {
    tok = next();
    if (tok.size() != 2) throw fail("expected 'name cardinality'");
    vars.push_back({tok[0], static_cast<int>(number(tok[1]))});
  }
  Scheme scheme(std::move(vars));
  tok = next();
  if (tok.size() != 2 || tok[0] != "clusters") throw fail("expected 'clusters c'");
  std::vector<Cluster> clusters;
  for (long ci = 0, c = number(tok[1]); ci < c; ++ci) {
    tok = next();
    if (tok.size() < 2 || tok[0] != "cluster") throw fail("expected 'cluster name...'");
    Cluster cl;
    for (std::size_t i = 1; i < tok.size(); ++i) cl.members.push_back(scheme.index_of(tok[i]));
    auto cards = cards_of(scheme, cl.members);
    cl.table.assign(space_of(cards), 0.0);
    tok = next();
    if (tok.size() != 2 || tok[0] != "rows") throw fail("expected 'rows r'");
    std::vector<char> seen(cl.table.size(), 0);
    for (long r = 0, rows = number(tok[1]); r < rows; ++r) {
      tok = next();
      if (tok.size() != cl.members.size() + 1) throw fail("cluster row has the wrong number of fields");
      std::size_t key = 0;
      for (std::size_t i = 0; i < cl.members.size(); ++i) {
        long v = number(tok[i]);
        if (v >= cards[i]) throw fail("value index out of range");
        key = key * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(v);
      }
      if (seen[key]++) throw fail("duplicate cluster row");
      try {
        cl.table[key] = std::stod(tok.back());
      } catch (const std::logic_error&) {
        throw fail("malformed probability '" + tok.back() + "'");
      }
    }
    clusters.push_back(std::move(cl));
  }
  tok = next();
  if (tok.size() != 2 || tok[0] != "tree") throw fail("expected 'tree e'");
  std::vector<std::pair<int, int>> tree;
  for (long e = 0, edges = number(tok[1]); e < edges; ++e) {
    tok = next();
    if (tok.size() != 2) throw fail("expected 'a b'");
    tree.emplace_back(static_cast<int>(number(tok[0])), static_cast<int>(number(tok[1])));
  }
  return compose_model(std::move(scheme), std::move(clusters), std::move(tree));
}

ClusterModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

void write_model(const ClusterModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ModelError("cannot write model '" + path.string() + "'");
  out << format_model(model);
}

}  // namespace dmn
