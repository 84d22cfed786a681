#include "dmn/scoring.hpp"

#include <cmath>
#include <map>

namespace dmn {

double MarginalSource::entropy_of(std::span<const int> subset) {
  if (subset.empty()) return 0.0;
  return entropy(marginal(subset));
}

Threshold::Threshold(double delta_h) : delta_h_(delta_h) {
  if (!(delta_h >= 0.0) || !std::isfinite(delta_h)) throw ScoringError("threshold must be finite and non-negative");
}

double model_entropy(const JunctionForest& forest, MarginalSource& source) {
  double h = 0.0;
  for (const auto& c : forest.cliques) h += source.entropy_of(c);
  for (const auto& e : forest.edges) h -= source.entropy_of(e.sepset);
  return h;
}

double model_entropy(const Graph& g, const FrequencyTable& data) {
  if (g.node_count() != static_cast<int>(data.scheme().size()))
    throw ScoringError("graph and dataset disagree on variable count");
  JunctionForest forest;
  try {
    forest = build_forest(g);
  } catch (const GraphError& e) {
    throw ScoringError(std::string("model_entropy: ") + e.what());
  }
  TableSource source(data);
  return model_entropy(forest, source);
}

double entropy_decrement_global(const Graph& g, const Graph& g_prime, const FrequencyTable& data) {
  if (!g_prime.contains_edges_of(g)) throw ScoringError("second graph must contain every edge of the first");
  return model_entropy(g, data) - model_entropy(g_prime, data);
}

double entropy_decrement_between(const JunctionForest& before, const JunctionForest& after,
                                 MarginalSource& source) {
  // Signed term multiset of h(before) - h(after).
  std::map<NodeSet, int> terms;
  for (const auto& c : before.cliques) ++terms[c];
  for (const auto& e : before.edges) --terms[e.sepset];
  for (const auto& c : after.cliques) --terms[c];
  for (const auto& e : after.edges) ++terms[e.sepset];
  double dh = 0.0;
  for (const auto& [subset, coef] : terms)
    if (coef != 0) dh += coef * source.entropy_of(subset);
  return dh;
}

double entropy_decrement_local(const Graph& g, const JunctionForest& forest, const LinkSet& links,
                               MarginalSource& source) {
  Graph g_star = g;
  try {
    g_star.add_links(links);
  } catch (const GraphError& e) {
    throw ScoringError(std::string("invalid link set: ") + e.what());
  }
  auto chordal = is_chordal(g_star);
  if (!chordal.chordal) throw ScoringError("g + links is not chordal");
  auto cliques = maximal_cliques(g_star, chordal.elimination_order);
  if (!implied_by_single_clique(cliques, links, g_star.node_count()))
    throw ScoringError("links are not implied by a single clique");
  return entropy_decrement_between(forest, junction_forest(cliques), source);
}

double entropy_decrement_local(const Graph& g, const JunctionForest& forest, const LinkSet& links,
                               const FrequencyTable& data) {
  TableSource source(data);
  return entropy_decrement_local(g, forest, links, source);
}

}  // namespace dmn
