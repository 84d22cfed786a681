#include "dmn/search.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace dmn {

void SearchConfig::validate() const {
  if (eta < 2) throw SearchError("eta must be at least 2");
  if (kappa < 1 || kappa > eta * (eta - 1) / 2) throw SearchError("kappa must lie in [1, eta(eta-1)/2]");
  if (!(delta_h >= 0.0)) throw SearchError("delta_h must be non-negative");
}

bool better_move(const CandidateMove& a, const CandidateMove& b) {
  const double da = a.dh.value_or(-1e300), db = b.dh.value_or(-1e300);
  if (da != db) return da > db;
  return a.index < b.index;
}

CandidateList enumerate_candidates(const Graph& g, int level, int eta, std::optional<std::size_t> cap) {
  if (level < 1) throw SearchError("lookahead level must be at least 1");
  std::vector<Link> non_edges;
  for (int u = 0; u < g.node_count(); ++u)
    for (int v = u + 1; v < g.node_count(); ++v)
      if (!g.has_edge(u, v)) non_edges.emplace_back(u, v);

  CandidateList out;
  LinkSet current;
  std::vector<int> touched(g.node_count(), 0);
  int distinct = 0;
  auto touch = [&](int node, int delta) {
    if (delta > 0 && touched[node]++ == 0) ++distinct;
    if (delta < 0 && --touched[node] == 0) --distinct;
  };
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (static_cast<int>(current.size()) == level) {
      if (cap && out.size() >= *cap) throw SearchError("candidate cap exceeded");
      out.push_back(current);
      return;
    }
    for (std::size_t k = start; k < non_edges.size(); ++k) {
      const Link& l = non_edges[k];
      touch(l.u, +1);
      touch(l.v, +1);
      if (distinct <= eta) {
        current.push_back(l);
        self(self, k + 1);
        current.pop_back();
      }
      touch(l.u, -1);
      touch(l.v, -1);
    }
  };
  rec(rec, 0);
  return out;
}

std::optional<JunctionForest> legal_move_forest(const Graph& g, const LinkSet& links, int eta) {
  Graph g_star = g;
  g_star.add_links(links);
  auto chordal = is_chordal(g_star);
  if (!chordal.chordal) return std::nullopt;
  auto cliques = maximal_cliques(g_star, chordal.elimination_order);
  if (!implied_by_single_clique(cliques, links, eta)) return std::nullopt;
  return junction_forest(cliques);
}

bool is_legal_move(const Graph& g, const LinkSet& links, int eta) {
  Graph g_star = g;
  g_star.add_links(links);
  auto chordal = is_chordal(g_star);
  if (!chordal.chordal) return false;
  return implied_by_single_clique(maximal_cliques(g_star, chordal.elimination_order), links, eta).has_value();
}

CandidateMove evaluate_candidate(const Graph& g, const JunctionForest& forest, const LinkSet& links, int eta,
                                 MarginalSource& source, std::size_t index) {
  CandidateMove move{links, false, std::nullopt, index};
  auto after = legal_move_forest(g, links, eta);
  if (!after) return move;
  move.valid = true;
  move.dh = entropy_decrement_between(forest, *after, source);
  return move;
}

PassOutcome SequentialExecutor::evaluate(const Graph& g, const JunctionForest& forest,
                                         std::shared_ptr<const CandidateList> candidates, int eta) {
  TableSource source(data_);
  PassOutcome out;
  for (std::size_t i = 0; i < candidates->size(); ++i) {
    auto move = evaluate_candidate(g, forest, (*candidates)[i], eta, source, i);
    if (!move.valid) continue;
    ++out.valid;
    out.min_dh = std::min(out.min_dh.value_or(*move.dh), *move.dh);
    if (!out.best || better_move(move, *out.best)) out.best = std::move(move);
  }
  return out;
}

PassResult run_pass(const Graph& g, const JunctionForest& forest, int level, const SearchConfig& config,
                    Executor& executor) {
  auto candidates =
      std::make_shared<const CandidateList>(enumerate_candidates(g, level, config.eta, config.candidate_cap));
  PassOutcome outcome = executor.evaluate(g, forest, candidates, config.eta);

  PassResult result;
  result.record.level = level;
  result.record.generated = candidates->size();
  result.record.valid = outcome.valid;
  result.record.min_dh = outcome.min_dh;
  result.record.best = outcome.best;
  if (outcome.best && is_significant(*outcome.best->dh, Threshold(config.delta_h))) {
    result.record.adopted = true;
    Graph next = g;
    next.add_links(outcome.best->links);
    result.next = std::move(next);
  }
  return result;
}

std::vector<Graph> SearchTrace::intermediate_graphs() const {
  std::vector<Graph> out{Graph(final_graph.node_count())};
  for (const auto& pass : passes) {
    if (!pass.adopted) continue;
    Graph next = out.back();
    next.add_links(pass.best->links);
    out.push_back(std::move(next));
  }
  return out;
}

LearnResult learn(const SearchConfig& config, Executor& executor) {
  config.validate();
  const int n = static_cast<int>(executor.scheme().size());
  Graph g(n);
  JunctionForest forest = build_forest(g);
  SearchTrace trace;
  for (int level = 1; level <= config.kappa; ++level) {
    while (true) {
      PassResult pass = run_pass(g, forest, level, config, executor);
      trace.passes.push_back(pass.record);
      if (!pass.next) break;
      g = std::move(*pass.next);
      forest = build_forest(g);
    }
  }
  trace.final_graph = g;
  return {g, std::move(trace)};
}

LearnResult learn(const SearchConfig& config, const FrequencyTable& data) {
  SequentialExecutor executor(data);
  return learn(config, executor);
}

std::string format_trace(const SearchTrace& trace) {
  std::ostringstream out;
  char buf[64];
  for (const auto& pass : trace.passes) {
    out << "level " << pass.level << " | adopted ";
    if (pass.adopted) {
      for (std::size_t i = 0; i < pass.best->links.size(); ++i)
        out << (i ? "," : "") << pass.best->links[i].u << "-" << pass.best->links[i].v;
    } else {
      out << "none";
    }
    out << " | dh ";
    if (pass.best) {
      std::snprintf(buf, sizeof buf, "%.12f", *pass.best->dh);
      out << buf;
    } else {
      out << "none";
    }
    out << " | generated " << pass.generated << " | valid " << pass.valid << "\n";
  }
  out << format_graph(trace.final_graph);
  return out.str();
}

}  // namespace dmn
