#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmn/data.hpp"
#include "dmn/graph.hpp"
#include "dmn/scoring.hpp"

namespace dmn {

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SearchConfig {
  int eta = 3;             // max clique size
  int kappa = 1;           // max lookahead links
  double delta_h = 0.003;  // bits per case
  std::optional<std::size_t> candidate_cap;

  // Throws SearchError unless eta >= 2 and 1 <= kappa <= eta(eta-1)/2.
  void validate() const;
};

struct CandidateMove {
  LinkSet links;
  bool valid = false;
  std::optional<double> dh;  // present iff valid
  std::size_t index = 0;     // position in the enumeration
};

// Strict "a beats b": larger dh, ties to the lower candidate index.
bool better_move(const CandidateMove& a, const CandidateMove& b);

using CandidateList = std::vector<LinkSet>;

// All i-subsets of non-edges of g, lexicographic over sorted link pairs.
// Subsets touching more than eta distinct nodes are skipped: no clique of
// size <= eta can contain them. Throws SearchError past `cap`.
CandidateList enumerate_candidates(const Graph& g, int level, int eta,
                                   std::optional<std::size_t> cap = std::nullopt);

// Forest of g + links when the move is legal (chordal and implied by one
// clique of size <= eta), otherwise nullopt.
std::optional<JunctionForest> legal_move_forest(const Graph& g, const LinkSet& links, int eta);
// The same test without building the forest (stage-one filtering).
bool is_legal_move(const Graph& g, const LinkSet& links, int eta);

CandidateMove evaluate_candidate(const Graph& g, const JunctionForest& forest, const LinkSet& links, int eta,
                                 MarginalSource& source, std::size_t index = 0);

// What an executor reports for one pass.
struct PassOutcome {
  std::optional<CandidateMove> best;  // best valid candidate, whatever its dh
  std::size_t valid = 0;
  std::optional<double> min_dh;  // smallest dh computed in the pass
};

// Evaluates all candidates of a pass. Implementations must return exactly
// what in-order sequential evaluation returns.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual const Scheme& scheme() const = 0;
  virtual PassOutcome evaluate(const Graph& g, const JunctionForest& forest,
                               std::shared_ptr<const CandidateList> candidates, int eta) = 0;
};

class SequentialExecutor final : public Executor {
 public:
  explicit SequentialExecutor(const FrequencyTable& data) : data_(data) {}
  const Scheme& scheme() const override { return data_.scheme(); }
  PassOutcome evaluate(const Graph& g, const JunctionForest& forest,
                       std::shared_ptr<const CandidateList> candidates, int eta) override;

 private:
  const FrequencyTable& data_;
};

struct PassRecord {
  int level = 0;
  std::optional<CandidateMove> best;
  bool adopted = false;
  std::size_t generated = 0;
  std::size_t valid = 0;
  std::optional<double> min_dh;
};

struct PassResult {
  PassRecord record;
  std::optional<Graph> next;  // set when the best move is significant
};

PassResult run_pass(const Graph& g, const JunctionForest& forest, int level, const SearchConfig& config,
                    Executor& executor);

struct SearchTrace {
  std::vector<PassRecord> passes;
  Graph final_graph;

  // Graphs after each adoption, starting with the empty graph.
  std::vector<Graph> intermediate_graphs() const;
};

struct LearnResult {
  Graph graph;
  SearchTrace trace;
};

// Add-only search from the empty graph: level i = 1..kappa, passes repeat at
// a level while the best move is significant.
LearnResult learn(const SearchConfig& config, Executor& executor);
LearnResult learn(const SearchConfig& config, const FrequencyTable& data);

// `level i | adopted u-v[,u-v...] | dh x | generated g | valid v` per pass,
// followed by the final graph.
std::string format_trace(const SearchTrace& trace);

}  // namespace dmn
