#pragma once

#include <span>
#include <stdexcept>

#include "dmn/data.hpp"
#include "dmn/graph.hpp"

namespace dmn {

class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Where marginal counts come from: a local table, or a marginal-server
// pipeline in the parallel runtime.
class MarginalSource {
 public:
  virtual ~MarginalSource() = default;
  virtual MarginalTable marginal(std::span<const int> subset) = 0;
  virtual const Scheme& scheme() const = 0;

  // Entropy of the projection onto `subset`; 0 for the empty subset.
  double entropy_of(std::span<const int> subset);
};

class TableSource final : public MarginalSource {
 public:
  explicit TableSource(const FrequencyTable& table) : table_(table) {}
  MarginalTable marginal(std::span<const int> subset) override { return project(table_, subset); }
  const Scheme& scheme() const override { return table_.scheme(); }

 private:
  const FrequencyTable& table_;
};

class Threshold {
 public:
  explicit Threshold(double delta_h);
  double delta_h() const { return delta_h_; }

 private:
  double delta_h_;
};

// Sum of clique entropies minus sum of sepset entropies, bits per case.
double model_entropy(const JunctionForest& forest, MarginalSource& source);
double model_entropy(const Graph& g, const FrequencyTable& data);

double entropy_decrement_global(const Graph& g, const Graph& g_prime, const FrequencyTable& data);

// Decrement from `before` to `after` using only the clique/sepset entropy
// terms that do not cancel between the two forests.
double entropy_decrement_between(const JunctionForest& before, const JunctionForest& after,
                                 MarginalSource& source);

// Decrement of adding `links` to g, whose forest is `forest`. Requires
// g + links chordal with every link inside one clique of the new graph.
double entropy_decrement_local(const Graph& g, const JunctionForest& forest, const LinkSet& links,
                               MarginalSource& source);
double entropy_decrement_local(const Graph& g, const JunctionForest& forest, const LinkSet& links,
                               const FrequencyTable& data);

inline bool is_significant(double dh, const Threshold& t) { return dh > t.delta_h(); }

}  // namespace dmn
