#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmn/data.hpp"

namespace dmn {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense probability table over an ordered variable subset, indexed by the
// mixed-radix key of the sub-configuration (first variable most significant).
struct ProbabilityTable {
  VarSubset subset;
  std::vector<int> cardinalities;
  std::vector<double> probs;

  double at(std::span<const std::uint8_t> config) const;
};

struct Cluster {
  VarSubset members;
  std::vector<double> table;  // dense, as in ProbabilityTable
};

// Cluster tables joined along a junction forest. The joint is the product of
// cluster tables divided by the product of sepset marginals.
class ClusterModel {
 public:
  const Scheme& scheme() const { return scheme_; }
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<std::pair<int, int>>& tree() const { return tree_; }

  // Probability of a full configuration.
  double joint(std::span<const std::uint8_t> config) const;

 private:
  friend ClusterModel compose_model(Scheme, std::vector<Cluster>, std::vector<std::pair<int, int>>);
  Scheme scheme_;
  std::vector<Cluster> clusters_;
  std::vector<std::pair<int, int>> tree_;
  std::vector<ProbabilityTable> sepsets_;  // one per tree edge
};

// Validates and assembles a model. Rejects tables that are not distributions,
// trees that are not forests with the running intersection property, and
// adjacent clusters whose sepset marginals differ by more than 1e-9.
ClusterModel compose_model(Scheme scheme, std::vector<Cluster> clusters, std::vector<std::pair<int, int>> tree);

ClusterModel table1_model();

// X1..X(k-1) uniform and independent; Xk is their XOR, flipped with
// probability epsilon.
ClusterModel parity_model(int k, double epsilon);

// Chain of clusters, each sharing one variable with its predecessor, with
// embedded parity clusters of the given sizes. Deterministic given the seed.
ClusterModel pim_like_model(int variables, const std::vector<int>& parity_sizes, double epsilon,
                            std::uint64_t seed);

ProbabilityTable exact_marginal(const ClusterModel& model, std::span<const int> subset);

// Expected-count dataset: count = probability × total for every joint
// configuration with positive probability.
FrequencyTable expected_counts(const ClusterModel& model, double total);

// Forward sampling along the cluster forest.
FrequencyTable sample(const ClusterModel& model, std::size_t count, std::uint64_t seed);

struct PairVerdict {
  int a = 0;
  int b = 0;
  double deviation = 0.0;  // max |P(a,b) - P(a)P(b)|
  bool independent = false;
};

struct PiReport {
  VarSubset subset;
  std::vector<PairVerdict> pairs;
  bool collective = false;
  double tolerance = 0.0;

  // Collectively dependent with at least one marginally independent pair.
  bool is_pi() const;
};

PiReport verify_pi(const ClusterModel& model, std::span<const int> subset, double tolerance = 1e-9);
// Empirical variant; the tolerance must account for sample size.
PiReport verify_pi(const FrequencyTable& data, std::span<const int> subset, double tolerance);

std::string format_model(const ClusterModel& model);
ClusterModel parse_model(const std::string& text);
ClusterModel read_model(const std::filesystem::path& path);
void write_model(const ClusterModel& model, const std::filesystem::path& path);

}  // namespace dmn
