#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmn {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-negative count held in fixed point (10^-6 units). Integer arithmetic
// keeps sums exact and associative, so sharded and whole-table projections
// agree bit for bit.
class Count {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Count() = default;
  static constexpr Count from_micros(std::int64_t micros) { return Count(micros); }
  static constexpr Count from_whole(std::int64_t whole) { return Count(whole * kScale); }
  // Rounds to the nearest representable count.
  static Count from_real(double value);

  constexpr std::int64_t micros() const { return micros_; }
  double value() const { return static_cast<double>(micros_) / kScale; }
  constexpr bool is_zero() const { return micros_ == 0; }

  constexpr Count& operator+=(Count other) {
    micros_ += other.micros_;
    return *this;
  }
  friend constexpr Count operator+(Count a, Count b) { return a += b; }
  friend constexpr auto operator<=>(Count, Count) = default;

  // Decimal text with at most six fractional digits, no trailing zeros.
  std::string to_string() const;
  static Count parse(const std::string& text);

 private:
  constexpr explicit Count(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

struct Variable {
  std::string name;
  int cardinality = 2;
  friend bool operator==(const Variable&, const Variable&) = default;
};

// Ordered variable list. Cardinalities are limited to 256 so a value index
// always fits one byte.
class Scheme {
 public:
  static constexpr int kMaxCardinality = 256;

  Scheme() = default;
  explicit Scheme(std::vector<Variable> variables);

  std::size_t size() const { return variables_.size(); }
  const Variable& operator[](std::size_t i) const { return variables_[i]; }
  const std::vector<Variable>& variables() const { return variables_; }
  int cardinality(std::size_t i) const { return variables_[i].cardinality; }

  // Index of the named variable; throws DataError when absent.
  int index_of(const std::string& name) const;

  friend bool operator==(const Scheme&, const Scheme&) = default;

 private:
  std::vector<Variable> variables_;
};

using Config = std::vector<std::uint8_t>;
using VarSubset = std::vector<int>;

// Compressed dataset: distinct configurations with positive counts, kept in
// lexicographic configuration order.
class FrequencyTable {
 public:
  struct Row {
    Config config;
    Count count;
  };

  FrequencyTable() = default;
  // Rejects out-of-range values and duplicate configurations. Zero-count rows
  // are dropped.
  FrequencyTable(Scheme scheme, std::vector<Row> rows);

  const Scheme& scheme() const { return scheme_; }
  std::size_t row_count() const { return counts_.size(); }
  std::span<const std::uint8_t> config(std::size_t row) const {
    return {values_.data() + row * scheme_.size(), scheme_.size()};
  }
  Count count(std::size_t row) const { return counts_[row]; }
  Count total() const { return total_; }

  std::vector<Row> rows() const;

  // Splits rows round-robin into `parts` tables over the same scheme.
  std::vector<FrequencyTable> shard(std::size_t parts) const;

  friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;

 private:
  Scheme scheme_;
  std::vector<std::uint8_t> values_;
  std::vector<Count> counts_;
  Count total_;
};

// Counts over an ordered variable subset. Entries are keyed by the
// mixed-radix index of the sub-configuration (first variable most
// significant), sorted ascending, zero counts omitted.
class MarginalTable {
 public:
  struct Entry {
    std::uint64_t key;
    Count count;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  MarginalTable() = default;
  MarginalTable(const Scheme& scheme, VarSubset subset);
  MarginalTable(const Scheme& scheme, VarSubset subset, std::vector<Entry> entries);
  MarginalTable(VarSubset subset, std::vector<int> cardinalities, std::vector<Entry> entries);

  const VarSubset& subset() const { return subset_; }
  const std::vector<int>& cardinalities() const { return cards_; }
  const std::vector<Entry>& entries() const { return entries_; }
  Count total() const { return total_; }

  // Count of a sub-configuration given in subset order; zero when absent.
  Count at(std::span<const std::uint8_t> config) const;
  std::uint64_t key_of(std::span<const std::uint8_t> config) const;
  Config config_of(std::uint64_t key) const;

  friend bool operator==(const MarginalTable&, const MarginalTable&) = default;

 private:
  VarSubset subset_;
  std::vector<int> cards_;
  std::vector<Entry> entries_;
  Count total_;
};

MarginalTable project(const FrequencyTable& table, std::span<const int> subset);

// Empirical entropy in bits of the normalized counts.
double entropy(const MarginalTable& marginal);

MarginalTable merge_counts(const MarginalTable& a, const MarginalTable& b);

enum class DataFormat { text, binary };

FrequencyTable read_dataset(const std::filesystem::path& path, DataFormat format);
void write_dataset(const FrequencyTable& table, const std::filesystem::path& path,
                   DataFormat format);

FrequencyTable parse_dataset(const std::string& bytes, DataFormat format);
std::string serialize_dataset(const FrequencyTable& table, DataFormat format);

}  // namespace dmn
