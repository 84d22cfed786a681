#include "dmn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace dmn {

namespace {

constexpr std::uint64_t kDenseLimit = 1u << 20;

std::uint64_t checked_space(const std::vector<int>& cards) {
  std::uint64_t space = 1;
  for (int c : cards) {
    if (space > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(c))
      throw DataError("marginal state space does not fit 64 bits");
    space *= static_cast<std::uint64_t>(c);
  }
  return space;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

long parse_int(const std::string& tok, const std::string& what) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw DataError("malformed " + what + ": '" + tok + "'");
  try {
    return std::stol(tok);
  } catch (const std::exception&) {
    throw DataError("malformed " + what + ": '" + tok + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Count

Count Count::from_real(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw DataError("count must be a finite non-negative number");
  return Count(std::llround(value * static_cast<double>(kScale)));
}

std::string Count::to_string() const {
  std::string whole = std::to_string(micros_ / kScale);
  std::int64_t frac = micros_ % kScale;
  if (frac == 0) return whole;
  std::string digits = std::to_string(frac);
  digits.insert(0, 6 - digits.size(), '0');
  while (digits.back() == '0') digits.pop_back();
  return whole + "." + digits;
}

Count Count::parse(const std::string& text) {
  auto dot = text.find('.');
  std::string whole = text.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
  auto all_digits = [](const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  if (whole.empty() || !all_digits(whole) || !all_digits(frac) ||
      (dot != std::string::npos && frac.empty()))
    throw DataError("malformed count: '" + text + "'");
  if (frac.size() > 6) throw DataError("count has more than six decimals: '" + text + "'");
  if (whole.size() > 12) throw DataError("count too large: '" + text + "'");
  frac.append(6 - frac.size(), '0');
  return Count(std::stoll(whole) * kScale + std::stoll(frac));
}

// ---------------------------------------------------------------------------
// Scheme

Scheme::Scheme(std::vector<Variable> variables) : variables_(std::move(variables)) {
  std::set<std::string> seen;
  for (const auto& v : variables_) {
    if (v.name.empty() ||
        std::any_of(v.name.begin(), v.name.end(), [](unsigned char c) { return std::isspace(c); }))
      throw DataError("invalid variable name '" + v.name + "'");
    if (!seen.insert(v.name).second) throw DataError("duplicate variable name '" + v.name + "'");
    if (v.cardinality < 2 || v.cardinality > kMaxCardinality)
      throw DataError("variable '" + v.name + "' has cardinality outside [2, 256]");
  }
}

int Scheme::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return static_cast<int>(i);
  throw DataError("unknown variable '" + name + "'");
}

// ---------------------------------------------------------------------------
// FrequencyTable

FrequencyTable::FrequencyTable(Scheme scheme, std::vector<Row> rows) : scheme_(std::move(scheme)) {
  const std::size_t k = scheme_.size();
  for (const auto& row : rows) {
    if (row.config.size() != k) throw DataError("row width does not match scheme");
    for (std::size_t v = 0; v < k; ++v)
      if (row.config[v] >= scheme_.cardinality(v))
        throw DataError("value index " + std::to_string(row.config[v]) + " out of range for variable '" +
                        scheme_[v].name + "'");
    if (row.count.micros() < 0) throw DataError("negative count");
  }
  std::erase_if(rows, [](const Row& r) { return r.count.is_zero(); });
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.config < b.config; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].config == rows[i - 1].config) throw DataError("duplicate configuration row");
  values_.reserve(rows.size() * k);
  counts_.reserve(rows.size());
  for (auto& row : rows) {
    values_.insert(values_.end(), row.config.begin(), row.config.end());
    counts_.push_back(row.count);
    total_ += row.count;
  }
}

std::vector<FrequencyTable::Row> FrequencyTable::rows() const {
  std::vector<Row> out;
  out.reserve(row_count());
  for (std::size_t r = 0; r < row_count(); ++r) {
    auto c = config(r);
    out.push_back({Config(c.begin(), c.end()), counts_[r]});
  }
  return out;
}

std::vector<FrequencyTable> FrequencyTable::shard(std::size_t parts) const {
  if (parts == 0) throw DataError("cannot shard into zero parts");
  std::vector<std::vector<Row>> buckets(parts);
  auto all = rows();
  for (std::size_t r = 0; r < all.size(); ++r) buckets[r % parts].push_back(std::move(all[r]));
  std::vector<FrequencyTable> out;
  out.reserve(parts);
  for (auto& b : buckets) out.emplace_back(scheme_, std::move(b));
  return out;
}

// ---------------------------------------------------------------------------
// MarginalTable

MarginalTable::MarginalTable(const Scheme& scheme, VarSubset subset) : subset_(std::move(subset)) {
  std::set<int> seen;
  for (int v : subset_) {
    if (v < 0 || static_cast<std::size_t>(v) >= scheme.size())
      throw DataError("unknown variable index " + std::to_string(v) + " in subset");
    if (!seen.insert(v).second) throw DataError("repeated variable in subset");
    cards_.push_back(scheme.cardinality(v));
  }
  checked_space(cards_);
}

MarginalTable::MarginalTable(const Scheme& scheme, VarSubset subset, std::vector<Entry> entries)
    : MarginalTable(scheme, std::move(subset)) {
  *this = MarginalTable(subset_, cards_, std::move(entries));
}

MarginalTable::MarginalTable(VarSubset subset, std::vector<int> cardinalities, std::vector<Entry> entries)
    : subset_(std::move(subset)), cards_(std::move(cardinalities)) {
  if (subset_.size() != cards_.size()) throw DataError("subset and cardinality lists differ in length");
  const std::uint64_t space = checked_space(cards_);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].key >= space) throw DataError("marginal key out of range");
    if (entries[i].count.micros() <= 0) throw DataError("marginal entries must be positive");
    if (i > 0 && entries[i].key <= entries[i - 1].key) throw DataError("marginal keys must be strictly increasing");
    total_ += entries[i].count;
  }
  entries_ = std::move(entries);
}

std::uint64_t MarginalTable::key_of(std::span<const std::uint8_t> config) const {
  if (config.size() != cards_.size()) throw DataError("configuration width does not match subset");
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < cards_.size(); ++i) {
    if (config[i] >= cards_[i]) throw DataError("value index out of range");
    key = key * static_cast<std::uint64_t>(cards_[i]) + config[i];
  }
  return key;
}

Config MarginalTable::config_of(std::uint64_t key) const {
  Config out(cards_.size());
  for (std::size_t i = cards_.size(); i-- > 0;) {
    out[i] = static_cast<std::uint8_t>(key % static_cast<std::uint64_t>(cards_[i]));
    key /= static_cast<std::uint64_t>(cards_[i]);
  }
  return out;
}

Count MarginalTable::at(std::span<const std::uint8_t> config) const {
  const std::uint64_t key = key_of(config);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, std::uint64_t k) { return e.key < k; });
  return it != entries_.end() && it->key == key ? it->count : Count{};
}

// ---------------------------------------------------------------------------
// Operations

MarginalTable project(const FrequencyTable& table, std::span<const int> subset) {
  MarginalTable shape(table.scheme(), VarSubset(subset.begin(), subset.end()));
  const auto& cards = shape.cardinalities();
  const std::uint64_t space = checked_space(cards);

  std::vector<std::uint64_t> stride(cards.size());
  std::uint64_t s = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    stride[i] = s;
    s *= static_cast<std::uint64_t>(cards[i]);
  }
  auto key_of_row = [&](std::size_t r) {
    auto cfg = table.config(r);
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) key += cfg[subset[i]] * stride[i];
    return key;
  };

  std::vector<MarginalTable::Entry> entries;
  if (space <= kDenseLimit) {
    std::vector<std::int64_t> dense(space, 0);
    for (std::size_t r = 0; r < table.row_count(); ++r) dense[key_of_row(r)] += table.count(r).micros();
    for (std::uint64_t k = 0; k < space; ++k)
      if (dense[k] != 0) entries.push_back({k, Count::from_micros(dense[k])});
  } else {
    std::unordered_map<std::uint64_t, std::int64_t> sparse;
    for (std::size_t r = 0; r < table.row_count(); ++r) sparse[key_of_row(r)] += table.count(r).micros();
    entries.reserve(sparse.size());
    for (auto [k, c] : sparse) entries.push_back({k, Count::from_micros(c)});
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  }
  return MarginalTable(shape.subset(), cards, std::move(entries));
}

double entropy(const MarginalTable& marginal) {
  if (marginal.total().is_zero()) throw DataError("entropy of an empty marginal");
  const double total = static_cast<double>(marginal.total().micros());
  double h = 0.0;
  for (const auto& e : marginal.entries()) {
    const double p = static_cast<double>(e.count.micros()) / total;
    h -= p * std::log2(p);
  }
  return h < 0.0 ? 0.0 : h;
}

MarginalTable merge_counts(const MarginalTable& a, const MarginalTable& b) {
  if (a.subset() != b.subset() || a.cardinalities() != b.cardinalities())
    throw DataError("cannot merge marginals over different subsets");
  std::vector<MarginalTable::Entry> out;
  out.reserve(a.entries().size() + b.entries().size());
  auto ia = a.entries().begin(), ib = b.entries().begin();
  while (ia != a.entries().end() || ib != b.entries().end()) {
    if (ib == b.entries().end() || (ia != a.entries().end() && ia->key < ib->key)) {
      out.push_back(*ia++);
    } else if (ia == a.entries().end() || ib->key < ia->key) {
      out.push_back(*ib++);
    } else {
      out.push_back({ia->key, ia->count + ib->count});
      ++ia;
      ++ib;
    }
  }
  return MarginalTable(a.subset(), a.cardinalities(), std::move(out));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string header_text(const FrequencyTable& table) {
  std::ostringstream out;
  out << "dmn-data v1\n";
  out << "vars " << table.scheme().size() << "\n";
  for (const auto& v : table.scheme().variables()) out << v.name << " " << v.cardinality << "\n";
  out << "rows " << table.row_count() << "\n";
  return out.str();
}

struct Header {
  Scheme scheme;
  std::size_t rows = 0;
  std::size_t body_offset = 0;
};

// Reads the line-oriented header; `pos` advances past each consumed line.
Header parse_header(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= bytes.size()) throw DataError("malformed header: unexpected end of file");
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) nl = bytes.size();
    std::string line = bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl + 1;
    return line;
  };
  if (next_line() != "dmn-data v1") throw DataError("malformed header: expected 'dmn-data v1'");
  auto vars = split_ws(next_line());
  if (vars.size() != 2 || vars[0] != "vars") throw DataError("malformed header: expected 'vars k'");
  const long k = parse_int(vars[1], "variable count");
  std::vector<Variable> variables;
  for (long i = 0; i < k; ++i) {
    auto tok = split_ws(next_line());
    if (tok.size() != 2) throw DataError("malformed header: expected 'name cardinality'");
    variables.push_back({tok[0], static_cast<int>(parse_int(tok[1], "cardinality"))});
  }
  auto rows = split_ws(next_line());
  if (rows.size() != 2 || rows[0] != "rows") throw DataError("malformed header: expected 'rows r'");
  Header h{Scheme(std::move(variables)), static_cast<std::size_t>(parse_int(rows[1], "row count")), 0};
  h.body_offset = std::min(pos, bytes.size());
  return h;
}

}  // namespace

std::string serialize_dataset(const FrequencyTable& table, DataFormat format) {
  std::string out = header_text(table);
  const std::size_t k = table.scheme().size();
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    auto cfg = table.config(r);
    if (format == DataFormat::text) {
      for (std::size_t v = 0; v < k; ++v) {
        out += std::to_string(cfg[v]);
        out += ' ';
      }
      out += table.count(r).to_string();
      out += '\n';
    } else {
      out.append(reinterpret_cast<const char*>(cfg.data()), k);
      auto micros = static_cast<std::uint64_t>(table.count(r).micros());
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((micros >> (8 * b)) & 0xff));
    }
  }
  return out;
}

FrequencyTable parse_dataset(const std::string& bytes, DataFormat format) {
  Header h = parse_header(bytes);
  const std::size_t k = h.scheme.size();
  std::vector<FrequencyTable::Row> rows;
  rows.reserve(h.rows);
  if (format == DataFormat::text) {
    std::istringstream in(bytes.substr(h.body_offset));
    std::string line;
    for (std::size_t r = 0; r < h.rows; ++r) {
      if (!std::getline(in, line)) throw DataError("malformed body: fewer rows than declared");
      auto tok = split_ws(line);
      if (tok.size() != k + 1) throw DataError("malformed row " + std::to_string(r) + ": expected " +
                                               std::to_string(k + 1) + " fields");
      Config cfg(k);
      for (std::size_t v = 0; v < k; ++v) {
        long value = parse_int(tok[v], "value index");
        if (value >= h.scheme.cardinality(v))
          throw DataError("value index " + tok[v] + " out of range for variable '" + h.scheme[v].name + "'");
        cfg[v] = static_cast<std::uint8_t>(value);
      }
      rows.push_back({std::move(cfg), Count::parse(tok[k])});
    }
    while (std::getline(in, line))
      if (!split_ws(line).empty()) throw DataError("malformed body: more rows than declared");
  } else {
    const std::size_t record = k + 8;
    if (bytes.size() - h.body_offset != h.rows * record)
      throw DataError("malformed body: binary payload size does not match row count");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.body_offset);
    for (std::size_t r = 0; r < h.rows; ++r, p += record) {
      Config cfg(p, p + k);
      for (std::size_t v = 0; v < k; ++v)
        if (cfg[v] >= h.scheme.cardinality(v))
          throw DataError("value index " + std::to_string(cfg[v]) + " out of range for variable '" +
                          h.scheme[v].name + "'");
      std::uint64_t micros = 0;
      for (int b = 0; b < 8; ++b) micros |= static_cast<std::uint64_t>(p[k + b]) << (8 * b);
      if (micros > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        throw DataError("count out of range");
      rows.push_back({std::move(cfg), Count::from_micros(static_cast<std::int64_t>(micros))});
    }
  }
  return FrequencyTable(std::move(h.scheme), std::move(rows));
}

FrequencyTable read_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format);
}

void write_dataset(const FrequencyTable& table, const std::filesystem::path& path, DataFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  const std::string bytes = serialize_dataset(table, format);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing dataset '" + path.string() + "'");
}

}  // namespace dmn
