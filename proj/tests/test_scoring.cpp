#include <doctest.h>

#include <cmath>

#include "dmn/scoring.hpp"
#include "dmn/search.hpp"
#include "support.hpp"

using namespace dmn;

namespace {

double mutual_information(const FrequencyTable& t, int a, int b) {
  return test::oracle_entropy(t, {a}) + test::oracle_entropy(t, {b}) - test::oracle_entropy(t, {a, b});
}

}  // namespace

TEST_CASE("model entropy on table1") {
  auto t = test::table1_data();
  const double h4 = -0.365 * std::log2(0.365) - 0.635 * std::log2(0.635);
  CHECK(model_entropy(Graph(4), t) == doctest::Approx(3.0 + h4).epsilon(1e-12));
  CHECK(model_entropy(Graph(4), t) == doctest::Approx(3.9469).epsilon(1e-3));

  double joint = 0.0;
  for (double p : {0.0225, 0.2025, 0.005, 0.02, 0.0175, 0.0075, 0.135, 0.09, 0.02, 0.18, 0.01, 0.04, 0.035, 0.015,
                   0.12, 0.08})
    joint -= p * std::log2(p);
  Graph k4(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK(model_entropy(k4, t) == doctest::Approx(joint).epsilon(1e-12));

  double sum = 0.0;
  for (int v = 0; v < 4; ++v) sum += entropy(project(t, std::vector<int>{v}));
  CHECK(model_entropy(Graph(4), t) == sum);
  CHECK_THROWS_AS(model_entropy(Graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}), t), ScoringError);
}

TEST_CASE("independent pair adds nothing") {
  // X and Y independent by construction: product counts.
  std::vector<FrequencyTable::Row> rows;
  const int px[2] = {3, 7}, py[3] = {1, 2, 5};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 3; ++y)
      rows.push_back({Config{static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y)}, Count::from_whole(px[x] * py[y])});
  FrequencyTable t(Scheme({{"X", 2}, {"Y", 3}}), rows);
  CHECK(model_entropy(Graph(2, {{0, 1}}), t) == doctest::Approx(model_entropy(Graph(2), t)).epsilon(1e-12));
}

TEST_CASE("global decrement") {
  auto t = test::table1_data();
  Graph empty(4);
  CHECK(entropy_decrement_global(empty, empty, t) == 0.0);
  CHECK(std::abs(entropy_decrement_global(empty, Graph(4, {{0, 1}}), t)) < 1e-12);
  const double mi = mutual_information(t, 1, 2);
  CHECK(mi > 0.3);
  CHECK(entropy_decrement_global(empty, Graph(4, {{1, 2}}), t) == doctest::Approx(mi).epsilon(1e-12));
  CHECK_THROWS_AS(entropy_decrement_global(Graph(4, {{0, 1}}), Graph(4, {{1, 2}}), t), ScoringError);
}

TEST_CASE("local decrement for the two-link move") {
  auto t = test::table1_data();
  Graph base(4, {{1, 2}, {1, 3}, {2, 3}});
  LinkSet links{Link(0, 1), Link(0, 2)};
  Graph after = base;
  after.add_links(links);
  const double local = entropy_decrement_local(base, build_forest(base), links, t);
  CHECK(local == doctest::Approx(entropy_decrement_global(base, after, t)).epsilon(1e-12));
  CHECK(local == doctest::Approx(0.014378460478079003).epsilon(1e-9));
  CHECK(local > 0.003);

  CHECK_THROWS_AS(entropy_decrement_local(Graph(4, {{0, 1}, {1, 2}, {2, 3}}), build_forest(Graph(4, {{0, 1}, {1, 2}, {2, 3}})),
                                          {Link(0, 3)}, t),
                  ScoringError);
}

TEST_CASE("every single-link move on table1 matches the global decrement") {
  auto t = test::table1_data();
  Graph g(4, {{1, 2}});
  auto forest = build_forest(g);
  for (const auto& links : enumerate_candidates(g, 1, 4)) {
    Graph after = g;
    after.add_links(links);
    CHECK(entropy_decrement_local(g, forest, links, t) ==
          doctest::Approx(entropy_decrement_global(g, after, t)).epsilon(1e-12));
  }
}

TEST_CASE("model entropy matches the chain-rule oracle and is forest invariant") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 8;
    auto t = test::random_table(rng, n, 80, 3, trial % 2 == 0);
    Graph g = test::random_chordal(rng, n);
    auto forest = build_forest(g);
    auto alt = junction_forest(forest.cliques, TieBreak::highest_pair);
    TableSource src(t);
    const double h = model_entropy(forest, src);
    CHECK(h == doctest::Approx(test::oracle_model_entropy(g, t)).epsilon(1e-10));
    CHECK(std::abs(h - model_entropy(alt, src)) < 1e-12);
  }
}

TEST_CASE("random valid moves: local equals global, decrements non-negative") {
  SplitMix64 rng(43);
  int checked = 0;
  for (int trial = 0; checked < 200 && trial < 5000; ++trial) {
    const int n = 3 + trial % 8;
    auto t = test::random_table(rng, n, 60, 3, trial % 2 == 1);
    Graph g = test::random_chordal(rng, n);
    const int level = 1 + test::below(rng, 3);
    auto candidates = enumerate_candidates(g, level, 4, 100000);
    if (candidates.empty()) continue;
    const auto& links = candidates[test::below(rng, static_cast<int>(candidates.size()))];
    if (!legal_move_forest(g, links, 4)) continue;
    Graph after = g;
    after.add_links(links);
    const double local = entropy_decrement_local(g, build_forest(g), links, t);
    const double global = entropy_decrement_global(g, after, t);
    CHECK(std::abs(local - global) < 1e-9);
    CHECK(global >= -1e-9);
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("significance is strict") {
  CHECK(is_significant(0.05, Threshold(0.01)));
  CHECK_FALSE(is_significant(0.01, Threshold(0.01)));
  CHECK_FALSE(is_significant(0.0, Threshold(0.003)));
  CHECK_THROWS_AS(Threshold(-0.1), ScoringError);
}
