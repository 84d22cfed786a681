#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace dmn;

namespace {

// Marginal by summing joint() over every full configuration.
std::vector<double> brute_marginal(const ClusterModel& m, const std::vector<int>& subset) {
  const Scheme& s = m.scheme();
  std::size_t states = 1;
  for (int v : subset) states *= static_cast<std::size_t>(s.cardinality(v));
  std::vector<double> out(states, 0.0);
  Config cfg(s.size(), 0);
  for (;;) {
    std::size_t key = 0;
    for (int v : subset) key = key * static_cast<std::size_t>(s.cardinality(v)) + cfg[v];
    out[key] += m.joint(cfg);
    std::size_t p = cfg.size();
    while (p > 0) {
      --p;
      if (++cfg[p] < s.cardinality(p)) break;
      cfg[p] = 0;
      if (p == 0) return out;
    }
  }
}

ClusterModel two_clusters(double shared_p0) {
  Scheme s({{"A", 2}, {"B", 2}, {"C", 2}});
  // P(A,B) and P(B,C), B marginal {0.6, 0.4} from the first cluster.
  Cluster ab{{0, 1}, {0.1, 0.2, 0.5, 0.2}};
  Cluster bc{{1, 2}, {shared_p0 * 0.5, shared_p0 * 0.5, (1 - shared_p0) * 0.25, (1 - shared_p0) * 0.75}};
  return compose_model(s, {ab, bc}, {{0, 1}});
}

}  // namespace

TEST_CASE("table1 model") {
  auto m = table1_model();
  CHECK(m.joint(Config{0, 0, 0, 0}) == 0.0225);
  CHECK(m.joint(Config{1, 1, 1, 1}) == 0.08);
  double sum = 0.0;
  for (double p : m.clusters()[0].table) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));

  for (int v = 0; v < 3; ++v) {
    auto x = exact_marginal(m, std::vector<int>{v});
    CHECK(x.probs[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
  auto x4 = exact_marginal(m, std::vector<int>{3});
  CHECK(x4.probs[0] == doctest::Approx(0.365).epsilon(1e-15));
  CHECK(x4.probs[1] == doctest::Approx(0.635).epsilon(1e-15));

  auto x12 = exact_marginal(m, std::vector<int>{0, 1});
  for (double p : x12.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  auto x23 = exact_marginal(m, std::vector<int>{1, 2});
  CHECK(x23.probs[0] == doctest::Approx(0.425).epsilon(1e-15));
}

TEST_CASE("parity model") {
  auto z = parity_model(3, 0.0);
  CHECK(z.joint(Config{0, 0, 0}) == 0.25);
  CHECK(z.joint(Config{0, 0, 1}) == 0.0);
  auto e = parity_model(3, 0.1);
  CHECK(e.joint(Config{0, 0, 1}) == doctest::Approx(0.025));
  auto x13 = exact_marginal(z, std::vector<int>{0, 2});
  for (double p : x13.probs) CHECK(p == doctest::Approx(0.25));
  for (double eps : {0.0, 0.05, 0.3}) {
    auto pi = verify_pi(parity_model(3, eps), std::vector<int>{0, 1, 2});
    for (const auto& pair : pi.pairs) CHECK(pair.independent);
  }
  CHECK_THROWS_AS(parity_model(2, 0.1), ModelError);
  CHECK_THROWS_AS(parity_model(3, 0.5), ModelError);
  CHECK_THROWS_AS(parity_model(3, -0.1), ModelError);
}

TEST_CASE("compose model validation") {
  CHECK_NOTHROW(two_clusters(0.6));
  CHECK_THROWS_AS(two_clusters(0.61), ModelError);
  Scheme s({{"A", 2}, {"B", 2}});
  CHECK_THROWS_AS(compose_model(s, {{{0}, {0.5, 0.5}}}, {}), ModelError);  // B uncovered
  CHECK_THROWS_AS(compose_model(s, {{{0, 1}, {0.5, 0.5, 0.5, 0.5}}}, {}), ModelError);
  CHECK_THROWS_AS(compose_model(s, {{{0, 1}, {-0.1, 0.6, 0.25, 0.25}}}, {}), ModelError);
  CHECK_THROWS_AS(compose_model(s, {{{0, 1}, {0.5, 0.5}}}, {}), ModelError);
  // Cycle in the cluster tree.
  Scheme t({{"A", 2}, {"B", 2}, {"C", 2}});
  std::vector<double> u(4, 0.25);
  CHECK_THROWS_AS(compose_model(t, {{{0, 1}, u}, {{1, 2}, u}, {{0, 2}, u}}, {{0, 1}, {1, 2}, {0, 2}}), ModelError);
  // Running intersection: A in clusters 0 and 2 but not on the path.
  CHECK_THROWS_AS(compose_model(t, {{{0, 1}, u}, {{1, 2}, u}, {{2, 0}, u}}, {{0, 1}, {1, 2}}), ModelError);
}

TEST_CASE("composed joint matches the product formula") {
  auto m = two_clusters(0.6);
  for (std::uint8_t a = 0; a < 2; ++a)
    for (std::uint8_t b = 0; b < 2; ++b)
      for (std::uint8_t c = 0; c < 2; ++c) {
        const double pab = m.clusters()[0].table[a * 2 + b];
        const double pbc = m.clusters()[1].table[b * 2 + c];
        const double pb = b ? 0.4 : 0.6;
        CHECK(m.joint(Config{a, b, c}) == doctest::Approx(pab * pbc / pb).epsilon(1e-14));
      }

  auto pim = pim_like_model(12, {3, 3}, 0.05, 5);
  double total = 0.0;
  auto all = brute_marginal(pim, {});
  total = all[0];
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& subset : std::vector<std::vector<int>>{{0}, {2, 3}, {4, 5, 6}, {0, 11}, {1, 6, 10}}) {
    auto brute = brute_marginal(pim, subset);
    auto exact = exact_marginal(pim, subset);
    REQUIRE(exact.probs.size() == brute.size());
    for (std::size_t i = 0; i < brute.size(); ++i) CHECK(exact.probs[i] == doctest::Approx(brute[i]).epsilon(1e-12));
  }
}

TEST_CASE("pim-like fixtures") {
  struct Case {
    int vars;
    std::vector<int> parity;
  };
  for (const auto& c : std::vector<Case>{{26, {3}}, {30, {3, 3}}, {35, {3, 3}}, {16, {4}}, {12, {3, 3}}}) {
    auto m = pim_like_model(c.vars, c.parity, 0.05, 1);
    CHECK(static_cast<int>(m.scheme().size()) == c.vars);
    std::size_t parity_found = 0;
    for (const auto& cl : m.clusters()) {
      auto members = cl.members;
      if (members.size() < 3) continue;
      auto pi = verify_pi(m, members);
      if (pi.is_pi()) {
        ++parity_found;
        for (const auto& p : pi.pairs) CHECK(p.independent);
      }
    }
    CHECK(parity_found == c.parity.size());
    // Deterministic given the seed.
    CHECK(format_model(m) == format_model(pim_like_model(c.vars, c.parity, 0.05, 1)));
  }
  CHECK_THROWS_AS(pim_like_model(4, {3, 3}, 0.05, 1), ModelError);
}

TEST_CASE("expected counts") {
  auto t = expected_counts(table1_model(), 10000);
  CHECK(t.count(0) == Count::from_whole(225));
  auto one = expected_counts(parity_model(3, 0.1), 1);
  for (std::size_t r = 0; r < one.row_count(); ++r)
    CHECK(one.count(r).value() == doctest::Approx(parity_model(3, 0.1).joint(one.config(r))));

  auto m = pim_like_model(12, {3, 3}, 0.05, 5);
  const double total = 12345.5;
  auto data = expected_counts(m, total);
  SplitMix64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> sub;
    for (int v = 0; v < 12; ++v)
      if (test::below(rng, 3) == 0) sub.push_back(v);
    if (sub.empty()) continue;
    auto proj = project(data, sub);
    auto exact = exact_marginal(m, sub);
    // Each stored row is rounded to 1e-6.
    const double slack = 0.5e-6 * static_cast<double>(data.row_count());
    for (std::size_t key = 0; key < exact.probs.size(); ++key) {
      Config c = proj.config_of(key);
      CHECK(std::abs(proj.at(c).value() - exact.probs[key] * total) <= slack);
    }
  }
  CHECK_THROWS_AS(expected_counts(m, 0), ModelError);
}

TEST_CASE("sampling") {
  auto m = table1_model();
  auto s = sample(m, 10000, 1);
  CHECK(s.total() == Count::from_whole(10000));
  auto x1 = project(s, std::vector<int>{0});
  CHECK(std::abs(x1.at(Config{0}).value() / 10000 - 0.5) < 0.02);
  CHECK(sample(m, 10000, 1) == s);
  CHECK_FALSE(sample(m, 10000, 2) == s);
  auto single = sample(m, 1, 9);
  CHECK(single.row_count() == 1);
  CHECK(single.total() == Count::from_whole(1));
  CHECK_THROWS_AS(sample(m, 0, 1), ModelError);
}

TEST_CASE("sampled marginals converge") {
  auto m = pim_like_model(12, {3, 3}, 0.05, 5);
  std::vector<int> sub{2, 3, 4};
  auto exact = exact_marginal(m, sub);
  std::vector<double> dev;
  for (std::size_t n : {100u, 10000u, 1000000u}) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto p = project(sample(m, n, seed), sub);
      for (std::size_t key = 0; key < exact.probs.size(); ++key)
        worst = std::max(worst, std::abs(p.at(p.config_of(key)).value() / n - exact.probs[key]));
    }
    dev.push_back(worst);
  }
  CHECK(dev[1] < dev[0]);
  CHECK(dev[2] < dev[1]);
  // Within 4 standard errors of the largest possible cell variance.
  CHECK(dev[1] < 4 * 0.5 / std::sqrt(1e4));
  CHECK(dev[2] < 4 * 0.5 / std::sqrt(1e6));
}

TEST_CASE("sampling respects cluster structure") {
  auto m = pim_like_model(16, {4}, 0.05, 4);
  auto s = sample(m, 200000, 3);
  for (const auto& cl : m.clusters()) {
    auto exact = exact_marginal(m, cl.members);
    auto p = project(s, cl.members);
    for (std::size_t key = 0; key < exact.probs.size(); ++key)
      CHECK(std::abs(p.at(p.config_of(key)).value() / 200000 - exact.probs[key]) < 0.01);
  }
}

TEST_CASE("PI verification") {
  auto t1 = verify_pi(table1_model(), std::vector<int>{0, 1, 2});
  REQUIRE(t1.pairs.size() == 3);
  CHECK(t1.pairs[0].independent);        // X1 X2
  CHECK(t1.pairs[1].independent);        // X1 X3
  CHECK_FALSE(t1.pairs[2].independent);  // X2 X3
  CHECK(t1.collective);
  CHECK(t1.is_pi());

  auto p3 = verify_pi(parity_model(3, 0.05), std::vector<int>{0, 1, 2});
  CHECK(p3.collective);
  CHECK(p3.is_pi());

  Scheme s({{"A", 2}, {"B", 2}, {"C", 2}});
  auto indep = compose_model(s, {{{0}, {0.5, 0.5}}, {{1}, {0.3, 0.7}}, {{2}, {0.5, 0.5}}}, {});
  auto r = verify_pi(indep, std::vector<int>{0, 1, 2});
  for (const auto& p : r.pairs) CHECK(p.independent);
  CHECK_FALSE(r.collective);
  CHECK_FALSE(r.is_pi());

  // Chain A - B - C: dependent pairs, no collective effect.
  auto chain = two_clusters(0.6);
  CHECK_FALSE(verify_pi(chain, std::vector<int>{0, 1, 2}).is_pi());

  CHECK_THROWS_AS(verify_pi(table1_model(), std::vector<int>{0, 1}), ModelError);

  // Empirical check on a large expected-count table.
  auto data = expected_counts(parity_model(3, 0.05), 10000);
  CHECK(verify_pi(data, std::vector<int>{0, 1, 2}, 1e-6).is_pi());
}

TEST_CASE("model files round trip") {
  for (const auto& m : {table1_model(), parity_model(3, 0.05), pim_like_model(35, {3, 3}, 0.05, 3)}) {
    const std::string text = format_model(m);
    auto back = parse_model(text);
    CHECK(format_model(back) == text);
    CHECK(back.scheme() == m.scheme());
    CHECK(back.tree() == m.tree());
    for (std::size_t c = 0; c < m.clusters().size(); ++c) CHECK(back.clusters()[c].table == m.clusters()[c].table);
  }
  CHECK_THROWS_AS(parse_model("dmn-model v1\nvars 1\nA 2\nclusters 1\ncluster B\nrows 0\ntree 0\n"), DataError);
  CHECK_THROWS_AS(parse_model("dmn-model v2\n"), ModelError);
  CHECK_THROWS_AS(parse_model("dmn-model v1\nvars 1\nA 2\nclusters 1\ncluster A\nrows 1\n0 1\n"), ModelError);
}

TEST_CASE("random generator vectors") {
  SplitMix64 r0(0);
  CHECK(r0.next() == 0xE220A8397B1DCDAFULL);
  CHECK(r0.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(r0.next() == 0x06C45D188009454FULL);
  SplitMix64 r7(7);
  CHECK(r7.next() == 0x63cbe1e459320dd7ULL);
  CHECK(r7.next() == 0x044c3cd7f43c661cULL);
  CHECK(r7.next() == 0xe6984080bab12a02ULL);
  SplitMix64 u(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}
