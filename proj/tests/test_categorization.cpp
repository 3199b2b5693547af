#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "exdyn/categorization.hpp"
#include "exdyn/category_store.hpp"

using namespace exdyn;
using Catch::Approx;

TEST_CASE("smoothing kernel integrates to one") {
  SmoothingKernel<1> k1{10.0};
  SmoothingKernel<2> k2{10.0};
  CHECK(k1.peak() == 5.0);
  CHECK(k2.peak() == Approx(100.0 / (2.0 * std::numbers::pi)));
  // Radial quadrature: int 2 pi r K(r) dr and int K(x) dx.
  double i1 = 0.0, i2 = 0.0;
  const double h = 1e-5;
  for (double r = 0.5 * h; r < 5.0; r += h) {
    i1 += 2.0 * k1.at_distance(r) * h;
    i2 += 2.0 * std::numbers::pi * r * k2.at_distance(r) * h;
  }
  CHECK(i1 == Approx(1.0).epsilon(1e-8));
  CHECK(i2 == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("smoothed density examples") {
  const SmoothingKernel<1> k{10.0};
  SECTION("at the exemplar itself") {
    CategoryStore<1> s("A", 1.0);
    s.insert({2.0}, 0.0, 0.3);
    CHECK(smoothed_density<1>(s, {2.0}, k, 0.0) == Approx(5.0 * 0.3));
  }
  SECTION("at distance 1/kappa") {
    CategoryStore<1> s("A", 1.0);
    s.insert({0.0}, 0.0, 1.0);
    CHECK(smoothed_density<1>(s, {0.1}, k, 0.0) == Approx(1.83940).margin(5e-6));
    CHECK(smoothed_density<1>(s, {-0.1}, k, 0.0) == Approx(5.0 * std::exp(-1.0)).epsilon(1e-14));
  }
  SECTION("empty store") {
    CategoryStore<1> s("A", 1.0);
    CHECK(smoothed_density<1>(s, {0.0}, k, 3.0) == 0.0);
  }
  SECTION("integrates to the total activation") {
    CategoryStore<1> s("A", 1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> pos(0.0, 1.0);
    for (int i = 0; i < 30; ++i) s.insert({pos(rng)}, 0.05 * i, 1e-3);
    const double t = 2.0;
    double integral = 0.0;
    const double h = 1e-4;
    for (double y = -12.0; y < 12.0; y += h) integral += smoothed_density<1>(s, {y + 0.5 * h}, k, t) * h;
    CHECK(integral == Approx(total_activation(s, t)).epsilon(1e-6));
  }
  SECTION("matches a direct weight sum") {
    CategoryStore<2> s("A", 0.5);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> pos(0.0, 0.3);
    for (int i = 0; i < 20; ++i) s.insert({pos(rng), pos(rng)}, 0.1 * i, 1.0);
    const SmoothingKernel<2> k2{10.0};
    const PhonPoint<2> y{0.1, -0.05};
    double direct = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto e = s.exemplar(i);
      direct += weight_at<2>(e, 3.0, 0.5) * k2(PhonPoint<2>{y[0] - e.position[0], y[1] - e.position[1]});
    }
    CHECK(smoothed_density<2>(s, y, k2, 3.0) == Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("selection probability examples") {
  auto f = [](std::vector<double> s, double p) { return *selection_probability(s, p); };
  CHECK(f({2.0, 2.0}, 1.0) == std::vector<double>{0.5, 0.5});
  for (double p : {0.5, 1.0, 3.0}) CHECK(f({3.0, 0.0}, p) == std::vector<double>{1.0, 0.0});
  const auto q = f({4.0, 1.0}, 1.5);
  CHECK(q[0] == Approx(8.0 / 9.0).epsilon(1e-14));
  CHECK(q[1] == Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK_FALSE(selection_probability(std::vector<double>{0.0, 0.0}, 1.0).has_value());
  CHECK_THROWS_AS(selection_probability(std::vector<double>{-1.0, 2.0}, 1.0), ContractViolation);
  CHECK_THROWS_AS(selection_probability(std::vector<double>{std::nan(""), 2.0}, 1.0), ContractViolation);
  SECTION("p = 0 with an empty category: 0^0 counts as 0") {
    CHECK(f({0.0, 5.0, 1.0}, 0.0) == std::vector<double>{0.0, 0.5, 0.5});
  }
}

TEST_CASE("selection probability properties over random inputs") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ncat(2, 6);
  std::uniform_real_distribution<double> logs(-30.0, 30.0), pexp(0.0, 5.0), u01(0.0, 1.0);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = ncat(rng);
    std::vector<double> s(n);
    for (auto& x : s) x = u01(rng) < 0.1 ? 0.0 : std::exp(logs(rng));
    s[0] = std::exp(logs(rng));
    const double p = pexp(rng);
    const auto f = *selection_probability(s, p);

    double sum = 0.0;
    for (double v : f) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      sum += v;
    }
    REQUIRE(std::abs(sum - 1.0) <= 8 * eps);

    std::vector<double> scaled(s);
    const double c = std::exp(logs(rng));
    for (auto& x : scaled) x *= c;
    const auto g = *selection_probability(scaled, p);
    for (int i = 0; i < n; ++i) REQUIRE(std::abs(g[i] - f[i]) <= 1e-12 + 1e-9 * f[i]);

    std::vector<double> bigger(s);
    bigger[0] *= 1.0 + 2.0 * u01(rng);
    const auto h = *selection_probability(bigger, p);
    REQUIRE(h[0] >= f[0] - 8 * eps);

    if (p == 0.0) continue;
    std::vector<double> uniform_check(s);
    const auto z = *selection_probability(uniform_check, 0.0);
    int positive = 0;
    for (double x : s) positive += x > 0;
    for (int i = 0; i < n; ++i) REQUIRE(z[i] == Approx(s[i] > 0 ? 1.0 / positive : 0.0).epsilon(1e-14));
  }
}

TEST_CASE("large p favours the denser category") {
  const auto f = *selection_probability(std::vector<double>{1.1, 1.0}, 200.0);
  CHECK(f[0] > 0.999999);
  const auto g = *selection_probability(std::vector<double>{1e-300, 1.1e-300}, 200.0);
  CHECK(g[1] > 0.999999);
}

TEST_CASE("classification regimes") {
  const std::vector<double> skewed{0.01, 0.99};
  const std::vector<double> split{0.3, 0.7};
  CHECK(classify(Regime::NoCompetition, 0, skewed, 0.9) == ClassificationOutcome::accept(0));
  CHECK(classify(Regime::PureCompetition, 0, split, 0.5) == ClassificationOutcome::accept(1));
  CHECK(classify(Regime::PureCompetition, 0, split, 0.2) == ClassificationOutcome::accept(0));
  CHECK(classify(Regime::CompetitionWithDiscards, 0, split, 0.5) == ClassificationOutcome::discard());
  CHECK(classify(Regime::CompetitionWithDiscards, 0, split, 0.1) == ClassificationOutcome::accept(0));
  CHECK_THROWS_AS(classify(Regime::PureCompetition, 0, std::vector<double>{0.5, 0.6}, 0.1), ContractViolation);
  CHECK_THROWS_AS(classify(Regime::CompetitionWithDiscards, 0, std::vector<double>{-0.5, 1.5}, 0.1),
                  ContractViolation);

  SECTION("no competition never discards and never switches category") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const std::size_t src = i % 3;
      const std::vector<double> probs{u(rng), u(rng), u(rng)};
      const auto out = classify(Regime::NoCompetition, src, probs, u(rng));
      REQUIRE(out.accepted());
      REQUIRE(out.category == src);
    }
  }
  SECTION("a zero-probability category is never drawn") {
    const std::vector<double> probs{0.0, 1.0, 0.0};
    for (double u : {0.0, 0.5, 0.999999999, 1.0}) CHECK(draw_category(probs, u) == 1);
  }
}
