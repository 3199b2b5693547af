#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "exdyn/field_engine.hpp"
#include "support.hpp"

using namespace exdyn;
using Catch::Approx;

namespace {

const Grid<1> kDefaultGrid{{-25.0}, {35.0}, {1024}};
const double kS = equilibrium_dispersion(0.0, 0.1, 1.0);

std::vector<double> gaussian(const Grid<1>& g, double center, double width, double mass) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.coord(0, i) - center;
    v[i] = mass * std::exp(-0.5 * y * y / (width * width)) / (width * std::sqrt(2.0 * std::numbers::pi));
  }
  return v;
}

double l2(const std::vector<double>& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

ModelParams one_category() {
  ModelParams p;
  p.rates = {1000.0};
  p.w0 = 1e-3;
  return p;
}

}  // namespace

TEST_CASE("grid quadrature") {
  const Grid<1> g = kDefaultGrid;
  CHECK(g.spacing(0) == Approx(60.0 / 1023.0));
  SECTION("point masses are exact under the trapezoid rule") {
    std::vector<double> v(g.size(), 0.0);
    add_point_mass<1>(g, v, {5.0}, 0.05);
    add_point_mass<1>(g, v, {-25.0}, 0.01);
    CHECK(field_mass<1>(g, v) == Approx(0.06).epsilon(1e-14));
    const Grid<2> g2{{-20.0, -20.0}, {30.0, 30.0}, {64, 80}};
    std::vector<double> w(g2.size(), 0.0);
    add_point_mass<2>(g2, w, {1.234, -7.5}, 0.05);
    CHECK(field_mass<2>(g2, w) == Approx(0.05).epsilon(1e-14));
    CHECK(field_mean<2>(g2, w)[0] == Approx(1.234).epsilon(1e-12));
    CHECK(field_mean<2>(g2, w)[1] == Approx(-7.5).epsilon(1e-12));
    CHECK_THROWS_AS(add_point_mass<1>(g, v, {40.0}, 1.0), ContractViolation);
  }
  SECTION("gaussian moments") {
    const auto v = gaussian(g, 3.0, 2.0, 0.7);
    CHECK(field_mass<1>(g, v) == Approx(0.7).epsilon(1e-10));
    CHECK(field_mean<1>(g, v)[0] == Approx(3.0).epsilon(1e-10));
    CHECK(field_dispersion<1>(g, v) == Approx(2.0).epsilon(1e-4));
    std::vector<double> zero(g.size(), 0.0);
    CHECK_THROWS_AS(field_mean<1>(g, zero), EmptyCategory);
  }
  SECTION("grids are validated") {
    CHECK_THROWS_AS((Grid<1>{{0.0}, {1.0}, {8}}.validate()), InvalidParams);
    CHECK_THROWS_AS((Grid<1>{{1.0}, {0.0}, {32}}.validate()), InvalidParams);
  }
}

TEST_CASE("direct and FFT convolutions agree") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto gauss = [](double r) { return std::exp(-0.5 * r * r); };
  auto expo = [](double r) { return std::exp(-10.0 * r); };
  SECTION("1D") {
    std::vector<double> f(kDefaultGrid.size());
    for (auto& x : f) x = u(gen);
    for (auto [fn, radius] : {std::pair{std::function<double(double)>(gauss), 7.0},
                              std::pair{std::function<double(double)>(expo), 2.8}}) {
      const Convolver<1> d(kDefaultGrid, fn, radius, ConvolutionMethod::Direct);
      const Convolver<1> q(kDefaultGrid, fn, radius, ConvolutionMethod::Fft);
      const auto a = d(f), b = q(f);
      CHECK(l2_diff(a, b) / l2(a) < 1e-10);
      CHECK(max_abs([&] { auto c = a; for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i]; return c; }()) <
            1e-10 * max_abs(a));
    }
  }
  SECTION("2D, non-square") {
    const Grid<2> g{{-10.0, -5.0}, {10.0, 12.0}, {72, 90}};
    std::vector<double> f(g.size());
    for (auto& x : f) x = u(gen);
    const Convolver<2> d(g, gauss, 7.0, ConvolutionMethod::Direct);
    const Convolver<2> q(g, gauss, 7.0, ConvolutionMethod::Fft);
    const auto a = d(f), b = q(f);
    CHECK(l2_diff(a, b) / l2(a) < 1e-10);
    const Convolver<2> d2(g, [](double r) { return std::exp(-3.0 * r); }, 28.0 / 3.0, ConvolutionMethod::Direct);
    const Convolver<2> q2(g, [](double r) { return std::exp(-3.0 * r); }, 28.0 / 3.0, ConvolutionMethod::Fft);
    CHECK(l2_diff(d2(f), q2(f)) / l2(d2(f)) < 1e-10);
  }
  SECTION("auto picks FFT for wide kernels") {
    CHECK(Convolver<1>(kDefaultGrid, gauss, 7.0).method() == ConvolutionMethod::Fft);
    CHECK(Convolver<1>(kDefaultGrid, gauss, 0.1).method() == ConvolutionMethod::Direct);
  }
}

TEST_CASE("smoothed field examples") {
  ModelParams p = one_category();
  SECTION("a delta reproduces the kernel peak") {
    const Grid<1> g{{-5.0}, {5.0}, {1001}};  // kappa h = 0.1
    FieldEngine<1> eng(p, {"A"}, g);
    std::vector<double> v(g.size(), 0.0);
    v[500] = 0.3 / g.spacing(0);
    const auto s = eng.smoothed_field(v);
    CHECK(s[500] == Approx(0.3 * p.kappa / 2.0).epsilon(1e-2));
    CHECK(field_mass<1>(g, s) == Approx(0.3).epsilon(1e-12));
  }
  SECTION("a sharp kernel barely smooths a resolved field") {
    ModelParams q = p;
    q.kappa = 100.0;
    const Grid<1> g{{-10.0}, {10.0}, {10001}};  // kappa h = 0.2
    FieldEngine<1> eng(q, {"A"}, g);
    const auto v = gaussian(g, 0.0, 1.0, 1.0);
    CHECK(l2_diff(eng.smoothed_field(v), v) / l2(v) < 1e-3);
  }
  SECTION("a uniform field is unchanged away from the edges") {
    FieldEngine<1> eng(p, {"A"}, kDefaultGrid);
    const std::vector<double> v(kDefaultGrid.size(), 2.5);
    const auto s = eng.smoothed_field(v);
    for (std::size_t i = 100; i + 100 < s.size(); ++i) REQUIRE(s[i] == Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("pushforward") {
  SECTION("conserves mass and mean of a point mass") {
    std::vector<double> v(kDefaultGrid.size(), 0.0), out(v.size());
    add_point_mass<1>(kDefaultGrid, v, {10.0}, 0.05);
    pushforward<1>(kDefaultGrid, v, 0.9, {0.3}, out);
    CHECK(field_mass<1>(kDefaultGrid, out) == Approx(0.05).epsilon(1e-14));
    CHECK(field_mean<1>(kDefaultGrid, out)[0] == Approx(9.3).epsilon(1e-14));
  }
  SECTION("conserves the mass of smooth fields") {
    for (double c : {-3.0, 5.0, 10.0}) {
      const auto v = gaussian(kDefaultGrid, c, kS, 1.0);
      std::vector<double> out(v.size());
      pushforward<1>(kDefaultGrid, v, 0.9, {0.0}, out);
      CHECK(std::abs(field_mass<1>(kDefaultGrid, out) / field_mass<1>(kDefaultGrid, v) - 1.0) < 1e-6);
      CHECK(field_mean<1>(kDefaultGrid, out)[0] == Approx(0.9 * c).margin(1e-6));
    }
  }
  SECTION("2D contraction toward a shifted point") {
    const Grid<2> g{{-20.0, -20.0}, {30.0, 30.0}, {128, 128}};
    std::vector<double> v(g.size(), 0.0), out(g.size());
    add_gaussian<2>(g, v, {10.0, 5.0}, 1.0, 2.0);
    pushforward<2>(g, v, 0.8, {1.0, -1.0}, out);
    CHECK(field_mass<2>(g, out) == Approx(1.0).epsilon(1e-6));
    CHECK(field_mean<2>(g, out)[0] == Approx(9.0).margin(1e-4));
    CHECK(field_mean<2>(g, out)[1] == Approx(3.0).margin(1e-4));
  }
  SECTION("collapsing and expanding maps are rejected") {
    std::vector<double> v(kDefaultGrid.size(), 1.0), out(v.size());
    CHECK_THROWS_AS(pushforward<1>(kDefaultGrid, v, 0.0, {0.0}, out), ContractViolation);
    CHECK_THROWS_AS(pushforward<1>(kDefaultGrid, v, 1.5, {0.0}, out), ContractViolation);
    ModelParams p = one_category();
    p.alpha = 0.5;
    p.beta = 0.5;
    CHECK_THROWS_AS(FieldEngine<1>(p, {"A"}, kDefaultGrid), InvalidParams);
  }
}

TEST_CASE("production term") {
  ModelParams p = one_category();
  FieldEngine<1> eng(p, {"A"}, kDefaultGrid);
  SECTION("balances decay at the equilibrium Gaussian") {
    const auto rho = gaussian(kDefaultGrid, 0.0, kS, p.mass_rate(0) / p.lambda);
    const auto prod = *eng.production_term(rho, {0.0}, p.mass_rate(0));
    std::vector<double> decay(rho);
    for (auto& x : decay) x *= p.lambda;
    CHECK(l2_diff(prod, decay) / l2(decay) < 1e-3);
  }
  SECTION("identity map with a narrow kernel copies the normalized density") {
    ModelParams q = p;
    q.beta = 0.0;
    q.sigma = 0.05;
    FieldEngine<1> narrow(q, {"A"}, kDefaultGrid);
    const auto rho = gaussian(kDefaultGrid, 2.0, 1.5, 0.4);
    const auto prod = *narrow.production_term(rho, {2.0}, 1.0);
    std::vector<double> expect(rho);
    for (auto& x : expect) x /= 0.4;
    CHECK(l2_diff(prod, expect) / l2(expect) < 5e-3);
  }
  SECTION("lenition moves a bump at 10 to 9") {
    std::vector<double> rho(kDefaultGrid.size(), 0.0);
    add_point_mass<1>(kDefaultGrid, rho, {10.0}, 0.05);
    const auto prod = *eng.production_term(rho, {10.0}, 1.0);
    CHECK(field_mean<1>(kDefaultGrid, prod)[0] == Approx(9.0).margin(0.01));
    CHECK(field_mass<1>(kDefaultGrid, prod) == Approx(1.0).epsilon(1e-9));
  }
  SECTION("an extinct category produces nothing") {
    std::vector<double> rho(kDefaultGrid.size(), 0.0);
    CHECK_FALSE(eng.production_term(rho, {0.0}, 1.0, eng.mass_floor(0)).has_value());
  }
}

TEST_CASE("right-hand side") {
  SECTION("no competition at equilibrium is stationary") {
    ModelParams p = testsupport::two_category_params(Regime::NoCompetition);
    FieldEngine<1> eng(p, {"A", "B"}, kDefaultGrid);
    const auto rho = gaussian(kDefaultGrid, 0.0, kS, 1.0);
    const auto d = eng.rhs({rho, rho});
    for (const auto& dc : d) CHECK(l2(dc) / l2(rho) < 1e-3);
  }
  SECTION("discards preserve mirror symmetry") {
    const Grid<1> g{{-30.0}, {30.0}, {1025}};
    ModelParams p = testsupport::two_category_params(Regime::CompetitionWithDiscards);
    for (auto method : {ConvolutionMethod::Direct, ConvolutionMethod::Fft}) {
      FieldEngine<1> eng(p, {"A", "B"}, g, {0.01, method});
      const auto a = gaussian(g, -3.0, 1.7, 0.6);
      std::vector<double> b(a.rbegin(), a.rend());
      const auto d = eng.rhs({a, b});
      const double scale = max_abs(d[0]);
      for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(std::abs(d[0][i] - d[1][g.size() - 1 - i]) < 1e-12 * scale);
    }
  }
  SECTION("competitive regimes reduce to one category when the other is empty") {
    const auto a = gaussian(kDefaultGrid, 4.0, 1.2, 0.8);
    const std::vector<double> none(kDefaultGrid.size(), 0.0);
    FieldEngine<1> single(one_category(), {"A"}, kDefaultGrid);
    const auto ref = single.rhs({a})[0];
    for (Regime r : {Regime::PureCompetition, Regime::CompetitionWithDiscards}) {
      FieldEngine<1> eng(testsupport::two_category_params(r), {"A", "B"}, kDefaultGrid);
      const auto d = eng.rhs({a, none});
      CHECK(l2_diff(d[0], ref) <= 1e-13 * l2(ref));
      CHECK(max_abs(d[1]) == 0.0);
    }
  }
  SECTION("translation commutes with the rhs when lenition is off") {
    ModelParams p = one_category();
    p.beta = 0.0;
    p.alpha = 0.2;
    FieldEngine<1> eng(p, {"A"}, kDefaultGrid);
    const std::size_t shift = 40;
    const double h = kDefaultGrid.spacing(0);
    const auto a = gaussian(kDefaultGrid, 0.0, 1.5, 1.0);
    const auto b = gaussian(kDefaultGrid, shift * h, 1.5, 1.0);
    const auto da = eng.rhs({a})[0], db = eng.rhs({b})[0];
    double worst = 0.0;
    for (std::size_t i = 200; i + shift + 200 < da.size(); ++i) worst = std::max(worst, std::abs(da[i] - db[i + shift]));
    CHECK(worst < 1e-9 * max_abs(da));
  }
}

TEST_CASE("time stepping") {
  SECTION("a zero state stays zero") {
    FieldEngine<1> eng(one_category(), {"A"}, kDefaultGrid);
    eng.step();
    eng.step();
    CHECK(max_abs(eng.values(0)) == 0.0);
    CHECK(eng.time() == Approx(0.02));
  }
  SECTION("pure decay below the extinction floor matches the exponential") {
    FieldEngine<1> eng(one_category(), {"A"}, kDefaultGrid);
    eng.set_values(0, gaussian(kDefaultGrid, 1.0, 1.0, 5e-13));
    const double m0 = field_mass<1>(kDefaultGrid, eng.values(0));
    for (int i = 0; i < 1000; ++i) eng.step(0.01);
    CHECK(field_mass<1>(kDefaultGrid, eng.values(0)) == Approx(m0 * std::exp(-10.0)).epsilon(1e-8));
  }
  SECTION("RK4 converges at fourth order") {
    const Grid<1> g{{-25.0}, {35.0}, {256}};
    ModelParams p = one_category();
    auto solve = [&](double dt) {
      FieldEngine<1> eng(p, {"A"}, g, {dt});
      eng.set_values(0, gaussian(g, 6.0, 1.5, 0.3));
      const auto steps = static_cast<int>(std::lround(10.0 / dt));
      for (int i = 0; i < steps; ++i) eng.step(dt);
      return eng.values(0);
    };
    const auto ref = solve(0.1 / 32);
    const double e1 = l2_diff(solve(0.1), ref);
    const double e2 = l2_diff(solve(0.05), ref);
    const double e3 = l2_diff(solve(0.025), ref);
    INFO("errors " << e1 << " " << e2 << " " << e3);
    CHECK(std::log2(e1 / e2) >= 3.5);
    CHECK(std::log2(e2 / e3) >= 3.5);
  }
  SECTION("non-finite values raise an integration failure") {
    ModelParams p = one_category();
    p.alpha = 0.1;
    p.beta = 0.0;
    FieldEngine<1> eng(p, {"A"}, kDefaultGrid);
    std::vector<double> v(kDefaultGrid.size(), 0.0);
    v[10] = v[11] = v[12] = 1e308;
    eng.set_values(0, v);
    CHECK_THROWS_AS(eng.step(), IntegrationFailure);
  }
  SECTION("the time-step policy is enforced") {
    CHECK_THROWS_AS(FieldEngine<1>(one_category(), {"A"}, kDefaultGrid, {0.2}), InvalidParams);
  }
}

TEST_CASE("mass balance under no competition") {
  ModelParams p = testsupport::two_category_params(Regime::NoCompetition);
  FieldEngine<1> eng(p, {"A", "B"}, kDefaultGrid);
  eng.seed_point(0, {5.0}, 0.05);
  eng.seed_point(1, {10.0}, 0.05);
  const double dt = 0.01;
  for (int i = 0; i < 100; ++i) eng.step(dt);  // past the point-mass transient
  double worst_balance = 0.0, worst_acceptance = 0.0, clipped_fraction = 0.0;
  for (int probe = 0; probe < 20; ++probe) {
    for (int i = 0; i < 25; ++i) eng.step(dt);
    std::vector<double> before(2), mid(2), after(2);
    for (int c = 0; c < 2; ++c) before[c] = field_mass<1>(kDefaultGrid, eng.values(c));
    eng.step(dt);
    for (int c = 0; c < 2; ++c) mid[c] = field_mass<1>(kDefaultGrid, eng.values(c));
    eng.rhs(eng.fields());
    const auto accepted = eng.accepted_rate();
    eng.step(dt);
    for (int c = 0; c < 2; ++c) {
      after[c] = field_mass<1>(kDefaultGrid, eng.values(c));
      const double fd = (after[c] - before[c]) / (2 * dt);
      const double model = -p.lambda * mid[c] + accepted[c];
      worst_balance = std::max(worst_balance, std::abs(fd - model) / std::abs(model));
      worst_acceptance = std::max(worst_acceptance, std::abs(accepted[c] - p.mass_rate(c)) / p.mass_rate(c));
      clipped_fraction = std::max(clipped_fraction, eng.diagnostics()[c].clipped_mass / (eng.time() * mid[c]));
    }
  }
  CHECK(worst_balance < 1e-3);
  CHECK(worst_acceptance < 1e-6);
  CHECK(clipped_fraction < 1e-8);
}

TEST_CASE("integration records moments and snapshots") {
  ModelParams p = testsupport::two_category_params(Regime::NoCompetition);
  FieldEngine<1> eng(p, {"A", "B"}, kDefaultGrid);
  eng.seed_point(0, {5.0}, 0.05);
  eng.seed_point(1, {10.0}, 0.05);
  const auto t = eng.integrate({50.0, 1.0, {0.0, 50.0}});
  REQUIRE(t.times.size() == 51);
  CHECK(t.snapshots.size() == 4);
  CHECK(t.snapshots.back().values == eng.values(1));
  const std::size_t last = t.times.size() - 1;
  for (int c = 0; c < 2; ++c) {
    CHECK(std::abs(t.series[c].mean[last]) < 0.1);
    CHECK(t.series[c].dispersion[last] == Approx(kS).epsilon(0.01));
    CHECK(t.series[c].activation[last] == Approx(1.0).epsilon(0.01));
    CHECK(t.diagnostics[c].leaked_mass < 1e-4 * 50.0);
  }
  // After the transient the mean approaches 0 monotonically.
  for (std::size_t i = 6; i < t.times.size(); ++i)
    CHECK(std::abs(t.series[1].mean[i]) <= std::abs(t.series[1].mean[i - 1]) + 1e-12);

  FieldEngine<1> again(p, {"A", "B"}, kDefaultGrid);
  again.seed_point(0, {5.0}, 0.05);
  again.seed_point(1, {10.0}, 0.05);
  CHECK_THROWS_AS(again.integrate({10.005, 1.0, {}}), ContractViolation);
}

TEST_CASE("extinct field categories are recorded") {
  ModelParams p = testsupport::two_category_params(Regime::CompetitionWithDiscards);
  FieldEngine<1> eng(p, {"A", "B"}, kDefaultGrid);
  eng.seed_point(0, {5.0}, 0.05);
  const auto t = eng.integrate({1.0, 0.5, {}});
  REQUIRE(t.extinctions.size() == 1);
  CHECK(t.extinctions[0].label == "B");
  CHECK(std::isnan(t.series[1].mean[0]));
  CHECK(t.series[1].activation.back() == 0.0);
}

TEST_CASE("2D field runs are deterministic") {
  const Grid<2> g{{-20.0, -20.0}, {30.0, 30.0}, {64, 64}};
  ModelParams p = testsupport::two_category_params(Regime::CompetitionWithDiscards);
  auto run = [&] {
    FieldEngine<2> eng(p, {"A", "B"}, g, {0.1});
    eng.seed_point(0, {-5.0, -5.0}, 0.05);
    eng.seed_point(1, {5.0, 5.0}, 0.05);
    return eng.integrate({2.0, 1.0, {2.0}});
  };
  const auto a = run(), b = run();
  CHECK(a.series == b.series);
  CHECK(a.snapshots[0].values == b.snapshots[0].values);
}
