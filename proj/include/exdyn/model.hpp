#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "exdyn/errors.hpp"

namespace exdyn {

/// A point in phonetic space. D is 1 or 2 and fixed for a whole run.
template <int D>
using PhonPoint = std::array<double, D>;

template <int D>
constexpr void check_dimension() {
  static_assert(D == 1 || D == 2, "phonetic space is one- or two-dimensional");
}

template <int D>
PhonPoint<D> zero_point() {
  PhonPoint<D> p{};
  p.fill(0.0);
  return p;
}

template <int D>
double squared_norm(const PhonPoint<D>& p) {
  double s = 0.0;
  for (double x : p) s += x * x;
  return s;
}

template <int D>
double distance(const PhonPoint<D>& a, const PhonPoint<D>& b) {
  double s = 0.0;
  for (int k = 0; k < D; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

template <int D>
bool is_finite(const PhonPoint<D>& p) {
  for (double x : p)
    if (!std::isfinite(x)) return false;
  return true;
}

/// A stored token. Position and birth data never change after creation.
template <int D>
struct Exemplar {
  PhonPoint<D> position{};
  double birth_time = 0.0;
  double base_weight = 0.0;
};

enum class Regime { NoCompetition, PureCompetition, CompetitionWithDiscards };

// What to do with a token produced where every category has zero smoothed density.
enum class AllZeroPolicy { AcceptSource, Discard };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::NoCompetition: return "no_competition";
    case Regime::PureCompetition: return "pure_competition";
    case Regime::CompetitionWithDiscards: return "discards";
  }
  return "?";
}

inline std::string_view to_string(AllZeroPolicy p) {
  return p == AllZeroPolicy::AcceptSource ? "accept_source" : "discard";
}

/// Rate and shape constants shared by both engines.
///
/// Weights are created at `w0` and decay at `lambda`. Category c produces
/// tokens at `rates[c]`, so its mass production rate is w0 * rates[c]
/// (the field model's mu). New positions follow
///   y = (1 - beta) z + alpha (mean - z) + sigma * eta.
/// Classification uses smoothing rate `kappa` and selection exponent `p`.
struct ModelParams {
  double lambda = 1.0;
  std::vector<double> rates;
  double w0 = 0.01;
  double alpha = 0.0;
  double beta = 0.1;
  double sigma = 1.0;
  double kappa = 10.0;
  double p = 1.0;
  double prune_ratio = 0.1;
  Regime regime = Regime::NoCompetition;
  AllZeroPolicy all_zero = AllZeroPolicy::AcceptSource;

  std::size_t categories() const { return rates.size(); }
  double mass_rate(std::size_t c) const { return w0 * rates.at(c); }
  double total_rate() const {
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
  }

  bool operator==(const ModelParams&) const = default;

  // Throws InvalidParams naming the first violated constraint.
  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidParams(m); };
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(finite(lambda) && lambda > 0)) fail("lambda must be > 0");
    if (rates.empty()) fail("at least one category rate is required");
    for (double r : rates)
      if (!(finite(r) && r > 0)) fail("category rates must be > 0");
    if (!(finite(w0) && w0 > 0)) fail("w0 must be > 0");
    if (!(finite(alpha) && alpha >= 0)) fail("alpha must be >= 0");
    if (!(finite(beta) && beta >= 0)) fail("beta must be >= 0");
    if (!(alpha + beta < 2)) fail("alpha + beta must be < 2");
    if (!(finite(sigma) && sigma > 0)) fail("sigma must be > 0");
    if (!(finite(kappa) && kappa > 0)) fail("kappa must be > 0");
    if (!(finite(p) && p >= 0)) fail("p must be >= 0");
    if (!(prune_ratio > 0 && prune_ratio < 1)) fail("prune_ratio must lie in (0, 1)");
  }
};

/// Weight of `e` at time t under exponential decay at `lambda`.
template <int D>
double weight_at(const Exemplar<D>& e, double t, double lambda) {
  if (t < e.birth_time)
    throw ContractViolation("weight_at: time precedes the exemplar's birth");
  return e.base_weight * std::exp(-lambda * (t - e.birth_time));
}

/// Stationary width of a single category. Depends on alpha and beta only
/// through their sum.
inline double equilibrium_dispersion(double alpha, double beta, double sigma) {
  const double g = alpha + beta;
  if (!(g > 0 && g < 2))
    throw NoEquilibrium("equilibrium dispersion requires 0 < alpha + beta < 2");
  const double a = 1.0 - g;
  return sigma / std::sqrt(1.0 - a * a);
}

}  // namespace exdyn
