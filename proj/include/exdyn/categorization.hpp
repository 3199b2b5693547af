#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "exdyn/category_store.hpp"
#include "exdyn/model.hpp"

namespace exdyn {

/// Normalized exponential smoothing kernel.
///   1D: (kappa / 2) exp(-kappa |r|)
///   2D: (kappa^2 / 2 pi) exp(-kappa |r|)
/// Both integrate to one, so a smoothed density integrates to the total weight.
template <int D>
struct SmoothingKernel {
  double kappa = 10.0;

  double peak() const {
    if constexpr (D == 1)
      return 0.5 * kappa;
    else
      return kappa * kappa / (2.0 * std::numbers::pi);
  }
  double at_distance(double r) const { return peak() * std::exp(-kappa * r); }
  double operator()(const PhonPoint<D>& offset) const {
    return at_distance(std::sqrt(squared_norm<D>(offset)));
  }
};

/// Sum over the store of w_i(t) K(y - y_i). Zero for an empty store.
template <int D>
double smoothed_density(const CategoryStore<D>& store, const PhonPoint<D>& y,
                        const SmoothingKernel<D>& kernel, double t) {
  if (store.empty()) return 0.0;
  const auto coords = store.coords();
  const auto masses = store.masses();
  double acc = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    double r2 = 0.0;
    for (int k = 0; k < D; ++k) {
      const double d = y[k] - coords[i * D + k];
      r2 += d * d;
    }
    acc += masses[i] * std::exp(-kernel.kappa * std::sqrt(r2));
  }
  return acc * store.mass_scale(t) * kernel.peak();
}

/// Fills `out` with S_c^p / sum S^p. Returns false (and leaves `out`
/// untouched) when every density is zero. 0^0 is taken as 0, so a category
/// with no density never claims a token, even at p = 0.
inline bool selection_probability(std::span<const double> s, double p, std::span<double> out) {
  if (out.size() != s.size()) throw ContractViolation("selection_probability: size mismatch");
  double smax = 0.0;
  for (double x : s) {
    if (!(x >= 0) || !std::isfinite(x))
      throw ContractViolation("selection_probability: densities must be finite and >= 0");
    smax = std::max(smax, x);
  }
  if (smax == 0.0) return false;
  // Scaling by the largest value keeps large exponents finite.
  double total = 0.0;
  for (std::size_t c = 0; c < s.size(); ++c) {
    out[c] = s[c] > 0 ? std::pow(s[c] / smax, p) : 0.0;
    total += out[c];
  }
  for (double& v : out) v /= total;
  return true;
}

/// Empty optional signals that every density is zero; the caller picks the
/// fallback.
inline std::optional<std::vector<double>> selection_probability(std::span<const double> s, double p) {
  std::vector<double> out(s.size());
  if (!selection_probability(s, p, out)) return std::nullopt;
  return out;
}

struct ClassificationOutcome {
  bool discarded = false;
  std::size_t category = 0;  // meaningful only when accepted

  static ClassificationOutcome accept(std::size_t c) { return {false, c}; }
  static ClassificationOutcome discard() { return {true, 0}; }
  bool accepted() const { return !discarded; }
  bool operator==(const ClassificationOutcome&) const = default;
};

/// Index c with u falling in the c-th cumulative probability interval.
inline std::size_t draw_category(std::span<const double> probs, double u) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (probs[c] > 0) last_positive = c;
    cum += probs[c];
    if (u < cum && probs[c] > 0) return c;
  }
  return last_positive;
}

/// Applies a categorization regime to a token produced by `source`.
inline ClassificationOutcome classify(Regime regime, std::size_t source,
                                      std::span<const double> probs, double u) {
  if (regime == Regime::NoCompetition) return ClassificationOutcome::accept(source);
  if (source >= probs.size()) throw ContractViolation("classify: source category out of range");
  double sum = 0.0;
  for (double q : probs) {
    if (!(q >= 0 && q <= 1)) throw ContractViolation("classify: probabilities must lie in [0, 1]");
    sum += q;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractViolation("classify: probabilities must sum to 1");
  const std::size_t winner = draw_category(probs, u);
  if (regime == Regime::PureCompetition) return ClassificationOutcome::accept(winner);
  return winner == source ? ClassificationOutcome::accept(source) : ClassificationOutcome::discard();
}

}  // namespace exdyn
