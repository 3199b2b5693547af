#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exdyn/model.hpp"

namespace exdyn {

struct PruneStats {
  std::size_t removed = 0;
  double removed_weight = 0.0;
  double weight_before = 0.0;
};

/// Live exemplars of one category.
///
/// Weights are never stored. Every exemplar shares the decay rate, so its
/// weight relative to the others is proportional to the constant mass
///   m_i = base_weight_i * exp(lambda * (birth_i - t_ref)),
/// and the weight at time t is m_i * exp(-lambda * (t - t_ref)). A Fenwick
/// tree over m_i gives O(log n) weighted sampling and insertion. t_ref is
/// moved forward when new masses grow too large.
template <int D>
class CategoryStore {
 public:
  CategoryStore(std::string label, double lambda) : label_(std::move(label)), lambda_(lambda) {
    check_dimension<D>();
    if (!(lambda > 0)) throw ContractViolation("CategoryStore: lambda must be > 0");
  }

  const std::string& label() const { return label_; }
  double lambda() const { return lambda_; }
  std::size_t size() const { return birth_.size(); }
  bool empty() const { return birth_.empty(); }

  void insert(const PhonPoint<D>& position, double birth_time, double base_weight) {
    if (!(base_weight > 0)) throw ContractViolation("CategoryStore: base weight must be > 0");
    if (!is_finite<D>(position)) throw ContractViolation("CategoryStore: non-finite position");
    if (empty()) t_ref_ = birth_time;
    if (lambda_ * (birth_time - t_ref_) > kRebaseExponent) rebase(birth_time);
    const double m = base_weight * std::exp(lambda_ * (birth_time - t_ref_));
    for (int k = 0; k < D; ++k) coords_.push_back(position[k]);
    birth_.push_back(birth_time);
    base_.push_back(base_weight);
    mass_.push_back(m);
    fenwick_append(m);
    mass_sum_ += m;
    for (int k = 0; k < D; ++k) moment_[k] += m * position[k];
  }

  Exemplar<D> exemplar(std::size_t i) const { return {position(i), birth_[i], base_[i]}; }

  PhonPoint<D> position(std::size_t i) const {
    PhonPoint<D> p;
    for (int k = 0; k < D; ++k) p[k] = coords_[i * D + k];
    return p;
  }

  double weight(std::size_t i, double t) const { return weight_at<D>(exemplar(i), t, lambda_); }

  // Constant relative sampling mass of exemplar i.
  double mass(std::size_t i) const { return mass_[i]; }
  double mass_total() const { return mass_sum_; }
  // Converts relative masses into weights at time t.
  double mass_scale(double t) const { return std::exp(-lambda_ * (t - t_ref_)); }

  double reference_time() const { return t_ref_; }

  double total_weight(double t) const { return empty() ? 0.0 : mass_sum_ * mass_scale(t); }

  // Weighted mean from running sums. Time-invariant between insertions.
  PhonPoint<D> mean() const {
    if (empty() || !(mass_sum_ > 0)) throw EmptyCategory("category '" + label_ + "' is empty");
    PhonPoint<D> m;
    for (int k = 0; k < D; ++k) m[k] = moment_[k] / mass_sum_;
    return m;
  }

  /// Index of the exemplar whose cumulative mass interval contains
  /// u * mass_total(), u in [0, 1).
  std::size_t sample_index(double u) const {
    if (empty()) throw CategoryExtinct("category '" + label_ + "' has no exemplars");
    double target = u * fenwick_prefix(size());
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 <= size()) step *= 2;
    for (; step > 0; step /= 2) {
      const std::size_t next = pos + step;
      if (next <= size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return pos < size() ? pos : size() - 1;
  }

  /// Removes exemplars whose weight at t is below `threshold`.
  PruneStats prune(double threshold, double t) {
    PruneStats stats;
    stats.weight_before = total_weight(t);
    const double scale = mass_scale(t);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double w = mass_[i] * scale;
      if (w < threshold) {
        ++stats.removed;
        stats.removed_weight += w;
        continue;
      }
      if (kept != i) {
        for (int k = 0; k < D; ++k) coords_[kept * D + k] = coords_[i * D + k];
        birth_[kept] = birth_[i];
        base_[kept] = base_[i];
        mass_[kept] = mass_[i];
      }
      ++kept;
    }
    if (stats.removed > 0) {
      coords_.resize(kept * D);
      birth_.resize(kept);
      base_.resize(kept);
      mass_.resize(kept);
      rebuild();
    }
    return stats;
  }

  std::span<const double> coords() const { return coords_; }
  std::span<const double> masses() const { return mass_; }

 private:
  static constexpr double kRebaseExponent = 300.0;

  void rebase(double new_ref) {
    const double f = std::exp(-lambda_ * (new_ref - t_ref_));
    for (double& m : mass_) m *= f;
    t_ref_ = new_ref;
    rebuild();
  }

  void rebuild() {
    tree_.assign(size() + 1, 0.0);
    mass_sum_ = 0.0;
    moment_.fill(0.0);
    for (std::size_t i = 0; i < size(); ++i) {
      const std::size_t j = i + 1;
      tree_[j] += mass_[i];
      const std::size_t parent = j + (j & (~j + 1));
      if (parent <= size()) tree_[parent] += tree_[j];
      mass_sum_ += mass_[i];
      for (int k = 0; k < D; ++k) moment_[k] += mass_[i] * coords_[i * D + k];
    }
  }

  double fenwick_prefix(std::size_t j) const {
    double s = 0.0;
    for (; j > 0; j &= j - 1) s += tree_[j];
    return s;
  }

  void fenwick_append(double m) {
    if (tree_.empty()) tree_.push_back(0.0);
    const std::size_t j = tree_.size();
    const std::size_t low = j & (~j + 1);
    tree_.push_back(m + fenwick_prefix(j - 1) - fenwick_prefix(j - low));
  }

  std::string label_;
  double lambda_;
  double t_ref_ = 0.0;
  std::vector<double> coords_;
  std::vector<double> birth_;
  std::vector<double> base_;
  std::vector<double> mass_;
  std::vector<double> tree_;
  double mass_sum_ = 0.0;
  std::array<double, D> moment_{};
};

/// Weighted mean position at time t.
template <int D>
PhonPoint<D> weighted_mean(const CategoryStore<D>& store, double t) {
  if (store.empty() || !(store.total_weight(t) > 0))
    throw EmptyCategory("weighted_mean: category '" + store.label() + "' has no weight");
  // Offsets from the first exemplar, so coincident positions give an exact mean.
  const auto origin = store.position(0);
  PhonPoint<D> num = zero_point<D>();
  double den = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const double w = store.weight(i, t);
    const auto y = store.position(i);
    for (int k = 0; k < D; ++k) num[k] += w * (y[k] - origin[k]);
    den += w;
  }
  for (int k = 0; k < D; ++k) num[k] = origin[k] + num[k] / den;
  return num;
}

/// Weighted standard deviation about the weighted mean (Euclidean in 2D).
template <int D>
double dispersion(const CategoryStore<D>& store, double t) {
  const auto mean = weighted_mean(store, t);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const double w = store.weight(i, t);
    auto d = store.position(i);
    for (int k = 0; k < D; ++k) d[k] -= mean[k];
    num += w * squared_norm<D>(d);
    den += w;
  }
  return std::sqrt(num / den);
}

/// Sum of weights at time t; zero for an empty store.
template <int D>
double total_activation(const CategoryStore<D>& store, double t) {
  double s = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) s += store.weight(i, t);
  return s;
}

}  // namespace exdyn
