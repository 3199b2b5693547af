#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "exdyn/trajectory.hpp"

namespace exdyn {

struct MergerVerdict {
  enum class Kind { Merged, Distinct, Drifting, Inconclusive };
  Kind kind = Kind::Inconclusive;
  double gap = 0.0;              // time-averaged distance between the two means
  double symmetry_defect = 0.0;  // |mean_A + mean_B| at the window end
  std::vector<double> drift;     // joint-mean displacement over the window

  std::string name() const {
    switch (kind) {
      case Kind::Merged: return "Merged";
      case Kind::Distinct: return "Distinct";
      case Kind::Inconclusive: return "Inconclusive";
      case Kind::Drifting: break;
    }
    if (drift.size() == 1) return drift[0] >= 0 ? "Drifting(+)" : "Drifting(-)";
    std::ostringstream os;
    os << "Drifting(";
    for (std::size_t k = 0; k < drift.size(); ++k) os << (k ? "," : "") << drift[k];
    os << ")";
    return os.str();
  }
};

struct VerdictThresholds {
  double gap = 0.5;
  double drift = 0.5;
};

namespace detail {

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

/// Classifies the relation between two categories over [t1, t2].
///
/// Merged when the time-averaged gap is below `thresholds.gap`; otherwise
/// Drifting when the activation-weighted joint mean moves by more than
/// `thresholds.drift` between the window ends; otherwise Distinct.
/// Inconclusive when either category is extinct anywhere in the window.
inline MergerVerdict merger_verdict(const Trajectory& traj, double t1, double t2,
                                    VerdictThresholds thresholds = {}) {
  if (traj.series.size() != 2) throw ContractViolation("merger_verdict needs exactly two categories");
  if (traj.times.empty() || !(t1 <= t2) || t1 < traj.times.front() - 1e-9 ||
      t2 > traj.times.back() + 1e-9)
    throw ContractViolation("merger_verdict: window outside the trajectory");

  const int dim = traj.dim;
  const auto& a = traj.series[0];
  const auto& b = traj.series[1];
  MergerVerdict v;

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    if (traj.times[i] >= t1 - 1e-9 && traj.times[i] <= t2 + 1e-9) idx.push_back(i);
  if (idx.empty()) idx.push_back(traj.nearest_sample(0.5 * (t1 + t2)));

  auto gap_at = [&](std::size_t i) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = a.mean[i * dim + k] - b.mean[i * dim + k];
      s += d * d;
    }
    return std::sqrt(s);
  };
  for (std::size_t i : idx) {
    bool extinct = !(a.activation[i] > 0) || !(b.activation[i] > 0);
    for (int k = 0; k < dim; ++k)
      extinct = extinct || !std::isfinite(a.mean[i * dim + k]) || !std::isfinite(b.mean[i * dim + k]);
    if (extinct) {
      v.kind = MergerVerdict::Kind::Inconclusive;
      v.gap = std::numeric_limits<double>::quiet_NaN();
      v.symmetry_defect = std::numeric_limits<double>::quiet_NaN();
      return v;
    }
  }

  // Trapezoidal time average; a single sample is its own average.
  if (idx.size() == 1) {
    v.gap = gap_at(idx[0]);
  } else {
    double area = 0.0;
    for (std::size_t j = 1; j < idx.size(); ++j)
      area += 0.5 * (gap_at(idx[j - 1]) + gap_at(idx[j])) * (traj.times[idx[j]] - traj.times[idx[j - 1]]);
    v.gap = area / (traj.times[idx.back()] - traj.times[idx.front()]);
  }

  auto joint_mean = [&](std::size_t i) {
    std::vector<double> m(dim);
    const double wa = a.activation[i];
    const double wb = b.activation[i];
    for (int k = 0; k < dim; ++k) m[k] = (wa * a.mean[i * dim + k] + wb * b.mean[i * dim + k]) / (wa + wb);
    return m;
  };
  const std::size_t first = traj.nearest_sample(t1);
  const std::size_t last = traj.nearest_sample(t2);
  const auto m1 = joint_mean(first);
  const auto m2 = joint_mean(last);
  v.drift.resize(dim);
  std::vector<double> sum(dim);
  for (int k = 0; k < dim; ++k) {
    v.drift[k] = m2[k] - m1[k];
    sum[k] = a.mean[last * dim + k] + b.mean[last * dim + k];
  }
  v.symmetry_defect = detail::norm(sum);

  if (v.gap < thresholds.gap)
    v.kind = MergerVerdict::Kind::Merged;
  else if (detail::norm(v.drift) > thresholds.drift)
    v.kind = MergerVerdict::Kind::Drifting;
  else
    v.kind = MergerVerdict::Kind::Distinct;
  return v;
}

/// Number of strict local maxima of a 1D or 2D node field above
/// floor_fraction * max. Plateaus of equal values count once; a maximum
/// must exceed every neighbour of its plateau (2 neighbours in 1D, 8 in 2D).
/// `shape` holds the node count per axis, last axis fastest.
inline std::size_t count_peaks(std::span<const double> values, std::span<const std::size_t> shape,
                               double floor_fraction) {
  if (!(floor_fraction > 0 && floor_fraction < 1))
    throw ContractViolation("count_peaks: floor_fraction must lie in (0, 1)");
  if (shape.empty() || shape.size() > 2) throw ContractViolation("count_peaks: 1D or 2D fields only");
  const std::size_t n0 = shape[0];
  const std::size_t n1 = shape.size() == 2 ? shape[1] : 1;
  if (values.size() != n0 * n1) throw ContractViolation("count_peaks: shape does not match values");
  double gmax = 0.0;
  for (double x : values) gmax = std::max(gmax, x);
  if (!(gmax > 0)) return 0;
  const double floor = floor_fraction * gmax;

  std::vector<char> seen(values.size(), 0);
  std::vector<std::size_t> stack, plateau;
  auto neighbours = [&](std::size_t idx, auto&& visit) {
    const long i = static_cast<long>(idx / n1);
    const long j = static_cast<long>(idx % n1);
    for (long di = -1; di <= 1; ++di)
      for (long dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        if (n1 == 1 && dj != 0) continue;
        const long a = i + di;
        const long b = j + dj;
        if (a < 0 || b < 0 || a >= static_cast<long>(n0) || b >= static_cast<long>(n1)) continue;
        visit(static_cast<std::size_t>(a) * n1 + static_cast<std::size_t>(b));
      }
  };

  std::size_t peaks = 0;
  for (std::size_t start = 0; start < values.size(); ++start) {
    if (seen[start] || !(values[start] > floor)) continue;
    const double level = values[start];
    bool is_max = true;
    plateau.clear();
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      plateau.push_back(cur);
      neighbours(cur, [&](std::size_t nb) {
        if (values[nb] > level) {
          is_max = false;
        } else if (values[nb] == level && !seen[nb]) {
          seen[nb] = 1;
          stack.push_back(nb);
        }
      });
    }
    if (is_max) ++peaks;
  }
  return peaks;
}

/// Peak count of the sum of several same-shaped fields.
inline std::size_t count_peaks(const std::vector<std::vector<double>>& fields,
                               std::span<const std::size_t> shape, double floor_fraction) {
  if (fields.empty()) return 0;
  std::vector<double> total(fields.front().size(), 0.0);
  for (const auto& f : fields) {
    if (f.size() != total.size()) throw ContractViolation("count_peaks: fields differ in size");
    for (std::size_t i = 0; i < f.size(); ++i) total[i] += f[i];
  }
  return count_peaks(total, shape, floor_fraction);
}

struct Discrepancy {
  std::string label;
  double time_a = 0.0;
  double time_b = 0.0;
  double mean = 0.0;        // Euclidean distance between the means
  double dispersion = 0.0;  // absolute difference
  double activation = 0.0;  // absolute difference
};

/// Per-category differences between two trajectories at the samples nearest t.
inline std::vector<Discrepancy> compare_models(const Trajectory& a, const Trajectory& b, double t) {
  if (a.series.size() != b.series.size() || a.dim != b.dim)
    throw ContractViolation("compare_models: trajectories have different categories");
  for (std::size_t c = 0; c < a.series.size(); ++c)
    if (a.series[c].label != b.series[c].label)
      throw ContractViolation("compare_models: category labels differ");
  const std::size_t ia = a.nearest_sample(t);
  const std::size_t ib = b.nearest_sample(t);
  std::vector<Discrepancy> out;
  for (std::size_t c = 0; c < a.series.size(); ++c) {
    Discrepancy d;
    d.label = a.series[c].label;
    d.time_a = a.times[ia];
    d.time_b = b.times[ib];
    double s = 0.0;
    for (int k = 0; k < a.dim; ++k) {
      const double diff = a.series[c].mean[ia * a.dim + k] - b.series[c].mean[ib * b.dim + k];
      s += diff * diff;
    }
    d.mean = std::sqrt(s);
    d.dispersion = std::abs(a.series[c].dispersion[ia] - b.series[c].dispersion[ib]);
    d.activation = std::abs(a.series[c].activation[ia] - b.series[c].activation[ib]);
    out.push_back(d);
  }
  return out;
}

}  // namespace exdyn
