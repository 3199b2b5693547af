#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "exdyn/errors.hpp"

namespace exdyn {

/// Per-category statistics, one entry per sample time. `mean` holds
/// `dim` coordinates per sample.
struct CategorySeries {
  std::string label;
  std::vector<double> mean;
  std::vector<double> dispersion;
  std::vector<double> activation;
  std::vector<long long> live_count;

  bool operator==(const CategorySeries&) const = default;
};

struct Extinction {
  std::string label;
  double time = 0.0;
  bool operator==(const Extinction&) const = default;
};

/// Counters and error budgets gathered during a run.
struct CategoryDiagnostics {
  std::string label;
  std::size_t produced = 0;
  std::size_t accepted = 0;
  std::size_t discarded = 0;
  std::size_t skipped = 0;   // events drawn while the category was extinct
  std::size_t all_zero = 0;  // tokens landing where every density vanished
  std::size_t pruned = 0;
  double pruned_weight = 0.0;
  double prune_error_bound = 0.0;  // worst pruned-weight / total-weight ratio
  double leaked_mass = 0.0;        // production lost past the grid edge
  double clipped_mass = 0.0;       // negative density removed after steps
};

/// State of one category at one time. Exemplar snapshots carry positions
/// and weights; field snapshots carry a grid description and node values.
struct Snapshot {
  enum class Kind { Exemplars, Field };
  Kind kind = Kind::Exemplars;
  int dim = 1;
  double time = 0.0;
  std::string label;
  std::vector<double> positions;
  std::vector<double> weights;
  std::vector<double> lo, hi;
  std::vector<std::size_t> n;
  std::vector<double> values;
};

struct Trajectory {
  int dim = 1;
  std::vector<double> times;
  std::vector<CategorySeries> series;
  std::vector<Extinction> extinctions;
  std::vector<CategoryDiagnostics> diagnostics;
  std::vector<Snapshot> snapshots;
  bool terminated_early = false;

  std::size_t samples() const { return times.size(); }

  std::size_t category_index(const std::string& label) const {
    for (std::size_t c = 0; c < series.size(); ++c)
      if (series[c].label == label) return c;
    throw ContractViolation("trajectory has no category '" + label + "'");
  }

  std::vector<double> mean_at(std::size_t c, std::size_t i) const {
    const auto& m = series.at(c).mean;
    return {m.begin() + i * dim, m.begin() + (i + 1) * dim};
  }

  /// Index of the sample closest to t (earliest on ties).
  std::size_t nearest_sample(double t) const {
    if (times.empty()) throw ContractViolation("empty trajectory");
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
      if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
    return best;
  }

  void start(int dimension, const std::vector<std::string>& labels) {
    dim = dimension;
    series.clear();
    diagnostics.clear();
    for (const auto& l : labels) {
      series.push_back({l, {}, {}, {}, {}});
      diagnostics.push_back({});
      diagnostics.back().label = l;
    }
  }
};

}  // namespace exdyn
