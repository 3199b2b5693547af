#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "exdyn/categorization.hpp"
#include "exdyn/category_store.hpp"
#include "exdyn/model.hpp"
#include "exdyn/rng.hpp"
#include "exdyn/run_config.hpp"
#include "exdyn/trajectory.hpp"

namespace exdyn {

template <int D>
struct ProductionEvent {
  double time = 0.0;
  std::size_t source = 0;
  PhonPoint<D> parent{};
  PhonPoint<D> position{};
  ClassificationOutcome outcome;
  bool skipped = false;   // source category had no exemplars
  bool all_zero = false;  // no category had density at `position`
};

/// Picks an exemplar with probability proportional to its weight at t.
template <int D>
Exemplar<D> sample_parent(const CategoryStore<D>& store, double t, Rng& rng) {
  if (store.empty()) throw CategoryExtinct("sample_parent: category '" + store.label() + "' is empty");
  const auto e = store.exemplar(store.sample_index(uniform01(rng)));
  if (t < e.birth_time) throw ContractViolation("sample_parent: time precedes a stored birth");
  return e;
}

/// (1 - beta) z + alpha (mean - z) + sigma * noise, per coordinate.
template <int D>
PhonPoint<D> produce_position(const PhonPoint<D>& parent, const PhonPoint<D>& category_mean,
                              const ModelParams& params, const PhonPoint<D>& noise) {
  PhonPoint<D> y;
  for (int k = 0; k < D; ++k)
    y[k] = (1.0 - params.beta) * parent[k] + params.alpha * (category_mean[k] - parent[k]) +
           params.sigma * noise[k];
  return y;
}

/// Event-driven simulation of the pooled exemplar model.
///
/// Production events arrive as a Poisson process with rate sum(nu_c); each
/// event picks its source category with probability nu_c / sum(nu), copies a
/// weight-sampled parent with lenition, entrenchment and noise, and then
/// classifies the token under the configured regime. Pruning of
/// sub-threshold exemplars runs every `prune_every` events.
template <int D>
class ExemplarEngine {
 public:
  ExemplarEngine(ModelParams params, std::vector<std::string> labels, std::uint64_t seed)
      : params_(std::move(params)), labels_(std::move(labels)), rng_(seed) {
    check_dimension<D>();
    params_.validate();
    if (labels_.size() != params_.categories())
      throw ContractViolation("ExemplarEngine: one label per category rate is required");
    kernel_.kappa = params_.kappa;
    for (const auto& l : labels_) stores_.emplace_back(l, params_.lambda);
    caches_.resize(labels_.size());
    trajectory_.start(D, labels_);
  }

  std::size_t prune_every = 256;

  /// Adds `count` exemplars at one position. Base weight defaults to w0.
  void seed_category(std::size_t c, const PhonPoint<D>& position, std::size_t count,
                     std::optional<double> base_weight = std::nullopt, double birth_time = 0.0) {
    for (std::size_t i = 0; i < count; ++i)
      stores_.at(c).insert(position, birth_time, base_weight.value_or(params_.w0));
    rebuild_cache(c);
  }

  double time() const { return time_; }
  std::size_t categories() const { return stores_.size(); }
  const CategoryStore<D>& store(std::size_t c) const { return stores_.at(c); }
  const ModelParams& params() const { return params_; }
  const std::vector<CategoryDiagnostics>& diagnostics() const { return trajectory_.diagnostics; }
  const std::vector<Extinction>& extinctions() const { return trajectory_.extinctions; }
  const Trajectory& trajectory() const { return trajectory_; }

  bool all_extinct() const {
    return std::all_of(stores_.begin(), stores_.end(), [](const auto& s) { return s.empty(); });
  }

  /// Time of the next production event; drawn once and then cached.
  double next_event_time() {
    if (!next_time_) {
      std::exponential_distribution<double> gap(params_.total_rate());
      next_time_ = time_ + gap(rng_);
    }
    return *next_time_;
  }

  ProductionEvent<D> step() {
    ProductionEvent<D> ev;
    time_ = next_event_time();
    next_time_.reset();
    ev.time = time_;

    ev.source = draw_source();
    auto& diag = trajectory_.diagnostics[ev.source];
    auto& src = stores_[ev.source];
    if (src.empty()) {
      ++diag.skipped;
      note_extinction(ev.source);
      ev.skipped = true;
      ev.outcome = ClassificationOutcome::discard();
      after_event();
      return ev;
    }
    ++diag.produced;

    ev.parent = sample_parent(src, time_, rng_).position;
    PhonPoint<D> noise;
    for (auto& x : noise) x = normal_(rng_);
    ev.position = produce_position<D>(ev.parent, src.mean(), params_, noise);

    if (params_.regime == Regime::NoCompetition) {
      ev.outcome = ClassificationOutcome::accept(ev.source);
    } else {
      densities_.resize(stores_.size());
      probs_.resize(stores_.size());
      for (std::size_t c = 0; c < stores_.size(); ++c) densities_[c] = density(c, ev.position);
      if (selection_probability(densities_, params_.p, probs_)) {
        ev.outcome = classify(params_.regime, ev.source, probs_, uniform01(rng_));
      } else {
        ev.all_zero = true;
        ++diag.all_zero;
        ev.outcome = params_.all_zero == AllZeroPolicy::AcceptSource
                         ? ClassificationOutcome::accept(ev.source)
                         : ClassificationOutcome::discard();
      }
    }

    if (ev.outcome.accepted()) {
      const std::size_t c = ev.outcome.category;
      stores_[c].insert(ev.position, time_, params_.w0);
      append_cache(c);
      ++trajectory_.diagnostics[c].accepted;
    } else {
      ++diag.discarded;
    }
    after_event();
    return ev;
  }

  /// Smoothed density of category c at y for the current time.
  double density(std::size_t c, const PhonPoint<D>& y) const {
    const auto& s = stores_[c];
    if (s.empty()) return 0.0;
    if constexpr (D == 1) {
      const auto& cache = caches_[c];
      const double offset = params_.kappa * (y[0] - cache.origin);
      if (cache.valid && std::abs(offset) < kCacheExponent) return density_split(c, y[0], offset);
    }
    return smoothed_density<D>(s, y, kernel_, time_);
  }

  /// Runs to the horizon, recording statistics and snapshots.
  Trajectory run(const RunConfig& cfg) {
    cfg.validate();
    struct Checkpoint {
      double t;
      bool sample;
      bool snapshot;
    };
    std::vector<Checkpoint> points;
    for (double t : cfg.sample_times()) points.push_back({t, true, false});
    for (double t : cfg.snapshot_times) points.push_back({t, false, true});
    std::stable_sort(points.begin(), points.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });

    for (const auto& cp : points) {
      if (cp.t < time_) throw ContractViolation("run: checkpoint precedes the current time");
      while (!all_extinct() && next_event_time() <= cp.t) step();
      time_ = cp.t;
      if (cp.sample) record(cp.t);
      if (cp.snapshot) snapshot(cp.t);
      if (all_extinct()) {
        for (std::size_t c = 0; c < stores_.size(); ++c) note_extinction(c);
        if (cp.sample && cp.t < cfg.horizon) {
          trajectory_.terminated_early = true;
          break;
        }
      }
    }
    return trajectory_;
  }

 private:
  static constexpr double kCacheExponent = 300.0;

  // Split-sum form of the 1D exponential kernel: for y_i <= y,
  // exp(-k(y - y_i)) = exp(-k(y - o)) exp(k(y_i - o)), and symmetrically
  // above y, so one pass over precomputed factors replaces n exp() calls.
  struct KernelCache {
    bool valid = false;
    double origin = 0.0;
    double mass_ref = 1.0;
    double reference_time = 0.0;
    std::vector<double> below;  // m_i / mass_ref * exp(k (y_i - origin))
    std::vector<double> above;  // m_i / mass_ref * exp(-k (y_i - origin))
  };

  double density_split(std::size_t c, double y, double offset) const {
    const auto& cache = caches_[c];
    const auto coords = stores_[c].coords();
    const std::size_t n = coords.size();
    const double* pos = coords.data();
    const double* below = cache.below.data();
    const double* above = cache.above.data();
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool left = pos[i] <= y;
      lo += left ? below[i] : 0.0;
      hi += left ? 0.0 : above[i];
    }
    const double sum = std::exp(-offset) * lo + std::exp(offset) * hi;
    return kernel_.peak() * stores_[c].mass_scale(time_) * cache.mass_ref * sum;
  }

  void rebuild_cache(std::size_t c) {
    if constexpr (D == 1) {
      auto& cache = caches_[c];
      const auto& s = stores_[c];
      cache.below.clear();
      cache.above.clear();
      cache.valid = false;
      if (s.empty()) return;
      cache.origin = s.mean()[0];
      cache.mass_ref = s.mass_total() / static_cast<double>(s.size());
      cache.reference_time = s.reference_time();
      cache.valid = true;
      for (std::size_t i = 0; i < s.size(); ++i) push_cache_entry(c, i);
    }
  }

  void append_cache(std::size_t c) {
    if constexpr (D == 1) {
      const auto& cache = caches_[c];
      // The store rescales its masses when they grow large; resync then.
      if (cache.valid && cache.below.size() + 1 == stores_[c].size() &&
          cache.reference_time == stores_[c].reference_time())
        push_cache_entry(c, stores_[c].size() - 1);
      else
        rebuild_cache(c);
    }
  }

  void push_cache_entry(std::size_t c, std::size_t i) {
    auto& cache = caches_[c];
    const double e = params_.kappa * (stores_[c].position(i)[0] - cache.origin);
    if (std::abs(e) >= kCacheExponent) cache.valid = false;
    const double m = stores_[c].mass(i) / cache.mass_ref;
    cache.below.push_back(m * std::exp(e));
    cache.above.push_back(m * std::exp(-e));
  }

  std::size_t draw_source() {
    const double u = uniform01(rng_) * params_.total_rate();
    double cum = 0.0;
    for (std::size_t c = 0; c < stores_.size(); ++c) {
      cum += params_.rates[c];
      if (u < cum) return c;
    }
    return stores_.size() - 1;
  }

  void note_extinction(std::size_t c) {
    if (!stores_[c].empty()) return;
    for (const auto& e : trajectory_.extinctions)
      if (e.label == labels_[c]) return;
    trajectory_.extinctions.push_back({labels_[c], time_});
  }

  void after_event() {
    if (++events_ % prune_every == 0) prune_all();
  }

  void prune_all() {
    const double threshold = params_.prune_ratio * params_.w0;
    for (std::size_t c = 0; c < stores_.size(); ++c) {
      if (stores_[c].empty()) continue;
      const auto stats = stores_[c].prune(threshold, time_);
      if (stats.removed == 0) continue;
      auto& d = trajectory_.diagnostics[c];
      d.pruned += stats.removed;
      d.pruned_weight += stats.removed_weight;
      if (stats.weight_before > 0)
        d.prune_error_bound = std::max(d.prune_error_bound, stats.removed_weight / stats.weight_before);
      rebuild_cache(c);
      note_extinction(c);
    }
  }

  void record(double t) {
    auto& traj = trajectory_;
    traj.times.push_back(t);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t c = 0; c < stores_.size(); ++c) {
      auto& ser = traj.series[c];
      const auto& s = stores_[c];
      ser.live_count.push_back(static_cast<long long>(s.size()));
      if (s.empty()) {
        for (int k = 0; k < D; ++k) ser.mean.push_back(nan);
        ser.dispersion.push_back(nan);
        ser.activation.push_back(0.0);
        continue;
      }
      const auto m = weighted_mean(s, t);
      for (int k = 0; k < D; ++k) ser.mean.push_back(m[k]);
      ser.dispersion.push_back(dispersion(s, t));
      ser.activation.push_back(total_activation(s, t));
    }
  }

  void snapshot(double t) {
    for (std::size_t c = 0; c < stores_.size(); ++c) {
      Snapshot snap;
      snap.kind = Snapshot::Kind::Exemplars;
      snap.dim = D;
      snap.time = t;
      snap.label = labels_[c];
      const auto& s = stores_[c];
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto y = s.position(i);
        snap.positions.insert(snap.positions.end(), y.begin(), y.end());
        snap.weights.push_back(s.weight(i, t));
      }
      trajectory_.snapshots.push_back(std::move(snap));
    }
  }

  ModelParams params_;
  std::vector<std::string> labels_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  SmoothingKernel<D> kernel_;
  std::vector<CategoryStore<D>> stores_;
  std::vector<KernelCache> caches_;
  std::vector<double> densities_;
  std::vector<double> probs_;
  Trajectory trajectory_;
  double time_ = 0.0;
  std::optional<double> next_time_;
  std::size_t events_ = 0;
};

}  // namespace exdyn
