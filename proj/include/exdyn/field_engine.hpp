#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "exdyn/categorization.hpp"
#include "exdyn/convolution.hpp"
#include "exdyn/grid.hpp"
#include "exdyn/model.hpp"
#include "exdyn/run_config.hpp"
#include "exdyn/trajectory.hpp"

namespace exdyn {

/// Density of the image of `rho` under z -> scale * z + shift. Each node's
/// trapezoid mass moves to its image and is shared among the surrounding
/// nodes with multilinear weights, so mass and first moment are exact for
/// any field, including unresolved ones. Mass mapped off the grid is lost.
/// Requires |scale| <= 1: an expanding map would leave gaps between images.
template <int D>
void pushforward(const Grid<D>& g, std::span<const double> rho, double scale,
                 const PhonPoint<D>& shift, std::span<double> out) {
  if (scale == 0.0 || !(std::abs(scale) <= 1.0))
    throw ContractViolation("pushforward: map must contract without collapsing");
  std::fill(out.begin(), out.end(), 0.0);
  std::array<double, D> h;
  for (int k = 0; k < D; ++k) h[k] = g.spacing(k);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (rho[idx] == 0.0) continue;
    const auto u = g.node(idx);
    std::array<std::size_t, D> base{};
    std::array<double, D> frac{};
    bool inside = true;
    for (int k = 0; k < D; ++k) {
      const double x = (scale * u[k] + shift[k] - g.lo[k]) / h[k];
      if (!(x >= 0.0) || x > static_cast<double>(g.n[k] - 1)) {
        inside = false;
        break;
      }
      auto i = static_cast<std::size_t>(x);
      if (i + 1 >= g.n[k]) i = g.n[k] - 2;
      base[k] = i;
      frac[k] = x - static_cast<double>(i);
    }
    if (!inside) continue;
    const double m = rho[idx] * trapezoid_weight(g, idx);
    auto put = [&](std::size_t j, double share) { out[j] += m * share / trapezoid_weight(g, j); };
    if constexpr (D == 1) {
      put(base[0], 1.0 - frac[0]);
      put(base[0] + 1, frac[0]);
    } else {
      const std::size_t n1 = g.n[1];
      const std::size_t r0 = base[0] * n1 + base[1];
      put(r0, (1.0 - frac[0]) * (1.0 - frac[1]));
      put(r0 + 1, (1.0 - frac[0]) * frac[1]);
      put(r0 + n1, frac[0] * (1.0 - frac[1]));
      put(r0 + n1 + 1, frac[0] * frac[1]);
    }
  }
}

struct FieldOptions {
  double dt = 0.01;
  ConvolutionMethod method = ConvolutionMethod::Auto;
};

/// Deterministic field model on a fixed grid, advanced with classical RK4.
///
/// Per category c, with production P_c = mu_c (G_sigma * pushforward(rho_c)) / |rho_c|
/// and selection f_c = S_c^p / sum S^p built from S_c = K_kappa * rho_c:
///   NoCompetition:            d rho_c = -lambda rho_c + P_c
///   PureCompetition:          d rho_c = -lambda rho_c + f_c sum_c' P_c'
///   CompetitionWithDiscards:  d rho_c = -lambda rho_c + f_c P_c
/// Mass that leaves the grid is lost and tallied; negatives are clipped.
template <int D>
class FieldEngine {
 public:
  using Fields = std::vector<std::vector<double>>;

  FieldEngine(ModelParams params, std::vector<std::string> labels, const Grid<D>& grid,
              FieldOptions options = {})
      : params_(std::move(params)),
        labels_(std::move(labels)),
        grid_(grid),
        options_(options),
        gaussian_(grid, gaussian_profile(params_.sigma), 7.0 * params_.sigma, options.method),
        smoother_(grid, exponential_profile(params_.kappa), 28.0 / params_.kappa, options.method) {
    check_dimension<D>();
    params_.validate();
    grid_.validate();
    if (labels_.size() != params_.categories())
      throw ContractViolation("FieldEngine: one label per category rate is required");
    if (std::abs(1.0 - params_.alpha - params_.beta) < 1e-12)
      throw InvalidParams("field engine requires alpha + beta != 1");
    if (!(options_.dt > 0) || options_.dt > 0.1 / params_.lambda + 1e-15)
      throw InvalidParams("field engine time step must satisfy 0 < dt <= 0.1 / lambda");
    fields_.assign(labels_.size(), std::vector<double>(grid_.size(), 0.0));
    trajectory_.start(D, labels_);
  }

  const Grid<D>& grid() const { return grid_; }
  const ModelParams& params() const { return params_; }
  const FieldOptions& options() const { return options_; }
  double time() const { return time_; }
  std::size_t categories() const { return fields_.size(); }
  const std::vector<double>& values(std::size_t c) const { return fields_.at(c); }
  DensityField<D> field(std::size_t c) const { return DensityField<D>(grid_, fields_.at(c)); }
  const Fields& fields() const { return fields_; }
  const std::vector<CategoryDiagnostics>& diagnostics() const { return trajectory_.diagnostics; }
  // Everything recorded so far; still valid after an IntegrationFailure.
  const Trajectory& trajectory() const { return trajectory_; }

  void set_values(std::size_t c, std::vector<double> v) {
    if (v.size() != grid_.size()) throw ContractViolation("set_values: size mismatch");
    for (double x : v)
      if (!(x >= 0) || !std::isfinite(x)) throw ContractViolation("set_values: density must be >= 0");
    fields_.at(c) = std::move(v);
  }
  void seed_point(std::size_t c, const PhonPoint<D>& p, double mass) {
    add_point_mass<D>(grid_, fields_.at(c), p, mass);
  }
  void seed_gaussian(std::size_t c, const PhonPoint<D>& p, double mass, double width) {
    add_gaussian<D>(grid_, fields_.at(c), p, mass, width);
  }

  double mass_floor(std::size_t c) const { return 1e-12 * params_.mass_rate(c) / params_.lambda; }

  /// mu (G_sigma * rho~) / |rho|, with rho~ the image of rho under
  /// z -> (1 - alpha - beta) z + alpha * mean. Returns nullopt when rho has
  /// no more than the extinction mass floor.
  std::optional<std::vector<double>> production_term(std::span<const double> rho,
                                                     const PhonPoint<D>& category_mean, double mu,
                                                     double floor = 0.0) const {
    std::vector<double> out(grid_.size());
    if (!production_into(rho, category_mean, mu, floor, out)) return std::nullopt;
    return out;
  }

  std::vector<double> smoothed_field(std::span<const double> rho) const { return smoother_(rho); }
  const Convolver<D>& smoother() const { return smoother_; }
  const Convolver<D>& production_kernel() const { return gaussian_; }

  /// Time derivative of every category field.
  Fields rhs(const Fields& fields) const {
    Fields out(fields.size(), std::vector<double>(grid_.size()));
    rhs_into(fields, out);
    return out;
  }

  // Mass production accepted into each category during the last rhs
  // evaluation, and mass lost past the grid edge by production.
  const std::vector<double>& accepted_rate() const { return accepted_rate_; }
  const std::vector<double>& leak_rate() const { return leak_rate_; }

  void step() { step(options_.dt); }

  void step(double dt) {
    const std::size_t nc = fields_.size();
    const std::size_t n = grid_.size();
    ensure_stage_buffers();
    rhs_into(fields_, k_[0]);
    const auto leak = leak_rate_;
    auto stage = [&](std::size_t from, double h) {
      for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t i = 0; i < n; ++i) tmp_[c][i] = fields_[c][i] + h * k_[from][c][i];
    };
    stage(0, 0.5 * dt);
    rhs_into(tmp_, k_[1]);
    stage(1, 0.5 * dt);
    rhs_into(tmp_, k_[2]);
    stage(2, dt);
    rhs_into(tmp_, k_[3]);
    for (std::size_t c = 0; c < nc; ++c) {
      double clipped = 0.0;
      auto& f = fields_[c];
      for (std::size_t i = 0; i < n; ++i) {
        f[i] += dt / 6.0 * (k_[0][c][i] + 2.0 * k_[1][c][i] + 2.0 * k_[2][c][i] + k_[3][c][i]);
        if (!std::isfinite(f[i])) fail(c, i);
        if (f[i] < 0.0) {
          clipped -= f[i] * trapezoid_weight(grid_, i);
          f[i] = 0.0;
        }
      }
      auto& d = trajectory_.diagnostics[c];
      d.clipped_mass += clipped;
      d.leaked_mass += leak[c] * dt;
    }
    ++steps_;
    time_ = static_cast<double>(steps_) * dt;
  }

  /// Integrates to the horizon with the configured step, recording moments
  /// at every sample time and field snapshots at the listed times.
  Trajectory integrate(const RunConfig& cfg) {
    cfg.validate();
    const double dt = options_.dt;
    auto to_steps = [&](double t, const char* what) {
      const double r = t / dt;
      const double k = std::round(r);
      if (std::abs(r - k) > 1e-6 * std::max(1.0, r))
        throw ContractViolation(std::string(what) + " must be a multiple of the time step");
      return static_cast<long long>(k);
    };
    const long long total = to_steps(cfg.horizon, "horizon");
    const long long every = to_steps(cfg.sample_interval, "sample_interval");
    if (every <= 0) throw ContractViolation("sample_interval must be at least one time step");
    std::vector<long long> snaps;
    for (double t : cfg.snapshot_times) snaps.push_back(std::llround(t / dt));

    auto checkpoint = [&](long long s) {
      const double t = static_cast<double>(s) * dt;
      if (s % every == 0 || s == total) record(t);
      for (long long q : snaps)
        if (q == s) snapshot(t);
    };
    steps_ = 0;
    time_ = 0.0;
    checkpoint(0);
    for (long long s = 1; s <= total; ++s) {
      step(dt);
      checkpoint(s);
    }
    return trajectory_;
  }

 private:
  static std::function<double(double)> gaussian_profile(double sigma) {
    return [sigma](double r) { return std::exp(-0.5 * r * r / (sigma * sigma)); };
  }
  static std::function<double(double)> exponential_profile(double kappa) {
    return [kappa](double r) { return std::exp(-kappa * r); };
  }

  bool production_into(std::span<const double> rho, const PhonPoint<D>& category_mean, double mu,
                       double floor, std::span<double> out) const {
    const double mass = field_mass<D>(grid_, rho);
    if (!(mass > floor)) {
      std::fill(out.begin(), out.end(), 0.0);
      return false;
    }
    PhonPoint<D> shift;
    for (int k = 0; k < D; ++k) shift[k] = params_.alpha * category_mean[k];
    push_.resize(grid_.size());
    pushforward<D>(grid_, rho, 1.0 - params_.alpha - params_.beta, shift, push_);
    gaussian_.apply(push_, out);
    const double scale = mu / mass;
    for (double& v : out) v *= scale;
    return true;
  }

  void rhs_into(const Fields& fields, Fields& out) const {
    const std::size_t nc = fields.size();
    const std::size_t n = grid_.size();
    production_.resize(nc);
    accepted_rate_.assign(nc, 0.0);
    leak_rate_.assign(nc, 0.0);
    std::vector<bool> alive(nc, false);
    for (std::size_t c = 0; c < nc; ++c) {
      production_[c].resize(n);
      const double mass = field_mass<D>(grid_, fields[c]);
      const double mu = params_.mass_rate(c);
      if (mass > mass_floor(c)) {
        alive[c] = true;
        const auto mean = field_mean<D>(grid_, fields[c]);
        production_into(fields[c], mean, mu, mass_floor(c), production_[c]);
        leak_rate_[c] = mu - field_mass<D>(grid_, production_[c]);
      } else {
        std::fill(production_[c].begin(), production_[c].end(), 0.0);
      }
    }

    const double lambda = params_.lambda;
    if (params_.regime == Regime::NoCompetition) {
      for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t i = 0; i < n; ++i) out[c][i] = -lambda * fields[c][i] + production_[c][i];
    } else {
      smoothed_.resize(nc);
      for (std::size_t c = 0; c < nc; ++c) {
        smoothed_[c].resize(n);
        smoother_.apply(fields[c], smoothed_[c]);
      }
      std::vector<double> s(nc), f(nc);
      const bool pure = params_.regime == Regime::PureCompetition;
      const bool accept_source = params_.all_zero == AllZeroPolicy::AcceptSource;
      for (std::size_t i = 0; i < n; ++i) {
        double total_production = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
          s[c] = std::max(0.0, smoothed_[c][i]);
          total_production += production_[c][i];
        }
        const bool any = selection_probability(s, params_.p, f);
        for (std::size_t c = 0; c < nc; ++c) {
          double gain;
          if (!any)
            gain = accept_source ? production_[c][i] : 0.0;
          else if (pure)
            gain = f[c] * total_production;
          else
            gain = f[c] * production_[c][i];
          out[c][i] = -lambda * fields[c][i] + gain;
        }
      }
    }
    for (std::size_t c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += trapezoid_weight(grid_, i) * (out[c][i] + lambda * fields[c][i]);
      accepted_rate_[c] = acc;
    }
  }

  void ensure_stage_buffers() {
    const std::size_t nc = fields_.size();
    if (tmp_.size() == nc) return;
    for (auto& k : k_) k.assign(nc, std::vector<double>(grid_.size()));
    tmp_.assign(nc, std::vector<double>(grid_.size()));
  }

  [[noreturn]] void fail(std::size_t c, std::size_t i) const {
    std::ostringstream diag;
    diag.precision(17);
    diag << "time " << time_ << " category " << labels_[c] << " node " << i << " masses";
    for (std::size_t k = 0; k < fields_.size(); ++k) diag << ' ' << field_mass<D>(grid_, fields_[k]);
    throw IntegrationFailure("field integration produced a non-finite value", diag.str());
  }

  void record(double t) {
    auto& traj = trajectory_;
    traj.times.push_back(t);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t c = 0; c < fields_.size(); ++c) {
      auto& ser = traj.series[c];
      const auto& f = fields_[c];
      const double mass = field_mass<D>(grid_, f);
      ser.activation.push_back(mass);
      ser.live_count.push_back(std::count_if(f.begin(), f.end(), [](double v) { return v > 0; }));
      if (mass > mass_floor(c)) {
        const auto m = field_mean<D>(grid_, f);
        for (int k = 0; k < D; ++k) ser.mean.push_back(m[k]);
        ser.dispersion.push_back(field_dispersion<D>(grid_, f));
      } else {
        for (int k = 0; k < D; ++k) ser.mean.push_back(nan);
        ser.dispersion.push_back(nan);
        bool known = false;
        for (const auto& e : traj.extinctions) known = known || e.label == labels_[c];
        if (!known) traj.extinctions.push_back({labels_[c], t});
      }
    }
  }

  void snapshot(double t) {
    for (std::size_t c = 0; c < fields_.size(); ++c) {
      Snapshot snap;
      snap.kind = Snapshot::Kind::Field;
      snap.dim = D;
      snap.time = t;
      snap.label = labels_[c];
      snap.lo.assign(grid_.lo.begin(), grid_.lo.end());
      snap.hi.assign(grid_.hi.begin(), grid_.hi.end());
      snap.n.assign(grid_.n.begin(), grid_.n.end());
      snap.values = fields_[c];
      trajectory_.snapshots.push_back(std::move(snap));
    }
  }

  ModelParams params_;
  std::vector<std::string> labels_;
  Grid<D> grid_;
  FieldOptions options_;
  Convolver<D> gaussian_;
  Convolver<D> smoother_;
  Fields fields_;
  Trajectory trajectory_;
  double time_ = 0.0;
  long long steps_ = 0;

  std::array<Fields, 4> k_;
  Fields tmp_;
  mutable Fields production_;
  mutable Fields smoothed_;
  mutable std::vector<double> push_;
  mutable std::vector<double> accepted_rate_;
  mutable std::vector<double> leak_rate_;
};

}  // namespace exdyn
