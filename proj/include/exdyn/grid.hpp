#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "exdyn/model.hpp"

namespace exdyn {

/// Uniform rectangular grid. Nodes are stored row-major with the last axis
/// fastest, so in 2D node (i, j) sits at i * n[1] + j.
template <int D>
struct Grid {
  std::array<double, D> lo{};
  std::array<double, D> hi{};
  std::array<std::size_t, D> n{};

  double spacing(int k) const { return (hi[k] - lo[k]) / static_cast<double>(n[k] - 1); }
  double coord(int k, std::size_t i) const { return lo[k] + static_cast<double>(i) * spacing(k); }

  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < D; ++k) v *= spacing(k);
    return v;
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int k = 0; k < D; ++k) s *= n[k];
    return s;
  }

  PhonPoint<D> node(std::size_t idx) const {
    PhonPoint<D> p;
    if constexpr (D == 1) {
      p[0] = coord(0, idx);
    } else {
      p[0] = coord(0, idx / n[1]);
      p[1] = coord(1, idx % n[1]);
    }
    return p;
  }

  bool contains(const PhonPoint<D>& p, double margin = 0.0) const {
    for (int k = 0; k < D; ++k)
      if (p[k] - margin < lo[k] || p[k] + margin > hi[k]) return false;
    return true;
  }

  void validate() const {
    for (int k = 0; k < D; ++k) {
      if (n[k] < 16) throw InvalidParams("grid needs at least 16 points per axis");
      if (!(hi[k] > lo[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k]))
        throw InvalidParams("grid extent must satisfy lo < hi");
    }
  }

  bool operator==(const Grid&) const = default;
};

/// Trapezoidal quadrature weight of a node, in units of phonetic volume.
template <int D>
double trapezoid_weight(const Grid<D>& g, std::size_t idx) {
  auto edge = [](std::size_t i, std::size_t n) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; };
  double w = g.cell_volume();
  if constexpr (D == 1) {
    w *= edge(idx, g.n[0]);
  } else {
    w *= edge(idx / g.n[1], g.n[0]) * edge(idx % g.n[1], g.n[1]);
  }
  return w;
}

template <int D>
struct DensityField {
  Grid<D> grid;
  std::vector<double> values;

  DensityField() = default;
  explicit DensityField(const Grid<D>& g) : grid(g), values(g.size(), 0.0) {}
  DensityField(const Grid<D>& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw ContractViolation("DensityField: size mismatch");
  }
};

template <int D>
double field_mass(const Grid<D>& g, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += trapezoid_weight(g, i) * v[i];
  return s;
}

template <int D>
PhonPoint<D> field_mean(const Grid<D>& g, std::span<const double> v) {
  PhonPoint<D> num = zero_point<D>();
  double den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = trapezoid_weight(g, i) * v[i];
    const auto y = g.node(i);
    for (int k = 0; k < D; ++k) num[k] += w * y[k];
    den += w;
  }
  if (!(den > 0)) throw EmptyCategory("field_mean: field has no mass");
  for (int k = 0; k < D; ++k) num[k] /= den;
  return num;
}

template <int D>
double field_dispersion(const Grid<D>& g, std::span<const double> v) {
  const auto m = field_mean(g, v);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = trapezoid_weight(g, i) * v[i];
    auto y = g.node(i);
    for (int k = 0; k < D; ++k) y[k] -= m[k];
    num += w * squared_norm<D>(y);
    den += w;
  }
  return std::sqrt(num / den);
}

template <int D>
double field_mass(const DensityField<D>& f) { return field_mass<D>(f.grid, f.values); }
template <int D>
PhonPoint<D> field_mean(const DensityField<D>& f) { return field_mean<D>(f.grid, f.values); }
template <int D>
double field_dispersion(const DensityField<D>& f) { return field_dispersion<D>(f.grid, f.values); }

/// Places `mass` at p by multilinear splitting over the surrounding nodes.
template <int D>
void add_point_mass(const Grid<D>& g, std::span<double> v, const PhonPoint<D>& p, double mass) {
  if (!g.contains(p)) throw ContractViolation("add_point_mass: point outside grid");
  std::array<std::size_t, D> base{};
  std::array<double, D> frac{};
  for (int k = 0; k < D; ++k) {
    const double x = (p[k] - g.lo[k]) / g.spacing(k);
    auto i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 >= g.n[k]) i = g.n[k] - 2;
    base[k] = i;
    frac[k] = x - static_cast<double>(i);
  }
  for (int corner = 0; corner < (1 << D); ++corner) {
    double w = 1.0;
    std::size_t idx = 0;
    for (int k = 0; k < D; ++k) {
      const int bit = (corner >> k) & 1;
      w *= bit ? frac[k] : 1.0 - frac[k];
      idx = idx * g.n[k] + base[k] + bit;
    }
    v[idx] += w * mass / trapezoid_weight(g, idx);
  }
}

/// Adds an isotropic Gaussian bump of total mass `mass` and per-axis
/// standard deviation `width`, normalized on the grid.
template <int D>
void add_gaussian(const Grid<D>& g, std::span<double> v, const PhonPoint<D>& center, double mass,
                  double width) {
  if (!(width > 0)) throw ContractViolation("add_gaussian: width must be > 0");
  std::vector<double> bump(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto y = g.node(i);
    for (int k = 0; k < D; ++k) y[k] -= center[k];
    bump[i] = std::exp(-0.5 * squared_norm<D>(y) / (width * width));
  }
  const double m = field_mass<D>(g, bump);
  if (!(m > 0)) throw ContractViolation("add_gaussian: bump does not touch the grid");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += mass * bump[i] / m;
}

}  // namespace exdyn
