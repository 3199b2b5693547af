#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "exdyn/model.hpp"

namespace testsupport {

// Upper critical value of the chi-square distribution at confidence `level`.
inline double chi_square_critical(double dof, double level) {
  return boost::math::quantile(boost::math::chi_squared(dof), level);
}

inline double chi_square(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    s += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  return s;
}

// Index whose cumulative weight first exceeds u * total, by linear scan.
inline std::size_t cumulative_sum_pick(const std::vector<double>& w, double u) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u * total < acc) return i;
  }
  return w.size() - 1;
}

inline exdyn::ModelParams two_category_params(exdyn::Regime regime, double p = 1.0) {
  exdyn::ModelParams m;
  m.rates = {1000.0, 1000.0};
  m.w0 = 1e-3;
  m.regime = regime;
  m.p = p;
  return m;
}

}  // namespace testsupport
