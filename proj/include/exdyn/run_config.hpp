#pragma once

#include <cmath>
#include <vector>

#include "exdyn/errors.hpp"

namespace exdyn {

/// Horizon and recording schedule shared by both engines.
struct RunConfig {
  double horizon = 0.0;
  double sample_interval = 1.0;
  std::vector<double> snapshot_times;

  void validate() const {
    if (!(horizon >= 0) || !std::isfinite(horizon)) throw ContractViolation("horizon must be >= 0");
    if (!(sample_interval > 0)) throw ContractViolation("sample_interval must be > 0");
    for (double t : snapshot_times)
      if (!(t >= 0 && t <= horizon)) throw ContractViolation("snapshot time outside [0, horizon]");
  }

  // Sample times 0, dt, 2dt, ... up to and including the horizon.
  std::vector<double> sample_times() const {
    std::vector<double> out;
    const auto count = static_cast<long long>(std::floor(horizon / sample_interval + 1e-9));
    for (long long i = 0; i <= count; ++i) out.push_back(static_cast<double>(i) * sample_interval);
    if (out.back() < horizon - 1e-9 * sample_interval) out.push_back(horizon);
    return out;
  }
};

}  // namespace exdyn
