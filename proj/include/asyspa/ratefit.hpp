#pragma once

// Least-squares slope fitting on log-log series, used to measure empirical
// convergence rates (value ~ c * k^slope).

#include <cmath>
#include <cstdint>
#include <vector>

#include "asyspa/errors.hpp"

namespace asyspa {

struct RateFit {
  double slope = 0;
  double intercept = 0;   // fitted log(c)
  int points = 0;         // points actually used
  int filtered = 0;       // nonpositive values dropped from the window
};

// OLS of log(value) against log(k) over k in [k_min, k_max].  Nonpositive
// values cannot be log-transformed and are skipped (counted in `filtered`).
inline RateFit rate_fit(const std::vector<std::int64_t>& ks, const std::vector<double>& values,
                        std::int64_t k_min, std::int64_t k_max) {
  if (ks.size() != values.size()) throw config_error("rate_fit: series length mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0, filtered = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < k_min || ks[i] > k_max) continue;
    if (!(values[i] > 0)) {
      ++filtered;
      continue;
    }
    double x = std::log(static_cast<double>(ks[i]));
    double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  RateFit fit;
  fit.points = n;
  fit.filtered = filtered;
  if (n >= 2) {
    double denom = n * sxx - sx * sx;
    if (denom > 0) {
      fit.slope = (n * sxy - sx * sy) / denom;
      fit.intercept = (sy - fit.slope * sx) / n;
    }
  }
  return fit;
}

}  // namespace asyspa
