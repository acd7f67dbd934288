#pragma once

// Diminishing stepsize schedules and exact window sums over them.
//
// The asynchronous protocol charges each update a *window* of stepsizes
// sum_{t=from}^{to} rho(t), so windows must stay additive and accurate even
// when indices reach 1e7.  Prefix sums are accumulated once with
// Neumaier-compensated summation and cached; a window is then a difference
// of two prefixes.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "asyspa/errors.hpp"

namespace asyspa {

class StepsizeSchedule {
 public:
  enum class Kind { power, constant };

  // rho(k) = scale * k^(-alpha), alpha in (0.5, 1].
  static StepsizeSchedule power(double scale, double alpha) {
    if (!(scale > 0)) throw config_error("stepsize: scale must be > 0");
    if (!(alpha > 0.5) || !(alpha <= 1.0))
      throw config_error("stepsize: alpha must lie in (0.5, 1], got " + std::to_string(alpha));
    return StepsizeSchedule(Kind::power, scale, alpha);
  }

  // rho(k) = scale.
  static StepsizeSchedule constant(double scale) {
    if (!(scale > 0)) throw config_error("stepsize: scale must be > 0");
    return StepsizeSchedule(Kind::constant, scale, 0.0);
  }

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double alpha() const { return alpha_; }

  double rho(std::int64_t k) const {
    if (k < 1) throw std::invalid_argument("stepsize: index must be >= 1");
    if (kind_ == Kind::constant) return scale_;
    return scale_ * std::pow(static_cast<double>(k), -alpha_);
  }

  // sum_{t=from}^{to} rho(t); empty when to < from.
  double window_sum(std::int64_t from, std::int64_t to) const {
    if (from < 1) throw std::invalid_argument("stepsize: window start must be >= 1");
    if (to < from) return 0.0;
    if (to == from) return rho(from);  // exact: no prefix rounding on single terms
    if (kind_ == Kind::constant) return scale_ * static_cast<double>(to - from + 1);
    extend_prefix(to);
    return prefix_[static_cast<std::size_t>(to)] - prefix_[static_cast<std::size_t>(from - 1)];
  }

 private:
  StepsizeSchedule(Kind kind, double scale, double alpha)
      : kind_(kind), scale_(scale), alpha_(alpha) {
    prefix_.push_back(0.0);
  }

  void extend_prefix(std::int64_t upto) const {
    std::size_t need = static_cast<std::size_t>(upto) + 1;
    if (prefix_.size() >= need) return;
    prefix_.reserve(need);
    while (prefix_.size() < need) {
      double term = scale_ * std::pow(static_cast<double>(prefix_.size()), -alpha_);
      // Neumaier: carry the low-order bits of each add in comp_.
      double t = sum_ + term;
      comp_ += (std::fabs(sum_) >= std::fabs(term)) ? (sum_ - t) + term : (term - t) + sum_;
      sum_ = t;
      prefix_.push_back(sum_ + comp_);
    }
  }

  Kind kind_;
  double scale_;
  double alpha_;
  mutable std::vector<double> prefix_;
  mutable double sum_ = 0.0;
  mutable double comp_ = 0.0;
};

// Normalizer s(k) = sum_{t<=k} t^(-alpha) in closed form up to constants:
// (k^(1-alpha) - 1)/(1-alpha) for alpha in (0.5, 1), ln k for alpha = 1.
// Used to express convergence rates in terms of the consumed stepsize mass.
inline double rate_normalizer_s(double alpha, double k) {
  if (!(alpha > 0.5) || !(alpha <= 1.0))
    throw std::invalid_argument("rate_normalizer_s: alpha must lie in (0.5, 1]");
  if (!(k > 0)) throw std::invalid_argument("rate_normalizer_s: k must be > 0");
  if (alpha == 1.0) return std::log(k);
  return (std::pow(k, 1.0 - alpha) - 1.0) / (1.0 - alpha);
}

}  // namespace asyspa
