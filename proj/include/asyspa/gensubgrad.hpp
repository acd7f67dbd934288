#pragma once

// Generalized subgradient method with per-component stepsize counters.
//
//   x(k+1) = x(k) - alpha(k) * g,   g in subdifferential of f_{s(k)} at x(k) + eps(k)
//   alpha(k) = sum of rho(t) for t = r_{s(k)}(k)+1 .. r_{s(k)}(k+1)
//
// where s(k) picks a component and each component's counter r_i advances only
// when that component is selected.  With a cyclic selector and unit counter
// increments this is the classical cyclic incremental method; adding
// "freeze-point" perturbations eps(k) = x(block start) - x(k) makes each full
// cycle apply one plain subgradient step of the summed objective.
//
// Runtime monitors enforce the schedule's declared regularity: every
// component selected at least once in any sigma1 consecutive steps, counter
// spread and increments bounded by sigma2, and the perturbation series
// sum rho(k)*|eps(k)| tracked for summability checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "asyspa/errors.hpp"
#include "asyspa/objective.hpp"
#include "asyspa/stepsize.hpp"

namespace asyspa {

struct GenSchedule {
  enum class Noise { none, freeze_block, custom };

  int n = 1;                     // number of objective components
  std::int64_t sigma1 = 1;       // selection-coverage window
  std::int64_t sigma2 = 1;       // counter spread / increment bound
  Noise noise = Noise::none;
  // k is 1-based throughout; select returns a 0-based component index.
  std::function<int(std::int64_t)> select;
  // Counter increment applied when component i is selected at step k (>= 1).
  std::function<std::int64_t(std::int64_t, int)> increment;
  // Custom perturbation rule (used when noise == custom).
  std::function<Vec(std::int64_t, const Vec&)> custom_noise;
};

// Cyclic selector s(k) = (k-1) mod n, unit increments, no perturbation.
inline GenSchedule make_cyclic_incremental(int n) {
  if (n < 1) throw config_error("schedule: need at least one component");
  GenSchedule s;
  s.n = n;
  s.sigma1 = n;
  s.sigma2 = 1;
  s.noise = GenSchedule::Noise::none;
  s.select = [n](std::int64_t k) { return static_cast<int>((k - 1) % n); };
  s.increment = [](std::int64_t, int) { return std::int64_t{1}; };
  return s;
}

// Same schedule, but subgradients are evaluated at the iterate frozen at the
// start of the current length-n block: eps(k) = x(block_start(k)) - x(k) with
// block_start(k) = n*floor((k-1)/n) + 1.  The compressed iterates
// y(m) = x((m-1)n + 1) then follow y(m+1) = y(m) - rho(m) * sum_i grad f_i(y(m)).
inline GenSchedule make_full_subgradient(int n) {
  GenSchedule s = make_cyclic_incremental(n);
  s.noise = GenSchedule::Noise::freeze_block;
  return s;
}

struct GenState {
  Vec x;
  std::int64_t k = 1;                   // next step index
  std::vector<std::int64_t> r;          // per-component counters
  std::vector<std::int64_t> last_sel;   // last step each component was selected (0 = never)
  Vec frozen;                           // block-start iterate (freeze_block noise)
  // Monitors.
  double noise_partial_sum = 0;         // sum of rho(k) * |eps(k)|
  double last_noise_term = 0;           // most recent rho(k) * |eps(k)|
  double max_noise_ratio = 0;           // max |eps(k)| / rho(k): empirical noise constant
  double max_grad_norm = 0;             // max subgradient norm observed
};

inline GenState make_gen_state(const Vec& x0, const GenSchedule& sched) {
  GenState st;
  st.x = x0;
  st.r.assign(sched.n, 0);
  st.last_sel.assign(sched.n, 0);
  st.frozen = x0;
  return st;
}

namespace detail {
inline double norm2(const Vec& v) {
  double s = 0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}
}  // namespace detail

// One step of the generalized method; mutates st and returns the new iterate.
// Throws invariant_error when the executed schedule breaks its declared
// sigma1/sigma2 regularity.
inline const Vec& gen_step(GenState& st, const GenSchedule& sched, const StepsizeSchedule& rho,
                           const std::vector<Objective>& objs) {
  if (static_cast<int>(objs.size()) != sched.n)
    throw config_error("gen_step: schedule has " + std::to_string(sched.n) + " components, got " +
                       std::to_string(objs.size()) + " objectives");
  const std::int64_t k = st.k;
  const int i = sched.select(k);
  if (i < 0 || i >= sched.n) throw invariant_error("gen_step: selector out of range at k=" + std::to_string(k));

  // Coverage monitor: no component may starve longer than sigma1 steps.
  for (int j = 0; j < sched.n; ++j) {
    if (k - st.last_sel[j] > sched.sigma1)
      throw invariant_error("gen_step: component " + std::to_string(j) +
                            " not selected in the last " + std::to_string(sched.sigma1) +
                            " steps (at k=" + std::to_string(k) + ")");
  }
  st.last_sel[i] = k;

  const std::int64_t dr = sched.increment(k, i);
  if (dr < 1) throw invariant_error("gen_step: counter increment must be >= 1");
  if (dr > sched.sigma2)
    throw invariant_error("gen_step: counter increment " + std::to_string(dr) +
                          " exceeds declared bound " + std::to_string(sched.sigma2));
  const double alpha = rho.window_sum(st.r[i] + 1, st.r[i] + dr);
  st.r[i] += dr;

  // Counter-spread monitor.
  auto [mn, mx] = std::minmax_element(st.r.begin(), st.r.end());
  if (*mx - *mn > sched.sigma2)
    throw invariant_error("gen_step: counter spread " + std::to_string(*mx - *mn) +
                          " exceeds declared bound " + std::to_string(sched.sigma2));

  // Perturbation.
  Vec point = st.x;
  double eps_norm = 0;
  if (sched.noise == GenSchedule::Noise::freeze_block) {
    if ((k - 1) % sched.n == 0) st.frozen = st.x;  // block start: refresh the anchor
    Vec eps(point.size());
    for (std::size_t d = 0; d < point.size(); ++d) eps[d] = st.frozen[d] - st.x[d];
    eps_norm = detail::norm2(eps);
    point = st.frozen;
  } else if (sched.noise == GenSchedule::Noise::custom && sched.custom_noise) {
    Vec eps = sched.custom_noise(k, st.x);
    if (eps.size() != point.size()) throw config_error("gen_step: noise dimension mismatch");
    eps_norm = detail::norm2(eps);
    for (std::size_t d = 0; d < point.size(); ++d) point[d] += eps[d];
  }
  const double rk = rho.rho(k);
  st.last_noise_term = rk * eps_norm;
  st.noise_partial_sum += st.last_noise_term;
  if (rk > 0) st.max_noise_ratio = std::max(st.max_noise_ratio, eps_norm / rk);

  Vec g = objs[i].subgradient(point);
  st.max_grad_norm = std::max(st.max_grad_norm, detail::norm2(g));
  for (std::size_t d = 0; d < st.x.size(); ++d) st.x[d] -= alpha * g[d];
  st.k += 1;
  return st.x;
}

// --- Distance-to-optimum bookkeeping ----------------------------------------

// Optimal set as either a finite point list or an axis-aligned box
// (lo <= x <= hi componentwise); abs-deviation objectives with even counts
// have interval optima, hence the box form.
struct OptimalSet {
  std::vector<Vec> points;
  Vec lo, hi;

  double distance(const Vec& x) const {
    if (!points.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : points) {
        double s = 0;
        for (std::size_t d = 0; d < x.size(); ++d) s += (x[d] - p[d]) * (x[d] - p[d]);
        best = std::min(best, s);
      }
      return std::sqrt(best);
    }
    if (lo.size() != x.size() || hi.size() != x.size())
      throw config_error("optimal set: dimension mismatch");
    double s = 0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      double c = std::clamp(x[d], lo[d], hi[d]);
      s += (x[d] - c) * (x[d] - c);
    }
    return std::sqrt(s);
  }
};

// Growth specification f(x) - f* >= c_h * d(x)^(1/theta) near the optimal set.
struct HolderSpec {
  double theta = 1.0;
  double c_h = 0.0;
  double f_star = 0.0;
  OptimalSet opt;
};

// Verifies the growth inequality at the given probe points (test oracle).
inline bool holder_bound_holds(const HolderSpec& spec, const std::vector<Objective>& objs,
                               const std::vector<Vec>& probes, double tol = 1e-9) {
  for (const auto& x : probes) {
    double f = 0;
    for (const auto& o : objs) f += o.value(x);
    double d = spec.opt.distance(x);
    if (f - spec.f_star + tol < spec.c_h * std::pow(d, 1.0 / spec.theta)) return false;
  }
  return true;
}

struct GenSeries {
  std::vector<std::int64_t> ks;
  std::vector<double> f_err;           // f(x(k)) - f*   (empty when f* unknown)
  std::vector<double> f_err_running_min;
  std::vector<double> dist2;           // d(x(k))^2      (empty when no optimal set)
  std::vector<double> noise_partial;   // running sum of rho(k)*|eps(k)|
  double max_noise_ratio = 0;
  double max_grad_norm = 0;
  Vec x_final;
};

// Runs `steps` iterations from x0, recording objective error and squared
// distance to the optimum when a HolderSpec is supplied.
inline GenSeries run_and_measure(const Vec& x0, std::int64_t steps, const GenSchedule& sched,
                                 const StepsizeSchedule& rho, const std::vector<Objective>& objs,
                                 const HolderSpec* holder = nullptr) {
  GenState st = make_gen_state(x0, sched);
  GenSeries out;
  out.ks.reserve(steps);
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 1; k <= steps; ++k) {
    gen_step(st, sched, rho, objs);
    out.ks.push_back(k + 1);  // x(k+1) is the iterate produced by step k
    if (holder) {
      double f = 0;
      for (const auto& o : objs) f += o.value(st.x);
      double err = f - holder->f_star;
      best = std::min(best, err);
      out.f_err.push_back(err);
      out.f_err_running_min.push_back(best);
      double d = holder->opt.distance(st.x);
      out.dist2.push_back(d * d);
    }
    out.noise_partial.push_back(st.noise_partial_sum);
  }
  out.max_noise_ratio = st.max_noise_ratio;
  out.max_grad_norm = st.max_grad_norm;
  out.x_final = st.x;
  return out;
}

}  // namespace asyspa
