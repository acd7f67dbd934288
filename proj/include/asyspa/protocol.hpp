#pragma once

// Per-node state and update rules for the push-sum subgradient protocol.
//
// Three activation rules share the same message format:
//   asyspa_activate - adaptive stepsize: one update consumes the whole
//                     stepsize window between its own counter l and the
//                     largest counter seen in the buffer.
//   naive_activate  - same averaging, but the stepsize is rho(local update
//                     count); the counter machinery still runs so traces
//                     stay uniformly auditable.
//   synspa_round    - synchronized lock-step round with stepsize rho(k).
//
// A node always broadcasts to itself as well, with zero delay, so a buffer
// read at an activation is never empty and the push-sum weight stays
// positive.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "asyspa/errors.hpp"
#include "asyspa/graph.hpp"
#include "asyspa/objective.hpp"
#include "asyspa/stepsize.hpp"

namespace asyspa {

struct Message {
  std::int64_t id = -1;
  int src = -1;
  int dst = -1;
  Vec x_share;           // sender x / fanout(src)
  double y_share = 0;    // sender y / fanout(src)
  std::int64_t l = 0;    // sender counter after its update
};

struct NodeState {
  Vec x;
  double y = 1.0;
  Vec z;                       // last computed ratio, reported between updates
  std::int64_t l = 1;
  std::int64_t local_updates = 0;
  double stepsize_consumed = 0.0;  // running sum of consumed alpha

  // Buffers in deposit order; cleared on every successful update.
  std::vector<Vec> x_buf;
  std::vector<double> y_buf;
  std::vector<std::int64_t> l_buf;
  std::vector<std::int64_t> msg_buf;  // ids, parallel to the above
};

inline void deposit(NodeState& s, const Message& m) {
  s.x_buf.push_back(m.x_share);
  s.y_buf.push_back(m.y_share);
  s.l_buf.push_back(m.l);
  s.msg_buf.push_back(m.id);
}

struct ActivationResult {
  bool updated = false;
  double alpha = 0;
  std::int64_t l_before = 0;
  std::int64_t l_after = 0;
  int consumed = 0;                    // buffer size at the read
  std::vector<std::int64_t> consumed_ids;
};

namespace detail {

// Shared buffer read + gradient step.  `alpha_mode` 0: adaptive window,
// 1: rho(local update count).
inline ActivationResult activate_common(NodeState& s, const Objective& obj,
                                        const StepsizeSchedule& sched, int alpha_mode) {
  ActivationResult res;
  res.l_before = s.l;
  if (s.x_buf.empty()) return res;  // nothing delivered: state unchanged, no broadcast

  const std::size_t m = s.x.size();
  Vec w(m, 0.0);
  for (const Vec& xs : s.x_buf) {
    if (xs.size() != m) throw invariant_error("activate: share dimension mismatch");
    for (std::size_t d = 0; d < m; ++d) w[d] += xs[d];
  }
  double y = 0;
  for (double v : s.y_buf) y += v;
  if (!(y > 0))
    throw invariant_error("activate: push-sum weight not positive (y=" + std::to_string(y) + ")");

  Vec z(m);
  for (std::size_t d = 0; d < m; ++d) z[d] = w[d] / y;

  std::int64_t l_tilde = s.l;
  for (std::int64_t lv : s.l_buf) l_tilde = std::max(l_tilde, lv);

  double alpha = 0;
  if (alpha_mode == 0) {
    alpha = sched.window_sum(s.l, l_tilde);
  } else {
    alpha = sched.rho(s.local_updates + 1);
  }

  Vec g = obj.subgradient(z);
  for (std::size_t d = 0; d < m; ++d) s.x[d] = w[d] - alpha * g[d];
  s.y = y;
  s.z = z;
  s.l = l_tilde + 1;
  s.local_updates += 1;
  s.stepsize_consumed += alpha;

  res.updated = true;
  res.alpha = alpha;
  res.l_after = s.l;
  res.consumed = static_cast<int>(s.x_buf.size());
  res.consumed_ids = s.msg_buf;
  s.x_buf.clear();
  s.y_buf.clear();
  s.l_buf.clear();
  s.msg_buf.clear();
  return res;
}

}  // namespace detail

inline ActivationResult asyspa_activate(NodeState& s, const Objective& obj,
                                        const StepsizeSchedule& sched) {
  return detail::activate_common(s, obj, sched, 0);
}

inline ActivationResult naive_activate(NodeState& s, const Objective& obj,
                                       const StepsizeSchedule& sched) {
  return detail::activate_common(s, obj, sched, 1);
}

// The share a node sends right after an update (or at initialization).
inline Message make_share(const NodeState& s, int src, int dst, int fanout) {
  Message msg;
  msg.src = src;
  msg.dst = dst;
  msg.x_share.resize(s.x.size());
  for (std::size_t d = 0; d < s.x.size(); ++d) msg.x_share[d] = s.x[d] / fanout;
  msg.y_share = s.y / fanout;
  msg.l = s.l;
  return msg;
}

// One synchronized round: every node mixes the shares of its in-neighbours
// (and itself) from the previous round and applies a rho(k) step.  All nodes
// update simultaneously.
inline std::vector<ActivationResult> synspa_round(std::vector<NodeState>& states,
                                                  const Digraph& g,
                                                  const std::vector<Objective>& objs,
                                                  const StepsizeSchedule& sched,
                                                  std::int64_t k) {
  const int n = g.size();
  if (static_cast<int>(states.size()) != n || static_cast<int>(objs.size()) != n)
    throw std::invalid_argument("synspa_round: state/objective count mismatch");
  if (k < 1) throw std::invalid_argument("synspa_round: round index must be >= 1");
  const std::size_t m = states[0].x.size();
  double rho = sched.rho(k);

  std::vector<Vec> w(n, Vec(m, 0.0));
  std::vector<double> wy(n, 0.0);
  for (int j = 0; j < n; ++j) {
    int fo = g.fanout(j);
    std::vector<int> dsts = g.out(j);
    dsts.push_back(j);
    for (int dst : dsts) {
      for (std::size_t d = 0; d < m; ++d) w[dst][d] += states[j].x[d] / fo;
      wy[dst] += states[j].y / fo;
    }
  }

  std::vector<ActivationResult> out(n);
  for (int i = 0; i < n; ++i) {
    NodeState& s = states[i];
    out[i].l_before = s.l;
    if (!(wy[i] > 0)) throw invariant_error("synspa_round: push-sum weight not positive");
    Vec z(m);
    for (std::size_t d = 0; d < m; ++d) z[d] = w[i][d] / wy[i];
    Vec grad = objs[i].subgradient(z);
    for (std::size_t d = 0; d < m; ++d) s.x[d] = w[i][d] - rho * grad[d];
    s.y = wy[i];
    s.z = z;
    s.l += 1;
    s.local_updates += 1;
    s.stepsize_consumed += rho;
    out[i].updated = true;
    out[i].alpha = rho;
    out[i].l_after = s.l;
    out[i].consumed = static_cast<int>(g.in(i).size()) + 1;
  }
  return out;
}

}  // namespace asyspa
