#pragma once

// Post-hoc verification of traces against the delay-free augmented linear
// system.  The asynchronous protocol with delays is algebraically identical
// to a synchronous system on n(b+1) nodes: each real node gets b virtual
// relay slots that hold shares in flight, and every event k applies a
// column-stochastic matrix followed by a gradient term on the real rows:
//
//     x~(k+1) = A~(k) x~(k) - g(k),     y~(k+1) = A~(k) y~(k),
//     z_i(k+1) = [A~(k) x~(k)]_i / y~_i(k+1)   for activated real nodes.
//
// Matrix construction (column rules at event k):
//   * the batch of shares broadcast at instant k-1 (or the initial broadcast,
//     for k = 1) is routed from the sender's column with weight 1/fanout:
//     the sender's own share goes to the diagonal, a cross share consumed at
//     instant c goes to the destination row when c == k and to virtual layer
//     u = c - k otherwise;
//   * real columns not routing a batch hold their value (diagonal 1);
//   * virtual layer u shifts to layer u-1 (layer 0 = real row).
// Routing one event after the send keeps the column's content equal to the
// sender's just-broadcast state, which is what the shares actually carry.
//
// The "pinned" state rebuilt from the trace at every event is compared
// against the recursion's prediction; the residual is the central
// correctness oracle tying the protocol implementation to the linear system.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "asyspa/errors.hpp"
#include "asyspa/graph.hpp"
#include "asyspa/objective.hpp"
#include "asyspa/ratefit.hpp"
#include "asyspa/simulator.hpp"

namespace asyspa {

// --- Contraction constants ---------------------------------------------------

// Constants of the geometric contraction of products of the event matrices:
// deviation from rank-one <= alpha_bound * lambda^(k-t) with
// alpha_bound = 4n(1 + n^(nb)) and lambda = (1 - n^(-nb))^(1/(nb)).
// Logs are carried alongside because n^(nb) overflows quickly.
struct GraphConstants {
  int n = 0, b = 0;
  double alpha_bound = 0;      // may be +inf for large nb
  double log_alpha_bound = 0;
  double lambda = 0;
  double log_lambda = 0;
  double n_pow_neg_nb = 0;     // row-sum floor of long event-matrix products
};

inline GraphConstants graph_constants(int n, int b) {
  if (n < 1 || b < 1) throw config_error("graph_constants: need n >= 1 and b >= 1");
  GraphConstants c;
  c.n = n;
  c.b = b;
  const double nb = static_cast<double>(n) * b;
  const double log_pow = nb * std::log(static_cast<double>(n));  // ln n^(nb)
  c.n_pow_neg_nb = std::exp(-log_pow);
  c.log_lambda = std::log1p(-c.n_pow_neg_nb) / nb;
  c.lambda = std::exp(c.log_lambda);
  if (log_pow > 700) {
    c.log_alpha_bound = std::log(4.0 * n) + log_pow;
  } else {
    c.log_alpha_bound = std::log(4.0 * n) + std::log1p(std::exp(log_pow));
  }
  c.alpha_bound = std::exp(c.log_alpha_bound);
  return c;
}

// ln of the noise constant 8 n^(nb+1) c b^alpha / (1 - lambda) appearing in
// the rate analysis (reported for context next to empirical fits).
inline double log_rate_noise_constant(int n, int b, double c, double alpha) {
  if (!(c > 0)) throw config_error("rate noise constant: need c > 0");
  GraphConstants gc = graph_constants(n, b);
  const double one_minus_lambda = -std::expm1(gc.log_lambda);
  return std::log(8.0) + (static_cast<double>(n) * b + 1) * std::log(static_cast<double>(n)) +
         std::log(c) + alpha * std::log(static_cast<double>(b)) - std::log(one_minus_lambda);
}

// --- Trace indexing ----------------------------------------------------------

struct TraceIndex {
  int n = 0;
  std::int64_t k_end = 0;         // instants in the trace
  std::int64_t k_verifiable = 0;  // events 1..k_verifiable are fully routable
  std::vector<std::vector<int>> act_by_k;             // instant -> activate record indices
  std::vector<std::vector<std::int64_t>> init_batch;  // src -> initial-broadcast message ids
  std::vector<std::vector<std::int64_t>> by_consume;  // instant -> message ids consumed there
};

inline TraceIndex index_trace(const Trace& tr) {
  TraceIndex ix;
  ix.n = tr.meta.n;
  for (const auto& r : tr.records) ix.k_end = std::max(ix.k_end, r.k);
  ix.act_by_k.assign(ix.k_end + 1, {});
  for (int i = 0; i < static_cast<int>(tr.records.size()); ++i) {
    const auto& r = tr.records[i];
    if (r.is_activate) ix.act_by_k[r.k].push_back(i);
  }
  ix.init_batch.assign(ix.n, {});
  ix.by_consume.assign(ix.k_end + 1, {});
  ix.k_verifiable = ix.k_end;
  for (const auto& m : tr.messages) {
    if (m.k_send == 0) ix.init_batch[m.src].push_back(m.id);
    if (m.k_consumed >= 1 && m.k_consumed <= ix.k_end) {
      ix.by_consume[m.k_consumed].push_back(m.id);
    } else if (m.k_consumed < 0) {
      // A pending message blocks routing of every batch from its send
      // instant onward (its virtual layer is unknown).
      ix.k_verifiable = std::min(ix.k_verifiable, m.k_send);
    }
  }
  return ix;
}

namespace detail {

// Trace-pinned augmented state at one event boundary, rebuilt directly from
// records: the independent "left-hand side" the replay is checked against.
//
// Real row i of x~(k) is the full value node i broadcast at instant k-1
// (batch not yet routed) and the retained 1/fanout self-share afterwards;
// virtual slot (v, u) holds every share addressed to v that is already
// routed (sent at instant <= k-2) and will be consumed at instant k-1+u.
class PinnedState {
 public:
  PinnedState(const Trace& tr, const TraceIndex& ix, int b)
      : tr_(tr), ix_(ix), g_(tr.graph()), n_(tr.meta.n), b_(b), m_(tr.meta.m) {
    last_x_.resize(n_);
    last_y_.assign(n_, 1.0);
    last_send_.assign(n_, 0);  // initial broadcast behaves like a send at instant 0
    for (int i = 0; i < n_; ++i) last_x_[i] = tr.meta.x0[i];
    k_ = 1;
  }

  std::int64_t k() const { return k_; }
  int dim_aug() const { return n_ * (b_ + 1); }

  // Fills xs (dim_aug vectors of length m) and ys with the pinned state at
  // the current event boundary k.
  void materialize(std::vector<Vec>& xs, std::vector<double>& ys) const {
    const int na = dim_aug();
    xs.assign(na, Vec(m_, 0.0));
    ys.assign(na, 0.0);
    for (int i = 0; i < n_; ++i) {
      const bool full = (last_send_[i] == k_ - 1);
      const double w = full ? 1.0 : 1.0 / g_.fanout(i);
      for (int d = 0; d < m_; ++d) xs[i][d] = last_x_[i][d] * w;
      ys[i] = last_y_[i] * w;
    }
    for (int u = 1; u <= b_; ++u) {
      const std::int64_t c = k_ - 1 + u;
      if (c < 1 || c > ix_.k_end) continue;
      for (std::int64_t id : ix_.by_consume[c]) {
        const TraceMessage& msg = tr_.messages[id];
        if (msg.src == msg.dst) continue;   // retained share: lives on the real diagonal
        if (msg.k_send > k_ - 2) continue;  // not routed yet
        const int slot = n_ * u + msg.dst;
        for (int d = 0; d < m_; ++d) xs[slot][d] += msg.x_share[d];
        ys[slot] += msg.y_share;
      }
    }
  }

  // Advances the boundary past instant k (records of that instant applied).
  void advance() {
    for (int rec_idx : ix_.act_by_k[k_]) {
      const TraceRecord& r = tr_.records[rec_idx];
      if (r.msgs.empty()) continue;  // defensive: activation that sent nothing
      last_x_[r.node] = r.x;
      last_y_[r.node] = r.y;
      last_send_[r.node] = r.k;
    }
    k_ += 1;
  }

 private:
  const Trace& tr_;
  const TraceIndex& ix_;
  Digraph g_;
  int n_, b_, m_;
  std::int64_t k_ = 1;
  std::vector<Vec> last_x_;
  std::vector<double> last_y_;
  std::vector<std::int64_t> last_send_;
};

struct EventApplication {
  std::vector<Vec> xs;        // A~(k) x~(k)   (gradient not yet subtracted)
  std::vector<double> ys;     // A~(k) y~(k)
  double colsum_error = 0;    // worst |column sum - 1| among routing columns
};

// Applies the event-k column rules to (xs, ys).  Throws invariant_error when
// a message would need a virtual layer beyond b.
inline EventApplication apply_event(const Trace& tr, const TraceIndex& ix, const Digraph& g,
                                    int b, std::int64_t k, const std::vector<Vec>& xs,
                                    const std::vector<double>& ys) {
  const int n = tr.meta.n;
  const int m = tr.meta.m;
  const int na = n * (b + 1);
  EventApplication out;
  out.xs.assign(na, Vec(m, 0.0));
  out.ys.assign(na, 0.0);

  std::vector<char> routing(n, 0);
  auto route_batch = [&](int src, const std::vector<std::int64_t>& batch) {
    if (batch.empty()) return;
    routing[src] = 1;
    const int fo = g.fanout(src);
    const double w = 1.0 / fo;
    for (std::int64_t id : batch) {
      const TraceMessage& msg = tr.messages[id];
      std::int64_t c = msg.k_consumed;
      int target;
      if (msg.dst == src) {
        target = src;  // retained self-share: sits on the diagonal until consumed
      } else {
        if (c < 0)
          throw invariant_error("replay: message " + std::to_string(id) +
                                " is never consumed; event " + std::to_string(k) +
                                " is beyond the verifiable prefix");
        if (c < k)
          throw invariant_error("replay: message " + std::to_string(id) +
                                " consumed before it was routed");
        const std::int64_t u = c - k;
        if (u > b)
          throw invariant_error("replay: message " + std::to_string(id) + " (sent at instant " +
                                std::to_string(msg.k_send) + ", consumed at " + std::to_string(c) +
                                ") needs virtual layer " + std::to_string(u) +
                                " > b = " + std::to_string(b));
        target = (u == 0) ? msg.dst : (n * static_cast<int>(u) + msg.dst);
      }
      for (int d = 0; d < m; ++d) out.xs[target][d] += xs[src][d] * w;
      out.ys[target] += ys[src] * w;
    }
    out.colsum_error =
        std::max(out.colsum_error, std::abs(static_cast<double>(batch.size()) * w - 1.0));
  };

  if (k == 1) {
    for (int i = 0; i < n; ++i) route_batch(i, ix.init_batch[i]);
  } else {
    for (int rec_idx : ix.act_by_k[k - 1]) {
      const TraceRecord& r = tr.records[rec_idx];
      route_batch(r.node, r.msgs);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!routing[i]) {
      for (int d = 0; d < m; ++d) out.xs[i][d] += xs[i][d];
      out.ys[i] += ys[i];
    }
  }
  for (int u = 1; u <= b; ++u) {
    for (int v = 0; v < n; ++v) {
      const int from = n * u + v;
      const int to = n * (u - 1) + v;
      for (int d = 0; d < m; ++d) out.xs[to][d] += xs[from][d];
      out.ys[to] += ys[from];
    }
  }
  return out;
}

}  // namespace detail

// --- Replay ------------------------------------------------------------------

struct ReplayReport {
  int n = 0, b = 0, n_aug = 0, m = 0;
  std::int64_t k_end = 0;
  std::int64_t k_verified = 0;    // events checked: 1..k_verified
  double max_residual_x = 0;      // pinned x~(k+1) vs recursion, inf-norm
  double max_residual_y = 0;
  std::int64_t argmax_k = 0;
  double max_mass_error = 0;      // |1' y~(k) - n| over boundaries
  double max_colsum_error = 0;
  double max_z_error = 0;         // recorded z vs replayed ratio, normalized
};

// Replays the trace through the augmented recursion, re-anchoring on the
// trace-pinned state after every event so residuals stay per-event.
inline ReplayReport replay_trace(const Trace& tr, const std::vector<Objective>& objs,
                                 int b_override = -1) {
  const int n = tr.meta.n;
  if (static_cast<int>(objs.size()) != n) throw config_error("replay: need one objective per node");
  const int b = b_override > 0 ? b_override : tr.meta.bounds.b;
  if (b < 1) throw config_error("replay: need b >= 1");
  TraceIndex ix = index_trace(tr);
  Digraph g = tr.graph();

  ReplayReport rep;
  rep.n = n;
  rep.b = b;
  rep.n_aug = n * (b + 1);
  rep.m = tr.meta.m;
  rep.k_end = ix.k_end;
  rep.k_verified = ix.k_verifiable;

  detail::PinnedState pinned(tr, ix, b);
  std::vector<Vec> xs;
  std::vector<double> ys;
  pinned.materialize(xs, ys);

  auto mass_check = [&](const std::vector<double>& y) {
    double s = 0;
    for (double v : y) s += v;
    rep.max_mass_error = std::max(rep.max_mass_error, std::abs(s - n));
  };
  mass_check(ys);

  for (std::int64_t k = 1; k <= ix.k_verifiable; ++k) {
    detail::EventApplication ev = detail::apply_event(tr, ix, g, b, k, xs, ys);
    rep.max_colsum_error = std::max(rep.max_colsum_error, ev.colsum_error);

    // z and gradient terms for the nodes activated at instant k.
    for (int rec_idx : ix.act_by_k[k]) {
      const TraceRecord& r = tr.records[rec_idx];
      if (r.msgs.empty()) continue;
      if (!(ev.ys[r.node] > 0))
        throw invariant_error("replay: nonpositive weight at node " + std::to_string(r.node) +
                              ", event " + std::to_string(k));
      for (int d = 0; d < rep.m; ++d) {
        const double z_pred = ev.xs[r.node][d] / ev.ys[r.node];
        rep.max_z_error = std::max(
            rep.max_z_error, std::abs(z_pred - r.z[d]) / (1.0 + std::abs(r.z[d])));
      }
      Vec grad = objs[r.node].subgradient(r.z);
      for (int d = 0; d < rep.m; ++d) ev.xs[r.node][d] -= r.alpha * grad[d];
    }

    pinned.advance();
    std::vector<Vec> xs_next;
    std::vector<double> ys_next;
    pinned.materialize(xs_next, ys_next);
    mass_check(ys_next);

    for (int s = 0; s < rep.n_aug; ++s) {
      for (int d = 0; d < rep.m; ++d) {
        const double rx = std::abs(xs_next[s][d] - ev.xs[s][d]);
        if (rx > rep.max_residual_x) {
          rep.max_residual_x = rx;
          rep.argmax_k = k;
        }
      }
      rep.max_residual_y = std::max(rep.max_residual_y, std::abs(ys_next[s] - ev.ys[s]));
    }
    xs = std::move(xs_next);
    ys = std::move(ys_next);
  }
  return rep;
}

// --- Dense event matrices and their products --------------------------------

struct AugmentedMatrices {
  int n = 0, b = 0, n_aug = 0;
  std::int64_t k_max = 0;                  // matrices available for k = 1..k_max
  std::vector<std::vector<double>> mats;   // row-major n_aug x n_aug; index k-1

  const std::vector<double>& at(std::int64_t k) const {
    if (k < 1 || k > k_max) throw config_error("event matrix index out of range");
    return mats[static_cast<std::size_t>(k - 1)];
  }
};

inline AugmentedMatrices build_event_matrices(const Trace& tr, int b_override = -1,
                                              std::int64_t k_limit = -1) {
  const int n = tr.meta.n;
  const int b = b_override > 0 ? b_override : tr.meta.bounds.b;
  TraceIndex ix = index_trace(tr);
  Digraph g = tr.graph();
  AugmentedMatrices am;
  am.n = n;
  am.b = b;
  am.n_aug = n * (b + 1);
  am.k_max = (k_limit > 0) ? std::min(k_limit, ix.k_verifiable) : ix.k_verifiable;
  const int na = am.n_aug;
  am.mats.reserve(am.k_max);

  for (std::int64_t k = 1; k <= am.k_max; ++k) {
    std::vector<double> A(static_cast<std::size_t>(na) * na, 0.0);
    std::vector<char> routing(n, 0);
    auto route_batch = [&](int src, const std::vector<std::int64_t>& batch) {
      if (batch.empty()) return;
      routing[src] = 1;
      const double w = 1.0 / g.fanout(src);
      for (std::int64_t id : batch) {
        const TraceMessage& msg = tr.messages[id];
        int target;
        if (msg.dst == src) {
          target = src;
        } else {
          const std::int64_t u = msg.k_consumed - k;
          if (msg.k_consumed < 0 || u < 0 || u > b)
            throw invariant_error("event matrix: message " + std::to_string(id) +
                                  " cannot be routed at event " + std::to_string(k));
          target = (u == 0) ? msg.dst : (n * static_cast<int>(u) + msg.dst);
        }
        A[static_cast<std::size_t>(target) * na + src] += w;
      }
    };
    if (k == 1) {
      for (int i = 0; i < n; ++i) route_batch(i, ix.init_batch[i]);
    } else {
      for (int rec_idx : ix.act_by_k[k - 1]) route_batch(tr.records[rec_idx].node, tr.records[rec_idx].msgs);
    }
    for (int i = 0; i < n; ++i)
      if (!routing[i]) A[static_cast<std::size_t>(i) * na + i] = 1.0;
    for (int u = 1; u <= b; ++u)
      for (int v = 0; v < n; ++v)
        A[static_cast<std::size_t>(n * (u - 1) + v) * na + (n * u + v)] = 1.0;
    am.mats.push_back(std::move(A));
  }
  return am;
}

// Backward product Phi(k, t) = A~(k) A~(k-1) ... A~(t), dense row-major.
inline std::vector<double> phi_product(const AugmentedMatrices& am, std::int64_t k,
                                       std::int64_t t) {
  if (t < 1 || k < t || k > am.k_max) throw config_error("phi_product: indices out of range");
  const int na = am.n_aug;
  std::vector<double> P = am.at(t);
  std::vector<double> next(static_cast<std::size_t>(na) * na);
  for (std::int64_t j = t + 1; j <= k; ++j) {
    const std::vector<double>& A = am.at(j);
    std::fill(next.begin(), next.end(), 0.0);
    for (int r = 0; r < na; ++r)
      for (int c = 0; c < na; ++c) {
        const double a = A[static_cast<std::size_t>(r) * na + c];
        if (a == 0) continue;
        const double* prow = &P[static_cast<std::size_t>(c) * na];
        double* nrow = &next[static_cast<std::size_t>(r) * na];
        for (int q = 0; q < na; ++q) nrow[q] += a * prow[q];
      }
    P.swap(next);
  }
  return P;
}

struct PhiReport {
  std::vector<double> phi;       // row means: rank-one factor estimate
  double deviation = 0;          // max entrywise |P[r][c] - phi[r]|
  double log_bound = 0;          // ln(alpha_bound) + (k-t) ln(lambda)
  bool within_bound = true;
  double real_row_floor = 0;     // min over real rows of sum over first n columns
  double floor_required = 0;     // n^(-nb)
  bool floor_ok = true;
};

inline PhiReport phi_report(const std::vector<double>& P, int n, int b, std::int64_t k,
                            std::int64_t t) {
  const int na = n * (b + 1);
  if (P.size() != static_cast<std::size_t>(na) * na) throw config_error("phi_report: size mismatch");
  GraphConstants gc = graph_constants(n, b);
  PhiReport rep;
  rep.phi.assign(na, 0.0);
  for (int r = 0; r < na; ++r) {
    double s = 0;
    for (int c = 0; c < na; ++c) s += P[static_cast<std::size_t>(r) * na + c];
    rep.phi[r] = s / na;
  }
  for (int c = 0; c < na; ++c)
    for (int r = 0; r < na; ++r)
      rep.deviation = std::max(
          rep.deviation, std::abs(P[static_cast<std::size_t>(r) * na + c] - rep.phi[r]));
  rep.log_bound = gc.log_alpha_bound + static_cast<double>(k - t) * gc.log_lambda;
  rep.within_bound = (rep.deviation <= 0) || (std::log(rep.deviation) <= rep.log_bound);
  rep.floor_required = gc.n_pow_neg_nb;
  rep.real_row_floor = std::numeric_limits<double>::infinity();
  for (int r = 0; r < n; ++r) {
    double s = 0;
    for (int c = 0; c < n; ++c) s += P[static_cast<std::size_t>(r) * na + c];
    rep.real_row_floor = std::min(rep.real_row_floor, s);
  }
  rep.floor_ok = rep.real_row_floor >= rep.floor_required - 1e-12;
  return rep;
}

// --- Consensus measurements --------------------------------------------------

struct ConsensusSeries {
  std::vector<std::int64_t> ks;     // instants 1..k_verified
  std::vector<double> deviation;    // max over activated i of |z_i(k+1) - xbar(k)|, per component
  std::vector<double> spread;       // max over dims of range of last-known z across nodes
  std::vector<double> bound_rhs;    // 8 n^(nb) (lambda^k |x~(1)|_1 + sum lambda^(k-t) |g(t)|_1)
  bool within_bound = true;
  double max_deviation = 0;
  double final_spread = 0;
};

// Deviation of activated nodes' ratios from the mass average
// xbar(k) = 1' x~(k) / n (the total y-mass is n, so this is the push-sum
// average the ratios converge to), plus the geometric envelope built from
// the gradient history.
inline ConsensusSeries consensus_series(const Trace& tr, const std::vector<Objective>& objs,
                                        int b_override = -1) {
  const int n = tr.meta.n;
  const int m = tr.meta.m;
  const int b = b_override > 0 ? b_override : tr.meta.bounds.b;
  TraceIndex ix = index_trace(tr);
  GraphConstants gc = graph_constants(n, b);
  const double prefactor = std::exp(std::log(8.0) + static_cast<double>(n) * b * std::log(static_cast<double>(n)));

  detail::PinnedState pinned(tr, ix, b);
  std::vector<Vec> xs;
  std::vector<double> ys;

  std::vector<Vec> last_z(n);
  for (int i = 0; i < n; ++i) last_z[i] = tr.meta.x0[i];

  ConsensusSeries out;
  double x1_norm1 = 0;
  for (const auto& v : tr.meta.x0)
    for (double a : v) x1_norm1 += std::abs(a);
  double lambda_pow_k = 1.0;    // lambda^k, updated per event
  double g_tail = 0;            // sum_t lambda^(k-t) |g(t)|_1

  for (std::int64_t k = 1; k <= ix.k_verifiable; ++k) {
    pinned.materialize(xs, ys);
    Vec xbar(m, 0.0);
    for (const auto& slot : xs)
      for (int d = 0; d < m; ++d) xbar[d] += slot[d];
    for (int d = 0; d < m; ++d) xbar[d] /= n;

    double dev = 0;
    double g_norm1 = 0;
    for (int rec_idx : ix.act_by_k[k]) {
      const TraceRecord& r = tr.records[rec_idx];
      if (r.msgs.empty()) continue;
      for (int d = 0; d < m; ++d) dev = std::max(dev, std::abs(r.z[d] - xbar[d]));
      last_z[r.node] = r.z;
      Vec grad = objs[r.node].subgradient(r.z);
      for (int d = 0; d < m; ++d) g_norm1 += std::abs(r.alpha * grad[d]);
    }
    lambda_pow_k *= gc.lambda;
    g_tail = gc.lambda * g_tail + g_norm1;
    const double rhs = prefactor * (lambda_pow_k * x1_norm1 + g_tail);

    double spread = 0;
    for (int d = 0; d < m; ++d) {
      double lo = last_z[0][d], hi = last_z[0][d];
      for (int i = 1; i < n; ++i) {
        lo = std::min(lo, last_z[i][d]);
        hi = std::max(hi, last_z[i][d]);
      }
      spread = std::max(spread, hi - lo);
    }

    out.ks.push_back(k);
    out.deviation.push_back(dev);
    out.spread.push_back(spread);
    out.bound_rhs.push_back(rhs);
    out.max_deviation = std::max(out.max_deviation, dev);
    out.final_spread = spread;
    if (dev > rhs + 1e-12) out.within_bound = false;

    pinned.advance();
  }
  return out;
}

// --- Protocol audits ---------------------------------------------------------

struct BookkeepingAudit {
  std::int64_t activation_window_violations = 0;  // node silent through a full b1-window
  std::int64_t consumption_violations = 0;        // message older than b events when consumed
  std::int64_t max_consumption_lag = 0;           // max (consume - send) over messages
  std::int64_t max_l_gap = 0;                     // max spread of l across nodes, any boundary
  std::int64_t max_l_increment = 0;               // max one-update jump of l
  std::int64_t min_l_increment = 0;               // min one-update jump (0 until an update happens)

  bool pass(int n, int b) const {
    return activation_window_violations == 0 && consumption_violations == 0 &&
           max_l_gap <= static_cast<std::int64_t>(n) * b &&
           max_l_increment <= static_cast<std::int64_t>(n) * b + 1 && min_l_increment >= 1;
  }
};

// Audits the asynchrony bookkeeping guarantees: every node activates inside
// every window of b1 consecutive instants, every message is consumed within
// b instants of its send, the l counters never spread further than n*b, and
// every single update advances l by 1..n*b+1.
inline BookkeepingAudit bookkeeping_audit(const Trace& tr) {
  const int n = tr.meta.n;
  const int b1 = tr.meta.bounds.b1;
  const int b = tr.meta.bounds.b;
  TraceIndex ix = index_trace(tr);
  BookkeepingAudit audit;
  audit.min_l_increment = 0;

  // Activation windows.
  std::vector<std::vector<std::int64_t>> acts(n);
  for (const auto& r : tr.records)
    if (r.is_activate) acts[r.node].push_back(r.k);
  for (int i = 0; i < n; ++i) {
    const auto& a = acts[i];
    if (a.empty()) {
      if (ix.k_end >= b1 + 1) ++audit.activation_window_violations;
      continue;
    }
    if (a.front() > b1 + 1) ++audit.activation_window_violations;
    for (std::size_t j = 1; j < a.size(); ++j)
      if (a[j] - a[j - 1] > b1) ++audit.activation_window_violations;
    if (ix.k_end - a.back() >= b1 && ix.k_end - b1 >= 1) ++audit.activation_window_violations;
  }

  // Message consumption lag.
  for (const auto& msg : tr.messages) {
    const std::int64_t lag = (msg.k_consumed >= 0) ? msg.k_consumed - msg.k_send
                                                   : ix.k_end - msg.k_send;
    if (msg.k_consumed >= 0) audit.max_consumption_lag = std::max(audit.max_consumption_lag, lag);
    if (lag > b) ++audit.consumption_violations;
  }

  // l spreads and increments.
  std::vector<std::int64_t> cur_l(n, 1);
  std::int64_t min_inc = std::numeric_limits<std::int64_t>::max();
  auto gap_now = [&]() {
    auto [mn, mx] = std::minmax_element(cur_l.begin(), cur_l.end());
    audit.max_l_gap = std::max(audit.max_l_gap, *mx - *mn);
  };
  gap_now();
  for (std::int64_t k = 1; k <= ix.k_end; ++k) {
    for (int rec_idx : ix.act_by_k[k]) {
      const TraceRecord& r = tr.records[rec_idx];
      if (r.msgs.empty()) continue;
      const std::int64_t inc = r.l_after - r.l_before;
      audit.max_l_increment = std::max(audit.max_l_increment, inc);
      min_inc = std::min(min_inc, inc);
      cur_l[r.node] = r.l_after;
    }
    gap_now();
  }
  if (min_inc != std::numeric_limits<std::int64_t>::max()) audit.min_l_increment = min_inc;
  return audit;
}

// Total unconsumed share weight after every instant (push-sum mass), checked
// directly on the message registry without the augmented machinery.
struct MassAudit {
  double max_cut_error = 0;     // |total in-flight weight - n|
  double max_node_y_error = 0;  // consumed share sum vs recorded node weight
};

inline MassAudit mass_audit(const Trace& tr) {
  const int n = tr.meta.n;
  TraceIndex ix = index_trace(tr);
  MassAudit out;
  double running = 0;
  for (const auto& m : tr.messages)
    if (m.k_send == 0) running += m.y_share;
  out.max_cut_error = std::abs(running - n);
  std::vector<double> consumed_y(n, 0.0);
  for (std::int64_t k = 1; k <= ix.k_end; ++k) {
    std::fill(consumed_y.begin(), consumed_y.end(), 0.0);
    for (std::int64_t id : ix.by_consume[k]) {
      running -= tr.messages[id].y_share;
      consumed_y[tr.messages[id].dst] += tr.messages[id].y_share;
    }
    for (int rec_idx : ix.act_by_k[k]) {
      const TraceRecord& r = tr.records[rec_idx];
      if (r.msgs.empty()) continue;
      out.max_node_y_error = std::max(out.max_node_y_error, std::abs(consumed_y[r.node] - r.y));
      for (std::int64_t id : r.msgs) running += tr.messages[id].y_share;
    }
    out.max_cut_error = std::max(out.max_cut_error, std::abs(running - n));
  }
  return out;
}

// Empirical update rates: share of global activation instants per node.
inline std::vector<double> update_rates(const Trace& tr) {
  std::vector<double> counts(tr.meta.n, 0.0);
  double total = 0;
  for (const auto& r : tr.records) {
    if (!r.is_activate) continue;
    counts[r.node] += 1;
    total += 1;
  }
  if (total > 0)
    for (double& c : counts) c /= total;
  return counts;
}

}  // namespace asyspa
