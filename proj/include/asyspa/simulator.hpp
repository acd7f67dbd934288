#pragma once

// Deterministic discrete-event simulator for the push-sum protocols.
//
// Time is continuous; every activation instant gets a global index k
// (co-activated nodes share one k).  The event queue is ordered by
// (time, deliveries-before-activations, node id, sequence number), and all
// randomness comes from per-purpose splitmix64 streams, so a (config, seed)
// pair reproduces the same trace byte for byte.
//
// Within one instant every activated node reads only what was delivered
// before the instant: broadcasts emitted at time t are queued for delivery
// at t + delay (self messages: delay 0) and can only be consumed at a later
// instant.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asyspa/errors.hpp"
#include "asyspa/graph.hpp"
#include "asyspa/objective.hpp"
#include "asyspa/protocol.hpp"
#include "asyspa/rng.hpp"
#include "asyspa/stepsize.hpp"

namespace asyspa {

enum class Algorithm { asyspa, naive, synspa };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::asyspa: return "asyspa";
    case Algorithm::naive: return "naive";
    case Algorithm::synspa: return "synspa";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "asyspa") return Algorithm::asyspa;
  if (s == "naive") return Algorithm::naive;
  if (s == "synspa") return Algorithm::synspa;
  throw config_error("algorithm: unknown '" + s + "' (expected asyspa|naive|synspa)");
}

struct StragglerSpec {
  int node = -1;       // -1: no straggler
  double factor = 1.0; // multiplies the node's activation gap
};

struct TimingSpec {
  enum class Mode { periods, uniform };
  Mode mode = Mode::uniform;
  std::vector<double> periods;  // per node, mode == periods
  double gap_min = 1.0;         // mode == uniform
  double gap_max = 1.0;
  double tau_delay = 0.0;       // cross-edge delivery delay drawn in [0, tau_delay]
  StragglerSpec straggler;
  double extra_exp_mean = 0.0;  // optional exponential extra wait for every node
  double extra_exp_clip = 0.0;  // cap on the extra (default 4 * mean)
};

struct SimConfig {
  Algorithm algo = Algorithm::asyspa;
  Digraph graph;
  std::vector<Objective> objectives;
  StepsizeSchedule sched = StepsizeSchedule::constant(1.0);
  TimingSpec timing;
  std::vector<Vec> x0;
  std::uint64_t seed = 1;
  std::int64_t max_events = 0;  // number of activation instants
};

struct TraceRecord {
  std::int64_t k = 0;
  double t = 0;
  bool is_activate = false;
  int node = -1;
  std::int64_t l_before = 0, l_after = 0;
  double alpha = 0;
  double y = 0;
  Vec z, x;
  std::vector<std::int64_t> msgs;  // activate: sent ids; deliver: the delivered id
  int nbuf = 0;                    // activate: buffer size at the read
};

struct TraceMessage {
  std::int64_t id = -1;
  int src = -1, dst = -1;
  std::int64_t k_send = 0;  // 0 for the initial broadcast
  double t_send = 0, t_deliver = 0;
  Vec x_share;
  double y_share = 0;
  std::int64_t l = 0;
  std::int64_t k_consumed = -1;  // -1: still buffered/in flight at the end
};

struct TraceMeta {
  std::string algorithm;
  int n = 0, m = 0;
  std::uint64_t seed = 0;
  std::int64_t max_events = 0;
  std::vector<std::pair<int, int>> edges;
  AsynchronyBounds bounds;
  std::vector<Vec> x0;
  nlohmann::json config_snapshot;  // opaque: stepsize/objective/timing, for `analyze`
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceRecord> records;
  std::vector<TraceMessage> messages;

  Digraph graph() const { return Digraph(meta.n, meta.edges); }
  std::int64_t instants() const {
    std::int64_t k = 0;
    for (const auto& r : records) k = std::max(k, r.k);
    return k;
  }
};

// Effective timing bounds implied by a TimingSpec (used for validation and
// for the asynchrony bookkeeping constants).
inline std::pair<double, double> gap_bounds(const TimingSpec& t, int n) {
  double lo = 0, hi = 0;
  auto factor = [&](int i) {
    return (t.straggler.node == i) ? t.straggler.factor : 1.0;
  };
  if (t.mode == TimingSpec::Mode::periods) {
    if (static_cast<int>(t.periods.size()) != n)
      throw config_error("timing: periods list must have one entry per node");
    lo = std::numeric_limits<double>::infinity();
    hi = 0;
    for (int i = 0; i < n; ++i) {
      double p = t.periods[i] * factor(i);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  } else {
    if (!(t.gap_min > 0) || t.gap_max < t.gap_min)
      throw config_error("timing: need 0 < gap_min <= gap_max");
    double fmax = 1.0;
    for (int i = 0; i < n; ++i) fmax = std::max(fmax, factor(i));
    lo = t.gap_min;
    hi = t.gap_max * fmax;
  }
  if (!(lo > 0)) throw config_error("timing: activation gaps must be positive");
  double clip = t.extra_exp_mean > 0
                    ? (t.extra_exp_clip > 0 ? t.extra_exp_clip : 4.0 * t.extra_exp_mean)
                    : 0.0;
  return {lo, hi + clip};
}

inline AsynchronyBounds bounds_for(const SimConfig& cfg) {
  auto [lo, hi] = gap_bounds(cfg.timing, cfg.graph.size());
  return asynchrony_bounds(cfg.graph.size(), lo, hi, cfg.timing.tau_delay);
}

class Simulator {
 public:
  explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)) { validate(); }

  Trace run() {
    const Digraph& g = cfg_.graph;
    const int n = g.size();
    trace_ = Trace{};
    trace_.meta.algorithm = to_string(cfg_.algo);
    trace_.meta.n = n;
    trace_.meta.m = static_cast<int>(cfg_.x0[0].size());
    trace_.meta.seed = cfg_.seed;
    trace_.meta.max_events = cfg_.max_events;
    for (int i = 0; i < n; ++i)
      for (int j : g.out(i)) trace_.meta.edges.push_back({i, j});
    trace_.meta.bounds = bounds_for(cfg_);
    trace_.meta.x0 = cfg_.x0;

    states_.assign(n, NodeState{});
    for (int i = 0; i < n; ++i) {
      states_[i].x = cfg_.x0[i];
      states_[i].z = cfg_.x0[i];
      states_[i].y = 1.0;
      states_[i].l = 1;
    }

    gap_rngs_.clear();
    delay_rngs_.clear();
    for (int i = 0; i < n; ++i) gap_rngs_.emplace_back(derive_stream(cfg_.seed, 0x67617000ull, i));

    queue_ = decltype(queue_){};
    seq_ = 0;

    // Initial broadcast: every node pushes shares of (x0, 1) with counter 1.
    for (int i = 0; i < n; ++i) emit_shares(i, /*k_send=*/0, /*t_send=*/0.0);

    // First activations.
    if (cfg_.algo == Algorithm::synspa) {
      schedule_round(0.0);
    } else {
      for (int i = 0; i < n; ++i)
        push_event(next_gap(i), /*deliver=*/false, i, -1);
    }

    std::int64_t k = 0;
    while (k < cfg_.max_events && !queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      if (ev.deliver) {
        deposit_message(ev, k);
        continue;
      }
      // Gather the full co-activation set at this timestamp.  Deliveries at
      // the same timestamp sorted first, so buffers are already settled.
      double t_now = ev.t;
      std::vector<int> active{ev.node};
      while (!queue_.empty() && !queue_.top().deliver && queue_.top().t == t_now) {
        active.push_back(queue_.top().node);
        queue_.pop();
      }
      std::sort(active.begin(), active.end());
      k += 1;
      for (int i : active) {
        NodeState& s = states_[i];
        ActivationResult res =
            (cfg_.algo == Algorithm::naive)
                ? naive_activate(s, cfg_.objectives[i], cfg_.sched)
                : asyspa_activate(s, cfg_.objectives[i], cfg_.sched);
        for (std::int64_t id : res.consumed_ids) trace_.messages[id].k_consumed = k;
        TraceRecord rec;
        rec.k = k;
        rec.t = t_now;
        rec.is_activate = true;
        rec.node = i;
        rec.l_before = res.l_before;
        rec.l_after = res.updated ? res.l_after : res.l_before;
        rec.alpha = res.alpha;
        rec.y = s.y;
        rec.z = s.z;
        rec.x = s.x;
        rec.nbuf = res.consumed;
        if (res.updated) rec.msgs = emit_shares(i, k, t_now);
        trace_.records.push_back(std::move(rec));
      }
      if (cfg_.algo == Algorithm::synspa) {
        schedule_round(t_now);
      } else {
        for (int i : active) push_event(t_now + next_gap(i), false, i, -1);
      }
    }
    return std::move(trace_);
  }

 private:
  struct Event {
    double t = 0;
    bool deliver = false;
    int node = -1;
    std::int64_t msg_id = -1;
    std::int64_t seq = 0;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      if (deliver != o.deliver) return !deliver;  // deliveries first
      if (node != o.node) return node > o.node;
      return seq > o.seq;
    }
  };

  void validate() const {
    const int n = cfg_.graph.size();
    if (n == 0) throw config_error("sim: empty graph");
    if (!strongly_connected(cfg_.graph)) throw config_error("sim: graph is not strongly connected");
    if (static_cast<int>(cfg_.objectives.size()) != n)
      throw config_error("sim: need one objective per node");
    if (static_cast<int>(cfg_.x0.size()) != n) throw config_error("sim: need one x0 per node");
    const std::size_t m = cfg_.x0[0].size();
    for (const auto& v : cfg_.x0)
      if (v.size() != m) throw config_error("sim: x0 dimensions differ across nodes");
    for (int i = 0; i < n; ++i)
      if (static_cast<std::size_t>(cfg_.objectives[i].dim()) != m)
        throw config_error("sim: objective dimension mismatch at node " + std::to_string(i));
    if (cfg_.max_events < 1) throw config_error("sim: max_events must be >= 1");
    if (cfg_.timing.tau_delay < 0) throw config_error("timing: tau_delay must be >= 0");
    if (cfg_.timing.straggler.node >= n)
      throw config_error("timing: straggler node out of range");
    if (cfg_.timing.straggler.node >= 0 && !(cfg_.timing.straggler.factor >= 1.0))
      throw config_error("timing: straggler factor must be >= 1");
    gap_bounds(cfg_.timing, n);  // validates mode-specific fields
  }

  void push_event(double t, bool deliver, int node, std::int64_t msg_id) {
    queue_.push(Event{t, deliver, node, msg_id, seq_++});
  }

  double straggler_factor(int i) const {
    return (cfg_.timing.straggler.node == i) ? cfg_.timing.straggler.factor : 1.0;
  }

  double extra_wait(int i) {
    if (cfg_.timing.extra_exp_mean <= 0) return 0.0;
    double clip = cfg_.timing.extra_exp_clip > 0 ? cfg_.timing.extra_exp_clip
                                                 : 4.0 * cfg_.timing.extra_exp_mean;
    return std::min(gap_rngs_[i].next_exponential(cfg_.timing.extra_exp_mean), clip);
  }

  double next_gap(int i) {
    double base = 0;
    if (cfg_.timing.mode == TimingSpec::Mode::periods) {
      base = cfg_.timing.periods[i] * straggler_factor(i);
    } else {
      base = gap_rngs_[i].next_uniform(cfg_.timing.gap_min, cfg_.timing.gap_max) *
             straggler_factor(i);
    }
    return base + extra_wait(i);
  }

  // Synchronized mode: every node activates at the same instant; the round
  // takes as long as its slowest participant.
  void schedule_round(double t_now) {
    double dur = 0;
    for (int i = 0; i < cfg_.graph.size(); ++i) dur = std::max(dur, next_gap(i));
    for (int i = 0; i < cfg_.graph.size(); ++i) push_event(t_now + dur, false, i, -1);
  }

  // Broadcast shares of node i's current state: to itself (zero delay) and
  // to each explicit out-neighbour in ascending order.  Returns the ids.
  std::vector<std::int64_t> emit_shares(int i, std::int64_t k_send, double t_send) {
    const Digraph& g = cfg_.graph;
    const int fo = g.fanout(i);
    std::vector<std::int64_t> ids;
    std::vector<int> dsts{i};
    dsts.insert(dsts.end(), g.out(i).begin(), g.out(i).end());
    for (int dst : dsts) {
      Message msg = make_share(states_[i], i, dst, fo);
      msg.id = static_cast<std::int64_t>(trace_.messages.size());
      double delay = 0.0;
      if (dst != i && cfg_.timing.tau_delay > 0) delay = delay_rng(i, dst).next_uniform(0.0, cfg_.timing.tau_delay);
      TraceMessage tm;
      tm.id = msg.id;
      tm.src = i;
      tm.dst = dst;
      tm.k_send = k_send;
      tm.t_send = t_send;
      tm.t_deliver = t_send + delay;
      tm.x_share = msg.x_share;
      tm.y_share = msg.y_share;
      tm.l = msg.l;
      trace_.messages.push_back(std::move(tm));
      push_event(t_send + delay, true, dst, msg.id);
      ids.push_back(msg.id);
    }
    return ids;
  }

  void deposit_message(const Event& ev, std::int64_t k) {
    const TraceMessage& tm = trace_.messages[ev.msg_id];
    Message msg;
    msg.id = tm.id;
    msg.src = tm.src;
    msg.dst = tm.dst;
    msg.x_share = tm.x_share;
    msg.y_share = tm.y_share;
    msg.l = tm.l;
    deposit(states_[msg.dst], msg);
    TraceRecord rec;
    rec.k = k;
    rec.t = ev.t;
    rec.is_activate = false;
    rec.node = msg.dst;
    rec.msgs = {msg.id};
    trace_.records.push_back(std::move(rec));
  }

  SplitMix64& delay_rng(int src, int dst) {
    auto key = std::make_pair(src, dst);
    auto it = delay_rngs_.find(key);
    if (it == delay_rngs_.end())
      it = delay_rngs_
               .emplace(key, SplitMix64(derive_stream(
                                 cfg_.seed, 0x64656c00ull,
                                 static_cast<std::uint64_t>(src) * cfg_.graph.size() + dst)))
               .first;
    return it->second;
  }

  SimConfig cfg_;
  Trace trace_;
  std::vector<NodeState> states_;
  std::vector<SplitMix64> gap_rngs_;
  std::map<std::pair<int, int>, SplitMix64> delay_rngs_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::int64_t seq_ = 0;
};

inline Trace run_simulation(SimConfig cfg) { return Simulator(std::move(cfg)).run(); }

// --- Trace JSONL -------------------------------------------------------------
//
// One JSON object per line.  First line is a `meta` record (config snapshot);
// event records follow in processing order with fields
// {k,t,type,node,l_before,l_after,alpha,y,z,x,msgs,nbuf}.  Node ids are
// 0-based.  Message contents are not duplicated in the file: a reader
// reconstructs shares from the sender's recorded state and the graph.

inline void write_trace_jsonl(std::ostream& os, const Trace& tr) {
  using nlohmann::json;
  json meta;
  meta["type"] = "meta";
  meta["algorithm"] = tr.meta.algorithm;
  meta["n"] = tr.meta.n;
  meta["m"] = tr.meta.m;
  meta["seed"] = tr.meta.seed;
  meta["max_events"] = tr.meta.max_events;
  json edges = json::array();
  for (auto [i, j] : tr.meta.edges) edges.push_back(json::array({i, j}));
  meta["edges"] = edges;
  meta["bounds"] = {{"tau_min", tr.meta.bounds.tau_min}, {"tau_max", tr.meta.bounds.tau_max},
                    {"tau_delay", tr.meta.bounds.tau_delay}, {"b1", tr.meta.bounds.b1},
                    {"b2", tr.meta.bounds.b2},  {"b", tr.meta.bounds.b}};
  meta["x0"] = tr.meta.x0;
  if (!tr.meta.config_snapshot.is_null()) meta["config"] = tr.meta.config_snapshot;
  os << meta.dump() << "\n";
  for (const auto& r : tr.records) {
    json j;
    j["type"] = r.is_activate ? "activate" : "deliver";
    j["k"] = r.k;
    j["t"] = r.t;
    j["node"] = r.node;
    j["msgs"] = r.msgs;
    if (r.is_activate) {
      j["l_before"] = r.l_before;
      j["l_after"] = r.l_after;
      j["alpha"] = r.alpha;
      j["y"] = r.y;
      j["z"] = r.z;
      j["x"] = r.x;
      j["nbuf"] = r.nbuf;
    }
    os << j.dump() << "\n";
  }
}

inline Trace read_trace_jsonl(std::istream& is) {
  using nlohmann::json;
  Trace tr;
  std::string line;
  if (!std::getline(is, line)) throw config_error("trace: empty file");
  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::exception& e) {
    throw config_error(std::string("trace: bad meta line: ") + e.what());
  }
  if (meta.value("type", "") != "meta") throw config_error("trace: first line must be a meta record");
  tr.meta.algorithm = meta.at("algorithm").get<std::string>();
  tr.meta.n = meta.at("n").get<int>();
  tr.meta.m = meta.at("m").get<int>();
  tr.meta.seed = meta.at("seed").get<std::uint64_t>();
  tr.meta.max_events = meta.at("max_events").get<std::int64_t>();
  for (const auto& e : meta.at("edges"))
    tr.meta.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  const auto& b = meta.at("bounds");
  tr.meta.bounds.tau_min = b.at("tau_min").get<double>();
  tr.meta.bounds.tau_max = b.at("tau_max").get<double>();
  tr.meta.bounds.tau_delay = b.at("tau_delay").get<double>();
  tr.meta.bounds.b1 = b.at("b1").get<int>();
  tr.meta.bounds.b2 = b.at("b2").get<int>();
  tr.meta.bounds.b = b.at("b").get<int>();
  for (const auto& v : meta.at("x0")) tr.meta.x0.push_back(v.get<Vec>());
  if (meta.contains("config")) tr.meta.config_snapshot = meta.at("config");

  Digraph g = tr.graph();
  const int n = g.size();

  // Recreate the initial broadcast registry exactly as the engine does:
  // node order, self first, then ascending out-neighbours.
  for (int i = 0; i < n; ++i) {
    int fo = g.fanout(i);
    std::vector<int> dsts{i};
    dsts.insert(dsts.end(), g.out(i).begin(), g.out(i).end());
    for (int dst : dsts) {
      TraceMessage tm;
      tm.id = static_cast<std::int64_t>(tr.messages.size());
      tm.src = i;
      tm.dst = dst;
      tm.k_send = 0;
      tm.t_send = 0;
      tm.x_share.resize(tr.meta.x0[i].size());
      for (std::size_t d = 0; d < tm.x_share.size(); ++d) tm.x_share[d] = tr.meta.x0[i][d] / fo;
      tm.y_share = 1.0 / fo;
      tm.l = 1;
      tr.messages.push_back(std::move(tm));
    }
  }

  std::vector<std::vector<std::int64_t>> buffers(n);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw config_error("trace: bad record on line " + std::to_string(lineno) + ": " + e.what());
    }
    TraceRecord r;
    std::string type = j.at("type").get<std::string>();
    r.is_activate = (type == "activate");
    if (!r.is_activate && type != "deliver")
      throw config_error("trace: unknown record type '" + type + "' on line " + std::to_string(lineno));
    r.k = j.at("k").get<std::int64_t>();
    r.t = j.at("t").get<double>();
    r.node = j.at("node").get<int>();
    if (r.node < 0 || r.node >= n) throw config_error("trace: node id out of range");
    r.msgs = j.at("msgs").get<std::vector<std::int64_t>>();
    if (r.is_activate) {
      r.l_before = j.at("l_before").get<std::int64_t>();
      r.l_after = j.at("l_after").get<std::int64_t>();
      r.alpha = j.at("alpha").get<double>();
      r.y = j.at("y").get<double>();
      r.z = j.at("z").get<Vec>();
      r.x = j.at("x").get<Vec>();
      r.nbuf = j.value("nbuf", static_cast<int>(buffers[r.node].size()));
      // Consume the buffer, register the sends.
      for (std::int64_t id : buffers[r.node]) tr.messages[id].k_consumed = r.k;
      buffers[r.node].clear();
      int fo = g.fanout(r.node);
      std::vector<int> dsts{r.node};
      dsts.insert(dsts.end(), g.out(r.node).begin(), g.out(r.node).end());
      if (r.msgs.size() != dsts.size() && !r.msgs.empty())
        throw config_error("trace: activate record sends " + std::to_string(r.msgs.size()) +
                           " messages, fanout is " + std::to_string(dsts.size()));
      for (std::size_t p = 0; p < r.msgs.size(); ++p) {
        std::int64_t id = r.msgs[p];
        if (id != static_cast<std::int64_t>(tr.messages.size()))
          throw config_error("trace: non-sequential message id on line " + std::to_string(lineno));
        TraceMessage tm;
        tm.id = id;
        tm.src = r.node;
        tm.dst = dsts[p];
        tm.k_send = r.k;
        tm.t_send = r.t;
        tm.x_share.resize(r.x.size());
        for (std::size_t d = 0; d < r.x.size(); ++d) tm.x_share[d] = r.x[d] / fo;
        tm.y_share = r.y / fo;
        tm.l = r.l_after;
        tr.messages.push_back(std::move(tm));
      }
    } else {
      if (r.msgs.size() != 1) throw config_error("trace: deliver record must carry one id");
      std::int64_t id = r.msgs[0];
      if (id < 0 || id >= static_cast<std::int64_t>(tr.messages.size()))
        throw config_error("trace: deliver references unknown message id");
      tr.messages[id].t_deliver = r.t;
      buffers[r.node].push_back(id);
    }
    tr.records.push_back(std::move(r));
  }
  return tr;
}

}  // namespace asyspa
