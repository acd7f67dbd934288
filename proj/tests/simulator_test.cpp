#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "asyspa/simulator.hpp"

namespace {

using asyspa::Algorithm;
using asyspa::Objective;
using asyspa::ObjectiveKind;
using asyspa::SimConfig;
using asyspa::StepsizeSchedule;
using asyspa::Trace;
using asyspa::Vec;

SimConfig ring3_config(std::uint64_t seed = 42, std::int64_t events = 200) {
  SimConfig cfg;
  cfg.algo = Algorithm::asyspa;
  cfg.graph = asyspa::make_ring(3);
  for (double c : {-1.0, 0.0, 2.0})
    cfg.objectives.emplace_back(ObjectiveKind::abs_deviation, Vec{c});
  cfg.sched = StepsizeSchedule::power(1.0, 0.6);
  cfg.timing.mode = asyspa::TimingSpec::Mode::uniform;
  cfg.timing.gap_min = 1.0;
  cfg.timing.gap_max = 2.0;
  cfg.timing.tau_delay = 2.0;
  cfg.x0 = {{0.5}, {-0.25}, {1.0}};
  cfg.seed = seed;
  cfg.max_events = events;
  return cfg;
}

std::string serialize(const Trace& tr) {
  std::ostringstream os;
  asyspa::write_trace_jsonl(os, tr);
  return os.str();
}

TEST(Simulator, SameSeedGivesByteIdenticalTraces) {
  Trace a = asyspa::run_simulation(ring3_config());
  Trace b = asyspa::run_simulation(ring3_config());
  EXPECT_EQ(serialize(a), serialize(b));
}

TEST(Simulator, DifferentSeedGivesDifferentSchedule) {
  Trace a = asyspa::run_simulation(ring3_config(1));
  Trace b = asyspa::run_simulation(ring3_config(2));
  EXPECT_NE(serialize(a), serialize(b));
}

TEST(Simulator, InstantCountMatchesRequestedEvents) {
  Trace tr = asyspa::run_simulation(ring3_config(7, 57));
  EXPECT_EQ(tr.instants(), 57);
  // Instants are contiguous 1..K and nondecreasing in time.
  std::int64_t prev_k = 0;
  double prev_t = -1;
  for (const auto& r : tr.records) {
    if (!r.is_activate) continue;
    EXPECT_TRUE(r.k == prev_k || r.k == prev_k + 1);
    prev_k = std::max(prev_k, r.k);
    EXPECT_GE(r.t, prev_t);
    prev_t = r.t;
  }
}

TEST(Simulator, InitialBroadcastSeedsOneShapePerEdgePlusSelf) {
  Trace tr = asyspa::run_simulation(ring3_config());
  double mass = 0;
  int init_count = 0;
  for (const auto& m : tr.messages) {
    if (m.k_send != 0) continue;
    ++init_count;
    mass += m.y_share;
    EXPECT_EQ(m.l, 1);
    EXPECT_DOUBLE_EQ(m.t_send, 0.0);
  }
  // Each ring node has fan-out 2 (successor + itself).
  EXPECT_EQ(init_count, 6);
  EXPECT_NEAR(mass, 3.0, 1e-12);
}

TEST(Simulator, TraceRoundTripsThroughJsonl) {
  Trace tr = asyspa::run_simulation(ring3_config(123, 150));
  std::string first = serialize(tr);
  std::istringstream is(first);
  Trace back = asyspa::read_trace_jsonl(is);
  EXPECT_EQ(serialize(back), first);

  // The reconstructed message registry must agree with the engine's.
  ASSERT_EQ(back.messages.size(), tr.messages.size());
  for (std::size_t i = 0; i < tr.messages.size(); ++i) {
    const auto& a = tr.messages[i];
    const auto& b = back.messages[i];
    EXPECT_EQ(a.src, b.src);
    EXPECT_EQ(a.dst, b.dst);
    EXPECT_EQ(a.k_send, b.k_send);
    EXPECT_EQ(a.k_consumed, b.k_consumed);
    EXPECT_EQ(a.l, b.l);
    EXPECT_DOUBLE_EQ(a.y_share, b.y_share);
    ASSERT_EQ(a.x_share.size(), b.x_share.size());
    for (std::size_t d = 0; d < a.x_share.size(); ++d)
      EXPECT_DOUBLE_EQ(a.x_share[d], b.x_share[d]);
  }
}

TEST(Simulator, PeriodsModeProducesProportionalUpdateRates) {
  SimConfig cfg = ring3_config(5, 3000);
  cfg.graph = asyspa::Digraph(2, {{0, 1}, {1, 0}});
  cfg.objectives.clear();
  cfg.objectives.emplace_back(ObjectiveKind::quadratic, Vec{1.0});
  cfg.objectives.emplace_back(ObjectiveKind::quadratic, Vec{-1.0});
  cfg.timing.mode = asyspa::TimingSpec::Mode::periods;
  cfg.timing.periods = {1.0, 2.0};
  cfg.timing.tau_delay = 0.0;
  cfg.x0 = {{0.0}, {0.0}};
  Trace tr = asyspa::run_simulation(cfg);

  double counts[2] = {0, 0};
  for (const auto& r : tr.records)
    if (r.is_activate) counts[r.node] += 1;
  // Node 0 fires every 1.0, node 1 every 2.0: a 2:1 activation ratio.
  EXPECT_NEAR(counts[0] / counts[1], 2.0, 0.05);
}

TEST(Simulator, SingleNodeReducesToCentralizedSubgradient) {
  SimConfig cfg;
  cfg.algo = Algorithm::asyspa;
  cfg.graph = asyspa::make_single_node();
  cfg.objectives.emplace_back(ObjectiveKind::abs_deviation, Vec{3.0});
  cfg.sched = StepsizeSchedule::power(1.0, 1.0);
  cfg.timing.mode = asyspa::TimingSpec::Mode::periods;
  cfg.timing.periods = {1.0};
  cfg.x0 = {{0.0}};
  cfg.seed = 9;
  cfg.max_events = 50;
  Trace tr = asyspa::run_simulation(cfg);

  // Every activation consumes exactly the node's own previous share, so the
  // run must match plain subgradient descent x <- x - rho(k) g(x).
  double x = 0.0;
  std::int64_t k = 0;
  for (const auto& r : tr.records) {
    if (!r.is_activate) continue;
    ASSERT_FALSE(r.msgs.empty());
    ++k;
    EXPECT_DOUBLE_EQ(r.z[0], x);
    double g = (x > 3.0) ? 1.0 : (x < 3.0 ? -1.0 : 0.0);
    x = x - std::pow(double(k), -1.0) * g;
    EXPECT_DOUBLE_EQ(r.x[0], x);
    EXPECT_EQ(r.l_after, k + 1);
  }
  EXPECT_EQ(k, 50);
}

TEST(Simulator, SynchronizedAlgorithmActivatesAllNodesEachInstant) {
  SimConfig cfg = ring3_config(11, 40);
  cfg.algo = Algorithm::synspa;
  Trace tr = asyspa::run_simulation(cfg);
  std::vector<std::set<int>> who(41);
  for (const auto& r : tr.records)
    if (r.is_activate) {
      who[r.k].insert(r.node);
      EXPECT_EQ(r.l_after, r.k + 1);  // lock-step counters
      EXPECT_FALSE(r.msgs.empty());
    }
  for (std::int64_t k = 1; k <= 40; ++k) EXPECT_EQ(who[k].size(), 3u);
}

TEST(Simulator, SynchronizedWindowDegeneratesToSingleStep) {
  SimConfig cfg = ring3_config(11, 40);
  cfg.algo = Algorithm::synspa;
  Trace tr = asyspa::run_simulation(cfg);
  for (const auto& r : tr.records)
    if (r.is_activate)
      EXPECT_NEAR(r.alpha, std::pow(double(r.k), -0.6), 1e-15);
}

TEST(Simulator, StragglerSlowsDownExactlyOneNode) {
  SimConfig cfg = ring3_config(13, 4000);
  cfg.timing.gap_min = 1.0;
  cfg.timing.gap_max = 1.5;
  cfg.timing.tau_delay = 0.0;
  cfg.timing.straggler.node = 2;
  cfg.timing.straggler.factor = 10.0;
  Trace tr = asyspa::run_simulation(cfg);
  auto rates = [&] {
    std::vector<double> c(3, 0.0);
    for (const auto& r : tr.records)
      if (r.is_activate) c[r.node] += 1;
    return c;
  }();
  EXPECT_NEAR(rates[0] / rates[2], 10.0, 1.0);
  EXPECT_NEAR(rates[1] / rates[2], 10.0, 1.0);
}

TEST(Simulator, ValidatesConfig) {
  {
    SimConfig cfg = ring3_config();
    cfg.graph = asyspa::Digraph(3, {{0, 1}, {1, 2}});  // not strongly connected
    EXPECT_THROW(asyspa::run_simulation(cfg), asyspa::config_error);
  }
  {
    SimConfig cfg = ring3_config();
    cfg.x0.pop_back();
    EXPECT_THROW(asyspa::run_simulation(cfg), asyspa::config_error);
  }
  {
    SimConfig cfg = ring3_config();
    cfg.objectives.pop_back();
    EXPECT_THROW(asyspa::run_simulation(cfg), asyspa::config_error);
  }
  {
    SimConfig cfg = ring3_config();
    cfg.timing.straggler.node = 5;
    EXPECT_THROW(asyspa::run_simulation(cfg), asyspa::config_error);
  }
  {
    SimConfig cfg = ring3_config();
    cfg.timing.straggler.node = 0;
    cfg.timing.straggler.factor = 0.5;
    EXPECT_THROW(asyspa::run_simulation(cfg), asyspa::config_error);
  }
  {
    SimConfig cfg = ring3_config();
    cfg.timing.gap_min = 0.0;
    EXPECT_THROW(asyspa::run_simulation(cfg), asyspa::config_error);
  }
  {
    SimConfig cfg = ring3_config();
    cfg.timing.gap_max = 0.5;  // below gap_min
    EXPECT_THROW(asyspa::run_simulation(cfg), asyspa::config_error);
  }
}

TEST(Simulator, EveryConsumedMessageWasDeliveredBeforehand) {
  Trace tr = asyspa::run_simulation(ring3_config(21, 300));
  for (const auto& m : tr.messages) {
    if (m.k_consumed < 0) continue;
    EXPECT_GT(m.k_consumed, m.k_send);
    EXPECT_LE(m.t_deliver, [&] {
      // the consuming instant's activation time
      for (const auto& r : tr.records)
        if (r.is_activate && r.k == m.k_consumed && r.node == m.dst) return r.t;
      return -1.0;
    }());
  }
}

TEST(Simulator, RecordedYMatchesConsumedShares) {
  Trace tr = asyspa::run_simulation(ring3_config(31, 200));
  for (const auto& r : tr.records) {
    if (!r.is_activate || r.msgs.empty()) continue;
    // Sum the y shares of everything consumed at this instant by this node.
    double y = 0;
    for (const auto& m : tr.messages)
      if (m.k_consumed == r.k && m.dst == r.node) y += m.y_share;
    EXPECT_NEAR(y, r.y, 1e-12);
  }
}

TEST(TraceReader, RejectsMalformedInput) {
  {
    std::istringstream is("");
    EXPECT_THROW(asyspa::read_trace_jsonl(is), asyspa::config_error);
  }
  {
    std::istringstream is("{\"type\":\"activate\"}\n");
    EXPECT_THROW(asyspa::read_trace_jsonl(is), asyspa::config_error);
  }
  {
    std::istringstream is("not json\n");
    EXPECT_THROW(asyspa::read_trace_jsonl(is), asyspa::config_error);
  }
}

TEST(GapBounds, ReflectStragglerAndJitter) {
  asyspa::TimingSpec t;
  t.mode = asyspa::TimingSpec::Mode::uniform;
  t.gap_min = 1.0;
  t.gap_max = 2.0;
  t.straggler.node = 1;
  t.straggler.factor = 5.0;
  auto [lo, hi] = asyspa::gap_bounds(t, 3);
  EXPECT_DOUBLE_EQ(lo, 1.0);
  EXPECT_DOUBLE_EQ(hi, 10.0);
}

}  // namespace
