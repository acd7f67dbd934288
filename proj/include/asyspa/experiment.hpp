#pragma once

// Experiment plumbing: strict JSON run configs, objective construction,
// reference-optimum resolution, per-run metrics, and the compare helper.
//
// Config schema (unknown fields are rejected with their path):
//
// {
//   "algorithm":  "asyspa" | "naive" | "synspa",
//   "seed":       1,
//   "max_events": 10000,
//   "graph":     {"kind": "single" | "ring" | "ring_plus_k" | "exponential" | "file",
//                 "n": 3, "k": 2, "path": "edges.txt"},
//   "objective": {"kind": "abs_deviation" | "quadratic",  "centers": [[...], ...]}
//              | {"kind": "logistic_multiclass" | "hinge_svm", "dataset": "d.csv",
//                 "n_classes": 3, "gamma": 1.0, "normalize": true},
//   "stepsize":  {"kind": "power", "scale": 1.0, "alpha": 0.6}
//              | {"kind": "constant", "scale": 1e-3},
//   "timing":    {"mode": "periods", "periods": [...] } or {"base": .., "beta": ..},
//                 or {"mode": "uniform", "gap_min": .., "gap_max": ..};
//                 plus optional "tau_delay", "straggler": {"node", "factor"},
//                 "extra_exp_mean", "extra_exp_clip",
//   "x0":        "zeros" | [[...], ...]            (optional, default zeros)
//   "f_star":    number | "closed_form" | "centralized"   (optional; default
//                closed_form for center objectives, centralized for datasets)
//   "f_star_budget_factor": 10,                    (optional)
//   "metrics_stride": 0                            (optional; 0 = auto)
// }

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asyspa/analysis.hpp"
#include "asyspa/errors.hpp"
#include "asyspa/graph.hpp"
#include "asyspa/objective.hpp"
#include "asyspa/simulator.hpp"
#include "asyspa/stepsize.hpp"

namespace asyspa {

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::string& path,
                           const std::set<std::string>& allowed) {
  if (!j.is_object()) throw config_error("config: " + path + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw config_error("config: unknown field '" + (path.empty() ? item.key() : path + "." + item.key()) + "'");
  }
}

inline const json& need(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw config_error("config: missing field '" + (path.empty() ? key : path + "." + key) + "'");
  return *it;
}

// Shortest round-trip decimal form; '.' separator regardless of locale.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

struct ObjectiveBundle {
  std::vector<Objective> objs;
  int dim = 0;
  ObjectiveKind kind = ObjectiveKind::abs_deviation;
  std::vector<Vec> centers;                 // center kinds
  std::shared_ptr<const Dataset> dataset;   // dataset kinds
  double gamma = 0;
  nlohmann::json snapshot;
};

inline ObjectiveBundle parse_objective(const nlohmann::json& j, int n_nodes) {
  using nlohmann::json;
  ObjectiveBundle out;
  std::string kind_s = detail::need(j, "objective", "kind").get<std::string>();
  out.kind = objective_kind_from_string(kind_s);
  if (out.kind == ObjectiveKind::abs_deviation || out.kind == ObjectiveKind::quadratic) {
    detail::reject_unknown(j, "objective", {"kind", "centers"});
    const json& cs = detail::need(j, "objective", "centers");
    if (!cs.is_array() || static_cast<int>(cs.size()) != n_nodes)
      throw config_error("config: objective.centers must list one center per node");
    for (const auto& c : cs) out.centers.push_back(c.get<Vec>());
    out.dim = static_cast<int>(out.centers[0].size());
    for (const auto& c : out.centers)
      if (static_cast<int>(c.size()) != out.dim)
        throw config_error("config: objective.centers entries differ in dimension");
    for (int i = 0; i < n_nodes; ++i) out.objs.emplace_back(out.kind, out.centers[i]);
    out.snapshot = {{"kind", kind_s}, {"centers", cs}};
  } else {
    detail::reject_unknown(j, "objective", {"kind", "dataset", "n_classes", "gamma", "normalize"});
    std::string path = detail::need(j, "objective", "dataset").get<std::string>();
    int n_classes = detail::need(j, "objective", "n_classes").get<int>();
    double gamma = j.value("gamma", 0.0);
    bool normalize = j.value("normalize", true);
    std::ifstream in(path);
    if (!in) throw config_error("config: objective.dataset: cannot open '" + path + "'");
    Dataset ds = read_dataset_csv(in, n_classes);
    if (normalize && !ds.normalized) normalize_features(ds);
    out.dataset = std::make_shared<const Dataset>(std::move(ds));
    out.gamma = gamma;
    out.dim = out.dataset->n_features * out.dataset->n_classes;
    for (int i = 0; i < n_nodes; ++i) {
      out.objs.emplace_back(out.kind, out.dataset,
                            shard_rows(static_cast<int>(out.dataset->labels.size()), n_nodes, i),
                            gamma);
    }
    out.snapshot = {{"kind", kind_s}, {"dataset", path},      {"n_classes", n_classes},
                    {"gamma", gamma}, {"normalize", normalize}};
  }
  return out;
}

inline StepsizeSchedule parse_stepsize(const nlohmann::json& j) {
  std::string kind = detail::need(j, "stepsize", "kind").get<std::string>();
  if (kind == "power") {
    detail::reject_unknown(j, "stepsize", {"kind", "scale", "alpha"});
    return StepsizeSchedule::power(j.value("scale", 1.0),
                                   detail::need(j, "stepsize", "alpha").get<double>());
  }
  if (kind == "constant") {
    detail::reject_unknown(j, "stepsize", {"kind", "scale"});
    return StepsizeSchedule::constant(detail::need(j, "stepsize", "scale").get<double>());
  }
  throw config_error("config: stepsize.kind: unknown '" + kind + "'");
}

inline Digraph parse_graph(const nlohmann::json& j) {
  std::string kind = detail::need(j, "graph", "kind").get<std::string>();
  if (kind == "file") {
    detail::reject_unknown(j, "graph", {"kind", "path"});
    std::string path = detail::need(j, "graph", "path").get<std::string>();
    std::ifstream in(path);
    if (!in) throw config_error("config: graph.path: cannot open '" + path + "'");
    return read_edge_list(in);
  }
  detail::reject_unknown(j, "graph", {"kind", "n", "k"});
  int n = (kind == "single") ? 1 : detail::need(j, "graph", "n").get<int>();
  return build_topology(kind, n, j.value("k", 1));
}

inline TimingSpec parse_timing(const nlohmann::json& j, int n_nodes) {
  TimingSpec t;
  std::string mode = detail::need(j, "timing", "mode").get<std::string>();
  const std::set<std::string> common = {"mode",     "tau_delay",      "straggler",
                                        "periods",  "base",           "beta",
                                        "gap_min",  "gap_max",        "extra_exp_mean",
                                        "extra_exp_clip"};
  detail::reject_unknown(j, "timing", common);
  if (mode == "periods") {
    t.mode = TimingSpec::Mode::periods;
    if (j.contains("periods")) {
      t.periods = j.at("periods").get<std::vector<double>>();
    } else {
      double base = detail::need(j, "timing", "base").get<double>();
      double beta = j.value("beta", 0.0);
      if (!(base > 0)) throw config_error("config: timing.base must be > 0");
      for (int i = 0; i < n_nodes; ++i)
        t.periods.push_back(base * std::pow(static_cast<double>(i + 1), beta));
    }
  } else if (mode == "uniform") {
    t.mode = TimingSpec::Mode::uniform;
    t.gap_min = detail::need(j, "timing", "gap_min").get<double>();
    t.gap_max = detail::need(j, "timing", "gap_max").get<double>();
  } else {
    throw config_error("config: timing.mode: unknown '" + mode + "'");
  }
  t.tau_delay = j.value("tau_delay", 0.0);
  if (j.contains("straggler")) {
    detail::reject_unknown(j.at("straggler"), "timing.straggler", {"node", "factor"});
    t.straggler.node = detail::need(j.at("straggler"), "timing.straggler", "node").get<int>();
    t.straggler.factor = detail::need(j.at("straggler"), "timing.straggler", "factor").get<double>();
  }
  t.extra_exp_mean = j.value("extra_exp_mean", 0.0);
  t.extra_exp_clip = j.value("extra_exp_clip", 0.0);
  return t;
}

struct ResolvedExperiment {
  SimConfig sim;
  ObjectiveBundle objective;
  double f_star = 0;
  std::int64_t metrics_stride = 1;
  nlohmann::json snapshot;  // resolved config, embedded in the trace meta
};

// Reference optimum of the summed objective.
inline double closed_form_f_star(const ObjectiveBundle& ob) {
  if (ob.kind == ObjectiveKind::abs_deviation) {
    double total = 0;
    const int dim = ob.dim;
    for (int d = 0; d < dim; ++d) {
      std::vector<double> col;
      for (const auto& c : ob.centers) col.push_back(c[d]);
      std::sort(col.begin(), col.end());
      const std::size_t n = col.size();
      double med = (n % 2 == 1) ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
      for (double v : col) total += std::abs(med - v);
    }
    return total;
  }
  if (ob.kind == ObjectiveKind::quadratic) {
    double total = 0;
    for (int d = 0; d < ob.dim; ++d) {
      double mean = 0;
      for (const auto& c : ob.centers) mean += c[d];
      mean /= ob.centers.size();
      for (const auto& c : ob.centers) total += 0.5 * (mean - c[d]) * (mean - c[d]);
    }
    return total;
  }
  throw config_error("config: f_star 'closed_form' needs an abs_deviation or quadratic objective");
}

inline double total_value(const std::vector<Objective>& objs, const Vec& x) {
  double f = 0;
  for (const auto& o : objs) f += o.value(x);
  return f;
}

// Running-best value of a centralized subgradient run on the summed
// objective — the stand-in for the true optimum on dataset objectives.
inline double centralized_f_star(const ObjectiveBundle& ob, const StepsizeSchedule& sched,
                                 std::int64_t steps) {
  Vec x(ob.dim, 0.0);
  double best = total_value(ob.objs, x);
  Vec g(ob.dim);
  for (std::int64_t k = 1; k <= steps; ++k) {
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& o : ob.objs) {
      Vec gi = o.subgradient(x);
      for (int d = 0; d < ob.dim; ++d) g[d] += gi[d];
    }
    const double rho = sched.rho(k);
    for (int d = 0; d < ob.dim; ++d) x[d] -= rho * g[d];
    best = std::min(best, total_value(ob.objs, x));
  }
  return best;
}

inline ResolvedExperiment parse_experiment(const nlohmann::json& j) {
  using nlohmann::json;
  detail::reject_unknown(j, "", {"algorithm", "seed", "max_events", "graph", "objective",
                                 "stepsize", "timing", "x0", "f_star", "f_star_budget_factor",
                                 "metrics_stride", "dim"});
  ResolvedExperiment ex;
  ex.sim.algo = algorithm_from_string(detail::need(j, "", "algorithm").get<std::string>());
  ex.sim.seed = detail::need(j, "", "seed").get<std::uint64_t>();
  ex.sim.max_events = detail::need(j, "", "max_events").get<std::int64_t>();
  ex.sim.graph = parse_graph(detail::need(j, "", "graph"));
  const int n = ex.sim.graph.size();
  ex.objective = parse_objective(detail::need(j, "", "objective"), n);
  ex.sim.objectives = ex.objective.objs;
  ex.sim.sched = parse_stepsize(detail::need(j, "", "stepsize"));
  ex.sim.timing = parse_timing(detail::need(j, "", "timing"), n);
  if (j.contains("dim") && j.at("dim").get<int>() != ex.objective.dim)
    throw config_error("config: dim does not match the objective dimension");

  if (j.contains("x0") && !(j.at("x0").is_string() && j.at("x0").get<std::string>() == "zeros")) {
    const json& x0 = j.at("x0");
    if (!x0.is_array() || static_cast<int>(x0.size()) != n)
      throw config_error("config: x0 must be \"zeros\" or one vector per node");
    for (const auto& v : x0) ex.sim.x0.push_back(v.get<Vec>());
    for (const auto& v : ex.sim.x0)
      if (static_cast<int>(v.size()) != ex.objective.dim)
        throw config_error("config: x0 dimension does not match the objective");
  } else {
    ex.sim.x0.assign(n, Vec(ex.objective.dim, 0.0));
  }

  const std::int64_t budget_factor = j.value("f_star_budget_factor", std::int64_t{10});
  json fstar_mode = j.contains("f_star") ? j.at("f_star") : json{};
  if (fstar_mode.is_number()) {
    ex.f_star = fstar_mode.get<double>();
  } else {
    std::string mode;
    if (fstar_mode.is_string()) {
      mode = fstar_mode.get<std::string>();
    } else if (fstar_mode.is_null()) {
      mode = (ex.objective.dataset != nullptr) ? "centralized" : "closed_form";
    } else {
      throw config_error("config: f_star must be a number, \"closed_form\" or \"centralized\"");
    }
    if (mode == "closed_form") {
      ex.f_star = closed_form_f_star(ex.objective);
    } else if (mode == "centralized") {
      ex.f_star = centralized_f_star(ex.objective, ex.sim.sched,
                                     budget_factor * ex.sim.max_events);
    } else {
      throw config_error("config: f_star: unknown mode '" + mode + "'");
    }
  }

  ex.metrics_stride = j.value("metrics_stride", std::int64_t{0});
  if (ex.metrics_stride < 0) throw config_error("config: metrics_stride must be >= 0");
  if (ex.metrics_stride == 0) ex.metrics_stride = std::max<std::int64_t>(1, ex.sim.max_events / 2000);

  ex.snapshot = j;
  ex.snapshot["f_star"] = ex.f_star;  // store the resolved value for `analyze`
  ex.snapshot["metrics_stride"] = ex.metrics_stride;
  return ex;
}

inline ResolvedExperiment load_experiment(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw config_error("config: cannot open '" + config_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config: '" + config_path + "' is not valid JSON: " + e.what());
  }
  return parse_experiment(j);
}

// Rebuilds objectives and schedule from the snapshot a trace carries.
inline ResolvedExperiment experiment_from_snapshot(const nlohmann::json& snapshot) {
  if (snapshot.is_null())
    throw config_error("trace carries no config snapshot; pass the config explicitly");
  return parse_experiment(snapshot);
}

// --- Metrics -----------------------------------------------------------------

struct MetricsRow {
  std::int64_t k = 0;
  double t = 0;
  double f_avg_err = 0;     // mean over nodes of F(z_i) minus the reference optimum
  double spread = 0;        // max over dims of the range of z across nodes
  double l_gap = 0;         // max_i l_i - min_i l_i
  double stepsize_gap = 0;  // max_i - min_i of cumulative consumed stepsize
};

struct MetricsTable {
  std::vector<MetricsRow> rows;

  // First simulated time at which f_avg_err <= threshold; +inf if never.
  double time_to_threshold(double threshold) const {
    for (const auto& r : rows)
      if (r.f_avg_err <= threshold) return r.t;
    return std::numeric_limits<double>::infinity();
  }
};

inline MetricsTable metrics_from_trace(const Trace& tr, const std::vector<Objective>& objs,
                                       double f_star, std::int64_t stride) {
  const int n = tr.meta.n;
  const int m = tr.meta.m;
  if (stride < 1) stride = 1;
  std::vector<Vec> last_z(n);
  for (int i = 0; i < n; ++i) last_z[i] = tr.meta.x0[i];
  std::vector<std::int64_t> cur_l(n, 1);
  std::vector<double> cum_alpha(n, 0.0);

  std::int64_t k_end = 0;
  for (const auto& r : tr.records) k_end = std::max(k_end, r.k);

  MetricsTable table;
  auto sample = [&](std::int64_t k, double t) {
    MetricsRow row;
    row.k = k;
    row.t = t;
    double favg = 0;
    for (int i = 0; i < n; ++i) favg += total_value(objs, last_z[i]);
    row.f_avg_err = favg / n - f_star;
    for (int d = 0; d < m; ++d) {
      double lo = last_z[0][d], hi = last_z[0][d];
      for (int i = 1; i < n; ++i) {
        lo = std::min(lo, last_z[i][d]);
        hi = std::max(hi, last_z[i][d]);
      }
      row.spread = std::max(row.spread, hi - lo);
    }
    auto [lmin, lmax] = std::minmax_element(cur_l.begin(), cur_l.end());
    row.l_gap = static_cast<double>(*lmax - *lmin);
    auto [amin, amax] = std::minmax_element(cum_alpha.begin(), cum_alpha.end());
    row.stepsize_gap = *amax - *amin;
    table.rows.push_back(row);
  };

  std::int64_t cur_k = 0;
  double instant_t = 0;  // activation time of the current instant
  for (const auto& r : tr.records) {
    if (r.k != cur_k) {
      if (cur_k >= 1 && (cur_k % stride == 0)) sample(cur_k, instant_t);
      cur_k = r.k;
    }
    if (r.is_activate) {
      instant_t = r.t;
      if (!r.msgs.empty()) {
        last_z[r.node] = r.z;
        cur_l[r.node] = r.l_after;
        cum_alpha[r.node] += r.alpha;
      }
    }
  }
  if (cur_k >= 1 && (cur_k % stride == 0 || cur_k == k_end)) sample(cur_k, instant_t);
  return table;
}

inline void write_metrics_csv(std::ostream& os, const MetricsTable& table) {
  os << "k,t,f_avg_err,spread,l_gap,stepsize_gap\n";
  for (const auto& r : table.rows) {
    os << r.k << ',' << detail::format_double(r.t) << ',' << detail::format_double(r.f_avg_err)
       << ',' << detail::format_double(r.spread) << ',' << detail::format_double(r.l_gap) << ','
       << detail::format_double(r.stepsize_gap) << "\n";
  }
}

inline void write_consensus_csv(std::ostream& os, const ConsensusSeries& cs) {
  os << "k,deviation,spread,bound_rhs\n";
  for (std::size_t i = 0; i < cs.ks.size(); ++i) {
    os << cs.ks[i] << ',' << detail::format_double(cs.deviation[i]) << ','
       << detail::format_double(cs.spread[i]) << ',' << detail::format_double(cs.bound_rhs[i])
       << "\n";
  }
}

}  // namespace asyspa
