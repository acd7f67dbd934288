// asyspa_lab: experiment runner for the push-sum optimization simulator.
//
//   run       simulate one config; write trace JSONL + metrics CSV
//   compare   run several configs, report time-to-threshold and speedups
//   analyze   replay a trace through the augmented system and audit it
//   gen-data  emit a synthetic multiclass classification dataset (CSV)
//
// Exit codes: 0 ok, 2 configuration error, 3 runtime invariant violation.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asyspa/analysis.hpp"
#include "asyspa/experiment.hpp"
#include "asyspa/gensubgrad.hpp"
#include "asyspa/objective.hpp"
#include "asyspa/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw asyspa::config_error("cannot open '" + path.string() + "' for writing");
  os << contents;
}

struct RunArtifacts {
  asyspa::Trace trace;
  asyspa::MetricsTable metrics;
};

RunArtifacts execute(const asyspa::ResolvedExperiment& ex, double f_star_override,
                     bool has_override) {
  RunArtifacts art;
  asyspa::SimConfig cfg = ex.sim;
  art.trace = asyspa::run_simulation(std::move(cfg));
  art.trace.meta.config_snapshot = ex.snapshot;
  const double fstar = has_override ? f_star_override : ex.f_star;
  art.metrics = asyspa::metrics_from_trace(art.trace, ex.objective.objs, fstar,
                                           ex.metrics_stride);
  return art;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  asyspa::ResolvedExperiment ex = asyspa::load_experiment(config_path);
  RunArtifacts art = execute(ex, 0.0, false);
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "trace.jsonl", std::ios::binary);
    if (!os) throw asyspa::config_error("cannot write trace in '" + out_dir + "'");
    asyspa::write_trace_jsonl(os, art.trace);
  }
  {
    std::ofstream os(fs::path(out_dir) / "metrics.csv", std::ios::binary);
    if (!os) throw asyspa::config_error("cannot write metrics in '" + out_dir + "'");
    asyspa::write_metrics_csv(os, art.metrics);
  }
  const auto& last = art.metrics.rows.empty() ? asyspa::MetricsRow{} : art.metrics.rows.back();
  std::cout << "run: " << art.trace.meta.algorithm << " n=" << art.trace.meta.n
            << " events=" << art.trace.instants() << " final f_avg_err=" << last.f_avg_err
            << " spread=" << last.spread << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& config_paths, double threshold,
                const std::string& out_csv) {
  if (config_paths.size() < 2)
    throw asyspa::config_error("compare: need at least two configs");
  std::vector<asyspa::ResolvedExperiment> exps;
  for (const auto& p : config_paths) exps.push_back(asyspa::load_experiment(p));
  // One shared reference optimum keeps times-to-threshold comparable: the
  // first config's resolution wins.
  const double f_star = exps.front().f_star;

  std::size_t max_threads = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("ASYSPA_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) throw asyspa::config_error("ASYSPA_LAB_THREADS must be a positive integer");
    max_threads = static_cast<std::size_t>(v);
  }
  max_threads = std::max<std::size_t>(1, std::min(max_threads, exps.size()));

  std::vector<asyspa::MetricsTable> metrics(exps.size());
  std::vector<std::exception_ptr> errors(exps.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= exps.size()) return;
      try {
        metrics[i] = execute(exps[i], f_star, true).metrics;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < max_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> times;
  for (const auto& mt : metrics) times.push_back(mt.time_to_threshold(threshold));

  std::ostringstream csv;
  csv << "config,time_to_threshold,speedup_vs_first,reached\n";
  std::cout << "threshold on f_avg_err: " << threshold << "\n";
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const bool reached = std::isfinite(times[i]);
    const double speedup = (reached && times[i] > 0) ? times[0] / times[i]
                                                     : std::numeric_limits<double>::quiet_NaN();
    std::cout << "  " << config_paths[i] << ": T=";
    if (reached)
      std::cout << times[i];
    else
      std::cout << "inf (never reached)";
    if (i > 0 && reached && std::isfinite(times[0]))
      std::cout << "  speedup vs first: " << speedup;
    std::cout << "\n";
    csv << config_paths[i] << ',' << (reached ? asyspa::detail::format_double(times[i]) : "inf")
        << ',' << (reached && std::isfinite(speedup) ? asyspa::detail::format_double(speedup) : "")
        << ',' << (reached ? 1 : 0) << "\n";
  }
  if (!out_csv.empty()) write_file(out_csv, csv.str());
  return 0;
}

int cmd_analyze(const std::string& trace_path, const std::string& out_dir,
                const std::string& config_path) {
  std::ifstream in(trace_path);
  if (!in) throw asyspa::config_error("cannot open trace '" + trace_path + "'");
  asyspa::Trace tr = asyspa::read_trace_jsonl(in);
  asyspa::ResolvedExperiment ex = config_path.empty()
                                      ? asyspa::experiment_from_snapshot(tr.meta.config_snapshot)
                                      : asyspa::load_experiment(config_path);

  asyspa::ReplayReport rep = asyspa::replay_trace(tr, ex.objective.objs);
  asyspa::BookkeepingAudit audit = asyspa::bookkeeping_audit(tr);
  asyspa::MassAudit mass = asyspa::mass_audit(tr);
  asyspa::ConsensusSeries cs = asyspa::consensus_series(tr, ex.objective.objs);
  std::vector<double> rates = asyspa::update_rates(tr);
  asyspa::MetricsTable metrics =
      asyspa::metrics_from_trace(tr, ex.objective.objs, ex.f_star, ex.metrics_stride);

  const bool replay_ok = rep.max_residual_x <= 1e-9 && rep.max_residual_y <= 1e-9;
  const bool mass_ok = rep.max_mass_error <= 1e-9 && mass.max_cut_error <= 1e-9;
  const bool colsum_ok = rep.max_colsum_error <= 1e-12;
  const bool audit_ok = audit.pass(tr.meta.n, tr.meta.bounds.b);

  json summary;
  summary["replay"] = {{"k_end", rep.k_end},
                       {"k_verified", rep.k_verified},
                       {"max_residual_x", rep.max_residual_x},
                       {"max_residual_y", rep.max_residual_y},
                       {"max_z_error", rep.max_z_error},
                       {"argmax_k", rep.argmax_k},
                       {"pass", replay_ok}};
  summary["mass"] = {{"max_augmented_error", rep.max_mass_error},
                     {"max_cut_error", mass.max_cut_error},
                     {"max_node_y_error", mass.max_node_y_error},
                     {"max_colsum_error", rep.max_colsum_error},
                     {"pass", mass_ok && colsum_ok}};
  summary["bookkeeping"] = {{"activation_window_violations", audit.activation_window_violations},
                            {"consumption_violations", audit.consumption_violations},
                            {"max_consumption_lag", audit.max_consumption_lag},
                            {"max_l_gap", audit.max_l_gap},
                            {"l_gap_bound", static_cast<std::int64_t>(tr.meta.n) * tr.meta.bounds.b},
                            {"max_l_increment", audit.max_l_increment},
                            {"pass", audit_ok}};
  summary["consensus"] = {{"max_deviation", cs.max_deviation},
                          {"final_spread", cs.final_spread},
                          {"within_bound", cs.within_bound}};
  summary["update_rates"] = rates;
  summary["pass"] = replay_ok && mass_ok && colsum_ok && audit_ok;

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "analysis.json", summary.dump(2) + "\n");
  {
    std::ofstream os(fs::path(out_dir) / "consensus.csv", std::ios::binary);
    asyspa::write_consensus_csv(os, cs);
  }
  {
    std::ofstream os(fs::path(out_dir) / "metrics.csv", std::ios::binary);
    asyspa::write_metrics_csv(os, metrics);
  }
  std::cout << summary.dump(2) << "\n";
  if (!(replay_ok && mass_ok && colsum_ok && audit_ok)) return 3;
  return 0;
}

int cmd_gen_data(int rows, int features, int classes, std::uint64_t seed,
                 const std::string& out_path) {
  asyspa::Dataset ds = asyspa::generate_dataset(rows, features, classes, seed);
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw asyspa::config_error("cannot open '" + out_path + "' for writing");
  asyspa::write_dataset_csv(os, ds);
  std::cout << "gen-data: wrote " << rows << " rows (" << features << " features, " << classes
            << " classes) to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic simulator for asynchronous push-sum optimization"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", trace_path, compare_out, analyze_config;
  std::vector<std::string> compare_configs;
  double threshold = 1e-2;
  int rows = 1000, features = 10, classes = 3;
  std::uint64_t seed = 1;
  std::string data_out;

  auto* run = app.add_subcommand("run", "simulate one config");
  run->add_option("config", config_path, "JSON run config")->required();
  run->add_option("--out", out_dir, "output directory (trace.jsonl, metrics.csv)");

  auto* cmp = app.add_subcommand("compare", "time-to-threshold across configs");
  cmp->add_option("configs", compare_configs, "JSON run configs")->required()->expected(-2);
  cmp->add_option("--threshold", threshold, "f_avg_err threshold")->required();
  cmp->add_option("--out", compare_out, "summary CSV path");

  auto* ana = app.add_subcommand("analyze", "replay + audit a trace");
  ana->add_option("trace", trace_path, "trace JSONL")->required();
  ana->add_option("--out", out_dir, "output directory");
  ana->add_option("--config", analyze_config, "config override (when trace has no snapshot)");

  auto* gen = app.add_subcommand("gen-data", "synthetic classification dataset");
  gen->add_option("--rows", rows, "instances")->required();
  gen->add_option("--features", features, "feature count")->required();
  gen->add_option("--classes", classes, "class count")->required();
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--out", data_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (cmp->parsed()) return cmd_compare(compare_configs, threshold, compare_out);
    if (ana->parsed()) return cmd_analyze(trace_path, out_dir, analyze_config);
    if (gen->parsed()) return cmd_gen_data(rows, features, classes, seed, data_out);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const asyspa::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const asyspa::invariant_error& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
