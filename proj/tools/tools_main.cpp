// pips_bench: run experiments, re-aggregate saved runs, fit resample growth.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pips/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override, int workers) {
  pips::ExperimentConfig cfg = pips::load_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const pips::ExperimentResult result = pips::run_experiment(cfg, workers);

  // Final checkpoint per algorithm.
  std::vector<const pips::AggregateRow*> last;
  for (const pips::AggregateRow& r : result.aggregate) {
    if (!last.empty() && last.back()->algo == r.algo) last.back() = &r;
    else last.push_back(&r);
  }
  for (const pips::AggregateRow* r : last)
    std::printf("%-8s t=%lld identified %.3f [%.3f, %.3f]  perf %.4f +- %.4f\n", r->algo.c_str(),
                static_cast<long long>(r->t), r->id_rate, r->id_lo, r->id_hi, r->perf_mean,
                r->perf_stderr);
  std::printf("wrote %s/{runs,final,aggregate,plot}.csv\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_aggregate(const std::string& dir) {
  const auto rows = pips::aggregate_directory(dir);
  std::printf("wrote %zu aggregate rows to %s/aggregate.csv\n", rows.size(), dir.c_str());
  return 0;
}

int cmd_diagnose(const std::string& dir, std::vector<std::string> algos, long long t_lo,
                 long long t_hi) {
  std::ifstream in(std::string(dir) + "/runs.csv", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + dir + "/runs.csv");
  const auto rows = pips::read_runs_csv(in);
  if (algos.empty()) {
    std::set<std::string> seen;
    for (const auto& r : rows)
      if (r.row.resamples > 0 && seen.insert(r.algo).second) algos.push_back(r.algo);
  }
  std::vector<pips::ContractionReport> reports;
  for (const std::string& algo : algos) {
    reports.push_back(pips::contraction_diagnostics(rows, algo, t_lo, t_hi));
    const auto& rep = reports.back();
    std::printf("%s, t in [%lld, %lld], mean log resamples:\n", algo.c_str(), t_lo, t_hi);
    std::printf("  log-linear slope %.4g R2 %.4f | log-log slope %.4g R2 %.4f\n",
                rep.mean_log.log_linear.slope, rep.mean_log.log_linear.r2,
                rep.mean_log.log_log.slope, rep.mean_log.log_log.r2);
  }
  std::ofstream out(dir + "/diagnostics.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + dir + "/diagnostics.csv");
  pips::write_diagnostics_csv(out, reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-policy identification experiments on tabular episodic MDPs"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = pips::workers_from_env();
  auto* run = app.add_subcommand("run", "run every algorithm of a JSON config");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", out_dir, "override output_dir");
  run->add_option("-w,--workers", workers, "worker threads (default: PIPS_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  std::string agg_dir;
  auto* agg = app.add_subcommand("aggregate", "recompute aggregate.csv and plot.csv from runs.csv");
  agg->add_option("dir", agg_dir, "experiment directory")->required()->check(CLI::ExistingDirectory);

  std::string diag_dir;
  std::vector<std::string> algos;
  long long t_lo = 2000, t_hi = 10000;
  auto* diag = app.add_subcommand("diagnose", "fit log-linear and log-log growth of resample counts");
  diag->add_option("dir", diag_dir, "experiment directory")->required()->check(CLI::ExistingDirectory);
  diag->add_option("-a,--algo", algos, "algorithms to fit (default: all with resample data)");
  diag->add_option("--from", t_lo, "first episode of the window");
  diag->add_option("--to", t_hi, "last episode of the window");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, out_dir, workers);
    if (*agg) return cmd_aggregate(agg_dir);
    if (*diag) return cmd_diagnose(diag_dir, algos, t_lo, t_hi);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
