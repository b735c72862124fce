#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pips/algorithm.hpp"
#include "pips/baselines.hpp"
#include "pips/environments.hpp"

namespace pips {

enum class AlgorithmKind { kPips, kPsrl, kUcbvi };

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::kPips;
  std::string name;  ///< label in the CSVs; defaults to PIPS / PSRL / UCBVI
  PipsConfig pips;
  BaselineConfig baseline;
};

struct ExperimentConfig {
  EnvSpec env = MocaSpec{};
  std::vector<AlgorithmSpec> algorithms;
  int num_runs = 64;
  std::int64_t t_max = 10000;
  std::uint64_t master_seed = 0;
  RunMode mode = RunMode::kFixedBudget;
  int log_every = 50;
  std::string output_dir = "results";

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

/// Parses a JSON config. Unknown keys are rejected so typos do not silently
/// fall back to defaults. Algorithm reward variances default to the
/// environment's. Throws std::invalid_argument with a readable message.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string algorithm_label(const AlgorithmSpec& spec);

/// Wilson score interval. Throws std::invalid_argument unless 0 <= k <= n, n >= 1.
std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n, double z = 1.959964);

/// One run of algorithm `algorithm_index` with streams keyed
/// (master_seed, algorithm_index, run).
RunRecord run_single(const ExperimentConfig& cfg, const TabularMdp& env, int algorithm_index,
                     int run);

/// All runs, ordered by (algorithm, run). The serial executor is the reference;
/// the OpenMP executor must produce identical records.
std::vector<RunRecord> execute_serial(const ExperimentConfig& cfg, const TabularMdp& env);
std::vector<RunRecord> execute_parallel(const ExperimentConfig& cfg, const TabularMdp& env,
                                        int workers);

/// Worker count from PIPS_WORKERS (unset or invalid: 1).
int workers_from_env();

// ---- per-run CSV -------------------------------------------------------------

/// One line of runs.csv: algo,run,t,identified,perf_factor,resamples,stopped
struct RunCsvRow {
  std::string algo;
  int run = 0;
  EpisodeRow row;
  friend bool operator==(const RunCsvRow&, const RunCsvRow&) = default;
};

/// %.9g, the float format of every CSV written here.
std::string format_double(double x);

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records);
/// Throws std::runtime_error on a malformed header or row.
std::vector<RunCsvRow> read_runs_csv(std::istream& in);
std::vector<RunCsvRow> flatten(const std::vector<RunRecord>& records);

/// final.csv: algo,run,stop_episode,identified,perf_factor (stop_episode empty
/// when the run used its whole budget).
void write_final_csv(std::ostream& out, const std::vector<RunRecord>& records);

// ---- aggregation --------------------------------------------------------------

struct AggregateRow {
  std::string algo;
  std::int64_t t = 0;
  int runs = 0;
  double id_rate = 0, id_lo = 0, id_hi = 0;
  double perf_mean = 0, perf_stderr = 0;
  /// Share of runs with performance factor >= 1 - kPerfBinTol, with Wilson bounds.
  double perf_bin_rate = 0, perf_bin_lo = 0, perf_bin_hi = 0;
  /// Over runs with a recorded resample count; NaN when there is none.
  double mean_log_resamples = 0;
  double log_mean_resamples = 0;
};

inline constexpr double kPerfBinTol = 1e-9;

/// Single-threaded reduce over per-run rows. For each algorithm the episode
/// grid is the union of logged episodes; a run contributes its latest row at
/// or before t, so runs that stopped early carry their final row forward.
/// Algorithms keep their first-appearance order.
std::vector<AggregateRow> aggregate(const std::vector<RunCsvRow>& rows);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
/// Plot-ready identification-rate curves: algo,episode,mean,lo,hi
void write_plot_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

// ---- contraction diagnostics -------------------------------------------------

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  std::size_t points = 0;
};

/// Ordinary least squares y ~ a + b x. Throws std::invalid_argument with fewer
/// than 3 points or constant x.
LineFit fit_ols(const std::vector<double>& x, const std::vector<double>& y);

struct SeriesFits {
  LineFit log_linear;  ///< log k vs t
  LineFit log_log;     ///< log k vs log t
};

struct ContractionReport {
  std::string algo;
  std::int64_t t_lo = 0, t_hi = 0;
  SeriesFits mean_log;  ///< series: mean over runs of log(resamples)
  SeriesFits log_mean;  ///< series: log of mean resamples
};

/// Fits both growth models for one algorithm over episodes in [t_lo, t_hi].
/// Throws std::invalid_argument when fewer than 3 episodes have resample data.
ContractionReport contraction_diagnostics(const std::vector<RunCsvRow>& rows,
                                          const std::string& algo, std::int64_t t_lo,
                                          std::int64_t t_hi);
ContractionReport contraction_diagnostics(const std::vector<RunRecord>& records,
                                          const std::string& algo, std::int64_t t_lo,
                                          std::int64_t t_hi);

void write_diagnostics_csv(std::ostream& out, const std::vector<ContractionReport>& reports);

// ---- orchestration ---------------------------------------------------------

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<AggregateRow> aggregate;
};

/// Runs every algorithm and writes runs.csv, final.csv, aggregate.csv and
/// plot.csv into cfg.output_dir (created if missing). workers <= 1 uses the
/// serial executor. Throws std::runtime_error when the directory is unwritable.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 1);

/// Re-reads runs.csv in `dir` and rewrites aggregate.csv and plot.csv.
std::vector<AggregateRow> aggregate_directory(const std::filesystem::path& dir);

}  // namespace pips
