#include "pips/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

namespace pips {

using nlohmann::json;

namespace {

// Reads typed fields out of one JSON object and remembers which keys were
// consumed, so leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string where) : node_(node), where_(std::move(where)) {
    if (!node_.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& dst) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      dst = it->template get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(where_ + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  void mark(const char* key) { seen_.insert(key); }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key()))
        throw std::invalid_argument(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& node_;
  std::string where_;
  std::set<std::string> seen_;
};

EnvSpec parse_env(const json& node, double& variance) {
  Section sec(node, "env");
  std::string type;
  sec.get("type", type);
  EnvSpec spec;
  if (type == "moca") {
    MocaSpec m;
    sec.get("length", m.length);
    sec.get("advance_prob", m.advance_prob);
    sec.get("reward_variance", m.reward_variance);
    sec.get("horizon", m.horizon);
    sec.get("optimal_reward", m.optimal_reward);
    sec.get("other_reward", m.other_reward);
    variance = m.reward_variance;
    spec = m;
  } else if (type == "riverswim") {
    RiverSwimSpec r;
    sec.get("length", r.length);
    sec.get("horizon", r.horizon);
    std::string preset;
    sec.get("variance_preset", preset);
    if (preset == "appendix") r.reward_variance = kRiverSwimVarianceAppendix;
    else if (preset == "main") r.reward_variance = kRiverSwimVarianceMainText;
    else if (!preset.empty())
      throw std::invalid_argument("env.variance_preset must be 'appendix' or 'main'");
    sec.get("reward_variance", r.reward_variance);
    sec.get("left_reward", r.left_reward);
    sec.get("right_reward", r.right_reward);
    sec.get("advance", r.advance);
    sec.get("stay", r.stay);
    sec.get("back", r.back);
    variance = r.reward_variance;
    spec = r;
  } else if (type == "comblock") {
    CombinationLockSpec c;
    sec.get("horizon", c.horizon);
    sec.get("actions", c.actions);
    sec.get("slip", c.slip);
    sec.get("reward_variance", c.reward_variance);
    variance = c.reward_variance;
    spec = c;
  } else if (type == "random") {
    RandomMdpSpec r;
    sec.get("states", r.states);
    sec.get("actions", r.actions);
    sec.get("horizon", r.horizon);
    sec.get("seed", r.seed);
    sec.get("reward_variance", r.reward_variance);
    variance = r.reward_variance;
    spec = r;
  } else {
    throw std::invalid_argument("env.type must be one of moca, riverswim, comblock, random");
  }
  sec.finish();
  return spec;
}

AlgorithmSpec parse_algorithm(const json& node, std::size_t index, double env_variance) {
  const std::string where = "algorithms[" + std::to_string(index) + "]";
  Section sec(node, where);
  std::string type;
  sec.get("type", type);
  AlgorithmSpec spec;
  sec.get("name", spec.name);
  if (type == "pips") {
    spec.kind = AlgorithmKind::kPips;
    PipsConfig& c = spec.pips;
    c.reward_variance = env_variance;
    sec.get("gamma", c.gamma);
    sec.get("alpha", c.alpha);
    std::string inflation = "constant", threshold = "practical";
    sec.get("inflation", inflation);
    if (inflation == "constant") c.inflation = InflationSchedule::kConstant;
    else if (inflation == "power") c.inflation = InflationSchedule::kPower;
    else throw std::invalid_argument(where + ".inflation must be 'constant' or 'power'");
    sec.get("inflation_power", c.inflation_power);
    sec.get("delta", c.delta);
    sec.get("threshold", threshold);
    if (threshold == "practical") c.threshold = ThresholdSchedule::kPractical;
    else if (threshold == "calibrated") c.threshold = ThresholdSchedule::kCalibrated;
    else throw std::invalid_argument(where + ".threshold must be 'practical' or 'calibrated'");
    if (sec.has("calibration_log_coeff")) {
      double coeff = 0;
      sec.get("calibration_log_coeff", coeff);
      c.calibration_log_coeff = coeff;
    }
    sec.get("epsilon", c.epsilon);
    sec.get("reward_variance", c.reward_variance);
    sec.get("tol", c.tol);
    sec.get("hard_cap_factor", c.hard_cap_factor);
    sec.get("max_resamples", c.max_resamples);
    sec.get("dirichlet_prior", c.dirichlet_prior);
    sec.get("identify_tol", c.identify_tol);
  } else if (type == "psrl" || type == "ucbvi") {
    spec.kind = type == "psrl" ? AlgorithmKind::kPsrl : AlgorithmKind::kUcbvi;
    BaselineConfig& c = spec.baseline;
    c.reward_variance = env_variance;
    sec.get("reward_variance", c.reward_variance);
    sec.get("dirichlet_prior", c.dirichlet_prior);
    sec.get("identify_tol", c.identify_tol);
    if (spec.kind == AlgorithmKind::kPsrl) {
      sec.get("posterior_diagnostics", c.posterior_diagnostics);
      sec.get("delta", c.delta);
      sec.get("hard_cap_factor", c.hard_cap_factor);
      sec.get("max_resamples", c.max_resamples);
    } else {
      c.posterior_diagnostics = false;
    }
  } else {
    throw std::invalid_argument(where + ".type must be one of pips, psrl, ucbvi");
  }
  sec.finish();
  return spec;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (num_runs < 1) throw std::invalid_argument("num_runs must be >= 1");
  if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
  std::set<std::string> labels;
  for (const AlgorithmSpec& a : algorithms) {
    const std::string label = algorithm_label(a);
    if (label.empty() || label.find_first_of(",\n\r\"") != std::string::npos)
      throw std::invalid_argument("algorithm name must be non-empty without commas or quotes");
    if (!labels.insert(label).second)
      throw std::invalid_argument("duplicate algorithm name '" + label + "'");
    if (a.kind == AlgorithmKind::kPips) {
      PipsConfig c = a.pips;
      c.max_episodes = t_max;
      c.mode = mode;
      c.validate();
    }
  }
}

std::string algorithm_label(const AlgorithmSpec& spec) {
  if (!spec.name.empty()) return spec.name;
  switch (spec.kind) {
    case AlgorithmKind::kPips: return "PIPS";
    case AlgorithmKind::kPsrl: return "PSRL";
    case AlgorithmKind::kUcbvi: return "UCBVI";
  }
  return "";
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  Section sec(root, "config");
  ExperimentConfig cfg;
  double env_variance = 1.0;
  if (!root.contains("env")) throw std::invalid_argument("config: missing 'env'");
  cfg.env = parse_env(root.at("env"), env_variance);
  sec.mark("env");
  sec.mark("algorithms");
  const auto algos = root.find("algorithms");
  if (algos == root.end() || !algos->is_array() || algos->empty())
    throw std::invalid_argument("config: 'algorithms' must be a non-empty array");
  for (std::size_t i = 0; i < algos->size(); ++i)
    cfg.algorithms.push_back(parse_algorithm((*algos)[i], i, env_variance));
  sec.get("num_runs", cfg.num_runs);
  sec.get("t_max", cfg.t_max);
  sec.get("master_seed", cfg.master_seed);
  std::string mode = "fixed-budget";
  sec.get("mode", mode);
  if (mode == "fixed-budget") cfg.mode = RunMode::kFixedBudget;
  else if (mode == "stopping") cfg.mode = RunMode::kStopping;
  else throw std::invalid_argument("config.mode must be 'fixed-budget' or 'stopping'");
  sec.get("log_every", cfg.log_every);
  sec.get("output_dir", cfg.output_dir);
  sec.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n, double z) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("wilson_interval needs 0 <= k <= n, n >= 1");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // At the boundaries the closed form equals 0 or 1 exactly in real arithmetic.
  const double lo = k == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = k == n ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

RunRecord run_single(const ExperimentConfig& cfg, const TabularMdp& env, int algorithm_index,
                     int run) {
  const AlgorithmSpec& spec = cfg.algorithms.at(algorithm_index);
  const auto alg = static_cast<std::uint64_t>(algorithm_index);
  const auto r = static_cast<std::uint64_t>(run);
  RandomStream stream = make_stream(cfg.master_seed, {alg, r, 0});
  RunRecord record;
  switch (spec.kind) {
    case AlgorithmKind::kPips: {
      PipsConfig c = spec.pips;
      c.max_episodes = cfg.t_max;
      c.mode = cfg.mode;
      record = run_pips(c, env, stream, cfg.log_every);
      break;
    }
    case AlgorithmKind::kPsrl: {
      BaselineConfig c = spec.baseline;
      c.max_episodes = cfg.t_max;
      record = run_psrl(c, env, stream, make_stream(cfg.master_seed, {alg, r, 1}), cfg.log_every);
      break;
    }
    case AlgorithmKind::kUcbvi: {
      BaselineConfig c = spec.baseline;
      c.max_episodes = cfg.t_max;
      record = run_ucbvi(c, env, stream, cfg.log_every);
      break;
    }
  }
  record.algorithm = algorithm_label(spec);
  record.run = run;
  return record;
}

std::vector<RunRecord> execute_serial(const ExperimentConfig& cfg, const TabularMdp& env) {
  std::vector<RunRecord> out;
  out.reserve(cfg.algorithms.size() * cfg.num_runs);
  for (int a = 0; a < static_cast<int>(cfg.algorithms.size()); ++a)
    for (int r = 0; r < cfg.num_runs; ++r) out.push_back(run_single(cfg, env, a, r));
  return out;
}

std::vector<RunRecord> execute_parallel(const ExperimentConfig& cfg, const TabularMdp& env,
                                        int workers) {
  const int jobs = static_cast<int>(cfg.algorithms.size()) * cfg.num_runs;
  std::vector<RunRecord> out(jobs);
  std::vector<std::exception_ptr> errors(jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (int j = 0; j < jobs; ++j) {
    try {
      out[j] = run_single(cfg, env, j / cfg.num_runs, j % cfg.num_runs);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

int workers_from_env() {
  const char* raw = std::getenv("PIPS_WORKERS");
  if (!raw) return 1;
  char* end = nullptr;
  const long w = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || w < 1) return 1;
  return static_cast<int>(std::min<long>(w, 1024));
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_aggregates(const std::filesystem::path& dir, const std::vector<AggregateRow>& rows) {
  std::ostringstream agg, plot;
  write_aggregate_csv(agg, rows);
  write_plot_csv(plot, rows);
  write_file(dir / "aggregate.csv", agg.str());
  write_file(dir / "plot.csv", plot.str());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir.string());

  const TabularMdp env = make_env(cfg.env);
  ExperimentResult result;
  result.records = workers > 1 ? execute_parallel(cfg, env, workers) : execute_serial(cfg, env);

  std::ostringstream runs, finals;
  write_runs_csv(runs, result.records);
  write_final_csv(finals, result.records);
  write_file(dir / "runs.csv", runs.str());
  write_file(dir / "final.csv", finals.str());
  // Aggregate what was written, not the in-memory doubles, so that
  // `aggregate <dir>` reproduces aggregate.csv byte for byte.
  std::istringstream written(runs.str());
  result.aggregate = aggregate(read_runs_csv(written));
  write_aggregates(dir, result.aggregate);
  return result;
}

std::vector<AggregateRow> aggregate_directory(const std::filesystem::path& dir) {
  std::ifstream in(dir / "runs.csv", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + (dir / "runs.csv").string());
  std::vector<AggregateRow> rows = aggregate(read_runs_csv(in));
  write_aggregates(dir, rows);
  return rows;
}

}  // namespace pips
