// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "pips/algorithm.hpp"
#include "pips/environments.hpp"
#include "pips/experiment.hpp"
#include "pips/explorer.hpp"

using namespace pips;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pips_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Random two-action policy: rho(0|s,h) ~ U(0,1).
StochasticPolicy random_policy(const MdpDims& d, RandomStream& rng) {
  StochasticPolicy rho(d.states, d.horizon, 2);
  for (int h = 0; h < d.horizon; ++h)
    for (int s = 0; s < d.states; ++s) {
      const double x = uniform01(rng);
      const double dist[2] = {x, 1 - x};
      rho.set_distribution(s, h, dist);
    }
  return rho;
}

// 1. Planner against exhaustive policy enumeration.
Outcome planner_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  int n = 0;
  for (int S = 1; S <= 3; ++S)
    for (int A = 1; A <= 2; ++A)
      for (int H = 1; H <= 3; ++H)
        for (std::uint64_t seed = 0; n < 200 && seed < 12; ++seed, ++n) {
          const TabularMdp m = make_random_mdp(S, A, H, 1000 * n + seed, 0.25);
          const double v = backward_induction(m).values.v0;
          worst = std::max(worst, std::abs(v - oracle::enumerate_policies(m).best));
        }
  // 18 shapes x 12 seeds covers more than 200; the counter caps it.
  const double secs = seconds_since(t0);
  return {n == 200 && worst <= 1e-10 && secs < 5.0,
          fmt("%d MDPs, max |dV0| = %.3g, %.2f s", n, worst, secs)};
}

// 2. Combination lock closed form.
Outcome comblock_value() {
  double worst = 0;
  for (auto [H, eps] : {std::pair{4, 0.0}, {10, 0.01}, {10, 0.1}}) {
    const TabularMdp m = make_comblock(H, 3, eps, 0.25);
    worst = std::max(worst, std::abs(backward_induction(m).values.v0 - std::pow(1 - eps, H - 1)));
  }
  return {worst <= 1e-12, fmt("max |V0 - (1-eps)^(H-1)| = %.3g", worst)};
}

// 3. Exact occupancy against rollout frequencies, random stochastic policies.
Outcome occupancy() {
  const int rollouts = 100000;
  int entries = 0, misses = 0;
  double worst_z = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularMdp m = make_random_mdp(3, 2, 4, 300 + seed, 0.25);
    const MdpDims& d = m.dims();
    RandomStream rng = make_stream(31, {seed});
    const StochasticPolicy rho = random_policy(d, rng);
    const OccupancyMeasure w = visitation_probabilities(m, rho);
    std::vector<double> freq(w.w.size(), 0.0);
    for (int i = 0; i < rollouts; ++i) {
      const Trajectory tr = rollout(m, rho, rng);
      for (int h = 0; h < d.horizon; ++h) freq[d.sa_index(h, tr[h].state, tr[h].action)] += 1.0;
    }
    for (std::size_t i = 0; i < freq.size(); ++i) {
      const double se = oracle::binomial_se(w.w[i], rollouts);
      const double dev = std::abs(freq[i] / rollouts - w.w[i]);
      ++entries;
      if (w.w[i] > 0) worst_z = std::max(worst_z, dev / se);
      misses += dev > 3 * se + 1e-12;
    }
  }
  return {misses == 0, fmt("%d entries, %d outside 3 SE, max z = %.2f", entries, misses, worst_z)};
}

// 4. Posterior sampler moments.
Outcome posterior_moments() {
  const int draws = 100000;
  const double eta = 0.5, u = 1.0;
  VisitCounts c(MdpDims{3, 1, 1});
  c.add(0, 0, 0, 0, 1.5, 3);
  c.add(0, 0, 0, 2, 3.5, 7);
  std::vector<double> mean(3, 0.0);
  RandomStream rng = make_stream(41);
  PosteriorSample s;
  for (int i = 0; i < draws; ++i) {
    sample_mdp_into(c, PosteriorParams{eta, u, 0.25}, 0, rng, s);
    for (int k = 0; k < 3; ++k) mean[k] += s.phi[k] / draws;
  }
  const double counts[3] = {3, 0, 7};
  double total = 0, worst_mean = 0;
  for (double n : counts) total += u + eta * n;
  for (int k = 0; k < 3; ++k)
    worst_mean = std::max(worst_mean, std::abs(mean[k] - (u + eta * counts[k]) / total));

  const double sigma2 = 0.01;
  double worst_rel = 0;
  for (std::uint64_t n : {10u, 100u})
    for (double inflation : {1.0, 0.5}) {
      VisitCounts b(MdpDims{1, 1, 1});
      b.add(0, 0, 0, 0, 0.5 * n, n);
      RandomStream r = make_stream(42, {n});
      double s1 = 0, s2 = 0;
      for (int i = 0; i < draws; ++i) {
        sample_mdp_into(b, PosteriorParams{inflation, u, sigma2}, 0, r, s);
        s1 += s.theta[0];
        s2 += s.theta[0] * s.theta[0];
      }
      const double var = s2 / draws - (s1 / draws) * (s1 / draws);
      const double target = sigma2 / (inflation * n);
      worst_rel = std::max(worst_rel, std::abs(var - target) / target);
    }
  return {worst_mean <= 0.01 && worst_rel <= 0.10,
          fmt("max Dirichlet mean error %.4f, max relative variance error %.3f", worst_mean,
              worst_rel)};
}

// 5. Optimistic evaluation dominates the exact Q of rho in the exploration MDP.
Outcome optimism_rate() {
  int dominated = 0, trials = 0;
  for (std::uint64_t m_seed = 0; m_seed < 200; ++m_seed) {
    RandomStream rng = make_stream(51, {m_seed});
    const int S = 2 + static_cast<int>(m_seed % 3), A = 2, H = 3;
    const TabularMdp m = make_random_mdp(S, A, H, 5000 + m_seed, 0.25);
    const MdpDims& d = m.dims();
    for (int draw = 0; draw < 100; ++draw) {
      ExplorationRewardKernel k{d, std::vector<double>(d.state_action_count())};
      for (double& v : k.values) v = uniform01(rng);
      const StochasticPolicy rho = random_policy(d, rng);
      VisitCounts c(d);
      for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
          for (int a = 0; a < A; ++a) {
            const int n = static_cast<int>(uniform01(rng) * 40);
            for (int i = 0; i < n; ++i)
              c.add(h, s, a, static_cast<int>(sample_index(m.next_state_distribution(h, s, a), rng)), 0.5);
          }
      const TabularMdp e = empirical_mdp(c, 0, 0.5);
      const ValueFunctions q =
          optimistic_policy_evaluation(rho, k, e, c, TransitionThreshold{S, 1.0}, 1e-3);
      const ValueFunctions exact =
          evaluate_policy(ModelView(d, m.transitions(), k.values, 0), rho);
      bool ok = true;
      for (std::size_t i = 0; i < q.q.size(); ++i) ok = ok && q.q[i] >= exact.q[i] - 1e-12;
      dominated += ok;
      ++trials;
    }
  }
  const double rate = static_cast<double>(dominated) / trials;
  return {rate >= 0.995, fmt("%d / %d draws dominated (%.4f)", dominated, trials, rate)};
}

// 6. Error rate of the stopping rule at delta = 0.1.
Outcome stopping_correctness() {
  const MdpDims d{2, 2, 2};
  const TabularMdp env(d, std::vector<double>(d.state_action_count() * 2, 0.5),
                       {0.3, 0.7, 0.6, 0.2, 0.4, 0.8, 0.2, 0.6}, 0.1, 0);
  PipsConfig c;
  c.mode = RunMode::kStopping;
  c.delta = 0.1;
  c.reward_variance = 0.01;
  c.max_episodes = 50000;
  const int runs = 200;
  int errors = 0, stopped = 0;
  std::int64_t longest = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int run = 0; run < runs; ++run) {
    const RunRecord r = run_pips(c, env, make_stream(61, {static_cast<std::uint64_t>(run)}), 1000);
    if (r.stop_episode) {
      ++stopped;
      longest = std::max(longest, *r.stop_episode);
    }
    errors += !r.identified;
  }
  const auto [lo, hi] = wilson_interval(errors, runs);
  return {stopped == runs && lo <= 0.1,
          fmt("%d/%d stopped (latest at %lld), %d errors, Wilson [%.3f, %.3f], %.1f s", stopped,
              runs, static_cast<long long>(longest), errors, lo, hi, seconds_since(t0))};
}

struct FinalRates {
  std::map<std::string, std::pair<int, int>> at_end;    // identified, runs
  std::map<std::string, std::pair<int, int>> at_tenth;  // at T / 10
};

FinalRates final_rates(const std::vector<RunRecord>& records, std::int64_t t_max) {
  FinalRates out;
  for (const RunRecord& r : records) {
    auto& end = out.at_end[r.algorithm];
    auto& tenth = out.at_tenth[r.algorithm];
    ++end.second;
    ++tenth.second;
    end.first += r.identified;
    bool early = false;
    for (const EpisodeRow& row : r.rows)
      if (row.t <= t_max / 10) early = row.identified;
    tenth.first += early;
  }
  return out;
}

ExperimentConfig figure_config(const std::string& env_json, const std::string& dir) {
  ExperimentConfig cfg = parse_config(R"({"env": )" + env_json + R"(,
    "algorithms": [{"type": "pips"}, {"type": "psrl"}, {"type": "ucbvi"}],
    "num_runs": 32, "t_max": 10000, "master_seed": 7, "log_every": 50})");
  cfg.output_dir = scratch_dir(dir).string();
  return cfg;
}

std::vector<RunRecord> moca_records;  // shared by 7 and 8

const std::vector<RunRecord>& moca_experiment() {
  if (moca_records.empty())
    moca_records =
        run_experiment(figure_config(R"({"type": "moca", "length": 4})", "moca"), workers_from_env())
            .records;
  return moca_records;
}

// 7. Ordering of final identification rates and PIPS convergence.
Outcome figure_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<RunRecord>& moca = moca_experiment();
  const std::vector<RunRecord> lock =
      run_experiment(figure_config(R"({"type": "comblock", "horizon": 6, "actions": 3, "slip": 0.01})",
                                   "comblock"),
                     workers_from_env())
          .records;
  std::string detail, failures;
  for (auto [name, records] : {std::pair{"MOCA", &moca}, {"CombLock", &lock}}) {
    const FinalRates rates = final_rates(*records, 10000);
    const auto [pk, pn] = rates.at_end.at("PIPS");
    const auto [pk10, pn10] = rates.at_tenth.at("PIPS");
    const double pips = static_cast<double>(pk) / pn;
    const double pips_lo = wilson_interval(pk, pn).first;
    detail += fmt("%s PIPS %d/%d (lo %.3f, %d/%d at T/10)", name, pk, pn, pips_lo, pk10, pn10);
    if (pips < 0.9 || pk * pn10 < pk10 * pn) failures += fmt(" %s PIPS trend;", name);
    for (const char* base : {"PSRL", "UCBVI"}) {
      const auto [k, n] = rates.at_end.at(base);
      const double rate = static_cast<double>(k) / n;
      detail += fmt(", %s %d/%d", base, k, n);
      if (pips < rate) failures += fmt(" %s PIPS below %s;", name, base);
      if (std::string(name) == "MOCA" && pips_lo < rate)
        failures += fmt(" %s PIPS Wilson lower below %s mean;", name, base);
    }
    detail += "; ";
  }
  detail += fmt("%.0f s", seconds_since(t0));
  if (!failures.empty()) detail += "; failed:" + failures;
  const bool pass = failures.empty();
  return {pass, detail};
}

// 8. Resample-count growth shapes over t in [2000, 10000] on MOCA.
Outcome contraction_signature() {
  const std::vector<RunRecord>& moca = moca_experiment();
  const ContractionReport pips = contraction_diagnostics(moca, "PIPS", 2000, 10000);
  const ContractionReport psrl = contraction_diagnostics(moca, "PSRL", 2000, 10000);
  const LineFit& lin = pips.mean_log.log_linear;
  const double margin = psrl.mean_log.log_log.r2 - psrl.mean_log.log_linear.r2;
  std::string failures;
  if (lin.r2 < 0.9 || lin.slope <= 0) failures += " PIPS log-linear fit;";
  if (margin < 0.05) failures += " PSRL log-log margin;";
  return {failures.empty(),
          (failures.empty() ? std::string() : "failed:" + failures + " ") + fmt("PIPS log-linear R2 %.3f slope %.3g; PSRL log-log R2 %.3f vs log-linear %.3f "
              "(margin %.3f)",
              lin.r2, lin.slope, psrl.mean_log.log_log.r2, psrl.mean_log.log_linear.r2, margin)};
}

// 9. Byte-identical outputs across reruns and executors.
Outcome determinism() {
  ExperimentConfig cfg = parse_config(R"({
    "env": {"type": "random", "states": 3, "actions": 2, "horizon": 3, "seed": 5},
    "algorithms": [{"type": "pips"}, {"type": "psrl"}, {"type": "ucbvi"}],
    "num_runs": 6, "t_max": 400, "master_seed": 11, "log_every": 20})");
  std::vector<fs::path> dirs;
  for (auto [name, workers] : {std::pair{"det_a", 1}, {"det_b", 1}, {"det_c", 3}}) {
    cfg.output_dir = scratch_dir(name).string();
    run_experiment(cfg, workers);
    dirs.emplace_back(cfg.output_dir);
  }
  int files = 0, differing = 0;
  for (const char* f : {"runs.csv", "final.csv", "aggregate.csv", "plot.csv"}) {
    const std::string ref = slurp(dirs[0] / f);
    ++files;
    differing += ref.empty() || slurp(dirs[1] / f) != ref || slurp(dirs[2] / f) != ref;
  }
  return {differing == 0, fmt("%d files compared across serial, serial rerun, 3 workers; %d differ",
                              files, differing)};
}

// 10. AdaHedge regret on random bounded gain sequences.
Outcome adahedge_regret() {
  const int T = 1000, A = 4;
  double worst_ratio = 0;
  int violations = 0;
  for (std::uint64_t seq = 0; seq < 50; ++seq) {
    RandomStream rng = make_stream(101, {seq});
    const double range = 0.1 + 10.0 * uniform01(rng);
    std::vector<double> bias(A);
    for (double& b : bias) b = uniform01(rng);
    AdaHedge h(A);
    std::vector<double> totals(A, 0.0), g(A);
    double gained = 0;
    for (int t = 0; t < T; ++t) {
      // Arm means drift and swap halfway so the leader changes.
      for (int k = 0; k < A; ++k) {
        const double m = t < T / 2 ? bias[k] : 1 - bias[k];
        g[k] = range * (uniform01(rng) < m ? uniform01(rng) * 0.5 + 0.5 : uniform01(rng) * 0.5);
      }
      for (int k = 0; k < A; ++k) gained += h.distribution()[k] * g[k];
      for (int k = 0; k < A; ++k) totals[k] += g[k];
      h.feed_gains(g);
    }
    const double regret = *std::max_element(totals.begin(), totals.end()) - gained;
    const double bound = range * std::sqrt(T * std::log(A)) + 16 * range * (2 + std::log(A) / 3);
    worst_ratio = std::max(worst_ratio, regret / bound);
    violations += regret > bound;
  }
  return {violations == 0, fmt("50 sequences, %d over bound, max regret/bound = %.3f", violations,
                               worst_ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  app.add_option("criteria", only, "criterion numbers to run (default: all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"planner matches brute force", planner_oracle},
      {"combination lock optimal value", comblock_value},
      {"occupancy vs Monte Carlo", occupancy},
      {"posterior sampler moments", posterior_moments},
      {"optimistic evaluation dominance", optimism_rate},
      {"stopping rule error rate", stopping_correctness},
      {"identification ordering MOCA / CombLock", figure_ordering},
      {"resample growth signature", contraction_signature},
      {"determinism serial / parallel", determinism},
      {"AdaHedge regret bound", adahedge_regret},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("AC%-2d %s  %s  [%s]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
