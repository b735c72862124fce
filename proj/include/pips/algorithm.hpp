#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pips/explorer.hpp"
#include "pips/mdp.hpp"
#include "pips/posterior.hpp"
#include "pips/random.hpp"

namespace pips {

enum class InflationSchedule { kConstant, kPower };
enum class ThresholdSchedule { kPractical, kCalibrated };
enum class RunMode { kFixedBudget, kStopping };

struct PipsConfig {
  double gamma = 0.5;
  double alpha = 0.25;
  InflationSchedule inflation = InflationSchedule::kConstant;
  double inflation_power = 0.75;  ///< eta_t = (t+1)^-power for kPower; must exceed 2 alpha
  double delta = 0.1;
  ThresholdSchedule threshold = ThresholdSchedule::kPractical;
  /// Coefficient c of log(1+t) in the calibrated beta(t, delta); unset means 2 SAH.
  std::optional<double> calibration_log_coeff;
  std::int64_t max_episodes = 10000;
  double epsilon = 0.0;
  double reward_variance = 1.0;
  double tol = 0.0;  ///< slack of the start-state optimality check in sampled MDPs
  RunMode mode = RunMode::kFixedBudget;
  /// Fixed-budget mode searches up to hard_cap_factor * B(t, delta) draws.
  double hard_cap_factor = 10.0;
  /// Absolute ceiling on draws per episode (0 = none); applies in both modes.
  std::uint64_t max_resamples = 0;
  double dirichlet_prior = 1.0;
  /// Slack when scoring the recommendation against the true MDP.
  double identify_tol = 1e-9;

  void validate() const;
  double inflation_at(long t) const;
};

/// Posterior-sampling budget B(t, delta).
///   practical:  ceil((SAH/delta) log(t SAH/delta))
///   calibrated: ceil(exp(eta beta(t,delta)) log(t/delta)), beta = log(1/delta) + c log(1+t)
/// Saturates at 2^62.
std::uint64_t threshold_B(long t, double delta, double eta, const MdpDims& dims,
                          ThresholdSchedule schedule, double calibration_log_coeff);

/// True iff the whole budget was spent without finding a challenger.
/// Throws std::invalid_argument for a zero budget.
bool stopping_check(const ChallengerResult& result);

/// True iff the sampled MDP counts as a challenger: V*_0 - V^pi_0 > epsilon.
bool epsilon_challenger_check(const ValueFunctions& optimal_in_sample, double policy_value_in_sample,
                              double epsilon);

/// Keeps `previous` while it stays epsilon-optimal in the empirical MDP,
/// otherwise switches to the empirical greedy policy. epsilon = 0 always
/// returns the greedy policy.
DeterministicPolicy sticking_select(const ModelView& empirical, double epsilon,
                                    const DeterministicPolicy* previous);

struct EpisodeRow {
  std::int64_t t = 0;
  bool identified = false;
  double performance = 0.0;
  std::uint64_t resamples = 0;  ///< 0 when the algorithm does no posterior search
  bool stopped = false;         ///< stopping condition held at this episode
  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct RunRecord {
  std::string algorithm;
  int run = 0;
  std::vector<EpisodeRow> rows;
  DeterministicPolicy recommendation;
  std::optional<std::int64_t> stop_episode;
  bool identified = false;
  double performance = 0.0;
};

/// Mutable state of one PIPS run; owned by a single worker.
struct RunState {
  VisitCounts counts;
  ExplorerState learners;
  StochasticPolicy exploration;
  std::int64_t t = 0;  ///< completed episodes
  DeterministicPolicy recommendation;
  bool stopped = false;
  std::optional<std::int64_t> stop_episode;
  RandomStream rng;

  RunState(const TabularMdp& env, RandomStream stream);
};

struct EpisodeReport {
  std::int64_t t = 0;
  DeterministicPolicy pi_hat;
  std::uint64_t resamples = 0;
  bool challenger_found = false;
  bool stop_condition = false;  ///< no challenger within B(t, delta)
  bool forced = false;
};

/// One PIPS episode t = state.t + 1: empirical best policy, challenger search,
/// forced exploration, mixing, rollout, exploration reward and policy update.
/// In stopping mode the episode ends right after the stop decision.
/// Throws std::out_of_range when the episode budget is exhausted or the run has stopped.
EpisodeReport pips_episode(RunState& state, const TabularMdp& env, const PipsConfig& config);

/// Full run. Rows are logged every `log_every` episodes, at the final episode
/// and at the stop episode.
RunRecord run_pips(const PipsConfig& config, const TabularMdp& env, RandomStream stream,
                   int log_every = 1);

/// Scores a recommendation against the true MDP.
struct Score {
  bool identified;
  double performance;
};
Score score_policy(const TabularMdp& env, const OptimalPlan& optimal,
                   const DeterministicPolicy& policy, double identify_tol);

}  // namespace pips
