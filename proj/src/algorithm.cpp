#include "pips/algorithm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pips {

namespace {

constexpr double kMaxBudget = 4611686018427387904.0;  // 2^62

std::uint64_t saturating_ceil(double x) {
  if (!(x < kMaxBudget)) return static_cast<std::uint64_t>(kMaxBudget);
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(x)));
}

}  // namespace

void PipsConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
  if (!(gamma > alpha && gamma < 1.0))
    throw std::invalid_argument("gamma must satisfy alpha < gamma < 1");
  if (inflation == InflationSchedule::kPower && !(inflation_power > 2.0 * alpha))
    throw std::invalid_argument("inflation power must exceed 2 alpha");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (max_episodes < 0) throw std::invalid_argument("episode budget must be nonnegative");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (!(reward_variance > 0.0)) throw std::invalid_argument("reward variance must be positive");
  if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
  if (!(hard_cap_factor >= 1.0)) throw std::invalid_argument("hard cap factor must be >= 1");
  if (!(dirichlet_prior > 0.0)) throw std::invalid_argument("Dirichlet prior must be positive");
  if (calibration_log_coeff && !(*calibration_log_coeff >= 0.0))
    throw std::invalid_argument("calibration coefficient must be nonnegative");
}

double PipsConfig::inflation_at(long t) const {
  if (inflation == InflationSchedule::kConstant) return 1.0;
  return std::pow(static_cast<double>(t) + 1.0, -inflation_power);
}

std::uint64_t threshold_B(long t, double delta, double eta, const MdpDims& dims,
                          ThresholdSchedule schedule, double calibration_log_coeff) {
  if (t < 1) throw std::invalid_argument("threshold_B: t must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("threshold_B: delta in (0,1)");
  const double td = static_cast<double>(t);
  if (schedule == ThresholdSchedule::kPractical) {
    const double sah = static_cast<double>(dims.state_action_count());
    return saturating_ceil(sah / delta * std::log(td * sah / delta));
  }
  const double beta = std::log(1.0 / delta) + calibration_log_coeff * std::log1p(td);
  const double exponent = eta * beta;
  if (exponent > std::log(kMaxBudget)) return static_cast<std::uint64_t>(kMaxBudget);
  return saturating_ceil(std::exp(exponent) * std::log(td / delta));
}

bool stopping_check(const ChallengerResult& result) {
  if (result.budget == 0) throw std::invalid_argument("stopping check with a zero budget");
  return !result.found;
}

bool epsilon_challenger_check(const ValueFunctions& optimal_in_sample, double policy_value_in_sample,
                              double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  return optimal_in_sample.v0 - policy_value_in_sample > epsilon;
}

DeterministicPolicy sticking_select(const ModelView& empirical, double epsilon,
                                    const DeterministicPolicy* previous) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  OptimalPlan plan = backward_induction(empirical);
  if (epsilon == 0.0 || previous == nullptr) return std::move(plan.policy);
  if (plan.values.v0 - evaluate_policy(empirical, *previous).v0 <= epsilon) return *previous;
  return std::move(plan.policy);
}

Score score_policy(const TabularMdp& env, const OptimalPlan& optimal,
                   const DeterministicPolicy& policy, double identify_tol) {
  const double value = evaluate_policy(env, policy).v0;
  return {is_start_state_optimal(optimal.values, value, identify_tol),
          performance_factor(optimal.values.v0, value)};
}

RunState::RunState(const TabularMdp& env, RandomStream stream)
    : counts(env.dims()),
      learners(env.dims()),
      exploration(env.num_states(), env.horizon(), env.num_actions()),
      recommendation(env.num_states(), env.horizon(), env.num_actions()),
      rng(std::move(stream)) {}

EpisodeReport pips_episode(RunState& state, const TabularMdp& env, const PipsConfig& config) {
  if (state.stopped) throw std::out_of_range("pips_episode: the run has already stopped");
  if (state.t >= config.max_episodes) throw std::out_of_range("pips_episode: episode budget exceeded");

  const MdpDims& dims = env.dims();
  const long t = static_cast<long>(state.t + 1);
  EpisodeReport report;
  report.t = t;

  const TabularMdp empirical = empirical_mdp(state.counts, env.init_state(), env.reward_std());
  const DeterministicPolicy* previous = state.t > 0 ? &state.recommendation : nullptr;
  report.pi_hat = sticking_select(empirical, config.epsilon, previous);
  state.recommendation = report.pi_hat;

  const double eta = config.inflation_at(t);
  const PosteriorParams posterior{eta, config.dirichlet_prior, config.reward_variance};
  const double coeff = config.calibration_log_coeff.value_or(2.0 * dims.state_action_count());
  const std::uint64_t budget = threshold_B(t, config.delta, eta, dims, config.threshold, coeff);
  std::uint64_t search_cap = budget;
  if (config.mode == RunMode::kFixedBudget) {
    const double scaled = config.hard_cap_factor * static_cast<double>(budget);
    search_cap = scaled >= kMaxBudget ? static_cast<std::uint64_t>(kMaxBudget)
                                      : static_cast<std::uint64_t>(std::ceil(scaled));
  }
  if (config.max_resamples > 0) search_cap = std::min(search_cap, config.max_resamples);

  const double gap_tolerance = std::max(config.epsilon, config.tol);
  ChallengerResult challenger = find_challenger(state.counts, report.pi_hat, posterior, search_cap,
                                                env.init_state(), state.rng, gap_tolerance);
  report.resamples = challenger.draws;
  report.challenger_found = challenger.found;
  report.stop_condition = !challenger.found || challenger.draws > budget;

  if (config.mode == RunMode::kStopping && report.stop_condition) {
    state.stopped = true;
    state.stop_episode = t;
    return report;
  }

  const BonusParams bonus{TransitionThreshold{dims.states, 1.0}, config.alpha, config.gamma};
  const ForcedExploration forced =
      forced_exploration_policy(t, empirical, state.counts, bonus, state.rng);
  report.forced = draw_forced_switch(t, config.gamma, state.rng);
  const Trajectory traj = report.forced ? rollout(env, forced.policy, state.rng)
                                        : rollout(env, state.exploration, state.rng);

  // When the search came back empty the last draw stands in for the challenger.
  const ExplorationRewardKernel kernel =
      exploration_reward(empirical, challenger.sample, t, config.alpha, config.reward_variance);
  state.exploration = compute_exploration_policy(t, state.exploration, kernel, empirical,
                                                 state.counts, bonus, state.learners);
  state.counts.record(traj);
  state.t = t;
  return report;
}

RunRecord run_pips(const PipsConfig& config, const TabularMdp& env, RandomStream stream,
                   int log_every) {
  config.validate();
  if (log_every < 1) throw std::invalid_argument("log cadence must be at least 1");
  RunRecord record;
  record.algorithm = "PIPS";
  RunState state(env, std::move(stream));
  const OptimalPlan optimal = backward_induction(env);

  while (!state.stopped && state.t < config.max_episodes) {
    const EpisodeReport report = pips_episode(state, env, config);
    const bool last = state.stopped || report.t == config.max_episodes;
    if (report.t % log_every == 0 || last) {
      const Score score = score_policy(env, optimal, report.pi_hat, config.identify_tol);
      record.rows.push_back(
          {report.t, score.identified, score.performance, report.resamples, report.stop_condition});
    }
  }

  if (state.stopped) {
    record.recommendation = state.recommendation;
    record.stop_episode = state.stop_episode;
  } else {
    const TabularMdp empirical = empirical_mdp(state.counts, env.init_state(), env.reward_std());
    const DeterministicPolicy* previous = state.t > 0 ? &state.recommendation : nullptr;
    record.recommendation = sticking_select(empirical, config.epsilon, previous);
  }
  const Score final_score = score_policy(env, optimal, record.recommendation, config.identify_tol);
  record.identified = final_score.identified;
  record.performance = final_score.performance;
  return record;
}

}  // namespace pips
