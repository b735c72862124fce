#include "pips/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pips {

void psrl_episode(BaselineState& state, const TabularMdp& env, const PosteriorParams& posterior,
                  RandomStream& rng) {
  const PosteriorSample sample = sample_mdp(state.counts, posterior, env.init_state(), rng);
  const OptimalPlan plan = backward_induction(sample);
  state.counts.record(rollout(env, plan.policy, rng));
  ++state.t;
}

double ucbvi_bonus(double next_value_variance, double n, long t, int steps_to_go) {
  const double denom = std::max(1.0, n);
  const double log_term = std::log(static_cast<double>(t) + 1.0);
  const double bonus = std::sqrt(next_value_variance * log_term / denom) +
                       steps_to_go * log_term / denom;
  return std::min(bonus, static_cast<double>(steps_to_go));
}

OptimalPlan ucbvi_optimistic_plan(const VisitCounts& counts, const ModelView& empirical, long t) {
  const MdpDims& d = empirical.dims;
  OptimalPlan plan{ValueFunctions{d, std::vector<double>(d.state_action_count()),
                                  std::vector<double>(static_cast<std::size_t>(d.horizon) * d.states),
                                  0.0},
                   DeterministicPolicy(d.states, d.horizon, d.actions)};
  const std::vector<double> zeros(d.states, 0.0);
  for (int h = d.horizon - 1; h >= 0; --h) {
    const double* next_v = h + 1 < d.horizon ? &plan.values.v[d.state_index(h + 1, 0)] : zeros.data();
    const int steps_to_go = d.horizon - h;
    for (int s = 0; s < d.states; ++s) {
      double best_q = -INFINITY;
      int best = 0;
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t i = d.sa_index(h, s, a);
        const auto row = empirical.row(h, s, a);
        double mean = 0.0;
        for (int n = 0; n < d.states; ++n) mean += row[n] * next_v[n];
        double var = 0.0;
        for (int n = 0; n < d.states; ++n) var += row[n] * (next_v[n] - mean) * (next_v[n] - mean);
        const double bonus =
            ucbvi_bonus(var, static_cast<double>(counts.visits(h, s, a)), t, steps_to_go);
        const double q = std::min(empirical.rewards[i] + mean + bonus, static_cast<double>(steps_to_go));
        plan.values.q[i] = q;
        if (q > best_q) {
          best_q = q;
          best = a;
        }
      }
      plan.values.v[d.state_index(h, s)] = best_q;
      plan.policy.set_action(s, h, best);
    }
  }
  plan.values.v0 = plan.values.v[d.state_index(0, empirical.init_state)];
  return plan;
}

void ucbvi_episode(BaselineState& state, const TabularMdp& env, RandomStream& rng) {
  const long t = static_cast<long>(state.t + 1);
  const TabularMdp empirical = empirical_mdp(state.counts, env.init_state(), env.reward_std());
  const OptimalPlan plan = ucbvi_optimistic_plan(state.counts, empirical, t);
  state.counts.record(rollout(env, plan.policy, rng));
  state.t = t;
}

namespace {

template <typename Step, typename Resamples>
RunRecord run_baseline(const char* name, const BaselineConfig& config, const TabularMdp& env,
                       int log_every, Step&& step, Resamples&& resamples) {
  if (config.max_episodes < 0) throw std::invalid_argument("episode budget must be nonnegative");
  if (log_every < 1) throw std::invalid_argument("log cadence must be at least 1");
  RunRecord record;
  record.algorithm = name;
  BaselineState state{VisitCounts(env.dims()), 0, BaselineKind::kPsrl};
  const OptimalPlan optimal = backward_induction(env);

  // Row t scores the recommendation available at the start of episode t, as
  // for PIPS.
  while (state.t < config.max_episodes) {
    const std::int64_t t = state.t + 1;
    const bool logged = t % log_every == 0 || t == config.max_episodes;
    if (logged) {
      const TabularMdp empirical = empirical_mdp(state.counts, env.init_state(), env.reward_std());
      const DeterministicPolicy pi_hat = backward_induction(empirical).policy;
      const Score score = score_policy(env, optimal, pi_hat, config.identify_tol);
      const auto [draws, stop] = resamples(state, pi_hat, t);
      record.rows.push_back({t, score.identified, score.performance, draws, stop});
    }
    step(state);
  }

  const TabularMdp empirical = empirical_mdp(state.counts, env.init_state(), env.reward_std());
  record.recommendation = backward_induction(empirical).policy;
  const Score final_score = score_policy(env, optimal, record.recommendation, config.identify_tol);
  record.identified = final_score.identified;
  record.performance = final_score.performance;
  return record;
}

}  // namespace

RunRecord run_psrl(const BaselineConfig& config, const TabularMdp& env, RandomStream stream,
                   RandomStream diagnostics_stream, int log_every) {
  const PosteriorParams posterior{1.0, config.dirichlet_prior, config.reward_variance};
  posterior.validate();
  return run_baseline(
      "PSRL", config, env, log_every,
      [&](BaselineState& state) { psrl_episode(state, env, posterior, stream); },
      [&](const BaselineState& state, const DeterministicPolicy& pi_hat,
          std::int64_t t) -> std::pair<std::uint64_t, bool> {
        if (!config.posterior_diagnostics) return {0, false};
        const std::uint64_t budget = threshold_B(t, config.delta, 1.0, env.dims(),
                                                 ThresholdSchedule::kPractical, 0.0);
        auto cap = static_cast<std::uint64_t>(std::ceil(config.hard_cap_factor * budget));
        if (config.max_resamples > 0) cap = std::min(cap, config.max_resamples);
        const ChallengerResult result = find_challenger(state.counts, pi_hat, posterior, cap,
                                                        env.init_state(), diagnostics_stream);
        return {result.draws, !result.found || result.draws > budget};
      });
}

RunRecord run_ucbvi(const BaselineConfig& config, const TabularMdp& env, RandomStream stream,
                    int log_every) {
  return run_baseline(
      "UCBVI", config, env, log_every,
      [&](BaselineState& state) {
        state.kind = BaselineKind::kUcbvi;
        ucbvi_episode(state, env, stream);
      },
      [](const BaselineState&, const DeterministicPolicy&, std::int64_t) {
        return std::pair<std::uint64_t, bool>{0, false};
      });
}

}  // namespace pips
