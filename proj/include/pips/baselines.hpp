#pragma once

#include <cstdint>

#include "pips/algorithm.hpp"
#include "pips/mdp.hpp"
#include "pips/posterior.hpp"
#include "pips/random.hpp"

namespace pips {

enum class BaselineKind { kPsrl, kUcbvi };

struct BaselineConfig {
  std::int64_t max_episodes = 10000;
  double reward_variance = 1.0;
  double dirichlet_prior = 1.0;
  double identify_tol = 1e-9;
  /// PSRL only: log the challenger resample count of the empirical greedy
  /// policy on each logged row, from a separate stream so the run itself is
  /// unaffected. The search uses the practical B(t, delta) and the same hard cap
  /// rules as PIPS.
  bool posterior_diagnostics = true;
  double delta = 0.1;
  double hard_cap_factor = 10.0;
  std::uint64_t max_resamples = 0;
};

struct BaselineState {
  VisitCounts counts;
  std::int64_t t = 0;
  BaselineKind kind = BaselineKind::kPsrl;
};

/// Samples one MDP from the uninflated posterior, rolls out its greedy policy
/// and records the episode.
void psrl_episode(BaselineState& state, const TabularMdp& env, const PosteriorParams& posterior,
                  RandomStream& rng);

/// min(sqrt(Var * log(t+1) / max(1,n)) + (H-h+1) log(t+1) / max(1,n), H-h+1),
/// with `steps_to_go` = H-h+1.
double ucbvi_bonus(double next_value_variance, double n, long t, int steps_to_go);

/// Optimistic value iteration on the empirical MDP with the UCBVI bonus; Q is
/// clipped at the number of remaining steps.
OptimalPlan ucbvi_optimistic_plan(const VisitCounts& counts, const ModelView& empirical, long t);

/// Greedy rollout of the optimistic plan for episode t = state.t + 1.
void ucbvi_episode(BaselineState& state, const TabularMdp& env, RandomStream& rng);

RunRecord run_psrl(const BaselineConfig& config, const TabularMdp& env, RandomStream stream,
                   RandomStream diagnostics_stream, int log_every = 1);
RunRecord run_ucbvi(const BaselineConfig& config, const TabularMdp& env, RandomStream stream,
                    int log_every = 1);

}  // namespace pips
