#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "pips/mdp.hpp"

namespace pips {

/// MOCA-style instance: s_init = state 0 and chain states s_1..s_L = 1..L.
/// Action l-1 (a_l) moves s_init to s_l deterministically; elsewhere a_l keeps
/// the agent in place. The last action (a*) pays the highest reward everywhere
/// but advances along the chain only with probability q (else stays).
struct MocaSpec {
  int length = 4;               ///< L
  double advance_prob = 0.1;    ///< q
  double reward_variance = 0.25;
  int horizon = 0;              ///< 0 means L + 1
  double optimal_reward = 0.9;  ///< mean reward of a*
  double other_reward = 0.5;
};

/// Two actions, LEFT = 0 and RIGHT = 1, on a chain of L states starting at s_1.
struct RiverSwimSpec {
  int length = 8;
  int horizon = 10;
  double reward_variance = 1.0 / 20.0;
  double left_reward = 0.005;   ///< at (s_1, LEFT)
  double right_reward = 0.95;   ///< at (s_L, RIGHT)
  double advance = 0.35;
  double stay = 0.6;
  double back = 0.05;
  double filler_reward = kRewardClampMargin;  ///< every other (s, a)
};

/// Reward variance presets for RiverSwim (the two published settings).
inline constexpr double kRiverSwimVarianceAppendix = 1.0 / 20.0;
inline constexpr double kRiverSwimVarianceMainText = 1.0 / 1000.0;

/// S = H states; action 0 is the unique correct action at every nonterminal state.
struct CombinationLockSpec {
  int horizon = 10;
  int actions = 3;
  double slip = 0.01;
  double reward_variance = 0.25;
};

struct RandomMdpSpec {
  int states = 3;
  int actions = 2;
  int horizon = 3;
  std::uint64_t seed = 0;
  double reward_variance = 0.25;
};

using EnvSpec = std::variant<MocaSpec, RiverSwimSpec, CombinationLockSpec, RandomMdpSpec>;

/// CombinationLock with exact 0/1 rewards (closed reward domain) unless `clamp`.
TabularMdp make_comblock(int horizon, int actions, double slip, double reward_variance,
                         bool clamp = false);
TabularMdp make_riverswim(const RiverSwimSpec& spec);
TabularMdp make_moca(const MocaSpec& spec);
/// Dirichlet(1,...,1) rows and Uniform(0.1, 0.9) reward means, redrawn until
/// every (s,h) reachable under the optimal policy has an action gap whose
/// occupancy-weighted size is at least 1e-6 (unique start-state-optimal policy).
TabularMdp make_random_mdp(int states, int actions, int horizon, std::uint64_t seed,
                           double reward_variance);

TabularMdp make_env(const EnvSpec& spec);
std::string env_name(const EnvSpec& spec);

/// Smallest occupancy-weighted action gap over states reachable under the
/// optimal policy; +inf when A = 1.
double min_weighted_action_gap(const TabularMdp& mdp);

}  // namespace pips
