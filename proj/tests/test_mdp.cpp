#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pips/environments.hpp"
#include "pips/mdp.hpp"

using namespace pips;

namespace {

TabularMdp chain(int states, int horizon, double reward) {
  // Action 0 advances deterministically, action 1 stays.
  const MdpDims d{states, 2, horizon};
  std::vector<double> p(d.state_action_count() * states, 0.0);
  std::vector<double> mu(d.state_action_count(), reward);
  for (int h = 0; h < horizon; ++h)
    for (int s = 0; s < states; ++s) {
      p[d.sas_index(h, s, 0, std::min(s + 1, states - 1))] = 1.0;
      p[d.sas_index(h, s, 1, s)] = 1.0;
    }
  return TabularMdp(d, p, mu, 0.1, 0, RewardDomain::kClosed);
}

}  // namespace

TEST(TabularMdp, RejectsBadRows) {
  const MdpDims d{2, 1, 1};
  EXPECT_THROW(TabularMdp(d, {0.5, 0.6, 0.5, 0.5}, {0.5, 0.5}, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(TabularMdp(d, {-0.1, 1.1, 0.5, 0.5}, {0.5, 0.5}, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(TabularMdp(d, {0.5, 0.5, 0.5, 0.5}, {0.0, 0.5}, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(TabularMdp(d, {0.5, 0.5, 0.5, 0.5}, {0.5, 0.5}, 1.0, 2), std::invalid_argument);
  EXPECT_NO_THROW(TabularMdp(d, {0.5, 0.5, 0.5, 0.5}, {0.0, 1.0}, 1.0, 0, RewardDomain::kClosed));
  TabularMdp clamped(d, {0.5, 0.5, 0.5, 0.5}, {-3.0, 2.0}, 1.0, 0, RewardDomain::kClamp);
  EXPECT_DOUBLE_EQ(clamped.reward_mean(0, 0, 0), kRewardClampMargin);
  EXPECT_DOUBLE_EQ(clamped.reward_mean(0, 1, 0), 1.0 - kRewardClampMargin);
}

TEST(BackwardInduction, SingleStateSingleAction) {
  const TabularMdp m(MdpDims{1, 1, 2}, {1.0, 1.0}, {0.5, 0.5}, 1.0, 0);
  EXPECT_DOUBLE_EQ(backward_induction(m).values.v0, 1.0);
}

TEST(BackwardInduction, MatchesBruteForceOnRandomMdps) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const TabularMdp m = make_random_mdp(3, 2, 3, seed, 0.25);
    const OptimalPlan plan = backward_induction(m);
    const oracle::BruteForce bf = oracle::enumerate_policies(m);
    ASSERT_EQ(bf.policies, 512u);
    EXPECT_NEAR(plan.values.v0, bf.best, 1e-10) << "seed " << seed;
    EXPECT_NEAR(oracle::policy_value(m, oracle::table_of(plan.policy)), bf.best, 1e-10);
  }
}

TEST(BackwardInduction, TiesGoToLowestAction) {
  const TabularMdp m(MdpDims{1, 3, 1}, {1.0, 1.0, 1.0}, {0.4, 0.7, 0.7}, 1.0, 0);
  EXPECT_EQ(backward_induction(m).policy.action(0, 0), 1);
}

TEST(EvaluatePolicy, GreedyPolicyAttainsOptimum) {
  const TabularMdp m = make_random_mdp(4, 3, 5, 7, 0.25);
  const OptimalPlan plan = backward_induction(m);
  EXPECT_NEAR(evaluate_policy(m, plan.policy).v0, plan.values.v0, 1e-12);
  EXPECT_NEAR(evaluate_policy(m, StochasticPolicy(plan.policy)).v0, plan.values.v0, 1e-12);
  EXPECT_NEAR(optimality_gap(m, plan.policy), 0.0, 1e-12);
}

TEST(EvaluatePolicy, ZeroRewardGivesZeroValues) {
  const TabularMdp m = chain(3, 4, 0.0);
  const ValueFunctions v = evaluate_policy(m, StochasticPolicy(3, 4, 2));
  for (double x : v.v) EXPECT_EQ(x, 0.0);
  for (double x : v.q) EXPECT_EQ(x, 0.0);
}

TEST(EvaluatePolicy, StochasticPolicyIsMixtureOfActions) {
  const TabularMdp m = make_random_mdp(3, 2, 3, 11, 0.25);
  StochasticPolicy rho(3, 3, 2);
  const std::vector<double> dist{0.3, 0.7};
  for (int h = 0; h < 3; ++h)
    for (int s = 0; s < 3; ++s) rho.set_distribution(s, h, dist);
  const ValueFunctions v = evaluate_policy(m, rho);
  // V(h,s) = sum_a rho(a) Q(h,s,a) and Q = mu + P V(h+1), checked cell by cell.
  for (int h = 0; h < 3; ++h)
    for (int s = 0; s < 3; ++s) {
      EXPECT_NEAR(v.v_at(h, s), 0.3 * v.q_at(h, s, 0) + 0.7 * v.q_at(h, s, 1), 1e-12);
      for (int a = 0; a < 2; ++a) {
        double q = m.reward_mean(h, s, a);
        if (h + 1 < 3)
          for (int n = 0; n < 3; ++n) q += m.transition(h, s, a, n) * v.v_at(h + 1, n);
        EXPECT_NEAR(v.q_at(h, s, a), q, 1e-12);
      }
    }
}

TEST(EvaluatePolicy, RiverSwimAlwaysLeft) {
  RiverSwimSpec spec;
  spec.length = 3;
  spec.horizon = 3;
  const TabularMdp m = make_riverswim(spec);
  const DeterministicPolicy left(3, 3, 2, 0);
  EXPECT_NEAR(evaluate_policy(m, left).v0, 3 * spec.left_reward, 1e-15);
}

TEST(Occupancy, SumsToOnePerStage) {
  const TabularMdp m = make_random_mdp(4, 3, 6, 3, 0.25);
  const OccupancyMeasure w = visitation_probabilities(m, StochasticPolicy(4, 6, 3));
  for (int h = 0; h < 6; ++h) {
    double total = 0;
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 3; ++a) total += w.at(h, s, a);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Occupancy, DeterministicChainIsAPointMass) {
  const TabularMdp m = chain(4, 4, 0.5);
  const DeterministicPolicy go(4, 4, 2, 0);
  const OccupancyMeasure w = visitation_probabilities(m, StochasticPolicy(go));
  for (int h = 0; h < 4; ++h) EXPECT_EQ(w.at(h, h, 0), 1.0);
}

TEST(Occupancy, MatchesRolloutFrequencies) {
  const TabularMdp m = make_random_mdp(3, 2, 4, 21, 0.25);
  const StochasticPolicy rho(3, 4, 2);
  const OccupancyMeasure w = visitation_probabilities(m, rho);
  const int n = 100000;
  std::vector<double> freq(w.w.size(), 0.0);
  RandomStream rng = make_stream(5);
  for (int i = 0; i < n; ++i) {
    const Trajectory tr = rollout(m, rho, rng);
    for (int h = 0; h < 4; ++h) freq[m.dims().sa_index(h, tr[h].state, tr[h].action)] += 1.0 / n;
  }
  for (std::size_t i = 0; i < freq.size(); ++i)
    EXPECT_LE(std::abs(freq[i] - w.w[i]), 3 * oracle::binomial_se(w.w[i], n) + 1e-12) << i;
}

TEST(Rollout, StartsAtInitAndHasHorizonLength) {
  const TabularMdp m = make_random_mdp(3, 2, 5, 2, 0.25);
  RandomStream rng = make_stream(1);
  for (int i = 0; i < 20; ++i) {
    const Trajectory tr = rollout(m, StochasticPolicy(3, 5, 2), rng);
    ASSERT_EQ(tr.size(), 5u);
    EXPECT_EQ(tr[0].state, m.init_state());
    for (int h = 0; h + 1 < 5; ++h) EXPECT_EQ(tr[h].next_state, tr[h + 1].state);
  }
}

TEST(Rollout, DeterministicChainIgnoresSeed) {
  const TabularMdp m = chain(5, 4, 0.5);
  const DeterministicPolicy go(5, 4, 2, 0);
  for (std::uint64_t seed : {1, 2, 3}) {
    RandomStream rng = make_stream(seed);
    const Trajectory tr = rollout(m, go, rng);
    for (int h = 0; h < 4; ++h) EXPECT_EQ(tr[h].state, h);
  }
}

TEST(Rollout, SameSeedSameTrajectory) {
  const TabularMdp m = make_random_mdp(3, 2, 5, 2, 0.25);
  RandomStream a = make_stream(9), b = make_stream(9);
  const Trajectory ta = rollout(m, StochasticPolicy(3, 5, 2), a);
  const Trajectory tb = rollout(m, StochasticPolicy(3, 5, 2), b);
  for (int h = 0; h < 5; ++h) {
    EXPECT_EQ(ta[h].state, tb[h].state);
    EXPECT_EQ(ta[h].action, tb[h].action);
    EXPECT_EQ(ta[h].reward, tb[h].reward);
  }
}

TEST(PerformanceFactor, Arithmetic) {
  EXPECT_DOUBLE_EQ(performance_factor(2.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(performance_factor(2.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(performance_factor(2.0, 1.0), 0.5);
  EXPECT_THROW(performance_factor(0.0, 0.0), std::domain_error);
  const TabularMdp lock = make_comblock(4, 3, 0.0, 0.25);
  EXPECT_DOUBLE_EQ(performance_factor(lock, backward_induction(lock).policy), 1.0);
  EXPECT_DOUBLE_EQ(performance_factor(lock, DeterministicPolicy(4, 4, 3, 1)), 0.0);
}

TEST(StartStateOptimal, Boundaries) {
  const TabularMdp lock = make_comblock(4, 2, 0.01, 0.25);
  const OptimalPlan plan = backward_induction(lock);
  EXPECT_TRUE(is_start_state_optimal(plan.values, evaluate_policy(lock, plan.policy).v0));
  DeterministicPolicy wrong = plan.policy;
  wrong.set_action(0, 0, 1);
  EXPECT_FALSE(is_start_state_optimal(plan.values, evaluate_policy(lock, wrong).v0));
  ValueFunctions v;
  v.v0 = 1.0;
  EXPECT_TRUE(is_start_state_optimal(v, 0.75, 0.25));
  EXPECT_FALSE(is_start_state_optimal(v, 0.75, 0.2));
}

TEST(StochasticPolicy, RejectsOffSimplex) {
  StochasticPolicy rho(2, 2, 2);
  const std::vector<double> bad{0.6, 0.6}, neg{-0.1, 1.1};
  EXPECT_THROW(rho.set_distribution(0, 0, bad), std::invalid_argument);
  EXPECT_THROW(rho.set_distribution(0, 0, neg), std::invalid_argument);
}
