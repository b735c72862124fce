#include "pips/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pips/random.hpp"

namespace pips {

TabularMdp make_comblock(int horizon, int actions, double slip, double reward_variance,
                         bool clamp) {
  if (horizon < 2 || actions < 2) throw std::invalid_argument("CombinationLock needs H >= 2, A >= 2");
  if (!(slip >= 0.0 && slip <= 1.0)) throw std::invalid_argument("slip must lie in [0, 1]");
  const MdpDims d{horizon, actions, horizon};
  const int terminal = horizon - 1;
  std::vector<double> p(d.state_action_count() * d.states, 0.0);
  std::vector<double> mu(d.state_action_count(), 0.0);
  for (int h = 0; h < horizon; ++h)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < actions; ++a) {
        const std::size_t row = d.sas_index(h, s, a, 0);
        if (s == terminal) {
          p[row + terminal] = 1.0;
          mu[d.sa_index(h, s, a)] = 1.0;
        } else if (a == 0) {
          p[row + s + 1] += 1.0 - slip;
          p[row + 0] += slip;
        } else {
          p[row + 0] = 1.0;
        }
      }
  return TabularMdp(d, std::move(p), std::move(mu), std::sqrt(reward_variance), 0,
                    clamp ? RewardDomain::kClamp : RewardDomain::kClosed);
}

TabularMdp make_riverswim(const RiverSwimSpec& spec) {
  if (spec.length < 2) throw std::invalid_argument("RiverSwim needs L >= 2");
  if (spec.horizon < 1) throw std::invalid_argument("RiverSwim needs H >= 1");
  const double total = spec.advance + spec.stay + spec.back;
  if (spec.advance < 0 || spec.stay < 0 || spec.back < 0 || std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("RiverSwim current probabilities must form a distribution");
  const int L = spec.length;
  const MdpDims d{L, 2, spec.horizon};
  constexpr int kLeft = 0, kRight = 1;
  std::vector<double> p(d.state_action_count() * L, 0.0);
  std::vector<double> mu(d.state_action_count(), spec.filler_reward);
  for (int h = 0; h < d.horizon; ++h)
    for (int s = 0; s < L; ++s) {
      p[d.sas_index(h, s, kLeft, std::max(s - 1, 0))] = 1.0;
      const std::size_t right = d.sas_index(h, s, kRight, 0);
      p[right + std::min(s + 1, L - 1)] += spec.advance;
      p[right + s] += spec.stay;
      p[right + std::max(s - 1, 0)] += spec.back;
    }
  for (int h = 0; h < d.horizon; ++h) {
    mu[d.sa_index(h, 0, kLeft)] = spec.left_reward;
    mu[d.sa_index(h, L - 1, kRight)] = spec.right_reward;
  }
  return TabularMdp(d, std::move(p), std::move(mu), std::sqrt(spec.reward_variance), 0,
                    RewardDomain::kClamp);
}

TabularMdp make_moca(const MocaSpec& spec) {
  if (spec.length < 1) throw std::invalid_argument("MOCA needs L >= 1");
  if (!(spec.advance_prob > 0.0 && spec.advance_prob < 1.0))
    throw std::invalid_argument("MOCA advance probability must lie in (0, 1)");
  if (!(spec.optimal_reward > spec.other_reward))
    throw std::invalid_argument("MOCA needs a* to pay strictly more than the other actions");
  const int L = spec.length;
  const int horizon = spec.horizon > 0 ? spec.horizon : L + 1;
  const MdpDims d{L + 1, L + 1, horizon};
  const int best = L;  // a*
  std::vector<double> p(d.state_action_count() * d.states, 0.0);
  std::vector<double> mu(d.state_action_count(), spec.other_reward);
  for (int h = 0; h < horizon; ++h)
    for (int s = 0; s < d.states; ++s) {
      for (int a = 0; a < L; ++a) {
        const int target = s == 0 ? a + 1 : s;
        p[d.sas_index(h, s, a, target)] = 1.0;
      }
      const std::size_t row = d.sas_index(h, s, best, 0);
      if (s < L) {
        p[row + s + 1] = spec.advance_prob;
        p[row + s] = 1.0 - spec.advance_prob;
      } else {
        p[row + s] = 1.0;
      }
      mu[d.sa_index(h, s, best)] = spec.optimal_reward;
    }
  return TabularMdp(d, std::move(p), std::move(mu), std::sqrt(spec.reward_variance), 0,
                    RewardDomain::kStrict);
}

double min_weighted_action_gap(const TabularMdp& mdp) {
  const MdpDims& d = mdp.dims();
  const OptimalPlan plan = backward_induction(mdp);
  const OccupancyMeasure occ = visitation_probabilities(mdp, StochasticPolicy(plan.policy));
  double smallest = std::numeric_limits<double>::infinity();
  if (d.actions < 2) return smallest;
  for (int h = 0; h < d.horizon; ++h)
    for (int s = 0; s < d.states; ++s) {
      const double w = occ.state_at(h, s);
      if (w <= 0.0) continue;
      const double v = plan.values.v_at(h, s);
      double second = -INFINITY;
      for (int a = 0; a < d.actions; ++a)
        if (a != plan.policy.action(s, h)) second = std::max(second, plan.values.q_at(h, s, a));
      smallest = std::min(smallest, w * (v - second));
    }
  return smallest;
}

TabularMdp make_random_mdp(int states, int actions, int horizon, std::uint64_t seed,
                           double reward_variance) {
  const MdpDims d{states, actions, horizon};
  d.validate();
  RandomStream rng = make_stream(seed, {0x52414e44ULL});
  const std::vector<double> ones(states, 1.0);
  for (;;) {
    std::vector<double> p(d.state_action_count() * states);
    std::vector<double> mu(d.state_action_count());
    for (std::size_t row = 0; row < d.state_action_count(); ++row) {
      sample_dirichlet(ones, std::span<double>(p).subspan(row * states, states), rng);
      // Renormalize in long double so rows meet the 1e-12 invariant exactly.
      long double total = 0.0L;
      for (int n = 0; n < states; ++n) total += p[row * states + n];
      for (int n = 0; n < states; ++n) p[row * states + n] = static_cast<double>(p[row * states + n] / total);
    }
    for (double& m : mu) m = 0.1 + 0.8 * uniform01(rng);
    TabularMdp mdp(d, std::move(p), std::move(mu), std::sqrt(reward_variance), 0);
    if (min_weighted_action_gap(mdp) >= 1e-6) return mdp;
  }
}

TabularMdp make_env(const EnvSpec& spec) {
  struct Visitor {
    TabularMdp operator()(const MocaSpec& s) const { return make_moca(s); }
    TabularMdp operator()(const RiverSwimSpec& s) const { return make_riverswim(s); }
    TabularMdp operator()(const CombinationLockSpec& s) const {
      return make_comblock(s.horizon, s.actions, s.slip, s.reward_variance);
    }
    TabularMdp operator()(const RandomMdpSpec& s) const {
      return make_random_mdp(s.states, s.actions, s.horizon, s.seed, s.reward_variance);
    }
  };
  return std::visit(Visitor{}, spec);
}

std::string env_name(const EnvSpec& spec) {
  struct Visitor {
    std::string operator()(const MocaSpec&) const { return "moca"; }
    std::string operator()(const RiverSwimSpec&) const { return "riverswim"; }
    std::string operator()(const CombinationLockSpec&) const { return "comblock"; }
    std::string operator()(const RandomMdpSpec&) const { return "random"; }
  };
  return std::visit(Visitor{}, spec);
}

}  // namespace pips
