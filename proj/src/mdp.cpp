#include "pips/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pips {

namespace {

void check_policy_dims(const MdpDims& dims, int states, int horizon, int actions) {
  if (dims.states != states || dims.horizon != horizon || dims.actions != actions)
    throw std::invalid_argument("policy dimensions do not match the MDP");
}

double expectation(std::span<const double> dist, const double* values) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) acc += dist[i] * values[i];
  return acc;
}

template <typename ActionProbs>
ValueFunctions evaluate_impl(const ModelView& model, ActionProbs&& probs) {
  const MdpDims& d = model.dims;
  ValueFunctions out{d, std::vector<double>(d.state_action_count()),
                     std::vector<double>(static_cast<std::size_t>(d.horizon) * d.states), 0.0};
  const std::vector<double> zeros(d.states, 0.0);
  for (int h = d.horizon - 1; h >= 0; --h) {
    const double* next_v = h + 1 < d.horizon ? &out.v[d.state_index(h + 1, 0)] : zeros.data();
    for (int s = 0; s < d.states; ++s) {
      double v = 0.0;
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t i = d.sa_index(h, s, a);
        out.q[i] = model.rewards[i] + expectation(model.row(h, s, a), next_v);
        v += probs(s, h, a) * out.q[i];
      }
      out.v[d.state_index(h, s)] = v;
    }
  }
  out.v0 = out.v[d.state_index(0, model.init_state)];
  return out;
}

}  // namespace

void MdpDims::validate() const {
  if (states <= 0 || actions <= 0 || horizon <= 0)
    throw std::invalid_argument("MDP dimensions must be positive");
}

TabularMdp::TabularMdp(MdpDims dims, std::vector<double> transitions,
                       std::vector<double> reward_means, double reward_std, int init_state,
                       RewardDomain domain)
    : dims_(dims),
      transitions_(std::move(transitions)),
      reward_means_(std::move(reward_means)),
      reward_std_(reward_std),
      init_state_(init_state) {
  dims_.validate();
  if (transitions_.size() != dims_.state_action_count() * dims_.states)
    throw std::invalid_argument("transition table has the wrong size");
  if (reward_means_.size() != dims_.state_action_count())
    throw std::invalid_argument("reward table has the wrong size");
  if (init_state_ < 0 || init_state_ >= dims_.states)
    throw std::invalid_argument("initial state out of range");
  if (!(reward_std_ >= 0.0) || !std::isfinite(reward_std_))
    throw std::invalid_argument("reward std must be a nonnegative finite number");

  for (std::size_t row = 0; row < dims_.state_action_count(); ++row) {
    double total = 0.0;
    for (int n = 0; n < dims_.states; ++n) {
      const double p = transitions_[row * dims_.states + n];
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::invalid_argument("transition probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("transition row " + std::to_string(row) +
                                  " does not sum to 1");
  }

  for (double& mu : reward_means_) {
    if (!std::isfinite(mu)) throw std::invalid_argument("reward means must be finite");
    switch (domain) {
      case RewardDomain::kStrict:
        if (!(mu > 0.0 && mu < 1.0))
          throw std::invalid_argument("reward means must lie in the open interval (0, 1)");
        break;
      case RewardDomain::kClamp:
        mu = std::clamp(mu, kRewardClampMargin, 1.0 - kRewardClampMargin);
        break;
      case RewardDomain::kClosed:
        if (!(mu >= 0.0 && mu <= 1.0))
          throw std::invalid_argument("reward means must lie in [0, 1]");
        break;
      case RewardDomain::kAnyReal:
        break;
    }
  }
}

DeterministicPolicy::DeterministicPolicy(int states, int horizon, int actions, int fill)
    : states_(states),
      horizon_(horizon),
      num_actions_(actions),
      actions_(static_cast<std::size_t>(states) * horizon, fill) {
  if (fill < 0 || fill >= actions) throw std::invalid_argument("action index out of range");
}

void DeterministicPolicy::set_action(int s, int h, int a) {
  if (a < 0 || a >= num_actions_) throw std::invalid_argument("action index out of range");
  actions_[static_cast<std::size_t>(h) * states_ + s] = a;
}

StochasticPolicy::StochasticPolicy(int states, int horizon, int actions)
    : states_(states),
      horizon_(horizon),
      actions_(actions),
      probs_(static_cast<std::size_t>(states) * horizon * actions, 1.0 / actions) {}

StochasticPolicy::StochasticPolicy(const DeterministicPolicy& policy)
    : states_(policy.num_states()),
      horizon_(policy.horizon()),
      actions_(policy.num_actions()),
      probs_(static_cast<std::size_t>(states_) * horizon_ * actions_, 0.0) {
  for (int h = 0; h < horizon_; ++h)
    for (int s = 0; s < states_; ++s) probs_[offset(s, h) + policy.action(s, h)] = 1.0;
}

void StochasticPolicy::set_distribution(int s, int h, std::span<const double> dist) {
  if (static_cast<int>(dist.size()) != actions_)
    throw std::invalid_argument("distribution has the wrong number of actions");
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw std::invalid_argument("negative action probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("action distribution does not sum to 1");
  std::copy(dist.begin(), dist.end(), probs_.begin() + static_cast<std::ptrdiff_t>(offset(s, h)));
}

double OccupancyMeasure::state_at(int h, int s) const {
  double acc = 0.0;
  for (int a = 0; a < dims.actions; ++a) acc += at(h, s, a);
  return acc;
}

OptimalPlan backward_induction(const ModelView& model) {
  const MdpDims& d = model.dims;
  OptimalPlan plan{ValueFunctions{d, std::vector<double>(d.state_action_count()),
                                  std::vector<double>(static_cast<std::size_t>(d.horizon) * d.states),
                                  0.0},
                   DeterministicPolicy(d.states, d.horizon, d.actions)};
  auto& vf = plan.values;
  const std::vector<double> zeros(d.states, 0.0);
  for (int h = d.horizon - 1; h >= 0; --h) {
    const double* next_v = h + 1 < d.horizon ? &vf.v[d.state_index(h + 1, 0)] : zeros.data();
    for (int s = 0; s < d.states; ++s) {
      int best = 0;
      double best_q = 0.0;
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t i = d.sa_index(h, s, a);
        vf.q[i] = model.rewards[i] + expectation(model.row(h, s, a), next_v);
        if (a == 0 || vf.q[i] > best_q) {
          best = a;
          best_q = vf.q[i];
        }
      }
      vf.v[d.state_index(h, s)] = best_q;
      plan.policy.set_action(s, h, best);
    }
  }
  vf.v0 = vf.v[d.state_index(0, model.init_state)];
  return plan;
}

ValueFunctions evaluate_policy(const ModelView& model, const StochasticPolicy& policy) {
  check_policy_dims(model.dims, policy.num_states(), policy.horizon(), policy.num_actions());
  return evaluate_impl(model, [&](int s, int h, int a) { return policy.distribution(s, h)[a]; });
}

ValueFunctions evaluate_policy(const ModelView& model, const DeterministicPolicy& policy) {
  check_policy_dims(model.dims, policy.num_states(), policy.horizon(), policy.num_actions());
  return evaluate_impl(
      model, [&](int s, int h, int a) { return policy.action(s, h) == a ? 1.0 : 0.0; });
}

double optimality_gap(const ModelView& model, const DeterministicPolicy& policy) {
  const MdpDims& d = model.dims;
  check_policy_dims(d, policy.num_states(), policy.horizon(), policy.num_actions());
  std::vector<double> v_star(d.states, 0.0), v_pi(d.states, 0.0);
  std::vector<double> next_star(d.states, 0.0), next_pi(d.states, 0.0);
  for (int h = d.horizon - 1; h >= 0; --h) {
    std::swap(v_star, next_star);
    std::swap(v_pi, next_pi);
    for (int s = 0; s < d.states; ++s) {
      const int chosen = policy.action(s, h);
      double best = -INFINITY;
      for (int a = 0; a < d.actions; ++a) {
        const auto row = model.row(h, s, a);
        const double q = model.rewards[d.sa_index(h, s, a)] + expectation(row, next_star.data());
        best = std::max(best, q);
        if (a == chosen) v_pi[s] = model.rewards[d.sa_index(h, s, a)] + expectation(row, next_pi.data());
      }
      v_star[s] = best;
    }
  }
  return v_star[model.init_state] - v_pi[model.init_state];
}

OccupancyMeasure visitation_probabilities(const ModelView& model, const StochasticPolicy& policy) {
  const MdpDims& d = model.dims;
  check_policy_dims(d, policy.num_states(), policy.horizon(), policy.num_actions());
  OccupancyMeasure occ{d, std::vector<double>(d.state_action_count(), 0.0)};
  std::vector<double> state_prob(d.states, 0.0), next_prob(d.states, 0.0);
  state_prob[model.init_state] = 1.0;
  for (int h = 0; h < d.horizon; ++h) {
    std::fill(next_prob.begin(), next_prob.end(), 0.0);
    for (int s = 0; s < d.states; ++s) {
      if (state_prob[s] == 0.0) continue;
      const auto dist = policy.distribution(s, h);
      for (int a = 0; a < d.actions; ++a) {
        const double w = state_prob[s] * dist[a];
        occ.w[d.sa_index(h, s, a)] = w;
        if (w == 0.0) continue;
        const auto row = model.row(h, s, a);
        for (int n = 0; n < d.states; ++n) next_prob[n] += w * row[n];
      }
    }
    std::swap(state_prob, next_prob);
  }
  return occ;
}

Trajectory rollout(const TabularMdp& mdp, const StochasticPolicy& policy, RandomStream& rng) {
  const MdpDims& d = mdp.dims();
  check_policy_dims(d, policy.num_states(), policy.horizon(), policy.num_actions());
  std::normal_distribution<double> noise(0.0, 1.0);
  Trajectory traj;
  traj.reserve(d.horizon);
  int s = mdp.init_state();
  for (int h = 0; h < d.horizon; ++h) {
    const int a = static_cast<int>(sample_index(policy.distribution(s, h), rng));
    const double r = mdp.reward_mean(h, s, a) + mdp.reward_std() * noise(rng);
    const int next = static_cast<int>(sample_index(mdp.next_state_distribution(h, s, a), rng));
    traj.push_back({s, a, r, next});
    s = next;
  }
  return traj;
}

Trajectory rollout(const TabularMdp& mdp, const DeterministicPolicy& policy, RandomStream& rng) {
  return rollout(mdp, StochasticPolicy(policy), rng);
}

double performance_factor(double optimal_value, double policy_value) {
  if (optimal_value == 0.0)
    throw std::domain_error("performance factor is undefined when the optimal value is 0");
  return 1.0 - (optimal_value - policy_value) / optimal_value;
}

double performance_factor(const TabularMdp& mdp, const StochasticPolicy& policy) {
  return performance_factor(backward_induction(mdp).values.v0, evaluate_policy(mdp, policy).v0);
}

double performance_factor(const TabularMdp& mdp, const DeterministicPolicy& policy) {
  return performance_factor(backward_induction(mdp).values.v0, evaluate_policy(mdp, policy).v0);
}

bool is_start_state_optimal(const ValueFunctions& optimal, double policy_value, double tol) {
  return optimal.v0 - policy_value <= tol;
}

}  // namespace pips
