#include "pips/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pips {

namespace {

struct MeanVar {
  double mean;
  double var;
};

MeanVar next_value_moments(std::span<const double> row, std::span<const double> next_v) {
  double mean = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) mean += row[i] * next_v[i];
  double var = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double d = next_v[i] - mean;
    var += row[i] * d * d;
  }
  return {mean, var};
}

}  // namespace

ExplorationRewardKernel exploration_reward(const ModelView& empirical,
                                           const PosteriorSample& challenger, long t, double alpha,
                                           double reward_variance) {
  const MdpDims& d = empirical.dims;
  if (challenger.dims != d) throw std::invalid_argument("challenger dimensions differ");
  if (t < 1) throw std::invalid_argument("episode index must be at least 1");
  if (!(reward_variance > 0.0)) throw std::invalid_argument("reward variance must be positive");

  const double floor = std::exp(-std::pow(static_cast<double>(t), alpha));
  ExplorationRewardKernel kernel{d, std::vector<double>(d.state_action_count())};
  for (int h = 0; h < d.horizon; ++h)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t i = d.sa_index(h, s, a);
        const double diff = empirical.rewards[i] - challenger.theta[i];
        const auto p_hat = empirical.row(h, s, a);
        double kl = 0.0;
        for (int n = 0; n < d.states; ++n) {
          const double p = p_hat[n];
          if (p <= 0.0) continue;
          kl += p * std::log(p / std::max(challenger.phi[i * d.states + n], floor));
        }
        kernel.values[i] = diff * diff / (2.0 * reward_variance) + std::max(0.0, kl);
      }
  return kernel;
}

AdaHedge::AdaHedge(int num_actions)
    : cumulative_(num_actions, 0.0), weights_(num_actions, 1.0 / num_actions) {
  if (num_actions <= 0) throw std::invalid_argument("AdaHedge needs at least one action");
}

double AdaHedge::learning_rate() const {
  if (gap_ <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(weights_.size())) / gap_;
}

double AdaHedge::mix(std::span<const double> cumulative, std::vector<double>& weights) const {
  const double eta = learning_rate();
  const double lowest = *std::min_element(cumulative.begin(), cumulative.end());
  double total = 0.0;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    weights[i] = std::isinf(eta) ? (cumulative[i] == lowest ? 1.0 : 0.0)
                                 : std::exp(-eta * (cumulative[i] - lowest));
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  if (std::isinf(eta)) return lowest;
  return lowest - std::log(total / static_cast<double>(cumulative.size())) / eta;
}

void AdaHedge::feed_losses(std::span<const double> losses) {
  if (losses.size() != cumulative_.size())
    throw std::invalid_argument("loss vector has the wrong number of actions");
  for (double l : losses)
    if (!std::isfinite(l)) throw std::invalid_argument("AdaHedge losses must be finite");

  std::vector<double> w(weights_.size());
  const double mix_before = mix(cumulative_, w);
  double hedge_loss = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) hedge_loss += w[i] * losses[i];
  for (std::size_t i = 0; i < losses.size(); ++i) cumulative_[i] += losses[i];
  const double mix_after = mix(cumulative_, w);
  gap_ += std::max(0.0, hedge_loss - (mix_after - mix_before));
  mix(cumulative_, weights_);
}

void AdaHedge::feed_gains(std::span<const double> gains) {
  std::vector<double> losses(gains.size());
  std::transform(gains.begin(), gains.end(), losses.begin(), [](double g) { return -g; });
  feed_losses(losses);
}

AdaHedge adahedge_feed(AdaHedge learner, std::span<const double> gains) {
  learner.feed_gains(gains);
  return learner;
}

double TransitionThreshold::operator()(double n, double delta) const {
  if (scale == 0.0) return 0.0;
  const double base = std::log(1.0 / delta);
  if (num_states <= 1) return scale * base;
  const double k = num_states - 1.0;
  return scale * (base + k * std::log(std::numbers::e * (1.0 + n / k)));
}

ValueFunctions optimistic_policy_evaluation(const StochasticPolicy& policy,
                                            const ExplorationRewardKernel& kernel,
                                            const ModelView& empirical, const VisitCounts& counts,
                                            const TransitionThreshold& beta_p, double delta) {
  const MdpDims& d = empirical.dims;
  if (kernel.dims != d || counts.dims() != d || policy.num_states() != d.states ||
      policy.num_actions() != d.actions || policy.horizon() != d.horizon)
    throw std::invalid_argument("optimistic_policy_evaluation: dimension mismatch");

  ValueFunctions out{d, std::vector<double>(d.state_action_count()),
                     std::vector<double>(static_cast<std::size_t>(d.horizon) * d.states), 0.0};
  const std::vector<double> zeros(d.states, 0.0);
  for (int h = d.horizon - 1; h >= 0; --h) {
    const std::span<const double> next_v =
        h + 1 < d.horizon
            ? std::span<const double>(out.v).subspan(d.state_index(h + 1, 0), d.states)
            : std::span<const double>(zeros);
    const double range = *std::max_element(next_v.begin(), next_v.end());
    for (int s = 0; s < d.states; ++s) {
      const auto rho = policy.distribution(s, h);
      double v = 0.0;
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t i = d.sa_index(h, s, a);
        const double n = static_cast<double>(counts.visits(h, s, a));
        const double denom = std::max(1.0, n);
        const double beta = beta_p(n, delta);
        const auto [mean, var] = next_value_moments(empirical.row(h, s, a), next_v);
        out.q[i] = kernel.values[i] + mean + 2.0 * range * beta / (3.0 * denom) +
                   std::sqrt(2.0 * var * beta / denom);
        v += rho[a] * out.q[i];
      }
      out.v[d.state_index(h, s)] = v;
    }
  }
  out.v0 = out.v[d.state_index(0, empirical.init_state)];
  return out;
}

ValueFunctions optimistic_policy_evaluation(long t, const StochasticPolicy& policy,
                                            const ExplorationRewardKernel& kernel,
                                            const ModelView& empirical, const VisitCounts& counts,
                                            const BonusParams& params) {
  if (t < 1) throw std::invalid_argument("episode index must be at least 1");
  const double td = static_cast<double>(t);
  return optimistic_policy_evaluation(policy, kernel, empirical, counts, params.beta_p,
                                      1.0 / (td * td * td));
}

ExplorerState::ExplorerState(MdpDims dims)
    : dims_(dims),
      learners_(static_cast<std::size_t>(dims.states) * dims.horizon, AdaHedge(dims.actions)) {}

StochasticPolicy compute_exploration_policy(long t, const StochasticPolicy& policy,
                                            const ExplorationRewardKernel& kernel,
                                            const ModelView& empirical, const VisitCounts& counts,
                                            const BonusParams& params, ExplorerState& learners) {
  const MdpDims& d = empirical.dims;
  if (learners.dims() != d) throw std::invalid_argument("learner grid dimension mismatch");
  const ValueFunctions q = optimistic_policy_evaluation(t, policy, kernel, empirical, counts, params);
  StochasticPolicy next(d.states, d.horizon, d.actions);
  for (int h = 0; h < d.horizon; ++h)
    for (int s = 0; s < d.states; ++s) {
      AdaHedge& learner = learners.learner(s, h);
      learner.feed_gains(std::span<const double>(q.q).subspan(d.sa_index(h, s, 0), d.actions));
      next.set_distribution(s, h, learner.distribution());
    }
  return next;
}

DeterministicPolicy forced_exploration_for_target(long t, int state, int action, int stage,
                                                  const ModelView& empirical,
                                                  const VisitCounts& counts,
                                                  const TransitionThreshold& beta_p) {
  const MdpDims& d = empirical.dims;
  if (t < 1) throw std::invalid_argument("episode index must be at least 1");
  const double td = static_cast<double>(t);
  const double delta = 1.0 / (td * td * td);
  DeterministicPolicy greedy(d.states, d.horizon, d.actions);
  std::vector<double> v_next(d.states, 0.0), v_cur(d.states, 0.0);
  for (int h = d.horizon - 1; h >= 0; --h) {
    for (int s = 0; s < d.states; ++s) {
      int best = 0;
      double best_q = -INFINITY;
      for (int a = 0; a < d.actions; ++a) {
        const double n = static_cast<double>(counts.visits(h, s, a));
        const double denom = std::max(1.0, n);
        const double beta = beta_p(n, delta);
        const auto [mean, var] = next_value_moments(empirical.row(h, s, a), v_next);
        const double bonus =
            std::sqrt(2.0 * var * beta / denom) + 2.0 * beta / (3.0 * denom);
        const double reward = (s == state && a == action && h == stage) ? 1.0 : 0.0;
        const double q = reward + mean + std::min(bonus, 1.0);
        if (q > best_q) {
          best_q = q;
          best = a;
        }
      }
      v_cur[s] = best_q;
      greedy.set_action(s, h, best);
    }
    std::swap(v_cur, v_next);
  }
  return greedy;
}

ForcedExploration forced_exploration_policy(long t, const ModelView& empirical,
                                            const VisitCounts& counts, const BonusParams& params,
                                            RandomStream& rng) {
  const MdpDims& d = empirical.dims;
  const auto cell = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(d.state_action_count()));
  const std::size_t index = std::min(cell, d.state_action_count() - 1);
  const int a = static_cast<int>(index % d.actions);
  const int s = static_cast<int>((index / d.actions) % d.states);
  const int h = static_cast<int>(index / (static_cast<std::size_t>(d.actions) * d.states));
  return {forced_exploration_for_target(t, s, a, h, empirical, counts, params.beta_p), s, a, h};
}

bool draw_forced_switch(long t, double gamma, RandomStream& rng) {
  if (t < 1) throw std::invalid_argument("episode index must be at least 1");
  return bernoulli(std::pow(static_cast<double>(t), -gamma), rng);
}

StochasticPolicy mix_policy(const StochasticPolicy& exploration, const DeterministicPolicy& forced,
                            long t, double gamma, RandomStream& rng) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  return draw_forced_switch(t, gamma, rng) ? StochasticPolicy(forced) : exploration;
}

}  // namespace pips
