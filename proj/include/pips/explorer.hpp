#pragma once

#include <span>
#include <vector>

#include "pips/mdp.hpp"
#include "pips/posterior.hpp"
#include "pips/random.hpp"

namespace pips {

/// Per-(s,a,h) exploration reward, laid out (h, s, a).
struct ExplorationRewardKernel {
  MdpDims dims;
  std::vector<double> values;

  double at(int h, int s, int a) const { return values[dims.sa_index(h, s, a)]; }
};

/// (mu_hat - theta)^2 / (2 sigma^2) + sum_s' p_hat log(p_hat / max(Phi, exp(-t^alpha))),
/// with 0 log 0 = 0. The transition term is floored at zero: the clipped
/// challenger row can carry mass above one, which would otherwise let the
/// sum go slightly negative.
ExplorationRewardKernel exploration_reward(const ModelView& empirical,
                                           const PosteriorSample& challenger, long t, double alpha,
                                           double reward_variance);

/// Parameter-free exponential weights (AdaHedge). The learning rate is
/// ln(K) / Delta where Delta is the accumulated mixability gap; while Delta is
/// zero the learner follows the leader.
class AdaHedge {
 public:
  explicit AdaHedge(int num_actions);

  /// One round with a loss vector; throws std::invalid_argument on non-finite entries.
  void feed_losses(std::span<const double> losses);
  /// Gains are negated into losses.
  void feed_gains(std::span<const double> gains);

  std::span<const double> distribution() const { return weights_; }
  std::span<const double> cumulative_loss() const { return cumulative_; }
  double mixability_gap() const { return gap_; }
  /// +infinity while the mixability gap is zero.
  double learning_rate() const;
  int num_actions() const { return static_cast<int>(weights_.size()); }

 private:
  // Normalized weights and the mix loss for cumulative losses L.
  double mix(std::span<const double> cumulative, std::vector<double>& weights) const;

  std::vector<double> cumulative_;
  std::vector<double> weights_;
  double gap_ = 0.0;
};

AdaHedge adahedge_feed(AdaHedge learner, std::span<const double> gains);

/// Self-normalized categorical threshold
/// beta(n, delta) = log(1/delta) + (S-1) log(e (1 + n/(S-1))), times `scale`
/// (scale 0 switches the confidence bonuses off).
struct TransitionThreshold {
  int num_states = 1;
  double scale = 1.0;

  double operator()(double n, double delta) const;
};

struct BonusParams {
  TransitionThreshold beta_p;
  double alpha = 0.25;  ///< challenger clipping exponent, in (0, 1/2)
  double gamma = 0.5;   ///< forced-exploration mixing exponent, in (0, 1)
};

/// Q of `policy` under reward `kernel` and transitions `empirical`, inflated by
/// Bernstein bonuses at confidence `delta`:
///   Q(s,a,h) = r + p_hat V(h+1) + 2 g_h beta / (3 max(1,n)) + sqrt(2 Var beta / max(1,n)),
/// with g_h = max_s V(s, h+1).
ValueFunctions optimistic_policy_evaluation(const StochasticPolicy& policy,
                                            const ExplorationRewardKernel& kernel,
                                            const ModelView& empirical, const VisitCounts& counts,
                                            const TransitionThreshold& beta_p, double delta);
/// Episode-t form: confidence 1/t^3.
ValueFunctions optimistic_policy_evaluation(long t, const StochasticPolicy& policy,
                                            const ExplorationRewardKernel& kernel,
                                            const ModelView& empirical, const VisitCounts& counts,
                                            const BonusParams& params);

/// S x H AdaHedge learners, one per (state, stage), indexed h * S + s.
class ExplorerState {
 public:
  ExplorerState() = default;
  explicit ExplorerState(MdpDims dims);

  AdaHedge& learner(int s, int h) { return learners_[dims_.state_index(h, s)]; }
  const AdaHedge& learner(int s, int h) const { return learners_[dims_.state_index(h, s)]; }
  const MdpDims& dims() const { return dims_; }

 private:
  MdpDims dims_;
  std::vector<AdaHedge> learners_;
};

/// Optimistic evaluation of `policy`, then one AdaHedge round per (s,h) with
/// gains Q(s, ., h); returns the next exploration policy.
StochasticPolicy compute_exploration_policy(long t, const StochasticPolicy& policy,
                                            const ExplorationRewardKernel& kernel,
                                            const ModelView& empirical, const VisitCounts& counts,
                                            const BonusParams& params, ExplorerState& learners);

struct ForcedExploration {
  DeterministicPolicy policy;
  int target_state = 0;
  int target_action = 0;
  int target_stage = 0;
};

/// Greedy policy of one optimistic value-iteration sweep for the indicator
/// reward of (state, action, stage); bonuses are clipped at 1.
DeterministicPolicy forced_exploration_for_target(long t, int state, int action, int stage,
                                                  const ModelView& empirical,
                                                  const VisitCounts& counts,
                                                  const TransitionThreshold& beta_p);
/// Draws the target (s, a, h) uniformly, then plans for it.
ForcedExploration forced_exploration_policy(long t, const ModelView& empirical,
                                            const VisitCounts& counts, const BonusParams& params,
                                            RandomStream& rng);

/// Z ~ Bernoulli(t^-gamma).
bool draw_forced_switch(long t, double gamma, RandomStream& rng);

/// Whole-episode switch: returns `forced` when Z_t = 1, else `exploration`.
StochasticPolicy mix_policy(const StochasticPolicy& exploration, const DeterministicPolicy& forced,
                            long t, double gamma, RandomStream& rng);

}  // namespace pips
