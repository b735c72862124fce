#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pips/random.hpp"

namespace pips {

/// Sizes of a tabular episodic MDP. Stages are 0-based internally: stage h in
/// [0, H) corresponds to step h + 1 of an episode.
struct MdpDims {
  int states = 0;
  int actions = 0;
  int horizon = 0;

  std::size_t state_action_count() const {
    return static_cast<std::size_t>(horizon) * states * actions;
  }
  std::size_t sa_index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * states + s) * actions + a;
  }
  std::size_t sas_index(int h, int s, int a, int next) const {
    return sa_index(h, s, a) * states + next;
  }
  std::size_t state_index(int h, int s) const { return static_cast<std::size_t>(h) * states + s; }

  void validate() const;
  friend bool operator==(const MdpDims&, const MdpDims&) = default;
};

/// How reward means outside the open unit interval are treated at construction.
enum class RewardDomain {
  kStrict,   ///< reject anything outside (0, 1)
  kClamp,    ///< clamp into [1e-9, 1 - 1e-9]
  kClosed,   ///< accept the closed interval [0, 1] (benchmarks with exact 0/1 rewards)
  kAnyReal,  ///< any finite value (empirical estimates from Gaussian rewards)
};

inline constexpr double kRewardClampMargin = 1e-9;

/// Stage-indexed tabular MDP with Gaussian rewards of known, shared std.
/// Immutable after construction.
class TabularMdp {
 public:
  /// `transitions` is laid out (h, s, a, s'); `reward_means` is laid out (h, s, a).
  /// Throws std::invalid_argument when rows are not distributions (1e-12) or
  /// rewards fall outside `domain`.
  TabularMdp(MdpDims dims, std::vector<double> transitions, std::vector<double> reward_means,
             double reward_std, int init_state, RewardDomain domain = RewardDomain::kStrict);

  const MdpDims& dims() const { return dims_; }
  int num_states() const { return dims_.states; }
  int num_actions() const { return dims_.actions; }
  int horizon() const { return dims_.horizon; }
  int init_state() const { return init_state_; }
  double reward_std() const { return reward_std_; }

  std::span<const double> transitions() const { return transitions_; }
  std::span<const double> reward_means() const { return reward_means_; }

  std::span<const double> next_state_distribution(int h, int s, int a) const {
    return std::span<const double>(transitions_).subspan(dims_.sas_index(h, s, a, 0),
                                                         dims_.states);
  }
  double transition(int h, int s, int a, int next) const {
    return transitions_[dims_.sas_index(h, s, a, next)];
  }
  double reward_mean(int h, int s, int a) const { return reward_means_[dims_.sa_index(h, s, a)]; }

 private:
  MdpDims dims_;
  std::vector<double> transitions_;
  std::vector<double> reward_means_;
  double reward_std_;
  int init_state_;
};

/// Non-owning view of a model's transition and reward tables. Planning and
/// evaluation take views so sampled MDPs can be solved without copying them
/// into a validated TabularMdp.
struct ModelView {
  MdpDims dims;
  std::span<const double> transitions;
  std::span<const double> rewards;
  int init_state = 0;

  ModelView(MdpDims d, std::span<const double> p, std::span<const double> r, int init)
      : dims(d), transitions(p), rewards(r), init_state(init) {}
  ModelView(const TabularMdp& mdp)  // NOLINT: implicit by design of the API
      : ModelView(mdp.dims(), mdp.transitions(), mdp.reward_means(), mdp.init_state()) {}

  std::span<const double> row(int h, int s, int a) const {
    return transitions.subspan(dims.sas_index(h, s, a, 0), dims.states);
  }
};

class DeterministicPolicy {
 public:
  DeterministicPolicy() = default;
  DeterministicPolicy(int states, int horizon, int actions, int fill = 0);

  int action(int s, int h) const { return actions_[static_cast<std::size_t>(h) * states_ + s]; }
  void set_action(int s, int h, int a);

  int num_states() const { return states_; }
  int horizon() const { return horizon_; }
  int num_actions() const { return num_actions_; }
  std::span<const int> table() const { return actions_; }

  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

 private:
  int states_ = 0;
  int horizon_ = 0;
  int num_actions_ = 0;
  std::vector<int> actions_;
};

class StochasticPolicy {
 public:
  StochasticPolicy() = default;
  /// Uniform over actions everywhere.
  StochasticPolicy(int states, int horizon, int actions);
  explicit StochasticPolicy(const DeterministicPolicy& policy);

  std::span<const double> distribution(int s, int h) const {
    return std::span<const double>(probs_).subspan(offset(s, h), actions_);
  }
  /// Replaces rho(.|s,h); throws unless `dist` is on the simplex (1e-12).
  void set_distribution(int s, int h, std::span<const double> dist);

  int num_states() const { return states_; }
  int horizon() const { return horizon_; }
  int num_actions() const { return actions_; }
  std::span<const double> table() const { return probs_; }

  friend bool operator==(const StochasticPolicy&, const StochasticPolicy&) = default;

 private:
  std::size_t offset(int s, int h) const {
    return (static_cast<std::size_t>(h) * states_ + s) * actions_;
  }
  int states_ = 0;
  int horizon_ = 0;
  int actions_ = 0;
  std::vector<double> probs_;
};

/// Q laid out (h, s, a), V laid out (h, s). V at stage H is identically zero
/// and not stored.
struct ValueFunctions {
  MdpDims dims;
  std::vector<double> q;
  std::vector<double> v;
  double v0 = 0.0;

  double q_at(int h, int s, int a) const { return q[dims.sa_index(h, s, a)]; }
  double v_at(int h, int s) const { return v[dims.state_index(h, s)]; }
};

struct OptimalPlan {
  ValueFunctions values;
  DeterministicPolicy policy;
};

/// w(s, a, h): probability of visiting (s, a) at stage h, laid out (h, s, a).
struct OccupancyMeasure {
  MdpDims dims;
  std::vector<double> w;

  double at(int h, int s, int a) const { return w[dims.sa_index(h, s, a)]; }
  double state_at(int h, int s) const;
};

struct Transition {
  int state;
  int action;
  double reward;
  int next_state;
};

/// One episode; step h of the vector is stage h.
using Trajectory = std::vector<Transition>;

/// Optimal Q*, V* by backward induction with the greedy policy; ties go to the
/// lowest action index.
OptimalPlan backward_induction(const ModelView& model);

ValueFunctions evaluate_policy(const ModelView& model, const StochasticPolicy& policy);
ValueFunctions evaluate_policy(const ModelView& model, const DeterministicPolicy& policy);

/// V*_0 - V^pi_0 computed in one backward sweep without materializing Q.
double optimality_gap(const ModelView& model, const DeterministicPolicy& policy);

OccupancyMeasure visitation_probabilities(const ModelView& model, const StochasticPolicy& policy);

/// Samples one episode from `init_state`; rewards are Gaussian around the
/// means with the MDP's reward std.
Trajectory rollout(const TabularMdp& mdp, const StochasticPolicy& policy, RandomStream& rng);
Trajectory rollout(const TabularMdp& mdp, const DeterministicPolicy& policy, RandomStream& rng);

/// 1 - (V*_0 - V^pi_0) / V*_0. Throws std::domain_error when V*_0 == 0.
double performance_factor(const TabularMdp& mdp, const StochasticPolicy& policy);
double performance_factor(const TabularMdp& mdp, const DeterministicPolicy& policy);
double performance_factor(double optimal_value, double policy_value);

/// True iff V*_0 - V^pi_0 <= tol (inclusive).
bool is_start_state_optimal(const ValueFunctions& optimal, double policy_value, double tol = 0.0);

}  // namespace pips
