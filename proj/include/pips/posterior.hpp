#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pips/mdp.hpp"
#include "pips/random.hpp"

namespace pips {

/// Sufficient statistics of all observed episodes: visit counts n(s,a,h),
/// transition counts n(s'|s,a,h) and reward sums. Counts only grow.
class VisitCounts {
 public:
  VisitCounts() = default;
  explicit VisitCounts(MdpDims dims);

  const MdpDims& dims() const { return dims_; }
  std::uint64_t episodes() const { return episodes_; }

  std::uint64_t visits(int h, int s, int a) const { return visits_[dims_.sa_index(h, s, a)]; }
  std::uint64_t transitions(int h, int s, int a, int next) const {
    return transitions_[dims_.sas_index(h, s, a, next)];
  }
  std::span<const std::uint64_t> transition_counts(int h, int s, int a) const {
    return std::span<const std::uint64_t>(transitions_).subspan(dims_.sas_index(h, s, a, 0),
                                                                dims_.states);
  }
  double reward_sum(int h, int s, int a) const { return reward_sums_[dims_.sa_index(h, s, a)]; }

  /// Adds `times` identical transitions whose rewards total `reward`; used by
  /// record() and by tests that build count tables directly.
  void add(int h, int s, int a, int next, double reward, std::uint64_t times = 1);
  /// Adds a whole episode; throws when its length differs from the horizon.
  void record(const Trajectory& trajectory);

  /// Columnar text checkpoint: header `kind,h,s,a,s_next,value`, one `T` row
  /// per nonzero transition count and one `R` row per visited (s,a,h) holding
  /// the reward sum (printed with 17 significant digits).
  void write(std::ostream& out) const;
  static VisitCounts read(std::istream& in);

  friend bool operator==(const VisitCounts&, const VisitCounts&) = default;

 private:
  MdpDims dims_;
  std::vector<std::uint64_t> visits_;
  std::vector<std::uint64_t> transitions_;
  std::vector<double> reward_sums_;
  std::uint64_t episodes_ = 0;
};

VisitCounts record_episode(VisitCounts counts, const Trajectory& trajectory);

/// Prior mean of the Uniform(0, 1) reward prior, used for unvisited (s,a,h).
inline constexpr double kUnvisitedRewardMean = 0.5;

/// Empirical MDP: p_hat = n(s'|s,a,h) / n(s,a,h) (uniform 1/S when unvisited),
/// mu_hat = reward_sum / n (1/2 when unvisited).
TabularMdp empirical_mdp(const VisitCounts& counts, int init_state, double reward_std);

struct PosteriorParams {
  double inflation = 1.0;        ///< eta_t in (0, 1]; counts are scaled by it
  double dirichlet_prior = 1.0;  ///< u > 0, shared by every component
  double reward_variance = 1.0;  ///< known sigma^2 of the reward noise

  void validate() const;
};

/// One MDP drawn from the (inflated) posterior; same layout as TabularMdp.
struct PosteriorSample {
  MdpDims dims;
  int init_state = 0;
  std::vector<double> theta;  ///< reward means, (h, s, a)
  std::vector<double> phi;    ///< transitions, (h, s, a, s')

  ModelView view() const { return ModelView(dims, phi, theta, init_state); }
  operator ModelView() const { return view(); }  // NOLINT
};

/// Draws every row from Dirichlet(u + eta * n(.|s,a,h)) and every reward mean
/// from Normal(mu_hat, sigma^2 / (eta * n)) truncated to [0, 1]; unvisited
/// reward means come from the Uniform(0, 1) prior.
PosteriorSample sample_mdp(const VisitCounts& counts, const PosteriorParams& params,
                           int init_state, RandomStream& rng);
/// Same draw, reusing `out`'s storage.
void sample_mdp_into(const VisitCounts& counts, const PosteriorParams& params, int init_state,
                     RandomStream& rng, PosteriorSample& out);

struct ChallengerResult {
  bool found = false;
  std::uint64_t draws = 0;   ///< k when found, otherwise the budget
  std::uint64_t budget = 0;
  /// The challenger when found; otherwise the last draw of the search.
  PosteriorSample sample;
};

/// Draws i.i.d. posterior samples until `policy` is more than `gap_tolerance`
/// suboptimal at the start state of a draw, or `budget` draws were made.
ChallengerResult find_challenger(const VisitCounts& counts, const DeterministicPolicy& policy,
                                 const PosteriorParams& params, std::uint64_t budget,
                                 int init_state, RandomStream& rng, double gap_tolerance = 0.0);

/// Fraction of `draws` posterior samples in which `policy` is start-state
/// suboptimal (gap > gap_tolerance).
double alt_mass_estimate(const VisitCounts& counts, const DeterministicPolicy& policy,
                         const PosteriorParams& params, std::uint64_t draws, int init_state,
                         RandomStream& rng, double gap_tolerance = 0.0);

}  // namespace pips
