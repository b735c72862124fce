#include "pips/posterior.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pips {

VisitCounts::VisitCounts(MdpDims dims)
    : dims_(dims),
      visits_(dims.state_action_count(), 0),
      transitions_(dims.state_action_count() * dims.states, 0),
      reward_sums_(dims.state_action_count(), 0.0) {
  dims_.validate();
}

void VisitCounts::add(int h, int s, int a, int next, double reward, std::uint64_t times) {
  if (h < 0 || h >= dims_.horizon || s < 0 || s >= dims_.states || a < 0 ||
      a >= dims_.actions || next < 0 || next >= dims_.states)
    throw std::out_of_range("VisitCounts::add: index out of range");
  visits_[dims_.sa_index(h, s, a)] += times;
  transitions_[dims_.sas_index(h, s, a, next)] += times;
  reward_sums_[dims_.sa_index(h, s, a)] += reward;
}

void VisitCounts::record(const Trajectory& trajectory) {
  if (static_cast<int>(trajectory.size()) != dims_.horizon)
    throw std::invalid_argument("trajectory length differs from the horizon");
  for (int h = 0; h < dims_.horizon; ++h) {
    const Transition& step = trajectory[h];
    add(h, step.state, step.action, step.next_state, step.reward);
  }
  ++episodes_;
}

void VisitCounts::write(std::ostream& out) const {
  out << "# states=" << dims_.states << " actions=" << dims_.actions
      << " horizon=" << dims_.horizon << " episodes=" << episodes_ << '\n';
  out << "kind,h,s,a,s_next,value\n";
  for (int h = 0; h < dims_.horizon; ++h)
    for (int s = 0; s < dims_.states; ++s)
      for (int a = 0; a < dims_.actions; ++a) {
        if (visits(h, s, a) == 0) continue;
        for (int n = 0; n < dims_.states; ++n) {
          const auto c = transitions(h, s, a, n);
          if (c) out << "T," << h << ',' << s << ',' << a << ',' << n << ',' << c << '\n';
        }
        std::ostringstream sum;
        sum << std::setprecision(17) << reward_sum(h, s, a);
        out << "R," << h << ',' << s << ',' << a << ",," << sum.str() << '\n';
      }
}

VisitCounts VisitCounts::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error("counts checkpoint: missing dimension header");
  MdpDims dims;
  std::uint64_t episodes = 0;
  if (std::sscanf(line.c_str(), "# states=%d actions=%d horizon=%d episodes=%" SCNu64, &dims.states,
                  &dims.actions, &dims.horizon, &episodes) != 4)
    throw std::runtime_error("counts checkpoint: malformed dimension header");
  VisitCounts counts(dims);
  counts.episodes_ = episodes;
  if (!std::getline(in, line) || line != "kind,h,s,a,s_next,value")
    throw std::runtime_error("counts checkpoint: missing column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind, h, s, a, next, value;
    std::getline(fields, kind, ',');
    std::getline(fields, h, ',');
    std::getline(fields, s, ',');
    std::getline(fields, a, ',');
    std::getline(fields, next, ',');
    std::getline(fields, value);
    const int hi = std::stoi(h), si = std::stoi(s), ai = std::stoi(a);
    if (kind == "T") {
      const int ni = std::stoi(next);
      const auto c = std::stoull(value);
      if (ni < 0 || ni >= dims.states || hi < 0 || hi >= dims.horizon || si < 0 ||
          si >= dims.states || ai < 0 || ai >= dims.actions)
        throw std::runtime_error("counts checkpoint: index out of range");
      counts.visits_[dims.sa_index(hi, si, ai)] += c;
      counts.transitions_[dims.sas_index(hi, si, ai, ni)] += c;
    } else if (kind == "R") {
      if (hi < 0 || hi >= dims.horizon || si < 0 || si >= dims.states || ai < 0 ||
          ai >= dims.actions)
        throw std::runtime_error("counts checkpoint: index out of range");
      counts.reward_sums_[dims.sa_index(hi, si, ai)] = std::stod(value);
    } else {
      throw std::runtime_error("counts checkpoint: unknown row kind '" + kind + "'");
    }
  }
  return counts;
}

VisitCounts record_episode(VisitCounts counts, const Trajectory& trajectory) {
  counts.record(trajectory);
  return counts;
}

TabularMdp empirical_mdp(const VisitCounts& counts, int init_state, double reward_std) {
  const MdpDims& d = counts.dims();
  std::vector<double> p(d.state_action_count() * d.states);
  std::vector<double> mu(d.state_action_count());
  for (int h = 0; h < d.horizon; ++h)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t i = d.sa_index(h, s, a);
        const auto n = counts.visits(h, s, a);
        const auto row = counts.transition_counts(h, s, a);
        for (int next = 0; next < d.states; ++next)
          p[i * d.states + next] =
              n > 0 ? static_cast<double>(row[next]) / static_cast<double>(n) : 1.0 / d.states;
        mu[i] = n > 0 ? counts.reward_sum(h, s, a) / static_cast<double>(n) : kUnvisitedRewardMean;
      }
  return TabularMdp(d, std::move(p), std::move(mu), reward_std, init_state, RewardDomain::kAnyReal);
}

void PosteriorParams::validate() const {
  if (!(inflation > 0.0 && inflation <= 1.0))
    throw std::invalid_argument("posterior inflation must lie in (0, 1]");
  if (!(dirichlet_prior > 0.0)) throw std::invalid_argument("Dirichlet prior must be positive");
  if (!(reward_variance > 0.0)) throw std::invalid_argument("reward variance must be positive");
}

void sample_mdp_into(const VisitCounts& counts, const PosteriorParams& params, int init_state,
                     RandomStream& rng, PosteriorSample& out) {
  const MdpDims& d = counts.dims();
  out.dims = d;
  out.init_state = init_state;
  out.theta.resize(d.state_action_count());
  out.phi.resize(d.state_action_count() * d.states);
  std::vector<double> concentration(d.states);
  const double sigma = std::sqrt(params.reward_variance);
  for (int h = 0; h < d.horizon; ++h)
    for (int s = 0; s < d.states; ++s)
      for (int a = 0; a < d.actions; ++a) {
        const std::size_t i = d.sa_index(h, s, a);
        const auto row = counts.transition_counts(h, s, a);
        for (int next = 0; next < d.states; ++next)
          concentration[next] =
              params.dirichlet_prior + params.inflation * static_cast<double>(row[next]);
        sample_dirichlet(concentration,
                         std::span<double>(out.phi).subspan(i * d.states, d.states), rng);

        const auto n = counts.visits(h, s, a);
        if (n == 0) {
          out.theta[i] = uniform01(rng);
        } else {
          const double nd = static_cast<double>(n);
          const double mean = counts.reward_sum(h, s, a) / nd;
          const double sd = sigma / std::sqrt(params.inflation * nd);
          out.theta[i] = sample_truncated_normal(mean, sd, 0.0, 1.0, rng);
        }
      }
}

PosteriorSample sample_mdp(const VisitCounts& counts, const PosteriorParams& params,
                           int init_state, RandomStream& rng) {
  PosteriorSample out;
  sample_mdp_into(counts, params, init_state, rng, out);
  return out;
}

ChallengerResult find_challenger(const VisitCounts& counts, const DeterministicPolicy& policy,
                                 const PosteriorParams& params, std::uint64_t budget,
                                 int init_state, RandomStream& rng, double gap_tolerance) {
  if (budget == 0) throw std::invalid_argument("challenger budget must be at least 1");
  params.validate();
  ChallengerResult result;
  result.budget = budget;
  for (std::uint64_t k = 1; k <= budget; ++k) {
    sample_mdp_into(counts, params, init_state, rng, result.sample);
    result.draws = k;
    if (optimality_gap(result.sample, policy) > gap_tolerance) {
      result.found = true;
      return result;
    }
  }
  return result;
}

double alt_mass_estimate(const VisitCounts& counts, const DeterministicPolicy& policy,
                         const PosteriorParams& params, std::uint64_t draws, int init_state,
                         RandomStream& rng, double gap_tolerance) {
  if (draws == 0) throw std::invalid_argument("alt_mass_estimate needs at least one draw");
  params.validate();
  PosteriorSample sample;
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < draws; ++i) {
    sample_mdp_into(counts, params, init_state, rng, sample);
    if (optimality_gap(sample, policy) > gap_tolerance) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace pips
