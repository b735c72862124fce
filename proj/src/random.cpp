#include "pips/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace pips {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Far lower tail of the standard normal, truncated to [a, b] with b << 0:
// the density is ~ exp(|b| (x - b)) near b.
double lower_tail_exponential(double a, double b, RandomStream& rng) {
  const double rate = -b;
  for (;;) {
    const double e = -std::log1p(-uniform01(rng));
    const double z = b - e / rate;
    if (z >= a) return z;
  }
}

}  // namespace

RandomStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return RandomStream(h);
}

double uniform01(RandomStream& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool bernoulli(double p, RandomStream& rng) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return uniform01(rng) < p;
}

std::size_t sample_index(std::span<const double> probs, RandomStream& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_index: empty distribution");
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

void sample_dirichlet(std::span<const double> concentration, std::span<double> out,
                      RandomStream& rng) {
  if (concentration.size() != out.size())
    throw std::invalid_argument("sample_dirichlet: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::gamma_distribution<double> gamma(concentration[i], 1.0);
    out[i] = gamma(rng);
    total += out[i];
  }
  if (total > 0.0 && std::isfinite(total)) {
    for (double& x : out) x /= total;
    return;
  }
  // Every Gamma variate underflowed (all shapes tiny): the Dirichlet is then
  // essentially a point mass on one coordinate chosen proportionally to shape.
  std::fill(out.begin(), out.end(), 0.0);
  out[sample_index(concentration, rng)] = 1.0;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -INFINITY;
  if (p >= 1.0) return INFINITY;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double sample_truncated_normal(double mean, double sd, double lo, double hi, RandomStream& rng) {
  if (!(lo <= hi)) throw std::invalid_argument("sample_truncated_normal: empty interval");
  if (!(sd > 0.0) || !std::isfinite(sd)) return std::clamp(mean, lo, hi);

  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  // Mirror so the bulk of the interval sits in the lower half, where the CDF
  // is represented with full relative precision.
  const bool mirrored = a + b > 0.0;
  if (mirrored) {
    const double na = -b;
    b = -a;
    a = na;
  }

  double z;
  if (b < -35.0) {
    z = lower_tail_exponential(a, b, rng);
  } else {
    const double fa = normal_cdf(a);
    const double fb = normal_cdf(b);
    const double u = fa + uniform01(rng) * (fb - fa);
    z = std::clamp(normal_quantile(u), a, b);
  }
  if (mirrored) z = -z;
  return std::clamp(mean + sd * z, lo, hi);
}

}  // namespace pips
