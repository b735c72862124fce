#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace pips {

/// Pseudo-random stream owned by a single run. mt19937_64 output is fully
/// specified by the standard, so streams replay identically everywhere.
using RandomStream = std::mt19937_64;

/// Builds a stream keyed by a seed and a tuple of integers (algorithm id,
/// run index, ...). The stream depends only on the key, never on the order in
/// which streams are created, so run i draws the same numbers whether runs
/// execute serially or on a worker pool.
RandomStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {});

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(RandomStream& rng);

bool bernoulli(double p, RandomStream& rng);

/// Index drawn from a probability vector (entries need not be normalized
/// exactly; zero-mass entries are never returned).
std::size_t sample_index(std::span<const double> probs, RandomStream& rng);

/// Dirichlet(concentration) draw via normalized Gamma variates. Shapes in
/// (0, 1) are supported.
void sample_dirichlet(std::span<const double> concentration, std::span<double> out,
                      RandomStream& rng);

/// Normal(mean, sd^2) truncated to [lo, hi], sampled by inverting the CDF on
/// the truncated interval. Stable when the interval lies far in one tail.
double sample_truncated_normal(double mean, double sd, double lo, double hi, RandomStream& rng);

double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace pips
