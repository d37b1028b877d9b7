#pragma once

#include <cstdint>
#include <vector>

#include "wassquant/measures.hpp"
#include "wassquant/samplers.hpp"

namespace wassquant {

struct LloydConfig {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t restarts = 1;
  std::size_t max_iters = 200;
  double rel_tol = 1e-7;  // stop once the relative cost improvement falls below

  void validate() const;
};

struct QuantizerResult {
  Codebook codebook;
  double empirical_cost;     // (1/n) sum_i d(x_i, codebook)^2
  std::size_t iterations;    // Lloyd updates in the winning restart
  std::size_t restart_index;
  std::vector<double> cost_trace;  // winning restart's cost after each step
};

/// k-means++ seeding: first center uniform over the sample, each further
/// center drawn with probability proportional to the squared distance to the
/// centers chosen so far.
Codebook kmeanspp_init(const PointSet& sample, std::size_t k,
                       std::uint64_t seed);

/// Best of `restarts` k-means++ + Lloyd runs (ties go to the lowest restart
/// index). Restart r is seeded with derive_seed(seed, {r}).
///
/// An update that would raise the cost (possible only through rounding once
/// converged) is rejected, so cost_trace is non-increasing and
/// empirical_cost is exactly the returned codebook's cost.
QuantizerResult lloyd(const PointSet& sample, const LloydConfig& cfg);

/// Lloyd iterations on the sample started from `init` (no seeding, no
/// restarts); cfg.k is ignored. The returned cost never exceeds the cost of
/// `init`.
QuantizerResult lloyd_refine(const PointSet& sample, const Codebook& init,
                             const LloydConfig& cfg);

/// Pushforward of the empirical measure of the sample onto the Lloyd codebook.
DiscreteMeasure kmeans_measure(const PointSet& sample, const LloydConfig& cfg);

/// (1/n) sum_i d(x_i, codebook)^2 over all sample points (repeats counted).
double quantization_cost(const PointSet& sample, const Codebook& codebook);

/// Number of distinct points (exact coordinate equality).
std::size_t distinct_count(const PointSet& sample);

struct OptimalQuantizer {
  Codebook codebook;
  double cost;  // E d(x, S)^2 under the uniform law on [0, 1]
};

/// Optimal k-point quantizer of the uniform law on [0, 1]: centers
/// (2i - 1) / (2k), cost 1 / (12 k^2).
OptimalQuantizer optimal_quantizer_1d_uniform(std::size_t k);

/// Upper estimate of V_{k,2}(rho)^(1/2): Lloyd on n_mc draws, squared
/// distance averaged over an independent n_mc draws, square root.
double estimate_vnp(const Sampler& sampler, std::size_t k, double p,
                    std::size_t n_mc, const LloydConfig& cfg);

}  // namespace wassquant
