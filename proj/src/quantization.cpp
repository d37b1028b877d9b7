#include "wassquant/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "wassquant/error.hpp"
#include "wassquant/rng.hpp"

namespace wassquant {
namespace {

// Closest center (lowest index on ties) and its squared distance.
std::pair<std::size_t, double> closest(std::span<const double> x,
                                       const PointSet& centers) {
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < centers.size(); ++q) {
    const double sq = squared_distance(x, centers[q]);
    if (sq < best_sq) {
      best_sq = sq;
      best = q;
    }
  }
  return {best, best_sq};
}

struct Assignment {
  std::vector<std::size_t> label;
  std::vector<double> sq;
  double cost = 0.0;
};

Assignment assign(const PointSet& sample, const PointSet& centers) {
  Assignment a;
  a.label.resize(sample.size());
  a.sq.resize(sample.size());
  long double total = 0.0L;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto [q, sq] = closest(sample[i], centers);
    a.label[i] = q;
    a.sq[i] = sq;
    total += sq;
  }
  a.cost = static_cast<double>(total / static_cast<long double>(sample.size()));
  return a;
}

constexpr double kCoincideTolerance = 1e-12;

// Centroid step. A center left without points, or landing within the
// distinctness tolerance of an earlier center, is moved to the sample point
// currently farthest from its center.
PointSet update_centers(const PointSet& sample, const PointSet& centers,
                        const Assignment& a) {
  const std::size_t k = centers.size();
  const std::size_t dim = sample.dim();
  std::vector<double> sums(k * dim, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto x = sample[i];
    double* s = sums.data() + a.label[i] * dim;
    for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
    ++counts[a.label[i]];
  }
  PointSet next(dim);
  next.reserve(k);
  std::vector<double> c(dim);
  std::vector<double> far = a.sq;
  for (std::size_t q = 0; q < k; ++q) {
    bool reseed = counts[q] == 0;
    if (!reseed) {
      for (std::size_t d = 0; d < dim; ++d) {
        c[d] = sums[q * dim + d] / static_cast<double>(counts[q]);
      }
      for (std::size_t r = 0; r < q && !reseed; ++r) {
        reseed = distance(next[r], c) <= kCoincideTolerance;
      }
    }
    if (reseed) {
      const auto it = std::max_element(far.begin(), far.end());
      const auto x = sample[static_cast<std::size_t>(it - far.begin())];
      c.assign(x.begin(), x.end());
      *it = -1.0;
    }
    next.push_back(c);
  }
  return next;
}

struct Run {
  PointSet centers;
  double cost;
  std::size_t iterations;
  std::vector<double> trace;
};

Run lloyd_run(const PointSet& sample, PointSet centers, const LloydConfig& cfg) {
  Run run{std::move(centers), 0.0, 0, {}};
  Assignment a = assign(sample, run.centers);
  run.cost = a.cost;
  run.trace.push_back(a.cost);
  while (run.iterations < cfg.max_iters) {
    PointSet next = update_centers(sample, run.centers, a);
    Assignment b = assign(sample, next);
    if (b.cost > run.cost) break;
    const double improvement = run.cost - b.cost;
    run.centers = std::move(next);
    a = std::move(b);
    ++run.iterations;
    const double previous = run.cost;
    run.cost = a.cost;
    run.trace.push_back(a.cost);
    if (improvement <= cfg.rel_tol * previous) break;
  }
  return run;
}

void check_sample(const PointSet& sample, std::size_t k) {
  if (sample.empty()) throw InvalidArgument("sample is empty");
  if (!sample.all_finite()) throw InvalidArgument("sample has non-finite values");
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (k > sample.size() || k > distinct_count(sample)) {
    throw InvalidArgument("k exceeds the number of distinct sample points");
  }
}

}  // namespace

void LloydConfig::validate() const {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
}

std::size_t distinct_count(const PointSet& sample) {
  std::vector<std::size_t> order(sample.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    const auto x = sample[a];
    const auto y = sample[b];
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t count = order.empty() ? 0 : 1;
  for (std::size_t t = 1; t < order.size(); ++t) {
    if (less(order[t - 1], order[t])) ++count;
  }
  return count;
}

Codebook kmeanspp_init(const PointSet& sample, std::size_t k,
                       std::uint64_t seed) {
  check_sample(sample, k);
  CounterRng rng(seed);
  PointSet centers(sample.dim());
  centers.push_back(sample[rng.below(sample.size())]);
  std::vector<double> sq(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    sq[i] = squared_distance(sample[i], centers[0]);
  }
  while (centers.size() < k) {
    const long double total = std::accumulate(sq.begin(), sq.end(), 0.0L);
    // total > 0 because k does not exceed the distinct count.
    const long double target = static_cast<long double>(rng.uniform()) * total;
    long double running = 0.0L;
    std::size_t pick = sample.size();
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (sq[i] <= 0.0) continue;
      last_positive = i;
      running += sq[i];
      if (running > target) {
        pick = i;
        break;
      }
    }
    if (pick == sample.size()) pick = last_positive;
    centers.push_back(sample[pick]);
    const auto c = centers[centers.size() - 1];
    for (std::size_t i = 0; i < sample.size(); ++i) {
      sq[i] = std::min(sq[i], squared_distance(sample[i], c));
    }
  }
  return Codebook(std::move(centers));
}

QuantizerResult lloyd(const PointSet& sample, const LloydConfig& cfg) {
  cfg.validate();
  check_sample(sample, cfg.k);
  std::optional<Run> best;
  std::size_t best_restart = 0;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    const Codebook init = kmeanspp_init(sample, cfg.k, derive_seed(cfg.seed, {r}));
    Run run = lloyd_run(sample, init.centers(), cfg);
    if (!best || run.cost < best->cost) {
      best = std::move(run);
      best_restart = r;
    }
  }
  // Centers are distinct by construction except in rounding corner cases,
  // where collapsing them needs a fresh cost.
  Codebook codebook = Codebook::from_points_unique(best->centers);
  double cost = best->cost;
  if (codebook.size() != best->centers.size()) {
    cost = quantization_cost(sample, codebook);
  }
  return {std::move(codebook), cost, best->iterations, best_restart,
          std::move(best->trace)};
}

QuantizerResult lloyd_refine(const PointSet& sample, const Codebook& init,
                             const LloydConfig& cfg) {
  if (sample.empty()) throw InvalidArgument("sample is empty");
  if (sample.dim() != init.dim()) {
    throw DimensionMismatch("sample and codebook dimensions differ");
  }
  if (!(cfg.rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
  Run run = lloyd_run(sample, init.centers(), cfg);
  Codebook codebook = Codebook::from_points_unique(run.centers);
  double cost = run.cost;
  if (codebook.size() != run.centers.size()) {
    cost = quantization_cost(sample, codebook);
  }
  return {std::move(codebook), cost, run.iterations, 0, std::move(run.trace)};
}

double quantization_cost(const PointSet& sample, const Codebook& codebook) {
  if (sample.dim() != codebook.dim()) {
    throw DimensionMismatch("sample and codebook dimensions differ");
  }
  if (sample.empty()) throw InvalidArgument("sample is empty");
  return assign(sample, codebook.centers()).cost;
}

DiscreteMeasure kmeans_measure(const PointSet& sample, const LloydConfig& cfg) {
  return pushforward(empirical_measure(sample), lloyd(sample, cfg).codebook);
}

OptimalQuantizer optimal_quantizer_1d_uniform(std::size_t k) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  PointSet centers(1);
  for (std::size_t i = 1; i <= k; ++i) {
    const double c = (2.0 * static_cast<double>(i) - 1.0) /
                     (2.0 * static_cast<double>(k));
    centers.push_back(std::span<const double>(&c, 1));
  }
  const double kk = static_cast<double>(k);
  return {Codebook(std::move(centers)), 1.0 / (12.0 * kk * kk)};
}

double estimate_vnp(const Sampler& sampler, std::size_t k, double p,
                    std::size_t n_mc, const LloydConfig& cfg) {
  if (p != 2.0) throw InvalidArgument("quantization error estimate needs p = 2");
  if (n_mc < k) throw InvalidArgument("n_mc must be at least k");
  LloydConfig c = cfg;
  c.k = k;
  const PointSet train = sampler.draw(n_mc, 0);
  const PointSet held_out = sampler.draw(n_mc, n_mc);
  const QuantizerResult q = lloyd(train, c);
  return std::sqrt(quantization_cost(held_out, q.codebook));
}

}  // namespace wassquant
