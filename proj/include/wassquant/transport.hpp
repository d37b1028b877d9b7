#pragma once

#include <cstddef>
#include <vector>

#include "wassquant/measures.hpp"

namespace wassquant {

/// One nonzero entry of a coupling.
struct PlanEntry {
  std::size_t row;  // index into the source support
  std::size_t col;  // index into the target support
  double mass;

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// Sparse coupling between two discrete measures. Entries are sorted by
/// (row, col); an optimal vertex has at most rows + cols - 1 of them.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<PlanEntry> entries;

  std::vector<double> row_marginals() const;
  std::vector<double> col_marginals() const;
};

struct OTResult {
  double cost = 0.0;  // W_p, in distance units
  TransportPlan plan;
  double p = 2.0;
};

/// Exact p-Wasserstein distance between discrete measures.
///
/// Solved as a transportation problem by a primal network simplex. Large
/// instances start from a sparse candidate arc set (nearest neighbours plus a
/// space-filling-curve northwest-corner basis) and add arcs until a full
/// pricing pass over every source/target pair certifies optimality, so the
/// result is always exact for the whole bipartite graph.
///
/// Weights are converted to integer masses: exactly when they share a
/// denominator up to 2^40 (empirical measures and their pushforwards),
/// otherwise by largest-remainder rounding at resolution 2^-40.
OTResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     double p);

/// W_p recomputed from a plan: (sum mass * ||x_i - y_j||^p)^(1/p).
double plan_cost(const TransportPlan& plan, const DiscreteMeasure& mu,
                 const DiscreteMeasure& nu, double p);

/// One-dimensional W_p from the quantile coupling: integrates
/// |F_mu^-1(t) - F_nu^-1(t)|^p over (0, 1) piecewise.
double wasserstein_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      double p);

/// W_p by enumerating all n! matchings of two uniform n-atom measures,
/// n <= 8.
double brute_force_wasserstein(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu, double p);

/// Optimal bipartite matching cost  min_sigma (1/n) sum ||x_i - y_sigma(i)||^p,
/// solved with the Hungarian (shortest augmenting path) method.
double obm_cost(const PointSet& x, const PointSet& y, double p);

/// Matching realising obm_cost: assignment[i] is the partner of x_i.
std::vector<std::size_t> obm_assignment(const PointSet& x, const PointSet& y,
                                        double p);

}  // namespace wassquant
