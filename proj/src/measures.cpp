#include "wassquant/measures.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "wassquant/error.hpp"

namespace wassquant {
namespace {

constexpr double kInputMassTolerance = 1e-9;
constexpr double kMassTolerance = 1e-12;
constexpr double kDistinctTolerance = 1e-12;

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool coords_equal(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

/// For each point, the index of the first point with identical coordinates.
std::vector<std::size_t> first_occurrence(const PointSet& pts) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(pts[a], pts[b]);
  });
  std::vector<std::size_t> rep(n);
  for (std::size_t g = 0; g < n;) {
    std::size_t h = g + 1;
    while (h < n && coords_equal(pts[order[g]], pts[order[h]])) ++h;
    // stable sort keeps original order inside a group
    for (std::size_t t = g; t < h; ++t) rep[order[t]] = order[g];
    g = h;
  }
  return rep;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(PointSet points, std::vector<double> weights) {
  if (points.size() != weights.size()) {
    throw DimensionMismatch("point and weight counts differ");
  }
  if (points.empty()) throw InvalidArgument("measure needs at least one atom");
  if (!points.all_finite()) {
    throw InvalidArgument("point coordinates must be finite");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw InvalidArgument("weights must be finite");
    if (w < 0.0) throw InvalidArgument("weights must be nonnegative");
    sum += w;
  }
  if (sum <= 0.0) throw InvalidArgument("weights are all zero");
  if (std::abs(sum - 1.0) > kInputMassTolerance) {
    throw InvalidArgument("weights must sum to one");
  }

  const auto rep = first_occurrence(points);
  std::vector<double> merged(points.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) merged[rep[i]] += weights[i];

  support_ = PointSet(points.dim());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (rep[i] != i || merged[i] == 0.0) continue;
    support_.push_back(points[i]);
    weights_.push_back(merged[i] / sum);
  }
}

DiscreteMeasure::DiscreteMeasure(Trusted, PointSet points,
                                 std::vector<double> weights)
    : support_(std::move(points)), weights_(std::move(weights)) {
  if (std::abs(total_mass() - 1.0) > kMassTolerance) {
    throw InternalFault("measure mass drifted away from one");
  }
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x) {
  return DiscreteMeasure(Trusted{}, PointSet::from_points({x}), {1.0});
}

double DiscreteMeasure::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Codebook::Codebook(PointSet centers) : centers_(std::move(centers)) {
  if (centers_.empty()) throw InvalidArgument("codebook needs a center");
  if (centers_.dim() == 0) throw InvalidArgument("codebook dimension is zero");
  if (!centers_.all_finite()) {
    throw InvalidArgument("codebook centers must be finite");
  }
  const std::size_t k = centers_.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return centers_[a][0] < centers_[b][0];
  });
  for (std::size_t a = 0; a < k; ++a) {
    const double x0 = centers_[order[a]][0];
    for (std::size_t b = a + 1;
         b < k && centers_[order[b]][0] - x0 <= kDistinctTolerance; ++b) {
      if (distance(centers_[order[a]], centers_[order[b]]) <=
          kDistinctTolerance) {
        throw InvalidArgument("codebook centers must be pairwise distinct");
      }
    }
  }
}

Codebook Codebook::from_points_unique(const PointSet& points) {
  if (points.empty()) throw InvalidArgument("codebook needs a center");
  PointSet kept(points.dim());
  std::multimap<double, std::size_t> by_first;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points[i];
    bool dup = false;
    for (auto it = by_first.lower_bound(p[0] - kDistinctTolerance);
         it != by_first.end() && it->first <= p[0] + kDistinctTolerance;
         ++it) {
      if (distance(kept[it->second], p) <= kDistinctTolerance) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    by_first.emplace(p[0], kept.size());
    kept.push_back(p);
  }
  return Codebook(std::move(kept));
}

DiscreteMeasure make_discrete_measure(const PointSet& points,
                                      const std::vector<double>& weights) {
  return DiscreteMeasure(points, weights);
}

DiscreteMeasure empirical_measure(const PointSet& sample) {
  if (sample.empty()) throw InvalidArgument("empirical measure of empty sample");
  if (!sample.all_finite()) {
    throw InvalidArgument("sample coordinates must be finite");
  }
  const std::size_t n = sample.size();
  const auto rep = first_occurrence(sample);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++count[rep[i]];

  PointSet support(sample.dim());
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] == 0) continue;
    support.push_back(sample[i]);
    weights.push_back(static_cast<double>(count[i]) / static_cast<double>(n));
  }
  return DiscreteMeasure(DiscreteMeasure::Trusted{}, std::move(support),
                         std::move(weights));
}

std::size_t nearest_projection(std::span<const double> x,
                               const Codebook& codebook, double& sq_dist) {
  if (x.size() != codebook.dim()) {
    throw DimensionMismatch("point and codebook dimensions differ");
  }
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < codebook.size(); ++q) {
    const double d = squared_distance(x, codebook[q]);
    if (d < best_sq) {
      best_sq = d;
      best = q;
    }
  }
  sq_dist = best_sq;
  return best;
}

std::size_t nearest_projection(std::span<const double> x,
                               const Codebook& codebook) {
  double unused = 0.0;
  return nearest_projection(x, codebook, unused);
}

DiscreteMeasure pushforward(const DiscreteMeasure& mu,
                            const Codebook& codebook) {
  if (mu.dim() != codebook.dim()) {
    throw DimensionMismatch("measure and codebook dimensions differ");
  }
  std::vector<double> mass(codebook.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mass[nearest_projection(mu.support()[i], codebook)] += mu.weight(i);
  }
  PointSet support(codebook.dim());
  std::vector<double> weights;
  for (std::size_t q = 0; q < codebook.size(); ++q) {
    if (mass[q] == 0.0) continue;
    support.push_back(codebook[q]);
    weights.push_back(mass[q]);
  }
  return DiscreteMeasure(DiscreteMeasure::Trusted{}, std::move(support),
                         std::move(weights));
}

double expected_distance_power(const DiscreteMeasure& mu,
                               const Codebook& codebook, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("order p must be at least 1");
  if (mu.dim() != codebook.dim()) {
    throw DimensionMismatch("measure and codebook dimensions differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double sq = 0.0;
    nearest_projection(mu.support()[i], codebook, sq);
    total += mu.weight(i) * power_from_squared(sq, p);
  }
  return total;
}

}  // namespace wassquant
