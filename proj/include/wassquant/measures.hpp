#pragma once

#include <cstddef>
#include <vector>

#include "wassquant/point_set.hpp"

namespace wassquant {

class Codebook;

/// Finitely supported probability measure.
///
/// Atoms are distinct (exact coordinate equality) and carry strictly positive
/// weights summing to one within 1e-12. Instances are immutable once built.
class DiscreteMeasure {
 public:
  /// Validating constructor: rejects negative, non-finite or all-zero weights
  /// and sums further than 1e-9 from one; renormalizes exactly; drops
  /// zero-weight atoms; merges duplicate points (first occurrence order).
  DiscreteMeasure(PointSet points, std::vector<double> weights);

  /// Measure with unit mass on a single point.
  static DiscreteMeasure dirac(const Point& x);

  std::size_t dim() const { return support_.dim(); }
  std::size_t size() const { return weights_.size(); }
  const PointSet& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

  double total_mass() const;

  friend bool operator==(const DiscreteMeasure&,
                         const DiscreteMeasure&) = default;

 private:
  struct Trusted {};
  DiscreteMeasure(Trusted, PointSet points, std::vector<double> weights);

  friend DiscreteMeasure empirical_measure(const PointSet& sample);
  friend class Codebook;
  friend DiscreteMeasure pushforward(const DiscreteMeasure& mu,
                                     const Codebook& codebook);

  PointSet support_;
  std::vector<double> weights_;
};

/// Finite set of pairwise distinct centers (a quantizer).
class Codebook {
 public:
  /// Distinctness is checked under a 1e-12 Euclidean tolerance.
  explicit Codebook(PointSet centers);

  /// Builds a codebook from an arbitrary point list, collapsing points that
  /// coincide within 1e-12 onto their first occurrence.
  static Codebook from_points_unique(const PointSet& points);

  std::size_t dim() const { return centers_.dim(); }
  std::size_t size() const { return centers_.size(); }
  const PointSet& centers() const { return centers_; }
  std::span<const double> operator[](std::size_t i) const {
    return centers_[i];
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  PointSet centers_;
};

DiscreteMeasure make_discrete_measure(const PointSet& points,
                                      const std::vector<double>& weights);

/// Uniform measure (1/n) * sum delta_{x_i}; repeated points are merged with
/// weight count/n.
DiscreteMeasure empirical_measure(const PointSet& sample);

/// Index of a closest center; ties go to the lowest index.
std::size_t nearest_projection(std::span<const double> x,
                               const Codebook& codebook);

/// Same as nearest_projection but also reports the squared distance.
std::size_t nearest_projection(std::span<const double> x,
                               const Codebook& codebook, double& sq_dist);

/// Image of mu under the nearest-center map onto the codebook. Atoms appear in
/// codebook order; centers receiving no mass are omitted.
DiscreteMeasure pushforward(const DiscreteMeasure& mu,
                            const Codebook& codebook);

/// sum_i w_i * d(x_i, S)^p.
double expected_distance_power(const DiscreteMeasure& mu,
                               const Codebook& codebook, double p);

}  // namespace wassquant
