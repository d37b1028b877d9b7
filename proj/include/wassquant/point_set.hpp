#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace wassquant {

/// A single point in the ambient space.
using Point = std::vector<double>;

/// Row-major, fixed-dimension collection of points.
///
/// Coordinates are stored contiguously so the hot loops (nearest-center
/// search, cost matrices) walk flat memory.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords);

  /// Builds a set from individual points; all must have the same length.
  static PointSet from_points(const std::vector<Point>& points);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) {
    return {coords_.data() + i * dim_, dim_};
  }

  void push_back(std::span<const double> p);
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

  const std::vector<double>& coords() const { return coords_; }
  Point point(std::size_t i) const;
  std::vector<Point> to_points() const;

  /// True when every coordinate is finite.
  bool all_finite() const;

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

/// ||a - b||^p, computed from the squared distance so p == 2 is exact.
double distance_power(std::span<const double> a, std::span<const double> b,
                      double p);

/// Converts a squared distance into a p-th power of the distance.
inline double power_from_squared(double sq, double p) {
  if (p == 2.0) return sq;
  if (p == 1.0) return std::sqrt(sq);
  return std::pow(sq, 0.5 * p);
}

}  // namespace wassquant
