#include "wassquant/point_set.hpp"

#include <algorithm>

#include "wassquant/error.hpp"

namespace wassquant {

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 && !coords_.empty()) {
    throw InvalidArgument("point set of dimension 0 cannot hold coordinates");
  }
  if (dim_ != 0 && coords_.size() % dim_ != 0) {
    throw DimensionMismatch("coordinate count is not a multiple of dimension");
  }
}

PointSet PointSet::from_points(const std::vector<Point>& points) {
  if (points.empty()) return PointSet();
  const std::size_t dim = points.front().size();
  PointSet out(dim);
  out.reserve(points.size());
  for (const auto& p : points) {
    if (p.size() != dim) {
      throw DimensionMismatch("points have different dimensions");
    }
    out.push_back(p);
  }
  return out;
}

void PointSet::push_back(std::span<const double> p) {
  if (dim_ == 0 && coords_.empty()) dim_ = p.size();
  if (p.size() != dim_) {
    throw DimensionMismatch("point dimension does not match the set");
  }
  coords_.insert(coords_.end(), p.begin(), p.end());
}

Point PointSet::point(std::size_t i) const {
  auto s = (*this)[i];
  return Point(s.begin(), s.end());
}

std::vector<Point> PointSet::to_points() const {
  std::vector<Point> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
  return out;
}

bool PointSet::all_finite() const {
  return std::all_of(coords_.begin(), coords_.end(),
                     [](double v) { return std::isfinite(v); });
}

double squared_distance(std::span<const double> a,
                        std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double distance_power(std::span<const double> a, std::span<const double> b,
                      double p) {
  return power_from_squared(squared_distance(a, b), p);
}

}  // namespace wassquant
