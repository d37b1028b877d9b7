#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wassquant/point_set.hpp"

namespace wassquant {

enum class DensityForm {
  uniform_cube,             // uniform on [0, 1]^d
  uniform_ball,             // uniform on the unit ball of R^d
  uniform_sphere_surface,   // surface measure on the unit sphere S^d in R^(d+1)
  scaled_uniform_interval,  // uniform on [0, L]
  truncated_gaussian_cube,  // N(1/2, sigma^2) per axis, truncated to [0, 1]^d
  point_mass,               // delta at a fixed point (no absolutely continuous part)
};

std::string to_string(DensityForm form);
DensityForm density_form_from_string(const std::string& name);

/// A named population measure with i.i.d. draws.
///
/// Draw i depends only on (seed, i). Raw points are multiplied by scale() so
/// that every draw has norm at most one, then mapped by the (optional)
/// isometric embedding into the ambient space.
class Sampler {
 public:
  static Sampler uniform_cube(std::size_t d, std::uint64_t seed = 0);
  static Sampler uniform_ball(std::size_t d, std::uint64_t seed = 0);
  static Sampler uniform_sphere_surface(std::size_t d, std::uint64_t seed = 0);
  static Sampler scaled_uniform_interval(double length, std::uint64_t seed = 0);
  static Sampler truncated_gaussian_cube(std::size_t d, double sigma,
                                         std::uint64_t seed = 0);
  static Sampler point_mass(const Point& x, std::uint64_t seed = 0);

  DensityForm form() const { return form_; }
  std::string name() const;
  std::size_t intrinsic_dim() const { return intrinsic_dim_; }
  /// Dimension of the raw (pre-embedding) points.
  std::size_t base_dim() const { return base_dim_; }
  std::size_t ambient_dim() const;
  std::uint64_t seed() const { return seed_; }
  double length() const { return length_; }
  double sigma() const { return sigma_; }
  const Point& atom() const { return atom_; }

  /// Factor applied to raw points; 1 / max(1, raw norm bound).
  double scale() const { return scale_; }
  /// Bound on the norm of every draw (after scaling), at most one.
  double norm_bound() const { return norm_bound_; }
  bool embedded() const { return embedding_ != nullptr; }
  /// Row-major (ambient_dim x base_dim) linear part of the embedding; the
  /// identity when not embedded.
  std::vector<double> embedding_matrix() const;

  /// Same population, different draw stream.
  Sampler with_seed(std::uint64_t seed) const;

  /// Draws number `index` of the stream.
  Point draw_one(std::uint64_t index) const;

  /// Draws indices [first, first + n).
  PointSet draw(std::size_t n, std::uint64_t first = 0) const;

  /// Population mean and E||x||^2 of the scaled, embedded measure.
  Point mean() const;
  double second_moment() const;

  friend Sampler embed_isometric(const Sampler& sampler,
                                 std::size_t new_ambient_dim,
                                 std::uint64_t seed);

 private:
  Sampler(DensityForm form, std::size_t intrinsic_dim, std::size_t base_dim,
          double raw_norm_bound, std::uint64_t seed);

  Point raw_draw(std::uint64_t index) const;
  Point to_ambient(const Point& raw) const;
  Point raw_mean() const;
  double raw_second_moment() const;

  DensityForm form_;
  std::size_t intrinsic_dim_;
  std::size_t base_dim_;
  std::uint64_t seed_;
  double length_ = 1.0;
  double sigma_ = 1.0;
  Point atom_;
  double scale_ = 1.0;
  double norm_bound_ = 1.0;

  // Row-major (ambient x base_dim) matrix with orthonormal columns.
  struct Embedding {
    std::size_t rows;
    std::size_t cols;
    std::vector<double> q;
  };
  std::shared_ptr<const Embedding> embedding_;
};

/// Composes the sampler with a fixed random linear isometry into
/// R^new_ambient_dim. The map is Haar-distributed given the seed; embedding an
/// embedded sampler composes the two maps.
Sampler embed_isometric(const Sampler& sampler, std::size_t new_ambient_dim,
                        std::uint64_t seed);

/// n i.i.d. draws (indices 0..n-1).
PointSet draw(const Sampler& sampler, std::size_t n);

struct MomentDescriptor {
  double value;  // integral of rho_A^(d/(d+2)) over the support manifold
  bool exact;    // closed form (true) or numerical quadrature (false)
};

/// m(rho_A) of the unscaled population; multiply distances by scale()
/// separately.
MomentDescriptor analytic_m(const Sampler& sampler);

}  // namespace wassquant
