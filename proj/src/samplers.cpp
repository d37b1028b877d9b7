#include "wassquant/samplers.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "wassquant/error.hpp"
#include "wassquant/rng.hpp"

namespace wassquant {
namespace {

constexpr double kQuadratureTolerance = 1e-10;

double unit_ball_volume(std::size_t d) {
  const double h = 0.5 * static_cast<double>(d);
  return std::pow(std::numbers::pi, h) / boost::math::tgamma(h + 1.0);
}

/// Surface area of the unit sphere S^d in R^(d+1).
double unit_sphere_area(std::size_t d) {
  const double h = 0.5 * static_cast<double>(d + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / boost::math::tgamma(h);
}

struct TruncatedNormal {
  double sigma;
  double alpha;  // truncation half-width in standard deviations
  double lo_cdf;
  double mass;

  explicit TruncatedNormal(double s) : sigma(s), alpha(0.5 / s) {
    const boost::math::normal_distribution<double> z;
    lo_cdf = boost::math::cdf(z, -alpha);
    mass = boost::math::cdf(z, alpha) - lo_cdf;
  }

  double density(double x) const {
    const double t = (x - 0.5) / sigma;
    return std::exp(-0.5 * t * t) /
           (sigma * std::sqrt(2.0 * std::numbers::pi) * mass);
  }

  double quantile(double u) const {
    const boost::math::normal_distribution<double> z;
    return 0.5 + sigma * boost::math::quantile(z, lo_cdf + u * mass);
  }

  double variance() const {
    const double phi =
        std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * std::numbers::pi);
    return sigma * sigma * (1.0 - 2.0 * alpha * phi / mass);
  }
};

void require_dim(std::size_t d) {
  if (d < 1) throw InvalidArgument("intrinsic dimension must be at least 1");
}

}  // namespace

std::string to_string(DensityForm form) {
  switch (form) {
    case DensityForm::uniform_cube: return "uniform-cube";
    case DensityForm::uniform_ball: return "uniform-ball";
    case DensityForm::uniform_sphere_surface: return "uniform-sphere-surface";
    case DensityForm::scaled_uniform_interval: return "scaled-uniform-interval";
    case DensityForm::truncated_gaussian_cube: return "truncated-gaussian-cube";
    case DensityForm::point_mass: return "point-mass";
  }
  throw InternalFault("unknown density form");
}

DensityForm density_form_from_string(const std::string& name) {
  for (auto f : {DensityForm::uniform_cube, DensityForm::uniform_ball,
                 DensityForm::uniform_sphere_surface,
                 DensityForm::scaled_uniform_interval,
                 DensityForm::truncated_gaussian_cube, DensityForm::point_mass}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument("unknown sampler form '" + name + "'");
}

Sampler::Sampler(DensityForm form, std::size_t intrinsic_dim,
                 std::size_t base_dim, double raw_norm_bound,
                 std::uint64_t seed)
    : form_(form),
      intrinsic_dim_(intrinsic_dim),
      base_dim_(base_dim),
      seed_(seed),
      scale_(1.0 / std::max(1.0, raw_norm_bound)),
      norm_bound_(raw_norm_bound * scale_) {}

Sampler Sampler::uniform_cube(std::size_t d, std::uint64_t seed) {
  require_dim(d);
  return Sampler(DensityForm::uniform_cube, d, d,
                 std::sqrt(static_cast<double>(d)), seed);
}

Sampler Sampler::uniform_ball(std::size_t d, std::uint64_t seed) {
  require_dim(d);
  return Sampler(DensityForm::uniform_ball, d, d, 1.0, seed);
}

Sampler Sampler::uniform_sphere_surface(std::size_t d, std::uint64_t seed) {
  require_dim(d);
  return Sampler(DensityForm::uniform_sphere_surface, d, d + 1, 1.0, seed);
}

Sampler Sampler::scaled_uniform_interval(double length, std::uint64_t seed) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw InvalidArgument("interval length must be positive and finite");
  }
  Sampler s(DensityForm::scaled_uniform_interval, 1, 1, length, seed);
  s.length_ = length;
  return s;
}

Sampler Sampler::truncated_gaussian_cube(std::size_t d, double sigma,
                                         std::uint64_t seed) {
  require_dim(d);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("sigma must be positive and finite");
  }
  Sampler s(DensityForm::truncated_gaussian_cube, d, d,
            std::sqrt(static_cast<double>(d)), seed);
  s.sigma_ = sigma;
  return s;
}

Sampler Sampler::point_mass(const Point& x, std::uint64_t seed) {
  if (x.empty()) throw InvalidArgument("point mass needs a location");
  double sq = 0.0;
  for (double c : x) {
    if (!std::isfinite(c)) throw InvalidArgument("non-finite coordinate");
    sq += c * c;
  }
  Sampler s(DensityForm::point_mass, 0, x.size(), std::sqrt(sq), seed);
  s.atom_ = x;
  return s;
}

std::string Sampler::name() const { return to_string(form_); }

std::size_t Sampler::ambient_dim() const {
  return embedding_ ? embedding_->rows : base_dim_;
}

std::vector<double> Sampler::embedding_matrix() const {
  if (embedding_) return embedding_->q;
  std::vector<double> eye(base_dim_ * base_dim_, 0.0);
  for (std::size_t i = 0; i < base_dim_; ++i) eye[i * base_dim_ + i] = 1.0;
  return eye;
}

Sampler Sampler::with_seed(std::uint64_t seed) const {
  Sampler s = *this;
  s.seed_ = seed;
  return s;
}

Point Sampler::raw_draw(std::uint64_t index) const {
  CounterRng rng(derive_seed(seed_, {index}));
  Point x(base_dim_);
  switch (form_) {
    case DensityForm::uniform_cube:
      for (auto& c : x) c = rng.uniform();
      break;
    case DensityForm::uniform_ball:
    case DensityForm::uniform_sphere_surface: {
      double sq = 0.0;
      do {
        sq = 0.0;
        for (auto& c : x) {
          c = rng.normal();
          sq += c * c;
        }
      } while (sq == 0.0);
      double radius = 1.0;
      if (form_ == DensityForm::uniform_ball) {
        radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(base_dim_));
      }
      const double f = radius / std::sqrt(sq);
      for (auto& c : x) c *= f;
      break;
    }
    case DensityForm::scaled_uniform_interval:
      x[0] = length_ * rng.uniform();
      break;
    case DensityForm::truncated_gaussian_cube: {
      const TruncatedNormal tn(sigma_);
      for (auto& c : x) c = tn.quantile(rng.open_uniform());
      break;
    }
    case DensityForm::point_mass:
      x = atom_;
      break;
  }
  return x;
}

Point Sampler::to_ambient(const Point& raw) const {
  if (!embedding_) {
    Point y = raw;
    for (auto& c : y) c *= scale_;
    return y;
  }
  const auto& e = *embedding_;
  Point y(e.rows, 0.0);
  for (std::size_t r = 0; r < e.rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < e.cols; ++c) s += e.q[r * e.cols + c] * raw[c];
    y[r] = scale_ * s;
  }
  return y;
}

Point Sampler::draw_one(std::uint64_t index) const {
  return to_ambient(raw_draw(index));
}

PointSet Sampler::draw(std::size_t n, std::uint64_t first) const {
  if (n < 1) throw InvalidArgument("draw count must be at least 1");
  PointSet out(ambient_dim());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw_one(first + i));
  return out;
}

PointSet draw(const Sampler& sampler, std::size_t n) { return sampler.draw(n); }

Point Sampler::raw_mean() const {
  switch (form_) {
    case DensityForm::uniform_cube:
    case DensityForm::truncated_gaussian_cube:
      return Point(base_dim_, 0.5);
    case DensityForm::uniform_ball:
    case DensityForm::uniform_sphere_surface:
      return Point(base_dim_, 0.0);
    case DensityForm::scaled_uniform_interval:
      return Point{0.5 * length_};
    case DensityForm::point_mass:
      return atom_;
  }
  throw InternalFault("unknown density form");
}

double Sampler::raw_second_moment() const {
  const double d = static_cast<double>(base_dim_);
  switch (form_) {
    case DensityForm::uniform_cube: return d / 3.0;
    case DensityForm::uniform_ball: return d / (d + 2.0);
    case DensityForm::uniform_sphere_surface: return 1.0;
    case DensityForm::scaled_uniform_interval: return length_ * length_ / 3.0;
    case DensityForm::truncated_gaussian_cube:
      return d * (TruncatedNormal(sigma_).variance() + 0.25);
    case DensityForm::point_mass: {
      double sq = 0.0;
      for (double c : atom_) sq += c * c;
      return sq;
    }
  }
  throw InternalFault("unknown density form");
}

Point Sampler::mean() const { return to_ambient(raw_mean()); }

double Sampler::second_moment() const {
  return scale_ * scale_ * raw_second_moment();
}

Sampler embed_isometric(const Sampler& sampler, std::size_t new_ambient_dim,
                        std::uint64_t seed) {
  const std::size_t old_dim = sampler.ambient_dim();
  if (new_ambient_dim < old_dim) {
    throw InvalidArgument("embedding cannot decrease the ambient dimension");
  }
  // Haar-distributed orthonormal columns: QR of a Gaussian matrix with the
  // signs of R's diagonal folded into Q.
  CounterRng rng(derive_seed(seed, {new_ambient_dim, old_dim}));
  Eigen::MatrixXd g(new_ambient_dim, old_dim);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = rng.normal();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() *
                      Eigen::MatrixXd::Identity(g.rows(), g.cols());
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }

  Eigen::MatrixXd total = q;
  if (sampler.embedding_) {
    const auto& e = *sampler.embedding_;
    Eigen::MatrixXd old(e.rows, e.cols);
    for (std::size_t i = 0; i < e.rows; ++i) {
      for (std::size_t j = 0; j < e.cols; ++j) old(i, j) = e.q[i * e.cols + j];
    }
    total = q * old;
  }
  Sampler out = sampler;
  Sampler::Embedding emb{static_cast<std::size_t>(total.rows()),
                         static_cast<std::size_t>(total.cols()), {}};
  emb.q.resize(emb.rows * emb.cols);
  for (std::size_t i = 0; i < emb.rows; ++i) {
    for (std::size_t j = 0; j < emb.cols; ++j) {
      emb.q[i * emb.cols + j] = total(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(j));
    }
  }
  out.embedding_ = std::make_shared<const Sampler::Embedding>(std::move(emb));
  return out;
}

MomentDescriptor analytic_m(const Sampler& sampler) {
  const std::size_t d = sampler.intrinsic_dim();
  const double exponent = 2.0 / (static_cast<double>(d) + 2.0);
  switch (sampler.form()) {
    case DensityForm::uniform_cube:
      return {1.0, true};
    case DensityForm::uniform_ball:
      return {std::pow(unit_ball_volume(d), exponent), true};
    case DensityForm::uniform_sphere_surface:
      return {std::pow(unit_sphere_area(d), exponent), true};
    case DensityForm::scaled_uniform_interval:
      return {std::pow(sampler.length(), exponent), true};
    case DensityForm::truncated_gaussian_cube: {
      // The density is a product, so the integral factorizes over axes.
      const TruncatedNormal tn(sampler.sigma());
      const double a = static_cast<double>(d) / (static_cast<double>(d) + 2.0);
      double error = 0.0;
      const double one_axis =
          boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
              [&](double x) { return std::pow(tn.density(x), a); }, 0.0, 1.0,
              15, kQuadratureTolerance, &error);
      return {std::pow(one_axis, static_cast<double>(d)), false};
    }
    case DensityForm::point_mass:
      break;
  }
  throw InvalidArgument("sampler '" + sampler.name() +
                        "' has no absolutely continuous part");
}

}  // namespace wassquant
