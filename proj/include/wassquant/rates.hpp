#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wassquant/quantization.hpp"
#include "wassquant/samplers.hpp"

namespace wassquant {

enum class RateMode { empirical, kmeans };

std::string to_string(RateMode mode);
RateMode rate_mode_from_string(const std::string& name);

struct RateConfig {
  Sampler sampler = Sampler::uniform_cube(1);
  std::vector<std::size_t> n_grid;
  std::size_t trials = 10;
  std::size_t ref_multiplier = 16;  // reference size N = ref_multiplier * max n
  RateMode mode = RateMode::empirical;
  double kmeans_constant = 1.0;     // k = ceil(C_k * n^(d/(2d+4)))
  std::size_t kmeans_restarts = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 0;          // 0: WASSQUANT_THREADS, else hardware

  void validate() const;
  std::size_t reference_size() const;
};

struct TrialRecord {
  std::size_t n;
  std::size_t k;  // atoms of the learned measure (n in empirical mode)
  std::size_t trial;
  double distance;
  std::uint64_t seed;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct SlopeFit {
  double slope;
  double intercept;
  double stderr_slope;
};

struct RateResult {
  RateMode mode;
  std::string sampler;
  std::size_t intrinsic_dim;
  std::size_t ambient_dim;
  std::size_t reference_size;
  double kmeans_constant;
  std::uint64_t seed;
  std::vector<TrialRecord> records;  // grid order, then trial order
  std::vector<std::size_t> n_grid;
  std::vector<double> medians;       // per grid point
  SlopeFit fit;
  double band_low;   // -1/d - 0.15
  double band_high;  // -1/(2d + 4) + 0.10
  bool in_band;
};

/// Worker count: `requested` if nonzero, else WASSQUANT_THREADS if set and
/// nonzero, else the hardware concurrency.
std::size_t resolve_thread_count(std::size_t requested = 0);

/// X_n for a given (sampler, n, seed); shared by every estimate that must be
/// matched on seeds.
PointSet trial_sample(const Sampler& sampler, std::size_t n, std::uint64_t seed);
/// The independent reference sample paired with trial_sample.
PointSet reference_sample(const Sampler& sampler, std::size_t ref_n,
                          std::uint64_t seed);

/// W_2 between the empirical measure of trial_sample(n) and that of an
/// independent reference_sample(ref_n). An upward-biased proxy for
/// W_2(rho, rho_n): the bias is at most W_2(rho, rho_ref).
double estimate_w2_to_population(const Sampler& sampler, std::size_t n,
                                 std::size_t ref_n, std::uint64_t seed);

/// k(n) = ceil(c * n^(d/(2d+4))), clamped to [1, n]. Values within 1e-12
/// relative of an integer are snapped to it before the ceiling.
std::size_t kmeans_size(double c, std::size_t n, std::size_t d);

/// Rate band [-1/d - 0.15, -1/(2d+4) + 0.10].
std::pair<double, double> rate_band(std::size_t d);

RateResult run_rate_experiment(const RateConfig& cfg);

/// Ordinary least squares of log(value) on log(n).
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& pairs);

/// Median; the mean of the two middle values for even sizes.
double median(std::vector<double> values);

struct DecompositionTerms {
  double a;  // W2(rho, pi_{S_k} rho) = sqrt(E_ref d(x, S_k)^2)
  double b;  // W2(pi_{S_k} rho, pi_{S_k} rho_n)
  double c;  // W2(pi_{S_k} rho_n, rho_n)
  double d;  // W2(pi_{Shat_k} rho_n, rho_n)
  double e;  // W2(rho, pi_{Shat_k} rho)
  double f;  // W2(pi_{Shat_k} rho, pi_{Shat_k} rho_n)
  std::size_t n;
  std::size_t k;
  std::size_t reference_size;
  bool population_quantizer_approximate = true;
};

/// Terms of the triangle decomposition of W2(rho, rho_n) through the
/// population quantizer S_k and the sample quantizer Shat_k.
///
/// rho is represented by reference_sample(ref_n, seed), and rho_n by
/// trial_sample(n, seed), so the terms are matched with
/// estimate_w2_to_population(sampler, n, ref_n, seed). S_k is Lloyd on an
/// independent sample of 50 k points with 10 restarts. Shat_k is the better of
/// multi-restart Lloyd on X_n and Lloyd on X_n started from S_k, which makes
/// d <= c hold by construction. ref_n = 0 means 16 n.
DecompositionTerms decomposition_terms(const Sampler& sampler, std::size_t n,
                                       std::size_t k, std::uint64_t seed,
                                       std::size_t ref_n = 0);

struct LowerBoundRow {
  std::size_t n;
  double floor;                      // estimate_vnp(sampler, n)
  std::vector<double> iid;           // per trial
  std::vector<double> adversarial;   // per trial, best adversary
  std::vector<double> single_point;  // per trial, all of X_n on one point
  bool iid_ok;
  bool adversarial_ok;
};

struct LowerBoundReport {
  double slack;
  std::vector<LowerBoundRow> rows;
  bool ok;
};

/// Checks W2(rho_ref, rho_n) >= (1 - slack) V_{n,2}^(1/2) for i.i.d. X_n, and
/// the same floor for the adversarial sets: a Lloyd codebook of size n fitted
/// to an independent sample, and n copies of one sample point. The floor is
/// estimate_vnp with n_mc = 20 n.
LowerBoundReport lower_bound_check(const Sampler& sampler,
                                   const std::vector<std::size_t>& n_grid,
                                   std::uint64_t seed, std::size_t trials = 20,
                                   std::size_t ref_multiplier = 16,
                                   double slack = 0.15);

}  // namespace wassquant
