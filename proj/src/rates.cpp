#include "wassquant/rates.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "wassquant/error.hpp"
#include "wassquant/measures.hpp"
#include "wassquant/rng.hpp"
#include "wassquant/transport.hpp"

namespace wassquant {
namespace {

// Stream tags under a trial seed.
constexpr std::uint64_t kSampleStream = 0;
constexpr std::uint64_t kReferenceStream = 1;
constexpr std::uint64_t kLloydStream = 2;
constexpr std::uint64_t kPopulationQuantizerStream = 3;

// Runs job(i) for i in [0, count) on `threads` workers, rethrowing the first
// exception. Jobs write to disjoint slots, so the result does not depend on
// the schedule.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return wasserstein(mu, nu, 2.0).cost;
}

}  // namespace

std::string to_string(RateMode mode) {
  return mode == RateMode::empirical ? "empirical" : "kmeans";
}

RateMode rate_mode_from_string(const std::string& name) {
  if (name == "empirical") return RateMode::empirical;
  if (name == "kmeans") return RateMode::kmeans;
  throw InvalidArgument("unknown rate mode '" + name + "'");
}

void RateConfig::validate() const {
  if (n_grid.empty()) throw InvalidArgument("n_grid is empty");
  if (n_grid.front() < 1) throw InvalidArgument("n_grid entries must be positive");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) {
      throw InvalidArgument("n_grid must be strictly increasing");
    }
  }
  if (trials < 3) throw InvalidArgument("trials must be at least 3");
  if (ref_multiplier < 4) throw InvalidArgument("ref_multiplier must be at least 4");
  if (!(kmeans_constant > 0.0) || !std::isfinite(kmeans_constant)) {
    throw InvalidArgument("kmeans constant must be positive");
  }
  if (kmeans_restarts < 1) throw InvalidArgument("kmeans restarts must be at least 1");
  if (sampler.form() == DensityForm::point_mass && mode == RateMode::kmeans) {
    throw InvalidArgument("kmeans mode needs a sampler with a density");
  }
}

std::size_t RateConfig::reference_size() const {
  return ref_multiplier * n_grid.back();
}

std::size_t resolve_thread_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WASSQUANT_THREADS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

PointSet trial_sample(const Sampler& sampler, std::size_t n, std::uint64_t seed) {
  return sampler.with_seed(derive_seed(seed, {kSampleStream})).draw(n);
}

PointSet reference_sample(const Sampler& sampler, std::size_t ref_n,
                          std::uint64_t seed) {
  return sampler.with_seed(derive_seed(seed, {kReferenceStream})).draw(ref_n);
}

double estimate_w2_to_population(const Sampler& sampler, std::size_t n,
                                 std::size_t ref_n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("n must be positive");
  if (ref_n < 4 * n) throw InvalidArgument("ref_N must be at least 4 n");
  return w2(empirical_measure(trial_sample(sampler, n, seed)),
            empirical_measure(reference_sample(sampler, ref_n, seed)));
}

std::size_t kmeans_size(double c, std::size_t n, std::size_t d) {
  const double dd = static_cast<double>(d);
  double x = c * std::pow(static_cast<double>(n), dd / (2.0 * dd + 4.0));
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-12 * std::max(1.0, nearest)) x = nearest;
  const double k = std::ceil(x);
  if (k < 1.0) return 1;
  if (k >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(k);
}

std::pair<double, double> rate_band(std::size_t d) {
  const double dd = static_cast<double>(d);
  return {-1.0 / dd - 0.15, -1.0 / (2.0 * dd + 4.0) + 0.10};
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw InvalidArgument("slope fit needs at least 3 pairs");
  const double m = static_cast<double>(pairs.size());
  std::vector<double> x, y;
  for (const auto& [n, v] : pairs) {
    if (!(n > 0.0) || !(v > 0.0) || !std::isfinite(n) || !std::isfinite(v)) {
      throw InvalidArgument("slope fit needs positive finite values");
    }
    x.push_back(std::log(n));
    y.push_back(std::log(v));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("slope fit needs distinct n values");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    sse += r * r;
  }
  return {slope, intercept, std::sqrt(sse / (m - 2.0) / sxx)};
}

RateResult run_rate_experiment(const RateConfig& cfg) {
  cfg.validate();
  const std::size_t d = std::max<std::size_t>(1, cfg.sampler.intrinsic_dim());
  const std::size_t ref_n = cfg.reference_size();

  RateResult result;
  result.mode = cfg.mode;
  result.sampler = cfg.sampler.name();
  result.intrinsic_dim = cfg.sampler.intrinsic_dim();
  result.ambient_dim = cfg.sampler.ambient_dim();
  result.reference_size = ref_n;
  result.kmeans_constant = cfg.kmeans_constant;
  result.seed = cfg.seed;
  result.n_grid = cfg.n_grid;

  const std::size_t jobs = cfg.n_grid.size() * cfg.trials;
  result.records.resize(jobs);
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    const std::size_t n = cfg.n_grid[g];
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      auto& r = result.records[g * cfg.trials + t];
      r.n = n;
      r.trial = t;
      r.seed = derive_seed(cfg.seed, {n, t});
      r.k = cfg.mode == RateMode::kmeans ? kmeans_size(cfg.kmeans_constant, n, d) : n;
      r.distance = 0.0;
    }
  }

  // Largest n first keeps workers busy until the end.
  parallel_for(jobs, resolve_thread_count(cfg.threads), [&](std::size_t j) {
    auto& r = result.records[jobs - 1 - j];
    if (cfg.mode == RateMode::empirical) {
      r.distance = estimate_w2_to_population(cfg.sampler, r.n, ref_n, r.seed);
      return;
    }
    const PointSet x = trial_sample(cfg.sampler, r.n, r.seed);
    LloydConfig lc;
    lc.k = std::min(r.k, distinct_count(x));
    lc.seed = derive_seed(r.seed, {kLloydStream});
    lc.restarts = cfg.kmeans_restarts;
    r.distance = w2(empirical_measure(reference_sample(cfg.sampler, ref_n, r.seed)),
                    kmeans_measure(x, lc));
  });

  std::vector<std::pair<double, double>> pairs;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    std::vector<double> v;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      v.push_back(result.records[g * cfg.trials + t].distance);
    }
    result.medians.push_back(median(std::move(v)));
    pairs.emplace_back(static_cast<double>(cfg.n_grid[g]), result.medians.back());
  }
  const auto [lo, hi] = rate_band(d);
  result.band_low = lo;
  result.band_high = hi;
  bool positive = pairs.size() >= 3;
  for (const auto& p : pairs) positive = positive && p.second > 0.0;
  if (positive) {
    result.fit = fit_loglog_slope(pairs);
    result.in_band = result.fit.slope >= lo && result.fit.slope <= hi;
  } else {
    // Degenerate populations (or fewer than three grid points) have no slope.
    const double nan = std::nan("");
    result.fit = {nan, nan, nan};
    result.in_band = false;
  }
  return result;
}

DecompositionTerms decomposition_terms(const Sampler& sampler, std::size_t n,
                                       std::size_t k, std::uint64_t seed,
                                       std::size_t ref_n) {
  if (n < 1) throw InvalidArgument("n must be positive");
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (k > n) throw InvalidArgument("k exceeds n");
  if (ref_n == 0) ref_n = 16 * n;

  const PointSet x = trial_sample(sampler, n, seed);
  const PointSet ref = reference_sample(sampler, ref_n, seed);
  const DiscreteMeasure rho_n = empirical_measure(x);
  const DiscreteMeasure rho = empirical_measure(ref);

  LloydConfig pop;
  pop.k = k;
  pop.restarts = 10;
  pop.seed = derive_seed(seed, {kPopulationQuantizerStream, 1});
  const PointSet train = sampler.with_seed(derive_seed(seed, {kPopulationQuantizerStream}))
                             .draw(50 * k);
  const Codebook s_k = lloyd(train, pop).codebook;

  LloydConfig own;
  own.k = std::min(k, distinct_count(x));
  own.restarts = 10;
  own.seed = derive_seed(seed, {kLloydStream});
  QuantizerResult best = lloyd(x, own);
  QuantizerResult refined = lloyd_refine(x, s_k, own);
  if (refined.empirical_cost < best.empirical_cost) best = std::move(refined);
  const Codebook& s_hat = best.codebook;

  const DiscreteMeasure pi_rho = pushforward(rho, s_k);
  const DiscreteMeasure pi_rho_n = pushforward(rho_n, s_k);
  const DiscreteMeasure pihat_rho = pushforward(rho, s_hat);
  const DiscreteMeasure pihat_rho_n = pushforward(rho_n, s_hat);

  DecompositionTerms t;
  t.a = std::sqrt(expected_distance_power(rho, s_k, 2.0));
  t.b = w2(pi_rho, pi_rho_n);
  t.c = w2(pi_rho_n, rho_n);
  t.d = w2(pihat_rho_n, rho_n);
  t.e = std::sqrt(expected_distance_power(rho, s_hat, 2.0));
  t.f = w2(pihat_rho, pihat_rho_n);
  t.n = n;
  t.k = k;
  t.reference_size = ref_n;
  return t;
}

LowerBoundReport lower_bound_check(const Sampler& sampler,
                                   const std::vector<std::size_t>& n_grid,
                                   std::uint64_t seed, std::size_t trials,
                                   std::size_t ref_multiplier, double slack) {
  if (n_grid.empty()) throw InvalidArgument("n_grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1 || (i > 0 && n_grid[i] <= n_grid[i - 1])) {
      throw InvalidArgument("n_grid must be positive and strictly increasing");
    }
  }
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  if (ref_multiplier < 4) throw InvalidArgument("ref_multiplier must be at least 4");
  if (!(slack >= 0.0 && slack < 1.0)) throw InvalidArgument("slack must lie in [0, 1)");

  LowerBoundReport report{slack, {}, true};
  for (const std::size_t n : n_grid) {
    LowerBoundRow row;
    row.n = n;
    LloydConfig vc;
    vc.restarts = 3;
    vc.seed = derive_seed(seed, {n, 0xF100});
    row.floor = estimate_vnp(sampler, n, 2.0, 20 * n, vc);
    const double bound = (1.0 - slack) * row.floor;
    row.iid.resize(trials);
    row.adversarial.resize(trials);
    row.single_point.resize(trials);
    parallel_for(trials, resolve_thread_count(), [&](std::size_t t) {
      const std::uint64_t s = derive_seed(seed, {n, t});
      const std::size_t ref_n = ref_multiplier * n;
      const PointSet x = trial_sample(sampler, n, s);
      const DiscreteMeasure rho = empirical_measure(reference_sample(sampler, ref_n, s));
      row.iid[t] = w2(rho, empirical_measure(x));

      // Adversary: a quantizer fitted to an independent sample.
      const PointSet train = sampler.with_seed(derive_seed(s, {kLloydStream})).draw(20 * n);
      LloydConfig ac;
      ac.k = std::min(n, distinct_count(train));
      ac.seed = derive_seed(s, {kLloydStream, 1});
      const Codebook fitted = lloyd(train, ac).codebook;
      row.adversarial[t] = w2(rho, pushforward(rho, fitted));

      PointSet collapsed(x.dim());
      collapsed.push_back(x[0]);
      row.single_point[t] = w2(rho, pushforward(rho, Codebook(collapsed)));
    });
    row.iid_ok = std::all_of(row.iid.begin(), row.iid.end(),
                             [&](double v) { return v >= bound; });
    row.adversarial_ok =
        std::all_of(row.adversarial.begin(), row.adversarial.end(),
                    [&](double v) { return v >= bound; }) &&
        std::all_of(row.single_point.begin(), row.single_point.end(),
                    [&](double v) { return v >= bound; });
    report.ok = report.ok && row.iid_ok && row.adversarial_ok;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace wassquant
