// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Rate-experiment artifacts (CSV, summary JSON, SVG)
// are written to WASSQUANT_ARTIFACTS.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "wassquant/error.hpp"
#include "wassquant/io.hpp"
#include "wassquant/quantization.hpp"
#include "wassquant/rates.hpp"
#include "wassquant/transport.hpp"

namespace fs = std::filesystem;
using namespace wassquant;
using namespace wassquant::testing;

namespace {

const std::string kCli = WASSQUANT_CLI;
const std::string kData = WASSQUANT_TEST_DATA;
const std::string kArtifacts = WASSQUANT_ARTIFACTS;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

// ---- test-side oracles ----------------------------------------------------

// W_p on the line from the quantile functions: both measures are sorted and
// the unit interval is cut at every CDF breakpoint.
double quantile_oracle(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  auto sorted = [](const DiscreteMeasure& m) {
    std::vector<std::pair<double, double>> a;
    for (std::size_t i = 0; i < m.size(); ++i) a.emplace_back(m.support()[i][0], m.weight(i));
    std::sort(a.begin(), a.end());
    return a;
  };
  const auto a = sorted(mu);
  const auto b = sorted(nu);
  long double ca = a[0].second, cb = b[0].second, t = 0, total = 0;
  std::size_t i = 0, j = 0;
  while (true) {
    const long double next = std::min(ca, cb);
    total += (next - t) * std::pow(std::abs(static_cast<long double>(a[i].first) - b[j].first),
                                   static_cast<long double>(p));
    t = next;
    const bool adv_a = ca <= cb && i + 1 < a.size();
    const bool adv_b = cb <= ca && j + 1 < b.size();
    if (!adv_a && !adv_b) break;
    if (adv_a) ca += a[++i].second;
    if (adv_b) cb += b[++j].second;
  }
  return std::pow(static_cast<double>(total), 1.0 / p);
}

double point_distance_p(std::span<const double> x, std::span<const double> y, double p) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) s += (x[d] - y[d]) * (x[d] - y[d]);
  return std::pow(std::sqrt(s), p);
}

// min over permutations of the mean matched cost, for uniform equal-size sets.
double permutation_oracle(const PointSet& x, const PointSet& y, double p) {
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += point_distance_p(x[i], y[perm[i]], p);
    best = std::min(best, s / static_cast<double>(x.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// sum_i w_i min_q ||x_i - q||^p.
double expected_dp_oracle(const DiscreteMeasure& mu, const Codebook& s, double p) {
  long double total = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double best = INFINITY;
    for (std::size_t q = 0; q < s.size(); ++q) {
      best = std::min(best, point_distance_p(mu.support()[i], s[q], p));
    }
    total += static_cast<long double>(mu.weight(i)) * best;
  }
  return static_cast<double>(total);
}

PointSet distinct_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, double scale) {
  for (;;) {
    PointSet x = random_points(rng, n, dim, scale);
    if (distinct_count(x) == n) return x;
  }
}

// ---- rate experiment helpers ------------------------------------------------

std::vector<std::size_t> powers_of_two(int lo, int hi) {
  std::vector<std::size_t> g;
  for (int e = lo; e <= hi; ++e) g.push_back(std::size_t{1} << e);
  return g;
}

RateResult run_and_save(const RateConfig& cfg, const std::string& name) {
  const auto t0 = Clock::now();
  RateResult r = run_rate_experiment(cfg);
  fs::create_directories(kArtifacts);
  write_text_file(kArtifacts + "/" + name + ".csv", format_rate_csv(r));
  write_text_file(kArtifacts + "/" + name + ".json", format_rate_summary(r));
  write_text_file(kArtifacts + "/" + name + ".svg", format_rate_svg(r));
  std::printf("  %s: slope %s (stderr %s), band [%s, %s], %.1f s\n", name.c_str(),
              fmt(r.fit.slope).c_str(), fmt(r.fit.stderr_slope, 2).c_str(),
              fmt(r.band_low).c_str(), fmt(r.band_high).c_str(), seconds_since(t0));
  std::fflush(stdout);
  return r;
}

// ---- criteria ----------------------------------------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst_line = 0.0, worst_line_lib = 0.0, worst_perm = 0.0, worst_perm_lib = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t m = random_size(rng, 1, 40), n = random_size(rng, 1, 40);
    const double p = i % 3 == 0 ? 1.0 : i % 3 == 1 ? 2.0 : 1.0 + 2.0 * uniform01(rng);
    DiscreteMeasure mu = random_measure(rng, m, 1, i % 2 == 0, 5.0);
    DiscreteMeasure nu = random_measure(rng, n, 1, i % 4 < 2, 5.0);
    if (i % 5 == 0) {
      // Integer atoms make ties in the quantile coupling.
      PointSet a(1), b(1);
      for (std::size_t k = 0; k < m; ++k) {
        const double v = static_cast<double>(rng() % 7);
        a.push_back(std::span<const double>(&v, 1));
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double v = static_cast<double>(rng() % 7);
        b.push_back(std::span<const double>(&v, 1));
      }
      mu = empirical_measure(a);
      nu = empirical_measure(b);
    }
    const double w = wasserstein(mu, nu, p).cost;
    worst_line = std::max(worst_line, rel_err(w, quantile_oracle(mu, nu, p)));
    worst_line_lib = std::max(worst_line_lib, rel_err(w, wasserstein_1d(mu, nu, p)));
  }
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = random_size(rng, 1, 6), dim = random_size(rng, 1, 3);
    const double p = i % 2 == 0 ? 2.0 : 1.0;
    const PointSet x = distinct_points(rng, n, dim, 1.0);
    const PointSet y = distinct_points(rng, n, dim, 1.0);
    const auto mu = empirical_measure(x), nu = empirical_measure(y);
    const double w = wasserstein(mu, nu, p).cost;
    worst_perm = std::max(worst_perm, rel_err(w, std::pow(permutation_oracle(x, y, p), 1.0 / p)));
    worst_perm_lib = std::max(worst_perm_lib, rel_err(w, brute_force_wasserstein(mu, nu, p)));
  }
  const double t = seconds_since(t0);
  const double worst = std::max({worst_line, worst_line_lib, worst_perm, worst_perm_lib});
  report(1, worst <= 1e-9 && t < 60.0, "oracle equivalence",
         "max rel err quantile " + fmt(std::max(worst_line, worst_line_lib), 3) +
             ", permutation " + fmt(std::max(worst_perm, worst_perm_lib), 3) +
             " (tol 1e-9), " + fmt(t, 3) + " s (limit 60 s)");
}

void criterion_2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double scale = std::pow(10.0, static_cast<double>(rng() % 5) - 2.0);
    const auto mu = random_measure(rng, random_size(rng, 1, 60), random_size(rng, 1, 4),
                                   i % 2 == 0, scale);
    const Codebook s(distinct_points(rng, random_size(rng, 1, 10), mu.dim(), scale));
    for (const double p : {1.0, 2.0}) {
      const double lhs = expected_distance_power(mu, s, p);
      const double w = wasserstein(mu, pushforward(mu, s), p).cost;
      const double tol_scale = std::max(1.0, std::pow(scale, p));
      worst = std::max(worst, std::abs(lhs - std::pow(w, p)) / tol_scale);
      worst = std::max(worst, std::abs(expected_dp_oracle(mu, s, p) - std::pow(w, p)) / tol_scale);
    }
  }
  report(2, worst <= 1e-9, "quantization/transport identity",
         "max |E d^p - W_p^p| / max(1, scale^p) = " + fmt(worst, 3) + " (tol 1e-9), " +
             fmt(seconds_since(t0), 3) + " s");
}

void criterion_3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  double worst_gap = INFINITY;
  for (int i = 0; i < 200; ++i) {
    const auto mu = random_measure(rng, random_size(rng, 2, 40), random_size(rng, 1, 3),
                                   i % 2 == 0);
    const Codebook s(distinct_points(rng, random_size(rng, 1, 8), mu.dim(), 1.0));
    const double p = i % 2 == 0 ? 2.0 : 1.0;
    const double best = wasserstein(mu, pushforward(mu, s), p).cost;
    const auto nu = random_measure_on(rng, s);
    worst_gap = std::min(worst_gap, wasserstein(mu, nu, p).cost - best);
  }
  double worst_dc = -INFINITY;
  std::size_t runs = 0;
  for (const auto& sampler : {Sampler::uniform_cube(1), Sampler::uniform_cube(2),
                              Sampler::uniform_sphere_surface(1)}) {
    for (const std::size_t k : {2, 5, 10}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto t = decomposition_terms(sampler, 128, k, seed);
        worst_dc = std::max(worst_dc, t.d - t.c);
        ++runs;
      }
    }
  }
  report(3, worst_gap >= -1e-9 && worst_dc <= 1e-9, "closest-measure inequalities",
         "min W(mu, nu on S) - W(mu, pi_S mu) = " + fmt(worst_gap, 3) +
             " over 200 instances; max (d - c) = " + fmt(worst_dc, 3) + " over " +
             std::to_string(runs) + " decompositions (tol 1e-9), " +
             fmt(seconds_since(t0), 3) + " s");
}

void criterion_4() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(i % 10);
    const PointSet x = random_points(rng, random_size(rng, 50, 400), random_size(rng, 1, 3));
    LloydConfig cfg;
    cfg.k = k;
    cfg.seed = static_cast<std::uint64_t>(i);
    cfg.restarts = 3;
    const auto q = lloyd(x, cfg);
    const double w = wasserstein(empirical_measure(x), kmeans_measure(x, cfg), 2.0).cost;
    worst = std::max(worst, rel_err(q.empirical_cost, w * w));
  }
  report(4, worst <= 1e-9, "k-means cost equals W2 squared",
         "max rel err " + fmt(worst, 3) + " over 50 Lloyd runs (tol 1e-9), " +
             fmt(seconds_since(t0), 3) + " s");
}

void criterion_5() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(505);
  double worst = 0.0, worst_small = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = random_size(rng, 1, 80), dim = random_size(rng, 1, 4);
    const double p = i % 2 == 0 ? 2.0 : 1.0 + 2.0 * uniform01(rng);
    const PointSet x = random_points(rng, n, dim);
    const PointSet y = random_points(rng, n, dim);
    const double obm = obm_cost(x, y, p);
    const double w = wasserstein(empirical_measure(x), empirical_measure(y), p).cost;
    worst = std::max(worst, std::abs(obm - std::pow(w, p)) / std::max(1.0, obm));
    if (n <= 7) worst_small = std::max(worst_small, rel_err(obm, permutation_oracle(x, y, p)));
  }
  report(5, worst <= 1e-9 && worst_small <= 1e-9, "matching identity",
         "max |obm - W_p^p| = " + fmt(worst, 3) + " over 100 pairs; obm vs permutations " +
             fmt(worst_small, 3) + " (tol 1e-9), " + fmt(seconds_since(t0), 3) + " s");
}

void criterion_6() {
  const auto t0 = Clock::now();
  LloydConfig cfg;
  cfg.restarts = 10;
  cfg.seed = 606;
  std::vector<std::pair<double, double>> pairs;
  for (const std::size_t k : {4, 8, 16, 32}) {
    const double v = estimate_vnp(Sampler::uniform_cube(2, 61), k, 2.0, 50000, cfg);
    pairs.emplace_back(static_cast<double>(k), v * v);
  }
  const double slope = fit_loglog_slope(pairs).slope;
  double worst = 0.0;
  for (std::size_t k = 1; k <= 8; ++k) {
    const double v = estimate_vnp(Sampler::uniform_cube(1, 62), k, 2.0, 100000, cfg);
    const double analytic = optimal_quantizer_1d_uniform(k).cost;  // 1/(12 k^2)
    worst = std::max(worst, std::abs(v * v - analytic) / analytic);
  }
  const double t = seconds_since(t0);
  report(6, std::abs(slope + 1.0) <= 0.25 && worst <= 0.02 && t < 300.0,
         "quantization error scaling",
         "square slope " + fmt(slope) + " (target -1 +/- 0.25); interval max rel err vs "
         "1/(12k^2) " + fmt(worst, 3) + " for k <= 8 (tol 0.02), " + fmt(t, 3) +
             " s (limit 300 s)");
}

RateConfig rate_config(const Sampler& s, const std::vector<std::size_t>& grid,
                       RateMode mode, std::uint64_t seed) {
  RateConfig cfg;
  cfg.sampler = s;
  cfg.n_grid = grid;
  cfg.trials = 10;
  cfg.ref_multiplier = 16;
  cfg.mode = mode;
  cfg.kmeans_constant = 1.0;
  cfg.seed = seed;
  return cfg;
}

std::vector<RateResult> criterion_7() {
  const auto t0 = Clock::now();
  std::vector<RateResult> results;
  bool pass = true;
  std::string detail;
  for (const std::size_t d : {1, 2, 3}) {
    const auto r = run_and_save(
        rate_config(Sampler::uniform_cube(d), powers_of_two(6, 12), RateMode::empirical, 700 + d),
        "rates_empirical_cube_d" + std::to_string(d));
    pass = pass && r.in_band;
    detail += "d=" + std::to_string(d) + " slope " + fmt(r.fit.slope) + " in [" +
              fmt(r.band_low) + ", " + fmt(r.band_high) + "]; ";
    results.push_back(r);
  }
  const double t = seconds_since(t0);
  report(7, pass && t < 1200.0, "empirical rate bands",
         detail + fmt(t, 4) + " s (limit 1200 s)");
  return results;
}

void criterion_8() {
  const auto t0 = Clock::now();
  // Grid capped at 2^10: see the README for the solver cost on this sampler.
  const auto s = embed_isometric(Sampler::uniform_sphere_surface(1), 10, 808);
  const auto r = run_and_save(rate_config(s, powers_of_two(6, 10), RateMode::empirical, 800),
                              "rates_empirical_circle_D10");
  const double t = seconds_since(t0);
  report(8, r.fit.slope <= -0.35 && t < 600.0, "intrinsic dimension governs the rate",
         "circle in D=10: slope " + fmt(r.fit.slope) + " (need <= -0.35; D=10 band floor would be " +
             fmt(rate_band(10).first) + "), grid 64..1024, " + fmt(t, 4) + " s (limit 600 s)");
}

void criterion_9(const std::vector<RateResult>& empirical) {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (const std::size_t d : {1, 2}) {
    const auto& emp = empirical[d - 1];
    const auto km = run_and_save(
        rate_config(Sampler::uniform_cube(d), powers_of_two(6, 12), RateMode::kmeans, 700 + d),
        "rates_kmeans_cube_d" + std::to_string(d));
    double worst = 0.0;
    for (std::size_t g = 0; g < km.medians.size(); ++g) {
      const double ratio = std::max(km.medians[g] / emp.medians[g], emp.medians[g] / km.medians[g]);
      worst = std::max(worst, ratio);
      std::printf("    d=%zu n=%zu k=%zu kmeans median %s empirical median %s ratio %s\n", d,
                  km.n_grid[g], km.records[g * 10].k, fmt(km.medians[g]).c_str(),
                  fmt(emp.medians[g]).c_str(), fmt(km.medians[g] / emp.medians[g]).c_str());
    }
    pass = pass && worst <= 3.0;
    detail += "d=" + std::to_string(d) + " worst median ratio " + fmt(worst) + "; ";
  }
  const double t = seconds_since(t0);
  report(9, pass && t < 1200.0, "k-means rate matches the empirical rate",
         detail + "(limit factor 3), " + fmt(t, 4) + " s (limit 1200 s)");
}

void criterion_10() {
  const auto t0 = Clock::now();
  const std::vector<std::size_t> grid{16, 32, 64, 128, 256};
  const auto rep = lower_bound_check(Sampler::uniform_cube(1), grid, 1010, 20);
  bool pass = rep.ok;
  double worst_ratio = INFINITY;
  for (const auto& row : rep.rows) {
    const double analytic = std::sqrt(optimal_quantizer_1d_uniform(row.n).cost);
    for (const auto* v : {&row.adversarial, &row.single_point, &row.iid}) {
      for (const double x : *v) {
        worst_ratio = std::min(worst_ratio, x / analytic);
        pass = pass && x >= 0.85 * analytic;
      }
    }
  }
  report(10, pass, "lower-bound floor",
         "min distance / V_{n,2}^(1/2) = " + fmt(worst_ratio) +
             " over adversarial and i.i.d. sets, n = 16..256, 20 trials (need >= 0.85), " +
             fmt(seconds_since(t0), 3) + " s");
}

struct CliRun {
  int exit_code;
  std::string out;
};

CliRun cli(const std::string& args) {
  FILE* pipe = ::popen((kCli + " " + args + " 2>&1").c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::string& path) {
  try {
    return read_text_file(path);
  } catch (const Error&) {
    return "<missing " + path + ">";
  }
}

void criterion_11() {
  const auto t0 = Clock::now();
  const std::string base = kArtifacts + "/determinism";
  const std::string golden = kData + "/golden";
  std::vector<std::string> mismatches;
  auto expect_same = [&](const std::string& what, const std::string& a, const std::string& b) {
    if (a != b) mismatches.push_back(what);
  };
  for (int rep = 0; rep < 2; ++rep) {
    const std::string dir = base + "/run" + std::to_string(rep);
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto ot = cli("ot " + kData + "/mu.json " + kData + "/nu.json --plan " + dir + "/plan.json");
    expect_same("ot stdout", ot.out, slurp(golden + "/ot_stdout.txt"));
    expect_same("ot plan", slurp(dir + "/plan.json"), slurp(golden + "/ot_plan.json"));
    const auto q = cli("quantize " + kData + "/sample.json -k 5 --seed 7 --out-dir " + dir + "/quantize");
    expect_same("quantize stdout", q.out, slurp(golden + "/quantize_stdout.txt"));
    for (const char* f : {"codebook.json", "induced_measure.json"}) {
      expect_same(std::string("quantize ") + f, slurp(dir + "/quantize/" + f),
                  slurp(golden + "/quantize/" + f));
    }
    const auto re = cli("rates " + kData + "/rates_empirical.json --out-dir " + dir +
                        "/rates_empirical --svg " + dir + "/rates_empirical/rates.svg");
    expect_same("rates empirical stdout", re.out, slurp(golden + "/rates_empirical_stdout.txt"));
    for (const char* f : {"rates.csv", "summary.json", "rates.svg"}) {
      expect_same(std::string("rates empirical ") + f, slurp(dir + "/rates_empirical/" + f),
                  slurp(golden + "/rates_empirical/" + f));
    }
    const auto rk = cli("rates " + kData + "/rates_kmeans.json --out-dir " + dir + "/rates_kmeans");
    expect_same("rates kmeans stdout", rk.out, slurp(golden + "/rates_kmeans_stdout.txt"));
    for (const char* f : {"rates.csv", "summary.json"}) {
      expect_same(std::string("rates kmeans ") + f, slurp(dir + "/rates_kmeans/" + f),
                  slurp(golden + "/rates_kmeans/" + f));
    }
    if (ot.exit_code || q.exit_code || re.exit_code || rk.exit_code) mismatches.push_back("exit code");
  }
  std::string detail = "2 reruns of ot, quantize, rates (both modes) against golden files";
  if (!mismatches.empty()) {
    detail += "; mismatched:";
    for (const auto& m : mismatches) detail += " [" + m + "]";
  }
  report(11, mismatches.empty(), "CLI determinism",
         detail + ", " + fmt(seconds_since(t0), 3) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number, e.g. `acceptance 1 2 11`.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto want = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  const auto t0 = Clock::now();
  std::printf("worker threads: %zu\n", resolve_thread_count());
  if (want(1)) criterion_1();
  if (want(2)) criterion_2();
  if (want(3)) criterion_3();
  if (want(4)) criterion_4();
  if (want(5)) criterion_5();
  if (want(6)) criterion_6();
  std::vector<RateResult> empirical;
  if (want(7) || want(9)) empirical = criterion_7();
  if (want(8)) criterion_8();
  if (want(9)) criterion_9(empirical);
  if (want(10)) criterion_10();
  if (want(11)) criterion_11();
  std::printf("%d criterion(s) failed, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
