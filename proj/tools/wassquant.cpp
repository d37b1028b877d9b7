// wassquant: exact Wasserstein distances, k-means quantization and rate
// experiments from the command line.
//
// Exit codes: 0 ok, 2 unreadable or malformed input, 3 dimension mismatch,
// 4 bad parameter (including command-line usage errors), 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wassquant/error.hpp"
#include "wassquant/io.hpp"
#include "wassquant/quantization.hpp"
#include "wassquant/rates.hpp"
#include "wassquant/transport.hpp"

namespace fs = std::filesystem;
using namespace wassquant;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitDimension = 3;
constexpr int kExitParameter = 4;

std::string significant(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.*g", digits, v);
  return buf;
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

struct OtArgs {
  std::string mu, nu;
  double p = 2.0;
  std::string plan;
};

int cmd_ot(const OtArgs& a) {
  const DiscreteMeasure mu = parse_measure(read_text_file(a.mu));
  const DiscreteMeasure nu = parse_measure(read_text_file(a.nu));
  const OTResult r = wasserstein(mu, nu, a.p);
  std::cout << significant(r.cost, 12) << "\n";
  if (!a.plan.empty()) write_text_file(a.plan, format_plan(r));
  return 0;
}

struct QuantizeArgs {
  std::string sample;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::string out_dir = ".";
};

int cmd_quantize(const QuantizeArgs& a) {
  const PointSet x = parse_sample(read_text_file(a.sample));
  LloydConfig cfg;
  cfg.k = a.k;
  cfg.seed = a.seed;
  cfg.restarts = a.restarts;
  const QuantizerResult q = lloyd(x, cfg);
  ensure_dir(a.out_dir);
  write_text_file(join(a.out_dir, "codebook.json"), format_codebook(q.codebook));
  write_text_file(join(a.out_dir, "induced_measure.json"),
                  format_measure(pushforward(empirical_measure(x), q.codebook)));
  std::cout << significant(q.empirical_cost, 17) << "\n";
  return 0;
}

struct RatesArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string svg;
};

int cmd_rates(const RatesArgs& a) {
  // Out-of-domain config values are schema violations here, not parameters.
  RateConfig cfg = [&] {
    try {
      return parse_rate_config(read_text_file(a.config));
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("invalid config: ") + e.what());
    }
  }();
  if (a.seed) cfg.seed = *a.seed;
  const RateResult r = run_rate_experiment(cfg);
  ensure_dir(a.out_dir);
  write_text_file(join(a.out_dir, "rates.csv"), format_rate_csv(r));
  write_text_file(join(a.out_dir, "summary.json"), format_rate_summary(r));
  if (!a.svg.empty()) write_text_file(a.svg, format_rate_svg(r));
  std::cout << "slope " << significant(r.fit.slope, 6) << " band ["
            << significant(r.band_low, 6) << ", " << significant(r.band_high, 6)
            << "] " << (r.in_band ? "pass" : "fail") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Wasserstein distances, k-means quantization and rate experiments"};
  app.require_subcommand(1);

  OtArgs ot;
  auto* ot_cmd = app.add_subcommand("ot", "Print W_p between two measure files");
  ot_cmd->add_option("mu", ot.mu, "First measure (JSON)")->required();
  ot_cmd->add_option("nu", ot.nu, "Second measure (JSON)")->required();
  ot_cmd->add_option("-p,--p", ot.p, "Order p >= 1")->capture_default_str();
  ot_cmd->add_option("--plan", ot.plan, "Write the optimal coupling to this file");

  QuantizeArgs qz;
  auto* qz_cmd = app.add_subcommand(
      "quantize", "Fit a k-point codebook; write codebook.json and induced_measure.json");
  qz_cmd->add_option("sample", qz.sample, "Sample file (JSON, no weights)")->required();
  qz_cmd->add_option("-k,--k", qz.k, "Codebook size")->required();
  qz_cmd->add_option("--seed", qz.seed, "Seed")->capture_default_str();
  qz_cmd->add_option("--restarts", qz.restarts, "k-means++ restarts")->capture_default_str();
  qz_cmd->add_option("--out-dir", qz.out_dir, "Output directory")->capture_default_str();

  RatesArgs rt;
  auto* rt_cmd = app.add_subcommand(
      "rates", "Run a rate experiment; write rates.csv and summary.json");
  rt_cmd->add_option("config", rt.config, "Experiment config (JSON, schema v1)")->required();
  rt_cmd->add_option("--seed", rt.seed, "Override the config seed");
  rt_cmd->add_option("--out-dir", rt.out_dir, "Output directory")->capture_default_str();
  rt_cmd->add_option("--svg", rt.svg, "Write a log-log plot to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParameter;
  }

  try {
    if (*ot_cmd) return cmd_ot(ot);
    if (*qz_cmd) return cmd_quantize(qz);
    return cmd_rates(rt);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParameter;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
