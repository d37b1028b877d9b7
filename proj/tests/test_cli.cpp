// Runs the wassquant executable and compares its output with golden files in
// tests/data/golden (regenerate with tests/data/regenerate_golden.sh).

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "wassquant/io.hpp"
#include "wassquant/quantization.hpp"
#include "wassquant/transport.hpp"

namespace fs = std::filesystem;
using namespace wassquant;

namespace {

const std::string kCli = WASSQUANT_CLI;
const std::string kData = WASSQUANT_TEST_DATA;
const std::string kScratch = WASSQUANT_SCRATCH;

struct Run {
  int exit_code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string data(const std::string& name) { return kData + "/" + name; }
std::string golden(const std::string& name) { return read_text_file(kData + "/golden/" + name); }

std::string scratch(const std::string& name) {
  const fs::path p = fs::path(kScratch) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p.string();
}

std::string twelve(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.12g", v);
  return std::string(buf) + "\n";
}

}  // namespace

TEST_CASE("ot command") {
  SUBCASE("identical files") {
    const auto r = run("ot " + data("mu.json") + " " + data("mu.json"));
    CHECK(r.exit_code == 0);
    CHECK(r.out == "0.00000000000\n");
  }
  SUBCASE("single atoms at distance one") {
    const auto r = run("ot " + data("one_atom_a.json") + " " + data("one_atom_b.json"));
    CHECK(r.exit_code == 0);
    CHECK(r.out == "1.00000000000\n");
  }
  SUBCASE("fixture pair matches the library and the golden output") {
    const std::string plan = scratch("ot/plan.json");
    const auto r = run("ot " + data("mu.json") + " " + data("nu.json") + " --plan " + plan);
    CHECK(r.exit_code == 0);
    const auto mu = parse_measure(read_text_file(data("mu.json")));
    const auto nu = parse_measure(read_text_file(data("nu.json")));
    const auto lib = wasserstein(mu, nu, 2.0);
    CHECK(r.out == twelve(lib.cost));
    CHECK(r.out == golden("ot_stdout.txt"));
    CHECK(read_text_file(plan) == format_plan(lib));
    CHECK(read_text_file(plan) == golden("ot_plan.json"));
  }
  SUBCASE("order p") {
    const auto mu = parse_measure(read_text_file(data("mu.json")));
    const auto nu = parse_measure(read_text_file(data("nu.json")));
    const auto r = run("ot " + data("mu.json") + " " + data("nu.json") + " --p 1");
    CHECK(r.out == twelve(wasserstein(mu, nu, 1.0).cost));
  }
  SUBCASE("exit codes") {
    CHECK(run("ot " + data("mu.json") + " " + data("malformed.json")).exit_code == 2);
    CHECK(run("ot " + data("mu.json") + " " + data("does_not_exist.json")).exit_code == 2);
    CHECK(run("ot " + data("mu.json") + " " + data("mu3.json")).exit_code == 3);
    CHECK(run("ot " + data("mu.json") + " " + data("nu.json") + " --p 0.5").exit_code == 4);
    CHECK(run("ot " + data("mu.json")).exit_code == 4);
    CHECK(run("").exit_code == 4);
    CHECK(run("ot --help").exit_code == 0);
  }
}

TEST_CASE("quantize command") {
  SUBCASE("golden files and byte-identical reruns") {
    for (int rep = 0; rep < 2; ++rep) {
      const std::string dir = scratch("quantize/run" + std::to_string(rep));
      const auto r = run("quantize " + data("sample.json") + " -k 5 --seed 7 --out-dir " + dir);
      CHECK(r.exit_code == 0);
      CHECK(r.out == golden("quantize_stdout.txt"));
      CHECK(read_text_file(dir + "/codebook.json") == golden("quantize/codebook.json"));
      CHECK(read_text_file(dir + "/induced_measure.json") == golden("quantize/induced_measure.json"));
    }
  }
  SUBCASE("printed cost equals the squared distance to the induced measure") {
    const std::string dir = scratch("quantize/identity");
    const auto q = run("quantize " + data("sample.json") + " -k 6 --seed 3 --out-dir " + dir);
    REQUIRE(q.exit_code == 0);
    const double cost = std::stod(q.out);
    const auto ot = run("ot " + data("sample.json") + " " + dir + "/induced_measure.json");
    REQUIRE(ot.exit_code == 0);
    const double w = std::stod(ot.out);
    CHECK(std::abs(cost - w * w) <= 1e-9 * std::max(1.0, cost));
    // The induced measure's weights are multiples of 1/n.
    const auto induced = parse_measure(read_text_file(dir + "/induced_measure.json"));
    const double n = static_cast<double>(parse_sample(read_text_file(data("sample.json"))).size());
    for (double wt : induced.weights()) CHECK(std::abs(wt * n - std::round(wt * n)) <= 1e-9);
  }
  SUBCASE("k = n reproduces the empirical measure") {
    const auto x = parse_sample(read_text_file(data("sample.json")));
    const std::string dir = scratch("quantize/all");
    const auto r = run("quantize " + data("sample.json") + " -k " + std::to_string(x.size()) +
                       " --out-dir " + dir);
    CHECK(r.exit_code == 0);
    CHECK(std::stod(r.out) == 0.0);
    const auto induced = parse_measure(read_text_file(dir + "/induced_measure.json"));
    CHECK(wasserstein(induced, empirical_measure(x), 2.0).cost == 0.0);
    CHECK(induced.size() == x.size());
  }
  SUBCASE("exit codes") {
    const std::string dir = scratch("quantize/errors");
    CHECK(run("quantize " + data("sample.json") + " -k 61 --out-dir " + dir).exit_code == 4);
    CHECK(run("quantize " + data("sample.json") + " -k 0 --out-dir " + dir).exit_code == 4);
    CHECK(run("quantize " + data("malformed.json") + " -k 1 --out-dir " + dir).exit_code == 2);
    CHECK(run("quantize " + data("mu.json") + " -k 1 --out-dir " + dir).exit_code == 2);
    CHECK(run("quantize " + data("sample.json") + " --out-dir " + dir).exit_code == 4);
  }
}

TEST_CASE("rates command") {
  SUBCASE("empirical demo: golden files, slope in band, byte-identical reruns") {
    for (int rep = 0; rep < 2; ++rep) {
      const std::string dir = scratch("rates/empirical" + std::to_string(rep));
      const auto r = run("rates " + data("rates_empirical.json") + " --out-dir " + dir +
                         " --svg " + dir + "/rates.svg");
      CHECK(r.exit_code == 0);
      CHECK(r.out == golden("rates_empirical_stdout.txt"));
      CHECK(read_text_file(dir + "/rates.csv") == golden("rates_empirical/rates.csv"));
      CHECK(read_text_file(dir + "/summary.json") == golden("rates_empirical/summary.json"));
      CHECK(read_text_file(dir + "/rates.svg") == golden("rates_empirical/rates.svg"));
      const auto summary = read_text_file(dir + "/summary.json");
      CHECK(summary.find("\"slope\": -") != std::string::npos);
      CHECK(summary.find("\"pass\": true") != std::string::npos);
    }
  }
  SUBCASE("kmeans mode with C = 1 uses k = ceil(n^(d/(2d+4)))") {
    const std::string dir = scratch("rates/kmeans");
    const auto r = run("rates " + data("rates_kmeans.json") + " --out-dir " + dir);
    CHECK(r.exit_code == 0);
    const std::string csv = read_text_file(dir + "/rates.csv");
    CHECK(csv == golden("rates_kmeans/rates.csv"));
    // d = 2: k = ceil(n^(1/4)) = 2, 3, 3, 4 for n = 16, 32, 64, 128.
    std::size_t rows = 0;
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
      const std::size_t end = csv.find('\n', pos);
      const std::string line = csv.substr(pos, end - pos);
      std::array<std::string, 9> f;
      std::size_t start = 0;
      for (auto& field : f) {
        const std::size_t comma = line.find(',', start);
        field = line.substr(start, comma - start);
        start = comma + 1;
      }
      const double n = std::stod(f[4]);
      CHECK(std::stoul(f[5]) == static_cast<unsigned long>(std::ceil(std::pow(n, 0.25) - 1e-12)));
      ++rows;
      pos = end + 1;
    }
    CHECK(rows == 12);
  }
  SUBCASE("seed override changes the records") {
    const std::string dir = scratch("rates/reseeded");
    CHECK(run("rates " + data("rates_empirical.json") + " --seed 99 --out-dir " + dir).exit_code == 0);
    CHECK(read_text_file(dir + "/rates.csv") != golden("rates_empirical/rates.csv"));
  }
  SUBCASE("schema violations") {
    const std::string dir = scratch("rates/bad");
    CHECK(run("rates " + data("rates_bad_field.json") + " --out-dir " + dir).exit_code == 2);
    CHECK(run("rates " + data("malformed.json") + " --out-dir " + dir).exit_code == 2);
    CHECK(run("rates " + data("mu.json") + " --out-dir " + dir).exit_code == 2);
    CHECK(run("rates " + data("rates_bad_trials.json") + " --out-dir " + dir).exit_code == 2);
  }
}
