#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"
#include "wassquant/error.hpp"
#include "wassquant/io.hpp"

using namespace wassquant;
using namespace wassquant::testing;

TEST_CASE("measure files round-trip") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mu = random_measure(rng, random_size(rng, 1, 30),
                                   random_size(rng, 1, 4), trial % 2 == 0, 1e3);
    const auto back = parse_measure(format_measure(mu));
    REQUIRE(back.size() == mu.size());
    REQUIRE(back.dim() == mu.dim());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      CHECK(std::abs(back.weight(i) - mu.weight(i)) <= 1e-15);
      for (std::size_t d = 0; d < mu.dim(); ++d) {
        CHECK(std::abs(back.support()[i][d] - mu.support()[i][d]) <= 1e-15 * std::max(1.0, std::abs(mu.support()[i][d])));
      }
    }
    // Coordinates are never rescaled, so they come back bit-identical.
    CHECK(back.support() == mu.support());
  }
}

TEST_CASE("measure parsing") {
  const auto mu = parse_measure(R"({"dim": 2, "points": [[0, 0], [1, 1]]})");
  CHECK(mu.size() == 2);
  CHECK(mu.weight(0) == 0.5);
  const auto w = parse_measure(R"({"dim": 1, "points": [[0], [1]], "weights": [0.25, 0.75]})");
  CHECK(w.weight(1) == 0.75);

  for (const char* bad : {
           "",
           "[1, 2]",
           R"({"dim": 1, "points": [[0], [1]})",
           R"({"dim": 1, "points": []})",
           R"({"dim": 2, "points": [[0]]})",
           R"({"dim": 1, "points": [["a"]]})",
           R"({"dim": 1, "points": [[0]], "weights": [0.5, 0.5]})",
           R"({"dim": 1, "points": [[0], [1]], "weights": [-0.5, 1.5]})",
           R"({"dim": 1, "points": [[0], [1]], "weights": [0.2, 0.2]})",
           R"({"dim": -1, "points": [[0]]})",
           R"({"points": [[0]]})",
           R"({"dim": 1, "points": [[0]], "extra": 1})",
       }) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_measure(bad), ParseError);
  }
}

TEST_CASE("samples keep repeated points") {
  const auto x = parse_sample(R"({"dim": 1, "points": [[0.5], [0.5], [1]]})");
  CHECK(x.size() == 3);
  CHECK_THROWS_AS(parse_sample(R"({"dim": 1, "points": [[0]], "weights": [1]})"), ParseError);
}

TEST_CASE("codebook files round-trip") {
  std::mt19937_64 rng(2);
  const Codebook c(random_points(rng, 12, 3));
  CHECK(parse_codebook(format_codebook(c)) == c);
  CHECK_THROWS_AS(parse_codebook(R"({"dim": 1, "centers": [[0], [0]]})"), ParseError);
}

TEST_CASE("plan files") {
  const auto mu = parse_measure(R"({"dim": 1, "points": [[0], [1]]})");
  const auto nu = parse_measure(R"({"dim": 1, "points": [[0.5]]})");
  const auto r = wasserstein(mu, nu, 2.0);
  const auto j = nlohmann::json::parse(format_plan(r));
  CHECK(j.at("p").get<double>() == 2.0);
  CHECK(j.at("cost").get<double>() == r.cost);
  CHECK(j.at("rows").get<int>() == 2);
  CHECK(j.at("cols").get<int>() == 1);
  CHECK(j.at("entries").size() == 2);
  CHECK(j.at("entries")[0][2].get<double>() == 0.5);
}

TEST_CASE("rate config schema") {
  const auto cfg = parse_rate_config(R"({
    "schema": "v1",
    "sampler": {"form": "uniform-sphere-surface", "d": 1, "embed": {"dim": 10, "seed": 4}},
    "n_grid": [64, 128, 256], "trials": 5, "ref_multiplier": 8,
    "mode": "kmeans", "kmeans": {"constant": 2.0, "restarts": 4}, "seed": 7})");
  CHECK(cfg.sampler.ambient_dim() == 10);
  CHECK(cfg.sampler.intrinsic_dim() == 1);
  CHECK(cfg.n_grid == std::vector<std::size_t>{64, 128, 256});
  CHECK(cfg.trials == 5);
  CHECK(cfg.ref_multiplier == 8);
  CHECK(cfg.mode == RateMode::kmeans);
  CHECK(cfg.kmeans_constant == 2.0);
  CHECK(cfg.kmeans_restarts == 4);
  CHECK(cfg.seed == 7);

  const auto defaults = parse_rate_config(R"({"schema": "v1", "n_grid": [8, 16, 32]})");
  CHECK(defaults.trials == 10);
  CHECK(defaults.ref_multiplier == 16);
  CHECK(defaults.mode == RateMode::empirical);
  CHECK(defaults.sampler.form() == DensityForm::uniform_cube);

  for (const char* bad : {
           R"({"n_grid": [8, 16, 32]})",
           R"({"schema": "v2", "n_grid": [8, 16, 32]})",
           R"({"schema": "v1", "n_grid": [8, 16, 32], "unknown": true})",
           R"({"schema": "v1", "n_grid": [8, 16, 32], "trials": "ten"})",
           R"({"schema": "v1", "n_grid": [8, -16]})",
           R"({"schema": "v1", "n_grid": [8, 16, 32], "mode": "fast"})",
           R"({"schema": "v1", "n_grid": [8, 16, 32], "kmeans": {"k": 3}})",
           R"({"schema": "v1", "n_grid": [8, 16, 32], "sampler": {"form": "gaussian"}})",
           R"({"schema": "v1", "n_grid": [8, 16, 32], "sampler": {"form": "uniform-cube", "sigma": 1}})",
           R"({"schema": "v1", "n_grid": [8, 16, 32], "sampler": {"form": "uniform-cube", "embed": {"dim": 3, "rotate": 1}}})",
       }) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_rate_config(bad), ParseError);
  }
  CHECK_THROWS_AS(parse_rate_config(R"({"schema": "v1", "n_grid": [8, 16, 32], "trials": 2})"),
                  InvalidArgument);
  CHECK_THROWS_AS(parse_rate_config(R"({"schema": "v1", "n_grid": [16, 8, 32]})"),
                  InvalidArgument);
}

TEST_CASE("sampler descriptors") {
  CHECK(parse_sampler(R"({"form": "scaled-uniform-interval", "length": 2})").length() == 2.0);
  CHECK(parse_sampler(R"({"form": "truncated-gaussian-cube", "d": 2, "sigma": 0.1})").sigma() == 0.1);
  CHECK(parse_sampler(R"({"form": "point-mass", "point": [1, 2, 3]})").ambient_dim() == 3);
  CHECK(parse_sampler(R"({"form": "uniform-ball", "d": 3})").intrinsic_dim() == 3);
}

TEST_CASE("rate outputs") {
  RateResult r;
  r.mode = RateMode::empirical;
  r.sampler = "uniform-cube";
  r.intrinsic_dim = 1;
  r.ambient_dim = 1;
  r.reference_size = 64;
  r.kmeans_constant = 1.0;
  r.seed = 3;
  r.n_grid = {4, 8, 16};
  r.records = {{4, 4, 0, 0.5, 11}, {8, 8, 0, 0.25, 12}, {16, 16, 0, 0.125, 13}};
  r.medians = {0.5, 0.25, 0.125};
  r.fit = fit_loglog_slope({{4, 0.5}, {8, 0.25}, {16, 0.125}});
  r.band_low = -1.15;
  r.band_high = -1.0 / 6.0 + 0.1;
  r.in_band = true;

  CHECK(format_rate_csv(r) ==
        "mode,sampler,d,D,n,k,trial,distance,seed\n"
        "empirical,uniform-cube,1,1,4,4,0,0.5,11\n"
        "empirical,uniform-cube,1,1,8,8,0,0.25,12\n"
        "empirical,uniform-cube,1,1,16,16,0,0.125,13\n");

  const auto j = nlohmann::json::parse(format_rate_summary(r));
  CHECK(j.at("slope").get<double>() == doctest::Approx(-1.0));
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("band").at("low").get<double>() == -1.15);
  CHECK(j.at("medians").size() == 3);
  CHECK(j.at("schema") == "v1");

  const auto svg = format_rate_svg(r);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("slope -1.000") != std::string::npos);
}
