#pragma once

#include <iosfwd>
#include <string>

#include "wassquant/measures.hpp"
#include "wassquant/rates.hpp"
#include "wassquant/transport.hpp"

namespace wassquant {

// Measure files: {"dim": D, "points": [[...], ...], "weights": [...]}, weights
// optional (uniform when absent). Numbers are written in shortest round-trip
// form, so reading back gives the same doubles.

DiscreteMeasure parse_measure(const std::string& text);
std::string format_measure(const DiscreteMeasure& mu);

/// Sample files use the measure layout without weights; repeated points are
/// kept.
PointSet parse_sample(const std::string& text);

// Codebook files: {"dim": D, "centers": [[...], ...]}.
Codebook parse_codebook(const std::string& text);
std::string format_codebook(const Codebook& codebook);

// Plan files: {"p": p, "cost": W_p, "rows": m, "cols": n,
//              "entries": [[row, col, mass], ...]}.
std::string format_plan(const OTResult& result);

/// Reads a whole file; ParseError if it cannot be opened.
std::string read_text_file(const std::string& path);
/// Writes a whole file; Error if it cannot be written.
void write_text_file(const std::string& path, const std::string& text);

/// Rate experiment configuration, schema "v1":
///
///   {"schema": "v1",
///    "sampler": {"form": "uniform-cube", "d": 2,
///                "sigma": 0.2, "length": 2.0, "point": [...],
///                "embed": {"dim": 10, "seed": 1}},
///    "n_grid": [64, 128, ...], "trials": 10, "ref_multiplier": 16,
///    "mode": "empirical" | "kmeans",
///    "kmeans": {"constant": 1.0, "restarts": 3},
///    "seed": 0}
///
/// Only n_grid is required. Unknown fields, a wrong schema string or wrong
/// value types raise ParseError; values outside their domain raise
/// InvalidArgument.
RateConfig parse_rate_config(const std::string& text);
Sampler parse_sampler(const std::string& text);

/// CSV with header mode,sampler,d,D,n,k,trial,distance,seed.
std::string format_rate_csv(const RateResult& result);
/// Summary JSON: fit, band, pass flag, per-n medians and metadata.
std::string format_rate_summary(const RateResult& result);
/// Log-log plot of trial distances, medians and the fitted line.
std::string format_rate_svg(const RateResult& result);

}  // namespace wassquant
