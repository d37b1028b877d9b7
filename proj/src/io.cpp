#include "wassquant/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "wassquant/error.hpp"

namespace wassquant {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ParseError(what + " must be a JSON object");
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ParseError("unknown field '" + key + "' in " + what);
    }
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ParseError("field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::uint64_t get_seed(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ParseError("field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double get_real(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ParseError("field '" + key + "' must be a number");
  return v.get<double>();
}

std::string get_string(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_string()) throw ParseError("field '" + key + "' must be a string");
  return v.get<std::string>();
}

Point get_point(const json& v, std::size_t dim, const std::string& what) {
  if (!v.is_array() || v.size() != dim) {
    throw ParseError(what + " must be an array of " + std::to_string(dim) + " numbers");
  }
  Point p;
  p.reserve(dim);
  for (const auto& c : v) {
    if (!c.is_number()) throw ParseError(what + " has a non-numeric coordinate");
    p.push_back(c.get<double>());
  }
  return p;
}

// Reads {"dim", <points_key>} and returns the point list.
PointSet get_points(const json& j, const std::string& key) {
  const std::size_t dim = get_count(j, "dim");
  if (dim < 1) throw ParseError("dim must be at least 1");
  const json& pts = j.at(key);
  if (!pts.is_array()) throw ParseError("'" + key + "' must be an array");
  PointSet out(dim);
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(get_point(p, dim, "each point"));
  return out;
}

template <class F>
auto with_context(F f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

std::string number(double v) { return json(v).dump(); }

void append_points(std::string& out, const PointSet& pts, const char* key) {
  out += "  \"";
  out += key;
  out += "\": [";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out += i ? ",\n    [" : "\n    [";
    const auto x = pts[i];
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (d) out += ", ";
      out += number(x[d]);
    }
    out += "]";
  }
  out += pts.empty() ? "]" : "\n  ]";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

DiscreteMeasure parse_measure(const std::string& text) {
  const json j = parse_json(text);
  return with_context([&] {
    require_object(j, "measure");
    reject_unknown(j, {"dim", "points", "weights"}, "measure");
    PointSet pts = get_points(j, "points");
    if (pts.empty()) throw ParseError("measure has no points");
    std::vector<double> w;
    if (j.contains("weights")) {
      const json& wj = j.at("weights");
      if (!wj.is_array() || wj.size() != pts.size()) {
        throw ParseError("'weights' must be an array with one entry per point");
      }
      for (const auto& v : wj) {
        if (!v.is_number()) throw ParseError("weights must be numbers");
        w.push_back(v.get<double>());
      }
    } else {
      w.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
    }
    try {
      return make_discrete_measure(pts, w);
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("invalid measure: ") + e.what());
    }
  });
}

std::string format_measure(const DiscreteMeasure& mu) {
  std::string out = "{\n  \"dim\": " + std::to_string(mu.dim()) + ",\n";
  append_points(out, mu.support(), "points");
  out += ",\n  \"weights\": [";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    out += number(mu.weight(i));
  }
  out += "\n  ]\n}\n";
  return out;
}

PointSet parse_sample(const std::string& text) {
  const json j = parse_json(text);
  return with_context([&] {
    require_object(j, "sample");
    reject_unknown(j, {"dim", "points"}, "sample");
    PointSet pts = get_points(j, "points");
    if (pts.empty()) throw ParseError("sample has no points");
    if (!pts.all_finite()) throw ParseError("sample has non-finite coordinates");
    return pts;
  });
}

Codebook parse_codebook(const std::string& text) {
  const json j = parse_json(text);
  return with_context([&] {
    require_object(j, "codebook");
    reject_unknown(j, {"dim", "centers"}, "codebook");
    PointSet pts = get_points(j, "centers");
    try {
      return Codebook(std::move(pts));
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("invalid codebook: ") + e.what());
    }
  });
}

std::string format_codebook(const Codebook& codebook) {
  std::string out = "{\n  \"dim\": " + std::to_string(codebook.dim()) + ",\n";
  append_points(out, codebook.centers(), "centers");
  out += "\n}\n";
  return out;
}

std::string format_plan(const OTResult& result) {
  std::string out = "{\n  \"p\": " + number(result.p) + ",\n  \"cost\": " +
                    number(result.cost) + ",\n  \"rows\": " +
                    std::to_string(result.plan.rows) + ",\n  \"cols\": " +
                    std::to_string(result.plan.cols) + ",\n  \"entries\": [";
  const auto& e = result.plan.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    out += i ? ",\n    [" : "\n    [";
    out += std::to_string(e[i].row) + ", " + std::to_string(e[i].col) + ", " +
           number(e[i].mass) + "]";
  }
  out += e.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("cannot write '" + path + "'");
}

namespace {

Sampler sampler_from_json(const json& j) {
  require_object(j, "sampler");
  const std::string form_name = get_string(j, "form");
  const DensityForm form = [&] {
    try {
      return density_form_from_string(form_name);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what());
    }
  }();
  std::set<std::string> allowed{"form", "embed"};
  switch (form) {
    case DensityForm::uniform_cube:
    case DensityForm::uniform_ball:
    case DensityForm::uniform_sphere_surface:
      allowed.insert("d");
      break;
    case DensityForm::truncated_gaussian_cube:
      allowed.insert({"d", "sigma"});
      break;
    case DensityForm::scaled_uniform_interval:
      allowed.insert("length");
      break;
    case DensityForm::point_mass:
      allowed.insert("point");
      break;
  }
  reject_unknown(j, allowed, "sampler '" + form_name + "'");

  auto dim = [&] { return j.contains("d") ? get_count(j, "d") : std::size_t{1}; };
  Sampler s = [&] {
    switch (form) {
      case DensityForm::uniform_cube: return Sampler::uniform_cube(dim());
      case DensityForm::uniform_ball: return Sampler::uniform_ball(dim());
      case DensityForm::uniform_sphere_surface:
        return Sampler::uniform_sphere_surface(dim());
      case DensityForm::truncated_gaussian_cube:
        return Sampler::truncated_gaussian_cube(
            dim(), j.contains("sigma") ? get_real(j, "sigma") : 0.2);
      case DensityForm::scaled_uniform_interval:
        return Sampler::scaled_uniform_interval(
            j.contains("length") ? get_real(j, "length") : 1.0);
      case DensityForm::point_mass: {
        const json& p = j.at("point");
        if (!p.is_array() || p.empty()) {
          throw ParseError("'point' must be a nonempty array of numbers");
        }
        return Sampler::point_mass(get_point(p, p.size(), "'point'"));
      }
    }
    throw ParseError("unhandled sampler form");
  }();
  if (j.contains("embed")) {
    const json& e = j.at("embed");
    require_object(e, "embed");
    reject_unknown(e, {"dim", "seed"}, "embed");
    s = embed_isometric(s, get_count(e, "dim"),
                        e.contains("seed") ? get_seed(e, "seed") : 0);
  }
  return s;
}

}  // namespace

Sampler parse_sampler(const std::string& text) {
  const json j = parse_json(text);
  return with_context([&] { return sampler_from_json(j); });
}

RateConfig parse_rate_config(const std::string& text) {
  const json j = parse_json(text);
  RateConfig cfg = with_context([&] {
    require_object(j, "config");
    reject_unknown(j,
                   {"schema", "sampler", "n_grid", "trials", "ref_multiplier",
                    "mode", "kmeans", "seed"},
                   "config");
    if (get_string(j, "schema") != "v1") {
      throw ParseError("unsupported schema '" + j.at("schema").get<std::string>() +
                       "', expected 'v1'");
    }
    RateConfig c;
    if (j.contains("sampler")) c.sampler = sampler_from_json(j.at("sampler"));
    const json& grid = j.at("n_grid");
    if (!grid.is_array()) throw ParseError("'n_grid' must be an array");
    for (const auto& v : grid) {
      if (!v.is_number_unsigned()) {
        throw ParseError("'n_grid' entries must be positive integers");
      }
      c.n_grid.push_back(v.get<std::size_t>());
    }
    if (j.contains("trials")) c.trials = get_count(j, "trials");
    if (j.contains("ref_multiplier")) c.ref_multiplier = get_count(j, "ref_multiplier");
    if (j.contains("mode")) {
      try {
        c.mode = rate_mode_from_string(get_string(j, "mode"));
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
      }
    }
    if (j.contains("kmeans")) {
      const json& k = j.at("kmeans");
      require_object(k, "kmeans");
      reject_unknown(k, {"constant", "restarts"}, "kmeans");
      if (k.contains("constant")) c.kmeans_constant = get_real(k, "constant");
      if (k.contains("restarts")) c.kmeans_restarts = get_count(k, "restarts");
    }
    if (j.contains("seed")) c.seed = get_seed(j, "seed");
    return c;
  });
  cfg.validate();
  return cfg;
}

std::string format_rate_csv(const RateResult& r) {
  std::string out = "mode,sampler,d,D,n,k,trial,distance,seed\n";
  const std::string prefix = to_string(r.mode) + "," + r.sampler + "," +
                             std::to_string(r.intrinsic_dim) + "," +
                             std::to_string(r.ambient_dim) + ",";
  char buf[32];
  for (const auto& t : r.records) {
    std::snprintf(buf, sizeof buf, "%.17g", t.distance);
    out += prefix + std::to_string(t.n) + "," + std::to_string(t.k) + "," +
           std::to_string(t.trial) + "," + buf + "," + std::to_string(t.seed) + "\n";
  }
  return out;
}

std::string format_rate_summary(const RateResult& r) {
  auto real = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); };
  ordered_json j;
  j["schema"] = "v1";
  j["mode"] = to_string(r.mode);
  j["sampler"] = r.sampler;
  j["d"] = r.intrinsic_dim;
  j["D"] = r.ambient_dim;
  j["seed"] = r.seed;
  j["reference_size"] = r.reference_size;
  if (r.mode == RateMode::kmeans) j["kmeans_constant"] = r.kmeans_constant;
  j["n_grid"] = r.n_grid;
  j["trials"] = r.n_grid.empty() ? 0 : r.records.size() / r.n_grid.size();
  ordered_json med = ordered_json::array();
  for (double m : r.medians) med.push_back(real(m));
  j["medians"] = med;
  j["slope"] = real(r.fit.slope);
  j["intercept"] = real(r.fit.intercept);
  j["stderr"] = real(r.fit.stderr_slope);
  j["band"] = {{"low", r.band_low}, {"high", r.band_high}};
  j["pass"] = r.in_band;
  if (r.mode == RateMode::kmeans) {
    j["notes"] = "k-means codebooks come from multi-restart Lloyd, an approximation of the exact k-means optimum";
  }
  return j.dump(2) + "\n";
}

std::string format_rate_svg(const RateResult& r) {
  constexpr double width = 640, height = 440, left = 70, right = 20, top = 40,
                   bottom = 50;
  double xmin = std::log10(static_cast<double>(r.n_grid.front()));
  double xmax = std::log10(static_cast<double>(r.n_grid.back()));
  if (xmax <= xmin) xmax = xmin + 1.0;
  double ymin = INFINITY, ymax = -INFINITY;
  for (const auto& t : r.records) {
    if (t.distance > 0.0) {
      ymin = std::min(ymin, std::log10(t.distance));
      ymax = std::max(ymax, std::log10(t.distance));
    }
  }
  if (!std::isfinite(ymin)) {
    ymin = -1.0;
    ymax = 0.0;
  }
  ymin = std::floor(ymin * 10.0) / 10.0 - 0.05;
  ymax = std::ceil(ymax * 10.0) / 10.0 + 0.05;
  const double xpad = 0.05 * (xmax - xmin);
  xmin -= xpad;
  xmax += xpad;
  auto sx = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * (width - left - right); };
  auto sy = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * (height - top - bottom); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"440\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"440\" fill=\"white\"/>\n";
  s += "<rect x=\"" + fixed(left, 1) + "\" y=\"" + fixed(top, 1) + "\" width=\"" +
       fixed(width - left - right, 1) + "\" height=\"" + fixed(height - top - bottom, 1) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  std::string title = to_string(r.mode) + " " + r.sampler + " d=" +
                      std::to_string(r.intrinsic_dim) + " D=" +
                      std::to_string(r.ambient_dim);
  if (std::isfinite(r.fit.slope)) title += "  slope " + fixed(r.fit.slope, 3);
  s += "<text x=\"" + fixed(left, 1) + "\" y=\"24\">" + title + "</text>\n";

  for (std::size_t n : r.n_grid) {
    const double x = sx(std::log10(static_cast<double>(n)));
    s += "<line x1=\"" + fixed(x, 2) + "\" y1=\"" + fixed(height - bottom, 1) +
         "\" x2=\"" + fixed(x, 2) + "\" y2=\"" + fixed(height - bottom + 5, 1) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(x, 2) + "\" y=\"" + fixed(height - bottom + 18, 1) +
         "\" text-anchor=\"middle\">" + std::to_string(n) + "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(ymin)); e <= static_cast<int>(std::floor(ymax)); ++e) {
    const double y = sy(e);
    s += "<line x1=\"" + fixed(left - 5, 1) + "\" y1=\"" + fixed(y, 2) + "\" x2=\"" +
         fixed(left, 1) + "\" y2=\"" + fixed(y, 2) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(left - 8, 1) + "\" y=\"" + fixed(y + 4, 2) +
         "\" text-anchor=\"end\">1e" + std::to_string(e) + "</text>\n";
  }
  s += "<text x=\"" + fixed((left + width - right) / 2, 1) + "\" y=\"" +
       fixed(height - 10, 1) + "\" text-anchor=\"middle\">n</text>\n";
  s += "<text x=\"16\" y=\"" + fixed((top + height - bottom) / 2, 1) +
       "\" transform=\"rotate(-90 16 " + fixed((top + height - bottom) / 2, 1) +
       ")\" text-anchor=\"middle\">W2 distance</text>\n";

  for (const auto& t : r.records) {
    if (!(t.distance > 0.0)) continue;
    s += "<circle cx=\"" + fixed(sx(std::log10(static_cast<double>(t.n))), 2) +
         "\" cy=\"" + fixed(sy(std::log10(t.distance)), 2) +
         "\" r=\"2\" fill=\"#999999\"/>\n";
  }
  std::string path;
  for (std::size_t g = 0; g < r.medians.size(); ++g) {
    if (!(r.medians[g] > 0.0)) continue;
    path += (path.empty() ? "M" : " L") +
            fixed(sx(std::log10(static_cast<double>(r.n_grid[g]))), 2) + " " +
            fixed(sy(std::log10(r.medians[g])), 2);
  }
  if (!path.empty()) {
    s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>\n";
  }
  if (std::isfinite(r.fit.slope)) {
    auto fit_y = [&](double lx) {
      return (r.fit.intercept + r.fit.slope * lx * std::log(10.0)) / std::log(10.0);
    };
    const double x0 = std::log10(static_cast<double>(r.n_grid.front()));
    const double x1 = std::log10(static_cast<double>(r.n_grid.back()));
    s += "<line x1=\"" + fixed(sx(x0), 2) + "\" y1=\"" + fixed(sy(fit_y(x0)), 2) +
         "\" x2=\"" + fixed(sx(x1), 2) + "\" y2=\"" + fixed(sy(fit_y(x1)), 2) +
         "\" stroke=\"#c03030\" stroke-dasharray=\"6 4\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace wassquant
