#include "wassquant/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <unordered_set>

#include "auction.hpp"
#include "network_simplex.hpp"
#include "wassquant/error.hpp"

namespace wassquant {
namespace {

using Flow = detail::TransportSimplex::Flow;

constexpr std::int64_t kMaxExactDenominator = std::int64_t{1} << 40;
constexpr std::int64_t kRoundingResolution = std::int64_t{1} << 40;
constexpr std::size_t kDenseArcLimit = std::size_t{1} << 21;
constexpr std::size_t kNeighbourArcs = 16;
constexpr std::size_t kPricedArcsPerTarget = 4;
constexpr int kAuctionMinTargets = 256;
constexpr double kAuctionStartEpsilon = 0.5;
constexpr double kAuctionFinalEpsilon = 1e-3;
constexpr double kRelativePivotTolerance = 1e-12;

void check_order(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw InvalidArgument("order p must be a finite number >= 1");
  }
}

void check_same_dim(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) {
    throw DimensionMismatch("measures live in different dimensions");
  }
}

/// Best rational approximation of w in (0, 1] with error below 1e-14.
std::optional<std::int64_t> denominator_of(double w) {
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = w;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    if (a > 1e12) return std::nullopt;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > kMaxExactDenominator) return std::nullopt;
    if (std::abs(w - static_cast<double>(h2) / static_cast<double>(k2)) <=
        1e-14) {
      return k2;
    }
    const double frac = x - a;
    if (frac <= 0.0) return std::nullopt;
    x = 1.0 / frac;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
  }
  return std::nullopt;
}

struct IntegerMasses {
  std::vector<Flow> a;
  std::vector<Flow> b;
  Flow total = 0;
};

std::optional<IntegerMasses> exact_integer_masses(
    const std::vector<double>& wa, const std::vector<double>& wb) {
  std::int64_t lcm = 1;
  for (const auto* ws : {&wa, &wb}) {
    for (double w : *ws) {
      const auto den = denominator_of(w);
      if (!den) return std::nullopt;
      const std::int64_t g = std::gcd(lcm, *den);
      const std::int64_t factor = *den / g;
      if (lcm > kMaxExactDenominator / factor) return std::nullopt;
      lcm *= factor;
    }
  }
  IntegerMasses out;
  out.total = lcm;
  const double scale = static_cast<double>(lcm);
  for (auto [ws, counts] : {std::pair{&wa, &out.a}, std::pair{&wb, &out.b}}) {
    Flow sum = 0;
    for (double w : *ws) {
      const Flow c = std::llround(w * scale);
      if (c <= 0 || std::abs(static_cast<double>(c) / scale - w) > 1e-13) {
        return std::nullopt;
      }
      counts->push_back(c);
      sum += c;
    }
    if (sum != lcm) return std::nullopt;
  }
  return out;
}

/// Largest-remainder rounding of weights onto a grid of 2^-40; every atom
/// keeps at least one unit.
std::vector<Flow> rounded_masses(const std::vector<double>& w) {
  const double scale = static_cast<double>(kRoundingResolution);
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<Flow> counts(w.size());
  std::vector<double> remainder(w.size());
  Flow assigned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double exact = w[i] / sum * scale;
    counts[i] = std::max<Flow>(1, static_cast<Flow>(std::floor(exact)));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return remainder[x] > remainder[y];
  });
  for (std::size_t t = 0; assigned < kRoundingResolution; t = (t + 1) % w.size()) {
    ++counts[order[t]];
    ++assigned;
  }
  for (std::size_t t = w.size(); assigned > kRoundingResolution;) {
    t = (t == 0 ? w.size() : t) - 1;
    if (counts[order[t]] > 1) {
      --counts[order[t]];
      --assigned;
    }
  }
  return counts;
}

IntegerMasses integer_masses(const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu) {
  if (auto exact = exact_integer_masses(mu.weights(), nu.weights())) {
    return *exact;
  }
  return {rounded_masses(mu.weights()), rounded_masses(nu.weights()),
          kRoundingResolution};
}

/// Hilbert-curve keys over a shared bounding box (Skilling's transpose
/// construction). Only used to order atoms for the initial basis.
std::vector<std::uint64_t> hilbert_keys(const PointSet& pts,
                                        const std::vector<double>& lo,
                                        const std::vector<double>& hi) {
  const std::size_t dims = std::min<std::size_t>(pts.dim(), 31);
  const int bits = static_cast<int>(std::min<std::size_t>(20, 62 / dims));
  const double cells = std::ldexp(1.0, bits) - 1.0;
  std::vector<std::uint64_t> keys(pts.size());
  std::vector<std::uint64_t> x(dims);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto p = pts[i];
    for (std::size_t d = 0; d < dims; ++d) {
      const double span = hi[d] - lo[d];
      const double t = span > 0.0 ? (p[d] - lo[d]) / span : 0.0;
      x[d] = static_cast<std::uint64_t>(std::clamp(t, 0.0, 1.0) * cells);
    }
    const std::uint64_t top = std::uint64_t{1} << (bits - 1);
    for (std::uint64_t q = top; q > 1; q >>= 1) {
      const std::uint64_t mask = q - 1;
      for (std::size_t d = 0; d < dims; ++d) {
        if (x[d] & q) {
          x[0] ^= mask;
        } else {
          const std::uint64_t t = (x[0] ^ x[d]) & mask;
          x[0] ^= t;
          x[d] ^= t;
        }
      }
    }
    for (std::size_t d = 1; d < dims; ++d) x[d] ^= x[d - 1];
    std::uint64_t t = 0;
    for (std::uint64_t q = top; q > 1; q >>= 1) {
      if (x[dims - 1] & q) t ^= q - 1;
    }
    for (std::size_t d = 0; d < dims; ++d) x[d] ^= t;
    std::uint64_t key = 0;
    for (int b = bits - 1; b >= 0; --b) {
      for (std::size_t d = 0; d < dims; ++d) key = (key << 1) | ((x[d] >> b) & 1U);
    }
    keys[i] = key;
  }
  return keys;
}

std::vector<std::size_t> curve_order(const PointSet& pts,
                                     const std::vector<double>& lo,
                                     const std::vector<double>& hi) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (pts.dim() == 1) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pts[a][0] < pts[b][0];
    });
    return order;
  }
  const auto keys = hilbert_keys(pts, lo, hi);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

struct ArcKeyHash {
  std::size_t operator()(std::uint64_t k) const {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    return static_cast<std::size_t>(k);
  }
};

std::uint64_t arc_key(int i, int j) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
         static_cast<std::uint32_t>(j);
}

/// Spanning tree from the northwest-corner rule with both sides ordered along
/// a space-filling curve.
std::vector<detail::TransportSimplex::BasisArc> northwest_corner_basis(
    const PointSet& src, const std::vector<Flow>& supply, const PointSet& dst,
    const std::vector<Flow>& demand, const std::vector<double>& lo,
    const std::vector<double>& hi, double p) {
  const int m = static_cast<int>(src.size());
  const int n = static_cast<int>(dst.size());
  auto cost = [&](int i, int j) {
    return power_from_squared(squared_distance(src[i], dst[j]), p);
  };
  const auto src_order = curve_order(src, lo, hi);
  const auto dst_order = curve_order(dst, lo, hi);
  std::vector<detail::TransportSimplex::BasisArc> basis;
  basis.reserve(static_cast<std::size_t>(m + n - 1));
  std::vector<Flow> s = supply, d = demand;
  int si = 0, dj = 0;
  while (true) {
    const int i = static_cast<int>(src_order[si]);
    const int j = static_cast<int>(dst_order[dj]);
    if (si == m - 1 && dj == n - 1) {
      basis.push_back({i, j, cost(i, j), d[j]});
      break;
    }
    if (dj == n - 1 || (si < m - 1 && s[i] <= d[j])) {
      basis.push_back({i, j, cost(i, j), s[i]});
      d[j] -= s[i];
      s[i] = 0;
      ++si;
    } else {
      basis.push_back({i, j, cost(i, j), d[j]});
      s[i] -= d[j];
      d[j] = 0;
      ++dj;
    }
  }
  return basis;
}

/// Spanning tree built from an auction assignment of unit targets. Each
/// source and its assigned targets form a star; stars are linked by arcs from
/// a child star's source into a target of its parent star, rooted at the
/// star holding the last target (the one carrying the perturbation surplus).
/// With that orientation every tree flow is positive. Returns an empty basis
/// when the auction fails.
std::vector<detail::TransportSimplex::BasisArc> auction_basis(
    const detail::CandidateArcs& candidates, const std::vector<Flow>& units,
    const std::vector<Flow>& supply, const std::vector<Flow>& demand,
    const PointSet& src, const PointSet& dst, double p) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  // Scaling runs from the largest candidate cost down to a fraction of the
  // typical nearest-source cost.
  double typical = 0.0;
  for (int j = 0; j < n; ++j) typical += candidates.cost[candidates.offset[j]];
  typical = std::max(typical / n, std::numeric_limits<double>::min());
  const double largest =
      *std::max_element(candidates.cost.begin(), candidates.cost.end());
  const auto auction = detail::auction_assignment(
      units, candidates, largest * kAuctionStartEpsilon,
      typical * kAuctionFinalEpsilon);
  if (auction.owner.empty()) return {};
  const auto& owner = auction.owner;
  const auto& price = auction.source_price;

  std::vector<double> own_cost(n);
  std::vector<std::vector<int>> star(m);
  for (int j = 0; j < n; ++j) {
    star[owner[j]].push_back(j);
    own_cost[j] = power_from_squared(squared_distance(src[owner[j]], dst[j]), p);
  }

  // Prim-style growth over stars, cheapest reduced linking cost first.
  struct Link {
    double key;
    int source;
    int target;
    bool operator>(const Link& o) const { return key > o.key; }
  };
  std::priority_queue<Link, std::vector<Link>, std::greater<>> frontier;
  std::vector<char> joined(m, 0);
  std::vector<int> join_order;
  std::vector<int> link_target(m, -1);
  auto join = [&](int i) {
    joined[i] = 1;
    join_order.push_back(i);
    for (int j : star[i]) {
      const double base = own_cost[j] + price[owner[j]];
      for (std::size_t e = candidates.offset[j]; e < candidates.offset[j + 1]; ++e) {
        const int s = candidates.source[e];
        if (!joined[s]) frontier.push({candidates.cost[e] + price[s] - base, s, j});
      }
    }
  };
  const int root_target = n - 1;
  join(owner[root_target]);
  while (static_cast<int>(join_order.size()) < m) {
    int next = -1;
    while (!frontier.empty()) {
      const Link link = frontier.top();
      frontier.pop();
      if (!joined[link.source]) {
        next = link.source;
        link_target[next] = link.target;
        break;
      }
    }
    if (next < 0) {
      next = static_cast<int>(std::find(joined.begin(), joined.end(), 0) -
                              joined.begin());
      link_target[next] = root_target;
    }
    join(next);
  }

  // Link flows are the perturbed net supplies of the hanging subtrees.
  std::vector<Flow> subtree(m);
  for (int i = 0; i < m; ++i) {
    subtree[i] = supply[i];
    for (int j : star[i]) subtree[i] -= demand[j];
  }
  std::vector<Flow> inflow(n, 0);
  std::vector<Flow> link_flow(m, 0);
  for (auto it = join_order.rbegin(); it + 1 != join_order.rend(); ++it) {
    const int i = *it;
    const int j = link_target[i];
    if (subtree[i] <= 0) return {};
    link_flow[i] = subtree[i];
    inflow[j] += subtree[i];
    subtree[owner[j]] += subtree[i];
  }

  std::vector<detail::TransportSimplex::BasisArc> basis;
  basis.reserve(static_cast<std::size_t>(m + n - 1));
  for (int j = 0; j < n; ++j) {
    const Flow f = demand[j] - inflow[j];
    if (f <= 0) return {};
    basis.push_back({owner[j], j, own_cost[j], f});
  }
  for (int i : join_order) {
    if (link_target[i] < 0) continue;
    const int j = link_target[i];
    basis.push_back({i, j,
                     power_from_squared(squared_distance(src[i], dst[j]), p),
                     link_flow[i]});
  }
  return basis;
}

/// Sources grouped into small spatially coherent blocks (consecutive along
/// the curve order) with bounding boxes, for exact pruning of nearest-source
/// and reduced-cost scans.
class SourceBlocks {
 public:
  SourceBlocks(const PointSet& src, const std::vector<std::size_t>& order)
      : dim_(src.dim()) {
    for (std::size_t begin = 0; begin < order.size(); begin += kBlockSize) {
      const std::size_t end = std::min(order.size(), begin + kBlockSize);
      starts_.push_back(begin);
      std::vector<double> lo(dim_, std::numeric_limits<double>::infinity());
      std::vector<double> hi(dim_, -std::numeric_limits<double>::infinity());
      for (std::size_t t = begin; t < end; ++t) {
        const auto x = src[order[t]];
        index_.push_back(static_cast<int>(order[t]));
        coords_.insert(coords_.end(), x.begin(), x.end());
        for (std::size_t d = 0; d < dim_; ++d) {
          lo[d] = std::min(lo[d], x[d]);
          hi[d] = std::max(hi[d], x[d]);
        }
      }
      box_lo_.insert(box_lo_.end(), lo.begin(), lo.end());
      box_hi_.insert(box_hi_.end(), hi.begin(), hi.end());
    }
    starts_.push_back(order.size());
  }

  std::size_t num_blocks() const { return starts_.size() - 1; }
  std::size_t begin(std::size_t b) const { return starts_[b]; }
  std::size_t end(std::size_t b) const { return starts_[b + 1]; }
  int source(std::size_t t) const { return index_[t]; }

  /// Squared distance from y to the slot-t source.
  double squared_distance_to(std::size_t t, std::span<const double> y) const {
    const double* x = coords_.data() + t * dim_;
    double s = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      const double diff = x[d] - y[d];
      s += diff * diff;
    }
    return s;
  }

  /// Lower bound on the squared distance from y to any source of block b.
  double squared_box_distance(std::size_t b, std::span<const double> y) const {
    const double* lo = box_lo_.data() + b * dim_;
    const double* hi = box_hi_.data() + b * dim_;
    double s = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      const double gap = std::max({0.0, lo[d] - y[d], y[d] - hi[d]});
      s += gap * gap;
    }
    return s;
  }

 private:
  static constexpr std::size_t kBlockSize = 16;
  std::size_t dim_;
  std::vector<std::size_t> starts_;
  std::vector<int> index_;
  std::vector<double> coords_;
  std::vector<double> box_lo_;
  std::vector<double> box_hi_;
};

/// Solves the transportation problem between `src` (the smaller side) and
/// `dst`. Returns entries (src index, dst index, unperturbed integer mass).
struct RawEntry {
  std::size_t src;
  std::size_t dst;
  Flow mass;
};

std::vector<RawEntry> solve_transport(const PointSet& src,
                                      const std::vector<Flow>& a,
                                      const PointSet& dst,
                                      const std::vector<Flow>& b, double p) {
  const int m = static_cast<int>(src.size());
  const int n = static_cast<int>(dst.size());
  auto cost = [&](int i, int j) {
    return power_from_squared(squared_distance(src[i], dst[j]), p);
  };

  // Perturbed supplies a_i * K + 1 and demands b_j * K (+ m on the last
  // target) make every basis nondegenerate; since the perturbation of any
  // subtree sum is at most m < K/2, the original flow of a basic arc is
  // recovered as floor((flow + m) / K).
  const Flow total = std::accumulate(a.begin(), a.end(), Flow{0});
  const Flow factor = 2 * static_cast<Flow>(m) + 1;
  if (total > (std::numeric_limits<Flow>::max() / 4) / factor) {
    throw InternalFault("transport masses overflow the integer flow range");
  }
  std::vector<Flow> supply(m), demand(n);
  for (int i = 0; i < m; ++i) supply[i] = a[i] * factor + 1;
  for (int j = 0; j < n; ++j) demand[j] = b[j] * factor;
  demand[n - 1] += m;

  // Shared bounding box: curve ordering and cost scale.
  const std::size_t dim = src.dim();
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (const PointSet* ps : {&src, &dst}) {
    for (std::size_t i = 0; i < ps->size(); ++i) {
      const auto x = (*ps)[i];
      for (std::size_t d = 0; d < dim; ++d) {
        lo[d] = std::min(lo[d], x[d]);
        hi[d] = std::max(hi[d], x[d]);
      }
    }
  }
  double diag_sq = 0.0;
  for (std::size_t d = 0; d < dim; ++d) diag_sq += (hi[d] - lo[d]) * (hi[d] - lo[d]);
  const double cost_scale = std::max(power_from_squared(diag_sq, p),
                                     std::numeric_limits<double>::min());
  const double tolerance = kRelativePivotTolerance * cost_scale;

  const bool dense =
      static_cast<std::size_t>(m) * static_cast<std::size_t>(n) <= kDenseArcLimit;
  const bool unit_targets =
      std::all_of(b.begin(), b.end(), [](Flow x) { return x == 1; });

  const auto src_order = curve_order(src, lo, hi);
  const SourceBlocks blocks(src, src_order);

  // Candidate arcs: each target's nearest sources.
  detail::CandidateArcs candidates;
  if (!dense || (unit_targets && n >= kAuctionMinTargets)) {
    // With unit targets, filling sources along the curve order gives every
    // target one source; keeping that arc makes the candidate graph feasible.
    std::vector<int> curve_owner;
    if (unit_targets) {
      curve_owner.resize(n);
      std::size_t si = 0;
      Flow left = a[src_order[0]];
      for (std::size_t t : curve_order(dst, lo, hi)) {
        if (left == 0) left = a[src_order[++si]];
        curve_owner[t] = static_cast<int>(src_order[si]);
        --left;
      }
    }
    const std::size_t keep = std::min<std::size_t>(kNeighbourArcs, m);
    candidates.offset.reserve(n + 1);
    candidates.offset.push_back(0);
    std::vector<std::pair<double, int>> best;
    std::vector<std::pair<double, std::size_t>> near_blocks(blocks.num_blocks());
    for (int j = 0; j < n; ++j) {
      const auto y = dst[j];
      for (std::size_t bl = 0; bl < blocks.num_blocks(); ++bl) {
        near_blocks[bl] = {blocks.squared_box_distance(bl, y), bl};
      }
      std::sort(near_blocks.begin(), near_blocks.end());
      best.clear();
      for (const auto& [bound, bl] : near_blocks) {
        if (best.size() == keep && bound >= best.front().first) break;
        for (std::size_t t = blocks.begin(bl); t < blocks.end(bl); ++t) {
          const double sq = blocks.squared_distance_to(t, y);
          if (best.size() < keep) {
            best.emplace_back(sq, blocks.source(t));
            std::push_heap(best.begin(), best.end());
          } else if (sq < best.front().first) {
            std::pop_heap(best.begin(), best.end());
            best.back() = {sq, blocks.source(t)};
            std::push_heap(best.begin(), best.end());
          }
        }
      }
      std::sort_heap(best.begin(), best.end());
      if (!curve_owner.empty() &&
          std::none_of(best.begin(), best.end(),
                       [&](const auto& x) { return x.second == curve_owner[j]; })) {
        best.emplace_back(squared_distance(src[curve_owner[j]], y),
                          curve_owner[j]);
      }
      for (const auto& [sq, i] : best) {
        candidates.source.push_back(i);
        candidates.cost.push_back(power_from_squared(sq, p));
      }
      candidates.offset.push_back(candidates.source.size());
    }
  }

  std::vector<detail::TransportSimplex::BasisArc> basis;
  // On a line the sorted northwest-corner tree is already optimal (the cost
  // is convex in the gap), so only higher dimensions use the auction.
  if (unit_targets && dim > 1 && !candidates.offset.empty()) {
    basis = auction_basis(candidates, a, supply, demand, src, dst, p);
  }
  if (basis.empty()) {
    basis = northwest_corner_basis(src, supply, dst, demand, lo, hi, p);
  }

  detail::TransportSimplex simplex(supply, demand, tolerance);
  simplex.set_basis(basis);

  std::unordered_set<std::uint64_t, ArcKeyHash> in_basis;
  for (const auto& arc : basis) in_basis.insert(arc_key(arc.source, arc.target));

  if (dense) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!in_basis.count(arc_key(i, j))) simplex.add_arc(i, j, cost(i, j));
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      for (std::size_t e = candidates.offset[j]; e < candidates.offset[j + 1]; ++e) {
        const int i = candidates.source[e];
        if (!in_basis.count(arc_key(i, j))) simplex.add_arc(i, j, candidates.cost[e]);
      }
    }
  }

  const std::size_t pivot_budget =
      std::size_t{1000} * static_cast<std::size_t>(m + n) + 1000000;
  std::vector<std::pair<double, int>> worst;
  std::vector<double> block_potential(blocks.num_blocks());
  while (true) {
    simplex.optimize(pivot_budget);
    simplex.refresh_potentials();
    std::size_t added = 0;
    if (!dense) {
      // Full pricing: every pair (i, j) with a negative reduced cost is a
      // candidate; each target contributes its most violated arcs. Blocks
      // whose box distance plus smallest potential cannot beat the threshold
      // are skipped.
      for (std::size_t bl = 0; bl < blocks.num_blocks(); ++bl) {
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t t = blocks.begin(bl); t < blocks.end(bl); ++t) {
          lowest = std::min(lowest, simplex.source_potential(blocks.source(t)));
        }
        block_potential[bl] = lowest;
      }
      for (int j = 0; j < n; ++j) {
        const auto y = dst[j];
        const double threshold = simplex.target_potential(j) - tolerance;
        worst.clear();
        for (std::size_t bl = 0; bl < blocks.num_blocks(); ++bl) {
          if (power_from_squared(blocks.squared_box_distance(bl, y), p) +
                  block_potential[bl] >=
              threshold) {
            continue;
          }
          for (std::size_t t = blocks.begin(bl); t < blocks.end(bl); ++t) {
            const int i = blocks.source(t);
            const double v =
                power_from_squared(blocks.squared_distance_to(t, y), p) +
                simplex.source_potential(i);
            if (v < threshold) worst.emplace_back(v, i);
          }
        }
        if (worst.empty()) continue;
        if (worst.size() > kPricedArcsPerTarget) {
          std::nth_element(worst.begin(), worst.begin() + kPricedArcsPerTarget,
                           worst.end());
          worst.resize(kPricedArcsPerTarget);
        }
        for (const auto& [v, i] : worst) {
          simplex.add_arc(i, j, cost(i, j));
          ++added;
        }
      }
    }
    if (added == 0 && simplex.optimize(pivot_budget) == 0) break;
  }

  std::vector<RawEntry> out;
  for (const auto& arc : simplex.tree_arcs()) {
    const Flow original = (arc.flow + m) / factor;
    if (arc.flow < 0) throw InternalFault("negative flow in optimal basis");
    if (original > 0) {
      out.push_back({static_cast<std::size_t>(arc.source),
                     static_cast<std::size_t>(arc.target), original});
    }
  }
  return out;
}

}  // namespace

std::vector<double> TransportPlan::row_marginals() const {
  std::vector<double> out(rows, 0.0);
  for (const auto& e : entries) out[e.row] += e.mass;
  return out;
}

std::vector<double> TransportPlan::col_marginals() const {
  std::vector<double> out(cols, 0.0);
  for (const auto& e : entries) out[e.col] += e.mass;
  return out;
}

double plan_cost(const TransportPlan& plan, const DiscreteMeasure& mu,
                 const DiscreteMeasure& nu, double p) {
  check_order(p);
  check_same_dim(mu, nu);
  long double total = 0.0L;
  for (const auto& e : plan.entries) {
    total += static_cast<long double>(e.mass) *
             distance_power(mu.support()[e.row], nu.support()[e.col], p);
  }
  return std::pow(static_cast<double>(total), 1.0 / p);
}

OTResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     double p) {
  check_order(p);
  check_same_dim(mu, nu);
  OTResult result;
  result.p = p;
  result.plan.rows = mu.size();
  result.plan.cols = nu.size();

  if (mu.size() == 1 || nu.size() == 1) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      for (std::size_t j = 0; j < nu.size(); ++j) {
        const double mass = mu.size() == 1 ? nu.weight(j) : mu.weight(i);
        result.plan.entries.push_back({i, j, mass});
        total += static_cast<long double>(mass) *
                 distance_power(mu.support()[i], nu.support()[j], p);
      }
    }
    result.cost = std::pow(static_cast<double>(total), 1.0 / p);
    return result;
  }

  const IntegerMasses masses = integer_masses(mu, nu);
  const bool swap = mu.size() > nu.size();
  const auto raw = swap ? solve_transport(nu.support(), masses.b,
                                          mu.support(), masses.a, p)
                        : solve_transport(mu.support(), masses.a,
                                          nu.support(), masses.b, p);

  const double unit = 1.0 / static_cast<double>(masses.total);
  long double total = 0.0L;
  for (const auto& e : raw) {
    const std::size_t row = swap ? e.dst : e.src;
    const std::size_t col = swap ? e.src : e.dst;
    const double mass = static_cast<double>(e.mass) * unit;
    result.plan.entries.push_back({row, col, mass});
  }
  std::sort(result.plan.entries.begin(), result.plan.entries.end(),
            [](const PlanEntry& x, const PlanEntry& y) {
              return x.row != y.row ? x.row < y.row : x.col < y.col;
            });
  for (const auto& e : result.plan.entries) {
    total += static_cast<long double>(e.mass) *
             distance_power(mu.support()[e.row], nu.support()[e.col], p);
  }
  result.cost = std::pow(static_cast<double>(total), 1.0 / p);
  return result;
}

double wasserstein_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      double p) {
  check_order(p);
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw DimensionMismatch("quantile coupling needs one-dimensional measures");
  }
  auto sorted = [](const DiscreteMeasure& m) {
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t i = 0; i < m.size(); ++i) {
      atoms.emplace_back(m.support()[i][0], m.weight(i));
    }
    std::sort(atoms.begin(), atoms.end());
    return atoms;
  };
  const auto xs = sorted(mu);
  const auto ys = sorted(nu);
  std::size_t i = 0, j = 0;
  double ra = xs[0].second, rb = ys[0].second;
  long double total = 0.0L;
  while (i < xs.size() && j < ys.size()) {
    const double t = std::min(ra, rb);
    total += static_cast<long double>(t) *
             std::pow(std::abs(xs[i].first - ys[j].first), p);
    ra -= t;
    rb -= t;
    if (ra <= 0.0 && ++i < xs.size()) ra = xs[i].second;
    if (rb <= 0.0 && ++j < ys.size()) rb = ys[j].second;
  }
  return std::pow(static_cast<double>(total), 1.0 / p);
}

double brute_force_wasserstein(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu, double p) {
  check_order(p);
  check_same_dim(mu, nu);
  const std::size_t n = mu.size();
  if (nu.size() != n) throw InvalidArgument("supports differ in size");
  if (n > 8) throw InvalidArgument("permutation oracle limited to 8 atoms");
  const double w = 1.0 / static_cast<double>(n);
  for (const auto* m : {&mu, &nu}) {
    for (double x : m->weights()) {
      if (std::abs(x - w) > 1e-12) {
        throw InvalidArgument("permutation oracle needs uniform weights");
      }
    }
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += distance_power(mu.support()[i], nu.support()[perm[i]], p);
    }
    best = std::min(best, s / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1.0 / p);
}

std::vector<std::size_t> obm_assignment(const PointSet& x, const PointSet& y,
                                        double p) {
  check_order(p);
  if (x.size() != y.size()) throw InvalidArgument("samples differ in size");
  if (x.empty()) throw InvalidArgument("matching needs at least one point");
  if (x.dim() != y.dim()) throw DimensionMismatch("samples differ in dimension");

  // Shortest augmenting path Hungarian method with potentials, 1-based.
  const std::size_t n = x.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = distance_power(x[i0 - 1], y[j - 1], p) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

double obm_cost(const PointSet& x, const PointSet& y, double p) {
  const auto assignment = obm_assignment(x, y, p);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += distance_power(x[i], y[assignment[i]], p);
  }
  return total / static_cast<double>(x.size());
}

}  // namespace wassquant
