#include "auction.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace wassquant::detail {
namespace {

// A source with capacity c is c interchangeable slots; each slot carries the
// price of its last winning bid. Slots of one source form a min-heap.
struct Slot {
  double price;
  int holder;
};

struct SlotHeap {
  Slot* first;
  std::size_t size;

  static bool later(const Slot& x, const Slot& y) { return x.price > y.price; }

  double min_price() const { return first[0].price; }
  double second_price() const {
    if (size == 1) return std::numeric_limits<double>::infinity();
    if (size == 2) return first[1].price;
    return std::min(first[1].price, first[2].price);
  }
  // Replaces the cheapest slot; returns its previous holder.
  int take(double price, int holder) {
    const int evicted = first[0].holder;
    std::pop_heap(first, first + size, later);
    first[size - 1] = {price, holder};
    std::push_heap(first, first + size, later);
    return evicted;
  }
};

constexpr std::size_t kBidsPerTargetBudget = 2000;
constexpr double kEpsilonFactor = 0.2;

}  // namespace

AuctionResult auction_assignment(std::span<const std::int64_t> capacity,
                                 const CandidateArcs& arcs, double eps_start,
                                 double eps_final) {
  const std::size_t num_sources = capacity.size();
  const std::size_t num_targets = arcs.offset.size() - 1;

  std::vector<Slot> slots;
  std::vector<SlotHeap> heaps(num_sources);
  {
    std::size_t total = 0;
    for (auto c : capacity) total += static_cast<std::size_t>(c);
    if (total != num_targets) return {};
    slots.assign(total, Slot{0.0, -1});
    std::size_t at = 0;
    for (std::size_t i = 0; i < num_sources; ++i) {
      heaps[i] = {slots.data() + at, static_cast<std::size_t>(capacity[i])};
      at += static_cast<std::size_t>(capacity[i]);
    }
  }

  AuctionResult result;
  result.owner.assign(num_targets, -1);
  std::deque<int> unassigned;
  std::size_t bids_left = kBidsPerTargetBudget * num_targets;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  double eps = std::max(eps_start, eps_final);
  while (true) {
    for (auto& s : slots) s.holder = -1;
    std::fill(result.owner.begin(), result.owner.end(), -1);
    unassigned.clear();
    for (std::size_t j = 0; j < num_targets; ++j) {
      unassigned.push_back(static_cast<int>(j));
    }

    while (!unassigned.empty()) {
      if (bids_left-- == 0) return {};
      const int j = unassigned.front();
      unassigned.pop_front();

      // Lowest and second-lowest effective cost cost + price over all slots
      // reachable from j.
      double best = kInf, second = kInf;
      int best_source = -1;
      for (std::size_t a = arcs.offset[j]; a < arcs.offset[j + 1]; ++a) {
        const SlotHeap& h = heaps[arcs.source[a]];
        const double v = arcs.cost[a] + h.min_price();
        if (v < best) {
          second = std::min(best, arcs.cost[a] + h.second_price());
          best = v;
          best_source = arcs.source[a];
        } else {
          second = std::min(second, v);
        }
      }
      if (best_source < 0) return {};
      if (second == kInf) second = best + eps;

      SlotHeap& h = heaps[best_source];
      const double bid = h.min_price() + (second - best) + eps;
      const int evicted = h.take(bid, j);
      result.owner[j] = best_source;
      if (evicted >= 0) {
        result.owner[evicted] = -1;
        unassigned.push_back(evicted);
      }
    }
    if (eps <= eps_final) break;
    eps = std::max(eps * kEpsilonFactor, eps_final);
  }

  result.source_price.resize(num_sources);
  for (std::size_t i = 0; i < num_sources; ++i) {
    result.source_price[i] = heaps[i].min_price();
  }
  return result;
}

}  // namespace wassquant::detail
