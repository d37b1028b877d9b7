#pragma once

// Forward auction with epsilon scaling for transportation problems whose
// targets each demand a single unit. Used to warm-start the network simplex;
// the result is only approximately optimal.

#include <cstdint>
#include <span>
#include <vector>

namespace wassquant::detail {

struct CandidateArcs {
  // Arcs of target j occupy [offset[j], offset[j + 1]).
  std::vector<std::size_t> offset;
  std::vector<int> source;
  std::vector<double> cost;
};

struct AuctionResult {
  std::vector<int> owner;            // source assigned to each target
  std::vector<double> source_price;  // lowest slot price per source
};

/// Assigns every target to one candidate source so that source i receives
/// exactly capacity[i] targets. `eps_final` is the last scaling phase's bid
/// increment. Returns an empty owner vector when the candidate graph admits no
/// such assignment or the bid budget runs out.
AuctionResult auction_assignment(std::span<const std::int64_t> capacity,
                                 const CandidateArcs& arcs, double eps_start,
                                 double eps_final);

}  // namespace wassquant::detail
