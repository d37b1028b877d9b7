#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wassquant/error.hpp"

namespace wassquant::detail {

TransportSimplex::TransportSimplex(std::vector<Flow> supply,
                                   std::vector<Flow> demand, double tolerance)
    : num_sources_(static_cast<int>(supply.size())),
      num_targets_(static_cast<int>(demand.size())),
      num_nodes_(num_sources_ + num_targets_),
      tolerance_(tolerance) {
  if (num_sources_ == 0 || num_targets_ == 0) {
    throw InternalFault("transport problem without sources or targets");
  }
  const Flow total_supply = std::accumulate(supply.begin(), supply.end(), Flow{0});
  const Flow total_demand = std::accumulate(demand.begin(), demand.end(), Flow{0});
  if (total_supply != total_demand) {
    throw InternalFault("unbalanced transport problem");
  }
  supply_.reserve(num_nodes_);
  for (Flow s : supply) supply_.push_back(s);
  for (Flow d : demand) supply_.push_back(-d);

  pi_.assign(num_nodes_, 0.0);
  parent_.assign(num_nodes_, -1);
  pred_.assign(num_nodes_, -1);
  pred_dir_.assign(num_nodes_, kDirUp);
  thread_.assign(num_nodes_, 0);
  rev_thread_.assign(num_nodes_, 0);
  succ_num_.assign(num_nodes_, 1);
  last_succ_.assign(num_nodes_, 0);
}

void TransportSimplex::add_arc(int source, int target, double cost) {
  src_.push_back(source);
  tgt_.push_back(num_sources_ + target);
  cost_.push_back(cost);
  flow_.push_back(0);
  state_.push_back(kStateLower);
}

void TransportSimplex::set_basis(std::span<const BasisArc> arcs) {
  if (static_cast<int>(arcs.size()) != num_nodes_ - 1) {
    throw InternalFault("initial basis is not a spanning tree");
  }
  std::vector<std::vector<int>> adj(num_nodes_);
  for (const auto& a : arcs) {
    const int e = static_cast<int>(src_.size());
    src_.push_back(a.source);
    tgt_.push_back(num_sources_ + a.target);
    cost_.push_back(a.cost);
    flow_.push_back(a.flow);
    state_.push_back(kStateTree);
    adj[a.source].push_back(e);
    adj[num_sources_ + a.target].push_back(e);
  }

  // Iterative DFS from the root builds the preorder thread.
  root_ = 0;
  std::vector<int> order;
  order.reserve(num_nodes_);
  std::vector<char> seen(num_nodes_, 0);
  std::vector<int> stack{root_};
  seen[root_] = 1;
  parent_[root_] = -1;
  pred_[root_] = -1;
  pi_[root_] = 0.0;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (auto it = adj[u].rbegin(); it != adj[u].rend(); ++it) {
      const int e = *it;
      const int v = src_[e] == u ? tgt_[e] : src_[e];
      if (seen[v]) continue;
      seen[v] = 1;
      parent_[v] = u;
      pred_[v] = e;
      if (src_[e] == v) {
        pred_dir_[v] = kDirUp;
        pi_[v] = pi_[u] - cost_[e];
      } else {
        pred_dir_[v] = kDirDown;
        pi_[v] = pi_[u] + cost_[e];
      }
      stack.push_back(v);
    }
  }
  if (static_cast<int>(order.size()) != num_nodes_) {
    throw InternalFault("initial basis is not connected");
  }

  std::vector<int> pos(num_nodes_);
  for (int t = 0; t < num_nodes_; ++t) pos[order[t]] = t;
  for (int t = 0; t < num_nodes_; ++t) {
    const int u = order[t];
    const int next = order[(t + 1) % num_nodes_];
    thread_[u] = next;
    rev_thread_[next] = u;
  }
  std::fill(succ_num_.begin(), succ_num_.end(), 1);
  for (int t = num_nodes_ - 1; t > 0; --t) {
    const int u = order[t];
    succ_num_[parent_[u]] += succ_num_[u];
  }
  for (int u = 0; u < num_nodes_; ++u) {
    last_succ_[u] = order[pos[u] + succ_num_[u] - 1];
  }
}

void TransportSimplex::refresh_potentials() {
  // Preorder along the thread visits parents before children.
  pi_[root_] = 0.0;
  for (int u = thread_[root_]; u != root_; u = thread_[u]) {
    const int e = pred_[u];
    pi_[u] = pred_dir_[u] == kDirUp ? pi_[parent_[u]] - cost_[e]
                                    : pi_[parent_[u]] + cost_[e];
  }
}

bool TransportSimplex::find_entering_arc() {
  const std::size_t num_arcs = src_.size();
  double min = -tolerance_;
  std::size_t cnt = block_size_;
  std::size_t e = next_arc_;
  bool found = false;
  for (std::size_t scanned = 0; scanned < num_arcs; ++scanned) {
    if (state_[e] == kStateLower) {
      const double c = cost_[e] + pi_[src_[e]] - pi_[tgt_[e]];
      if (c < min) {
        min = c;
        in_arc_ = static_cast<int>(e);
        found = true;
      }
    }
    if (++e == num_arcs) e = 0;
    if (--cnt == 0) {
      if (found) break;
      cnt = block_size_;
    }
  }
  next_arc_ = e;
  return found;
}

void TransportSimplex::find_join_node() {
  int u = src_[in_arc_];
  int v = tgt_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

void TransportSimplex::find_leaving_arc() {
  // Entering arcs are always at their lower bound: flow is pushed from the
  // source of the entering arc to its target and back around the cycle.
  const int first = src_[in_arc_];
  const int second = tgt_[in_arc_];
  constexpr Flow kInf = std::numeric_limits<Flow>::max();
  delta_ = kInf;
  int result = 0;

  for (int u = first; u != join_; u = parent_[u]) {
    if (pred_dir_[u] != kDirUp) continue;
    const Flow d = flow_[pred_[u]];
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  for (int u = second; u != join_; u = parent_[u]) {
    if (pred_dir_[u] != kDirDown) continue;
    const Flow d = flow_[pred_[u]];
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }
  if (result == 0) throw InternalFault("unbounded transport cycle");
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
}

void TransportSimplex::change_flow() {
  if (delta_ > 0) {
    const Flow val = delta_;
    flow_[in_arc_] += val;
    for (int u = src_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] -= pred_dir_[u] * val;
    }
    for (int u = tgt_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] += pred_dir_[u] * val;
    }
  }
  state_[in_arc_] = kStateTree;
  state_[pred_[u_out_]] = kStateLower;
}

void TransportSimplex::update_tree_structure() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  const int v_out = parent_[u_out_];

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == src_[in_arc_] ? kDirUp : kDirDown;

    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    // When old_rev_thread == v_in, join and v_out coincide.
    const int thread_continue =
        old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

    // Re-hang the stem nodes between u_in and u_out.
    int stem = u_in_;
    int par_stem = v_in_;
    int next_stem;
    int last = last_succ_[u_in_];
    int before;
    int after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem]
                                                      : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }

    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    int tmp_sc = 0;
    const int tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == src_[in_arc_] ? kDirUp : kDirDown;
    succ_num_[u_in_] = old_succ_num;
  }

  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_out;
  }

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void TransportSimplex::update_potential() {
  const double sigma =
      pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[in_arc_];
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

std::size_t TransportSimplex::optimize(std::size_t max_pivots) {
  block_size_ = std::max<std::size_t>(
      10, static_cast<std::size_t>(std::ceil(std::sqrt(
              static_cast<double>(src_.size())))));
  if (next_arc_ >= src_.size()) next_arc_ = 0;
  std::size_t pivots = 0;
  while (find_entering_arc()) {
    if (++pivots > max_pivots) {
      throw InternalFault("network simplex exceeded its pivot budget");
    }
    find_join_node();
    find_leaving_arc();
    change_flow();
    update_tree_structure();
    update_potential();
  }
  return pivots;
}

std::vector<TransportSimplex::TreeArc> TransportSimplex::tree_arcs() const {
  std::vector<TreeArc> out;
  out.reserve(num_nodes_ - 1);
  for (int u = 0; u < num_nodes_; ++u) {
    if (u == root_) continue;
    const int e = pred_[u];
    out.push_back({src_[e], tgt_[e] - num_sources_, cost_[e], flow_[e]});
  }
  return out;
}

}  // namespace wassquant::detail
