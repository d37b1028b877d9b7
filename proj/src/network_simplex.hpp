#pragma once

// Primal network simplex for the uncapacitated transportation problem.
//
// Tree bookkeeping (thread / rev_thread / succ_num / last_succ) follows the
// classic LEMON layout. Arcs always run source -> target, have infinite
// capacity, and may be appended between optimize() calls; the current basis
// stays valid because new arcs enter at flow zero.

#include <cstdint>
#include <span>
#include <vector>

namespace wassquant::detail {

class TransportSimplex {
 public:
  using Flow = std::int64_t;

  struct BasisArc {
    int source;  // 0-based source index
    int target;  // 0-based target index
    double cost;
    Flow flow;
  };

  /// Supplies and demands must both be strictly positive and sum to the
  /// same total.
  TransportSimplex(std::vector<Flow> supply, std::vector<Flow> demand,
                   double tolerance);

  int num_sources() const { return num_sources_; }
  int num_targets() const { return num_targets_; }
  std::size_t num_arcs() const { return src_.size(); }

  /// Installs an initial feasible spanning tree (exactly m + n - 1 arcs).
  void set_basis(std::span<const BasisArc> arcs);

  /// Appends a non-basic arc at flow zero.
  void add_arc(int source, int target, double cost);

  /// Pivots until no arc has reduced cost below -tolerance. Returns the
  /// number of pivots performed.
  std::size_t optimize(std::size_t max_pivots);

  /// Recomputes node potentials from the tree arcs, removing the drift that
  /// incremental updates accumulate.
  void refresh_potentials();

  double source_potential(int i) const { return pi_[i]; }
  double target_potential(int j) const { return pi_[num_sources_ + j]; }

  struct TreeArc {
    int source;
    int target;
    double cost;
    Flow flow;
  };
  std::vector<TreeArc> tree_arcs() const;

 private:
  static constexpr signed char kStateTree = 0;
  static constexpr signed char kStateLower = 1;
  static constexpr signed char kDirUp = 1;
  static constexpr signed char kDirDown = -1;

  bool find_entering_arc();
  void find_join_node();
  void find_leaving_arc();
  void change_flow();
  void update_tree_structure();
  void update_potential();

  int num_sources_;
  int num_targets_;
  int num_nodes_;
  double tolerance_;

  // arcs
  std::vector<int> src_;
  std::vector<int> tgt_;
  std::vector<double> cost_;
  std::vector<Flow> flow_;
  std::vector<signed char> state_;

  // nodes
  std::vector<Flow> supply_;
  std::vector<double> pi_;
  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<signed char> pred_dir_;
  std::vector<int> thread_;
  std::vector<int> rev_thread_;
  std::vector<int> succ_num_;
  std::vector<int> last_succ_;
  std::vector<int> dirty_revs_;
  int root_ = 0;

  // pivot state
  std::size_t block_size_ = 10;
  std::size_t next_arc_ = 0;
  int in_arc_ = -1;
  int join_ = -1;
  int u_in_ = -1;
  int v_in_ = -1;
  int u_out_ = -1;
  Flow delta_ = 0;
};

}  // namespace wassquant::detail
