#pragma once

#include <optional>
#include <vector>

#include "bcart/dataset.hpp"
#include "bcart/moves.hpp"
#include "bcart/tree.hpp"

namespace bcart {

// row -> leaf assignment for the chain's current tree. Lets a proposal
// evaluate a structural edit by re-routing only the rows of the edited
// subtree instead of the whole dataset: the rest of the candidate's leaf
// counts are already carried over by the cloning edits. Owned by the
// sampler coordinator; workers read it concurrently.
struct RowPartition {
  std::vector<int> row_leaf;

  void build(const Tree& t, const Dataset& d) {
    row_leaf.resize(d.n_rows);
    for (std::size_t r = 0; r < d.n_rows; ++r)
      row_leaf[r] = route(t, d.row(r));
  }
};

namespace detail {

// Marks the leaves of `current` living under the edit target(s).
inline std::vector<char> affected_leaf_mask(const Tree& current, int a, int b = -1) {
  std::vector<char> mask(current.nodes.size(), 0);
  std::vector<int> leaves;
  collect_subtree_leaves(current, a, leaves);
  if (b >= 0) collect_subtree_leaves(current, b, leaves);
  for (int id : leaves) mask[static_cast<std::size_t>(id)] = 1;
  return mask;
}

// Re-routes the masked rows inside the candidate (node ids unchanged by
// change/swap edits) after clearing the touched leaves.
inline void reroute_masked(Tree& candidate, const Dataset& d, const RowPartition& part,
                           const std::vector<char>& mask, int top_a, int top_b) {
  std::vector<int> touched;
  collect_subtree_leaves(candidate, top_a, touched);
  if (top_b >= 0) collect_subtree_leaves(candidate, top_b, touched);
  for (int id : touched)
    candidate.node(id).counts.assign(static_cast<std::size_t>(d.n_classes), 0);
  for (std::size_t r = 0; r < part.row_leaf.size(); ++r) {
    const int old_leaf = part.row_leaf[r];
    if (!mask[static_cast<std::size_t>(old_leaf)]) continue;
    // with disjoint targets each row starts routing at its own subtree root
    int start = top_a;
    if (top_b >= 0) {
      int walk = old_leaf;
      while (walk != -1 && walk != top_a && walk != top_b)
        walk = candidate.node(walk).parent;
      start = walk == top_b ? top_b : top_a;
    }
    const int leaf = route_from(candidate, start, d.row(r));
    candidate.node(leaf).counts[static_cast<std::size_t>(d.labels[r])]++;
  }
}

}  // namespace detail

// Evaluates a drawn move against the current tree using the row partition.
// Produces exactly the same Proposal as the full-refresh path (same counts,
// probabilities and acceptance ratio) at a fraction of the routing work.
inline Proposal evaluate_move_incremental(const Tree& current, const RowPartition& part,
                                          const MoveDetail& det, const Dataset& d,
                                          const MoveProbabilities& probs,
                                          const PriorConfig& prior,
                                          std::optional<int> max_depth = std::nullopt) {
  Tree candidate;
  MoveDetail rev;
  switch (det.kind) {
    case MoveKind::grow: {
      int new_id = -1;
      candidate = detail::grow_structure(current, det.target_a, det.feature,
                                         det.threshold, d.n_classes, &new_id);
      const Node& grown = candidate.node(new_id);
      const auto k = static_cast<std::size_t>(det.feature);
      for (std::size_t r = 0; r < part.row_leaf.size(); ++r) {
        if (part.row_leaf[r] != det.target_a) continue;
        const int child = d.at(r, k) <= det.threshold ? grown.left : grown.right;
        candidate.node(child).counts[static_cast<std::size_t>(d.labels[r])]++;
      }
      rev = {MoveKind::prune, new_id, -1, -1, 0.0};
      break;
    }
    case MoveKind::prune: {
      const int old_k = current.node(det.target_a).feature;
      const double old_c = current.node(det.target_a).threshold;
      int leaf_id = -1;
      candidate = detail::prune_structure(current, det.target_a, &leaf_id);
      rev = {MoveKind::grow, leaf_id, -1, old_k, old_c};
      break;
    }
    case MoveKind::change: {
      const int old_k = current.node(det.target_a).feature;
      const double old_c = current.node(det.target_a).threshold;
      candidate = current;
      candidate.node(det.target_a).feature = det.feature;
      candidate.node(det.target_a).threshold = det.threshold;
      const auto mask = detail::affected_leaf_mask(current, det.target_a);
      detail::reroute_masked(candidate, d, part, mask, det.target_a, -1);
      rev = {MoveKind::change, det.target_a, -1, old_k, old_c};
      break;
    }
    case MoveKind::swap: {
      candidate = current;
      std::swap(candidate.node(det.target_a).feature,
                candidate.node(det.target_b).feature);
      std::swap(candidate.node(det.target_a).threshold,
                candidate.node(det.target_b).threshold);
      // nested targets re-route once from the outer node
      int walk = candidate.node(det.target_b).parent;
      while (walk != -1 && walk != det.target_a) walk = candidate.node(walk).parent;
      const bool nested = walk == det.target_a;
      const int top_a = det.target_a;
      const int top_b = nested ? -1 : det.target_b;
      const auto mask = detail::affected_leaf_mask(current, top_a, top_b);
      detail::reroute_masked(candidate, d, part, mask, top_a, top_b);
      rev = {MoveKind::swap, det.target_a, det.target_b, -1, 0.0};
      break;
    }
  }
  return detail::finish_proposal(current, std::move(candidate), det, rev, d, probs,
                                 prior, max_depth);
}

inline Proposal propose_incremental(const Tree& current, const RowPartition& part,
                                    const Dataset& d, const MoveProbabilities& probs,
                                    const PriorConfig& prior, Rng& rng,
                                    std::optional<int> max_depth = std::nullopt) {
  const MoveDetail det = draw_move(current, d, probs, rng, max_depth);
  return evaluate_move_incremental(current, part, det, d, probs, prior, max_depth);
}

namespace detail {

// old-leaf-id -> new-leaf-id correspondence for a structural edit, by
// walking both trees in lockstep and expanding only at the edited node.
inline void map_leaves(const Tree& from, const Tree& to, int edit_old,
                       std::vector<int>& map, int old_id, int new_id) {
  const Node& o = from.node(old_id);
  const Node& n = to.node(new_id);
  if (old_id == edit_old) {
    if (o.is_leaf()) return;  // grown leaf: rows re-routed separately
    // pruned node: both old leaf children collapse into the new leaf
    map[static_cast<std::size_t>(o.left)] = new_id;
    map[static_cast<std::size_t>(o.right)] = new_id;
    return;
  }
  if (o.is_leaf()) {
    map[static_cast<std::size_t>(old_id)] = new_id;
    return;
  }
  map_leaves(from, to, edit_old, map, o.left, n.left);
  map_leaves(from, to, edit_old, map, o.right, n.right);
}

}  // namespace detail

// Moves the partition from the old tree to an accepted candidate. Grow and
// prune renumber node ids, so surviving leaves are mapped by a lockstep
// walk; only rows of the edited region are re-routed.
inline void advance_partition(RowPartition& part, const Tree& from, const Proposal& prop,
                              const Dataset& d) {
  const MoveDetail& det = prop.detail_fwd;
  const Tree& to = prop.candidate;
  switch (det.kind) {
    case MoveKind::grow: {
      std::vector<int> map(from.nodes.size(), -1);
      detail::map_leaves(from, to, det.target_a, map, from.root(), to.root());
      const int grown = prop.detail_rev.target_a;
      const Node& g = to.node(grown);
      const auto k = static_cast<std::size_t>(det.feature);
      for (std::size_t r = 0; r < part.row_leaf.size(); ++r) {
        if (part.row_leaf[r] == det.target_a)
          part.row_leaf[r] = d.at(r, k) <= det.threshold ? g.left : g.right;
        else
          part.row_leaf[r] = map[static_cast<std::size_t>(part.row_leaf[r])];
      }
      break;
    }
    case MoveKind::prune: {
      std::vector<int> map(from.nodes.size(), -1);
      detail::map_leaves(from, to, det.target_a, map, from.root(), to.root());
      for (auto& leaf : part.row_leaf) leaf = map[static_cast<std::size_t>(leaf)];
      break;
    }
    case MoveKind::change:
    case MoveKind::swap: {
      // ids stable: re-route only rows whose old leaf sits under the edit
      const int b = det.kind == MoveKind::swap ? det.target_b : -1;
      const auto mask = detail::affected_leaf_mask(from, det.target_a, b);
      for (std::size_t r = 0; r < part.row_leaf.size(); ++r)
        if (mask[static_cast<std::size_t>(part.row_leaf[r])])
          part.row_leaf[r] = route(to, d.row(r));
      break;
    }
  }
}

}  // namespace bcart
