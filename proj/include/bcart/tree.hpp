#pragma once

#include <charconv>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcart/dataset.hpp"
#include "bcart/rng.hpp"

namespace bcart {

struct Node {
  int parent = -1;
  int left = -1;   // -1 on both children marks a leaf
  int right = -1;
  int depth = 0;
  int feature = -1;      // decision payload
  double threshold = 0.0;
  std::vector<int> counts;  // leaf payload: class histogram of routed rows

  bool is_leaf() const { return left < 0; }
};

// Full binary decision tree held in a flat arena. Node ids are preorder
// indices (root = 0) and every edit rebuilds the arena in preorder, so two
// trees with the same shape and payloads compare equal node-for-node.
// Trees are immutable values: edits return new trees.
struct Tree {
  std::vector<Node> nodes;

  const Node& node(int id) const { return nodes[static_cast<std::size_t>(id)]; }
  Node& node(int id) { return nodes[static_cast<std::size_t>(id)]; }
  int root() const { return 0; }

  int depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }

  bool operator==(const Tree& other) const {
    if (nodes.size() != other.nodes.size()) return false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Node& a = nodes[i];
      const Node& b = other.nodes[i];
      if (a.parent != b.parent || a.left != b.left || a.right != b.right ||
          a.depth != b.depth || a.counts != b.counts)
        return false;
      if (!a.is_leaf() && (a.feature != b.feature || a.threshold != b.threshold))
        return false;
    }
    return true;
  }
};

inline std::vector<int> decision_nodes(const Tree& t) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < t.nodes.size(); ++i)
    if (!t.nodes[i].is_leaf()) ids.push_back(static_cast<int>(i));
  return ids;
}

inline std::vector<int> leaf_nodes(const Tree& t) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < t.nodes.size(); ++i)
    if (t.nodes[i].is_leaf()) ids.push_back(static_cast<int>(i));
  return ids;
}

// Decision nodes whose children are both leaves and that are not the root;
// the only legal prune targets, and the generating counterparts of grow.
inline std::vector<int> prunable_nodes(const Tree& t) {
  std::vector<int> ids;
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    const Node& n = t.nodes[i];
    if (n.is_leaf()) continue;
    if (t.node(n.left).is_leaf() && t.node(n.right).is_leaf())
      ids.push_back(static_cast<int>(i));
  }
  return ids;
}

// Leaves a grow move may target. Unbounded trees accept every leaf; with a
// depth cap only leaves strictly above the cap qualify (children land at
// depth+1).
inline std::vector<int> eligible_grow_leaves(const Tree& t, std::optional<int> max_depth) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const Node& n = t.nodes[i];
    if (!n.is_leaf()) continue;
    if (max_depth && n.depth + 1 > *max_depth) continue;
    ids.push_back(static_cast<int>(i));
  }
  return ids;
}

// Routes one feature vector to its leaf: x[k] <= c goes left (ties left).
inline int route_from(const Tree& t, int start, std::span<const double> x) {
  int id = start;
  while (!t.node(id).is_leaf()) {
    const Node& n = t.node(id);
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return id;
}

inline int route(const Tree& t, std::span<const double> x) {
  return route_from(t, 0, x);
}

// Leaf ids inside the subtree rooted at `start`.
inline void collect_subtree_leaves(const Tree& t, int start, std::vector<int>& out) {
  const Node& n = t.node(start);
  if (n.is_leaf()) {
    out.push_back(start);
    return;
  }
  collect_subtree_leaves(t, n.left, out);
  collect_subtree_leaves(t, n.right, out);
}

namespace detail {

inline void refresh_counts_in_place(Tree& t, const Dataset& d) {
  for (auto& n : t.nodes)
    if (n.is_leaf())
      n.counts.assign(static_cast<std::size_t>(d.n_classes), 0);
    else
      n.counts.clear();
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    int leaf = route(t, d.row(r));
    t.node(leaf).counts[static_cast<std::size_t>(d.labels[r])]++;
  }
}

// Preorder clone driver shared by all structural edits. `emit` decides what
// to do at the edited node; everywhere else the source subtree is copied
// verbatim. Returns the id assigned to the edited node in the clone.
template <typename EmitFn>
int clone_with_edit(const Tree& src, Tree& dst, int edit_id, EmitFn&& emit) {
  int edited_new_id = -1;
  auto rec = [&](auto&& self, int src_id, int parent, int depth) -> int {
    const int new_id = static_cast<int>(dst.nodes.size());
    dst.nodes.emplace_back();
    dst.node(new_id).parent = parent;
    dst.node(new_id).depth = depth;
    if (src_id == edit_id) {
      edited_new_id = new_id;
      emit(self, src_id, new_id, depth);
      return new_id;
    }
    const Node& s = src.node(src_id);
    if (s.is_leaf()) {
      dst.node(new_id).counts = s.counts;
      return new_id;
    }
    dst.node(new_id).feature = s.feature;
    dst.node(new_id).threshold = s.threshold;
    const int l = self(self, s.left, new_id, depth + 1);
    const int r = self(self, s.right, new_id, depth + 1);
    dst.node(new_id).left = l;
    dst.node(new_id).right = r;
    return new_id;
  };
  rec(rec, src.root(), -1, 0);
  return edited_new_id;
}

inline void require_node(const Tree& t, int id, const char* op) {
  if (id < 0 || static_cast<std::size_t>(id) >= t.nodes.size())
    throw std::invalid_argument(std::string(op) + ": node id out of range");
}

// Structure-only edits: the clone without the count refresh. Leaf counts
// copied from the source are still valid everywhere except the edited
// region, which the caller fills (from a row partition or a full refresh).
inline Tree grow_structure(const Tree& t, int leaf_id, int feature, double threshold,
                           int n_classes, int* new_decision_id) {
  Tree out;
  out.nodes.reserve(t.nodes.size() + 2);
  int id = clone_with_edit(t, out, leaf_id, [&](auto&&, int, int new_id, int depth) {
    out.node(new_id).feature = feature;
    out.node(new_id).threshold = threshold;
    const int l = static_cast<int>(out.nodes.size());
    out.nodes.emplace_back();
    out.node(l).parent = new_id;
    out.node(l).depth = depth + 1;
    out.node(l).counts.assign(static_cast<std::size_t>(n_classes), 0);
    const int r = static_cast<int>(out.nodes.size());
    out.nodes.emplace_back();
    out.node(r).parent = new_id;
    out.node(r).depth = depth + 1;
    out.node(r).counts.assign(static_cast<std::size_t>(n_classes), 0);
    out.node(new_id).left = l;
    out.node(new_id).right = r;
  });
  if (new_decision_id) *new_decision_id = id;
  return out;
}

inline Tree prune_structure(const Tree& t, int decision_id, int* new_leaf_id) {
  Tree out;
  out.nodes.reserve(t.nodes.size() - 2);
  const Node& n = t.node(decision_id);
  std::vector<int> merged(t.node(n.left).counts);
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i] += t.node(n.right).counts[i];
  int id = clone_with_edit(t, out, decision_id, [&](auto&&, int, int new_id, int) {
    out.node(new_id).counts = merged;
  });
  if (new_leaf_id) *new_leaf_id = id;
  return out;
}

}  // namespace detail

// Single leaf holding the whole dataset; the state a chain starts from
// before its first grow.
inline Tree single_leaf_tree(const Dataset& d) {
  Tree t;
  t.nodes.emplace_back();
  t.node(0).counts = d.class_histogram();
  return t;
}

// Replaces a leaf with a decision node (k, c) over two fresh leaves.
inline Tree grow(const Tree& t, const Dataset& d, int leaf_id, int feature,
                 double threshold, int* new_decision_id = nullptr) {
  detail::require_node(t, leaf_id, "grow");
  if (!t.node(leaf_id).is_leaf()) throw std::invalid_argument("grow: target is not a leaf");
  if (feature < 0 || static_cast<std::size_t>(feature) >= d.n_features)
    throw std::invalid_argument("grow: feature out of range");
  Tree out = detail::grow_structure(t, leaf_id, feature, threshold, d.n_classes,
                                    new_decision_id);
  detail::refresh_counts_in_place(out, d);
  return out;
}

// Collapses a bottom decision node (both children leaves, never the root)
// back into a leaf; the exact reverse of grow.
inline Tree prune(const Tree& t, const Dataset& d, int decision_id,
                  int* new_leaf_id = nullptr) {
  detail::require_node(t, decision_id, "prune");
  const Node& n = t.node(decision_id);
  if (n.is_leaf()) throw std::invalid_argument("prune: target is a leaf");
  if (decision_id == t.root()) throw std::invalid_argument("prune: the root cannot be pruned");
  if (!t.node(n.left).is_leaf() || !t.node(n.right).is_leaf())
    throw std::invalid_argument("prune: target children must both be leaves");
  Tree out = detail::prune_structure(t, decision_id, new_leaf_id);
  detail::refresh_counts_in_place(out, d);
  return out;
}

// Rewrites a decision node's (feature, threshold) payload in place.
inline Tree change(const Tree& t, const Dataset& d, int decision_id, int feature,
                   double threshold) {
  detail::require_node(t, decision_id, "change");
  if (t.node(decision_id).is_leaf())
    throw std::invalid_argument("change: target is not a decision node");
  if (feature < 0 || static_cast<std::size_t>(feature) >= d.n_features)
    throw std::invalid_argument("change: feature out of range");
  Tree out = t;
  out.node(decision_id).feature = feature;
  out.node(decision_id).threshold = threshold;
  detail::refresh_counts_in_place(out, d);
  return out;
}

// Exchanges the (feature, threshold) payloads of two distinct decision nodes.
inline Tree swap_payloads(const Tree& t, const Dataset& d, int id_a, int id_b) {
  detail::require_node(t, id_a, "swap");
  detail::require_node(t, id_b, "swap");
  if (id_a == id_b) throw std::invalid_argument("swap: targets must be distinct");
  if (t.node(id_a).is_leaf() || t.node(id_b).is_leaf())
    throw std::invalid_argument("swap: targets must be decision nodes");
  Tree out = t;
  std::swap(out.node(id_a).feature, out.node(id_b).feature);
  std::swap(out.node(id_a).threshold, out.node(id_b).threshold);
  detail::refresh_counts_in_place(out, d);
  return out;
}

inline Tree refresh_counts(const Tree& t, const Dataset& d) {
  Tree out = t;
  detail::refresh_counts_in_place(out, d);
  return out;
}

// Root split on a uniformly chosen (feature, threshold) over two leaves.
// Requires at least one feature with two or more distinct values; a dataset
// of all-constant columns cannot be split meaningfully.
inline Tree init_tree(const Dataset& d, Rng& rng) {
  bool splittable = false;
  for (const auto& uv : d.unique_values)
    if (uv.size() >= 2) splittable = true;
  if (!splittable)
    throw ValidationError("init_tree: every feature is constant, nothing to split on");
  const int k = static_cast<int>(rng.uniform_index(d.n_features));
  const double c = rng.pick(d.unique_values[static_cast<std::size_t>(k)]);
  return grow(single_leaf_tree(d), d, 0, k, c);
}

// Canonical preorder key: shape plus decision payloads, independent of
// counts. Equal keys mean posterior-identical trees over a fixed dataset.
inline std::string structure_key(const Tree& t) {
  std::string out;
  auto fmt = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  auto rec = [&](auto&& self, int id) -> void {
    const Node& n = t.node(id);
    if (n.is_leaf()) {
      out += "L";
      return;
    }
    out += "(" + std::to_string(n.feature) + ":" + fmt(n.threshold) + " ";
    self(self, n.left);
    out += " ";
    self(self, n.right);
    out += ")";
  };
  rec(rec, t.root());
  return out;
}

}  // namespace bcart
