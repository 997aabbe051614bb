#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "bcart/dataset.hpp"
#include "bcart/posterior.hpp"
#include "bcart/rng.hpp"
#include "bcart/tree.hpp"

namespace bcart {

enum class MoveKind { grow, prune, change, swap };

inline const char* move_name(MoveKind m) {
  switch (m) {
    case MoveKind::grow: return "grow";
    case MoveKind::prune: return "prune";
    case MoveKind::change: return "change";
    case MoveKind::swap: return "swap";
  }
  return "?";
}

// Grow and prune undo each other; change and swap are their own reverses.
inline MoveKind reverse_move(MoveKind m) {
  switch (m) {
    case MoveKind::grow: return MoveKind::prune;
    case MoveKind::prune: return MoveKind::grow;
    default: return m;
  }
}

struct MoveProbabilities {
  double grow = 0.3;
  double prune = 0.3;
  double change = 0.2;
  double swap = 0.2;

  double of(MoveKind m) const {
    switch (m) {
      case MoveKind::grow: return grow;
      case MoveKind::prune: return prune;
      case MoveKind::change: return change;
      case MoveKind::swap: return swap;
    }
    return 0.0;
  }

  void validate() const {
    for (double p : {grow, prune, change, swap})
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("move probabilities must lie in [0,1]");
    if (std::abs(grow + prune + change + swap - 1.0) > 1e-12)
      throw ValidationError("move probabilities must sum to 1");
  }
};

// Which moves the current tree admits. Grow needs a leaf below the depth
// cap, prune a non-root bottom decision node, change any decision node,
// swap two of them. Grow or change is always available on chain states.
struct MoveFeasibility {
  bool grow = false;
  bool prune = false;
  bool change = false;
  bool swap = false;

  bool of(MoveKind m) const {
    switch (m) {
      case MoveKind::grow: return grow;
      case MoveKind::prune: return prune;
      case MoveKind::change: return change;
      case MoveKind::swap: return swap;
    }
    return false;
  }

  // Total proposal mass of the feasible moves; the kind-selection
  // probabilities are renormalised by this so the chain stays exact on
  // trees where some moves are unavailable.
  double mass(const MoveProbabilities& probs) const {
    double z = 0.0;
    if (grow) z += probs.grow;
    if (prune) z += probs.prune;
    if (change) z += probs.change;
    if (swap) z += probs.swap;
    return z;
  }
};

inline MoveFeasibility feasible_moves(const Tree& t, std::optional<int> max_depth) {
  MoveFeasibility f;
  f.grow = !eligible_grow_leaves(t, max_depth).empty();
  f.prune = !prunable_nodes(t).empty();
  const std::size_t n_decision = decision_nodes(t).size();
  f.change = n_decision >= 1;
  f.swap = n_decision >= 2;
  return f;
}

// Maps one uniform draw through the cumulative move intervals
// [0, pG, pG+pP, pG+pP+pC, 1].
inline MoveKind move_from_uniform(double u, const MoveProbabilities& probs) {
  if (u < probs.grow) return MoveKind::grow;
  if (u < probs.grow + probs.prune) return MoveKind::prune;
  if (u < probs.grow + probs.prune + probs.change) return MoveKind::change;
  return MoveKind::swap;
}

// Draws a move kind, redrawing until the kind is feasible on this tree.
// Redrawing keeps the relative odds among feasible moves intact.
inline MoveKind sample_move(Rng& rng, const MoveProbabilities& probs, const Tree& t,
                            std::optional<int> max_depth = std::nullopt) {
  const MoveFeasibility feas = feasible_moves(t, max_depth);
  if (feas.mass(probs) <= 0.0)
    throw std::logic_error("sample_move: no feasible move has positive probability");
  for (;;) {
    MoveKind m = move_from_uniform(rng.uniform(), probs);
    if (feas.of(m)) return m;
  }
}

// Fully identifies one sampled transition: the kind, its target node id(s)
// in the source tree, and the drawn payload for grow/change. Enough to
// recompute the proposal probability exactly.
struct MoveDetail {
  MoveKind kind = MoveKind::grow;
  int target_a = -1;
  int target_b = -1;   // swap only
  int feature = -1;    // grow/change only
  double threshold = 0.0;
};

// Exact log proposal probability of applying `detail` to `from`:
// renormalised kind probability plus the log of each uniform choice.
//   grow:   p(G)/Z * 1/|L_eligible| * 1/p * 1/c_k
//   prune:  p(P)/Z * 1/#prunable
//   change: p(C)/Z * 1/|D| * 1/p * 1/c_k
//   swap:   p(S)/Z * 1/(|D|(|D|-1)/2)
// Throws if the detail does not describe a move that `from` admits.
inline double log_proposal_prob(const Tree& from, const MoveDetail& detail,
                                const MoveProbabilities& probs, const Dataset& d,
                                UniqueCountMode c_mode = UniqueCountMode::per_feature,
                                std::optional<int> max_depth = std::nullopt) {
  const MoveFeasibility feas = feasible_moves(from, max_depth);
  if (!feas.of(detail.kind))
    throw std::invalid_argument(std::string("log_proposal_prob: ") +
                                move_name(detail.kind) +
                                " is not feasible on this tree");
  const double log_kind = std::log(probs.of(detail.kind)) - std::log(feas.mass(probs));
  const double log_p = std::log(static_cast<double>(d.n_features));
  switch (detail.kind) {
    case MoveKind::grow: {
      const auto leaves = eligible_grow_leaves(from, max_depth);
      if (!from.node(detail.target_a).is_leaf())
        throw std::invalid_argument("log_proposal_prob: grow target is not a leaf");
      const double log_c = std::log(
          static_cast<double>(threshold_domain_size(d, detail.feature, c_mode)));
      return log_kind - std::log(static_cast<double>(leaves.size())) - log_p - log_c;
    }
    case MoveKind::prune: {
      const auto targets = prunable_nodes(from);
      const Node& n = from.node(detail.target_a);
      if (detail.target_a == from.root() || n.is_leaf() ||
          !from.node(n.left).is_leaf() || !from.node(n.right).is_leaf())
        throw std::invalid_argument("log_proposal_prob: prune target not prunable");
      return log_kind - std::log(static_cast<double>(targets.size()));
    }
    case MoveKind::change: {
      const auto decisions = decision_nodes(from);
      if (from.node(detail.target_a).is_leaf())
        throw std::invalid_argument("log_proposal_prob: change target is a leaf");
      const double log_c = std::log(
          static_cast<double>(threshold_domain_size(d, detail.feature, c_mode)));
      return log_kind - std::log(static_cast<double>(decisions.size())) - log_p - log_c;
    }
    case MoveKind::swap: {
      const double nd = static_cast<double>(decision_nodes(from).size());
      if (detail.target_a == detail.target_b ||
          from.node(detail.target_a).is_leaf() || from.node(detail.target_b).is_leaf())
        throw std::invalid_argument("log_proposal_prob: bad swap pair");
      return log_kind - std::log(nd * (nd - 1.0) / 2.0);
    }
  }
  throw std::logic_error("unreachable");
}

// One candidate transition with everything the MH step needs.
struct Proposal {
  MoveKind move = MoveKind::grow;
  Tree candidate;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;
  double log_posterior = 0.0;  // of the candidate
  double alpha = 0.0;
  MoveDetail detail_fwd;  // applied to the source tree
  MoveDetail detail_rev;  // applied to the candidate, undoes the move
};

// Samples a feasible move kind and its free choices. The draw order is
// fixed (target, then feature, then threshold): the incremental and
// full-refresh evaluation paths must consume the stream identically.
inline MoveDetail draw_move(const Tree& current, const Dataset& d,
                            const MoveProbabilities& probs, Rng& rng,
                            std::optional<int> max_depth = std::nullopt) {
  MoveDetail det;
  det.kind = sample_move(rng, probs, current, max_depth);
  switch (det.kind) {
    case MoveKind::grow: {
      const auto leaves = eligible_grow_leaves(current, max_depth);
      det.target_a = leaves[rng.uniform_index(leaves.size())];
      det.feature = static_cast<int>(rng.uniform_index(d.n_features));
      det.threshold = rng.pick(d.unique_values[static_cast<std::size_t>(det.feature)]);
      break;
    }
    case MoveKind::prune: {
      const auto targets = prunable_nodes(current);
      det.target_a = targets[rng.uniform_index(targets.size())];
      break;
    }
    case MoveKind::change: {
      const auto decisions = decision_nodes(current);
      det.target_a = decisions[rng.uniform_index(decisions.size())];
      det.feature = static_cast<int>(rng.uniform_index(d.n_features));
      det.threshold = rng.pick(d.unique_values[static_cast<std::size_t>(det.feature)]);
      break;
    }
    case MoveKind::swap: {
      const auto decisions = decision_nodes(current);
      const std::size_t i = rng.uniform_index(decisions.size());
      std::size_t j = rng.uniform_index(decisions.size() - 1);
      if (j >= i) ++j;
      det.target_a = decisions[std::min(i, j)];
      det.target_b = decisions[std::max(i, j)];
      break;
    }
  }
  return det;
}

namespace detail {

// Fills in q's, posterior and alpha once the candidate (counts refreshed)
// and its reverse detail are known.
inline Proposal finish_proposal(const Tree& current, Tree candidate,
                                const MoveDetail& fwd, const MoveDetail& rev,
                                const Dataset& d, const MoveProbabilities& probs,
                                const PriorConfig& prior,
                                std::optional<int> max_depth) {
  Proposal prop;
  prop.move = fwd.kind;
  prop.detail_fwd = fwd;
  prop.detail_rev = rev;
  prop.candidate = std::move(candidate);
  prop.log_q_fwd = log_proposal_prob(current, fwd, probs, d, prior.c_mode, max_depth);
  // A grow from the bare-root stump has no prune counterpart (the root may
  // not be pruned). Chains never visit the stump, so the reverse factor is
  // only needed to keep the Proposal finite; use the raw prune probability.
  if (fwd.kind == MoveKind::grow && prunable_nodes(prop.candidate).empty())
    prop.log_q_rev = std::log(probs.prune);
  else
    prop.log_q_rev = log_proposal_prob(prop.candidate, rev, probs, d, prior.c_mode,
                                       max_depth);
  prop.log_posterior = log_posterior(prop.candidate, d, prior);
  const double log_post_current = log_posterior(current, d, prior);
  prop.alpha = acceptance_ratio(log_post_current, prop.log_posterior,
                                prop.log_q_fwd, prop.log_q_rev);
  return prop;
}

}  // namespace detail

// Applies a drawn move through the full-refresh tree edits and completes
// the proposal. The sampler's incremental path must stay observationally
// identical to this one.
inline Proposal evaluate_move(const Tree& current, const MoveDetail& det,
                              const Dataset& d, const MoveProbabilities& probs,
                              const PriorConfig& prior,
                              std::optional<int> max_depth = std::nullopt) {
  Tree candidate;
  MoveDetail rev;
  switch (det.kind) {
    case MoveKind::grow: {
      int new_id = -1;
      candidate = grow(current, d, det.target_a, det.feature, det.threshold, &new_id);
      rev = {MoveKind::prune, new_id, -1, -1, 0.0};
      break;
    }
    case MoveKind::prune: {
      const int old_k = current.node(det.target_a).feature;
      const double old_c = current.node(det.target_a).threshold;
      int leaf_id = -1;
      candidate = prune(current, d, det.target_a, &leaf_id);
      rev = {MoveKind::grow, leaf_id, -1, old_k, old_c};
      break;
    }
    case MoveKind::change: {
      const int old_k = current.node(det.target_a).feature;
      const double old_c = current.node(det.target_a).threshold;
      candidate = change(current, d, det.target_a, det.feature, det.threshold);
      rev = {MoveKind::change, det.target_a, -1, old_k, old_c};
      break;
    }
    case MoveKind::swap: {
      candidate = swap_payloads(current, d, det.target_a, det.target_b);
      rev = {MoveKind::swap, det.target_a, det.target_b, -1, 0.0};
      break;
    }
  }
  return detail::finish_proposal(current, std::move(candidate), det, rev, d, probs,
                                 prior, max_depth);
}

// Samples a feasible move, draws its free choices uniformly, builds the
// candidate and fills in exact forward/reverse log proposal probabilities
// and the acceptance ratio. All randomness comes from the caller's stream,
// so a (seed, iteration, worker) key reproduces the proposal bit for bit.
inline Proposal propose(const Tree& current, const Dataset& d,
                        const MoveProbabilities& probs, const PriorConfig& prior,
                        Rng& rng, std::optional<int> max_depth = std::nullopt) {
  const MoveDetail det = draw_move(current, d, probs, rng, max_depth);
  return evaluate_move(current, det, d, probs, prior, max_depth);
}

}  // namespace bcart
