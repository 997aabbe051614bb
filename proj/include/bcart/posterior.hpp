#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bcart/dataset.hpp"
#include "bcart/tree.hpp"

namespace bcart {

// How the depth-penalty prior a/(1+d)^beta is applied: per node over all
// decision and leaf nodes (the default), or once for the
// whole tree using its maximum depth (the literal printed formula).
enum class TreePriorMode { node_wise, whole_tree };

// Which unique-value count backs the 1/c factor in the parameter prior and
// the grow/change proposal probabilities: the split feature's own count, or
// a single dataset-wide count of distinct rows.
enum class UniqueCountMode { per_feature, global };

struct PriorConfig {
  double alpha = 0.95;         // split-probability base, in (0,1)
  double beta = 1.0;           // depth penalty, >= 0
  double smoothing_eps = 1.0;  // leaf-probability smoothing, > 0
  TreePriorMode prior_mode = TreePriorMode::node_wise;
  UniqueCountMode c_mode = UniqueCountMode::per_feature;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ValidationError("prior alpha must be in (0,1)");
    if (!(beta >= 0.0)) throw ValidationError("prior beta must be >= 0");
    if (!(smoothing_eps > 0.0))
      throw ValidationError("smoothing_eps must be > 0");
  }
};

inline std::size_t threshold_domain_size(const Dataset& d, int feature,
                                         UniqueCountMode mode) {
  return mode == UniqueCountMode::per_feature
             ? d.unique_count(static_cast<std::size_t>(feature))
             : d.distinct_row_count;
}

// Data log likelihood: each training row contributes the log of its leaf's
// smoothed class probability (count[y]+eps)/(n+L*eps). Computed per leaf
// from the refreshed count vectors; rows never need a second pass. eps = 0
// is accepted (zero-count terms drop out because a routed row always has
// count >= 1 for its own class).
inline double log_likelihood(const Tree& t, const Dataset& d, double eps) {
  const double L = static_cast<double>(d.n_classes);
  double ll = 0.0;
  for (const auto& node : t.nodes) {
    if (!node.is_leaf()) continue;
    double n_leaf = 0;
    for (int c : node.counts) n_leaf += c;
    if (n_leaf == 0) continue;
    const double denom = n_leaf + L * eps;
    for (int c : node.counts) {
      if (c == 0) continue;
      ll += c * (std::log(c + eps) - std::log(denom));
    }
  }
  return ll;
}

// Parameter prior (feature and threshold picks): each decision node
// contributes log(1/p) + log(1/c) with c the node feature's threshold
// domain size. Empty product (single leaf) is 0.
inline double log_param_prior(const Tree& t, const Dataset& d,
                              UniqueCountMode mode = UniqueCountMode::per_feature) {
  const double log_p = std::log(static_cast<double>(d.n_features));
  double lp = 0.0;
  for (const auto& node : t.nodes) {
    if (node.is_leaf()) continue;
    lp -= log_p;
    lp -= std::log(static_cast<double>(threshold_domain_size(d, node.feature, mode)));
  }
  return lp;
}

// Split probability of a node at depth dep: alpha / (1+dep)^beta.
inline double split_probability(double alpha, double beta, int dep) {
  return alpha / std::pow(1.0 + static_cast<double>(dep), beta);
}

// Structure prior. node_wise: every decision node contributes its split
// probability, every leaf the complement at its own depth; penalises deep
// splits and favours bushy trees. whole_tree: single factor at the tree's
// max depth.
inline double log_tree_prior(const Tree& t, const PriorConfig& prior) {
  if (prior.prior_mode == TreePriorMode::whole_tree)
    return std::log(split_probability(prior.alpha, prior.beta, t.depth()));
  double lp = 0.0;
  for (const auto& node : t.nodes) {
    const double ps = split_probability(prior.alpha, prior.beta, node.depth);
    lp += node.is_leaf() ? std::log1p(-ps) : std::log(ps);
  }
  return lp;
}

inline double log_posterior(const Tree& t, const Dataset& d, const PriorConfig& prior) {
  return log_likelihood(t, d, prior.smoothing_eps) +
         log_param_prior(t, d, prior.c_mode) + log_tree_prior(t, prior);
}

// MH acceptance probability, assembled entirely in log space:
// min(1, exp((logpi' - logpi) + (log q_rev - log q_fwd))).
inline double acceptance_ratio(double log_post_current, double log_post_candidate,
                               double log_q_fwd, double log_q_rev) {
  const double log_ratio =
      (log_post_candidate - log_post_current) + (log_q_rev - log_q_fwd);
  if (log_ratio >= 0.0) return 1.0;
  return std::exp(log_ratio);
}

}  // namespace bcart
