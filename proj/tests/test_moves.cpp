#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <map>

#include "bcart/moves.hpp"
#include "helpers.hpp"

using namespace bcart;
using Catch::Matchers::WithinRel;

TEST_CASE("reverse_move pairs grow with prune and fixes change/swap") {
  REQUIRE(reverse_move(MoveKind::grow) == MoveKind::prune);
  REQUIRE(reverse_move(MoveKind::prune) == MoveKind::grow);
  REQUIRE(reverse_move(MoveKind::change) == MoveKind::change);
  REQUIRE(reverse_move(MoveKind::swap) == MoveKind::swap);
  for (MoveKind m : {MoveKind::grow, MoveKind::prune, MoveKind::change, MoveKind::swap})
    REQUIRE(reverse_move(reverse_move(m)) == m);
}

TEST_CASE("move probabilities validate") {
  MoveProbabilities ok;
  ok.validate();
  MoveProbabilities bad{0.3, 0.3, 0.2, 0.1};
  REQUIRE_THROWS_AS(bad.validate(), ValidationError);
  MoveProbabilities neg{-0.1, 0.5, 0.3, 0.3};
  REQUIRE_THROWS_AS(neg.validate(), ValidationError);
}

TEST_CASE("uniform draws map through the cumulative intervals") {
  MoveProbabilities probs;  // 0.3/0.3/0.2/0.2 -> [0, .3, .6, .8, 1]
  REQUIRE(move_from_uniform(0.1, probs) == MoveKind::grow);
  REQUIRE(move_from_uniform(0.45, probs) == MoveKind::prune);
  REQUIRE(move_from_uniform(0.7, probs) == MoveKind::change);
  REQUIRE(move_from_uniform(0.95, probs) == MoveKind::swap);
}

TEST_CASE("sample_move respects feasibility") {
  Dataset d = testutil::micro_dataset();
  MoveProbabilities probs;

  Tree stump = single_leaf_tree(d);
  Rng r1(1);
  for (int i = 0; i < 50; ++i)
    REQUIRE(sample_move(r1, probs, stump) == MoveKind::grow);

  // one root split: prune (root-protected) and swap (needs 2 decisions)
  // are infeasible; grow/change should appear in 0.6/0.4 proportion
  Tree one = testutil::tree_with_decisions(d, 1);
  Rng r2(2);
  int grow_count = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    MoveKind m = sample_move(r2, probs, one);
    REQUIRE((m == MoveKind::grow || m == MoveKind::change));
    if (m == MoveKind::grow) ++grow_count;
  }
  const double freq = static_cast<double>(grow_count) / n;
  const double se = std::sqrt(0.6 * 0.4 / n);
  REQUIRE(std::abs(freq - 0.6) < 3.0 * se);
}

TEST_CASE("move frequencies on a fully feasible tree match their settings") {
  Dataset d = testutil::distinct_values_dataset(30, 3);
  Tree t = testutil::tree_with_prunable(d, 3);
  MoveProbabilities probs;
  Rng rng(9);
  std::map<MoveKind, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[sample_move(rng, probs, t)]++;
  const std::vector<std::pair<MoveKind, double>> expected_freqs{
      {MoveKind::grow, 0.3},
      {MoveKind::prune, 0.3},
      {MoveKind::change, 0.2},
      {MoveKind::swap, 0.2}};
  for (auto [kind, expected] : expected_freqs) {
    const double freq = static_cast<double>(counts[kind]) / n;
    const double se = std::sqrt(expected * (1 - expected) / n);
    REQUIRE(std::abs(freq - expected) < 3.0 * se);
  }
}

TEST_CASE("worked proposal probabilities: grow, prune, change, swap") {
  Dataset d = testutil::distinct_values_dataset(100, 5);
  MoveProbabilities probs;

  // grow on a 7-leaf tree: 0.3 * 1/100 * 1/5 * 1/7
  Tree seven_leaves = testutil::tree_with_decisions(d, 6);
  REQUIRE(leaf_nodes(seven_leaves).size() == 7);
  const int leaf = leaf_nodes(seven_leaves).front();
  const double q_grow = std::exp(log_proposal_prob(
      seven_leaves, {MoveKind::grow, leaf, -1, 2, d.unique_values[2][0]}, probs, d));
  REQUIRE_THAT(q_grow, WithinRel(0.3 * (1.0 / 100) * (1.0 / 5) * (1.0 / 7), 1e-12));

  // prune with 9 prunable nodes: 0.3 * 1/9
  Tree nine_bottom = testutil::tree_with_prunable(d, 9);
  REQUIRE(prunable_nodes(nine_bottom).size() == 9);
  const int target = prunable_nodes(nine_bottom).front();
  const double q_prune = std::exp(
      log_proposal_prob(nine_bottom, {MoveKind::prune, target, -1, -1, 0.0}, probs, d));
  REQUIRE_THAT(q_prune, WithinRel(0.3 / 9.0, 1e-12));

  // change on a 12-decision tree: 0.2 * 1/100 * 1/5 * 1/12
  Tree twelve = testutil::tree_with_decisions(d, 12);
  REQUIRE(decision_nodes(twelve).size() == 12);
  const double q_change = std::exp(log_proposal_prob(
      twelve, {MoveKind::change, 0, -1, 1, d.unique_values[1][3]}, probs, d));
  REQUIRE_THAT(q_change, WithinRel(0.2 * (1.0 / 100) * (1.0 / 5) * (1.0 / 12), 1e-12));

  // swap on the same tree: 0.2 / (12*11/2)
  const auto decisions = decision_nodes(twelve);
  const double q_swap = std::exp(log_proposal_prob(
      twelve, {MoveKind::swap, decisions[0], decisions[1], -1, 0.0}, probs, d));
  REQUIRE_THAT(q_swap, WithinRel(0.2 / 66.0, 1e-12));
}

TEST_CASE("proposal probabilities renormalise over feasible moves") {
  Dataset d = testutil::micro_dataset();
  MoveProbabilities probs;
  // single root split: only grow (0.3) and change (0.2) feasible, Z = 0.5
  Tree t = testutil::tree_with_decisions(d, 1);
  const int leaf = leaf_nodes(t).front();
  const double q = std::exp(
      log_proposal_prob(t, {MoveKind::grow, leaf, -1, 0, 0.0}, probs, d));
  REQUIRE_THAT(q, WithinRel((0.3 / 0.5) * (1.0 / 2) * (1.0 / 2) * (1.0 / 2), 1e-12));

  REQUIRE_THROWS_AS(
      log_proposal_prob(t, {MoveKind::prune, 0, -1, -1, 0.0}, probs, d),
      std::invalid_argument);
}

TEST_CASE("depth cap shrinks the grow target set and its probability") {
  Dataset d = testutil::micro_dataset();
  MoveProbabilities probs;
  Tree t = testutil::tree_with_decisions(d, 2);  // leaves at depths 2,2,1
  const auto eligible = eligible_grow_leaves(t, 2);
  REQUIRE(eligible.size() == 1);
  const double q = std::exp(log_proposal_prob(
      t, {MoveKind::grow, eligible.front(), -1, 0, 0.0}, probs, d,
      UniqueCountMode::per_feature, 2));
  // all four moves feasible (prunable node exists, |D| = 2)
  REQUIRE_THAT(q, WithinRel(0.3 * 1.0 * (1.0 / 2) * (1.0 / 2), 1e-12));

  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    Proposal p = propose(t, d, probs, PriorConfig{}, rng, 2);
    REQUIRE(p.candidate.depth() <= 2);
  }
}

TEST_CASE("stored proposal probabilities are exactly recomputable") {
  // equal unique counts per feature, so change/swap forward and reverse
  // proposals must coincide
  Dataset d = testutil::distinct_values_dataset(40, 4);
  MoveProbabilities probs;
  PriorConfig prior;
  Rng walk(20);
  Rng accept(21);
  Tree t = init_tree(d, walk);
  int change_or_swap = 0;
  for (int i = 0; i < 10000; ++i) {
    Proposal p = propose(t, d, probs, prior, walk);
    REQUIRE(std::isfinite(p.log_q_fwd));
    REQUIRE(std::isfinite(p.log_q_rev));
    REQUIRE(p.alpha > 0.0);
    REQUIRE(p.alpha <= 1.0);
    REQUIRE(log_proposal_prob(t, p.detail_fwd, probs, d, prior.c_mode) == p.log_q_fwd);
    REQUIRE(log_proposal_prob(p.candidate, p.detail_rev, probs, d, prior.c_mode) ==
            p.log_q_rev);
    REQUIRE(p.detail_rev.kind == reverse_move(p.detail_fwd.kind));
    if (p.move == MoveKind::change || p.move == MoveKind::swap) {
      REQUIRE(p.log_q_rev == p.log_q_fwd);
      ++change_or_swap;
    }
    if (accept.uniform() < p.alpha) t = std::move(p.candidate);
  }
  REQUIRE(change_or_swap > 1000);
}

TEST_CASE("change reverse probability uses the replaced feature's domain") {
  // feature 0 has 4 unique values, feature 1 has 9
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 36; ++i) {
    rows.push_back({static_cast<double>(i % 4), static_cast<double>(i % 9)});
    labels.push_back(i % 2);
  }
  Dataset d = testutil::make_dataset(2, rows, labels, 2);
  REQUIRE(d.unique_count(0) == 4);
  REQUIRE(d.unique_count(1) == 9);

  MoveProbabilities probs;
  Tree t = grow(single_leaf_tree(d), d, 0, 0, 1.0);  // root split on feature 0
  const MoveDetail fwd{MoveKind::change, 0, -1, 1, 4.0};
  Tree cand = change(t, d, 0, 1, 4.0);
  const MoveDetail rev{MoveKind::change, 0, -1, 0, 1.0};
  const double lq_fwd = log_proposal_prob(t, fwd, probs, d);
  const double lq_rev = log_proposal_prob(cand, rev, probs, d);
  REQUIRE_THAT(std::exp(lq_rev - lq_fwd), WithinRel(9.0 / 4.0, 1e-12));
}

TEST_CASE("exhaustive outcome frequencies on a fixed two-split tree") {
  Dataset d = testutil::micro_dataset();
  MoveProbabilities probs;
  PriorConfig prior;
  Tree t = testutil::tree_with_decisions(d, 2);
  REQUIRE_THAT(feasible_moves(t, std::nullopt).mass(probs), WithinRel(1.0, 1e-12));

  // analytic proposal distribution over (move, resulting structure)
  std::map<std::pair<int, std::string>, double> analytic;
  const auto leaves = leaf_nodes(t);
  for (int leaf : leaves)
    for (std::size_t k = 0; k < d.n_features; ++k)
      for (double c : d.unique_values[k]) {
        Tree cand = grow(t, d, leaf, static_cast<int>(k), c);
        analytic[{0, structure_key(cand)}] +=
            0.3 / (static_cast<double>(leaves.size()) * 2.0 * 2.0);
      }
  for (int target : prunable_nodes(t)) {
    Tree cand = prune(t, d, target);
    analytic[{1, structure_key(cand)}] +=
        0.3 / static_cast<double>(prunable_nodes(t).size());
  }
  const auto decisions = decision_nodes(t);
  for (int target : decisions)
    for (std::size_t k = 0; k < d.n_features; ++k)
      for (double c : d.unique_values[k]) {
        Tree cand = change(t, d, target, static_cast<int>(k), c);
        analytic[{2, structure_key(cand)}] +=
            0.2 / (static_cast<double>(decisions.size()) * 2.0 * 2.0);
      }
  for (std::size_t i = 0; i < decisions.size(); ++i)
    for (std::size_t j = i + 1; j < decisions.size(); ++j) {
      Tree cand = swap_payloads(t, d, decisions[i], decisions[j]);
      analytic[{3, structure_key(cand)}] +=
          0.2 / (static_cast<double>(decisions.size() * (decisions.size() - 1)) / 2.0);
    }

  double total = 0.0;
  for (const auto& [key, q] : analytic) total += q;
  REQUIRE_THAT(total, WithinRel(1.0, 1e-12));

  std::map<std::pair<int, std::string>, int> observed;
  Rng rng(31);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Proposal p = propose(t, d, probs, prior, rng);
    observed[{static_cast<int>(p.move), structure_key(p.candidate)}]++;
  }
  for (const auto& [key, count] : observed) REQUIRE(analytic.count(key) == 1);
  for (const auto& [key, q] : analytic) {
    const double freq = static_cast<double>(observed[key]) / n;
    const double se = std::sqrt(q * (1.0 - q) / n);
    INFO("move " << key.first << " structure " << key.second);
    REQUIRE(std::abs(freq - q) < 3.5 * se);
  }
}

TEST_CASE("grow from the stump keeps the proposal finite") {
  Dataset d = testutil::micro_dataset();
  Tree stump = single_leaf_tree(d);
  Rng rng(6);
  Proposal p = propose(stump, d, MoveProbabilities{}, PriorConfig{}, rng);
  REQUIRE(p.move == MoveKind::grow);
  REQUIRE(std::isfinite(p.log_q_rev));
  REQUIRE(p.alpha > 0.0);
}
