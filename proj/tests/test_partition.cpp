#include <catch2/catch_amalgamated.hpp>

#include "bcart/row_partition.hpp"
#include "helpers.hpp"

using namespace bcart;

namespace {

bool proposals_identical(const Proposal& a, const Proposal& b) {
  return a.move == b.move && a.candidate == b.candidate &&
         a.log_q_fwd == b.log_q_fwd && a.log_q_rev == b.log_q_rev &&
         a.log_posterior == b.log_posterior && a.alpha == b.alpha &&
         a.detail_rev.target_a == b.detail_rev.target_a;
}

}  // namespace

TEST_CASE("partition build matches routing") {
  Dataset d = testutil::distinct_values_dataset(60, 3);
  Tree t = testutil::tree_with_prunable(d, 3);
  RowPartition part;
  part.build(t, d);
  for (std::size_t r = 0; r < d.n_rows; ++r)
    REQUIRE(part.row_leaf[r] == route(t, d.row(r)));
}

TEST_CASE("incremental evaluation is bit-identical to the full-refresh path") {
  // heterogeneous unique counts and duplicated rows to stress the masks
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 90; ++i) {
    rows.push_back({static_cast<double>(i % 6), static_cast<double>((i * 5) % 17),
                    static_cast<double>(i % 3)});
    labels.push_back((i / 2) % 3);
  }
  Dataset d = testutil::make_dataset(3, rows, labels, 3);
  MoveProbabilities probs;
  PriorConfig prior;

  Rng walk(77);
  Rng accept(78);
  Tree tree = init_tree(d, walk);
  RowPartition part;
  part.build(tree, d);

  int accepted = 0;
  for (int i = 0; i < 4000; ++i) {
    // identical stream keys feed both paths
    Rng r_full = Rng::for_step(1234, static_cast<std::uint64_t>(i), 0);
    Rng r_inc = Rng::for_step(1234, static_cast<std::uint64_t>(i), 0);
    Proposal full = propose(tree, d, probs, prior, r_full);
    Proposal inc = propose_incremental(tree, part, d, probs, prior, r_inc);
    REQUIRE(proposals_identical(full, inc));

    if (accept.uniform() < inc.alpha) {
      advance_partition(part, tree, inc, d);
      tree = std::move(inc.candidate);
      ++accepted;
      // partition must stay consistent with fresh routing
      if (accepted % 50 == 0) {
        RowPartition fresh;
        fresh.build(tree, d);
        REQUIRE(fresh.row_leaf == part.row_leaf);
      }
    }
  }
  REQUIRE(accepted > 500);

  RowPartition final_check;
  final_check.build(tree, d);
  REQUIRE(final_check.row_leaf == part.row_leaf);
}

TEST_CASE("incremental path handles depth caps identically") {
  Dataset d = testutil::micro_dataset();
  MoveProbabilities probs;
  PriorConfig prior;
  Rng walk(3);
  Tree tree = init_tree(d, walk);
  RowPartition part;
  part.build(tree, d);
  Rng accept(5);
  for (int i = 0; i < 2000; ++i) {
    Rng r_full = Rng::for_step(9, static_cast<std::uint64_t>(i), 0);
    Rng r_inc = Rng::for_step(9, static_cast<std::uint64_t>(i), 0);
    Proposal full = propose(tree, d, probs, prior, r_full, 2);
    Proposal inc = propose_incremental(tree, part, d, probs, prior, r_inc, 2);
    REQUIRE(proposals_identical(full, inc));
    if (accept.uniform() < inc.alpha) {
      advance_partition(part, tree, inc, d);
      tree = std::move(inc.candidate);
    }
  }
  RowPartition fresh;
  fresh.build(tree, d);
  REQUIRE(fresh.row_leaf == part.row_leaf);
}
