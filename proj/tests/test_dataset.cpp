#include <algorithm>
#include <catch2/catch_amalgamated.hpp>

#include "bcart/dataset.hpp"
#include "helpers.hpp"

using bcart::Dataset;
using bcart::load_csv;
using bcart::kfold_split;
using bcart::ValidationError;

TEST_CASE("load_csv re-encodes labels densely") {
  testutil::TempDir tmp("csv");
  testutil::write_file(tmp.file("t.csv"), "f1,f2,y\n1.0,2.0,a\n3.0,4.0,b\n5.0,6.0,a\n");
  Dataset d = load_csv(tmp.file("t.csv"), "y");
  REQUIRE(d.n_rows == 3);
  REQUIRE(d.n_features == 2);
  REQUIRE(d.n_classes == 2);
  REQUIRE(d.labels == std::vector<int>{0, 1, 0});
  REQUIRE(d.class_names == std::vector<std::string>{"a", "b"});
  REQUIRE(d.feature_names == std::vector<std::string>{"f1", "f2"});
  REQUIRE(d.at(1, 1) == 4.0);
}

TEST_CASE("load_csv handles quoted fields and numeric label ordering") {
  testutil::TempDir tmp("csvq");
  testutil::write_file(tmp.file("t.csv"),
                       "\"f,1\",y\n1.5,10\n2.5,2\n3.5,10\n4.5,2\n");
  Dataset d = load_csv(tmp.file("t.csv"), "y");
  REQUIRE(d.feature_names == std::vector<std::string>{"f,1"});
  // numeric labels sort numerically: 2 -> 0, 10 -> 1
  REQUIRE(d.labels == std::vector<int>{1, 0, 1, 0});
}

TEST_CASE("load_csv error paths") {
  testutil::TempDir tmp("csverr");
  REQUIRE_THROWS_AS(load_csv(tmp.file("missing.csv"), "y"), ValidationError);

  testutil::write_file(tmp.file("badcol.csv"), "a,b\n1,2\n3,4\n");
  REQUIRE_THROWS_AS(load_csv(tmp.file("badcol.csv"), "y"), ValidationError);

  testutil::write_file(tmp.file("nan.csv"), "a,y\nNaN,0\n2,1\n");
  REQUIRE_THROWS_AS(load_csv(tmp.file("nan.csv"), "y"), ValidationError);

  testutil::write_file(tmp.file("text.csv"), "a,y\nhello,0\n2,1\n");
  REQUIRE_THROWS_AS(load_csv(tmp.file("text.csv"), "y"), ValidationError);

  testutil::write_file(tmp.file("empty.csv"), "a,y\n");
  REQUIRE_THROWS_AS(load_csv(tmp.file("empty.csv"), "y"), ValidationError);

  testutil::write_file(tmp.file("oneclass.csv"), "a,y\n1,0\n2,0\n");
  REQUIRE_THROWS_AS(load_csv(tmp.file("oneclass.csv"), "y"), ValidationError);
}

TEST_CASE("unique values are sorted, deduplicated and bounded by N") {
  Dataset d = testutil::make_dataset(2, {{1.0, 5.0}, {1.0, 3.0}, {2.0, 5.0}},
                                     {0, 1, 0}, 2);
  REQUIRE(d.unique_count(0) == 2);
  REQUIRE(d.unique_count(1) == 2);
  REQUIRE(d.unique_values[0] == std::vector<double>{1.0, 2.0});
  REQUIRE_THROWS_AS(d.unique_count(2), ValidationError);
  for (std::size_t f = 0; f < d.n_features; ++f) REQUIRE(d.unique_count(f) <= d.n_rows);

  Dataset constant = testutil::make_dataset(1, {{4.0}, {4.0}, {4.0}}, {0, 1, 0}, 2);
  REQUIRE(constant.unique_count(0) == 1);

  Dataset wide = testutil::distinct_values_dataset(100, 1);
  REQUIRE(wide.unique_count(0) == 100);
}

TEST_CASE("kfold sizes differ by at most one") {
  Dataset d100 = testutil::distinct_values_dataset(100, 2);
  auto folds = kfold_split(d100, 25, 1);
  REQUIRE(folds.size() == 25);
  for (const auto& f : folds) REQUIRE(f.test_indices.size() == 4);

  Dataset d10 = testutil::distinct_values_dataset(10, 2);
  auto f3 = kfold_split(d10, 3, 1);
  std::vector<std::size_t> sizes;
  for (const auto& f : f3) sizes.push_back(f.test_indices.size());
  std::sort(sizes.begin(), sizes.end());
  REQUIRE(sizes == std::vector<std::size_t>{3, 3, 4});
}

TEST_CASE("kfold is deterministic and partitions the index set") {
  Dataset d = testutil::distinct_values_dataset(37, 3);
  auto a = kfold_split(d, 5, 9);
  auto b = kfold_split(d, 5, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].test_indices == b[i].test_indices);
    REQUIRE(a[i].train_indices == b[i].train_indices);
  }
  auto c = kfold_split(d, 5, 10);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].test_indices != c[i].test_indices) any_diff = true;
  REQUIRE(any_diff);

  for (const auto& f : a) {
    std::vector<std::size_t> all = f.train_indices;
    all.insert(all.end(), f.test_indices.begin(), f.test_indices.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(d.n_rows);
    for (std::size_t i = 0; i < d.n_rows; ++i) expect[i] = i;
    REQUIRE(all == expect);
    REQUIRE_FALSE(f.test_indices.empty());
    // views carry the rows they claim
    for (std::size_t i = 0; i < f.test_indices.size(); ++i)
      REQUIRE(f.test.labels[i] == d.labels[f.test_indices[i]]);
  }
}

TEST_CASE("kfold rejects bad k") {
  Dataset d = testutil::distinct_values_dataset(10, 2);
  REQUIRE_THROWS_AS(kfold_split(d, 1, 0), ValidationError);
  REQUIRE_THROWS_AS(kfold_split(d, 11, 0), ValidationError);
}

TEST_CASE("stratified folds keep every class in every training half") {
  // 3 classes with a rare one: plain 4-fold can starve class 2's train side
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({static_cast<double>(i), static_cast<double>(i % 5)});
    labels.push_back(i < 9 ? 0 : (i < 18 ? 1 : 2));
  }
  Dataset d = testutil::make_dataset(2, rows, labels, 3);
  auto folds = kfold_split(d, 4, 3, true);
  for (const auto& f : folds) {
    auto hist = f.train.class_histogram();
    REQUIRE(hist[0] > 0);
    REQUIRE(hist[1] > 0);
    REQUIRE(hist[2] > 0);
  }
}
