#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bcart/dataset.hpp"
#include "bcart/tree.hpp"

namespace testutil {

// In-memory dataset builder; bypasses CSV parsing for fixtures.
inline bcart::Dataset make_dataset(std::size_t n_features,
                                   const std::vector<std::vector<double>>& rows,
                                   const std::vector<int>& labels, int n_classes) {
  bcart::Dataset d;
  d.n_rows = rows.size();
  d.n_features = n_features;
  d.n_classes = n_classes;
  for (const auto& r : rows) d.features.insert(d.features.end(), r.begin(), r.end());
  d.labels = labels;
  for (std::size_t f = 0; f < n_features; ++f)
    d.feature_names.push_back("x" + std::to_string(f));
  for (int c = 0; c < n_classes; ++c) d.class_names.push_back(std::to_string(c));
  bcart::detail::compute_derived(d);
  return d;
}

// Eight points over two binary features, two classes; the enumerable
// micro-instance used by the posterior oracle and chain-exactness checks.
inline bcart::Dataset micro_dataset() {
  return make_dataset(2,
                      {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}, {0, 1}, {1, 0}, {1, 1}},
                      {0, 0, 1, 1, 0, 1, 0, 1}, 2);
}

// p features, each a permuted copy of {0..n_rows-1}: every feature has
// exactly n_rows unique values.
inline bcart::Dataset distinct_values_dataset(std::size_t n_rows, std::size_t p,
                                              std::uint64_t seed = 7) {
  bcart::Rng rng(seed);
  std::vector<std::vector<double>> rows(n_rows, std::vector<double>(p));
  for (std::size_t f = 0; f < p; ++f) {
    std::vector<double> col(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) col[i] = static_cast<double>(i);
    for (std::size_t i = n_rows; i > 1; --i)
      std::swap(col[i - 1], col[rng.uniform_index(i)]);
    for (std::size_t i = 0; i < n_rows; ++i) rows[i][f] = col[i];
  }
  std::vector<int> labels(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) labels[i] = static_cast<int>(i % 2);
  return make_dataset(p, rows, labels, 2);
}

// Left comb with an exact number of decision nodes: each grow splits the
// current leftmost leaf.
inline bcart::Tree tree_with_decisions(const bcart::Dataset& d, int n_decisions) {
  bcart::Tree t = bcart::single_leaf_tree(d);
  for (int i = 0; i < n_decisions; ++i) {
    int leftmost = 0;
    while (!t.node(leftmost).is_leaf()) leftmost = t.node(leftmost).left;
    const auto f = static_cast<std::size_t>(i) % d.n_features;
    t = bcart::grow(t, d, leftmost, static_cast<int>(f), d.unique_values[f][0]);
  }
  return t;
}

// Tree with exactly n_bottom prunable (bottom) decision nodes: a left comb
// of n_bottom splits, then every spine node's right leaf grown into a
// bottom split of its own.
inline bcart::Tree tree_with_prunable(const bcart::Dataset& d, int n_bottom) {
  bcart::Tree t = tree_with_decisions(d, n_bottom);
  for (;;) {
    bool grew = false;
    for (int id : bcart::decision_nodes(t)) {
      const auto& n = t.node(id);
      if (t.node(n.right).is_leaf() && !t.node(n.left).is_leaf()) {
        t = bcart::grow(t, d, n.right, 0, d.unique_values[0][0]);
        grew = true;
        break;
      }
    }
    if (!grew) break;
  }
  return t;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("bcart_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace testutil
