#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bcart/errors.hpp"
#include "bcart/rng.hpp"

namespace bcart {

// Tabular classification dataset. Features are a dense row-major matrix,
// labels are re-encoded to 0..n_classes-1 at load time. Immutable after
// construction; shared read-only across sampler workers.
struct Dataset {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  int n_classes = 0;
  std::vector<double> features;  // row-major, n_rows * n_features
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // original label spellings
  std::vector<std::vector<double>> unique_values;  // per feature, strictly increasing
  std::size_t distinct_row_count = 0;  // dataset-wide c under UniqueCountMode::global

  double at(std::size_t row, std::size_t col) const {
    return features[row * n_features + col];
  }
  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * n_features, n_features};
  }

  // Unique observed values of one feature; the proposal threshold domain.
  std::size_t unique_count(std::size_t feature) const {
    if (feature >= n_features)
      throw ValidationError("unique_count: feature index " +
                            std::to_string(feature) + " out of range");
    return unique_values[feature].size();
  }

  std::vector<int> class_histogram() const {
    std::vector<int> h(static_cast<std::size_t>(n_classes), 0);
    for (int y : labels) h[static_cast<std::size_t>(y)]++;
    return h;
  }
};

namespace detail {

inline void compute_derived(Dataset& d) {
  d.unique_values.assign(d.n_features, {});
  for (std::size_t f = 0; f < d.n_features; ++f) {
    std::vector<double> col(d.n_rows);
    for (std::size_t r = 0; r < d.n_rows; ++r) col[r] = d.at(r, f);
    std::sort(col.begin(), col.end());
    col.erase(std::unique(col.begin(), col.end()), col.end());
    d.unique_values[f] = std::move(col);
  }
  std::set<std::vector<double>> rows;
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    auto rv = d.row(r);
    rows.insert(std::vector<double>(rv.begin(), rv.end()));
  }
  d.distinct_row_count = rows.size();
}

// RFC-4180-style record reader: quoted fields, embedded commas/newlines,
// doubled quotes. Returns false at end of input.
inline bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Loads a CSV with a header row; label_column selects the class column, all
// other columns must parse as finite reals. Labels may be arbitrary strings
// or integers; they are re-encoded densely in sorted order of first
// appearance spelling (lexicographic), so downstream count vectors are plain
// arrays. Rejects missing values outright.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset file: " + path);

  std::vector<std::string> header;
  if (!detail::read_record(in, header) || header.empty())
    throw ValidationError("dataset file has no header row: " + path);
  for (auto& h : header) h = detail::trim(h);

  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = i;
  if (label_idx == header.size())
    throw ValidationError("label column '" + label_column + "' not found in " + path);

  Dataset d;
  d.n_features = header.size() - 1;
  if (d.n_features == 0) throw ValidationError("dataset has no feature columns");
  for (std::size_t i = 0; i < header.size(); ++i)
    if (i != label_idx) d.feature_names.push_back(header[i]);

  std::vector<std::string> raw_labels;
  std::vector<std::string> fields;
  std::size_t line = 1;
  while (detail::read_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;  // blank line
    if (fields.size() != header.size())
      throw ValidationError("row " + std::to_string(line) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i == label_idx) {
        raw_labels.push_back(detail::trim(fields[i]));
        continue;
      }
      const std::string cell = detail::trim(fields[i]);
      std::size_t pos = 0;
      double v = 0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size() || cell.empty() || !std::isfinite(v))
        throw ValidationError("non-numeric feature cell '" + cell + "' at row " +
                              std::to_string(line) + ", column '" +
                              header[i] + "'");
      d.features.push_back(v);
    }
  }
  d.n_rows = raw_labels.size();
  if (d.n_rows < 2) throw ValidationError("dataset needs at least 2 rows, got " +
                                          std::to_string(d.n_rows));

  // Dense label re-encoding; numeric label spellings sort numerically so that
  // "0","1",...,"10" keep their natural order.
  std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
  std::vector<std::string> ordered(distinct.begin(), distinct.end());
  const bool all_numeric = std::all_of(ordered.begin(), ordered.end(), [](const std::string& s) {
    std::size_t pos = 0;
    try {
      (void)std::stod(s, &pos);
    } catch (const std::exception&) {
      return false;
    }
    return pos == s.size() && !s.empty();
  });
  if (all_numeric)
    std::sort(ordered.begin(), ordered.end(), [](const std::string& a, const std::string& b) {
      return std::stod(a) < std::stod(b);
    });
  std::map<std::string, int> code;
  for (std::size_t i = 0; i < ordered.size(); ++i) code[ordered[i]] = static_cast<int>(i);
  d.class_names = ordered;
  d.n_classes = static_cast<int>(ordered.size());
  if (d.n_classes < 2)
    throw ValidationError("dataset needs at least 2 label classes, got " +
                          std::to_string(d.n_classes));
  d.labels.reserve(d.n_rows);
  for (const auto& s : raw_labels) d.labels.push_back(code[s]);

  detail::compute_derived(d);
  return d;
}

// One train/test split of a k-fold partition. train and test are
// materialized datasets (unique_values recomputed from their own rows, class
// space inherited from the parent so count vectors stay aligned).
struct FoldSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  int fold_index = 0;
};

namespace detail {

inline Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
  Dataset s;
  s.n_rows = idx.size();
  s.n_features = d.n_features;
  s.n_classes = d.n_classes;
  s.feature_names = d.feature_names;
  s.class_names = d.class_names;
  s.features.reserve(idx.size() * d.n_features);
  s.labels.reserve(idx.size());
  for (auto r : idx) {
    auto rv = d.row(r);
    s.features.insert(s.features.end(), rv.begin(), rv.end());
    s.labels.push_back(d.labels[r]);
  }
  compute_derived(s);
  return s;
}

}  // namespace detail

// Shuffles row indices with a seeded stream and cuts them into k nearly
// equal test parts (sizes differ by at most one). Not stratified by default;
// set stratified for small multi-class sets where a fold could otherwise
// lose a class from its training half.
inline std::vector<FoldSplit> kfold_split(const Dataset& d, int k, std::uint64_t seed,
                                          bool stratified = false) {
  if (k < 2) throw ValidationError("kfold_split: k must be >= 2");
  if (static_cast<std::size_t>(k) > d.n_rows)
    throw ValidationError("kfold_split: k exceeds dataset rows");

  std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(k));
  Rng rng = Rng::for_step(seed, 0, 0xf01dULL);
  if (!stratified) {
    std::vector<std::size_t> idx(d.n_rows);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    // first n_rows % k parts take one extra element
    const std::size_t base = d.n_rows / static_cast<std::size_t>(k);
    const std::size_t extra = d.n_rows % static_cast<std::size_t>(k);
    std::size_t at = 0;
    for (std::size_t p = 0; p < static_cast<std::size_t>(k); ++p) {
      std::size_t len = base + (p < extra ? 1 : 0);
      parts[p].assign(idx.begin() + static_cast<std::ptrdiff_t>(at),
                      idx.begin() + static_cast<std::ptrdiff_t>(at + len));
      at += len;
    }
  } else {
    // per-class shuffle then round-robin over folds
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.n_classes));
    for (std::size_t r = 0; r < d.n_rows; ++r)
      by_class[static_cast<std::size_t>(d.labels[r])].push_back(r);
    std::size_t next = 0;
    for (auto& cls : by_class) {
      for (std::size_t i = cls.size(); i > 1; --i)
        std::swap(cls[i - 1], cls[rng.uniform_index(i)]);
      for (auto r : cls) {
        parts[next % static_cast<std::size_t>(k)].push_back(r);
        ++next;
      }
    }
  }

  std::vector<FoldSplit> folds;
  folds.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    FoldSplit fs;
    fs.fold_index = f;
    fs.test_indices = parts[static_cast<std::size_t>(f)];
    std::sort(fs.test_indices.begin(), fs.test_indices.end());
    for (int o = 0; o < k; ++o) {
      if (o == f) continue;
      fs.train_indices.insert(fs.train_indices.end(),
                              parts[static_cast<std::size_t>(o)].begin(),
                              parts[static_cast<std::size_t>(o)].end());
    }
    std::sort(fs.train_indices.begin(), fs.train_indices.end());
    fs.train = detail::subset(d, fs.train_indices);
    fs.test = detail::subset(d, fs.test_indices);
    folds.push_back(std::move(fs));
  }
  return folds;
}

inline std::size_t unique_count(const Dataset& d, std::size_t feature) {
  return d.unique_count(feature);
}

}  // namespace bcart
