#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcart/dataset.hpp"
#include "bcart/eval.hpp"
#include "bcart/run_config.hpp"
#include "bcart/sampler.hpp"
#include "bcart/tree_io.hpp"

namespace bcart {

// Single-tree prediction: the majority class of the routed leaf (training
// counts), lowest label on ties.
inline int tree_argmax_label(const Tree& t, std::span<const double> x) {
  const Node& leaf = t.node(route(t, x));
  int best = 0;
  for (std::size_t y = 1; y < leaf.counts.size(); ++y)
    if (leaf.counts[y] > leaf.counts[static_cast<std::size_t>(best)])
      best = static_cast<int>(y);
  return best;
}

namespace detail {

inline std::uint64_t fold_seed(std::uint64_t base_seed, int fold) {
  return derive_key(base_seed, static_cast<std::uint64_t>(fold), 0xf01d5eedULL);
}

inline std::vector<Tree> sample_trees(const ChainResult& r) {
  std::vector<Tree> trees;
  trees.reserve(r.samples.size());
  for (const auto& s : r.samples) trees.push_back(s.tree);
  return trees;
}

inline ChainResult run_chain(const Dataset& d, const RunConfig& cfg, ChainConfig cc) {
  return cfg.sampler == "parallel" ? run_parallel(d, cc) : run_serial(d, cc);
}

inline nlohmann::json metrics_to_json(const MetricsReport& m,
                                      const std::vector<std::string>& class_names) {
  nlohmann::json per_label = nlohmann::json::array();
  for (const auto& lm : m.per_label) {
    per_label.push_back({{"label", lm.label},
                         {"name", class_names[static_cast<std::size_t>(lm.label)]},
                         {"precision", lm.precision},
                         {"recall", lm.recall},
                         {"f1", lm.f1}});
  }
  return nlohmann::json{
      {"per_label", per_label}, {"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
}

// Aligned text table of the per-label metrics.
inline std::string metrics_table(const MetricsReport& m,
                                 const std::vector<std::string>& class_names) {
  char buf[160];
  std::string out = "label        precision  recall     f1\n";
  for (const auto& lm : m.per_label) {
    std::snprintf(buf, sizeof(buf), "%-12s %-10.2f %-10.2f %-10.2f\n",
                  class_names[static_cast<std::size_t>(lm.label)].c_str(), lm.precision,
                  lm.recall, lm.f1);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "accuracy     %.2f\n", m.accuracy);
  out += buf;
  return out;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << content;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

}  // namespace detail

// fit: run the configured sampler on the full dataset, export the posterior
// sample set, per-iteration diagnostics and training-set ensemble metrics.
inline int cmd_fit(const RunConfig& cfg) {
  const Dataset d = load_csv(cfg.data_path, cfg.label_column);
  const ChainResult r = detail::run_chain(d, cfg, cfg.chain);
  if (r.samples.empty())
    throw std::runtime_error(
        "chain produced no samples (parallel runs collect only after the "
        "convergence rule fires; raise iterations or loosen convergence_tol)");

  write_samples_json(detail::out_path(cfg, "samples.json").string(), r, d,
                     cfg.chain.prior.smoothing_eps);
  write_diagnostics_csv(detail::out_path(cfg, "diagnostics.csv").string(), r);

  const auto trees = detail::sample_trees(r);
  std::vector<int> preds(d.n_rows);
  for (std::size_t i = 0; i < d.n_rows; ++i)
    preds[i] = predict(trees, d.row(i), cfg.chain.prior.smoothing_eps).first;
  const MetricsReport m = classification_metrics(preds, d.labels, d.n_classes);

  nlohmann::json mj = detail::metrics_to_json(m, d.class_names);
  mj["samples_collected"] = r.samples.size();
  mj["fresh_acceptances"] = r.fresh_acceptances;
  mj["acceptance_rate"] = r.acceptance_rate;
  mj["iterations_run"] = r.iterations_run;
  if (r.convergence_iteration) mj["convergence_iteration"] = *r.convergence_iteration;
  detail::write_text(detail::out_path(cfg, "metrics.json").string(), mj.dump(1) + "\n");

  std::cout << "fit: " << r.samples.size() << " samples, acceptance rate "
            << r.acceptance_rate << ", wall " << r.wall_clock_seconds << " s\n"
            << detail::metrics_table(m, d.class_names);
  return 0;
}

// cv: k-fold cross-validation; every row is predicted by the ensemble of
// the fold that held it out, and the pooled predictions yield one
// per-label report.
inline int cmd_cv(const RunConfig& cfg) {
  const Dataset d = load_csv(cfg.data_path, cfg.label_column);
  const auto folds = kfold_split(d, cfg.folds, cfg.chain.seed, cfg.stratified);

  std::vector<int> pooled(d.n_rows, 0);
  double acceptance_sum = 0.0;
  for (const auto& fold : folds) {
    ChainConfig cc = cfg.chain;
    cc.seed = detail::fold_seed(cfg.chain.seed, fold.fold_index);
    const ChainResult r = detail::run_chain(fold.train, cfg, cc);
    if (r.samples.empty())
      throw std::runtime_error("fold " + std::to_string(fold.fold_index) +
                               " produced no samples; raise iterations");
    const auto trees = detail::sample_trees(r);
    for (auto row : fold.test_indices)
      pooled[row] = predict(trees, d.row(row), cc.prior.smoothing_eps).first;
    acceptance_sum += r.acceptance_rate;
  }
  const MetricsReport m = classification_metrics(pooled, d.labels, d.n_classes);

  nlohmann::json mj = detail::metrics_to_json(m, d.class_names);
  mj["folds"] = cfg.folds;
  mj["mean_acceptance_rate"] = acceptance_sum / static_cast<double>(folds.size());
  detail::write_text(detail::out_path(cfg, "metrics.json").string(), mj.dump(1) + "\n");
  const std::string table = detail::metrics_table(m, d.class_names);
  detail::write_text(detail::out_path(cfg, "cv_metrics.txt").string(), table);
  std::cout << cfg.folds << "-fold cv on " << cfg.data_path << "\n" << table;
  return 0;
}

struct ComparePair {
  std::string case1, case2;
  TTestResult ttest;
};

struct CompareReport {
  std::vector<std::string> cases;             // "serial", "8 cores", ...
  std::vector<std::size_t> sample_counts;     // pooled per case
  std::vector<double> mean_f1;
  std::vector<ComparePair> pairs;
};

namespace detail {

// Per-sample macro F1 of every collected tree on the fold's test rows,
// pooled across folds; the statistic the equivalence test compares.
inline std::vector<double> per_sample_test_f1(const Dataset& d, const RunConfig& cfg,
                                              bool parallel, int workers) {
  const auto folds = kfold_split(d, cfg.folds, cfg.chain.seed, cfg.stratified);
  std::vector<double> f1s;
  for (const auto& fold : folds) {
    ChainConfig cc = cfg.chain;
    cc.workers = workers;
    cc.seed = fold_seed(cfg.chain.seed, fold.fold_index);
    const ChainResult r = parallel ? run_parallel(fold.train, cc) : run_serial(fold.train, cc);
    if (r.samples.empty())
      throw std::runtime_error(
          (parallel ? "parallel (" + std::to_string(workers) + " cores)"
                    : std::string("serial")) +
          " chain on fold " + std::to_string(fold.fold_index) +
          " collected no samples; raise iterations or loosen the convergence rule");
    std::vector<int> truth;
    truth.reserve(fold.test.n_rows);
    for (std::size_t i = 0; i < fold.test.n_rows; ++i) truth.push_back(fold.test.labels[i]);
    for (const auto& s : r.samples) {
      std::vector<int> preds(fold.test.n_rows);
      for (std::size_t i = 0; i < fold.test.n_rows; ++i)
        preds[i] = tree_argmax_label(s.tree, fold.test.row(i));
      f1s.push_back(classification_metrics(preds, truth, d.n_classes).macro_f1);
    }
  }
  return f1s;
}

}  // namespace detail

// compare: the distributional-equivalence protocol. Serial and each
// parallel case run the same k-fold split; per-sample test F1 scores are
// pooled per case and every pair is Welch-tested at the configured
// significance.
inline CompareReport compare_cases(const Dataset& d, const RunConfig& cfg) {
  CompareReport rep;
  std::vector<std::vector<double>> scores;
  rep.cases.push_back("serial");
  scores.push_back(detail::per_sample_test_f1(d, cfg, false, 1));
  for (int c : cfg.core_list) {
    rep.cases.push_back(std::to_string(c) + " cores");
    scores.push_back(detail::per_sample_test_f1(d, cfg, true, c));
  }
  for (const auto& s : scores) {
    rep.sample_counts.push_back(s.size());
    double mean = 0.0;
    for (double v : s) mean += v;
    rep.mean_f1.push_back(s.empty() ? 0.0 : mean / static_cast<double>(s.size()));
  }
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = i + 1; j < scores.size(); ++j)
      rep.pairs.push_back(
          {rep.cases[i], rep.cases[j],
           welch_t_test(scores[i], scores[j], cfg.significance)});
  return rep;
}

inline int cmd_compare(const RunConfig& cfg) {
  const Dataset d = load_csv(cfg.data_path, cfg.label_column);
  const CompareReport rep = compare_cases(d, cfg);

  char buf[256];
  std::string txt = "equivalence report (" + std::to_string(cfg.folds) + "-fold, " +
                    cfg.data_path + ")\n\n";
  for (std::size_t i = 0; i < rep.cases.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%-10s  samples %-8zu mean F1 %.4f\n",
                  rep.cases[i].c_str(), rep.sample_counts[i], rep.mean_f1[i]);
    txt += buf;
  }
  txt += "\npair                      |T|      critical  nu        decision\n";
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : rep.pairs) {
    const std::string name = p.case1 + " vs " + p.case2;
    std::snprintf(buf, sizeof(buf), "%-25s %-8.3f %-9.3f %-9.1f %s\n", name.c_str(),
                  std::abs(p.ttest.t_statistic), p.ttest.critical_value, p.ttest.nu,
                  p.ttest.reject_null ? "REJECT" : "no difference");
    txt += buf;
    pairs.push_back({{"pair", name},
                     {"t_statistic", p.ttest.t_statistic},
                     {"nu", p.ttest.nu},
                     {"critical_value", p.ttest.critical_value},
                     {"reject_null", p.ttest.reject_null}});
  }
  detail::write_text(detail::out_path(cfg, "ttest_report.txt").string(), txt);
  detail::write_text(detail::out_path(cfg, "ttest_report.json").string(),
                     nlohmann::json{{"pairs", pairs}}.dump(1) + "\n");
  std::cout << txt;
  return 0;
}

// bench: wall-clock speedup per core count at a fixed collected-sample
// target, written as plot-ready CSV.
inline int cmd_bench(const RunConfig& cfg) {
  const Dataset d = load_csv(cfg.data_path, cfg.label_column);
  const BenchmarkReport rep = benchmark_speedup(d, cfg.chain, cfg.core_list);
  std::string csv = "cores,theoretical_speedup,measured_speedup\n";
  for (const auto& row : rep.rows)
    csv += std::to_string(row.cores) + "," + format_double(row.theoretical_speedup) +
           "," + format_double(row.measured_speedup) + "\n";
  detail::write_text(detail::out_path(cfg, "speedup.csv").string(), csv);
  std::cout << "serial reference: " << rep.serial_seconds << " s for "
            << rep.target_samples << " samples\n"
            << csv;
  return 0;
}

// predict: route new rows through a serialized posterior sample set.
inline int cmd_predict(const RunConfig& cfg) {
  const SamplesFile f = read_samples_json(cfg.samples_path);
  if (f.samples.empty()) throw ValidationError("samples file holds no samples");
  std::vector<Tree> trees;
  trees.reserve(f.samples.size());
  for (const auto& s : f.samples) trees.push_back(s.tree);

  std::ifstream in(cfg.data_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open input data: " + cfg.data_path);
  std::vector<std::string> header;
  if (!detail::read_record(in, header) || header.empty())
    throw ValidationError("input data has no header row");
  for (auto& h : header) h = detail::trim(h);

  // Column selection: match the training feature names when present,
  // otherwise require the exact feature count positionally.
  std::vector<std::size_t> cols;
  bool by_name = true;
  for (const auto& name : f.feature_names) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      by_name = false;
      break;
    }
    cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  if (!by_name) {
    if (header.size() != f.n_features)
      throw ValidationError("input has " + std::to_string(header.size()) +
                            " columns, model expects " + std::to_string(f.n_features) +
                            " features");
    cols.clear();
    for (std::size_t i = 0; i < header.size(); ++i) cols.push_back(i);
  }

  std::string csv = "row,label";
  for (const auto& cn : f.class_names) csv += ",p_" + cn;
  csv += "\n";
  std::vector<std::string> fields;
  std::size_t rownum = 0;
  while (detail::read_record(in, fields)) {
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    if (fields.size() != header.size())
      throw ValidationError("input row " + std::to_string(rownum + 2) +
                            " has wrong field count");
    std::vector<double> x(f.n_features);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const std::string cell = detail::trim(fields[cols[i]]);
      std::size_t pos = 0;
      double v = 0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size() || cell.empty() || !std::isfinite(v))
        throw ValidationError("non-numeric cell '" + cell + "' in input row " +
                              std::to_string(rownum + 2));
      x[i] = v;
    }
    const auto [label, probs] = predict(trees, x, f.smoothing_eps);
    csv += std::to_string(rownum) + "," + f.class_names[static_cast<std::size_t>(label)];
    for (double p : probs) csv += "," + format_double(p);
    csv += "\n";
    ++rownum;
  }
  detail::write_text(detail::out_path(cfg, "predictions.csv").string(), csv);
  std::cout << "predicted " << rownum << " rows with " << trees.size() << " samples\n";
  return 0;
}

// Dispatch plus the exit-code contract: 0 success, 2 validation/config
// error, 3 runtime failure.
inline int run_command(const RunConfig& cfg) {
  try {
    cfg.validate();
    if (cfg.mode == "fit") return cmd_fit(cfg);
    if (cfg.mode == "cv") return cmd_cv(cfg);
    if (cfg.mode == "compare") return cmd_compare(cfg);
    if (cfg.mode == "bench") return cmd_bench(cfg);
    return cmd_predict(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace bcart
