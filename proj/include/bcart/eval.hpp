#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "bcart/dataset.hpp"
#include "bcart/sampler.hpp"
#include "bcart/tree.hpp"

namespace bcart {

struct LabelMetrics {
  int label = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<LabelMetrics> per_label;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// One-vs-rest precision/recall/F1 per label plus exact accuracy.
// Conventions for empty denominators: precision 0 with no predicted
// positives, recall 0 with no actual positives, F1 0 when P+R = 0.
inline MetricsReport classification_metrics(const std::vector<int>& predictions,
                                            const std::vector<int>& truth, int n_labels) {
  if (predictions.size() != truth.size())
    throw ValidationError("classification_metrics: length mismatch");
  if (predictions.empty())
    throw ValidationError("classification_metrics: empty inputs");
  const std::size_t L = static_cast<std::size_t>(n_labels);
  std::vector<double> tp(L, 0.0), fp(L, 0.0), fn(L, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(predictions[i]);
    const auto y = static_cast<std::size_t>(truth[i]);
    if (p == y) {
      ++correct;
      tp[y] += 1;
    } else {
      fp[p] += 1;
      fn[y] += 1;
    }
  }
  MetricsReport rep;
  for (std::size_t y = 0; y < L; ++y) {
    LabelMetrics m;
    m.label = static_cast<int>(y);
    m.precision = tp[y] + fp[y] > 0 ? tp[y] / (tp[y] + fp[y]) : 0.0;
    m.recall = tp[y] + fn[y] > 0 ? tp[y] / (tp[y] + fn[y]) : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    rep.macro_f1 += m.f1;
    rep.per_label.push_back(m);
  }
  rep.macro_f1 /= static_cast<double>(L);
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  return rep;
}

// Posterior-predictive classification: average the smoothed leaf class
// distributions the row reaches across all sampled trees; argmax wins,
// lowest label on ties.
inline std::pair<int, std::vector<double>> predict(const std::vector<Tree>& samples,
                                                   std::span<const double> x,
                                                   double eps = 1.0) {
  if (samples.empty()) throw ValidationError("predict: empty sample list");
  const auto first_leaves = leaf_nodes(samples.front());
  const std::size_t L = samples.front().node(first_leaves.front()).counts.size();
  std::vector<double> acc(L, 0.0);
  for (const Tree& t : samples) {
    const Node& leaf = t.node(route(t, x));
    double n = 0.0;
    for (int c : leaf.counts) n += c;
    const double denom = n + static_cast<double>(L) * eps;
    for (std::size_t y = 0; y < L; ++y)
      acc[y] += denom > 0 ? (leaf.counts[y] + eps) / denom : 1.0 / static_cast<double>(L);
  }
  for (auto& v : acc) v /= static_cast<double>(samples.size());
  int label = 0;
  for (std::size_t y = 1; y < L; ++y)
    if (acc[y] > acc[static_cast<std::size_t>(label)]) label = static_cast<int>(y);
  return {label, acc};
}

namespace detail {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr int max_iter = 400;
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

inline double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

inline double student_t_cdf(double x, double nu) {
  if (x == 0.0) return 0.5;
  const double z = nu / (nu + x * x);
  const double tail = 0.5 * detail::reg_incomplete_beta(nu / 2.0, 0.5, z);
  return x > 0.0 ? 1.0 - tail : tail;
}

// Inverse Student-t CDF by bisection on the incomplete-beta CDF; a handful
// of calls per report, so robustness beats speed here.
inline double student_t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("student_t_quantile: p must be in (0,1)");
  if (!(nu > 0.0)) throw ValidationError("student_t_quantile: nu must be > 0");
  if (p == 0.5) return 0.0;
  const double target = std::max(p, 1.0 - p);
  double lo = 0.0, hi = 1.0;
  while (student_t_cdf(hi, nu) < target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, nu) < target)
      lo = mid;
    else
      hi = mid;
  }
  const double q = 0.5 * (lo + hi);
  return p >= 0.5 ? q : -q;
}

// Two-sided critical value of the t distribution at the given significance.
inline double student_t_critical(double nu, double significance) {
  if (!(significance > 0.0 && significance < 1.0))
    throw ValidationError("significance must be in (0,1)");
  return student_t_quantile(1.0 - significance / 2.0, nu);
}

struct TTestResult {
  double t_statistic = 0.0;
  double nu = 0.0;            // Welch-Satterthwaite degrees of freedom
  double critical_value = 0.0;
  bool reject_null = false;
  double mean1 = 0.0, mean2 = 0.0;
  std::size_t n1 = 0, n2 = 0;
};

// Welch's unpaired two-sample t-test with unbiased sample variances.
inline TTestResult welch_t_test(const std::vector<double>& sample1,
                                const std::vector<double>& sample2,
                                double significance = 0.05) {
  if (sample1.size() < 2 || sample2.size() < 2)
    throw ValidationError("welch_t_test: both samples need at least 2 values");
  auto mean_var = [](const std::vector<double>& s) {
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    return std::pair<double, double>(mean, ss / (n - 1.0));
  };
  const auto [m1, v1] = mean_var(sample1);
  const auto [m2, v2] = mean_var(sample2);
  if (v1 == 0.0 && v2 == 0.0)
    throw ValidationError("welch_t_test: zero variance in both samples");
  const double n1 = static_cast<double>(sample1.size());
  const double n2 = static_cast<double>(sample2.size());
  const double se2 = v1 / n1 + v2 / n2;

  TTestResult r;
  r.mean1 = m1;
  r.mean2 = m2;
  r.n1 = sample1.size();
  r.n2 = sample2.size();
  r.t_statistic = (m1 - m2) / std::sqrt(se2);
  r.nu = se2 * se2 /
         ((v1 / n1) * (v1 / n1) / (n1 - 1.0) + (v2 / n2) * (v2 / n2) / (n2 - 1.0));
  r.critical_value = student_t_critical(r.nu, significance);
  r.reject_null = std::abs(r.t_statistic) > r.critical_value;
  return r;
}

struct SpeedupEstimate {
  long samples = 0;                  // S
  int cores = 1;                     // C
  double acceptance_rate = 0.0;      // pr
  double iterations_per_minute = 0;  // t
  double iterations_needed = 0.0;    // i = (S/C)/pr
  double runtime_minutes = 0.0;      // i/t
  double speedup_printed_formula = 0.0;  // runtime/C, reported for fidelity
  double speedup_vs_serial = 0.0;        // serial runtime / this runtime (= C)
};

// Analytic collection-cost model: i iterations to gather S samples on C
// cores at acceptance rate pr, runtime i/t given t iterations per minute.
// Two speedup figures are reported side by side: the printed runtime/C
// formula, and the conventional serial/parallel runtime ratio.
inline SpeedupEstimate speedup_model(long S, int C, double pr, double t) {
  if (S < 1 || C < 1) throw ValidationError("speedup_model: S and C must be >= 1");
  if (!(pr > 0.0 && pr <= 1.0)) throw ValidationError("speedup_model: pr must be in (0,1]");
  if (!(t > 0.0)) throw ValidationError("speedup_model: t must be > 0");
  SpeedupEstimate e;
  e.samples = S;
  e.cores = C;
  e.acceptance_rate = pr;
  e.iterations_per_minute = t;
  e.iterations_needed = (static_cast<double>(S) / static_cast<double>(C)) / pr;
  e.runtime_minutes = e.iterations_needed / t;
  e.speedup_printed_formula = e.runtime_minutes / static_cast<double>(C);
  const double serial_runtime = (static_cast<double>(S) / pr) / t;
  e.speedup_vs_serial = serial_runtime / e.runtime_minutes;
  return e;
}

struct BenchmarkRow {
  int cores = 1;
  double wall_clock_seconds = 0.0;
  double theoretical_speedup = 1.0;
  double measured_speedup = 1.0;
};

struct BenchmarkReport {
  double serial_seconds = 0.0;
  long target_samples = 0;
  std::vector<BenchmarkRow> rows;
};

// Wall-clock speedup harness: one serial reference run, then one parallel
// run per requested core count, all collecting the same number of samples.
// Configurations run one at a time so timings do not contaminate each other.
inline BenchmarkReport benchmark_speedup(const Dataset& d, const ChainConfig& base,
                                         const std::vector<int>& core_list) {
  if (core_list.empty()) throw ValidationError("benchmark_speedup: empty core list");
  for (int c : core_list)
    if (c < 1) throw ValidationError("benchmark_speedup: core counts must be >= 1");

  ChainConfig config = base;
  const long burn =
      static_cast<long>(config.burn_in_fraction * static_cast<double>(config.iterations));
  if (!config.target_samples) config.target_samples = config.iterations - burn;

  BenchmarkReport report;
  report.target_samples = *config.target_samples;
  ChainResult serial = run_serial(d, config);
  report.serial_seconds = serial.wall_clock_seconds;

  for (int c : core_list) {
    ChainConfig pc = config;
    pc.workers = c;
    ChainResult r = run_parallel(d, pc);
    BenchmarkRow row;
    row.cores = c;
    row.wall_clock_seconds = r.wall_clock_seconds;
    row.theoretical_speedup = static_cast<double>(c);
    row.measured_speedup =
        r.wall_clock_seconds > 0 ? report.serial_seconds / r.wall_clock_seconds : 0.0;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace bcart
