#pragma once

#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "bcart/dataset.hpp"
#include "bcart/moves.hpp"
#include "bcart/posterior.hpp"
#include "bcart/rng.hpp"
#include "bcart/row_partition.hpp"
#include "bcart/tree.hpp"

namespace bcart {

// Reserved stream tags; proposal workers use their worker index.
inline constexpr std::uint64_t kInitStream = 0xffff0000ULL;
inline constexpr std::uint64_t kAcceptStream = 0xffff0001ULL;

struct ChainConfig {
  long iterations = 10000;
  int workers = 1;  // C, parallel sampler only
  MoveProbabilities move_probs;
  PriorConfig prior;
  int convergence_window = 100;    // W
  double convergence_tol = 0.03;   // +-3%
  double burn_in_fraction = 0.3;
  std::uint64_t seed = 0;
  std::optional<long> target_samples;
  std::optional<int> max_depth;
  long progress_every = 0;  // stderr cadence; 0 = silent

  void validate() const {
    if (iterations <= 0) throw ValidationError("iterations must be > 0");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    if (convergence_window < 2) throw ValidationError("convergence_window must be >= 2");
    if (!(convergence_tol > 0.0 && convergence_tol < 1.0))
      throw ValidationError("convergence_tol must be in (0,1)");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
      throw ValidationError("burn_in_fraction must be in [0,1)");
    if (target_samples && *target_samples <= 0)
      throw ValidationError("target_samples must be > 0");
    if (max_depth && *max_depth < 1) throw ValidationError("max_depth must be >= 1");
    move_probs.validate();
    prior.validate();
  }
};

struct SampleRecord {
  Tree tree;
  double log_posterior = 0.0;
  long iteration = 0;
};

struct ChainResult {
  std::vector<SampleRecord> samples;
  std::vector<double> f1_history;      // training F1 of the state, per iteration
  std::vector<double> alpha_history;   // acceptance ratio of the considered/selected candidate
  std::vector<int> yield_history;      // samples collected per iteration
  double acceptance_rate = 0.0;
  std::optional<long> convergence_iteration;
  double wall_clock_seconds = 0.0;
  long iterations_run = 0;
  long fresh_acceptances = 0;  // accepted candidates among collected samples
};

// First index t whose trailing window [t-W+1, t] has every value inside
// [m(1-tol), m(1+tol)] around the window mean m: the F1 score has
// fluctuated less than +-tol for a full window.
inline std::optional<long> check_convergence(const std::vector<double>& f1,
                                             int window, double tol) {
  if (window < 2) throw ValidationError("check_convergence: window must be >= 2");
  if (!(tol > 0.0)) throw ValidationError("check_convergence: tol must be > 0");
  const std::size_t w = static_cast<std::size_t>(window);
  if (f1.size() < w) return std::nullopt;
  for (std::size_t t = w - 1; t < f1.size(); ++t) {
    double sum = 0.0;
    for (std::size_t i = t + 1 - w; i <= t; ++i) sum += f1[i];
    const double m = sum / static_cast<double>(w);
    bool ok = true;
    for (std::size_t i = t + 1 - w; i <= t && ok; ++i)
      if (f1[i] < m * (1.0 - tol) || f1[i] > m * (1.0 + tol)) ok = false;
    if (ok) return static_cast<long>(t);
  }
  return std::nullopt;
}

// Macro-averaged F1 of the tree's argmax-leaf predictions on its own
// training data, read straight off the refreshed leaf counts: every row in
// a leaf is predicted as that leaf's majority class (lowest label on ties).
inline double training_f1(const Tree& t, const Dataset& d) {
  const std::size_t L = static_cast<std::size_t>(d.n_classes);
  std::vector<double> tp(L, 0.0), fp(L, 0.0), fn(L, 0.0);
  for (const auto& node : t.nodes) {
    if (!node.is_leaf()) continue;
    int pred = 0;
    for (std::size_t y = 1; y < L; ++y)
      if (node.counts[y] > node.counts[static_cast<std::size_t>(pred)])
        pred = static_cast<int>(y);
    for (std::size_t y = 0; y < L; ++y) {
      const double n = node.counts[y];
      if (n == 0) continue;
      if (static_cast<int>(y) == pred) {
        tp[y] += n;
      } else {
        fn[y] += n;
        fp[static_cast<std::size_t>(pred)] += n;
      }
    }
  }
  double macro = 0.0;
  for (std::size_t y = 0; y < L; ++y) {
    const double prec = tp[y] + fp[y] > 0 ? tp[y] / (tp[y] + fp[y]) : 0.0;
    const double rec = tp[y] + fn[y] > 0 ? tp[y] / (tp[y] + fn[y]) : 0.0;
    macro += prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  return macro / static_cast<double>(L);
}

namespace detail {

inline void progress_line(long iteration, double log_post, double f1, double acc_rate) {
  std::fprintf(stderr, "iter %ld  log_post %.4f  f1 %.4f  acc %.3f\n", iteration,
               log_post, f1, acc_rate);
}

// Trailing-window convergence test equivalent to check_convergence's first
// firing index, evaluated incrementally as the history grows.
inline bool window_converged(const std::vector<double>& f1, int window, double tol) {
  const std::size_t w = static_cast<std::size_t>(window);
  if (f1.size() < w) return false;
  double sum = 0.0;
  for (std::size_t i = f1.size() - w; i < f1.size(); ++i) sum += f1[i];
  const double m = sum / static_cast<double>(w);
  for (std::size_t i = f1.size() - w; i < f1.size(); ++i)
    if (f1[i] < m * (1.0 - tol) || f1[i] > m * (1.0 + tol)) return false;
  return true;
}

// Fixed pool of proposal workers. Each round, worker j fills its own slot;
// the coordinator then reduces in index order, so results never depend on
// scheduling. Two barrier passes per round.
class WorkerPool {
 public:
  explicit WorkerPool(int n)
      : start_(n + 1), done_(n + 1) {
    threads_.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      threads_.emplace_back([this, j] { loop(j); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    stop_.store(true);
    start_.arrive_and_wait();
    for (auto& t : threads_) t.join();
  }

  void run(const std::function<void(int)>& job) {
    job_ = &job;
    start_.arrive_and_wait();
    done_.arrive_and_wait();
    job_ = nullptr;
  }

 private:
  void loop(int j) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_.load()) return;
      (*job_)(j);
      done_.arrive_and_wait();
    }
  }

  std::atomic<bool> stop_{false};
  const std::function<void(int)>* job_ = nullptr;
  std::vector<std::thread> threads_;
  std::barrier<> start_;
  std::barrier<> done_;
};

}  // namespace detail

// Classic serial Metropolis-Hastings over trees: one proposal per
// iteration, accept when u < alpha, collect one sample per post-burn-in
// iteration (repeats included on rejection). A pure function of
// (dataset, config.seed).
inline ChainResult run_serial(const Dataset& d, const ChainConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ChainResult res;

  Rng init_rng = Rng::for_step(config.seed, 0, kInitStream);
  Tree tree = init_tree(d, init_rng);
  double log_post = log_posterior(tree, d, config.prior);
  RowPartition part;
  part.build(tree, d);

  const long burn_in =
      static_cast<long>(config.burn_in_fraction * static_cast<double>(config.iterations));
  long accepted = 0;

  for (long i = 0; i < config.iterations; ++i) {
    const std::uint64_t step = static_cast<std::uint64_t>(i) + 1;
    Rng prop_rng = Rng::for_step(config.seed, step, 0);
    Proposal prop = propose_incremental(tree, part, d, config.move_probs, config.prior,
                                        prop_rng, config.max_depth);
    const double u = Rng::for_step(config.seed, step, kAcceptStream).uniform();
    const bool accept = u < prop.alpha;
    if (accept) {
      advance_partition(part, tree, prop, d);
      tree = std::move(prop.candidate);
      log_post = prop.log_posterior;
      ++accepted;
    }
    res.f1_history.push_back(training_f1(tree, d));
    res.alpha_history.push_back(prop.alpha);
    int yield = 0;
    if (i >= burn_in) {
      res.samples.push_back({tree, log_post, i});
      yield = 1;
      if (accept) ++res.fresh_acceptances;
    }
    res.yield_history.push_back(yield);
    res.iterations_run = i + 1;
    if (config.progress_every > 0 && (i + 1) % config.progress_every == 0)
      detail::progress_line(i + 1, log_post, res.f1_history.back(),
                            static_cast<double>(accepted) / static_cast<double>(i + 1));
    if (config.target_samples &&
        static_cast<long>(res.samples.size()) >= *config.target_samples)
      break;
  }

  res.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(res.iterations_run);
  res.convergence_iteration =
      check_convergence(res.f1_history, config.convergence_window, config.convergence_tol);
  res.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// Single-chain multi-worker sampler. Every iteration C workers each propose
// one candidate from the current tree and score it in parallel. Before the
// F1 convergence rule fires the chain advances to the highest-alpha
// candidate; afterwards one shared u per iteration turns every worker slot
// into a collected sample (its candidate when alpha_j > u, the current tree
// otherwise), and the chain advances to the highest-alpha candidate when
// that candidate itself was accepted. Worker RNG streams are keyed by
// (seed, iteration, worker), so the result is a pure function of
// (dataset, config) regardless of scheduling.
inline ChainResult run_parallel(const Dataset& d, const ChainConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int C = config.workers;
  ChainResult res;

  Rng init_rng = Rng::for_step(config.seed, 0, kInitStream);
  Tree tree = init_tree(d, init_rng);
  double log_post = log_posterior(tree, d, config.prior);
  RowPartition part;
  part.build(tree, d);

  std::vector<Proposal> slots(static_cast<std::size_t>(C));
  // a single worker needs no thread pool or barrier round-trips
  std::optional<detail::WorkerPool> pool;
  if (C > 1) pool.emplace(C);

  bool converged = false;
  long slots_considered = 0;
  long slots_accepted = 0;

  for (long i = 0; i < config.iterations; ++i) {
    const std::uint64_t step = static_cast<std::uint64_t>(i) + 1;
    const Tree& current = tree;
    const auto eval_slot = [&](int j) {
      Rng r = Rng::for_step(config.seed, step, static_cast<std::uint64_t>(j));
      slots[static_cast<std::size_t>(j)] = propose_incremental(
          current, part, d, config.move_probs, config.prior, r, config.max_depth);
    };
    if (pool)
      pool->run(eval_slot);
    else
      eval_slot(0);

    std::size_t best = 0;
    for (std::size_t j = 1; j < slots.size(); ++j)
      if (slots[j].alpha > slots[best].alpha) best = j;

    int yield = 0;
    if (!converged) {
      advance_partition(part, tree, slots[best], d);
      tree = slots[best].candidate;
      log_post = slots[best].log_posterior;
      res.f1_history.push_back(training_f1(tree, d));
      res.alpha_history.push_back(slots[best].alpha);
      if (detail::window_converged(res.f1_history, config.convergence_window,
                                   config.convergence_tol)) {
        converged = true;
        res.convergence_iteration = i;
      }
    } else {
      const double u = Rng::for_step(config.seed, step, kAcceptStream).uniform();
      for (std::size_t j = 0; j < slots.size(); ++j) {
        if (config.target_samples &&
            static_cast<long>(res.samples.size()) >= *config.target_samples)
          break;
        ++slots_considered;
        if (slots[j].alpha > u) {
          res.samples.push_back({slots[j].candidate, slots[j].log_posterior, i});
          ++slots_accepted;
          ++res.fresh_acceptances;
        } else {
          res.samples.push_back({tree, log_post, i});
        }
        ++yield;
      }
      if (slots[best].alpha > u) {
        advance_partition(part, tree, slots[best], d);
        tree = slots[best].candidate;
        log_post = slots[best].log_posterior;
      }
      res.f1_history.push_back(training_f1(tree, d));
      res.alpha_history.push_back(slots[best].alpha);
    }
    res.yield_history.push_back(yield);
    res.iterations_run = i + 1;
    if (config.progress_every > 0 && (i + 1) % config.progress_every == 0)
      detail::progress_line(i + 1, log_post, res.f1_history.back(),
                            slots_considered > 0
                                ? static_cast<double>(slots_accepted) /
                                      static_cast<double>(slots_considered)
                                : 0.0);
    if (config.target_samples &&
        static_cast<long>(res.samples.size()) >= *config.target_samples)
      break;
  }

  res.acceptance_rate = slots_considered > 0 ? static_cast<double>(slots_accepted) /
                                                   static_cast<double>(slots_considered)
                                             : 0.0;
  res.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace bcart
