#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bcart/errors.hpp"
#include "bcart/sampler.hpp"

namespace bcart {

// Everything a reproducible run needs, gathered from a flat key=value
// config file with command-line overrides applied on top (flags win).
struct RunConfig {
  std::string mode;  // fit | cv | compare | bench | predict
  std::string data_path;
  std::string label_column;
  std::string out_dir = ".";
  std::string sampler = "serial";  // serial | parallel
  int folds = 25;
  bool stratified = false;
  std::vector<int> core_list;
  std::string samples_path;  // predict: serialized posterior samples
  double significance = 0.05;
  ChainConfig chain;

  void validate() const {
    if (mode != "fit" && mode != "cv" && mode != "compare" && mode != "bench" &&
        mode != "predict")
      throw ValidationError("unknown mode '" + mode + "'");
    if (sampler != "serial" && sampler != "parallel")
      throw ValidationError("sampler must be 'serial' or 'parallel'");
    if (mode == "predict") {
      if (samples_path.empty()) throw ValidationError("predict needs a samples file");
      if (data_path.empty()) throw ValidationError("predict needs an input data file");
    } else {
      if (data_path.empty()) throw ValidationError("no dataset given (data=... or --data)");
      if (label_column.empty())
        throw ValidationError("no label column given (label_column=... or --label-col)");
    }
    if (mode == "cv" || mode == "compare") {
      if (folds < 2) throw ValidationError("cv/compare need folds >= 2");
    }
    if (mode == "compare" || mode == "bench") {
      if (core_list.empty())
        throw ValidationError(mode + " needs a non-empty core_list (--core-list)");
      for (int c : core_list)
        if (c < 1) throw ValidationError("core_list entries must be >= 1");
    }
    if (!(significance > 0.0 && significance < 1.0))
      throw ValidationError("significance must be in (0,1)");
    chain.validate();
  }
};

namespace detail {

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long r = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config key '" + key + "': expected boolean, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_long(key, item)));
  return out;
}

}  // namespace detail

// Applies one key=value pair; shared by the file loader and flag overrides.
inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  if (key == "mode") cfg.mode = value;
  else if (key == "data") cfg.data_path = value;
  else if (key == "label_column") cfg.label_column = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "sampler") cfg.sampler = value;
  else if (key == "folds") cfg.folds = static_cast<int>(detail::parse_long(key, value));
  else if (key == "stratified") cfg.stratified = detail::parse_bool(key, value);
  else if (key == "core_list") cfg.core_list = detail::parse_int_list(key, value);
  else if (key == "samples") cfg.samples_path = value;
  else if (key == "significance") cfg.significance = detail::parse_double(key, value);
  else if (key == "iterations") cfg.chain.iterations = detail::parse_long(key, value);
  else if (key == "cores") cfg.chain.workers = static_cast<int>(detail::parse_long(key, value));
  else if (key == "seed") cfg.chain.seed = static_cast<std::uint64_t>(detail::parse_long(key, value));
  else if (key == "target_samples") cfg.chain.target_samples = detail::parse_long(key, value);
  else if (key == "max_depth") cfg.chain.max_depth = static_cast<int>(detail::parse_long(key, value));
  else if (key == "progress_every") cfg.chain.progress_every = detail::parse_long(key, value);
  else if (key == "convergence_window") cfg.chain.convergence_window = static_cast<int>(detail::parse_long(key, value));
  else if (key == "convergence_tol") cfg.chain.convergence_tol = detail::parse_double(key, value);
  else if (key == "burn_in_fraction") cfg.chain.burn_in_fraction = detail::parse_double(key, value);
  else if (key == "p_grow") cfg.chain.move_probs.grow = detail::parse_double(key, value);
  else if (key == "p_prune") cfg.chain.move_probs.prune = detail::parse_double(key, value);
  else if (key == "p_change") cfg.chain.move_probs.change = detail::parse_double(key, value);
  else if (key == "p_swap") cfg.chain.move_probs.swap = detail::parse_double(key, value);
  else if (key == "alpha") cfg.chain.prior.alpha = detail::parse_double(key, value);
  else if (key == "beta") cfg.chain.prior.beta = detail::parse_double(key, value);
  else if (key == "smoothing_eps") cfg.chain.prior.smoothing_eps = detail::parse_double(key, value);
  else if (key == "prior_mode") {
    if (value == "node_wise") cfg.chain.prior.prior_mode = TreePriorMode::node_wise;
    else if (value == "whole_tree") cfg.chain.prior.prior_mode = TreePriorMode::whole_tree;
    else throw ValidationError("prior_mode must be node_wise or whole_tree, got '" + value + "'");
  } else if (key == "c_mode") {
    if (value == "per_feature") cfg.chain.prior.c_mode = UniqueCountMode::per_feature;
    else if (value == "global") cfg.chain.prior.c_mode = UniqueCountMode::global;
    else throw ValidationError("c_mode must be per_feature or global, got '" + value + "'");
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

// Flat text config: one key = value per line, '#' starts a comment.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](const std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected key = value");
    apply_config_entry(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

}  // namespace bcart
