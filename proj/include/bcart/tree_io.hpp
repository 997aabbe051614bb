#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcart/dataset.hpp"
#include "bcart/errors.hpp"
#include "bcart/sampler.hpp"
#include "bcart/tree.hpp"

namespace bcart {

inline constexpr const char* kSamplesSchema = "bcart.samples/1";

// Shortest round-trip decimal form; locale-free, so exported files are
// byte-stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline nlohmann::json tree_to_json(const Tree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const Node& n = t.nodes[i];
    nlohmann::json j;
    j["id"] = i;
    if (n.is_leaf()) {
      j["kind"] = "leaf";
      j["counts"] = n.counts;
    } else {
      j["kind"] = "decision";
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["children"] = {n.left, n.right};
    }
    nodes.push_back(j);
  }
  return nlohmann::json{{"nodes", nodes}};
}

inline Tree tree_from_json(const nlohmann::json& j) {
  if (!j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty())
    throw ValidationError("tree JSON: missing or empty node list");
  Tree t;
  t.nodes.resize(j["nodes"].size());
  for (const auto& nj : j["nodes"]) {
    const std::size_t id = nj.at("id").get<std::size_t>();
    if (id >= t.nodes.size()) throw ValidationError("tree JSON: node id out of range");
    Node& n = t.nodes[id];
    const std::string kind = nj.at("kind").get<std::string>();
    if (kind == "leaf") {
      n.counts = nj.at("counts").get<std::vector<int>>();
    } else if (kind == "decision") {
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      const auto& ch = nj.at("children");
      n.left = ch.at(0).get<int>();
      n.right = ch.at(1).get<int>();
    } else {
      throw ValidationError("tree JSON: unknown node kind '" + kind + "'");
    }
  }
  // rebuild parent/depth links and verify the arena forms one binary tree
  std::vector<bool> seen(t.nodes.size(), false);
  auto rec = [&](auto&& self, int id, int parent, int depth) -> void {
    if (id < 0 || static_cast<std::size_t>(id) >= t.nodes.size() ||
        seen[static_cast<std::size_t>(id)])
      throw ValidationError("tree JSON: malformed child links");
    seen[static_cast<std::size_t>(id)] = true;
    Node& n = t.node(id);
    n.parent = parent;
    n.depth = depth;
    if (!n.is_leaf()) {
      self(self, n.left, id, depth + 1);
      self(self, n.right, id, depth + 1);
    }
  };
  rec(rec, 0, -1, 0);
  for (bool s : seen)
    if (!s) throw ValidationError("tree JSON: unreachable nodes present");
  return t;
}

struct SamplesFile {
  std::size_t n_features = 0;
  int n_classes = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  double smoothing_eps = 1.0;
  std::vector<SampleRecord> samples;
};

inline void write_samples_json(const std::string& path, const ChainResult& result,
                               const Dataset& d, double smoothing_eps) {
  nlohmann::json j;
  j["schema"] = kSamplesSchema;
  j["n_features"] = d.n_features;
  j["n_classes"] = d.n_classes;
  j["feature_names"] = d.feature_names;
  j["class_names"] = d.class_names;
  j["smoothing_eps"] = smoothing_eps;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : result.samples) {
    nlohmann::json sj;
    sj["iteration"] = s.iteration;
    sj["log_posterior"] = s.log_posterior;
    sj["tree"] = tree_to_json(s.tree);
    samples.push_back(std::move(sj));
  }
  j["samples"] = std::move(samples);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(1) << "\n";
}

inline SamplesFile read_samples_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open samples file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed samples file " + path + ": " + e.what());
  }
  if (!j.contains("schema") || j["schema"] != kSamplesSchema)
    throw ValidationError("samples file " + path + " has unsupported schema '" +
                          (j.contains("schema") ? j["schema"].dump() : "<none>") +
                          "', expected '" + kSamplesSchema + "'");
  SamplesFile f;
  f.n_features = j.at("n_features").get<std::size_t>();
  f.n_classes = j.at("n_classes").get<int>();
  f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  f.class_names = j.at("class_names").get<std::vector<std::string>>();
  f.smoothing_eps = j.value("smoothing_eps", 1.0);
  for (const auto& sj : j.at("samples")) {
    SampleRecord r;
    r.iteration = sj.at("iteration").get<long>();
    r.log_posterior = sj.at("log_posterior").get<double>();
    r.tree = tree_from_json(sj.at("tree"));
    f.samples.push_back(std::move(r));
  }
  return f;
}

// Per-iteration diagnostics table: iteration, training F1, alpha of the
// considered candidate, samples collected that iteration.
inline void write_diagnostics_csv(const std::string& path, const ChainResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << "iteration,f1,alpha,yield\n";
  for (std::size_t i = 0; i < result.f1_history.size(); ++i) {
    out << i << "," << format_double(result.f1_history[i]) << ","
        << format_double(result.alpha_history[i]) << "," << result.yield_history[i]
        << "\n";
  }
}

}  // namespace bcart
