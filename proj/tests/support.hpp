#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "xrt/cli.hpp"
#include "xrt/model.hpp"
#include "xrt/rng.hpp"

namespace xrt::testing {

/// Random sequences over a small vocabulary.
inline std::vector<TokenSequence> random_batch(Rng& rng, std::size_t vocab, std::size_t size, std::size_t max_len) {
  std::vector<TokenSequence> batch(size);
  for (auto& seq : batch) {
    seq.resize(1 + rng.index(max_len));
    for (auto& t : seq) t = rng.index(vocab);
  }
  return batch;
}

inline Eigen::VectorXd random_distribution(Rng& rng, std::size_t n, bool allow_zero = false) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = (allow_zero && rng.bernoulli(0.2)) ? 0.0 : rng.uniform(0.05, 1.0);
  if (v.sum() == 0.0) v[0] = 1.0;
  return v / v.sum();
}

/// Random parameters with every tensor filled (including biases), so the
/// finite-difference check exercises each of them.
inline ClassifierParams<double> random_params(const ClassifierConfig& config, Rng& rng, double scale = 0.8) {
  auto params = ClassifierParams<double>::zeros(config);
  zip_tensors(
      [&](std::string_view, auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-scale, scale);
      },
      params);
  return params;
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter entry. Denominators are floored at
/// `floor` so entries that are zero on both sides do not divide by zero.
inline double max_relative_gradient_error(std::span<const TokenSequence> batch, const Supervision& supervision,
                                          ClassifierParams<double> params, const ClassifierConfig& config,
                                          double eps = 1e-4, double floor = 1e-4) {
  auto analytic = parameter_gradients<double>(batch, supervision, params, config, nullptr).grads;
  double worst = 0.0;
  std::vector<Eigen::Map<Eigen::VectorXd>> p_views, g_views;
  zip_tensors(
      [&](std::string_view, auto& p, auto& g) {
        p_views.emplace_back(p.data(), p.size());
        g_views.emplace_back(g.data(), g.size());
      },
      params, analytic);
  for (std::size_t k = 0; k < p_views.size(); ++k) {
    for (Eigen::Index i = 0; i < p_views[k].size(); ++i) {
      const double saved = p_views[k][i];
      p_views[k][i] = saved + eps;
      const double up = batch_loss(batch, supervision, params, config);
      p_views[k][i] = saved - eps;
      const double down = batch_loss(batch, supervision, params, config);
      p_views[k][i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = g_views[k][i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// Random tree over noun, verb, adjective and filler leaves.
inline std::string random_tree(Rng& rng, int depth = 0) {
  static const char* tags[] = {"NN", "NNS", "VBZ", "VBD", "JJ", "DT", "IN", "RB"};
  if (depth > 3 || (depth > 0 && rng.bernoulli(0.35))) {
    const char* tag = tags[rng.index(8)];
    return std::string("(") + tag + " w" + std::to_string(rng.index(50)) + ")";
  }
  static const char* phrases[] = {"S", "NP", "VP", "ADJP", "PP", "SBAR"};
  std::string out = std::string("(") + phrases[rng.index(6)];
  const std::size_t children = 1 + rng.index(3);
  for (std::size_t i = 0; i < children; ++i) out += " " + random_tree(rng, depth + 1);
  return out + ")";
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("xrt-test-" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

/// Runs the command-line pipeline synth -> train-source -> estimate-props
/// -> partition -> fragment -> train-xr -> eval inside `dir` with the given
/// config file. Returns the first failing status, or 0.
inline int run_cli_pipeline(const TempDir& dir, const std::string& config) {
  const std::vector<std::vector<std::string>> steps{
      {"synth", "--config", config, "--out", dir / "data"},
      {"train-source", "--config", config, "--train", dir / "data/source_train.jsonl", "--out", dir / "source.ckpt"},
      {"estimate-props", "--config", config, "--source", dir / "source.ckpt", "--data",
       dir / "data/target_labeled.jsonl", "--out", dir / "table.json"},
      {"partition", "--config", config, "--source", dir / "source.ckpt", "--data", dir / "data/unlabeled.jsonl",
       "--out", dir / "partition.json"},
      {"fragment", "--config", config, "--data", dir / "data/unlabeled.jsonl", "--partition",
       dir / "partition.json", "--table", dir / "table.json", "--out", dir / "sets.jsonl"},
      {"train-xr", "--config", config, "--sets", dir / "sets.jsonl", "--dev", dir / "data/target_labeled.jsonl",
       "--out", dir / "xr.ckpt"},
      {"eval", "--config", config, "--model", dir / "xr.ckpt", "--data", dir / "data/test.jsonl", "--out",
       dir / "metrics.json"},
  };
  for (const auto& step : steps) {
    std::ostringstream out, err;
    if (const int status = dispatch(step, out, err); status != 0) return status;
  }
  return 0;
}

/// Every regular file under `root`, keyed by relative path.
inline std::vector<std::pair<std::string, std::string>> snapshot(const std::filesystem::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    files.emplace_back(std::filesystem::relative(entry.path(), root).string(), bytes.str());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace xrt::testing
