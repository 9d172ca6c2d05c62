#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "xrt/core.hpp"
#include "xrt/metrics.hpp"
#include "xrt/model.hpp"

namespace xrt {

struct AdamHyper {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

template <typename Scalar>
struct AdamState {
  ClassifierParams<Scalar> first;
  ClassifierParams<Scalar> second;
  std::size_t t = 0;

  static AdamState fresh(const ClassifierParams<Scalar>& like) {
    AdamState s;
    s.first = like;
    zip_tensors([](std::string_view, auto& m) { m.setZero(); }, s.first);
    s.second = s.first;
    return s;
  }
};

/// One bias-corrected Adam step, in place. Throws ShapeMismatch.
template <typename Scalar>
void adam_update(ClassifierParams<Scalar>& params, const GradientSet<Scalar>& grads, AdamState<Scalar>& state,
                 const AdamHyper& hyper) {
  if (!same_shape(params, grads) || !same_shape(params, state.first) || !same_shape(params, state.second))
    throw Error(ErrorCode::ShapeMismatch, "adam_update: parameter, gradient and moment shapes differ");
  ++state.t;
  const double t = static_cast<double>(state.t);
  const Scalar c1 = Scalar(1.0 - std::pow(hyper.beta1, t));
  const Scalar c2 = Scalar(1.0 - std::pow(hyper.beta2, t));
  const Scalar b1 = Scalar(hyper.beta1), b2 = Scalar(hyper.beta2);
  const Scalar alpha = Scalar(hyper.alpha), eps = Scalar(hyper.eps);
  zip_tensors(
      [&](std::string_view, auto& p, const auto& g, auto& m, auto& v) {
        m = b1 * m + (Scalar(1) - b1) * g;
        v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
        p.array() -= alpha * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      },
      params, grads, state.first, state.second);
}

enum class SelectionMetric { Accuracy, MacroF1 };

struct TrainConfig {
  std::size_t k = 450;                // XR subset size
  std::size_t steps_per_epoch = 0;    // 0: ceil(total set members / k)
  std::size_t epochs = 10;
  std::size_t supervised_batch_size = 30;
  AdamHyper adam;
  std::uint64_t seed = 1;
  bool dropout_enabled = true;
  SelectionMetric selection_metric = SelectionMetric::MacroF1;

  void validate() const;
};

/// A token-index sequence with its gold label.
struct LabeledSequence {
  TokenSequence tokens;
  LabelIndex label = 0;
};

/// A constraint set after vocabulary encoding.
struct EncodedSet {
  LabelIndex source_label = 0;
  std::vector<TokenSequence> members;
  Eigen::VectorXd proportion;
};

std::vector<EncodedSet> encode_sets(std::span<const ConstraintSet> sets, const Vocabulary& vocab);

/// Labeled sequences from fragments carrying a gold label; others skipped.
std::vector<LabeledSequence> encode_labeled(std::span<const Fragment> fragments, const Vocabulary& vocab);

struct TrainReport {
  std::vector<double> dev_scores;  // per epoch; finetune prepends the starting point
  std::size_t selected_epoch = 0;  // 1-based; 0 is the unmodified starting point
  double best_score = 0.0;
  ClassifierParams<double> params;
  std::vector<double> loss_curve;  // one entry per optimizer step
};

/// Optional instrumentation and the explicit example order used by the
/// equivalence checks.
struct TrainControl {
  std::function<void(std::size_t step, double loss, const ClassifierParams<double>&)> on_step;
  /// Supervised training only: replaces the per-epoch shuffle.
  std::vector<std::size_t> example_order;
};

/// Set choice (uniform over set indices) and k-subset draws for
/// stochastic batched XR. Subsets are drawn without replacement by a
/// partial Fisher-Yates over a persistent per-set permutation; sets
/// smaller than k are used whole.
class SubsetSampler {
 public:
  SubsetSampler(std::vector<std::size_t> set_sizes, std::uint64_t seed);

  struct Draw {
    std::size_t set;
    std::span<const std::size_t> members;
  };
  Draw next(std::size_t k);

 private:
  std::vector<std::vector<std::size_t>> perms_;
  Rng rng_;
};

/// Score of params on dev under the chosen metric.
double evaluate(const ClassifierParams<double>& params, const ClassifierConfig& config,
                std::span<const LabeledSequence> dev, SelectionMetric metric);

std::vector<LabelIndex> predict_all(const ClassifierParams<double>& params, const ClassifierConfig& config,
                                    std::span<const TokenSequence> inputs);

/// Stochastic batched XR: per step pick a set uniformly, draw a k-subset,
/// descend its XR loss with Adam; keep the best epoch on dev.
TrainReport train_xr(std::span<const EncodedSet> sets, const ClassifierConfig& config, const TrainConfig& tcfg,
                     std::span<const LabeledSequence> dev, const TrainControl& control = {});

/// Continues XR training from given params (fresh Adam state).
TrainReport train_xr_from(ClassifierParams<double> initial, std::span<const EncodedSet> sets,
                          const ClassifierConfig& config, const TrainConfig& tcfg,
                          std::span<const LabeledSequence> dev, const TrainControl& control = {});

/// Minibatch cross-entropy (mean over the batch) with epoch shuffling.
TrainReport train_supervised(std::span<const LabeledSequence> data, const ClassifierConfig& config,
                             const TrainConfig& tcfg, std::span<const LabeledSequence> dev,
                             const TrainControl& control = {});

/// Supervised training from existing params with a fresh Adam state. The
/// starting params compete in best-epoch selection as epoch 0.
TrainReport finetune(const ClassifierParams<double>& params, const ClassifierConfig& config,
                     std::span<const LabeledSequence> data, const TrainConfig& tcfg,
                     std::span<const LabeledSequence> dev, const TrainControl& control = {});

/// Index of the chosen candidate: best score among those whose neutral
/// recall reaches the threshold, else the highest neutral recall. Ties go
/// to the earlier candidate.
std::size_t choose_source(std::span<const double> neutral_recall, std::span<const double> scores, double threshold);

struct SourceSelection {
  std::size_t index = 0;
  std::vector<double> neutral_recall;
  std::vector<double> scores;
};

SourceSelection select_source_classifier(std::span<const TrainReport> candidates, const ClassifierConfig& config,
                                         std::span<const LabeledSequence> dev, LabelIndex neutral_label,
                                         double threshold = 0.20,
                                         SelectionMetric metric = SelectionMetric::Accuracy);

}  // namespace xrt
