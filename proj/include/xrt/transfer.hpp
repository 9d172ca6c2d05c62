#pragma once

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xrt/classifier.hpp"
#include "xrt/core.hpp"
#include "xrt/train.hpp"
#include "xrt/tree.hpp"

namespace xrt {

/// Any deterministic predictor from examples to source labels. It need not
/// be trainable: a model, a rule set, or a fixed answer all qualify.
class SourceClassifier {
 public:
  virtual ~SourceClassifier() = default;
  virtual LabelIndex classify(const Example& example) const = 0;
};

class ConstantSourceClassifier final : public SourceClassifier {
 public:
  explicit ConstantSourceClassifier(LabelIndex label) : label_(label) {}
  LabelIndex classify(const Example&) const override { return label_; }

 private:
  LabelIndex label_;
};

/// Rule-based stub: votes by lexicon hits, ties to the lowest label,
/// no hits to `fallback`.
class LexiconSourceClassifier final : public SourceClassifier {
 public:
  LexiconSourceClassifier(std::unordered_map<std::string, LabelIndex> lexicon, std::size_t num_labels,
                          LabelIndex fallback)
      : lexicon_(std::move(lexicon)), num_labels_(num_labels), fallback_(fallback) {}
  LabelIndex classify(const Example& example) const override;

 private:
  std::unordered_map<std::string, LabelIndex> lexicon_;
  std::size_t num_labels_;
  LabelIndex fallback_;
};

/// Argmax of a trained classifier over the full sentence.
class ModelSourceClassifier final : public SourceClassifier {
 public:
  explicit ModelSourceClassifier(Classifier model) : model_(std::move(model)) {}
  LabelIndex classify(const Example& example) const override { return model_.predict(example.tokens); }
  const Classifier& model() const noexcept { return model_; }

 private:
  Classifier model_;
};

struct NoisyLabeledExample {
  std::reference_wrapper<const Example> example;
  LabelIndex noisy_label;
};

/// One source label per example, in input order. Throws EmptyData.
std::vector<NoisyLabeledExample> label_with_source(const SourceClassifier& cs, std::span<const Example> examples);

/// (noisy source label, gold target label) pairs: one per labeled aspect,
/// or the example's target label when it has no aspects.
std::vector<std::pair<LabelIndex, LabelIndex>> table_pairs(std::span<const NoisyLabeledExample> labeled);

/// MLE of P(target | noisy source) with optional add-lambda smoothing.
/// Unobserved source labels get a uniform row and a fallback flag.
/// Throws EmptyPairs.
ProportionTable estimate_table(std::span<const std::pair<LabelIndex, LabelIndex>> pairs, const LabelSpace& source,
                               const LabelSpace& target, double smoothing = 0.0);

/// Buckets of example indices per predicted source label.
struct Partition {
  std::vector<std::vector<std::size_t>> buckets;
};

Partition partition_unlabeled(const SourceClassifier& cs, std::span<const Example> corpus, std::size_t num_source_labels);

struct FragmentSets {
  std::vector<ConstraintSet> sets;
  std::vector<LabelIndex> dropped;  // buckets whose examples yielded no fragments
};

/// One constraint set per non-empty bucket, members are the fragments of
/// the bucket's examples (gold labels stripped), proportion = table row.
/// `fragments[i]` belongs to `corpus[i]`. Throws MissingTableRow.
FragmentSets build_fragment_sets(const Partition& partition, std::span<const std::vector<Fragment>> fragments,
                                 const ProportionTable& table);

struct TransferConfig {
  LabelSpace source_labels;
  LabelSpace target_labels;
  ClassifierConfig model;  // vocab_size and num_classes are filled in
  TrainConfig train;
  FragmentStrategy strategy = FragmentStrategy::FilterThenHighest;
  double smoothing = 0.0;
};

struct TransferResult {
  TrainReport report;
  ProportionTable table;
  FragmentSets sets;
  Classifier classifier;  // the selected XR checkpoint
};

/// Fragments of every example (aspects as pivots when present, else nouns).
std::vector<std::vector<Fragment>> decompose_all(std::span<const Example> examples, FragmentStrategy strategy);

/// Labeled fragments of examples, flattened in order.
std::vector<Fragment> labeled_fragments(std::span<const Example> examples, FragmentStrategy strategy);

/// Full transfer: label D^t with C^s, estimate the table, partition D^u,
/// decompose into fragments, build sets, train with stochastic batched XR.
/// D^t gold labels reach only the table and the dev-set epoch selection.
TransferResult transfer_train(std::span<const Example> unlabeled, std::span<const Example> target_labeled,
                              const SourceClassifier& cs, const TransferConfig& config);

/// XR training over prepared sets with a vocabulary built from them.
/// The result's table is left empty.
TransferResult train_on_sets(FragmentSets sets, std::span<const Fragment> dev_fragments, const TransferConfig& config);

}  // namespace xrt
