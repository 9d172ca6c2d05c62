#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xrt/classifier.hpp"
#include "xrt/io.hpp"
#include "xrt/metrics.hpp"
#include "xrt/train.hpp"
#include "xrt/transfer.hpp"

namespace xrt {

/// Correlated-task generator. Each sentence draws a source label from
/// the prior; each of its fragments draws a target label from the table
/// row of that source label and emits "noun verb descriptor+" tokens. A
/// descriptor comes from the target label's own block with probability
/// `signal`, otherwise from a pool shared by all labels.
struct SynthConfig {
  std::size_t vocab_size = 200;
  double noun_share = 0.15;
  double verb_share = 0.05;
  double signal = 0.6;
  std::size_t min_fragments = 1;
  std::size_t max_fragments = 3;
  std::size_t min_descriptors = 1;
  std::size_t max_descriptors = 3;
  LabelSpace source_labels{{"POS", "NEG", "NEU"}};
  LabelSpace target_labels{{"POS", "NEG", "NEU"}};
  Eigen::MatrixXd true_table;        // |Y^s| x |Y^t|
  std::vector<double> source_prior;  // |Y^s|
  std::size_t unlabeled_size = 5000;
  std::size_t source_train_size = 1000;
  std::size_t target_labeled_size = 300;
  std::size_t test_size = 1000;
  std::uint64_t seed = 1;

  static SynthConfig defaults();
  void validate() const;
};

struct SynthCorpus {
  Dataset unlabeled;       // no labels
  Dataset source_train;    // gold sentence source labels
  Dataset target_labeled;  // gold fragment target labels on the aspects
  Dataset test;
  /// Hidden truth: D^u with source labels and labeled aspects, and the
  /// source labels of D^t sentences.
  std::vector<Example> unlabeled_truth;
  std::vector<LabelIndex> target_labeled_sources;
};

SynthCorpus gen_synthetic(const SynthConfig& config);

/// Per-label descriptor token emission distributions, |Y^t| x vocab.
Eigen::MatrixXd emission_table(const SynthConfig& config);

struct PipelineConfig {
  SynthConfig synth = SynthConfig::defaults();
  ClassifierConfig model;        // vocab_size / num_classes filled per use
  TrainConfig source_train;      // sentence-level source classifier
  TrainConfig xr;
  TrainConfig supervised;        // skyline and fine-tuning
  std::size_t source_candidates = 1;
  std::string neutral_label = "NEU";
  FragmentStrategy strategy = FragmentStrategy::FilterThenHighest;
  double smoothing = 0.0;
  bool run_skyline = true;
  bool run_finetune = true;

  static PipelineConfig defaults();
  /// Every TrainConfig seed and the generator seed.
  void set_seed(std::uint64_t seed);
};

/// Overrides fields from key=value pairs; unknown keys throw
/// InvalidArgument.
void apply_config(PipelineConfig& config, const std::map<std::string, std::string>& values);

/// Sentence-level classifier for the source task. Candidate c trains with
/// seed + c; with more than one candidate the neutral-recall rule picks
/// one. An empty training set yields the all-zero model, which assigns
/// label 0 to every input.
struct SourceTraining {
  Classifier classifier;
  std::optional<SourceSelection> selection;
};
SourceTraining train_source(const Dataset& source_train, const PipelineConfig& config);

/// Splits examples into the first 80% and the rest (the rest is the
/// whole input when it would be empty).
std::pair<std::span<const Example>, std::span<const Example>> split_dev(std::span<const Example> examples);

/// Sentence-level (tokens, source label) sequences.
std::vector<LabeledSequence> encode_sentences(std::span<const Example> examples, const Vocabulary& vocab);

MetricsReport evaluate_fragments(const Classifier& classifier, std::span<const Fragment> fragments);

/// Most frequent gold label of `train` (lowest index on ties) predicted
/// for every fragment of `test`.
MetricsReport majority_baseline(std::span<const Fragment> train, std::span<const Fragment> test,
                                std::size_t num_classes);

Classifier train_skyline(std::span<const Fragment> gold, std::span<const Fragment> dev, const PipelineConfig& config);

/// Fine-tunes on the first 80% of the labeled fragments, selecting on the
/// rest with the starting point as a candidate.
Classifier finetune_classifier(const Classifier& start, std::span<const Fragment> labeled,
                               const PipelineConfig& config);

struct PipelineResult {
  MetricsReport xr;
  MetricsReport majority;
  std::optional<MetricsReport> skyline;
  std::optional<MetricsReport> finetuned;
  double source_accuracy = 0.0;  // C^s on D^t sentences
  TransferResult transfer;
};

PipelineResult run_pipeline(const PipelineConfig& config);

enum class SweepParam { K, UnlabeledSize, SourceTrainSize };
std::string_view to_string(SweepParam param);
SweepParam parse_sweep_param(std::string_view name);

struct ExperimentSpec {
  SweepParam sweep = SweepParam::K;
  std::vector<std::size_t> values;
  std::vector<std::uint64_t> seeds;
  PipelineConfig base = PipelineConfig::defaults();
};

struct ExperimentRow {
  std::size_t value = 0;
  std::uint64_t seed = 0;
  MetricsReport report;
};

struct AggregateRow {
  std::size_t value = 0;
  std::size_t runs = 0;
  Summary accuracy;
  Summary macro_f1;
};

struct ExperimentResult {
  SweepParam sweep = SweepParam::K;
  std::vector<ExperimentRow> rows;         // sorted by value then seed
  std::vector<AggregateRow> aggregate;     // one per value, sorted
};

/// Runs the XR pipeline (no skyline, no fine-tuning) for every value x
/// seed. Throws InvalidArgument on empty values or seeds.
ExperimentResult run_experiment(const ExperimentSpec& spec);

std::string results_csv(const ExperimentResult& result);
std::string aggregate_csv(const ExperimentResult& result);

}  // namespace xrt
