#include <algorithm>
#include <charconv>

#include "xrt/harness.hpp"

namespace xrt {

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  c.model.embed_dim = 16;
  c.model.hidden_dim = 16;
  c.model.encoder = EncoderKind::MeanPool;
  c.model.dropout_rate = 0.5;

  c.source_train.epochs = 10;
  c.source_train.supervised_batch_size = 30;
  c.source_train.adam.alpha = 0.01;

  c.xr.k = 450;
  c.xr.epochs = 10;
  c.xr.adam.alpha = 0.01;

  c.supervised = c.source_train;
  return c;
}

void PipelineConfig::set_seed(std::uint64_t seed) {
  synth.seed = seed;
  source_train.seed = seed;
  xr.seed = seed;
  supervised.seed = seed;
}

namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw Error(ErrorCode::InvalidArgument, key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::InvalidArgument, key + ": expected true or false, got '" + v + "'");
}

FragmentStrategy parse_strategy(const std::string& v) {
  if (v == "filter-then-highest") return FragmentStrategy::FilterThenHighest;
  if (v == "highest-then-filter") return FragmentStrategy::HighestThenFilter;
  throw Error(ErrorCode::InvalidArgument, "strategy: unknown value '" + v + "'");
}

SelectionMetric parse_metric(const std::string& v) {
  if (v == "accuracy") return SelectionMetric::Accuracy;
  if (v == "macro-f1") return SelectionMetric::MacroF1;
  throw Error(ErrorCode::InvalidArgument, "selection metric: unknown value '" + v + "'");
}

void apply_train(TrainConfig& t, const std::string& field, const std::string& key, const std::string& v) {
  if (field == "epochs") t.epochs = to_size(key, v);
  else if (field == "batch_size") t.supervised_batch_size = to_size(key, v);
  else if (field == "alpha") t.adam.alpha = to_double(key, v);
  else if (field == "k") t.k = to_size(key, v);
  else if (field == "steps_per_epoch") t.steps_per_epoch = to_size(key, v);
  else if (field == "dropout") t.dropout_enabled = to_bool(key, v);
  else if (field == "selection_metric") t.selection_metric = parse_metric(v);
  else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

}  // namespace

void apply_config(PipelineConfig& c, const std::map<std::string, std::string>& values) {
  for (const auto& [key, v] : values) {
    auto& s = c.synth;
    if (key == "seed") c.set_seed(to_size(key, v));
    else if (key == "vocab_size") s.vocab_size = to_size(key, v);
    else if (key == "signal") s.signal = to_double(key, v);
    else if (key == "min_fragments") s.min_fragments = to_size(key, v);
    else if (key == "max_fragments") s.max_fragments = to_size(key, v);
    else if (key == "min_descriptors") s.min_descriptors = to_size(key, v);
    else if (key == "max_descriptors") s.max_descriptors = to_size(key, v);
    else if (key == "unlabeled_size") s.unlabeled_size = to_size(key, v);
    else if (key == "source_train_size") s.source_train_size = to_size(key, v);
    else if (key == "target_labeled_size") s.target_labeled_size = to_size(key, v);
    else if (key == "test_size") s.test_size = to_size(key, v);
    else if (key == "embed_dim") c.model.embed_dim = to_size(key, v);
    else if (key == "hidden_dim") c.model.hidden_dim = to_size(key, v);
    else if (key == "encoder") c.model.encoder = parse_encoder_kind(v);
    else if (key == "temperature") c.model.temperature = to_double(key, v);
    else if (key == "dropout_rate") c.model.dropout_rate = to_double(key, v);
    else if (key == "source_candidates") c.source_candidates = to_size(key, v);
    else if (key == "neutral_label") c.neutral_label = v;
    else if (key == "strategy") c.strategy = parse_strategy(v);
    else if (key == "smoothing") c.smoothing = to_double(key, v);
    else if (key == "skyline") c.run_skyline = to_bool(key, v);
    else if (key == "finetune") c.run_finetune = to_bool(key, v);
    else if (key == "k") c.xr.k = to_size(key, v);
    else if (key.starts_with("xr_")) apply_train(c.xr, key.substr(3), key, v);
    else if (key.starts_with("source_")) apply_train(c.source_train, key.substr(7), key, v);
    else if (key.starts_with("supervised_")) apply_train(c.supervised, key.substr(11), key, v);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
}

std::pair<std::span<const Example>, std::span<const Example>> split_dev(std::span<const Example> examples) {
  const std::size_t cut = examples.size() * 4 / 5;
  if (cut == 0 || cut == examples.size()) return {examples, examples};
  return {examples.first(cut), examples.subspan(cut)};
}

std::vector<LabeledSequence> encode_sentences(std::span<const Example> examples, const Vocabulary& vocab) {
  std::vector<LabeledSequence> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    if (!e.source_label) throw Error(ErrorCode::InvalidExample, "example '" + e.id + "' has no source label");
    out.push_back({vocab.encode(e.tokens), *e.source_label});
  }
  return out;
}

SourceTraining train_source(const Dataset& source_train, const PipelineConfig& config) {
  SourceTraining out;
  auto& cls = out.classifier;
  cls.labels = source_train.source_labels;
  cls.config = config.model;
  cls.config.num_classes = cls.labels.size();
  if (source_train.examples.empty()) {
    cls.config.vocab_size = cls.vocab.size();
    cls.params = ClassifierParams<double>::zeros(cls.config);
    return out;
  }

  const auto [train, dev] = split_dev(source_train.examples);
  cls.vocab = build_vocabulary(train);
  cls.config.vocab_size = cls.vocab.size();
  const auto train_seq = encode_sentences(train, cls.vocab);
  const auto dev_seq = encode_sentences(dev, cls.vocab);

  const std::size_t n = std::max<std::size_t>(1, config.source_candidates);
  std::vector<TrainReport> reports;
  for (std::size_t c = 0; c < n; ++c) {
    TrainConfig t = config.source_train;
    t.seed += c;
    reports.push_back(train_supervised(train_seq, cls.config, t, dev_seq));
  }
  std::size_t chosen = 0;
  if (n > 1) {
    const auto neutral = cls.labels.find(config.neutral_label);
    if (!neutral)
      throw Error(ErrorCode::InvalidConfig, "neutral label '" + config.neutral_label + "' is not a source label");
    out.selection = select_source_classifier(reports, cls.config, dev_seq, *neutral);
    chosen = out.selection->index;
  }
  cls.params = std::move(reports[chosen].params);
  return out;
}

MetricsReport evaluate_fragments(const Classifier& classifier, std::span<const Fragment> fragments) {
  std::vector<LabelIndex> preds, golds;
  preds.reserve(fragments.size());
  golds.reserve(fragments.size());
  for (const auto& f : fragments) {
    if (!f.gold_label) throw Error(ErrorCode::InvalidExample, "fragment of '" + f.parent_id + "' has no label");
    preds.push_back(classifier.predict(f.tokens));
    golds.push_back(*f.gold_label);
  }
  return macro_f1(preds, golds, classifier.labels);
}

MetricsReport majority_baseline(std::span<const Fragment> train, std::span<const Fragment> test,
                                std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& f : train)
    if (f.gold_label) ++counts.at(*f.gold_label);
  const auto majority = static_cast<LabelIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::vector<LabelIndex> preds(test.size(), majority), golds;
  for (const auto& f : test) golds.push_back(f.gold_label.value());
  return macro_f1(preds, golds, num_classes);
}

namespace {

Vocabulary fragment_vocabulary(std::span<const Fragment> fragments) {
  Vocabulary v;
  for (const auto& f : fragments)
    for (const auto& t : f.tokens) v.add(t);
  return v;
}

}  // namespace

Classifier train_skyline(std::span<const Fragment> gold, std::span<const Fragment> dev, const PipelineConfig& config) {
  Classifier cls;
  cls.labels = config.synth.target_labels;
  cls.vocab = fragment_vocabulary(gold);
  cls.config = config.model;
  cls.config.vocab_size = cls.vocab.size();
  cls.config.num_classes = cls.labels.size();
  const auto train_seq = encode_labeled(gold, cls.vocab);
  const auto dev_seq = encode_labeled(dev, cls.vocab);
  cls.params = train_supervised(train_seq, cls.config, config.supervised, dev_seq).params;
  return cls;
}

Classifier finetune_classifier(const Classifier& start, std::span<const Fragment> labeled,
                               const PipelineConfig& config) {
  std::size_t cut = labeled.size() * 4 / 5;
  auto train = labeled.first(cut), dev = labeled.subspan(cut);
  if (cut == 0 || cut == labeled.size()) train = dev = labeled;
  Classifier out = start;
  const auto train_seq = encode_labeled(train, start.vocab);
  const auto dev_seq = encode_labeled(dev, start.vocab);
  out.params = finetune(start.params, start.config, train_seq, config.supervised, dev_seq).params;
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  const SynthCorpus corpus = gen_synthetic(config.synth);
  const auto& target_labels = config.synth.target_labels;

  const ModelSourceClassifier cs(train_source(corpus.source_train, config).classifier);

  TransferConfig tc;
  tc.source_labels = config.synth.source_labels;
  tc.target_labels = target_labels;
  tc.model = config.model;
  tc.train = config.xr;
  tc.strategy = config.strategy;
  tc.smoothing = config.smoothing;

  PipelineResult r;
  r.transfer = transfer_train(corpus.unlabeled.examples, corpus.target_labeled.examples, cs, tc);

  const auto test = labeled_fragments(corpus.test.examples, config.strategy);
  const auto dt = labeled_fragments(corpus.target_labeled.examples, config.strategy);
  r.xr = evaluate_fragments(r.transfer.classifier, test);
  r.majority = majority_baseline(dt, test, target_labels.size());

  std::vector<LabelIndex> noisy;
  for (const auto& e : corpus.target_labeled.examples) noisy.push_back(cs.classify(e));
  r.source_accuracy = accuracy(noisy, corpus.target_labeled_sources);

  if (config.run_skyline) {
    const auto gold = labeled_fragments(corpus.unlabeled_truth, config.strategy);
    r.skyline = evaluate_fragments(train_skyline(gold, dt, config), test);
  }
  if (config.run_finetune) r.finetuned = evaluate_fragments(finetune_classifier(r.transfer.classifier, dt, config), test);
  return r;
}

}  // namespace xrt
