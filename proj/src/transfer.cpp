#include "xrt/transfer.hpp"

namespace xrt {

LabelIndex LexiconSourceClassifier::classify(const Example& example) const {
  std::vector<std::size_t> votes(num_labels_, 0);
  bool any = false;
  for (const auto& t : example.tokens) {
    auto it = lexicon_.find(t);
    if (it == lexicon_.end() || it->second >= num_labels_) continue;
    ++votes[it->second];
    any = true;
  }
  if (!any) return fallback_;
  LabelIndex best = 0;
  for (LabelIndex l = 1; l < num_labels_; ++l)
    if (votes[l] > votes[best]) best = l;
  return best;
}

std::vector<NoisyLabeledExample> label_with_source(const SourceClassifier& cs, std::span<const Example> examples) {
  if (examples.empty()) throw Error(ErrorCode::EmptyData, "label_with_source: no examples");
  std::vector<NoisyLabeledExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({std::cref(e), cs.classify(e)});
  return out;
}

std::vector<std::pair<LabelIndex, LabelIndex>> table_pairs(std::span<const NoisyLabeledExample> labeled) {
  std::vector<std::pair<LabelIndex, LabelIndex>> pairs;
  for (const auto& l : labeled) {
    const Example& e = l.example.get();
    if (e.aspects.empty()) {
      if (e.target_label) pairs.emplace_back(l.noisy_label, *e.target_label);
      continue;
    }
    for (const auto& a : e.aspects)
      if (a.label) pairs.emplace_back(l.noisy_label, *a.label);
  }
  return pairs;
}

ProportionTable estimate_table(std::span<const std::pair<LabelIndex, LabelIndex>> pairs, const LabelSpace& source,
                               const LabelSpace& target, double smoothing) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "estimate_table: no (source, target) pairs");
  if (!(smoothing >= 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothing must be non-negative");
  const auto ns = static_cast<Eigen::Index>(source.size());
  const auto nt = static_cast<Eigen::Index>(target.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(ns, nt);
  for (const auto& [s, t] : pairs) {
    if (s >= source.size() || t >= target.size())
      throw Error(ErrorCode::LabelSpaceMismatch, "pair label outside the declared label spaces");
    counts(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) += 1.0;
  }

  ProportionTable table;
  table.source_labels = source;
  table.target_labels = target;
  table.rows.resize(ns, nt);
  table.uniform_fallback.assign(source.size(), false);
  for (Eigen::Index j = 0; j < ns; ++j) {
    const double observed = counts.row(j).sum();
    if (observed == 0.0) {
      table.rows.row(j).setConstant(1.0 / static_cast<double>(nt));
      table.uniform_fallback[static_cast<std::size_t>(j)] = true;
      continue;
    }
    const Eigen::RowVectorXd smoothed = counts.row(j).array() + smoothing;
    table.rows.row(j) = smoothed / smoothed.sum();
  }
  table.counts = std::move(counts);
  return table;
}

Partition partition_unlabeled(const SourceClassifier& cs, std::span<const Example> corpus,
                              std::size_t num_source_labels) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyData, "partition_unlabeled: empty corpus");
  Partition p;
  p.buckets.resize(num_source_labels);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const LabelIndex j = cs.classify(corpus[i]);
    if (j >= num_source_labels) throw Error(ErrorCode::LabelSpaceMismatch, "source classifier label out of range");
    p.buckets[j].push_back(i);
  }
  return p;
}

FragmentSets build_fragment_sets(const Partition& partition, std::span<const std::vector<Fragment>> fragments,
                                 const ProportionTable& table) {
  FragmentSets out;
  for (std::size_t j = 0; j < partition.buckets.size(); ++j) {
    if (partition.buckets[j].empty()) continue;
    if (j >= static_cast<std::size_t>(table.rows.rows()))
      throw Error(ErrorCode::MissingTableRow, "no proportion row for source label " + std::to_string(j));
    ConstraintSet set;
    set.source_label = j;
    set.proportion = table.row(j);
    for (std::size_t i : partition.buckets[j]) {
      if (i >= fragments.size()) throw Error(ErrorCode::LengthMismatch, "partition refers to an unknown example");
      for (const auto& f : fragments[i]) {
        set.members.push_back(f);
        set.members.back().gold_label.reset();
      }
    }
    if (set.members.empty()) {
      out.dropped.push_back(j);
      continue;
    }
    out.sets.push_back(std::move(set));
  }
  return out;
}

std::vector<std::vector<Fragment>> decompose_all(std::span<const Example> examples, FragmentStrategy strategy) {
  std::vector<std::vector<Fragment>> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(decompose(e, strategy));
  return out;
}

std::vector<Fragment> labeled_fragments(std::span<const Example> examples, FragmentStrategy strategy) {
  std::vector<Fragment> out;
  for (const auto& e : examples)
    for (auto& f : decompose(e, strategy))
      if (f.gold_label) out.push_back(std::move(f));
  return out;
}

TransferResult train_on_sets(FragmentSets sets, std::span<const Fragment> dev_fragments, const TransferConfig& config) {
  if (sets.sets.empty()) throw Error(ErrorCode::EmptySets, "no non-empty constraint sets to train on");
  for (const auto& s : sets.sets) s.validate(config.target_labels.size());

  TransferResult result;
  result.classifier.vocab = build_vocabulary(sets.sets);
  result.classifier.labels = config.target_labels;
  result.classifier.config = config.model;
  result.classifier.config.vocab_size = result.classifier.vocab.size();
  result.classifier.config.num_classes = config.target_labels.size();

  const auto encoded = encode_sets(sets.sets, result.classifier.vocab);
  const auto dev = encode_labeled(dev_fragments, result.classifier.vocab);
  result.report = train_xr(encoded, result.classifier.config, config.train, dev);
  result.classifier.params = result.report.params;
  result.sets = std::move(sets);
  return result;
}

TransferResult transfer_train(std::span<const Example> unlabeled, std::span<const Example> target_labeled,
                              const SourceClassifier& cs, const TransferConfig& config) {
  if (unlabeled.empty() || target_labeled.empty()) throw Error(ErrorCode::EmptyData, "transfer_train: empty input");
  const auto noisy = label_with_source(cs, target_labeled);
  const auto pairs = table_pairs(noisy);
  auto table = estimate_table(pairs, config.source_labels, config.target_labels, config.smoothing);

  const auto partition = partition_unlabeled(cs, unlabeled, config.source_labels.size());
  const auto fragments = decompose_all(unlabeled, config.strategy);
  auto sets = build_fragment_sets(partition, fragments, table);

  const auto dev = labeled_fragments(target_labeled, config.strategy);
  auto result = train_on_sets(std::move(sets), dev, config);
  result.table = std::move(table);
  return result;
}

}  // namespace xrt
