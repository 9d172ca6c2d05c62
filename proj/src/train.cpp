#include "xrt/train.hpp"

#include <algorithm>
#include <numeric>

namespace xrt {

void AdamHyper::validate() const {
  if (!(alpha > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0))
    throw Error(ErrorCode::InvalidConfig, "Adam hyperparameters out of range");
}

void TrainConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (supervised_batch_size < 1) throw Error(ErrorCode::InvalidConfig, "supervised_batch_size must be >= 1");
  adam.validate();
}

std::vector<EncodedSet> encode_sets(std::span<const ConstraintSet> sets, const Vocabulary& vocab) {
  std::vector<EncodedSet> out;
  out.reserve(sets.size());
  for (const auto& s : sets) {
    EncodedSet e;
    e.source_label = s.source_label;
    e.proportion = s.proportion.mass();
    e.members.reserve(s.members.size());
    for (const auto& m : s.members) e.members.push_back(vocab.encode(m.tokens));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<LabeledSequence> encode_labeled(std::span<const Fragment> fragments, const Vocabulary& vocab) {
  std::vector<LabeledSequence> out;
  for (const auto& f : fragments)
    if (f.gold_label) out.push_back({vocab.encode(f.tokens), *f.gold_label});
  return out;
}

SubsetSampler::SubsetSampler(std::vector<std::size_t> set_sizes, std::uint64_t seed)
    : rng_(seed, stream::kSampling) {
  perms_.reserve(set_sizes.size());
  for (std::size_t n : set_sizes) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    perms_.push_back(std::move(p));
  }
}

SubsetSampler::Draw SubsetSampler::next(std::size_t k) {
  const std::size_t j = rng_.index(perms_.size());
  auto& p = perms_[j];
  if (p.size() <= k) return {j, std::span<const std::size_t>(p)};
  for (std::size_t i = 0; i < k; ++i) std::swap(p[i], p[i + rng_.index(p.size() - i)]);
  return {j, std::span<const std::size_t>(p.data(), k)};
}

std::vector<LabelIndex> predict_all(const ClassifierParams<double>& params, const ClassifierConfig& config,
                                    std::span<const TokenSequence> inputs) {
  std::vector<LabelIndex> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(predict(std::span<const TokenId>(x), params, config));
  return out;
}

double evaluate(const ClassifierParams<double>& params, const ClassifierConfig& config,
                std::span<const LabeledSequence> dev, SelectionMetric metric) {
  if (dev.empty()) throw Error(ErrorCode::EmptyData, "evaluation set is empty");
  std::vector<LabelIndex> preds, golds;
  preds.reserve(dev.size());
  golds.reserve(dev.size());
  for (const auto& d : dev) {
    preds.push_back(predict(std::span<const TokenId>(d.tokens), params, config));
    golds.push_back(d.label);
  }
  if (metric == SelectionMetric::Accuracy) return accuracy(preds, golds);
  return macro_f1(preds, golds, config.num_classes).macro_f1;
}

namespace {

/// Tracks the best epoch; strict improvement keeps the first maximum.
struct EpochSelector {
  TrainReport& report;
  bool has_best = false;

  void offer(std::size_t epoch, double score, const ClassifierParams<double>& params) {
    report.dev_scores.push_back(score);
    if (!has_best || score > report.best_score) {
      has_best = true;
      report.best_score = score;
      report.selected_epoch = epoch;
      report.params = params;
    }
  }
};

void check_dev(std::span<const LabeledSequence> dev, const ClassifierConfig& config) {
  if (dev.empty()) throw Error(ErrorCode::EmptyData, "dev set is empty");
  for (const auto& d : dev)
    if (d.label >= config.num_classes) throw Error(ErrorCode::DimensionMismatch, "dev label outside the label space");
}

TrainReport run_supervised(ClassifierParams<double> params, bool starting_point_competes,
                           const ClassifierConfig& config, std::span<const LabeledSequence> data,
                           const TrainConfig& tcfg, std::span<const LabeledSequence> dev,
                           const TrainControl& control) {
  config.validate();
  tcfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyData, "no labeled training data");
  check_dev(dev, config);
  check_shapes(params, config);
  for (const auto& d : data) {
    check_tokens(d.tokens, config.vocab_size);
    if (d.label >= config.num_classes) throw Error(ErrorCode::DimensionMismatch, "label outside the label space");
  }
  for (std::size_t i : control.example_order)
    if (i >= data.size()) throw Error(ErrorCode::InvalidArgument, "example order index out of range");

  TrainReport report;
  EpochSelector selector{report};
  if (starting_point_competes) selector.offer(0, evaluate(params, config, dev, tcfg.selection_metric), params);
  if (tcfg.epochs == 0) {
    if (!selector.has_best) report.params = params;
    return report;
  }

  Rng order_rng(tcfg.seed, stream::kSampling);
  Rng dropout_rng(tcfg.seed, stream::kDropout);
  auto state = AdamState<double>::fresh(params);
  std::vector<std::size_t> order(data.size());
  std::vector<TokenSequence> batch;
  std::vector<LabelIndex> gold;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    if (!control.example_order.empty()) {
      order = control.example_order;
    } else {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += tcfg.supervised_batch_size) {
      const std::size_t stop = std::min(order.size(), start + tcfg.supervised_batch_size);
      batch.clear();
      gold.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(data[order[i]].tokens);
        gold.push_back(data[order[i]].label);
      }
      auto result = cross_entropy_gradients<double>(batch, gold, params, config,
                                                    tcfg.dropout_enabled ? &dropout_rng : nullptr);
      const double scale = 1.0 / static_cast<double>(batch.size());
      zip_tensors([&](std::string_view, auto& g) { g *= scale; }, result.grads);
      adam_update(params, result.grads, state, tcfg.adam);
      report.loss_curve.push_back(result.loss * scale);
      ++step;
      if (control.on_step) control.on_step(step, report.loss_curve.back(), params);
    }
    selector.offer(epoch, evaluate(params, config, dev, tcfg.selection_metric), params);
  }
  return report;
}

}  // namespace

TrainReport train_xr_from(ClassifierParams<double> params, std::span<const EncodedSet> sets,
                          const ClassifierConfig& config, const TrainConfig& tcfg,
                          std::span<const LabeledSequence> dev, const TrainControl& control) {
  config.validate();
  tcfg.validate();
  if (sets.empty()) throw Error(ErrorCode::EmptySets, "no constraint sets");
  check_dev(dev, config);
  check_shapes(params, config);
  std::vector<std::size_t> sizes;
  std::size_t total = 0;
  for (const auto& s : sets) {
    if (s.members.empty()) throw Error(ErrorCode::EmptySetMember, "constraint set with no members");
    if (static_cast<std::size_t>(s.proportion.size()) != config.num_classes)
      throw Error(ErrorCode::DimensionMismatch, "set proportion does not match the number of classes");
    Distribution::from(s.proportion);
    for (const auto& m : s.members) check_tokens(m, config.vocab_size);
    sizes.push_back(s.members.size());
    total += s.members.size();
  }
  const std::size_t steps_per_epoch =
      tcfg.steps_per_epoch > 0 ? tcfg.steps_per_epoch : (total + tcfg.k - 1) / tcfg.k;

  TrainReport report;
  EpochSelector selector{report};
  SubsetSampler sampler(std::move(sizes), tcfg.seed);
  Rng dropout_rng(tcfg.seed, stream::kDropout);
  auto state = AdamState<double>::fresh(params);
  std::vector<TokenSequence> batch;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const auto draw = sampler.next(tcfg.k);
      const auto& set = sets[draw.set];
      batch.clear();
      for (std::size_t i : draw.members) batch.push_back(set.members[i]);
      auto result = xr_gradients<double>(batch, set.proportion, params, config,
                                         tcfg.dropout_enabled ? &dropout_rng : nullptr);
      adam_update(params, result.grads, state, tcfg.adam);
      report.loss_curve.push_back(result.loss);
      ++step;
      if (control.on_step) control.on_step(step, result.loss, params);
    }
    selector.offer(epoch, evaluate(params, config, dev, tcfg.selection_metric), params);
  }
  if (!selector.has_best) report.params = params;
  return report;
}

TrainReport train_xr(std::span<const EncodedSet> sets, const ClassifierConfig& config, const TrainConfig& tcfg,
                     std::span<const LabeledSequence> dev, const TrainControl& control) {
  config.validate();
  Rng init_rng(tcfg.seed, stream::kInit);
  return train_xr_from(init_params<double>(config, init_rng), sets, config, tcfg, dev, control);
}

TrainReport train_supervised(std::span<const LabeledSequence> data, const ClassifierConfig& config,
                             const TrainConfig& tcfg, std::span<const LabeledSequence> dev,
                             const TrainControl& control) {
  config.validate();
  Rng init_rng(tcfg.seed, stream::kInit);
  return run_supervised(init_params<double>(config, init_rng), false, config, data, tcfg, dev, control);
}

TrainReport finetune(const ClassifierParams<double>& params, const ClassifierConfig& config,
                     std::span<const LabeledSequence> data, const TrainConfig& tcfg,
                     std::span<const LabeledSequence> dev, const TrainControl& control) {
  return run_supervised(params, true, config, data, tcfg, dev, control);
}

std::size_t choose_source(std::span<const double> neutral_recall, std::span<const double> scores, double threshold) {
  if (neutral_recall.empty()) throw Error(ErrorCode::EmptyCandidates, "no source candidates");
  if (neutral_recall.size() != scores.size())
    throw Error(ErrorCode::LengthMismatch, "recalls and scores differ in length");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (neutral_recall[i] >= threshold && (!best || scores[i] > scores[*best])) best = i;
  if (best) return *best;
  std::size_t fallback = 0;
  for (std::size_t i = 1; i < neutral_recall.size(); ++i)
    if (neutral_recall[i] > neutral_recall[fallback]) fallback = i;
  return fallback;
}

SourceSelection select_source_classifier(std::span<const TrainReport> candidates, const ClassifierConfig& config,
                                         std::span<const LabeledSequence> dev, LabelIndex neutral_label,
                                         double threshold, SelectionMetric metric) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "no source candidates");
  check_dev(dev, config);
  SourceSelection sel;
  for (const auto& c : candidates) {
    std::size_t neutral = 0, neutral_hit = 0;
    for (const auto& d : dev) {
      if (d.label != neutral_label) continue;
      ++neutral;
      neutral_hit += predict(std::span<const TokenId>(d.tokens), c.params, config) == neutral_label;
    }
    sel.neutral_recall.push_back(neutral == 0 ? 0.0 : static_cast<double>(neutral_hit) / static_cast<double>(neutral));
    sel.scores.push_back(evaluate(c.params, config, dev, metric));
  }
  sel.index = choose_source(sel.neutral_recall, sel.scores, threshold);
  return sel;
}

}  // namespace xrt
