#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "xrt/train.hpp"

using namespace xrt;

namespace {

ClassifierConfig small_config(EncoderKind kind = EncoderKind::MeanPool) {
  ClassifierConfig c;
  c.vocab_size = 12;
  c.embed_dim = 4;
  c.hidden_dim = 3;
  c.encoder = kind;
  c.num_classes = 3;
  c.dropout_rate = 0.0;
  return c;
}

/// Tokens 1..4 mark class 0, 5..8 class 1, 9..11 class 2.
std::vector<LabeledSequence> separable(Rng& rng, std::size_t n) {
  std::vector<LabeledSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const LabelIndex y = i % 3;
    const std::size_t lo = 1 + 4 * y, width = y == 2 ? 3 : 4;
    TokenSequence seq(1 + rng.index(3));
    for (auto& t : seq) t = lo + rng.index(width);
    out.push_back({seq, y});
  }
  return out;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("adam with zero gradient leaves params unchanged") {
    const auto c = small_config();
    Rng rng(1);
    auto params = init_params(c, rng);
    const auto before = params;
    auto state = AdamState<double>::fresh(params);
    adam_update(params, GradientSet<double>::zeros(c), state, AdamHyper{});
    CHECK(params == before);
    CHECK(state.t == 1);
  }

  TEST_CASE("adam first step moves by alpha against the gradient sign") {
    ClassifierConfig c;
    c.vocab_size = 1;
    c.embed_dim = 1;
    c.num_classes = 2;
    auto params = ClassifierParams<double>::zeros(c);
    auto grads = GradientSet<double>::zeros(c);
    grads.bias << 1.0, -2.0;
    auto state = AdamState<double>::fresh(params);
    AdamHyper hyper;
    hyper.alpha = 0.1;
    adam_update(params, grads, state, hyper);
    // m_hat = g, v_hat = g^2, step = alpha * g / (|g| + eps)
    CHECK(params.bias[0] == doctest::Approx(-0.1 * 1.0 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(params.bias[1] == doctest::Approx(0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  }

  TEST_CASE("adam is deterministic and checks shapes") {
    const auto c = small_config();
    Rng rng(2);
    const auto start = testing::random_params(c, rng);
    const auto grads = testing::random_params(c, rng);
    auto a = start, b = start;
    auto sa = AdamState<double>::fresh(a), sb = AdamState<double>::fresh(b);
    for (int i = 0; i < 3; ++i) {
      adam_update(a, grads, sa, AdamHyper{});
      adam_update(b, grads, sb, AdamHyper{});
    }
    CHECK(a == b);
    auto other = ClassifierParams<double>::zeros(small_config(EncoderKind::BiRecurrent));
    CHECK_THROWS_AS(adam_update(other, grads, sa, AdamHyper{}), Error);
  }

  TEST_CASE("train config validation") {
    TrainConfig t;
    t.k = 0;
    CHECK_THROWS_AS(t.validate(), Error);
    t = {};
    t.adam.beta1 = 1.0;
    CHECK_THROWS_AS(t.validate(), Error);
  }

  TEST_CASE("subset sampler draws without replacement and uses small sets whole") {
    SubsetSampler sampler({3, 50}, 4);
    std::size_t small = 0, large = 0;
    for (int i = 0; i < 400; ++i) {
      const auto d = sampler.next(10);
      const std::set<std::size_t> distinct(d.members.begin(), d.members.end());
      CHECK(distinct.size() == d.members.size());
      if (d.set == 0) {
        ++small;
        CHECK(d.members.size() == 3);
      } else {
        ++large;
        CHECK(d.members.size() == 10);
        CHECK(*distinct.rbegin() < 50);
      }
    }
    // Set choice is uniform over sets, not proportional to size.
    CHECK(small > 150);
    CHECK(large > 150);
  }

  TEST_CASE("subset sampler covers every member uniformly") {
    SubsetSampler sampler({20}, 5);
    std::vector<int> hits(20, 0);
    for (int i = 0; i < 4000; ++i)
      for (auto m : sampler.next(5).members) ++hits[m];
    for (int h : hits) CHECK(std::abs(h - 1000) < 120);
  }

  TEST_CASE("supervised training separates a toy problem") {
    Rng rng(3);
    const auto data = separable(rng, 60);
    const auto c = small_config();
    TrainConfig t;
    t.epochs = 50;
    t.supervised_batch_size = 10;
    t.adam.alpha = 0.05;
    t.dropout_enabled = false;
    const auto report = train_supervised(data, c, t, data);
    CHECK(report.dev_scores.size() == 50);
    CHECK(report.best_score == 1.0);
    CHECK(evaluate(report.params, c, data, SelectionMetric::Accuracy) == 1.0);
  }

  TEST_CASE("supervised training is deterministic and needs a dev set") {
    Rng rng(4);
    const auto data = separable(rng, 30);
    const auto c = small_config(EncoderKind::BiRecurrent);
    TrainConfig t;
    t.epochs = 3;
    t.supervised_batch_size = 7;
    const auto a = train_supervised(data, c, t, data);
    const auto b = train_supervised(data, c, t, data);
    CHECK(a.params == b.params);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(a.dev_scores == b.dev_scores);
    CHECK_THROWS_AS(train_supervised(data, c, t, {}), Error);
  }

  TEST_CASE("finetune with zero epochs returns its input") {
    Rng rng(5);
    const auto data = separable(rng, 12);
    const auto c = small_config();
    const auto start = init_params(c, rng);
    TrainConfig t;
    t.epochs = 0;
    const auto report = finetune(start, c, data, t, data);
    CHECK(report.params == start);
    CHECK(report.selected_epoch == 0);
  }

  TEST_CASE("finetune keeps the starting point when training does not help") {
    Rng rng(6);
    const auto data = separable(rng, 30);
    const auto c = small_config();
    TrainConfig t;
    t.epochs = 40;
    t.adam.alpha = 0.05;
    t.dropout_enabled = false;
    const auto trained = train_supervised(data, c, t, data);
    TrainConfig ft = t;
    ft.epochs = 2;
    ft.adam.alpha = 1e-6;
    const auto report = finetune(trained.params, c, data, ft, data);
    CHECK(report.dev_scores.size() == 3);
    CHECK(report.best_score >= report.dev_scores[0]);
    const auto again = finetune(trained.params, c, data, ft, data);
    CHECK(again.params == report.params);
  }

  TEST_CASE("xr training is deterministic and learns from informative sets") {
    Rng rng(7);
    const auto data = separable(rng, 90);
    std::vector<EncodedSet> sets(3);
    // Each set is 80% one class and 10% of each other class.
    for (std::size_t j = 0; j < 3; ++j) {
      sets[j].source_label = j;
      sets[j].proportion = Eigen::VectorXd::Constant(3, 0.1);
      sets[j].proportion[static_cast<Eigen::Index>(j)] = 0.8;
    }
    std::vector<std::size_t> seen(3, 0);
    for (const auto& d : data) {
      const std::size_t i = seen[d.label]++ % 10;
      const std::size_t j = i < 8 ? d.label : (d.label + 1 + i % 2) % 3;
      sets[j].members.push_back(d.tokens);
    }
    const auto c = small_config();
    TrainConfig t;
    t.k = 20;
    t.epochs = 30;
    t.adam.alpha = 0.05;
    t.dropout_enabled = false;
    const auto a = train_xr(sets, c, t, data);
    const auto b = train_xr(sets, c, t, data);
    CHECK(a.params == b.params);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(a.best_score > 0.9);
  }

  TEST_CASE("xr training validates its inputs") {
    const auto c = small_config();
    std::vector<LabeledSequence> dev{{{1}, 0}};
    CHECK_THROWS_AS(train_xr({}, c, TrainConfig{}, dev), Error);
    std::vector<EncodedSet> empty_member{{0, {}, Eigen::VectorXd::Constant(3, 1.0 / 3.0)}};
    CHECK_THROWS_AS(train_xr(empty_member, c, TrainConfig{}, dev), Error);
    std::vector<EncodedSet> bad_prop{{0, {{1}}, Eigen::Vector3d(0.5, 0.6, 0.0)}};
    CHECK_THROWS_AS(train_xr(bad_prop, c, TrainConfig{}, dev), Error);
  }

  TEST_CASE("singleton one-hot xr tracks cross-entropy step for step") {
    Rng rng(8);
    const auto data = separable(rng, 15);
    const auto c = small_config(EncoderKind::BiRecurrent);
    std::vector<EncodedSet> sets;
    for (const auto& d : data) {
      Eigen::VectorXd onehot = Eigen::VectorXd::Zero(3);
      onehot[static_cast<Eigen::Index>(d.label)] = 1.0;
      sets.push_back({d.label, {d.tokens}, onehot});
    }
    TrainConfig t;
    t.k = 1;
    t.steps_per_epoch = 25;
    t.epochs = 1;
    t.supervised_batch_size = 1;
    t.dropout_enabled = false;

    SubsetSampler replay(std::vector<std::size_t>(sets.size(), 1), t.seed);
    TrainControl order;
    for (int i = 0; i < 25; ++i) order.example_order.push_back(replay.next(1).set);

    std::vector<ClassifierParams<double>> xr_path, ce_path;
    std::vector<double> xr_loss, ce_loss;
    TrainControl xr_ctl{[&](std::size_t, double l, const ClassifierParams<double>& p) {
      xr_path.push_back(p);
      xr_loss.push_back(l);
    }, {}};
    order.on_step = [&](std::size_t, double l, const ClassifierParams<double>& p) {
      ce_path.push_back(p);
      ce_loss.push_back(l);
    };
    train_xr(sets, c, t, data, xr_ctl);
    train_supervised(data, c, t, data, order);
    REQUIRE(xr_path.size() == 25);
    REQUIRE(ce_path.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(xr_path[i] == ce_path[i]);
      CHECK(std::abs(xr_loss[i] - ce_loss[i]) < 1e-9);
    }
  }

  TEST_CASE("source selection rule") {
    const std::vector<double> one_recall{0.3}, one_score{0.5};
    CHECK(choose_source(one_recall, one_score, 0.2) == 0);
    const std::vector<double> r1{0.0, 0.25}, s1{0.9, 0.8};
    CHECK(choose_source(r1, s1, 0.2) == 1);
    const std::vector<double> r2{0.05, 0.10}, s2{0.9, 0.8};
    CHECK(choose_source(r2, s2, 0.2) == 1);
    const std::vector<double> r3{0.5, 0.5, 0.5}, s3{0.7, 0.7, 0.6};
    CHECK(choose_source(r3, s3, 0.2) == 0);
    CHECK_THROWS_AS(choose_source(std::vector<double>{}, std::vector<double>{}, 0.2), Error);
  }

  TEST_CASE("select_source_classifier measures neutral recall on dev") {
    ClassifierConfig c;
    c.vocab_size = 3;
    c.embed_dim = 1;
    c.num_classes = 2;
    TrainReport always_neutral, never_neutral;
    always_neutral.params = ClassifierParams<double>::zeros(c);
    always_neutral.params.bias << 0.0, 1.0;
    never_neutral.params = ClassifierParams<double>::zeros(c);
    never_neutral.params.bias << 1.0, 0.0;
    const std::vector<LabeledSequence> dev{{{1}, 0}, {{1}, 0}, {{2}, 1}};
    const std::vector<TrainReport> candidates{never_neutral, always_neutral};
    const auto sel = select_source_classifier(candidates, c, dev, 1);
    CHECK(sel.neutral_recall == std::vector<double>{0.0, 1.0});
    CHECK(sel.scores[0] == doctest::Approx(2.0 / 3.0));
    CHECK(sel.index == 1);
    const std::vector<TrainReport> single{always_neutral};
    CHECK(select_source_classifier(single, c, dev, 1).index == 0);
  }
}
