#include <cmath>
#include <vector>

#include "doctest.h"
#include "xrt/harness.hpp"

using namespace xrt;

namespace {

SynthConfig small_synth() {
  auto c = SynthConfig::defaults();
  c.unlabeled_size = 40;
  c.source_train_size = 30;
  c.target_labeled_size = 20;
  c.test_size = 10;
  return c;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("generator honours requested sizes and label placement") {
    const auto c = small_synth();
    const auto corpus = gen_synthetic(c);
    CHECK(corpus.unlabeled.examples.size() == 40);
    CHECK(corpus.source_train.examples.size() == 30);
    CHECK(corpus.target_labeled.examples.size() == 20);
    CHECK(corpus.test.examples.size() == 10);
    CHECK(corpus.unlabeled_truth.size() == 40);
    CHECK(corpus.target_labeled_sources.size() == 20);
    for (const auto& e : corpus.unlabeled.examples) {
      CHECK_FALSE(e.source_label);
      CHECK(e.aspects.empty());
      REQUIRE(e.tree);
      CHECK(e.tree->tokens() == e.tokens);
    }
    for (const auto& e : corpus.source_train.examples) {
      CHECK(e.source_label);
      CHECK(e.aspects.empty());
    }
    for (const auto& e : corpus.test.examples) {
      CHECK_FALSE(e.source_label);
      CHECK(!e.aspects.empty());
      for (const auto& a : e.aspects) CHECK(a.label);
    }
  }

  TEST_CASE("generator is deterministic per seed") {
    auto c = small_synth();
    const auto a = gen_synthetic(c), b = gen_synthetic(c);
    for (std::size_t i = 0; i < a.unlabeled.examples.size(); ++i)
      CHECK(a.unlabeled.examples[i].tokens == b.unlabeled.examples[i].tokens);
    c.seed = 2;
    const auto other = gen_synthetic(c);
    bool differs = false;
    for (std::size_t i = 0; i < a.unlabeled.examples.size(); ++i)
      differs = differs || a.unlabeled.examples[i].tokens != other.unlabeled.examples[i].tokens;
    CHECK(differs);
  }

  TEST_CASE("identity table ties fragment labels to the sentence label") {
    auto c = small_synth();
    c.true_table = Eigen::MatrixXd::Identity(3, 3);
    const auto corpus = gen_synthetic(c);
    for (const auto& e : corpus.unlabeled_truth)
      for (const auto& a : e.aspects) CHECK(a.label == e.source_label);
  }

  TEST_CASE("empirical fragment proportions follow the true table") {
    auto c = SynthConfig::defaults();
    c.unlabeled_size = 10000;
    c.source_train_size = 0;
    c.target_labeled_size = 1;
    c.test_size = 1;
    const auto corpus = gen_synthetic(c);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& e : corpus.unlabeled_truth)
      for (const auto& a : e.aspects) counts(static_cast<Eigen::Index>(*e.source_label), static_cast<Eigen::Index>(*a.label)) += 1;
    for (Eigen::Index j = 0; j < 3; ++j) {
      const Eigen::RowVectorXd row = counts.row(j) / counts.row(j).sum();
      CHECK((row - c.true_table.row(j)).cwiseAbs().maxCoeff() < 0.03);
    }
  }

  TEST_CASE("emission table rows are distributions") {
    const auto e = emission_table(SynthConfig::defaults());
    for (Eigen::Index y = 0; y < e.rows(); ++y) CHECK(e.row(y).sum() == doctest::Approx(1.0));
  }

  TEST_CASE("synth config validation") {
    auto c = SynthConfig::defaults();
    c.true_table(0, 0) = 0.9;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SynthConfig::defaults();
    c.test_size = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SynthConfig::defaults();
    c.source_prior = {0.5, 0.5};
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("empty source training set gives a constant classifier") {
    auto cfg = PipelineConfig::defaults();
    cfg.synth = small_synth();
    cfg.synth.source_train_size = 0;
    const auto corpus = gen_synthetic(cfg.synth);
    const ModelSourceClassifier cs(train_source(corpus.source_train, cfg).classifier);
    for (const auto& e : corpus.unlabeled.examples) CHECK(cs.classify(e) == 0);
  }

  TEST_CASE("config overrides") {
    auto cfg = PipelineConfig::defaults();
    apply_config(cfg, {{"seed", "9"}, {"k", "25"}, {"xr_alpha", "0.5"}, {"encoder", "birecurrent"},
                       {"unlabeled_size", "123"}, {"source_epochs", "4"}});
    CHECK(cfg.synth.seed == 9);
    CHECK(cfg.xr.seed == 9);
    CHECK(cfg.xr.k == 25);
    CHECK(cfg.xr.adam.alpha == 0.5);
    CHECK(cfg.model.encoder == EncoderKind::BiRecurrent);
    CHECK(cfg.synth.unlabeled_size == 123);
    CHECK(cfg.source_train.epochs == 4);
    CHECK_THROWS_AS(apply_config(cfg, {{"colour", "blue"}}), Error);
    CHECK_THROWS_AS(apply_config(cfg, {{"k", "-3"}}), Error);
  }

  TEST_CASE("majority baseline") {
    std::vector<Fragment> train(3), test(4);
    train[0].gold_label = 1;
    train[1].gold_label = 1;
    train[2].gold_label = 0;
    for (std::size_t i = 0; i < 4; ++i) test[i].gold_label = i < 2 ? 1 : 2;
    const auto r = majority_baseline(train, test, 3);
    CHECK(r.accuracy == 0.5);
    CHECK(r.macro_f1 == doctest::Approx((2.0 * 0.5 * 1.0 / 1.5) / 3.0));
  }

  TEST_CASE("run_experiment with one seed and one value gives one row") {
    ExperimentSpec spec;
    spec.sweep = SweepParam::K;
    spec.values = {40};
    spec.seeds = {1};
    spec.base.synth = small_synth();
    spec.base.synth.unlabeled_size = 200;
    spec.base.synth.source_train_size = 100;
    spec.base.source_train.epochs = 2;
    spec.base.xr.epochs = 2;
    const auto r = run_experiment(spec);
    CHECK(r.rows.size() == 1);
    CHECK(r.aggregate.size() == 1);
    CHECK(r.aggregate[0].runs == 1);
    CHECK(r.aggregate[0].macro_f1.stdev == 0.0);
    const auto csv = results_csv(r);
    CHECK(csv.find("sweep_param,value,seed,accuracy,macro_f1\n") != std::string::npos);
    CHECK(csv.find("\nk,40,1,") != std::string::npos);
    CHECK(results_csv(run_experiment(spec)) == csv);

    spec.values.clear();
    CHECK_THROWS_AS(run_experiment(spec), Error);
  }

  TEST_CASE("sweep parameter names") {
    for (auto p : {SweepParam::K, SweepParam::UnlabeledSize, SweepParam::SourceTrainSize})
      CHECK(parse_sweep_param(to_string(p)) == p);
    CHECK_THROWS_AS(parse_sweep_param("epochs"), Error);
  }
}
