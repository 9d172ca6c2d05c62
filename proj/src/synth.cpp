#include <cmath>
#include <string>

#include "xrt/harness.hpp"
#include "xrt/rng.hpp"
#include "xrt/tree.hpp"

namespace xrt {

SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  c.true_table.resize(3, 3);
  c.true_table << 0.80, 0.05, 0.15,  //
      0.05, 0.80, 0.15,              //
      0.15, 0.15, 0.70;
  c.source_prior = {0.45, 0.35, 0.20};
  return c;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "synth: " + m); };
  if (source_labels.size() < 2 || target_labels.size() < 2) fail("label spaces need at least two labels");
  if (true_table.rows() != static_cast<Eigen::Index>(source_labels.size()) ||
      true_table.cols() != static_cast<Eigen::Index>(target_labels.size()))
    fail("true_table must be |source| x |target|");
  for (Eigen::Index j = 0; j < true_table.rows(); ++j) {
    const Eigen::VectorXd row = true_table.row(j).transpose();
    validate_distribution(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  if (source_prior.size() != source_labels.size()) fail("source_prior must have one entry per source label");
  validate_distribution(source_prior);
  if (min_fragments < 1 || min_fragments > max_fragments) fail("bad fragment range");
  if (min_descriptors < 1 || min_descriptors > max_descriptors) fail("bad descriptor range");
  if (!(signal >= 0.0 && signal <= 1.0)) fail("signal must lie in [0, 1]");
  if (!(noun_share > 0.0 && verb_share > 0.0 && noun_share + verb_share < 1.0)) fail("bad token shares");
  const auto nouns = static_cast<std::size_t>(std::floor(noun_share * static_cast<double>(vocab_size)));
  const auto verbs = static_cast<std::size_t>(std::floor(verb_share * static_cast<double>(vocab_size)));
  if (nouns < 1 || verbs < 1 || vocab_size < nouns + verbs + target_labels.size() + 1)
    fail("vocab_size too small for the label count");
  if (unlabeled_size < 1 || target_labeled_size < 1 || test_size < 1)
    fail("D^u, D^t and test sizes must be at least 1");
}

namespace {

struct Lexicon {
  std::vector<std::string> nouns, verbs, descriptors;
  std::size_t block = 0;  // descriptors per label; the shared pool follows the blocks
  std::size_t shared_start = 0;
};

Lexicon make_lexicon(const SynthConfig& c) {
  Lexicon lx;
  const auto nouns = static_cast<std::size_t>(std::floor(c.noun_share * static_cast<double>(c.vocab_size)));
  const auto verbs = static_cast<std::size_t>(std::floor(c.verb_share * static_cast<double>(c.vocab_size)));
  const std::size_t descriptors = c.vocab_size - nouns - verbs;
  for (std::size_t i = 0; i < nouns; ++i) lx.nouns.push_back("n" + std::to_string(i));
  for (std::size_t i = 0; i < verbs; ++i) lx.verbs.push_back("v" + std::to_string(i));
  for (std::size_t i = 0; i < descriptors; ++i) lx.descriptors.push_back("w" + std::to_string(i));
  lx.block = descriptors / (c.target_labels.size() + 1);
  lx.shared_start = lx.block * c.target_labels.size();
  return lx;
}

std::size_t draw_descriptor(const Lexicon& lx, LabelIndex label, double signal, Rng& rng) {
  if (rng.bernoulli(signal)) return label * lx.block + rng.index(lx.block);
  return lx.shared_start + rng.index(lx.descriptors.size() - lx.shared_start);
}

struct Sentence {
  Example example;
  LabelIndex source = 0;
  std::vector<LabelIndex> fragment_labels;
};

Sentence draw_sentence(const SynthConfig& c, const Lexicon& lx, Rng& rng, const std::string& id) {
  Sentence s;
  s.example.id = id;
  s.source = rng.categorical(c.source_prior);
  const Eigen::VectorXd row = c.true_table.row(static_cast<Eigen::Index>(s.source)).transpose();
  const std::span<const double> weights(row.data(), static_cast<std::size_t>(row.size()));

  const std::size_t n_frag = c.min_fragments + rng.index(c.max_fragments - c.min_fragments + 1);
  std::vector<std::string> clauses;
  for (std::size_t f = 0; f < n_frag; ++f) {
    const LabelIndex y = rng.categorical(weights);
    s.fragment_labels.push_back(y);
    const std::size_t noun_pos = s.example.tokens.size();
    const auto& noun = lx.nouns[rng.index(lx.nouns.size())];
    const auto& verb = lx.verbs[rng.index(lx.verbs.size())];
    s.example.tokens.push_back(noun);
    s.example.tokens.push_back(verb);
    std::string adjp = "(ADJP";
    const std::size_t n_desc = c.min_descriptors + rng.index(c.max_descriptors - c.min_descriptors + 1);
    for (std::size_t d = 0; d < n_desc; ++d) {
      const auto& w = lx.descriptors[draw_descriptor(lx, y, c.signal, rng)];
      s.example.tokens.push_back(w);
      adjp += " (JJ " + w + ")";
    }
    adjp += ")";
    clauses.push_back("(S (NP (NN " + noun + ")) (VP (VBZ " + verb + ") " + adjp + "))");
    s.example.aspects.push_back({Span{noun_pos, noun_pos + 1}, y});
  }
  std::string tree;
  if (clauses.size() == 1) {
    tree = "(ROOT " + clauses[0] + ")";
  } else {
    tree = "(ROOT (S";
    for (const auto& cl : clauses) tree += " " + cl;
    tree += "))";
  }
  s.example.tree = std::make_shared<const ParseTree>(parse_bracketed(tree));
  return s;
}

std::vector<Sentence> draw_split(const SynthConfig& c, const Lexicon& lx, std::size_t n, std::uint64_t split,
                                 const std::string& prefix) {
  Rng rng(c.seed, stream::kData + 16 * (split + 1));
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw_sentence(c, lx, rng, prefix + std::to_string(i)));
  return out;
}

}  // namespace

Eigen::MatrixXd emission_table(const SynthConfig& config) {
  config.validate();
  const Lexicon lx = make_lexicon(config);
  const auto nt = static_cast<Eigen::Index>(config.target_labels.size());
  const auto nd = static_cast<Eigen::Index>(lx.descriptors.size());
  const auto shared = static_cast<double>(lx.descriptors.size() - lx.shared_start);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(nt, nd);
  for (Eigen::Index y = 0; y < nt; ++y) {
    for (std::size_t i = 0; i < lx.block; ++i)
      e(y, static_cast<Eigen::Index>(static_cast<std::size_t>(y) * lx.block + i)) =
          config.signal / static_cast<double>(lx.block);
    for (auto i = static_cast<Eigen::Index>(lx.shared_start); i < nd; ++i) e(y, i) += (1.0 - config.signal) / shared;
  }
  return e;
}

SynthCorpus gen_synthetic(const SynthConfig& c) {
  c.validate();
  const Lexicon lx = make_lexicon(c);
  SynthCorpus corpus;
  for (Dataset* d : {&corpus.unlabeled, &corpus.source_train, &corpus.target_labeled, &corpus.test}) {
    d->source_labels = c.source_labels;
    d->target_labels = c.target_labels;
  }

  for (auto& s : draw_split(c, lx, c.unlabeled_size, 0, "u")) {
    Example truth = s.example;
    truth.source_label = s.source;
    corpus.unlabeled_truth.push_back(std::move(truth));
    s.example.aspects.clear();
    corpus.unlabeled.examples.push_back(std::move(s.example));
  }
  for (auto& s : draw_split(c, lx, c.source_train_size, 1, "s")) {
    s.example.aspects.clear();
    s.example.source_label = s.source;
    corpus.source_train.examples.push_back(std::move(s.example));
  }
  for (auto& s : draw_split(c, lx, c.target_labeled_size, 2, "t")) {
    corpus.target_labeled_sources.push_back(s.source);
    corpus.target_labeled.examples.push_back(std::move(s.example));
  }
  for (auto& s : draw_split(c, lx, c.test_size, 3, "e")) corpus.test.examples.push_back(std::move(s.example));
  return corpus;
}

}  // namespace xrt
