#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xrt/error.hpp"

namespace xrt {

using LabelIndex = std::size_t;
using TokenId = std::size_t;
using TokenSequence = std::vector<TokenId>;

/// Absolute tolerance on the sum of a Distribution.
inline constexpr double kDistributionTolerance = 1e-9;

class ParseTree;

class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(LabelIndex i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<LabelIndex> find(std::string_view name) const;
  /// Throws InvalidLabelSpace for unknown names.
  LabelIndex index_of(std::string_view name) const;

  bool operator==(const LabelSpace& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
};

/// Non-negative vector summing to one within kDistributionTolerance.
class Distribution {
 public:
  Distribution() = default;

  /// Validates without renormalizing.
  static Distribution from(const Eigen::VectorXd& mass);
  static Distribution uniform(std::size_t n);
  static Distribution one_hot(std::size_t n, std::size_t hot);

  const Eigen::VectorXd& mass() const noexcept { return mass_; }
  double operator[](std::size_t i) const { return mass_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(mass_.size()); }

 private:
  explicit Distribution(Eigen::VectorXd mass) : mass_(std::move(mass)) {}
  Eigen::VectorXd mass_;
};

/// Non-negative, not-all-zero vector; an unnormalized Distribution.
class MassVector {
 public:
  static MassVector from(const Eigen::VectorXd& mass);
  const Eigen::VectorXd& mass() const noexcept { return mass_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(mass_.size()); }

 private:
  explicit MassVector(Eigen::VectorXd mass) : mass_(std::move(mass)) {}
  Eigen::VectorXd mass_;
};

/// Throws NegativeMass, or NotNormalized carrying the observed sum.
Distribution validate_distribution(std::span<const double> mass);

/// mass / sum(mass). Throws ZeroMass when every entry is zero and
/// NegativeMass for negative entries.
Distribution normalize(const Eigen::VectorXd& mass);
inline Distribution normalize(const MassVector& mass) { return normalize(mass.mass()); }

/// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool contains(const Span& inner) const noexcept {
    return start <= inner.start && inner.end <= end;
  }
  bool contains(std::size_t position) const noexcept {
    return start <= position && position < end;
  }
  bool operator==(const Span&) const = default;
};

struct AspectAnnotation {
  Span pivot;
  std::optional<LabelIndex> label;  // target space
};

/// A sentence (or short document). Labels are dense indices; names only
/// appear at I/O boundaries.
struct Example {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<LabelIndex> source_label;
  std::optional<LabelIndex> target_label;
  std::vector<AspectAnnotation> aspects;
  std::shared_ptr<const ParseTree> tree;

  /// Throws InvalidExample / BadSpan.
  void validate() const;
};

/// A sub-span of a parent example with its own copy of the tokens.
struct Fragment {
  std::string parent_id;
  Span span;
  std::vector<std::string> tokens;
  std::optional<LabelIndex> gold_label;

  static Fragment slice(const Example& parent, Span span,
                        std::optional<LabelIndex> gold = std::nullopt);
};

/// A set U_j of fragments supervised by the expected target-label
/// distribution of its source label j.
struct ConstraintSet {
  LabelIndex source_label = 0;
  std::vector<Fragment> members;
  Distribution proportion;

  void validate(std::size_t num_target_labels) const;
};

/// Conditional target-label proportions given a (noisy) source label.
struct ProportionTable {
  LabelSpace source_labels;
  LabelSpace target_labels;
  Eigen::MatrixXd rows;  // |Y^s| x |Y^t|, each row a distribution
  std::optional<Eigen::MatrixXd> counts;
  std::vector<bool> uniform_fallback;  // rows with no observations

  Distribution row(LabelIndex source) const;
  void validate() const;
};

/// Token-string to dense index mapping. Index 0 is reserved for unknown
/// tokens.
class Vocabulary {
 public:
  static constexpr TokenId kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  TokenId add(const std::string& token);
  TokenId lookup(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.contains(token); }
  TokenSequence encode(std::span<const std::string> tokens) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Vocabulary over all member tokens in order of first occurrence.
Vocabulary build_vocabulary(std::span<const ConstraintSet> sets);
Vocabulary build_vocabulary(std::span<const Example> examples);

}  // namespace xrt
