#include "xrt/core.hpp"

#include <cmath>
#include <unordered_set>

namespace xrt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::InvalidLabelSpace: return "InvalidLabelSpace";
    case ErrorCode::InvalidExample: return "InvalidExample";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::IndexOutOfVocab: return "IndexOutOfVocab";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyRows: return "EmptyRows";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptySets: return "EmptySets";
    case ErrorCode::EmptySetMember: return "EmptySetMember";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::EmptyPairs: return "EmptyPairs";
    case ErrorCode::MissingTableRow: return "MissingTableRow";
    case ErrorCode::LabelSpaceMismatch: return "LabelSpaceMismatch";
    case ErrorCode::Unbalanced: return "Unbalanced";
    case ErrorCode::EmptyTree: return "EmptyTree";
    case ErrorCode::MalformedNode: return "MalformedNode";
    case ErrorCode::PivotNotInTree: return "PivotNotInTree";
    case ErrorCode::MissingTree: return "MissingTree";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::BadSpan: return "BadSpan";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::MissingFlag: return "MissingFlag";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2)
    throw Error(ErrorCode::InvalidLabelSpace, "a label space needs at least two labels");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(ErrorCode::InvalidLabelSpace, "empty label name");
    if (!seen.insert(n).second)
      throw Error(ErrorCode::InvalidLabelSpace, "duplicate label '" + n + "'");
  }
}

std::optional<LabelIndex> LabelSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

LabelIndex LabelSpace::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::InvalidLabelSpace, "unknown label '" + std::string(name) + "'");
}

Distribution validate_distribution(std::span<const double> mass) {
  if (mass.empty()) throw Error(ErrorCode::NotNormalized, "empty distribution", 0.0);
  double sum = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0) || !std::isfinite(m))
      throw Error(ErrorCode::NegativeMass, "entry " + std::to_string(m) + " is not a valid mass");
    sum += m;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance)
    throw Error(ErrorCode::NotNormalized, "entries sum to " + std::to_string(sum), sum);
  return Distribution::from(Eigen::Map<const Eigen::VectorXd>(
      mass.data(), static_cast<Eigen::Index>(mass.size())));
}

Distribution Distribution::from(const Eigen::VectorXd& mass) {
  if (mass.size() == 0) throw Error(ErrorCode::NotNormalized, "empty distribution", 0.0);
  for (Eigen::Index i = 0; i < mass.size(); ++i)
    if (!(mass[i] >= 0.0) || !std::isfinite(mass[i]))
      throw Error(ErrorCode::NegativeMass, "entry " + std::to_string(mass[i]) + " is not a valid mass");
  const double sum = mass.sum();
  if (std::abs(sum - 1.0) > kDistributionTolerance)
    throw Error(ErrorCode::NotNormalized, "entries sum to " + std::to_string(sum), sum);
  return Distribution(mass);
}

Distribution Distribution::uniform(std::size_t n) {
  return Distribution(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

Distribution Distribution::one_hot(std::size_t n, std::size_t hot) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  m[static_cast<Eigen::Index>(hot)] = 1.0;
  return Distribution(std::move(m));
}

MassVector MassVector::from(const Eigen::VectorXd& mass) {
  for (Eigen::Index i = 0; i < mass.size(); ++i)
    if (!(mass[i] >= 0.0) || !std::isfinite(mass[i]))
      throw Error(ErrorCode::NegativeMass, "entry " + std::to_string(mass[i]) + " is not a valid mass");
  if (mass.size() == 0 || mass.sum() <= 0.0)
    throw Error(ErrorCode::ZeroMass, "all entries are zero");
  return MassVector(mass);
}

Distribution normalize(const Eigen::VectorXd& mass) {
  const MassVector checked = MassVector::from(mass);
  return Distribution::from(checked.mass() / checked.mass().sum());
}

void Example::validate() const {
  if (tokens.empty()) throw Error(ErrorCode::InvalidExample, "example '" + id + "' has no tokens");
  for (const auto& a : aspects) {
    if (a.pivot.start >= a.pivot.end || a.pivot.end > tokens.size())
      throw Error(ErrorCode::BadSpan, "example '" + id + "' aspect span [" +
                                          std::to_string(a.pivot.start) + "," +
                                          std::to_string(a.pivot.end) + ") out of range");
  }
}

Fragment Fragment::slice(const Example& parent, Span span, std::optional<LabelIndex> gold) {
  if (span.start >= span.end || span.end > parent.tokens.size())
    throw Error(ErrorCode::BadSpan, "fragment span out of range for '" + parent.id + "'");
  Fragment f;
  f.parent_id = parent.id;
  f.span = span;
  f.tokens.assign(parent.tokens.begin() + static_cast<std::ptrdiff_t>(span.start),
                  parent.tokens.begin() + static_cast<std::ptrdiff_t>(span.end));
  f.gold_label = gold;
  return f;
}

void ConstraintSet::validate(std::size_t num_target_labels) const {
  if (members.empty()) throw Error(ErrorCode::EmptySetMember, "constraint set has no members");
  if (proportion.size() != num_target_labels)
    throw Error(ErrorCode::DimensionMismatch, "proportion does not match the target label space");
  Distribution::from(proportion.mass());
  for (const auto& m : members)
    if (m.tokens.empty()) throw Error(ErrorCode::EmptySetMember, "fragment with no tokens");
}

Distribution ProportionTable::row(LabelIndex source) const {
  if (source >= static_cast<std::size_t>(rows.rows()))
    throw Error(ErrorCode::MissingTableRow, "no row for source label " + std::to_string(source));
  return Distribution::from(rows.row(static_cast<Eigen::Index>(source)).transpose());
}

void ProportionTable::validate() const {
  if (static_cast<std::size_t>(rows.rows()) != source_labels.size() ||
      static_cast<std::size_t>(rows.cols()) != target_labels.size())
    throw Error(ErrorCode::DimensionMismatch, "table shape does not match its label spaces");
  for (Eigen::Index j = 0; j < rows.rows(); ++j) row(static_cast<LabelIndex>(j));
}

Vocabulary::Vocabulary() { add(std::string(kUnknownToken)); }

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.empty() || tokens.front() != kUnknownToken)
    throw Error(ErrorCode::InvalidArgument, "vocabulary must start with the unknown token");
  for (auto& t : tokens) {
    if (index_.contains(t)) throw Error(ErrorCode::InvalidArgument, "duplicate vocabulary entry '" + t + "'");
    index_.emplace(t, tokens_.size());
    tokens_.push_back(std::move(t));
  }
}

TokenId Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

TokenId Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

TokenSequence Vocabulary::encode(std::span<const std::string> tokens) const {
  TokenSequence out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lookup(t));
  return out;
}

Vocabulary build_vocabulary(std::span<const ConstraintSet> sets) {
  Vocabulary v;
  for (const auto& s : sets)
    for (const auto& m : s.members)
      for (const auto& t : m.tokens) v.add(t);
  return v;
}

Vocabulary build_vocabulary(std::span<const Example> examples) {
  Vocabulary v;
  for (const auto& e : examples)
    for (const auto& t : e.tokens) v.add(t);
  return v;
}

}  // namespace xrt
