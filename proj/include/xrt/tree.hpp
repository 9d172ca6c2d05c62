#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xrt/core.hpp"

namespace xrt {

/// Constituency tree over a sentence. Preterminals "(TAG token)" are the
/// leaves; leaf positions run 0..n-1 left to right.
class ParseTree {
 public:
  struct Node {
    std::string label;  // syntactic category, or POS tag for leaves
    std::string token;  // leaves only
    std::vector<std::size_t> children;
    std::optional<std::size_t> parent;
    Span span;              // leaf positions dominated
    std::size_t depth = 0;  // root is 0
    bool is_leaf() const noexcept { return children.empty(); }
  };

  /// Builds a tree from nodes with children/label/token set; computes
  /// parents, spans and depths. Node 0 is the root.
  explicit ParseTree(std::vector<Node> nodes);

  std::size_t root() const noexcept { return 0; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  /// Node index of the leaf at a sentence position.
  std::size_t leaf(std::size_t position) const { return leaves_.at(position); }
  const std::string& tag(std::size_t position) const { return nodes_[leaf(position)].label; }
  std::vector<std::string> tokens() const;

  /// Canonical single-line bracketed form.
  std::string to_string() const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> leaves_;
};

/// Parses one Penn-style bracketed tree. "-NONE-" leaves (and constituents
/// left empty by their removal) are dropped. Throws Unbalanced (value =
/// character offset), EmptyTree, MalformedNode (value = offset).
ParseTree parse_bracketed(std::string_view text);

bool is_noun_tag(std::string_view tag);
bool is_verb_tag(std::string_view tag);
bool is_adjective_tag(std::string_view tag);

struct PivotPhrase {
  Span span;
  std::vector<std::string> tokens;
};

/// One single-token pivot per NN/NNS/NNP/NNPS leaf, in sentence order.
std::vector<PivotPhrase> noun_pivots(const ParseTree& tree);

/// First left-to-right occurrence of `phrase` in `tokens`.
/// Throws PivotNotInTree when absent.
Span locate_pivot(std::span<const std::string> tokens, std::span<const std::string> phrase);

struct FragmentSpan {
  Span span;
  std::size_t node = 0;
  Span pivot;
  bool fallback = false;  // no node satisfied the conditions; root taken
};

/// How the minimal-pivot condition combines with the highest-node rule.
enum class FragmentStrategy {
  FilterThenHighest,  // minimize pivot count, then pick the shallowest
  HighestThenFilter,  // pick the shallowest, then minimize pivot count
};

/// Node for a pivot: among nodes that dominate the pivot and dominate a
/// verb or adjective leaf lying outside every pivot, keep those covering
/// the fewest pivots and take the shallowest (ties: leftmost start, then
/// widest span). Falls back to the root. Throws PivotNotInTree.
FragmentSpan find_fragment(const ParseTree& tree, const PivotPhrase& pivot, std::span<const PivotPhrase> all_pivots,
                           FragmentStrategy strategy = FragmentStrategy::FilterThenHighest);

/// One fragment per pivot, in pivot order, labels taken from `labels`
/// when given (same length as pivots). Throws MissingTree.
std::vector<Fragment> decompose(const Example& example, std::span<const PivotPhrase> pivots,
                                std::span<const std::optional<LabelIndex>> labels = {},
                                FragmentStrategy strategy = FragmentStrategy::FilterThenHighest);

/// Pivots from the aspect annotations when present (fragments inherit the
/// aspect labels), otherwise from nouns.
std::vector<Fragment> decompose(const Example& example,
                                FragmentStrategy strategy = FragmentStrategy::FilterThenHighest);

}  // namespace xrt
