#include "xrt/tree.hpp"

#include <cctype>
#include <functional>

namespace xrt {

namespace {

struct RawNode {
  std::string label;
  std::string token;
  std::vector<RawNode> children;
  bool leaf = false;
};

class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  RawNode read_root() {
    skip_space();
    if (pos_ == text_.size()) throw Error(ErrorCode::EmptyTree, "no tree in input");
    if (text_[pos_] != '(') throw malformed("expected '('");
    RawNode root = read_node();
    skip_space();
    if (pos_ != text_.size()) {
      if (text_[pos_] == ')') throw Error(ErrorCode::Unbalanced, "unmatched ')' at offset " + std::to_string(pos_), static_cast<double>(pos_));
      throw malformed("trailing content after tree");
    }
    return root;
  }

 private:
  Error malformed(const std::string& what) const {
    return Error(ErrorCode::MalformedNode, what + " at offset " + std::to_string(pos_), static_cast<double>(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')')
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  RawNode read_node() {
    const std::size_t open = pos_;
    ++pos_;  // '('
    skip_space();
    RawNode node;
    if (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')') node.label = read_atom();
    std::vector<std::string> atoms;
    for (;;) {
      skip_space();
      if (pos_ == text_.size())
        throw Error(ErrorCode::Unbalanced, "'(' at offset " + std::to_string(open) + " is never closed", static_cast<double>(open));
      const char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        node.children.push_back(read_node());
      } else {
        atoms.push_back(read_atom());
      }
    }
    if (!atoms.empty()) {
      if (atoms.size() > 1 || !node.children.empty() || node.label.empty())
        throw Error(ErrorCode::MalformedNode, "constituent at offset " + std::to_string(open) + " mixes tokens and children",
                    static_cast<double>(open));
      node.leaf = true;
      node.token = atoms.front();
    } else if (node.children.empty()) {
      if (node.label.empty()) throw Error(ErrorCode::EmptyTree, "empty constituent at offset " + std::to_string(open));
      throw Error(ErrorCode::MalformedNode, "constituent '" + node.label + "' at offset " + std::to_string(open) + " has no children",
                  static_cast<double>(open));
    }
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

/// Removes -NONE- leaves; returns false when nothing remains of `node`.
bool prune_empty(RawNode& node) {
  if (node.leaf) return node.label != "-NONE-";
  std::vector<RawNode> kept;
  for (auto& c : node.children)
    if (prune_empty(c)) kept.push_back(std::move(c));
  node.children = std::move(kept);
  return !node.children.empty();
}

void flatten(RawNode& raw, std::vector<ParseTree::Node>& out) {
  const std::size_t index = out.size();
  out.emplace_back();
  out[index].label = std::move(raw.label);
  out[index].token = std::move(raw.token);
  for (auto& c : raw.children) {
    out[index].children.push_back(out.size());
    flatten(c, out);
  }
}

}  // namespace

ParseTree::ParseTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::EmptyTree, "tree has no nodes");
  std::vector<bool> seen(nodes_.size(), false);
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t depth) {
    if (seen[i]) throw Error(ErrorCode::MalformedNode, "node reached twice");
    seen[i] = true;
    Node& n = nodes_[i];
    n.depth = depth;
    if (n.is_leaf()) {
      n.span = {leaves_.size(), leaves_.size() + 1};
      leaves_.push_back(i);
      return;
    }
    n.span.start = leaves_.size();
    for (std::size_t c : n.children) {
      if (c >= nodes_.size() || c == 0) throw Error(ErrorCode::MalformedNode, "child index out of range");
      nodes_[c].parent = i;
      walk(c, depth + 1);
    }
    n.span.end = leaves_.size();
  };
  walk(0, 0);
  for (bool s : seen)
    if (!s) throw Error(ErrorCode::MalformedNode, "node unreachable from root");
}

std::vector<std::string> ParseTree::tokens() const {
  std::vector<std::string> out;
  out.reserve(leaves_.size());
  for (std::size_t l : leaves_) out.push_back(nodes_[l].token);
  return out;
}

std::string ParseTree::to_string() const {
  std::string out;
  std::function<void(std::size_t)> emit = [&](std::size_t i) {
    const Node& n = nodes_[i];
    out += '(';
    out += n.label;
    if (n.is_leaf()) {
      out += ' ';
      out += n.token;
    } else {
      for (std::size_t c : n.children) {
        out += ' ';
        emit(c);
      }
    }
    out += ')';
  };
  emit(0);
  return out;
}

ParseTree parse_bracketed(std::string_view text) {
  RawNode root = BracketReader(text).read_root();
  if (!prune_empty(root)) throw Error(ErrorCode::EmptyTree, "tree has no tokens after dropping -NONE- leaves");
  std::vector<ParseTree::Node> nodes;
  flatten(root, nodes);
  return ParseTree(std::move(nodes));
}

bool is_noun_tag(std::string_view tag) { return tag == "NN" || tag == "NNS" || tag == "NNP" || tag == "NNPS"; }

bool is_verb_tag(std::string_view tag) {
  return tag == "VB" || tag == "VBD" || tag == "VBN" || tag == "VBG" || tag == "VBP" || tag == "VBZ";
}

bool is_adjective_tag(std::string_view tag) { return tag == "JJ" || tag == "JJR" || tag == "JJS"; }

std::vector<PivotPhrase> noun_pivots(const ParseTree& tree) {
  std::vector<PivotPhrase> out;
  for (std::size_t p = 0; p < tree.leaf_count(); ++p)
    if (is_noun_tag(tree.tag(p))) out.push_back({{p, p + 1}, {tree.node(tree.leaf(p)).token}});
  return out;
}

Span locate_pivot(std::span<const std::string> tokens, std::span<const std::string> phrase) {
  if (!phrase.empty() && phrase.size() <= tokens.size()) {
    for (std::size_t s = 0; s + phrase.size() <= tokens.size(); ++s) {
      bool match = true;
      for (std::size_t i = 0; i < phrase.size() && match; ++i) match = tokens[s + i] == phrase[i];
      if (match) return {s, s + phrase.size()};
    }
  }
  std::string text;
  for (const auto& t : phrase) text += (text.empty() ? "" : " ") + t;
  throw Error(ErrorCode::PivotNotInTree, "pivot phrase '" + text + "' does not occur in the sentence");
}

FragmentSpan find_fragment(const ParseTree& tree, const PivotPhrase& pivot, std::span<const PivotPhrase> all_pivots,
                           FragmentStrategy strategy) {
  if (pivot.span.start >= pivot.span.end || pivot.span.end > tree.leaf_count())
    throw Error(ErrorCode::PivotNotInTree, "pivot span [" + std::to_string(pivot.span.start) + "," +
                                               std::to_string(pivot.span.end) + ") is not under the tree");

  // Distinct pivot spans; the requested pivot always counts as a pivot.
  std::vector<Span> pivots;
  auto add_pivot = [&](Span s) {
    for (const auto& p : pivots)
      if (p == s) return;
    pivots.push_back(s);
  };
  add_pivot(pivot.span);
  for (const auto& p : all_pivots) add_pivot(p.span);

  std::vector<bool> opinion(tree.leaf_count(), false);
  for (std::size_t pos = 0; pos < tree.leaf_count(); ++pos) {
    const auto& tag = tree.tag(pos);
    if (!is_verb_tag(tag) && !is_adjective_tag(tag)) continue;
    bool inside = false;
    for (const auto& p : pivots) inside = inside || p.contains(pos);
    opinion[pos] = !inside;
  }

  struct Candidate {
    std::size_t node;
    std::size_t pivots;
    std::size_t depth;
    Span span;
  };
  std::optional<Candidate> best;
  auto better = [&](const Candidate& a, const Candidate& b) {
    if (strategy == FragmentStrategy::FilterThenHighest) {
      if (a.pivots != b.pivots) return a.pivots < b.pivots;
      if (a.depth != b.depth) return a.depth < b.depth;
    } else {
      if (a.depth != b.depth) return a.depth < b.depth;
      if (a.pivots != b.pivots) return a.pivots < b.pivots;
    }
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.span.size() > b.span.size();
  };

  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    if (!n.span.contains(pivot.span)) continue;
    bool has_opinion = false;
    for (std::size_t pos = n.span.start; pos < n.span.end && !has_opinion; ++pos) has_opinion = opinion[pos];
    if (!has_opinion) continue;
    std::size_t covered = 0;
    for (const auto& p : pivots) covered += n.span.contains(p);
    const Candidate c{i, covered, n.depth, n.span};
    if (!best || better(c, *best)) best = c;
  }

  if (!best) return {tree.node(tree.root()).span, tree.root(), pivot.span, true};
  return {best->span, best->node, pivot.span, false};
}

std::vector<Fragment> decompose(const Example& example, std::span<const PivotPhrase> pivots,
                                std::span<const std::optional<LabelIndex>> labels, FragmentStrategy strategy) {
  if (!example.tree) throw Error(ErrorCode::MissingTree, "example '" + example.id + "' has no parse tree");
  if (example.tree->leaf_count() != example.tokens.size())
    throw Error(ErrorCode::DimensionMismatch, "tree of '" + example.id + "' does not cover its tokens");
  if (!labels.empty() && labels.size() != pivots.size())
    throw Error(ErrorCode::LengthMismatch, "pivot labels differ in length from pivots");
  std::vector<Fragment> out;
  out.reserve(pivots.size());
  for (std::size_t i = 0; i < pivots.size(); ++i) {
    const auto f = find_fragment(*example.tree, pivots[i], pivots, strategy);
    out.push_back(Fragment::slice(example, f.span, labels.empty() ? std::nullopt : labels[i]));
  }
  return out;
}

std::vector<Fragment> decompose(const Example& example, FragmentStrategy strategy) {
  if (!example.tree) throw Error(ErrorCode::MissingTree, "example '" + example.id + "' has no parse tree");
  if (example.aspects.empty()) return decompose(example, noun_pivots(*example.tree), {}, strategy);
  std::vector<PivotPhrase> pivots;
  std::vector<std::optional<LabelIndex>> labels;
  for (const auto& a : example.aspects) {
    PivotPhrase p{a.pivot, {}};
    if (a.pivot.end <= example.tokens.size())
      p.tokens.assign(example.tokens.begin() + static_cast<std::ptrdiff_t>(a.pivot.start),
                      example.tokens.begin() + static_cast<std::ptrdiff_t>(a.pivot.end));
    pivots.push_back(std::move(p));
    labels.push_back(a.label);
  }
  return decompose(example, pivots, labels, strategy);
}

}  // namespace xrt
