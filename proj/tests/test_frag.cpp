#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"
#include "xrt/rng.hpp"
#include "xrt/tree.hpp"

using namespace xrt;

namespace {

std::string fixture(const std::string& name) { return std::string(XRT_FIXTURE_DIR) + "/" + name; }

}  // namespace

TEST_SUITE("frag") {
  TEST_CASE("parse_bracketed basics") {
    const auto t = parse_bracketed("(S (NP (NN food)))");
    CHECK(t.leaf_count() == 1);
    CHECK(t.tokens() == std::vector<std::string>{"food"});
    CHECK(t.tag(0) == "NN");
    CHECK(t.node(t.root()).span == Span{0, 1});
  }

  TEST_CASE("parse_bracketed errors") {
    auto code = [](const char* text) {
      try {
        parse_bracketed(text);
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::Io;
    };
    CHECK(code("(S (NP (NN food)") == ErrorCode::Unbalanced);
    CHECK(code("(S (NN food)))") == ErrorCode::Unbalanced);
    CHECK(code("") == ErrorCode::EmptyTree);
    CHECK(code("   ") == ErrorCode::EmptyTree);
    CHECK(code("(S (NN a b))") == ErrorCode::MalformedNode);
  }

  TEST_CASE("parse then print gives the normalized input") {
    const std::string messy = "( ROOT\n  (S (NP (DT the)  (NN food))\t(VP (VBZ is) (ADJP (JJ great)))) )";
    const std::string canonical = "(ROOT (S (NP (DT the) (NN food)) (VP (VBZ is) (ADJP (JJ great)))))";
    CHECK(parse_bracketed(messy).to_string() == canonical);
    CHECK(parse_bracketed(canonical).to_string() == canonical);
    CHECK(parse_bracketed("(ROOT (S (NP (-NONE- *T*)) (VP (VB go))))").to_string() == "(ROOT (S (VP (VB go))))");
  }

  TEST_CASE("empty top bracket is accepted") {
    const auto t = parse_bracketed("( (S (NP (NN food)) (VP (VBZ rocks))))");
    CHECK(t.leaf_count() == 2);
  }

  TEST_CASE("noun pivots") {
    CHECK(noun_pivots(parse_bracketed("(S (VP (VB go) (ADVP (RB now))))")).empty());
    const auto one = noun_pivots(parse_bracketed("(S (NP (NN food)) (VP (VBZ rocks)))"));
    REQUIRE(one.size() == 1);
    CHECK(one[0].span == Span{0, 1});
    CHECK(one[0].tokens == std::vector<std::string>{"food"});
    const auto mixed =
        noun_pivots(parse_bracketed("(S (NP (JJ hot) (NNS fries)) (CC and) (NP (NN soup)) (VP (VBP are) (JJ ok)))"));
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0].span == Span{1, 2});
    CHECK(mixed[1].span == Span{3, 4});
  }

  TEST_CASE("locate_pivot") {
    const std::vector<std::string> tokens{"the", "battery", "life", "and", "battery"};
    const std::vector<std::string> phrase{"battery", "life"}, missing{"screen"};
    CHECK(locate_pivot(tokens, phrase) == Span{1, 3});
    CHECK_THROWS_AS(locate_pivot(tokens, missing), Error);
  }

  TEST_CASE("find_fragment on the copula example") {
    const auto t = parse_bracketed("(S (NP (NN food)) (VP (VBZ is) (ADJP (JJ great))))");
    const PivotPhrase food{{0, 1}, {"food"}};
    const auto f = find_fragment(t, food, std::vector<PivotPhrase>{food});
    CHECK(f.span == Span{0, 3});
    CHECK_FALSE(f.fallback);
    CHECK_THROWS_AS(find_fragment(t, PivotPhrase{{2, 4}, {}}, {}), Error);
  }

  TEST_CASE("fixture corpus spans") {
    std::ifstream in(fixture("fragment_trees.json"));
    REQUIRE(in);
    const auto cases = nlohmann::json::parse(in);
    CHECK(cases.size() >= 12);
    for (const auto& c : cases) {
      CAPTURE(c.at("name").get<std::string>());
      const auto tree = parse_bracketed(c.at("tree").get<std::string>());
      std::vector<PivotPhrase> pivots;
      for (const auto& p : c.at("pivots")) pivots.push_back({{p[0], p[1]}, {}});
      for (std::size_t i = 0; i < pivots.size(); ++i) {
        const auto f = find_fragment(tree, pivots[i], pivots);
        CHECK(f.span == Span{c.at("expected")[i][0], c.at("expected")[i][1]});
        CHECK(f.fallback == c.at("fallback")[i].get<bool>());
      }
    }
  }

  TEST_CASE("highest-then-filter prefers the shallowest qualifying node") {
    const auto t = parse_bracketed(
        "(ROOT (S (S (NP (NN food)) (VP (VBZ is) (ADJP (JJ great)))) (CC but) (S (NP (NN service)) (VP (VBZ is) "
        "(ADJP (JJ slow))))))");
    const std::vector<PivotPhrase> pivots{{{0, 1}, {}}, {{4, 5}, {}}};
    CHECK(find_fragment(t, pivots[0], pivots, FragmentStrategy::FilterThenHighest).span == Span{0, 3});
    CHECK(find_fragment(t, pivots[0], pivots, FragmentStrategy::HighestThenFilter).span == Span{0, 7});
  }

  TEST_CASE("decompose") {
    Example e;
    e.id = "x";
    e.tree = std::make_shared<const ParseTree>(parse_bracketed(
        "(ROOT (S (S (NP (NN food)) (VP (VBZ is) (ADJP (JJ great)))) (CC but) (S (NP (NN service)) (VP (VBZ is) "
        "(ADJP (JJ slow))))))"));
    e.tokens = e.tree->tokens();
    CHECK(decompose(e, std::span<const PivotPhrase>{}).empty());
    const auto nouns = decompose(e);
    REQUIRE(nouns.size() == 2);
    CHECK(nouns[0].tokens == std::vector<std::string>{"food", "is", "great"});
    CHECK(nouns[1].tokens == std::vector<std::string>{"service", "is", "slow"});
    CHECK_FALSE(nouns[0].gold_label);

    e.aspects = {{Span{4, 5}, 1}};
    const auto aspects = decompose(e);
    REQUIRE(aspects.size() == 1);
    // "food" is not a pivot here, so the whole sentence covers one pivot.
    CHECK(aspects[0].span == Span{0, 7});
    CHECK(aspects[0].gold_label == 1u);

    Example no_tree = e;
    no_tree.tree.reset();
    CHECK_THROWS_AS(decompose(no_tree), Error);
    Example short_tokens = e;
    short_tokens.tokens.pop_back();
    CHECK_THROWS_AS(decompose(short_tokens), Error);
  }

  TEST_CASE("property: containment invariants on random trees") {
    Rng rng(21);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto tree = parse_bracketed("(ROOT " + testing::random_tree(rng) + ")");
      const auto pivots = noun_pivots(tree);
      for (const auto& p : pivots) {
        const auto f = find_fragment(tree, p, pivots);
        ++checked;
        CHECK(f.span.contains(p.span));
        if (f.fallback) {
          CHECK(f.span == tree.node(tree.root()).span);
          continue;
        }
        bool has_opinion = false;
        for (std::size_t pos = f.span.start; pos < f.span.end; ++pos) {
          const auto& tag = tree.tag(pos);
          if (!is_verb_tag(tag) && !is_adjective_tag(tag)) continue;
          bool inside = false;
          for (const auto& q : pivots) inside = inside || q.span.contains(pos);
          has_opinion = has_opinion || !inside;
        }
        CHECK(has_opinion);
      }
    }
    CHECK(checked > 500);
  }
}
