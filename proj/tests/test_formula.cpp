#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "synth/formula.hpp"

using namespace synth;

namespace {

std::vector<uint8_t> toks(const std::string& text) {
  auto t = tokens_from_text(text);
  REQUIRE(t.has_value());
  return *t;
}

std::unique_ptr<Formula> formula(const std::string& text) {
  auto p = parse_prefix(toks(text));
  REQUIRE(p.has_value());
  REQUIRE(p->complete());
  return p->to_formula();
}

std::vector<uint8_t> mask_tokens(uint32_t mask) {
  std::vector<uint8_t> out;
  for (int i = 0; i < kVocabSize; ++i)
    if (mask & (1u << i)) out.push_back(static_cast<uint8_t>(i));
  return out;
}

}  // namespace

TEST_CASE("token names round-trip") {
  for (int i = 0; i < kVocabSize; ++i)
    CHECK(tok_from_name(tok_name(static_cast<uint8_t>(i))) == i);
  CHECK(!tok_from_name("bogus").has_value());
}

TEST_CASE("size counts prefix tokens") {
  CHECK(size(*formula("in x x")) == 3);
  CHECK(size(*formula("exe x neq sing v1 x")) == 6);
  CHECK(size(*formula("exe x notsub x pow v1")) == 6);
}

TEST_CASE("to_prefix is the preorder traversal") {
  CHECK(to_prefix(*formula("in x x")) == toks("in x x"));
  CHECK(to_prefix(*formula("eq x x")) == toks("eq x x"));
  CHECK(to_prefix(*formula("exe x neq sing v1 x")) == toks("exe x neq sing v1 x"));
}

TEST_CASE("parse_prefix partials and errors") {
  auto p = parse_prefix(toks("exe x"));
  REQUIRE(p.has_value());
  CHECK(!p->complete());
  CHECK(p->hole_count() == 1);
  CHECK(!p->next_hole().is_term);
  CHECK(p->next_hole().depth == 1);

  auto c = parse_prefix(toks("in x x"));
  REQUIRE(c.has_value());
  CHECK(c->complete());

  ParseError err{};
  auto bad = parse_prefix(toks("in v2"), &err);
  CHECK(!bad.has_value());
  CHECK(err.position == 1);

  // a term token cannot fill a formula hole
  auto bad2 = parse_prefix(toks("pow x"), &err);
  CHECK(!bad2.has_value());
  CHECK(err.position == 0);

  // trailing token after completion
  auto bad3 = parse_prefix(toks("in x x x"), &err);
  CHECK(!bad3.has_value());
  CHECK(err.position == 3);
}

TEST_CASE("min_completion_size") {
  CHECK(parse_prefix(toks("in x x"))->min_completion_size() == 0);
  CHECK(parse_prefix(toks("and"))->min_completion_size() == 6);
  CHECK(parse_prefix(toks("exe x"))->min_completion_size() == 3);
  CHECK(PartialFormula().min_completion_size() == 3);
}

TEST_CASE("legal_next_tokens budget and scope") {
  PartialFormula empty;
  auto atoms_only = mask_tokens(legal_next_tokens(empty, 3));
  CHECK(atoms_only == std::vector<uint8_t>{kIn, kNotIn, kSub, kNotSub, kEq, kNeq});

  auto p = parse_prefix(toks("in"));
  auto only_x = mask_tokens(legal_next_tokens(*p, 2));
  CHECK(only_x == std::vector<uint8_t>{kVar0});

  auto q = parse_prefix(toks("exe x"));
  uint32_t m = legal_next_tokens(*q, 10);
  CHECK((m & (1u << kIn)) != 0);
  CHECK((m & (1u << kPow)) == 0);  // formula hole
  // inside the body, v1 is in scope for term holes
  auto q2 = parse_prefix(toks("exe x in"));
  uint32_t m2 = legal_next_tokens(*q2, 10);
  CHECK((m2 & (1u << (kVar0 + 1))) != 0);
  CHECK((m2 & (1u << (kVar0 + 2))) == 0);
}

TEST_CASE("pretty rendering") {
  CHECK(pretty(*formula("in x x")) == "x ∈ x");
  CHECK(pretty(*formula("exe x neq sing v1 x")) == "∃y∈x. {y} ≠ x");
  CHECK(pretty(*formula("exe x notsub x pow v1")) == "∃y∈x. x ⊄ ℘(y)");
}

namespace {

// every sequence reachable via legal_next_tokens with budget B
void walk_all(PartialFormula& p, int budget, int& complete_count,
              const std::function<void(const PartialFormula&)>& on_complete) {
  uint32_t mask = legal_next_tokens(p, budget - p.length());
  for (auto t : mask_tokens(mask)) {
    PartialFormula c = p.child(t);
    if (c.complete()) {
      ++complete_count;
      on_complete(c);
    } else {
      walk_all(c, budget, complete_count, on_complete);
    }
  }
}

}  // namespace

TEST_CASE("exhaustive legality for budgets <= 8") {
  for (int budget = 3; budget <= 8; ++budget) {
    int n = 0;
    PartialFormula root;
    walk_all(root, budget, n, [&](const PartialFormula& c) {
      CHECK(c.length() <= budget);
      // round trip and size identity
      auto f = c.to_formula();
      CHECK(to_prefix(*f) == c.tokens());
      CHECK(size(*f) == c.length());
      // prefix-freedom: no proper prefix is complete
      auto partial = parse_prefix(
          std::vector<uint8_t>(c.tokens().begin(), c.tokens().end() - 1));
      REQUIRE(partial.has_value());
      CHECK(!partial->complete());
    });
    CHECK(n > 0);
  }
}

TEST_CASE("random legal walks terminate within budget") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 2000; ++trial) {
    const int budget = 3 + static_cast<int>(rng() % 13);
    PartialFormula p;
    while (!p.complete()) {
      auto options = mask_tokens(legal_next_tokens(p, budget - p.length()));
      REQUIRE(!options.empty());
      p.append(options[rng() % options.size()]);
    }
    CHECK(p.length() <= budget);
    CHECK(p.min_completion_size() == 0);
  }
}
