#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

// Bounded-quantifier set-theory formula language: tokens, ASTs, and the
// left-to-right completion machinery shared by the enumerator and the search.

namespace synth {

// Token ids in the fixed vocabulary order. This order defines lexicographic
// enumeration and the policy-head output indexing; do not reorder.
enum Tok : uint8_t {
  kIn = 0,
  kNotIn,
  kSub,
  kNotSub,
  kEq,
  kNeq,
  kImp,
  kAnd,
  kFae,  // forall-elem
  kExe,  // exists-elem
  kFas,  // forall-sub
  kExs,  // exists-sub
  kPow,
  kSing,
  kCup,
  kVar0,  // kVar0 + k is the variable with de Bruijn-style index k
};

constexpr int kMaxDepth = 6;               // nested binder limit
constexpr int kVocabSize = 15 + kMaxDepth + 1;  // 22

inline bool tok_is_var(uint8_t t) { return t >= kVar0; }
inline int tok_var_index(uint8_t t) { return t - kVar0; }
inline bool tok_is_atom(uint8_t t) { return t <= kNeq; }
inline bool tok_is_quant(uint8_t t) { return t >= kFae && t <= kExs; }
inline bool tok_starts_formula(uint8_t t) { return t <= kExs; }
inline bool tok_starts_term(uint8_t t) { return t >= kPow; }

// Textual tags: variables render as "x v1 v2 ..." (x = index 0).
const char* tok_name(uint8_t t);
std::optional<uint8_t> tok_from_name(const std::string& name);

enum class Rel : uint8_t { In, NotIn, Sub, NotSub, Eq, Neq };
enum class QuantKind : uint8_t { ForallElem, ExistsElem, ForallSub, ExistsSub };

struct Term {
  enum class Kind : uint8_t { Var, Pow, Sing, Union } kind;
  int var = 0;  // Var only; 0 = free variable x, k >= 1 = k-th enclosing binder
  std::unique_ptr<Term> a, b;  // Pow/Sing use a; Union uses a, b

  static std::unique_ptr<Term> mk_var(int k);
  static std::unique_ptr<Term> mk_pow(std::unique_ptr<Term> c);
  static std::unique_ptr<Term> mk_sing(std::unique_ptr<Term> c);
  static std::unique_ptr<Term> mk_union(std::unique_ptr<Term> l, std::unique_ptr<Term> r);
  std::unique_ptr<Term> clone() const;
};

struct Formula {
  enum class Kind : uint8_t { Atom, Imp, And, Quant } kind;
  Rel rel = Rel::In;                  // Atom
  QuantKind quant = QuantKind::ForallElem;  // Quant
  std::unique_ptr<Term> t1, t2;       // Atom sides; Quant bound term in t1
  std::unique_ptr<Formula> f1, f2;    // Imp/And children; Quant body in f1

  static std::unique_ptr<Formula> mk_atom(Rel r, std::unique_ptr<Term> l,
                                          std::unique_ptr<Term> r2);
  static std::unique_ptr<Formula> mk_imp(std::unique_ptr<Formula> a,
                                         std::unique_ptr<Formula> c);
  static std::unique_ptr<Formula> mk_and(std::unique_ptr<Formula> l,
                                         std::unique_ptr<Formula> r);
  static std::unique_ptr<Formula> mk_quant(QuantKind q, std::unique_ptr<Term> bound,
                                           std::unique_ptr<Formula> body);
  std::unique_ptr<Formula> clone() const;
};

int size(const Formula& f);
std::vector<uint8_t> to_prefix(const Formula& f);
bool equal(const Formula& a, const Formula& b);

// Unfilled argument position of the prefix traversal.
struct Hole {
  bool is_term;
  uint8_t depth;  // binder depth at the hole
};

// A prefix of at least one well-formed formula, with its typed holes.
// The next appended token always fills the leftmost hole.
class PartialFormula {
 public:
  // One Formula-hole at depth 0, no tokens.
  PartialFormula();

  bool complete() const { return holes_.empty(); }
  const std::vector<uint8_t>& tokens() const { return tokens_; }
  int length() const { return static_cast<int>(tokens_.size()); }
  // Leftmost hole; only valid while incomplete.
  const Hole& next_hole() const { return holes_.back(); }
  int hole_count() const { return static_cast<int>(holes_.size()); }
  // Minimum number of additional tokens to complete: Term-holes cost 1,
  // Formula-holes cost 3. Zero iff complete.
  int min_completion_size() const { return min_completion_; }

  // Category and scope check only (no budget); false when complete.
  bool token_fits(uint8_t tok) const;
  // Appends a token that fits; the caller checks token_fits first.
  void append(uint8_t tok);
  PartialFormula child(uint8_t tok) const;

  // Parses a complete sequence into an AST; only valid when complete.
  std::unique_ptr<Formula> to_formula() const;

  bool operator==(const PartialFormula& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<uint8_t> tokens_;
  std::vector<Hole> holes_;  // stack; back() is the leftmost hole
  int min_completion_ = 3;
};

// Bitmask over token ids (bit i = token i legal). Exactly the tokens whose
// appending keeps the sequence completable within `remaining_budget` more
// tokens (including the appended one), with variables in scope and binder
// depth <= kMaxDepth. Empty mask on a dead end or a complete input.
uint32_t legal_next_tokens(const PartialFormula& p, int remaining_budget);

struct ParseError {
  int position;  // index of the offending token
};

// Left-to-right parse; stops with the position of the first illegal token.
std::optional<PartialFormula> parse_prefix(const std::vector<uint8_t>& tokens,
                                           ParseError* err = nullptr);

std::string tokens_to_text(const std::vector<uint8_t>& tokens);
std::optional<std::vector<uint8_t>> tokens_from_text(const std::string& text);

// Infix rendering with named binders (x, then y, z, v3, v4, ...).
std::string pretty(const Formula& f);

}  // namespace synth
