#include "synth/formula.hpp"

#include <array>
#include <cassert>
#include <sstream>

namespace synth {

namespace {

const std::array<const char*, kVocabSize> kTokNames = {
    "in", "notin", "sub", "notsub", "eq", "neq", "imp", "and",
    "fae", "exe", "fas", "exs", "pow", "sing", "cup",
    "x", "v1", "v2", "v3", "v4", "v5", "v6"};

}  // namespace

const char* tok_name(uint8_t t) {
  assert(t < kVocabSize);
  return kTokNames[t];
}

std::optional<uint8_t> tok_from_name(const std::string& name) {
  for (int i = 0; i < kVocabSize; ++i)
    if (name == kTokNames[i]) return static_cast<uint8_t>(i);
  return std::nullopt;
}

std::unique_ptr<Term> Term::mk_var(int k) {
  auto t = std::make_unique<Term>();
  t->kind = Kind::Var;
  t->var = k;
  return t;
}

std::unique_ptr<Term> Term::mk_pow(std::unique_ptr<Term> c) {
  auto t = std::make_unique<Term>();
  t->kind = Kind::Pow;
  t->a = std::move(c);
  return t;
}

std::unique_ptr<Term> Term::mk_sing(std::unique_ptr<Term> c) {
  auto t = std::make_unique<Term>();
  t->kind = Kind::Sing;
  t->a = std::move(c);
  return t;
}

std::unique_ptr<Term> Term::mk_union(std::unique_ptr<Term> l, std::unique_ptr<Term> r) {
  auto t = std::make_unique<Term>();
  t->kind = Kind::Union;
  t->a = std::move(l);
  t->b = std::move(r);
  return t;
}

std::unique_ptr<Term> Term::clone() const {
  auto t = std::make_unique<Term>();
  t->kind = kind;
  t->var = var;
  if (a) t->a = a->clone();
  if (b) t->b = b->clone();
  return t;
}

std::unique_ptr<Formula> Formula::mk_atom(Rel r, std::unique_ptr<Term> l,
                                          std::unique_ptr<Term> r2) {
  auto f = std::make_unique<Formula>();
  f->kind = Kind::Atom;
  f->rel = r;
  f->t1 = std::move(l);
  f->t2 = std::move(r2);
  return f;
}

std::unique_ptr<Formula> Formula::mk_imp(std::unique_ptr<Formula> a,
                                         std::unique_ptr<Formula> c) {
  auto f = std::make_unique<Formula>();
  f->kind = Kind::Imp;
  f->f1 = std::move(a);
  f->f2 = std::move(c);
  return f;
}

std::unique_ptr<Formula> Formula::mk_and(std::unique_ptr<Formula> l,
                                         std::unique_ptr<Formula> r) {
  auto f = std::make_unique<Formula>();
  f->kind = Kind::And;
  f->f1 = std::move(l);
  f->f2 = std::move(r);
  return f;
}

std::unique_ptr<Formula> Formula::mk_quant(QuantKind q, std::unique_ptr<Term> bound,
                                           std::unique_ptr<Formula> body) {
  auto f = std::make_unique<Formula>();
  f->kind = Kind::Quant;
  f->quant = q;
  f->t1 = std::move(bound);
  f->f1 = std::move(body);
  return f;
}

std::unique_ptr<Formula> Formula::clone() const {
  auto f = std::make_unique<Formula>();
  f->kind = kind;
  f->rel = rel;
  f->quant = quant;
  if (t1) f->t1 = t1->clone();
  if (t2) f->t2 = t2->clone();
  if (f1) f->f1 = f1->clone();
  if (f2) f->f2 = f2->clone();
  return f;
}

namespace {

void term_prefix(const Term& t, std::vector<uint8_t>& out) {
  switch (t.kind) {
    case Term::Kind::Var:
      out.push_back(static_cast<uint8_t>(kVar0 + t.var));
      break;
    case Term::Kind::Pow:
      out.push_back(kPow);
      term_prefix(*t.a, out);
      break;
    case Term::Kind::Sing:
      out.push_back(kSing);
      term_prefix(*t.a, out);
      break;
    case Term::Kind::Union:
      out.push_back(kCup);
      term_prefix(*t.a, out);
      term_prefix(*t.b, out);
      break;
  }
}

void formula_prefix(const Formula& f, std::vector<uint8_t>& out) {
  switch (f.kind) {
    case Formula::Kind::Atom:
      out.push_back(static_cast<uint8_t>(f.rel));
      term_prefix(*f.t1, out);
      term_prefix(*f.t2, out);
      break;
    case Formula::Kind::Imp:
      out.push_back(kImp);
      formula_prefix(*f.f1, out);
      formula_prefix(*f.f2, out);
      break;
    case Formula::Kind::And:
      out.push_back(kAnd);
      formula_prefix(*f.f1, out);
      formula_prefix(*f.f2, out);
      break;
    case Formula::Kind::Quant:
      out.push_back(static_cast<uint8_t>(kFae + static_cast<uint8_t>(f.quant)));
      term_prefix(*f.t1, out);
      formula_prefix(*f.f1, out);
      break;
  }
}

}  // namespace

std::vector<uint8_t> to_prefix(const Formula& f) {
  std::vector<uint8_t> out;
  formula_prefix(f, out);
  return out;
}

int size(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::Atom: {
      // term node count = term token count
      std::vector<uint8_t> tmp;
      term_prefix(*f.t1, tmp);
      term_prefix(*f.t2, tmp);
      return 1 + static_cast<int>(tmp.size());
    }
    case Formula::Kind::Imp:
    case Formula::Kind::And:
      return 1 + size(*f.f1) + size(*f.f2);
    case Formula::Kind::Quant: {
      std::vector<uint8_t> tmp;
      term_prefix(*f.t1, tmp);
      return 1 + static_cast<int>(tmp.size()) + size(*f.f1);
    }
  }
  return 0;
}

bool equal(const Formula& a, const Formula& b) { return to_prefix(a) == to_prefix(b); }

PartialFormula::PartialFormula() { holes_.push_back(Hole{false, 0}); }

bool PartialFormula::token_fits(uint8_t tok) const {
  if (complete()) return false;
  const Hole& h = holes_.back();
  if (h.is_term) {
    if (!tok_starts_term(tok)) return false;
    if (tok_is_var(tok)) return tok_var_index(tok) <= h.depth;
    return true;
  }
  if (!tok_starts_formula(tok)) return false;
  if (tok_is_quant(tok)) return h.depth + 1 <= kMaxDepth;
  return true;
}

void PartialFormula::append(uint8_t tok) {
  assert(token_fits(tok));
  const Hole h = holes_.back();
  holes_.pop_back();
  tokens_.push_back(tok);
  const uint8_t d = h.depth;
  if (tok_is_atom(tok)) {
    holes_.push_back(Hole{true, d});  // right term
    holes_.push_back(Hole{true, d});  // left term (filled first)
    min_completion_ += 2 - 3;
  } else if (tok == kImp || tok == kAnd) {
    holes_.push_back(Hole{false, d});
    holes_.push_back(Hole{false, d});
    min_completion_ += 6 - 3;
  } else if (tok_is_quant(tok)) {
    holes_.push_back(Hole{false, static_cast<uint8_t>(d + 1)});  // body
    holes_.push_back(Hole{true, d});                             // bound term
    min_completion_ += 4 - 3;
  } else if (tok == kPow || tok == kSing) {
    holes_.push_back(Hole{true, d});
    // min_completion unchanged
  } else if (tok == kCup) {
    holes_.push_back(Hole{true, d});
    holes_.push_back(Hole{true, d});
    min_completion_ += 1;
  } else {  // variable
    min_completion_ -= 1;
  }
}

PartialFormula PartialFormula::child(uint8_t tok) const {
  PartialFormula c = *this;
  c.append(tok);
  return c;
}

uint32_t legal_next_tokens(const PartialFormula& p, int remaining_budget) {
  if (p.complete()) return 0;
  const Hole& h = p.next_hole();
  const int base = p.min_completion_size();
  uint32_t mask = 0;
  if (h.is_term) {
    // Filling a term hole (cost 1) with an operator re-adds its child costs.
    if (1 + base - 1 + 1 <= remaining_budget) {  // pow/sing: one child term
      mask |= 1u << kPow;
      mask |= 1u << kSing;
    }
    if (1 + base - 1 + 2 <= remaining_budget) mask |= 1u << kCup;
    if (1 + base - 1 <= remaining_budget)
      for (int k = 0; k <= h.depth; ++k) mask |= 1u << (kVar0 + k);
  } else {
    // Formula hole costs 3.
    if (1 + base - 3 + 2 <= remaining_budget)
      for (uint8_t t = kIn; t <= kNeq; ++t) mask |= 1u << t;
    if (1 + base - 3 + 6 <= remaining_budget) {
      mask |= 1u << kImp;
      mask |= 1u << kAnd;
    }
    if (h.depth + 1 <= kMaxDepth && 1 + base - 3 + 4 <= remaining_budget)
      for (uint8_t t = kFae; t <= kExs; ++t) mask |= 1u << t;
  }
  return mask;
}

std::optional<PartialFormula> parse_prefix(const std::vector<uint8_t>& tokens,
                                           ParseError* err) {
  PartialFormula p;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= kVocabSize || !p.token_fits(tokens[i])) {
      if (err) err->position = static_cast<int>(i);
      return std::nullopt;
    }
    p.append(tokens[i]);
  }
  return p;
}

namespace {

std::unique_ptr<Term> parse_term(const std::vector<uint8_t>& toks, size_t& pos) {
  const uint8_t t = toks[pos++];
  if (tok_is_var(t)) return Term::mk_var(tok_var_index(t));
  if (t == kPow) return Term::mk_pow(parse_term(toks, pos));
  if (t == kSing) return Term::mk_sing(parse_term(toks, pos));
  auto l = parse_term(toks, pos);
  return Term::mk_union(std::move(l), parse_term(toks, pos));
}

std::unique_ptr<Formula> parse_formula(const std::vector<uint8_t>& toks, size_t& pos) {
  const uint8_t t = toks[pos++];
  if (tok_is_atom(t)) {
    auto l = parse_term(toks, pos);
    auto r = parse_term(toks, pos);
    return Formula::mk_atom(static_cast<Rel>(t), std::move(l), std::move(r));
  }
  if (t == kImp || t == kAnd) {
    auto a = parse_formula(toks, pos);
    auto b = parse_formula(toks, pos);
    return t == kImp ? Formula::mk_imp(std::move(a), std::move(b))
                     : Formula::mk_and(std::move(a), std::move(b));
  }
  auto bound = parse_term(toks, pos);
  auto body = parse_formula(toks, pos);
  return Formula::mk_quant(static_cast<QuantKind>(t - kFae), std::move(bound),
                           std::move(body));
}

}  // namespace

std::unique_ptr<Formula> PartialFormula::to_formula() const {
  assert(complete());
  size_t pos = 0;
  auto f = parse_formula(tokens_, pos);
  assert(pos == tokens_.size());
  return f;
}

std::string tokens_to_text(const std::vector<uint8_t>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tok_name(tokens[i]);
  }
  return out;
}

std::optional<std::vector<uint8_t>> tokens_from_text(const std::string& text) {
  std::vector<uint8_t> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    auto t = tok_from_name(w);
    if (!t) return std::nullopt;
    out.push_back(*t);
  }
  return out;
}

namespace {

// Binder at depth 1 is y, depth 2 is z, depth k >= 3 is v<k>.
std::string binder_name(int depth) {
  if (depth == 1) return "y";
  if (depth == 2) return "z";
  return "v" + std::to_string(depth);
}

std::string var_name(int index, int depth) {
  if (index == 0) return "x";
  return binder_name(depth - index + 1);
}

std::string pretty_term(const Term& t, int depth) {
  switch (t.kind) {
    case Term::Kind::Var:
      return var_name(t.var, depth);
    case Term::Kind::Pow:
      return "℘(" + pretty_term(*t.a, depth) + ")";
    case Term::Kind::Sing:
      return "{" + pretty_term(*t.a, depth) + "}";
    case Term::Kind::Union:
      return "(" + pretty_term(*t.a, depth) + " ∪ " + pretty_term(*t.b, depth) + ")";
  }
  return "?";
}

const std::array<const char*, 6> kRelText = {"∈", "∉", "⊆",
                                             "⊄", "=", "≠"};

std::string pretty_formula(const Formula& f, int depth) {
  switch (f.kind) {
    case Formula::Kind::Atom:
      return pretty_term(*f.t1, depth) + " " + kRelText[static_cast<int>(f.rel)] + " " +
             pretty_term(*f.t2, depth);
    case Formula::Kind::Imp:
      return "(" + pretty_formula(*f.f1, depth) + " → " +
             pretty_formula(*f.f2, depth) + ")";
    case Formula::Kind::And:
      return "(" + pretty_formula(*f.f1, depth) + " ∧ " +
             pretty_formula(*f.f2, depth) + ")";
    case Formula::Kind::Quant: {
      const bool forall = f.quant == QuantKind::ForallElem || f.quant == QuantKind::ForallSub;
      const bool elem = f.quant == QuantKind::ForallElem || f.quant == QuantKind::ExistsElem;
      std::string s = forall ? "∀" : "∃";
      s += binder_name(depth + 1);
      s += elem ? "∈" : "⊆";
      s += pretty_term(*f.t1, depth);
      s += ". ";
      s += pretty_formula(*f.f1, depth + 1);
      return s;
    }
  }
  return "?";
}

}  // namespace

std::string pretty(const Formula& f) { return pretty_formula(f, 0); }

}  // namespace synth
