#include "synth/hf.hpp"

#include <cassert>
#include <deque>

namespace synth {

bool mem(const HfNat& m, const HfNat& n) {
  if (!m.fits_ulong_p()) return false;
  return mpz_tstbit(n.get_mpz_t(), m.get_ui()) != 0;
}

bool subset(const HfNat& m, const HfNat& n) {
  HfNat diff;
  mpz_com(diff.get_mpz_t(), n.get_mpz_t());
  // m & ~n over naturals: two's-complement AND via mpz handles the sign.
  mpz_and(diff.get_mpz_t(), m.get_mpz_t(), diff.get_mpz_t());
  return diff == 0;
}

HfNat set_union(const HfNat& a, const HfNat& b) {
  HfNat r;
  mpz_ior(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

std::optional<HfNat> singleton(const HfNat& a, const EvalBounds& b) {
  if (mpz_cmp_ui(a.get_mpz_t(), b.max_bits) >= 0) return std::nullopt;
  HfNat r = 0;
  mpz_setbit(r.get_mpz_t(), a.get_ui());
  return r;
}

std::optional<HfNat> powerset(const HfNat& a, const EvalBounds& b) {
  if (mpz_cmp_ui(a.get_mpz_t(), b.max_bits) >= 0) return std::nullopt;
  // Product over set bits i of a of (1 + 2^(2^i)): every submask of a
  // contributes exactly one bit.
  const unsigned long av = a.get_ui();
  HfNat r = 1;
  for (unsigned long i = 0; i < 64 && (av >> i) != 0; ++i) {
    if ((av >> i) & 1u) {
      HfNat factor = 1;  // 1 + 2^(2^i) once the bit is set (2^i >= 1)
      mpz_setbit(factor.get_mpz_t(), 1ul << i);
      r *= factor;
    }
  }
  return r;
}

std::vector<HfNat> elements(const HfNat& n) {
  std::vector<HfNat> out;
  mp_bitcnt_t pos = mpz_scan1(n.get_mpz_t(), 0);
  while (pos != static_cast<mp_bitcnt_t>(-1)) {
    out.emplace_back(static_cast<unsigned long>(pos));
    pos = mpz_scan1(n.get_mpz_t(), pos + 1);
  }
  return out;
}

std::optional<std::vector<HfNat>> submasks(const HfNat& n, const EvalBounds& b) {
  const mp_bitcnt_t pop = mpz_popcount(n.get_mpz_t());
  if (pop > 63 || (1ull << pop) > b.max_iter) return std::nullopt;
  std::vector<unsigned long> bits;
  bits.reserve(pop);
  mp_bitcnt_t pos = mpz_scan1(n.get_mpz_t(), 0);
  while (pos != static_cast<mp_bitcnt_t>(-1)) {
    bits.push_back(static_cast<unsigned long>(pos));
    pos = mpz_scan1(n.get_mpz_t(), pos + 1);
  }
  std::vector<HfNat> out;
  out.reserve(1ull << pop);
  for (uint64_t k = 0; k < (1ull << pop); ++k) {
    HfNat m = 0;
    for (size_t j = 0; j < bits.size(); ++j)
      if ((k >> j) & 1u) mpz_setbit(m.get_mpz_t(), bits[j]);
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

// Evaluation avoids per-iteration allocation: terms write into a scratch
// arena of reused bignums (a deque so references survive growth), quantifier
// loops mutate a single environment slot in place, and the handful of
// temporaries an atom needs live in the state and keep their limb storage.
struct EvalState {
  const EvalBounds& bounds;
  unsigned long long fuel;
  std::deque<HfNat> scratch;
  HfNat atom_lhs;  // stable copy of an atom's first operand
  HfNat tmp;       // subset test workspace
  HfNat factor;    // powerset multiplier workspace

  HfNat& slot(size_t i) {
    while (scratch.size() <= i) scratch.emplace_back();
    return scratch[i];
  }
};

const HfNat& lookup(const Env& e, int var_index) {
  if (var_index == 0) return e[0];
  return e[e.size() - var_index];  // innermost-first
}

bool subset_with(const HfNat& m, const HfNat& n, HfNat& tmp) {
  mpz_com(tmp.get_mpz_t(), n.get_mpz_t());
  // m & ~n over naturals: two's-complement AND via mpz handles the sign.
  mpz_and(tmp.get_mpz_t(), m.get_mpz_t(), tmp.get_mpz_t());
  return tmp == 0;
}

// Returns the value of t, either a pointer into the environment (Var) or
// into scratch slot `base`; children use slots above `base`.
const HfNat* eval_term_rec(const Term& t, const Env& e, EvalState& s, size_t base) {
  switch (t.kind) {
    case Term::Kind::Var:
      return &lookup(e, t.var);
    case Term::Kind::Pow: {
      const HfNat* c = eval_term_rec(*t.a, e, s, base + 1);
      if (!c) return nullptr;
      if (mpz_cmp_ui(c->get_mpz_t(), s.bounds.max_bits) >= 0) return nullptr;
      // Product over set bits i of (1 + 2^(2^i)): every submask of the
      // argument contributes exactly one bit.
      const unsigned long av = c->get_ui();
      HfNat& out = s.slot(base);
      out = 1;
      for (unsigned long i = 0; i < 64 && (av >> i) != 0; ++i) {
        if ((av >> i) & 1u) {
          s.factor = 1;  // 1 + 2^(2^i) once the bit is set (2^i >= 1)
          mpz_setbit(s.factor.get_mpz_t(), 1ul << i);
          out *= s.factor;
        }
      }
      return &out;
    }
    case Term::Kind::Sing: {
      const HfNat* c = eval_term_rec(*t.a, e, s, base + 1);
      if (!c) return nullptr;
      if (mpz_cmp_ui(c->get_mpz_t(), s.bounds.max_bits) >= 0) return nullptr;
      HfNat& out = s.slot(base);
      out = 0;
      mpz_setbit(out.get_mpz_t(), c->get_ui());
      return &out;
    }
    case Term::Kind::Union: {
      const HfNat* l = eval_term_rec(*t.a, e, s, base + 1);
      if (!l) return nullptr;
      // Park the left value in this node's slot so the right child may
      // reuse the slots above it.
      HfNat& out = s.slot(base);
      mpz_set(out.get_mpz_t(), l->get_mpz_t());
      const HfNat* r = eval_term_rec(*t.b, e, s, base + 1);
      if (!r) return nullptr;
      mpz_ior(out.get_mpz_t(), out.get_mpz_t(), r->get_mpz_t());
      return &out;
    }
  }
  return nullptr;
}

std::optional<bool> eval_formula_rec(const Formula& f, Env& e, EvalState& s) {
  switch (f.kind) {
    case Formula::Kind::Atom: {
      if (s.fuel == 0) return std::nullopt;
      --s.fuel;
      const HfNat* l = eval_term_rec(*f.t1, e, s, 0);
      if (!l) return std::nullopt;
      // The second term's evaluation reuses the scratch slots, so keep a
      // stable copy of the first value.
      mpz_set(s.atom_lhs.get_mpz_t(), l->get_mpz_t());
      const HfNat* r = eval_term_rec(*f.t2, e, s, 0);
      if (!r) return std::nullopt;
      switch (f.rel) {
        case Rel::In: return mem(s.atom_lhs, *r);
        case Rel::NotIn: return !mem(s.atom_lhs, *r);
        case Rel::Sub: return subset_with(s.atom_lhs, *r, s.tmp);
        case Rel::NotSub: return !subset_with(s.atom_lhs, *r, s.tmp);
        case Rel::Eq: return s.atom_lhs == *r;
        case Rel::Neq: return s.atom_lhs != *r;
      }
      return std::nullopt;
    }
    case Formula::Kind::Imp: {
      auto a = eval_formula_rec(*f.f1, e, s);
      if (!a) return std::nullopt;
      if (!*a) return true;  // antecedent false: consequent never evaluated
      return eval_formula_rec(*f.f2, e, s);
    }
    case Formula::Kind::And: {
      auto a = eval_formula_rec(*f.f1, e, s);
      if (!a) return std::nullopt;
      if (!*a) return false;
      return eval_formula_rec(*f.f2, e, s);
    }
    case Formula::Kind::Quant: {
      const HfNat* bp = eval_term_rec(*f.t1, e, s, 0);
      if (!bp) return std::nullopt;
      // The scratch slots and the environment are both rewritten while the
      // body runs, so the bound needs its own storage for the whole loop.
      const HfNat bound = *bp;
      const bool exists = f.quant == QuantKind::ExistsElem || f.quant == QuantKind::ExistsSub;
      const bool over_elements =
          f.quant == QuantKind::ForallElem || f.quant == QuantKind::ExistsElem;

      // Ascending iteration; a witness found before any Undefined iteration
      // short-circuits, an Undefined iteration before the witness dominates.
      const size_t idx = e.size();
      e.emplace_back();
      auto finish = [&](std::optional<bool> result) {
        e.pop_back();
        return result;
      };
      if (over_elements) {
        mp_bitcnt_t pos = mpz_scan1(bound.get_mpz_t(), 0);
        while (pos != static_cast<mp_bitcnt_t>(-1)) {
          mpz_set_ui(e[idx].get_mpz_t(), static_cast<unsigned long>(pos));
          auto r = eval_formula_rec(*f.f1, e, s);
          if (!r) return finish(std::nullopt);
          if (*r == exists) return finish(exists);
          pos = mpz_scan1(bound.get_mpz_t(), pos + 1);
        }
        return finish(!exists);
      }
      const mp_bitcnt_t pop = mpz_popcount(bound.get_mpz_t());
      if (pop > 63 || (1ull << pop) > s.bounds.max_iter) return finish(std::nullopt);
      std::vector<unsigned long> bits;
      bits.reserve(pop);
      mp_bitcnt_t pos = mpz_scan1(bound.get_mpz_t(), 0);
      while (pos != static_cast<mp_bitcnt_t>(-1)) {
        bits.push_back(static_cast<unsigned long>(pos));
        pos = mpz_scan1(bound.get_mpz_t(), pos + 1);
      }
      // Counter bit j maps to the j-th lowest set bit, so ascending k is
      // ascending submask value — the same order submasks() produces.
      for (uint64_t k = 0; k < (1ull << pop); ++k) {
        mpz_set_ui(e[idx].get_mpz_t(), 0);
        for (size_t j = 0; j < bits.size(); ++j)
          if ((k >> j) & 1u) mpz_setbit(e[idx].get_mpz_t(), bits[j]);
        auto r = eval_formula_rec(*f.f1, e, s);
        if (!r) return finish(std::nullopt);
        if (*r == exists) return finish(exists);
      }
      return finish(!exists);
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<HfNat> eval_term(const Term& t, const Env& e, const EvalBounds& b) {
  EvalState s{b, b.fuel};
  const HfNat* r = eval_term_rec(t, e, s, 0);
  if (!r) return std::nullopt;
  return *r;
}

std::optional<bool> eval_formula(const Formula& f, const Env& e, const EvalBounds& b) {
  EvalState s{b, b.fuel};
  Env env = e;
  return eval_formula_rec(f, env, s);
}

}  // namespace synth
