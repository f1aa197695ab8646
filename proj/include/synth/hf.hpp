#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "synth/formula.hpp"

// Ackermann-encoding semantics: a natural number n denotes the hereditarily
// finite set whose elements are the bit positions of n, recursively.

namespace synth {

using HfNat = mpz_class;

struct EvalBounds {
  unsigned long max_bits = 65536;       // maximum bit-length of any value
  unsigned long max_iter = 65536;       // maximum iterations of one quantifier
  unsigned long long fuel = 1000000;    // maximum atom evaluations per call
};

// Slot 0 holds the free variable x; slot d holds the binder entered at depth d.
using Env = std::vector<HfNat>;

// m ∈ n iff bit m of n is 1.
bool mem(const HfNat& m, const HfNat& n);
// Every set bit of m is set in n.
bool subset(const HfNat& m, const HfNat& n);
HfNat set_union(const HfNat& a, const HfNat& b);
// 2^a; Undefined when the result would exceed max_bits bits.
std::optional<HfNat> singleton(const HfNat& a, const EvalBounds& b);
// Sum of 2^m over all submasks m of a; Undefined when a+1 > max_bits.
std::optional<HfNat> powerset(const HfNat& a, const EvalBounds& b);
// Set-bit positions of n, ascending.
std::vector<HfNat> elements(const HfNat& n);
// All submasks of n, ascending; Undefined when 2^popcount(n) > max_iter.
std::optional<std::vector<HfNat>> submasks(const HfNat& n, const EvalBounds& b);

std::optional<HfNat> eval_term(const Term& t, const Env& e, const EvalBounds& b);
std::optional<bool> eval_formula(const Formula& f, const Env& e, const EvalBounds& b);

}  // namespace synth
