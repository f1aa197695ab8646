#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "synth/formula.hpp"
#include "synth/hf.hpp"

namespace synth {

// Bit n = truth value of the formula at x := n, for n in 0..63.
using Graph = uint64_t;

std::string graph_to_hex(Graph g);
std::optional<Graph> graph_from_hex(const std::string& s);

// Evaluates at x := 0..63; nullopt (omitted) when any point is Undefined.
std::optional<Graph> compute_graph(const Formula& f, const EvalBounds& b);

struct DatasetEntry {
  Graph graph;
  std::vector<uint8_t> tokens;  // minimal-size representative, prefix order
  int size;
};

struct Dataset {
  std::vector<DatasetEntry> entries;  // sorted by graph value ascending
  int max_size = 0;
  EvalBounds bounds;
  uint64_t raw_count = 0;      // formulas enumerated before dedup/omission
  uint64_t omitted_count = 0;  // formulas whose graph failed to evaluate
  int grammar_version = 1;
};

// Yields every well-formed formula of size <= max_size with free variables
// in {x}, exactly once, in (size, lexicographic prefix) order.
void enumerate_formulas(int max_size,
                        const std::function<void(const PartialFormula&)>& yield);

// Streams the enumeration, keeping per graph the first representative in
// (size, lexicographic prefix) order. Deterministic for any thread count.
Dataset build_dataset(int max_size, const EvalBounds& b, int threads = 1);

std::map<int, int> size_histogram(const Dataset& d);

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_dataset(const Dataset& d, const std::string& path);
// Re-validates: parses every line and recomputes each representative's graph.
Dataset load_dataset(const std::string& path);

}  // namespace synth
