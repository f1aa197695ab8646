#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "synth/enumerate.hpp"
#include "synth/formula.hpp"
#include "synth/tnn.hpp"

// PUCT Monte Carlo tree search over token-append actions, big-step attempts,
// and the breadth-first baseline.

namespace synth {

struct AttemptConfig {
  int simulations = 50000;   // search steps per big step
  int bigstep_factor = 2;    // big-step and token budget = factor * source size
  double c_puct = 1.5;
  double dirichlet_alpha = 0.3;
  double noise_eps = 0.25;
  EvalBounds bounds;
  uint64_t seed = 0;
};

// 1 iff the complete formula's graph is defined and equals the target.
int reward(const PartialFormula& state, Graph target, const EvalBounds& b);

struct Edge {
  uint8_t token;
  double prior_net;  // network prior restricted to legal tokens
  double prior;      // prior after root noise mixing
  int visits = 0;
  double total_value = 0;
  std::unique_ptr<struct SearchNode> child;
};

struct SearchNode {
  PartialFormula state;
  bool expanded = false;
  bool terminal = false;
  double reward_value = 0;  // cached; terminal nodes only
  double value_est = 0;     // network value at expansion
  int visits = 0;           // 1 (expansion) + sum of edge visits
  std::vector<Edge> edges;  // legal tokens, ascending token order
};

struct SearchResult {
  std::array<int, kVocabSize> root_visits{};
  bool dead_end = false;
  bool found_solution = false;              // some simulation hit reward 1
  std::vector<uint8_t> solution_tokens;     // first such terminal state
};

// Runs cfg.simulations PUCT iterations from `root` (expanding it first if
// needed). token_budget is the attempt-wide token limit; rng drives noise.
SearchResult mcts_search(SearchNode& root, Graph target, const TnnParams& params,
                         const AttemptConfig& cfg, int token_budget, bool noise,
                         bool hidden, std::mt19937_64& rng);

struct BigStepResult {
  uint8_t chosen = 0;
  Example example;  // value target filled later by the attempt outcome
  bool dead_end = false;
  bool found_solution = false;
  std::vector<uint8_t> solution_tokens;
};

// One search call plus committing the most-visited root action; `root` is
// replaced by the chosen child's retained subtree.
BigStepResult big_step(std::unique_ptr<SearchNode>& root, Graph target,
                       const TnnParams& params, const AttemptConfig& cfg,
                       int token_budget, bool noise, bool hidden,
                       std::mt19937_64& rng);

struct AttemptResult {
  bool solved = false;
  bool solved_final = false;  // the constructed complete formula itself matched
  std::optional<std::vector<uint8_t>> solution;
  std::vector<Example> examples;  // value targets filled with the outcome
};

AttemptResult attempt(Graph target, int source_size, const TnnParams& params,
                      const AttemptConfig& cfg, bool noise, bool hidden);

struct BfsResult {
  bool solved = false;
  std::optional<std::vector<uint8_t>> solution;
};

// Breadth-first baseline at expansion parity: bigstep_factor * source_size *
// cfg.simulations node expansions, same token budget as attempt().
BfsResult bfs_attempt(Graph target, int source_size, const AttemptConfig& cfg);

}  // namespace synth
