#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synth/enumerate.hpp"
#include "synth/mcts.hpp"
#include "synth/tnn.hpp"

// Curriculum schedule, exploration/training generations, replay buffer,
// level promotion, and the three-mode evaluation protocol.

namespace synth {

struct Problem {
  Graph graph;
  int size;  // size of the source formula; the difficulty measure
};

struct Curriculum {
  std::vector<std::vector<Problem>> levels;
  int current_level = 1;  // 1-based
};

// Sort by (size, graph value), chunk into level_size groups.
Curriculum partition_levels(const Dataset& d, int level_size);

struct LevelStats {
  int attempted = 0;
  int solved = 0;
};

struct GenerationMetrics {
  int generation = 0;
  int level = 0;
  int attempted = 0;
  int solved_final = 0;
  int solved_any = 0;
  double wall_seconds = 0;
  std::vector<LevelStats> per_level;
};

struct RlConfig {
  AttemptConfig attempt;
  TrainConfig train;
  int level_size = 400;
  int explore_count = 400;  // problems drawn per exploration phase
  int generations = 0;
  uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;
};

struct ExplorationOut {
  std::vector<Example> examples;  // attempt order; value targets filled
  GenerationMetrics metrics;
};

// Draws explore_count problems in equal measure from levels <= current_level
// (remainder to the lowest levels, capped by level size), runs one attempt
// per problem. Reproducible from (seed, generation).
ExplorationOut exploration_phase(const Curriculum& c, const TnnParams& params,
                                 const RlConfig& cfg, int generation);

// current_level += 1 iff solved_any > 0.75 * attempted, clamped to the
// number of levels.
void promote_if_passed(Curriculum& c, const GenerationMetrics& m);

struct RunResult {
  TnnParams params;
  std::vector<GenerationMetrics> metrics;
};

// Generation loop: exploration, buffer insert, training, promotion; writes a
// checkpoint per generation under out_dir and resumes from the latest one.
RunResult run(Curriculum& c, const TnnParams& initial, const RlConfig& cfg);

enum class EvalMode { Guided, HiddenGraph, BreadthFirst };

struct EvalLevelResult {
  int level = 0;
  int attempted = 0;
  int solved_final = 0;
  int solved_any = 0;
};

// Runs every problem of the given levels: guided = attempt without noise,
// hidden-graph = attempt with the zeroed graph embedding, breadth-first =
// bfs_attempt (network ignored).
std::vector<EvalLevelResult> evaluate(const TnnParams& params, const Curriculum& c,
                                      const std::vector<int>& levels, EvalMode mode,
                                      const RlConfig& cfg);

// Checkpoint plumbing, exposed for the CLI and tests.
std::string checkpoint_dir(const std::string& out_dir, int generation);
int find_latest_checkpoint(const std::string& out_dir);  // -1 when none
void save_examples(const std::vector<Example>& buf, const std::string& path);
std::vector<Example> load_examples(const std::string& path);
void write_metrics_csv(const std::vector<GenerationMetrics>& rows, size_t num_levels,
                       const std::string& path);

uint64_t mix64(uint64_t a, uint64_t b, uint64_t c);

}  // namespace synth
