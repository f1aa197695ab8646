#pragma once

#include <stdexcept>
#include <string>

#include "synth/rl_loop.hpp"

// Flat key=value run configuration shared by the CLI commands. Unknown keys
// are rejected; commands check their own required keys; every run writes the
// fully-resolved config next to its outputs.

namespace synth {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // evaluation bounds
  uint64_t max_bits = 65536;
  uint64_t max_iter = 65536;
  uint64_t fuel = 1000000;
  // dataset generation
  int max_size = 15;
  // search
  int simulations = 50000;
  int bigstep_factor = 2;
  double c_puct = 1.5;
  double dirichlet_alpha = 0.3;
  double noise_eps = 0.25;
  // network / training
  int embed_dim = 64;  // validated: the architecture fixes this
  int epochs = 2;
  int batch_size = 128;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t buffer_capacity = 200000;
  // curriculum / run
  int level_size = 400;
  int explore_count = 400;
  int generations = 0;
  uint64_t seed = 0;
  int threads = 1;
  // paths
  std::string dataset;
  std::string out_dir;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

// Throws ConfigError naming the first key in `keys` whose value is empty.
void require_keys(const RunConfig& cfg, const std::vector<std::string>& keys);

EvalBounds to_bounds(const RunConfig& cfg);
RlConfig to_rl_config(const RunConfig& cfg);

}  // namespace synth
