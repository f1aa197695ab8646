#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "synth/enumerate.hpp"
#include "synth/formula.hpp"

// Tree neural network over (target graph, partial formula) pairs: one learned
// leaf vector per variable/hole symbol, one tanh dense block per internal
// symbol, a softmax policy head over the token vocabulary and a sigmoid value
// head. 64-bit floats throughout; training is plain Adam on replayed examples.

namespace synth {

constexpr int kEmbedDim = 64;  // concat with the 64-entry graph embedding
                               // fixes the block dimension
constexpr double kL2Coeff = 1e-4;

constexpr int kNumLeaves = kMaxDepth + 1 + 2;  // variables + the two hole kinds
constexpr int kNumBlocks1 = 2;                 // pow, sing
constexpr int kNumBlocks2 = 14;  // six atoms, imp, and, four quantifiers, cup, concat
constexpr int kConcatBlock = 13;

struct TnnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TnnParams {
 public:
  TnnParams();  // zero-initialized

  static TnnParams random_init(uint64_t seed);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  static size_t param_count();

  // flat offsets into data()
  static size_t leaf_off(int leaf);                  // [kEmbedDim]
  static size_t block1_w_off(int b);                 // [kEmbedDim][kEmbedDim]
  static size_t block1_b_off(int b);                 // [kEmbedDim]
  static size_t block2_w_off(int b);                 // [kEmbedDim][2*kEmbedDim]
  static size_t block2_b_off(int b);                 // [kEmbedDim]
  static size_t policy_w_off();                      // [kVocabSize][kEmbedDim]
  static size_t policy_b_off();                      // [kVocabSize]
  static size_t value_w_off();                       // [kEmbedDim]
  static size_t value_b_off();                       // [1]

  bool operator==(const TnnParams& o) const { return data_ == o.data_; }

 private:
  std::vector<double> data_;
};

struct Example {
  Graph graph = 0;
  std::vector<uint8_t> partial_tokens;
  std::array<double, kVocabSize> policy_target{};  // zero on illegal tokens
  double value_target = 0;
};

struct ForwardOut {
  std::array<double, kVocabSize> policy;  // softmax over the full vocabulary
  double value;                           // sigmoid, in (0,1)
};

// +1/-1 per graph bit; the hidden-graph ablation zeroes the embedding.
std::array<double, 64> embed_graph(Graph g, bool hidden);

ForwardOut forward(Graph g, const PartialFormula& p, const TnnParams& params,
                   bool hidden);
ForwardOut forward_tokens(Graph g, const std::vector<uint8_t>& partial_tokens,
                          const TnnParams& params, bool hidden);

double loss(const std::vector<Example>& batch, const TnnParams& params, bool hidden);
// Exact analytic gradient of loss, same shape as the flat parameter vector.
std::vector<double> backward(const std::vector<Example>& batch, const TnnParams& params,
                             bool hidden);

struct TrainConfig {
  int epochs = 2;
  int batch_size = 128;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  size_t buffer_capacity = 200000;
};

// Trains on the newest <= capacity examples (the tail of `buffer`); the input
// parameters are untouched. Deterministic for a fixed seed.
TnnParams train_phase(const std::vector<Example>& buffer, const TnnParams& params,
                      const TrainConfig& cfg, uint64_t seed, bool hidden = false);

void save_params(const TnnParams& params, const std::string& path);
TnnParams load_params(const std::string& path);

}  // namespace synth
