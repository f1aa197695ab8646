#include "synth/tnn.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace synth {

namespace {

constexpr int D = kEmbedDim;
constexpr int D2 = 2 * kEmbedDim;

constexpr size_t kLeafSize = D;
constexpr size_t kBlock1Size = D * D + D;
constexpr size_t kBlock2Size = D * D2 + D;
constexpr size_t kOffLeaf = 0;
constexpr size_t kOffBlock1 = kOffLeaf + kNumLeaves * kLeafSize;
constexpr size_t kOffBlock2 = kOffBlock1 + kNumBlocks1 * kBlock1Size;
constexpr size_t kOffPolicyW = kOffBlock2 + kNumBlocks2 * kBlock2Size;
constexpr size_t kOffPolicyB = kOffPolicyW + size_t(kVocabSize) * D;
constexpr size_t kOffValueW = kOffPolicyB + kVocabSize;
constexpr size_t kOffValueB = kOffValueW + D;
constexpr size_t kParamCount = kOffValueB + 1;

const char* const kLeafNames[kNumLeaves] = {
    "var0", "var1", "var2", "var3", "var4", "var5", "var6",
    "term_hole", "formula_hole"};
const char* const kBlock1Names[kNumBlocks1] = {"pow", "sing"};
const char* const kBlock2Names[kNumBlocks2] = {
    "in", "notin", "sub", "notsub", "eq", "neq", "imp", "and",
    "fae", "exe", "fas", "exs", "cup", "concat"};

inline int leaf_for_var(int k) { return k; }
constexpr int kTermHoleLeaf = kMaxDepth + 1;
constexpr int kFormulaHoleLeaf = kMaxDepth + 2;

struct TapeNode {
  int8_t type;  // 0 leaf, 1 block1, 2 block2
  int8_t idx;
  int child_a = -1;  // -2 marks the graph embedding input of concat
  int child_b = -1;
  std::array<double, D> out;
};

struct Tape {
  std::vector<TapeNode> nodes;
  std::array<double, D> graph_emb;
  std::array<double, kVocabSize> logits;
  double value_pre = 0;
  double value = 0;
  int root = -1;  // concat node
};

void run_block1(const double* w, const double* b, const double* in, double* out) {
  for (int r = 0; r < D; ++r) {
    double acc = b[r];
    const double* row = w + size_t(r) * D;
    for (int c = 0; c < D; ++c) acc += row[c] * in[c];
    out[r] = std::tanh(acc);
  }
}

void run_block2(const double* w, const double* b, const double* in_a,
                const double* in_b, double* out) {
  for (int r = 0; r < D; ++r) {
    double acc = b[r];
    const double* row = w + size_t(r) * D2;
    for (int c = 0; c < D; ++c) acc += row[c] * in_a[c];
    for (int c = 0; c < D; ++c) acc += row[D + c] * in_b[c];
    out[r] = std::tanh(acc);
  }
}

struct EmbedCtx {
  const std::vector<uint8_t>& tokens;
  const std::vector<double>& p;
  Tape& tape;
};

int make_leaf(EmbedCtx& ctx, int leaf) {
  TapeNode n;
  n.type = 0;
  n.idx = static_cast<int8_t>(leaf);
  std::memcpy(n.out.data(), ctx.p.data() + kOffLeaf + leaf * kLeafSize,
              sizeof(double) * D);
  ctx.tape.nodes.push_back(n);
  return static_cast<int>(ctx.tape.nodes.size()) - 1;
}

int make_block1(EmbedCtx& ctx, int idx, int child) {
  TapeNode n;
  n.type = 1;
  n.idx = static_cast<int8_t>(idx);
  n.child_a = child;
  run_block1(ctx.p.data() + kOffBlock1 + idx * kBlock1Size,
             ctx.p.data() + kOffBlock1 + idx * kBlock1Size + size_t(D) * D,
             ctx.tape.nodes[child].out.data(), n.out.data());
  ctx.tape.nodes.push_back(n);
  return static_cast<int>(ctx.tape.nodes.size()) - 1;
}

int make_block2(EmbedCtx& ctx, int idx, int child_a, int child_b) {
  TapeNode n;
  n.type = 2;
  n.idx = static_cast<int8_t>(idx);
  n.child_a = child_a;
  n.child_b = child_b;
  const double* in_a = child_a == -2 ? ctx.tape.graph_emb.data()
                                     : ctx.tape.nodes[child_a].out.data();
  run_block2(ctx.p.data() + kOffBlock2 + idx * kBlock2Size,
             ctx.p.data() + kOffBlock2 + idx * kBlock2Size + size_t(D) * D2, in_a,
             ctx.tape.nodes[child_b].out.data(), n.out.data());
  ctx.tape.nodes.push_back(n);
  return static_cast<int>(ctx.tape.nodes.size()) - 1;
}

int embed_term(EmbedCtx& ctx, size_t& pos);
int embed_formula(EmbedCtx& ctx, size_t& pos);

int embed_term(EmbedCtx& ctx, size_t& pos) {
  if (pos >= ctx.tokens.size()) return make_leaf(ctx, kTermHoleLeaf);
  const uint8_t t = ctx.tokens[pos++];
  if (tok_is_var(t)) return make_leaf(ctx, leaf_for_var(tok_var_index(t)));
  if (t == kPow || t == kSing) {
    const int c = embed_term(ctx, pos);
    return make_block1(ctx, t == kPow ? 0 : 1, c);
  }
  // cup
  const int a = embed_term(ctx, pos);
  const int b = embed_term(ctx, pos);
  return make_block2(ctx, 12, a, b);
}

int embed_formula(EmbedCtx& ctx, size_t& pos) {
  if (pos >= ctx.tokens.size()) return make_leaf(ctx, kFormulaHoleLeaf);
  const uint8_t t = ctx.tokens[pos++];
  if (tok_is_atom(t) || t == kImp || t == kAnd) {
    int a, b;
    if (tok_is_atom(t)) {
      a = embed_term(ctx, pos);
      b = embed_term(ctx, pos);
    } else {
      a = embed_formula(ctx, pos);
      b = embed_formula(ctx, pos);
    }
    return make_block2(ctx, t, a, b);
  }
  // quantifier: bound term, then body
  const int a = embed_term(ctx, pos);
  const int b = embed_formula(ctx, pos);
  return make_block2(ctx, t, a, b);
}

Tape run_forward(Graph g, const std::vector<uint8_t>& tokens,
                 const TnnParams& params, bool hidden) {
  Tape tape;
  tape.graph_emb = embed_graph(g, hidden);
  EmbedCtx ctx{tokens, params.data(), tape};
  size_t pos = 0;
  const int tree = embed_formula(ctx, pos);
  assert(pos == tokens.size());
  tape.root = make_block2(ctx, kConcatBlock, -2, tree);
  const double* h = tape.nodes[tape.root].out.data();
  const double* pw = params.data().data() + kOffPolicyW;
  const double* pb = params.data().data() + kOffPolicyB;
  for (int i = 0; i < kVocabSize; ++i) {
    double acc = pb[i];
    const double* row = pw + size_t(i) * D;
    for (int c = 0; c < D; ++c) acc += row[c] * h[c];
    tape.logits[i] = acc;
  }
  const double* vw = params.data().data() + kOffValueW;
  double u = params.data()[kOffValueB];
  for (int c = 0; c < D; ++c) u += vw[c] * h[c];
  tape.value_pre = u;
  tape.value = 1.0 / (1.0 + std::exp(-u));
  return tape;
}

std::array<double, kVocabSize> softmax_full(const std::array<double, kVocabSize>& z) {
  std::array<double, kVocabSize> p;
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0;
  for (int i = 0; i < kVocabSize; ++i) {
    p[i] = std::exp(z[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

// Cross-entropy of the target against the policy restricted and renormalized
// over the target's support.
double support_ce(const std::array<double, kVocabSize>& z,
                  const std::array<double, kVocabSize>& target) {
  double m = -1e300;
  for (int i = 0; i < kVocabSize; ++i)
    if (target[i] > 0) m = std::max(m, z[i]);
  double s = 0;
  for (int i = 0; i < kVocabSize; ++i)
    if (target[i] > 0) s += std::exp(z[i] - m);
  const double lse = m + std::log(s);
  double ce = 0;
  for (int i = 0; i < kVocabSize; ++i)
    if (target[i] > 0) ce += target[i] * (lse - z[i]);
  return ce;
}

double data_loss_one(const Tape& tape, const Example& ex) {
  const double dv = tape.value - ex.value_target;
  return support_ce(tape.logits, ex.policy_target) + dv * dv;
}

void backward_one(const Tape& tape, const Example& ex, const TnnParams& params,
                  double scale, std::vector<double>& grad) {
  const std::vector<double>& p = params.data();
  // heads
  std::array<double, kVocabSize> dz{};
  {
    double m = -1e300;
    for (int i = 0; i < kVocabSize; ++i)
      if (ex.policy_target[i] > 0) m = std::max(m, tape.logits[i]);
    double s = 0;
    for (int i = 0; i < kVocabSize; ++i)
      if (ex.policy_target[i] > 0) s += std::exp(tape.logits[i] - m);
    for (int i = 0; i < kVocabSize; ++i)
      if (ex.policy_target[i] > 0)
        dz[i] = std::exp(tape.logits[i] - m) / s - ex.policy_target[i];
  }
  const double v = tape.value;
  const double du_value = 2.0 * (v - ex.value_target) * v * (1.0 - v);

  const double* h = tape.nodes[tape.root].out.data();
  std::vector<std::array<double, D>> dout(tape.nodes.size());
  for (auto& a : dout) a.fill(0.0);
  {
    double* gpw = grad.data() + kOffPolicyW;
    double* gpb = grad.data() + kOffPolicyB;
    const double* pw = p.data() + kOffPolicyW;
    auto& dh = dout[tape.root];
    for (int i = 0; i < kVocabSize; ++i) {
      if (dz[i] == 0) continue;
      const double d = dz[i] * scale;
      gpb[i] += d;
      double* grow = gpw + size_t(i) * D;
      const double* row = pw + size_t(i) * D;
      for (int c = 0; c < D; ++c) {
        grow[c] += d * h[c];
        dh[c] += dz[i] * row[c];
      }
    }
    double* gvw = grad.data() + kOffValueW;
    const double* vw = p.data() + kOffValueW;
    const double dvs = du_value * scale;
    grad[kOffValueB] += dvs;
    for (int c = 0; c < D; ++c) {
      gvw[c] += dvs * h[c];
      dh[c] += du_value * vw[c];
    }
  }

  for (int ni = static_cast<int>(tape.nodes.size()) - 1; ni >= 0; --ni) {
    const TapeNode& n = tape.nodes[ni];
    if (n.type == 0) {
      double* gl = grad.data() + kOffLeaf + n.idx * kLeafSize;
      for (int c = 0; c < D; ++c) gl[c] += dout[ni][c] * scale;
      continue;
    }
    std::array<double, D> du;
    for (int r = 0; r < D; ++r) du[r] = dout[ni][r] * (1.0 - n.out[r] * n.out[r]);
    if (n.type == 1) {
      const size_t base = kOffBlock1 + n.idx * kBlock1Size;
      const double* w = p.data() + base;
      double* gw = grad.data() + base;
      double* gb = grad.data() + base + size_t(D) * D;
      const double* in = tape.nodes[n.child_a].out.data();
      auto& dchild = dout[n.child_a];
      for (int r = 0; r < D; ++r) {
        const double d = du[r];
        if (d == 0) continue;
        const double ds = d * scale;
        gb[r] += ds;
        const double* row = w + size_t(r) * D;
        double* grow = gw + size_t(r) * D;
        for (int c = 0; c < D; ++c) {
          grow[c] += ds * in[c];
          dchild[c] += d * row[c];
        }
      }
    } else {
      const size_t base = kOffBlock2 + n.idx * kBlock2Size;
      const double* w = p.data() + base;
      double* gw = grad.data() + base;
      double* gb = grad.data() + base + size_t(D) * D2;
      const double* in_a =
          n.child_a == -2 ? tape.graph_emb.data() : tape.nodes[n.child_a].out.data();
      const double* in_b = tape.nodes[n.child_b].out.data();
      std::array<double, D> zero{};
      auto& da = n.child_a == -2 ? zero : dout[n.child_a];
      auto& db = dout[n.child_b];
      for (int r = 0; r < D; ++r) {
        const double d = du[r];
        if (d == 0) continue;
        const double ds = d * scale;
        gb[r] += ds;
        const double* row = w + size_t(r) * D2;
        double* grow = gw + size_t(r) * D2;
        for (int c = 0; c < D; ++c) {
          grow[c] += ds * in_a[c];
          da[c] += d * row[c];
        }
        for (int c = 0; c < D; ++c) {
          grow[D + c] += ds * in_b[c];
          db[c] += d * row[D + c];
        }
      }
    }
  }
}

}  // namespace

TnnParams::TnnParams() : data_(kParamCount, 0.0) {}

size_t TnnParams::param_count() { return kParamCount; }
size_t TnnParams::leaf_off(int leaf) { return kOffLeaf + leaf * kLeafSize; }
size_t TnnParams::block1_w_off(int b) { return kOffBlock1 + b * kBlock1Size; }
size_t TnnParams::block1_b_off(int b) {
  return kOffBlock1 + b * kBlock1Size + size_t(D) * D;
}
size_t TnnParams::block2_w_off(int b) { return kOffBlock2 + b * kBlock2Size; }
size_t TnnParams::block2_b_off(int b) {
  return kOffBlock2 + b * kBlock2Size + size_t(D) * D2;
}
size_t TnnParams::policy_w_off() { return kOffPolicyW; }
size_t TnnParams::policy_b_off() { return kOffPolicyB; }
size_t TnnParams::value_w_off() { return kOffValueW; }
size_t TnnParams::value_b_off() { return kOffValueB; }

TnnParams TnnParams::random_init(uint64_t seed) {
  TnnParams p;
  std::mt19937_64 rng(seed);
  auto fill = [&](size_t off, size_t count, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (size_t i = 0; i < count; ++i) p.data_[off + i] = dist(rng);
  };
  for (int l = 0; l < kNumLeaves; ++l) fill(leaf_off(l), kLeafSize, 0.1);
  const double s1 = std::sqrt(1.0 / D), s2 = std::sqrt(1.0 / D2);
  for (int b = 0; b < kNumBlocks1; ++b) fill(block1_w_off(b), size_t(D) * D, s1);
  for (int b = 0; b < kNumBlocks2; ++b) fill(block2_w_off(b), size_t(D) * D2, s2);
  fill(policy_w_off(), size_t(kVocabSize) * D, s1);
  fill(value_w_off(), D, s1);
  return p;
}

std::array<double, 64> embed_graph(Graph g, bool hidden) {
  std::array<double, 64> e;
  if (hidden) {
    e.fill(0.0);
    return e;
  }
  for (int n = 0; n < 64; ++n) e[n] = ((g >> n) & 1ull) ? 1.0 : -1.0;
  return e;
}

ForwardOut forward_tokens(Graph g, const std::vector<uint8_t>& partial_tokens,
                          const TnnParams& params, bool hidden) {
  Tape tape = run_forward(g, partial_tokens, params, hidden);
  return ForwardOut{softmax_full(tape.logits), tape.value};
}

ForwardOut forward(Graph g, const PartialFormula& p, const TnnParams& params,
                   bool hidden) {
  return forward_tokens(g, p.tokens(), params, hidden);
}

double loss(const std::vector<Example>& batch, const TnnParams& params, bool hidden) {
  assert(!batch.empty());
  double data = 0;
  for (const auto& ex : batch) {
    Tape tape = run_forward(ex.graph, ex.partial_tokens, params, hidden);
    data += data_loss_one(tape, ex);
  }
  data /= static_cast<double>(batch.size());
  double reg = 0;
  for (double v : params.data()) reg += v * v;
  return data + kL2Coeff * reg;
}

std::vector<double> backward(const std::vector<Example>& batch, const TnnParams& params,
                             bool hidden) {
  std::vector<double> grad(kParamCount, 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    Tape tape = run_forward(ex.graph, ex.partial_tokens, params, hidden);
    backward_one(tape, ex, params, scale, grad);
  }
  const std::vector<double>& p = params.data();
  for (size_t i = 0; i < kParamCount; ++i) grad[i] += 2.0 * kL2Coeff * p[i];
  return grad;
}

TnnParams train_phase(const std::vector<Example>& buffer, const TnnParams& params,
                      const TrainConfig& cfg, uint64_t seed, bool hidden) {
  TnnParams out = params;
  if (buffer.empty()) return out;
  const size_t n = std::min(buffer.size(), cfg.buffer_capacity);
  const size_t first = buffer.size() - n;  // newest examples are at the tail

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), first);
  std::mt19937_64 rng(seed);

  std::vector<double> m(kParamCount, 0.0), v(kParamCount, 0.0);
  long t = 0;
  std::vector<Example> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < n; start += cfg.batch_size) {
      const size_t end = std::min(n, start + cfg.batch_size);
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(buffer[order[i]]);
      std::vector<double> g = backward(batch, out, hidden);
      ++t;
      const double bc1 = 1.0 - std::pow(cfg.beta1, t);
      const double bc2 = 1.0 - std::pow(cfg.beta2, t);
      double* w = out.data().data();
      for (size_t i = 0; i < kParamCount; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        w[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
      }
    }
  }
  return out;
}

namespace {

constexpr uint32_t kMagic = 0x534e4e54;  // "TNNS"
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_str(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_tensor(std::ostream& out, const std::string& name,
                  const std::vector<uint64_t>& dims, const double* data) {
  write_str(out, name);
  write_u32(out, static_cast<uint32_t>(dims.size()));
  uint64_t total = 1;
  for (uint64_t d : dims) {
    write_u64(out, d);
    total *= d;
  }
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(total * sizeof(double)));
}

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw TnnError("cannot open checkpoint " + path);
  }
  uint32_t u32() {
    uint32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw TnnError("truncated checkpoint");
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw TnnError("truncated checkpoint");
    return v;
  }
  std::string str() {
    const uint32_t len = u32();
    if (len > 1024) throw TnnError("corrupt checkpoint: oversized name");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw TnnError("truncated checkpoint");
    return s;
  }
  void tensor(const std::string& name, const std::vector<uint64_t>& dims,
              double* data) {
    if (str() != name) throw TnnError("checkpoint tensor order mismatch at " + name);
    if (u32() != dims.size()) throw TnnError("shape mismatch for tensor " + name);
    uint64_t total = 1;
    for (uint64_t d : dims) {
      if (u64() != d) throw TnnError("shape mismatch for tensor " + name);
      total *= d;
    }
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw TnnError("truncated checkpoint");
  }
};

template <typename F>
void for_each_tensor(F&& fn) {
  for (int l = 0; l < kNumLeaves; ++l)
    fn(std::string("emb:") + kLeafNames[l], std::vector<uint64_t>{D},
       TnnParams::leaf_off(l));
  for (int b = 0; b < kNumBlocks1; ++b) {
    fn(std::string("W:") + kBlock1Names[b], std::vector<uint64_t>{D, D},
       TnnParams::block1_w_off(b));
    fn(std::string("b:") + kBlock1Names[b], std::vector<uint64_t>{D},
       TnnParams::block1_b_off(b));
  }
  for (int b = 0; b < kNumBlocks2; ++b) {
    fn(std::string("W:") + kBlock2Names[b], std::vector<uint64_t>{D, D2},
       TnnParams::block2_w_off(b));
    fn(std::string("b:") + kBlock2Names[b], std::vector<uint64_t>{D},
       TnnParams::block2_b_off(b));
  }
  fn("policy_W", std::vector<uint64_t>{kVocabSize, D}, TnnParams::policy_w_off());
  fn("policy_b", std::vector<uint64_t>{kVocabSize}, TnnParams::policy_b_off());
  fn("value_w", std::vector<uint64_t>{D}, TnnParams::value_w_off());
  fn("value_b", std::vector<uint64_t>{1}, TnnParams::value_b_off());
}

}  // namespace

void save_params(const TnnParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TnnError("cannot open " + path + " for writing");
  write_u32(out, kMagic);
  write_u32(out, kVersion);
  write_u32(out, D);
  write_u32(out, kVocabSize);
  uint32_t count = 0;
  for_each_tensor([&](const std::string&, const std::vector<uint64_t>&, size_t) {
    ++count;
  });
  write_u32(out, count);
  // symbol table
  write_u32(out, kNumLeaves + kNumBlocks1 + kNumBlocks2);
  for (const char* n : kLeafNames) write_str(out, n);
  for (const char* n : kBlock1Names) write_str(out, n);
  for (const char* n : kBlock2Names) write_str(out, n);
  for_each_tensor([&](const std::string& name, const std::vector<uint64_t>& dims,
                      size_t off) {
    write_tensor(out, name, dims, params.data().data() + off);
  });
  if (!out) throw TnnError("write failure on " + path);
}

TnnParams load_params(const std::string& path) {
  Reader r(path);
  if (r.u32() != kMagic) throw TnnError("bad checkpoint magic");
  if (r.u32() != kVersion) throw TnnError("unsupported checkpoint version");
  if (r.u32() != D) throw TnnError("embedding dimension mismatch");
  if (r.u32() != kVocabSize) throw TnnError("vocabulary size mismatch");
  uint32_t count = 0;
  for_each_tensor([&](const std::string&, const std::vector<uint64_t>&, size_t) {
    ++count;
  });
  if (r.u32() != count) throw TnnError("tensor count mismatch");
  const uint32_t symbols = r.u32();
  if (symbols != kNumLeaves + kNumBlocks1 + kNumBlocks2)
    throw TnnError("symbol table mismatch");
  for (uint32_t i = 0; i < symbols; ++i) r.str();
  TnnParams params;
  for_each_tensor([&](const std::string& name, const std::vector<uint64_t>& dims,
                      size_t off) {
    r.tensor(name, dims, params.data().data() + off);
  });
  return params;
}

}  // namespace synth
