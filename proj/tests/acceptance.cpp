// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit code = number of failed criteria. Criteria can be selected by
// number on the command line (default: all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ast_enum.hpp"
#include "set_model.hpp"
#include "synth/config.hpp"
#include "synth/enumerate.hpp"
#include "synth/hf.hpp"
#include "synth/mcts.hpp"
#include "synth/rl_loop.hpp"
#include "synth/tnn.hpp"

using namespace synth;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s - %s\n", criterion, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<setmodel::SetVal> dec(1024);
  for (uint64_t n = 0; n < 1024; ++n) dec[n] = setmodel::decode(n);
  std::vector<HfNat> big(1024);
  for (uint64_t n = 0; n < 1024; ++n) big[n] = static_cast<unsigned long>(n);
  EvalBounds b;

  uint64_t mismatches = 0;
  for (uint64_t m = 0; m < 1024 && mismatches == 0; ++m) {
    for (uint64_t n = 0; n < 1024; ++n) {
      const bool model_in = dec[n].elems.count(dec[m]) != 0;
      if (mem(big[m], big[n]) != model_in) { ++mismatches; break; }
      bool model_sub = true;
      for (const auto& e : dec[m].elems)
        if (!dec[n].elems.count(e)) { model_sub = false; break; }
      if (subset(big[m], big[n]) != model_sub) { ++mismatches; break; }
      setmodel::SetVal u = dec[m];
      for (const auto& e : dec[n].elems) u.elems.insert(e);
      if (set_union(big[m], big[n]) != HfNat(static_cast<unsigned long>(
                                           setmodel::encode(u)))) {
        ++mismatches;
        break;
      }
    }
  }
  for (uint64_t a = 0; a < 1024 && mismatches == 0; ++a) {
    const auto s = singleton(big[a], b);
    HfNat expect = 1;
    mpz_mul_2exp(expect.get_mpz_t(), expect.get_mpz_t(),
                 setmodel::model_singleton_exp(a));
    if (!s || *s != expect) { ++mismatches; break; }

    const auto p = powerset(big[a], b);
    std::vector<uint64_t> bits = setmodel::model_powerset_bits(a);
    std::sort(bits.begin(), bits.end());
    HfNat pexpect = 0;
    for (uint64_t bit : bits) mpz_setbit(pexpect.get_mpz_t(), bit);
    if (!p || *p != pexpect) { ++mismatches; break; }
  }
  const bool facts = mem(0, 1) && mem(1, 2) && !mem(0, 2);
  std::ostringstream d;
  d << "set-of-sets oracle over operands <= 1023, " << (facts ? "" : "NOT ")
    << "0 in 1 / 1 in 2 / 0 not-in 2; " << mismatches << " mismatches ("
    << seconds_since(t0) << "s)";
  report(1, mismatches == 0 && facts, d.str());
}

// ---------------------------------------------------------------- criterion 2

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  EvalBounds b;
  uint64_t mismatches = 0;
  for (uint64_t a = 0; a < 256; ++a) {
    const auto p = powerset(a, b);
    if (!p) { ++mismatches; continue; }
    for (uint64_t m = 0; m < 512; ++m)
      if (mem(m, *p) != subset(m, a)) ++mismatches;
  }
  const bool anchors = powerset(0, b) == HfNat(1) && powerset(1, b) == HfNat(3) &&
                       powerset(3, b) == HfNat(15);
  std::ostringstream d;
  d << "mem(m, pow(a)) iff subset(m, a) for a <= 255, m <= 511; pow(0)=1, "
       "pow(1)=3, pow(3)=15 "
    << (anchors ? "hold" : "VIOLATED") << "; " << mismatches << " mismatches ("
    << seconds_since(t0) << "s)";
  report(2, mismatches == 0 && anchors, d.str());
}

// ---------------------------------------------------------------- criterion 3

std::optional<Graph> graph_of(const std::string& text) {
  const auto toks = tokens_from_text(text);
  if (!toks) return std::nullopt;
  PartialFormula p;
  for (uint8_t t : *toks) p.append(t);
  return compute_graph(*p.to_formula(), EvalBounds{});
}

void criterion3() {
  Graph expect = 0;
  for (int n = 0; n < 64; ++n)
    if (__builtin_popcount(n) >= 2) expect |= 1ull << n;
  const auto a = graph_of("exe x notsub x pow v1");  // exists y in x: not(x subset pow(y))
  const auto c = graph_of("exe x neq sing v1 x");    // exists y in x: {y} != x
  const bool ok = a && c && *a == *c && *a == expect;
  std::ostringstream d;
  d << "graphs " << (a ? graph_to_hex(*a) : "undef") << " and "
    << (c ? graph_to_hex(*c) : "undef") << " vs popcount>=2 mask "
    << graph_to_hex(expect);
  report(3, ok, d.str());
}

// ---------------------------------------------------------------- criterion 4

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  EvalBounds b;
  const uint64_t raw3 = build_dataset(3, b, 1).raw_count;
  // raw_count is cumulative over sizes, so the per-size count is a difference.
  const uint64_t raw4 = build_dataset(4, b, 1).raw_count - raw3;

  bool sets_match = true;
  std::set<Graph> oracle;
  for (int size = 3; size <= 8 && sets_match; ++size) {
    for (const auto& f : astenum::gen_formulas(size, 0)) {
      const auto g = compute_graph(*f, b);
      if (g) oracle.insert(*g);
    }
    Dataset d = build_dataset(size, b, static_cast<int>(
                                           std::thread::hardware_concurrency()));
    std::set<Graph> mine;
    for (const auto& e : d.entries) mine.insert(e.graph);
    if (mine != oracle) sets_match = false;
  }
  std::ostringstream d;
  d << "raw counts " << raw3 << "/" << raw4 << " (want 6/24); dedup graph sets "
    << (sets_match ? "match" : "DIFFER from") << " the AST oracle for max_size 3..8 ("
    << seconds_since(t0) << "s)";
  report(4, raw3 == 6 && raw4 == 24 && sets_match, d.str());
}

// ---------------------------------------------------------------- criterion 5

void criterion5(const fs::path& work) {
  // The published max_size-15 histogram totals 6750, but exhaustive
  // enumeration to size 15 spans ~2.4e10 raw formulas; evaluating each graph
  // (64 points apiece) exceeds the 8-hour budget by orders of magnitude on
  // any desktop, so the full-scale half of this criterion is reported
  // honestly as unmet. The report machinery itself is exercised at max_size 8.
  const auto t0 = std::chrono::steady_clock::now();
  EvalBounds b;
  Dataset d = build_dataset(8, b, static_cast<int>(std::thread::hardware_concurrency()));
  const int reference[13] = {6, 8, 22, 60, 88, 260, 472, 960, 638, 992, 1582, 1056, 606};
  auto hist = size_histogram(d);
  const fs::path path = work / "table1_comparison.txt";
  {
    std::ofstream f(path);
    f << "size\tcount\treference\n";
    uint64_t total = 0, ref_total = 0;
    for (int s = 3; s <= 15; ++s) {
      const auto it = hist.find(s);
      const uint64_t count = it == hist.end() ? 0 : it->second;
      total += count;
      ref_total += reference[s - 3];
      f << s << "\t" << count << "\t" << reference[s - 3] << "\n";
    }
    f << "total\t" << total << "\t" << ref_total << "\n";
    f << "raw\t" << d.raw_count << "\nomitted\t" << d.omitted_count << "\n";
  }
  // sanity on the emitted report: parse it back and re-add the totals
  bool readable = false;
  {
    std::ifstream f(path);
    std::string line;
    uint64_t sum = 0, total = 1;
    while (std::getline(f, line)) {
      std::stringstream ss(line);
      std::string key, count;
      std::getline(ss, key, '\t');
      std::getline(ss, count, '\t');
      if (key == "total") total = std::stoull(count);
      else if (key != "size" && key != "raw" && key != "omitted")
        sum += std::stoull(count);
    }
    readable = sum == total && total == d.entries.size();
  }
  std::ostringstream msg;
  msg << "comparison report emitted and self-consistent at max_size 8 ("
      << d.entries.size() << " entries, " << seconds_since(t0)
      << "s), but the required max_size-15 generation (~2.4e10 raw formulas) is "
         "not attainable within 8 desktop-hours; reported unmet";
  report(5, false, msg.str());
  if (!readable) std::fprintf(stderr, "warning: report self-check also failed\n");
}

// ---------------------------------------------------------------- criterion 6

Example random_example(std::mt19937_64& rng) {
  Example ex;
  ex.graph = rng();
  std::uniform_int_distribution<int> len_dist(0, 8);
  for (;;) {
    PartialFormula p;
    const int steps = len_dist(rng);
    bool ok = true;
    for (int i = 0; i < steps && ok; ++i) {
      const uint32_t mask = legal_next_tokens(p, 12 - p.length());
      std::vector<int> legal;
      for (int t = 0; t < kVocabSize; ++t)
        if ((mask >> t) & 1u) legal.push_back(t);
      if (legal.empty()) { ok = false; break; }
      p.append(static_cast<uint8_t>(
          legal[std::uniform_int_distribution<size_t>(0, legal.size() - 1)(rng)]));
    }
    if (!ok || p.complete()) continue;
    const uint32_t mask = legal_next_tokens(p, 12 - p.length());
    if (mask == 0) continue;
    ex.partial_tokens = p.tokens();
    // random target supported on a nonempty subset of the legal tokens
    double sum = 0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < kVocabSize; ++t)
      if (((mask >> t) & 1u) && unit(rng) < 0.6) {
        ex.policy_target[t] = unit(rng) + 0.05;
        sum += ex.policy_target[t];
      }
    if (sum == 0) {
      const int t = __builtin_ctz(mask);
      ex.policy_target[t] = 1.0;
      sum = 1.0;
    }
    for (double& v : ex.policy_target) v /= sum;
    ex.value_target = unit(rng);
    return ex;
  }
}

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  double max_rel = 0;
  bool unused_exact = true;
  const double h = 1e-4;

  for (uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<Example> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(random_example(rng));
    TnnParams p = TnnParams::random_init(seed * 31 + 1);
    std::vector<double> g = backward(batch, p, false);

    // symbols reachable from the batch: everything else sees only the L2 term
    std::array<bool, kNumLeaves> leaf_used{};
    std::array<bool, kNumBlocks1> b1_used{};
    std::array<bool, kNumBlocks2> b2_used{};
    leaf_used[kMaxDepth + 1] = leaf_used[kMaxDepth + 2] = true;  // hole leaves
    b2_used[kConcatBlock] = true;
    for (const Example& ex : batch)
      for (uint8_t t : ex.partial_tokens) {
        if (tok_is_var(t)) leaf_used[tok_var_index(t)] = true;
        else if (t == kPow) b1_used[0] = true;
        else if (t == kSing) b1_used[1] = true;
        else if (t == kCup) b2_used[12] = true;
        else b2_used[t] = true;  // atoms, connectives, quantifiers
      }

    std::vector<std::pair<size_t, size_t>> fd_regions;  // [off, off+len)
    std::vector<std::pair<size_t, size_t>> l2_regions;
    const size_t leaf_len = kEmbedDim;
    const size_t b1_len = size_t(kEmbedDim) * kEmbedDim + kEmbedDim;
    const size_t b2_len = size_t(kEmbedDim) * 2 * kEmbedDim + kEmbedDim;
    for (int l = 0; l < kNumLeaves; ++l)
      (leaf_used[l] ? fd_regions : l2_regions)
          .emplace_back(TnnParams::leaf_off(l), leaf_len);
    for (int i = 0; i < kNumBlocks1; ++i)
      (b1_used[i] ? fd_regions : l2_regions)
          .emplace_back(TnnParams::block1_w_off(i), b1_len);
    for (int i = 0; i < kNumBlocks2; ++i)
      (b2_used[i] ? fd_regions : l2_regions)
          .emplace_back(TnnParams::block2_w_off(i), b2_len);
    fd_regions.emplace_back(TnnParams::policy_w_off(),
                            size_t(kVocabSize) * kEmbedDim + kVocabSize);
    fd_regions.emplace_back(TnnParams::value_w_off(), kEmbedDim + 1);

    for (auto [off, len] : l2_regions)
      for (size_t i = off; i < off + len; ++i)
        if (g[i] != 2.0 * kL2Coeff * p.data()[i]) unused_exact = false;

    for (auto [off, len] : fd_regions)
      for (size_t i = off; i < off + len; ++i) {
        TnnParams plus = p, minus = p;
        plus.data()[i] += h;
        minus.data()[i] -= h;
        const double fd =
            (loss(batch, plus, false) - loss(batch, minus, false)) / (2 * h);
        const double rel =
            std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-6});
        max_rel = std::max(max_rel, rel);
      }
  }
  std::ostringstream d;
  d << "central differences h=1e-4, 5 seeds, 3-example batches: max relative "
       "error "
    << max_rel << " (want < 1e-4); untouched-symbol gradients "
    << (unused_exact ? "exactly" : "NOT exactly") << " 2*lambda*theta ("
    << seconds_since(t0) << "s)";
  report(6, max_rel < 1e-4 && unused_exact, d.str());
}

// ---------------------------------------------------------------- criterion 7

int check_conservation(const SearchNode& node) {
  if (!node.expanded) return 0;
  int bad = 0;
  int edge_sum = 0;
  for (const Edge& e : node.edges) {
    edge_sum += e.visits;
    if (e.child) bad += check_conservation(*e.child);
  }
  if (!node.terminal && node.visits != 1 + edge_sum) ++bad;
  return bad;
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  TnnParams p = TnnParams::random_init(404);
  int solved = 0, conservation_violations = 0;
  bool visit_totals = true;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    AttemptConfig cfg;
    cfg.simulations = 10000;
    cfg.seed = seed;
    std::mt19937_64 rng(seed);
    SearchNode root;
    SearchResult res = mcts_search(root, 0ull, p, cfg, 3, true, false, rng);
    conservation_violations += check_conservation(root);
    int total = 0;
    for (int v : res.root_visits) total += v;
    if (total != cfg.simulations) visit_totals = false;
    if (res.found_solution) {
      PartialFormula sol;
      for (uint8_t t : res.solution_tokens) sol.append(t);
      if (reward(sol, 0ull, cfg.bounds) == 1) ++solved;
    }
  }
  std::ostringstream d;
  d << "visit conservation: " << conservation_violations
    << " violations; root totals " << (visit_totals ? "equal" : "UNEQUAL to")
    << " the simulation count; toy budget-3 all-false solved " << solved
    << "/100 (" << seconds_since(t0) << "s)";
  report(7, conservation_violations == 0 && visit_totals && solved == 100, d.str());
}

// ------------------------------------------------------------ criteria 8 and 9

struct SmokeArtifacts {
  Curriculum curriculum;
  RlConfig cfg;
  RunResult result;
  bool ok = false;
};

SmokeArtifacts run_smoke(const fs::path& work, const Dataset& dataset) {
  SmokeArtifacts art;
  art.curriculum = partition_levels(dataset, 50);
  art.cfg.attempt.simulations = 2000;
  art.cfg.level_size = 50;
  art.cfg.explore_count = 50;
  art.cfg.generations = 20;
  art.cfg.seed = 20260823;
  art.cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  art.cfg.out_dir = (work / "smoke").string();
  fs::create_directories(art.cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  art.result = run(art.curriculum, TnnParams::random_init(art.cfg.seed), art.cfg);
  std::fprintf(stderr, "smoke run: %zu generations in %.0fs\n",
               art.result.metrics.size(), seconds_since(t0));
  for (const auto& m : art.result.metrics)
    std::fprintf(stderr, "  gen %d: level %d, solved %d/%d (final %d), %.0fs\n",
                 m.generation, m.level, m.solved_any, m.attempted, m.solved_final,
                 m.wall_seconds);
  art.ok = art.result.metrics.size() == 20;
  return art;
}

void criterion8(const SmokeArtifacts& art) {
  const auto& metrics = art.result.metrics;
  if (!art.ok) {
    report(8, false, "smoke run did not complete 20 generations");
    return;
  }
  // (a) 5-generation moving average of solved counts, non-decreasing from gen 5
  bool monotone = true;
  double prev = -1;
  std::ostringstream mas;
  for (size_t g = 4; g < metrics.size(); ++g) {
    double ma = 0;
    for (size_t i = g - 4; i <= g; ++i) ma += metrics[i].solved_any;
    ma /= 5.0;
    mas << (g > 4 ? " " : "") << ma;
    if (prev >= 0 && ma + 1e-9 < prev) monotone = false;
    prev = ma;
  }

  // (b) and (c): final checkpoint, levels 1..min(3, L)
  std::vector<int> levels;
  for (int l = 1; l <= std::min<int>(3, static_cast<int>(art.curriculum.levels.size()));
       ++l)
    levels.push_back(l);
  auto total = [](const std::vector<EvalLevelResult>& r) {
    int s = 0;
    for (const auto& x : r) s += x.solved_any;
    return s;
  };
  const auto guided =
      evaluate(art.result.params, art.curriculum, levels, EvalMode::Guided, art.cfg);
  const auto hidden = evaluate(art.result.params, art.curriculum, levels,
                               EvalMode::HiddenGraph, art.cfg);
  const auto bfs =
      evaluate(art.result.params, art.curriculum, levels, EvalMode::BreadthFirst, art.cfg);

  const bool beat_bfs = guided[0].solved_any > bfs[0].solved_any;
  const bool beat_hidden = total(guided) > total(hidden);
  std::ostringstream d;
  d << "(a) moving averages [" << mas.str() << "] "
    << (monotone ? "non-decreasing" : "DECREASE") << "; (b) level-1 guided "
    << guided[0].solved_any << " vs breadth-first " << bfs[0].solved_any
    << " at expansion parity"
    << (beat_bfs ? "" : " (level 1 is exhaustively enumerable within the "
                        "baseline's parity budget at this scale; on level " +
                            std::to_string(levels.back()) + ", where the budget binds, "
                            "guided " + std::to_string(guided.back().solved_any) +
                            " vs breadth-first " +
                            std::to_string(bfs.back().solved_any) + ")")
    << "; (c) levels 1-" << levels.back() << " guided " << total(guided)
    << " vs hidden-graph " << total(hidden);
  report(8, monotone && beat_bfs && beat_hidden, d.str());
}

void criterion9(const SmokeArtifacts& art, const Dataset& dataset) {
  if (!art.ok) {
    report(9, false, "smoke run unavailable");
    return;
  }
  // Re-run the final generation from the gen-19 checkpoint and compare.
  const fs::path redo = fs::path(art.cfg.out_dir).parent_path() / "smoke-redo";
  fs::remove_all(redo);
  fs::create_directories(redo);
  for (int gen = 1; gen <= 19; ++gen)
    fs::copy(checkpoint_dir(art.cfg.out_dir, gen),
             checkpoint_dir(redo.string(), gen), fs::copy_options::recursive);
  Curriculum c = partition_levels(dataset, art.cfg.level_size);
  RlConfig cfg = art.cfg;
  cfg.out_dir = redo.string();
  RunResult resumed = run(c, TnnParams::random_init(cfg.seed), cfg);

  bool metrics_equal = resumed.metrics.size() == art.result.metrics.size();
  if (metrics_equal) {
    const auto& a = art.result.metrics.back();
    const auto& b = resumed.metrics.back();
    metrics_equal = a.generation == b.generation && a.level == b.level &&
                    a.attempted == b.attempted && a.solved_final == b.solved_final &&
                    a.solved_any == b.solved_any;
    for (size_t i = 0; metrics_equal && i < a.per_level.size(); ++i)
      metrics_equal = a.per_level[i].attempted == b.per_level[i].attempted &&
                      a.per_level[i].solved == b.per_level[i].solved;
  }
  const bool params_equal = resumed.params == art.result.params;

  // repeated guided evaluation must be identical
  const auto e1 =
      evaluate(art.result.params, art.curriculum, {1}, EvalMode::Guided, art.cfg);
  const auto e2 =
      evaluate(art.result.params, art.curriculum, {1}, EvalMode::Guided, art.cfg);
  const bool eval_equal = e1[0].solved_any == e2[0].solved_any &&
                          e1[0].solved_final == e2[0].solved_final;

  std::ostringstream d;
  d << "resume from gen-19: generation-20 metrics "
    << (metrics_equal ? "identical" : "DIFFER") << " (wall time excluded), "
    << "parameters " << (params_equal ? "bitwise equal" : "DIFFER")
    << "; repeated guided eval " << (eval_equal ? "identical" : "DIFFERS");
  report(9, metrics_equal && params_equal && eval_equal, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto want = [&](int n) { return selected.empty() || selected.count(n) != 0; };

  const fs::path work = fs::temp_directory_path() / "setsynth_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  if (want(1)) criterion1();
  if (want(2)) criterion2();
  if (want(3)) criterion3();
  if (want(4)) criterion4();
  if (want(5)) criterion5(work);
  if (want(6)) criterion6();
  if (want(7)) criterion7();
  if (want(8) || want(9)) {
    std::fprintf(stderr, "building max_size-8 dataset for the smoke run...\n");
    Dataset dataset = build_dataset(
        8, EvalBounds{}, static_cast<int>(std::thread::hardware_concurrency()));
    std::fprintf(stderr, "dataset: %zu problems\n", dataset.entries.size());
    SmokeArtifacts art = run_smoke(work, dataset);
    if (want(8)) criterion8(art);
    if (want(9)) criterion9(art, dataset);
  }
  return g_failures;
}
