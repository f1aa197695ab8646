#include "synth/rl_loop.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace synth {

namespace fs = std::filesystem;

uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) {
  auto split = [](uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  };
  return split(split(split(a) ^ b) ^ c);
}

namespace {

void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(threads, static_cast<int>(n));
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace

Curriculum partition_levels(const Dataset& d, int level_size) {
  if (level_size <= 0) throw std::invalid_argument("level_size must be positive");
  std::vector<Problem> all;
  all.reserve(d.entries.size());
  for (const DatasetEntry& e : d.entries) all.push_back({e.graph, e.size});
  std::sort(all.begin(), all.end(), [](const Problem& a, const Problem& b) {
    return a.size != b.size ? a.size < b.size : a.graph < b.graph;
  });
  Curriculum c;
  for (size_t i = 0; i < all.size(); i += level_size) {
    const size_t end = std::min(all.size(), i + level_size);
    c.levels.emplace_back(all.begin() + i, all.begin() + end);
  }
  return c;
}

ExplorationOut exploration_phase(const Curriculum& c, const TnnParams& params,
                                 const RlConfig& cfg, int generation) {
  const auto t0 = std::chrono::steady_clock::now();
  const int num_levels = static_cast<int>(c.levels.size());
  const int active = std::clamp(c.current_level, 1, std::max(1, num_levels));

  // Equal measure across active levels; the remainder goes to the lowest ones.
  std::vector<std::pair<int, Problem>> drawn;  // (level, problem)
  if (num_levels > 0) {
    const int base = cfg.explore_count / active;
    const int rem = cfg.explore_count % active;
    for (int lvl = 1; lvl <= active; ++lvl) {
      const auto& pool = c.levels[lvl - 1];
      int want = base + (lvl <= rem ? 1 : 0);
      want = std::min<int>(want, static_cast<int>(pool.size()));
      std::vector<size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::mt19937_64 rng(mix64(cfg.seed, static_cast<uint64_t>(generation),
                                static_cast<uint64_t>(lvl)));
      for (int k = 0; k < want; ++k) {
        std::uniform_int_distribution<size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(rng)]);
        drawn.emplace_back(lvl, pool[idx[k]]);
      }
    }
  }

  std::vector<AttemptResult> results(drawn.size());
  parallel_for(drawn.size(), cfg.threads, [&](size_t i) {
    AttemptConfig ac = cfg.attempt;
    ac.seed = mix64(cfg.seed, static_cast<uint64_t>(generation),
                    drawn[i].second.graph);
    results[i] = attempt(drawn[i].second.graph, drawn[i].second.size, params, ac,
                         /*noise=*/true, /*hidden=*/false);
  });

  ExplorationOut out;
  out.metrics.generation = generation;
  out.metrics.level = active;
  out.metrics.per_level.assign(num_levels, {});
  for (size_t i = 0; i < drawn.size(); ++i) {
    const int lvl = drawn[i].first;
    out.metrics.attempted += 1;
    out.metrics.per_level[lvl - 1].attempted += 1;
    if (results[i].solved_final) out.metrics.solved_final += 1;
    if (results[i].solved) {
      out.metrics.solved_any += 1;
      out.metrics.per_level[lvl - 1].solved += 1;
    }
    for (Example& ex : results[i].examples) out.examples.push_back(std::move(ex));
  }
  out.metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void promote_if_passed(Curriculum& c, const GenerationMetrics& m) {
  if (m.attempted > 0 && m.solved_any > 0.75 * m.attempted) {
    c.current_level =
        std::min(c.current_level + 1, static_cast<int>(c.levels.size()));
  }
}

std::string checkpoint_dir(const std::string& out_dir, int generation) {
  return (fs::path(out_dir) / ("gen-" + std::to_string(generation))).string();
}

namespace {

struct RngState {
  uint64_t seed = 0;
  int next_generation = 1;
  int current_level = 1;
};

void write_rng_state(const RngState& s, const std::string& path) {
  std::ofstream f(path);
  f << "seed=" << s.seed << "\n"
    << "next_generation=" << s.next_generation << "\n"
    << "current_level=" << s.current_level << "\n";
  if (!f) throw std::runtime_error("failed to write " + path);
}

RngState read_rng_state(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("failed to read " + path);
  RngState s;
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "seed") s.seed = std::stoull(val);
    else if (key == "next_generation") s.next_generation = std::stoi(val);
    else if (key == "current_level") s.current_level = std::stoi(val);
  }
  return s;
}

std::vector<GenerationMetrics> read_metrics_csv(const std::string& path,
                                                size_t num_levels) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("failed to read " + path);
  std::vector<GenerationMetrics> rows;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6 + 2 * num_levels)
      throw std::runtime_error("bad metrics row in " + path);
    GenerationMetrics m;
    m.generation = std::stoi(cells[0]);
    m.level = std::stoi(cells[1]);
    m.attempted = std::stoi(cells[2]);
    m.solved_final = std::stoi(cells[3]);
    m.solved_any = std::stoi(cells[4]);
    m.wall_seconds = std::stod(cells[5]);
    m.per_level.resize(num_levels);
    for (size_t i = 0; i < num_levels; ++i) {
      m.per_level[i].attempted = std::stoi(cells[6 + 2 * i]);
      m.per_level[i].solved = std::stoi(cells[7 + 2 * i]);
    }
    rows.push_back(std::move(m));
  }
  return rows;
}

}  // namespace

void write_metrics_csv(const std::vector<GenerationMetrics>& rows, size_t num_levels,
                       const std::string& path) {
  std::ofstream f(path);
  f << "generation,level,attempted,solved_final,solved_any,wall_seconds";
  for (size_t i = 1; i <= num_levels; ++i)
    f << ",level" << i << "_attempted,level" << i << "_solved";
  f << "\n";
  for (const GenerationMetrics& m : rows) {
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", m.wall_seconds);
    f << m.generation << ',' << m.level << ',' << m.attempted << ','
      << m.solved_final << ',' << m.solved_any << ',' << wall;
    for (size_t i = 0; i < num_levels; ++i)
      f << ',' << (i < m.per_level.size() ? m.per_level[i].attempted : 0) << ','
        << (i < m.per_level.size() ? m.per_level[i].solved : 0);
    f << "\n";
  }
  if (!f) throw std::runtime_error("failed to write " + path);
}

void save_examples(const std::vector<Example>& buf, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  auto put = [&](const void* p, size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  };
  const uint64_t count = buf.size();
  put(&count, 8);
  for (const Example& ex : buf) {
    put(&ex.graph, 8);
    const uint32_t n = static_cast<uint32_t>(ex.partial_tokens.size());
    put(&n, 4);
    put(ex.partial_tokens.data(), n);
    put(ex.policy_target.data(), sizeof(double) * kVocabSize);
    put(&ex.value_target, sizeof(double));
  }
  if (!f) throw std::runtime_error("failed to write " + path);
}

std::vector<Example> load_examples(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("failed to read " + path);
  auto get = [&](void* p, size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!f) throw std::runtime_error("truncated example buffer: " + path);
  };
  uint64_t count = 0;
  get(&count, 8);
  std::vector<Example> buf(count);
  for (Example& ex : buf) {
    get(&ex.graph, 8);
    uint32_t n = 0;
    get(&n, 4);
    ex.partial_tokens.resize(n);
    if (n) get(ex.partial_tokens.data(), n);
    get(ex.policy_target.data(), sizeof(double) * kVocabSize);
    get(&ex.value_target, sizeof(double));
  }
  return buf;
}

int find_latest_checkpoint(const std::string& out_dir) {
  int latest = -1;
  if (!fs::is_directory(out_dir)) return latest;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("gen-", 0) != 0) continue;
    int gen;
    try {
      gen = std::stoi(name.substr(4));
    } catch (...) {
      continue;
    }
    const fs::path p = entry.path();
    if (fs::exists(p / "params.bin") && fs::exists(p / "rng-state") &&
        fs::exists(p / "buffer.bin") && fs::exists(p / "metrics.csv")) {
      latest = std::max(latest, gen);
    }
  }
  return latest;
}

RunResult run(Curriculum& c, const TnnParams& initial, const RlConfig& cfg) {
  TnnParams params = initial;
  std::vector<Example> buffer;
  std::vector<GenerationMetrics> metrics;
  int start_gen = 1;

  const int latest = find_latest_checkpoint(cfg.out_dir);
  if (latest >= 1) {
    const std::string dir = checkpoint_dir(cfg.out_dir, latest);
    params = load_params(dir + "/params.bin");
    buffer = load_examples(dir + "/buffer.bin");
    const RngState state = read_rng_state(dir + "/rng-state");
    c.current_level = state.current_level;
    metrics = read_metrics_csv(dir + "/metrics.csv", c.levels.size());
    start_gen = state.next_generation;
  }

  for (int gen = start_gen; gen <= cfg.generations; ++gen) {
    ExplorationOut ex = exploration_phase(c, params, cfg, gen);
    for (Example& e : ex.examples) buffer.push_back(std::move(e));
    if (buffer.size() > cfg.train.buffer_capacity)
      buffer.erase(buffer.begin(),
                   buffer.end() - static_cast<long>(cfg.train.buffer_capacity));
    params = train_phase(buffer, params, cfg.train,
                         mix64(cfg.seed, static_cast<uint64_t>(gen), 0x7e57));
    promote_if_passed(c, ex.metrics);
    metrics.push_back(std::move(ex.metrics));

    const std::string dir = checkpoint_dir(cfg.out_dir, gen);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("failed to create " + dir);
    save_params(params, dir + "/params.bin");
    save_examples(buffer, dir + "/buffer.bin");
    write_metrics_csv(metrics, c.levels.size(), dir + "/metrics.csv");
    write_rng_state({cfg.seed, gen + 1, c.current_level}, dir + "/rng-state");
  }
  return {std::move(params), std::move(metrics)};
}

std::vector<EvalLevelResult> evaluate(const TnnParams& params, const Curriculum& c,
                                      const std::vector<int>& levels, EvalMode mode,
                                      const RlConfig& cfg) {
  std::vector<EvalLevelResult> out;
  for (int lvl : levels) {
    if (lvl < 1 || lvl > static_cast<int>(c.levels.size()))
      throw std::invalid_argument("level out of range");
    const auto& pool = c.levels[lvl - 1];
    EvalLevelResult r;
    r.level = lvl;
    r.attempted = static_cast<int>(pool.size());
    std::vector<std::pair<int, int>> solved(pool.size());  // (final, any)
    parallel_for(pool.size(), cfg.threads, [&](size_t i) {
      const Problem& p = pool[i];
      if (mode == EvalMode::BreadthFirst) {
        AttemptConfig ac = cfg.attempt;
        BfsResult b = bfs_attempt(p.graph, p.size, ac);
        solved[i] = {b.solved ? 1 : 0, b.solved ? 1 : 0};
      } else {
        AttemptConfig ac = cfg.attempt;
        ac.seed = mix64(cfg.seed, 0, p.graph);
        AttemptResult a = attempt(p.graph, p.size, params, ac, /*noise=*/false,
                                  mode == EvalMode::HiddenGraph);
        solved[i] = {a.solved_final ? 1 : 0, a.solved ? 1 : 0};
      }
    });
    for (auto [fin, any] : solved) {
      r.solved_final += fin;
      r.solved_any += any;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace synth
