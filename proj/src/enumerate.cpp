#include "synth/enumerate.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace synth {

std::string graph_to_hex(Graph g) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, g);
  return buf;
}

std::optional<Graph> graph_from_hex(const std::string& s) {
  if (s.size() != 16) return std::nullopt;
  Graph g = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else return std::nullopt;
    g = (g << 4) | static_cast<Graph>(d);
  }
  return g;
}

std::optional<Graph> compute_graph(const Formula& f, const EvalBounds& b) {
  Graph g = 0;
  for (int n = 0; n < 64; ++n) {
    Env e{HfNat(n)};
    auto r = eval_formula(f, e, b);
    if (!r) return std::nullopt;
    if (*r) g |= Graph(1) << n;
  }
  return g;
}

namespace {

void dfs_exact(PartialFormula& p, int target,
               const std::function<void(const PartialFormula&)>& yield) {
  uint32_t mask = legal_next_tokens(p, target - p.length());
  while (mask) {
    const int t = __builtin_ctz(mask);
    mask &= mask - 1;
    PartialFormula c = p.child(static_cast<uint8_t>(t));
    if (c.complete()) {
      if (c.length() == target) yield(c);
    } else {
      dfs_exact(c, target, yield);
    }
  }
}

}  // namespace

void enumerate_formulas(int max_size,
                        const std::function<void(const PartialFormula&)>& yield) {
  for (int s = 3; s <= max_size; ++s) {
    PartialFormula root;
    dfs_exact(root, s, yield);
  }
}

namespace {

struct Candidate {
  int size;
  std::vector<uint8_t> tokens;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.size != b.size) return a.size < b.size;
  return a.tokens < b.tokens;
}

struct TaskResult {
  std::unordered_map<Graph, Candidate> best;
  uint64_t raw = 0;
  uint64_t omitted = 0;
};

void dfs_collect(PartialFormula& p, int max_size, const EvalBounds& b,
                 TaskResult& out) {
  uint32_t mask = legal_next_tokens(p, max_size - p.length());
  while (mask) {
    const int t = __builtin_ctz(mask);
    mask &= mask - 1;
    PartialFormula c = p.child(static_cast<uint8_t>(t));
    if (c.complete()) {
      ++out.raw;
      auto g = compute_graph(*c.to_formula(), b);
      if (!g) {
        ++out.omitted;
        continue;
      }
      Candidate cand{c.length(), c.tokens()};
      auto it = out.best.find(*g);
      if (it == out.best.end())
        out.best.emplace(*g, std::move(cand));
      else if (better(cand, it->second))
        it->second = std::move(cand);
    } else {
      dfs_collect(c, max_size, b, out);
    }
  }
}

}  // namespace

Dataset build_dataset(int max_size, const EvalBounds& b, int threads) {
  // Work split by the first two tokens; merge is order-independent because
  // the representative comparison is a total order.
  std::vector<PartialFormula> tasks;
  {
    PartialFormula root;
    uint32_t m1 = legal_next_tokens(root, max_size);
    while (m1) {
      const int t1 = __builtin_ctz(m1);
      m1 &= m1 - 1;
      PartialFormula p1 = root.child(static_cast<uint8_t>(t1));
      uint32_t m2 = legal_next_tokens(p1, max_size - 1);
      while (m2) {
        const int t2 = __builtin_ctz(m2);
        m2 &= m2 - 1;
        tasks.push_back(p1.child(static_cast<uint8_t>(t2)));
      }
    }
  }

  std::vector<TaskResult> results(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      PartialFormula p = tasks[i];
      if (p.complete()) continue;  // cannot happen: minimum formula size is 3
      dfs_collect(p, max_size, b, results[i]);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Dataset d;
  d.max_size = max_size;
  d.bounds = b;
  std::unordered_map<Graph, Candidate> best;
  for (auto& r : results) {
    d.raw_count += r.raw;
    d.omitted_count += r.omitted;
    for (auto& [g, cand] : r.best) {
      auto it = best.find(g);
      if (it == best.end())
        best.emplace(g, std::move(cand));
      else if (better(cand, it->second))
        it->second = std::move(cand);
    }
  }
  d.entries.reserve(best.size());
  for (auto& [g, cand] : best)
    d.entries.push_back(DatasetEntry{g, std::move(cand.tokens), cand.size});
  std::sort(d.entries.begin(), d.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b2) { return a.graph < b2.graph; });
  return d;
}

std::map<int, int> size_histogram(const Dataset& d) {
  std::map<int, int> h;
  for (const auto& e : d.entries) ++h[e.size];
  return h;
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot open " + path + " for writing");
  out << "# grammar_version=" << d.grammar_version << "\n";
  out << "# max_size=" << d.max_size << "\n";
  out << "# max_bits=" << d.bounds.max_bits << "\n";
  out << "# max_iter=" << d.bounds.max_iter << "\n";
  out << "# fuel=" << d.bounds.fuel << "\n";
  out << "# raw=" << d.raw_count << "\n";
  out << "# omitted=" << d.omitted_count << "\n";
  for (const auto& e : d.entries)
    out << graph_to_hex(e.graph) << '\t' << tokens_to_text(e.tokens) << "\n";
  if (!out) throw DatasetError("write failure on " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path);
  Dataset d;
  std::string line;
  int lineno = 0;
  Graph prev = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string kv;
      while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = kv.substr(0, eq);
        const std::string v = kv.substr(eq + 1);
        try {
          if (k == "grammar_version") d.grammar_version = std::stoi(v);
          else if (k == "max_size") d.max_size = std::stoi(v);
          else if (k == "max_bits") d.bounds.max_bits = std::stoul(v);
          else if (k == "max_iter") d.bounds.max_iter = std::stoul(v);
          else if (k == "fuel") d.bounds.fuel = std::stoull(v);
          else if (k == "raw") d.raw_count = std::stoull(v);
          else if (k == "omitted") d.omitted_count = std::stoull(v);
        } catch (const std::exception&) {
          throw DatasetError("line " + std::to_string(lineno) + ": bad header value");
        }
      }
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DatasetError("line " + std::to_string(lineno) + ": missing tab separator");
    auto g = graph_from_hex(line.substr(0, tab));
    if (!g)
      throw DatasetError("line " + std::to_string(lineno) + ": malformed graph hex");
    auto toks = tokens_from_text(line.substr(tab + 1));
    if (!toks)
      throw DatasetError("line " + std::to_string(lineno) + ": unknown token");
    auto p = parse_prefix(*toks);
    if (!p || !p->complete())
      throw DatasetError("line " + std::to_string(lineno) + ": not a complete formula");
    auto actual = compute_graph(*p->to_formula(), d.bounds);
    if (!actual || *actual != *g)
      throw DatasetError("line " + std::to_string(lineno) +
                         ": graph/representative mismatch");
    if (!first && *g <= prev)
      throw DatasetError("line " + std::to_string(lineno) + ": entries out of order");
    first = false;
    prev = *g;
    d.entries.push_back(DatasetEntry{*g, std::move(*toks), p->length()});
  }
  return d;
}

}  // namespace synth
