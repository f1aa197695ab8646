#include "synth/mcts.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>

namespace synth {

int reward(const PartialFormula& state, Graph target, const EvalBounds& b) {
  assert(state.complete());
  // Point-by-point with early exit: the first undefined or mismatching
  // point already decides the (binary) reward, and candidates that are
  // expensive to evaluate almost always mismatch early.
  const auto f = state.to_formula();
  for (int n = 0; n < 64; ++n) {
    Env e{HfNat(n)};
    auto r = eval_formula(*f, e, b);
    if (!r || *r != (((target >> n) & 1u) != 0)) return 0;
  }
  return 1;
}

namespace {

// Expands a fresh node: terminal reward or network priors + value estimate.
double expand_node(SearchNode& node, Graph target, const TnnParams& params,
                   const AttemptConfig& cfg, int token_budget, bool hidden,
                   SearchResult& res) {
  node.expanded = true;
  node.visits = 1;
  if (node.state.complete()) {
    node.terminal = true;
    node.reward_value = reward(node.state, target, cfg.bounds);
    if (node.reward_value > 0 && !res.found_solution) {
      res.found_solution = true;
      res.solution_tokens = node.state.tokens();
    }
    return node.reward_value;
  }
  const uint32_t mask =
      legal_next_tokens(node.state, token_budget - node.state.length());
  if (mask == 0) {
    node.terminal = true;
    node.reward_value = 0;
    return 0;
  }
  ForwardOut out = forward(target, node.state, params, hidden);
  double sum = 0;
  for (int t = 0; t < kVocabSize; ++t)
    if (mask & (1u << t)) sum += out.policy[t];
  node.edges.reserve(__builtin_popcount(mask));
  for (int t = 0; t < kVocabSize; ++t) {
    if (!(mask & (1u << t))) continue;
    Edge e;
    e.token = static_cast<uint8_t>(t);
    e.prior_net = sum > 0 ? out.policy[t] / sum
                          : 1.0 / __builtin_popcount(mask);
    e.prior = e.prior_net;
    node.edges.push_back(std::move(e));
  }
  node.value_est = out.value;
  return out.value;
}

void mix_root_noise(SearchNode& root, const AttemptConfig& cfg, bool noise,
                    std::mt19937_64& rng) {
  if (!noise) {
    for (Edge& e : root.edges) e.prior = e.prior_net;
    return;
  }
  std::gamma_distribution<double> gamma(cfg.dirichlet_alpha, 1.0);
  std::vector<double> dir(root.edges.size());
  double sum = 0;
  for (double& d : dir) {
    d = gamma(rng);
    sum += d;
  }
  if (sum <= 0) sum = 1;
  for (size_t i = 0; i < root.edges.size(); ++i)
    root.edges[i].prior = (1.0 - cfg.noise_eps) * root.edges[i].prior_net +
                          cfg.noise_eps * dir[i] / sum;
}

}  // namespace

SearchResult mcts_search(SearchNode& root, Graph target, const TnnParams& params,
                         const AttemptConfig& cfg, int token_budget, bool noise,
                         bool hidden, std::mt19937_64& rng) {
  SearchResult res;
  if (!root.expanded) expand_node(root, target, params, cfg, token_budget, hidden, res);
  if (root.terminal) {
    res.dead_end = !root.state.complete();
    return res;
  }
  mix_root_noise(root, cfg, noise, rng);

  std::vector<std::pair<SearchNode*, Edge*>> path;
  for (int sim = 0; sim < cfg.simulations; ++sim) {
    path.clear();
    SearchNode* node = &root;
    while (node->expanded && !node->terminal) {
      const double sqrt_parent = std::sqrt(static_cast<double>(node->visits));
      Edge* best = nullptr;
      double best_score = -1e300;
      for (Edge& e : node->edges) {
        const double q = e.visits > 0 ? e.total_value / e.visits : 0.0;
        const double score =
            q + cfg.c_puct * e.prior * sqrt_parent / (1.0 + e.visits);
        if (score > best_score) {  // ties keep the lowest token
          best_score = score;
          best = &e;
        }
      }
      if (!best->child) {
        best->child = std::make_unique<SearchNode>();
        best->child->state = node->state.child(best->token);
      }
      path.emplace_back(node, best);
      node = best->child.get();
    }
    double value;
    if (node->terminal) {
      value = node->reward_value;
    } else {
      value = expand_node(*node, target, params, cfg, token_budget, hidden, res);
    }
    for (auto& [n, e] : path) {
      n->visits += 1;
      e->visits += 1;
      e->total_value += value;
    }
  }
  for (const Edge& e : root.edges) res.root_visits[e.token] = e.visits;
  return res;
}

BigStepResult big_step(std::unique_ptr<SearchNode>& root, Graph target,
                       const TnnParams& params, const AttemptConfig& cfg,
                       int token_budget, bool noise, bool hidden,
                       std::mt19937_64& rng) {
  BigStepResult out;
  SearchResult res =
      mcts_search(*root, target, params, cfg, token_budget, noise, hidden, rng);
  if (res.dead_end) {
    out.dead_end = true;
    return out;
  }
  out.found_solution = res.found_solution;
  out.solution_tokens = std::move(res.solution_tokens);

  out.example.graph = target;
  out.example.partial_tokens = root->state.tokens();
  long total = 0;
  for (int v : res.root_visits) total += v;
  for (int t = 0; t < kVocabSize; ++t)
    out.example.policy_target[t] =
        total > 0 ? static_cast<double>(res.root_visits[t]) / total : 0.0;

  Edge* best = nullptr;
  for (Edge& e : root->edges)
    if (!best || e.visits > best->visits) best = &e;  // ties keep lowest token
  out.chosen = best->token;
  std::unique_ptr<SearchNode> next = std::move(best->child);
  if (!next) {
    next = std::make_unique<SearchNode>();
    next->state = root->state.child(best->token);
  }
  root = std::move(next);
  return out;
}

AttemptResult attempt(Graph target, int source_size, const TnnParams& params,
                      const AttemptConfig& cfg, bool noise, bool hidden) {
  AttemptResult out;
  const int budget = cfg.bigstep_factor * source_size;
  std::mt19937_64 rng(cfg.seed);
  auto root = std::make_unique<SearchNode>();

  int steps = 0;
  while (!root->state.complete() && steps < budget) {
    BigStepResult step =
        big_step(root, target, params, cfg, budget, noise, hidden, rng);
    if (step.dead_end) break;
    if (step.found_solution && !out.solution) {
      out.solution = std::move(step.solution_tokens);
    }
    out.examples.push_back(std::move(step.example));
    ++steps;
  }
  if (root->state.complete())
    out.solved_final = reward(root->state, target, cfg.bounds) == 1;
  out.solved = out.solved_final || out.solution.has_value();
  if (!out.solution && out.solved_final) out.solution = root->state.tokens();
  for (Example& ex : out.examples) ex.value_target = out.solved ? 1.0 : 0.0;
  return out;
}

BfsResult bfs_attempt(Graph target, int source_size, const AttemptConfig& cfg) {
  BfsResult out;
  const int token_budget = cfg.bigstep_factor * source_size;
  const long long expansion_budget =
      static_cast<long long>(cfg.bigstep_factor) * source_size * cfg.simulations;
  std::deque<PartialFormula> queue;
  queue.emplace_back();
  long long expansions = 0;
  while (!queue.empty() && expansions < expansion_budget) {
    PartialFormula p = std::move(queue.front());
    queue.pop_front();
    ++expansions;
    uint32_t mask = legal_next_tokens(p, token_budget - p.length());
    while (mask) {
      const int t = __builtin_ctz(mask);
      mask &= mask - 1;
      PartialFormula c = p.child(static_cast<uint8_t>(t));
      if (c.complete()) {
        if (reward(c, target, cfg.bounds) == 1) {
          out.solved = true;
          out.solution = c.tokens();
          return out;
        }
      } else {
        queue.push_back(std::move(c));
      }
    }
  }
  return out;
}

}  // namespace synth
