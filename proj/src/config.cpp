#include "synth/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace synth {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_num(const std::string& key, const std::string& val) {
  std::stringstream ss(val);
  T out;
  ss >> out;
  if (ss.fail() || !ss.eof())
    throw ConfigError("bad value for key '" + key + "': " + val);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  Setter set;
  Getter get;
};

template <typename T>
Key num_key(T RunConfig::* field) {
  return {[field](RunConfig& c, const std::string& k, const std::string& v) {
            c.*field = parse_num<T>(k, v);
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_same_v<T, double>) return fmt_double(c.*field);
            else return std::to_string(c.*field);
          }};
}

Key str_key(std::string RunConfig::* field) {
  return {[field](RunConfig& c, const std::string&, const std::string& v) {
            c.*field = v;
          },
          [field](const RunConfig& c) { return c.*field; }};
}

// std::map: the resolved file lists keys in a stable sorted order.
const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = {
      {"max_bits", num_key(&RunConfig::max_bits)},
      {"max_iter", num_key(&RunConfig::max_iter)},
      {"fuel", num_key(&RunConfig::fuel)},
      {"max_size", num_key(&RunConfig::max_size)},
      {"simulations", num_key(&RunConfig::simulations)},
      {"bigstep_factor", num_key(&RunConfig::bigstep_factor)},
      {"c_puct", num_key(&RunConfig::c_puct)},
      {"dirichlet_alpha", num_key(&RunConfig::dirichlet_alpha)},
      {"noise_eps", num_key(&RunConfig::noise_eps)},
      {"embed_dim", num_key(&RunConfig::embed_dim)},
      {"epochs", num_key(&RunConfig::epochs)},
      {"batch_size", num_key(&RunConfig::batch_size)},
      {"lr", num_key(&RunConfig::lr)},
      {"beta1", num_key(&RunConfig::beta1)},
      {"beta2", num_key(&RunConfig::beta2)},
      {"adam_eps", num_key(&RunConfig::adam_eps)},
      {"buffer_capacity", num_key(&RunConfig::buffer_capacity)},
      {"level_size", num_key(&RunConfig::level_size)},
      {"explore_count", num_key(&RunConfig::explore_count)},
      {"generations", num_key(&RunConfig::generations)},
      {"seed", num_key(&RunConfig::seed)},
      {"threads", num_key(&RunConfig::threads)},
      {"dataset", str_key(&RunConfig::dataset)},
      {"out_dir", str_key(&RunConfig::out_dir)},
  };
  return table;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = key_table().find(key);
    if (it == key_table().end())
      throw ConfigError("unknown config key '" + key + "'");
    it->second.set(cfg, key, val);
  }
  if (cfg.embed_dim != kEmbedDim)
    throw ConfigError("embed_dim must be " + std::to_string(kEmbedDim) +
                      " (the graph-embedding concat fixes the block width)");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  for (const auto& [key, entry] : key_table())
    f << key << "=" << entry.get(cfg) << "\n";
  if (!f) throw ConfigError("failed to write resolved config: " + path);
}

void require_keys(const RunConfig& cfg, const std::vector<std::string>& keys) {
  for (const std::string& k : keys) {
    const auto it = key_table().find(k);
    if (it == key_table().end()) throw ConfigError("unknown config key '" + k + "'");
    if (it->second.get(cfg).empty())
      throw ConfigError("missing required config key '" + k + "'");
  }
}

EvalBounds to_bounds(const RunConfig& cfg) {
  EvalBounds b;
  b.max_bits = cfg.max_bits;
  b.max_iter = cfg.max_iter;
  b.fuel = cfg.fuel;
  return b;
}

RlConfig to_rl_config(const RunConfig& cfg) {
  RlConfig r;
  r.attempt.simulations = cfg.simulations;
  r.attempt.bigstep_factor = cfg.bigstep_factor;
  r.attempt.c_puct = cfg.c_puct;
  r.attempt.dirichlet_alpha = cfg.dirichlet_alpha;
  r.attempt.noise_eps = cfg.noise_eps;
  r.attempt.bounds = to_bounds(cfg);
  r.attempt.seed = cfg.seed;
  r.train.epochs = cfg.epochs;
  r.train.batch_size = cfg.batch_size;
  r.train.lr = cfg.lr;
  r.train.beta1 = cfg.beta1;
  r.train.beta2 = cfg.beta2;
  r.train.adam_eps = cfg.adam_eps;
  r.train.buffer_capacity = cfg.buffer_capacity;
  r.level_size = cfg.level_size;
  r.explore_count = cfg.explore_count;
  r.generations = cfg.generations;
  r.seed = cfg.seed;
  r.threads = cfg.threads;
  r.out_dir = cfg.out_dir;
  return r;
}

}  // namespace synth
