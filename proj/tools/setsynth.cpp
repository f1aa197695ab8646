// setsynth: dataset generation, curriculum training, evaluation and
// single-graph synthesis for bounded-quantifier set formulas.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "synth/config.hpp"
#include "synth/enumerate.hpp"
#include "synth/formula.hpp"
#include "synth/mcts.hpp"
#include "synth/rl_loop.hpp"
#include "synth/tnn.hpp"

namespace fs = std::filesystem;
using namespace synth;

namespace {

// Published histogram for the max_size=15 run, sizes 3..15. Printed for
// side-by-side comparison only; the counts are not asserted anywhere.
constexpr int kReferenceHist[13] = {6,   8,   22,  60,  88,  260, 472,
                                    960, 638, 992, 1582, 1056, 606};

int cmd_gen_dataset(const std::string& out_path, int max_size, uint64_t max_bits,
                    uint64_t max_iter, uint64_t fuel, int threads,
                    const std::string& report_path) {
  EvalBounds b;
  b.max_bits = max_bits;
  b.max_iter = max_iter;
  b.fuel = fuel;
  std::cerr << "enumerating formulas up to size " << max_size << " with "
            << threads << " thread(s)...\n";
  Dataset d = build_dataset(max_size, b, threads);
  save_dataset(d, out_path);
  std::cerr << "wrote " << d.entries.size() << " entries to " << out_path << "\n";

  auto hist = size_histogram(d);
  std::ostringstream report;
  report << "size histogram (distinct graphs by representative size)\n";
  report << "size\tcount\treference\n";
  uint64_t total = 0, ref_total = 0;
  for (int s = 3; s <= std::max(max_size, 15); ++s) {
    const auto it = hist.find(s);
    const uint64_t count = it == hist.end() ? 0 : it->second;
    total += count;
    report << s << "\t" << count << "\t";
    if (s >= 3 && s <= 15) {
      report << kReferenceHist[s - 3];
      ref_total += kReferenceHist[s - 3];
    } else {
      report << "-";
    }
    report << "\n";
  }
  report << "total\t" << total << "\t" << ref_total << "\n";
  report << "raw formulas enumerated: " << d.raw_count << "\n";
  report << "omitted (undefined under bounds max_bits=" << b.max_bits
         << " max_iter=" << b.max_iter << " fuel=" << b.fuel
         << "): " << d.omitted_count << "\n";
  report << "reference column: published counts for max_size 15; "
            "shown for comparison, not asserted\n";

  std::cerr << report.str();
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    f << report.str();
    if (!f) {
      std::cerr << "error: failed to write report to " << report_path << "\n";
      return 1;
    }
  }
  return 0;
}

int cmd_train(const std::string& config_path, bool resume) {
  RunConfig cfg = load_config(config_path);
  require_keys(cfg, {"dataset", "out_dir", "generations"});
  if (cfg.generations <= 0) throw ConfigError("generations must be positive");

  Dataset d = load_dataset(cfg.dataset);
  Curriculum c = partition_levels(d, cfg.level_size);
  std::cerr << "dataset: " << d.entries.size() << " problems in "
            << c.levels.size() << " level(s)\n";

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create out_dir " + cfg.out_dir);
  save_config(cfg, (fs::path(cfg.out_dir) / "resolved.cfg").string());

  const int latest = find_latest_checkpoint(cfg.out_dir);
  if (latest >= 0 && !resume)
    throw std::runtime_error("out_dir has checkpoints; pass --resume to continue");
  if (resume && latest < 0)
    std::cerr << "no checkpoint found; starting from scratch\n";
  if (latest >= 0)
    std::cerr << "resuming after generation " << latest << "\n";

  TnnParams init = TnnParams::random_init(cfg.seed);
  RlConfig rl = to_rl_config(cfg);
  RunResult res = run(c, init, rl);
  std::cerr << "finished " << res.metrics.size() << " generation(s); last solved "
            << (res.metrics.empty() ? 0 : res.metrics.back().solved_any) << "/"
            << (res.metrics.empty() ? 0 : res.metrics.back().attempted) << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset_path,
             std::vector<int> levels, const std::string& mode_str,
             const std::string& config_path, const std::string& out_csv) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  EvalMode mode;
  if (mode_str == "guided") mode = EvalMode::Guided;
  else if (mode_str == "hidden-graph") mode = EvalMode::HiddenGraph;
  else if (mode_str == "breadth-first") mode = EvalMode::BreadthFirst;
  else throw CLI::ValidationError("--mode", "must be guided|hidden-graph|breadth-first");

  Dataset d = load_dataset(dataset_path);
  Curriculum c = partition_levels(d, cfg.level_size);
  if (levels.empty())
    for (size_t i = 1; i <= c.levels.size(); ++i) levels.push_back(static_cast<int>(i));

  TnnParams params = mode == EvalMode::BreadthFirst ? TnnParams()
                                                    : load_params(checkpoint);
  RlConfig rl = to_rl_config(cfg);
  auto results = evaluate(params, c, levels, mode, rl);

  std::ostringstream csv;
  csv << "level,mode,attempted,solved_final,solved_any\n";
  for (const EvalLevelResult& r : results) {
    csv << r.level << ',' << mode_str << ',' << r.attempted << ','
        << r.solved_final << ',' << r.solved_any << "\n";
    std::cerr << "level " << r.level << " (" << mode_str << "): solved "
              << r.solved_any << "/" << r.attempted << " (final " << r.solved_final
              << ")\n";
  }
  if (!out_csv.empty()) {
    std::ofstream f(out_csv);
    f << csv.str();
    if (!f) throw std::runtime_error("failed to write " + out_csv);
  } else {
    std::cout << csv.str();
  }
  return 0;
}

int cmd_synth(const std::string& checkpoint, const std::string& graph_hex,
              int size_budget, const std::string& config_path, bool hidden) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  const auto graph = graph_from_hex(graph_hex);
  if (!graph) throw CLI::ValidationError("graph", "expected 16 hex digits");

  TnnParams params = load_params(checkpoint);
  RlConfig rl = to_rl_config(cfg);
  AttemptConfig ac = rl.attempt;
  ac.seed = mix64(cfg.seed, 0, *graph);
  std::cerr << "searching for graph " << graph_to_hex(*graph) << " with budget "
            << ac.bigstep_factor * size_budget << " tokens...\n";
  AttemptResult res = attempt(*graph, size_budget, params, ac, /*noise=*/false, hidden);
  if (!res.solution) {
    std::cout << "no solution found for graph " << graph_to_hex(*graph) << "\n";
    return 2;  // distinct from usage/config errors
  }
  // Independent re-verification before reporting.
  PartialFormula p;
  for (uint8_t t : *res.solution) p.append(t);
  const auto check = compute_graph(*p.to_formula(), rl.attempt.bounds);
  if (!check || *check != *graph) {
    std::cerr << "internal error: solution failed re-verification\n";
    return 1;
  }
  std::cout << "graph:   " << graph_to_hex(*graph) << "\n";
  std::cout << "prefix:  " << tokens_to_text(*res.solution) << "\n";
  std::cout << "pretty:  " << pretty(*p.to_formula()) << "\n";
  std::cout << "size:    " << res.solution->size() << "\n";
  return 0;
}

int cmd_stats(const std::string& dataset_path) {
  Dataset d = load_dataset(dataset_path);
  auto hist = size_histogram(d);
  std::cout << "entries: " << d.entries.size() << "\n";
  std::cout << "max_size: " << d.max_size << "\n";
  std::cout << "raw: " << d.raw_count << "\n";
  std::cout << "omitted: " << d.omitted_count << "\n";
  std::cout << "bounds: max_bits=" << d.bounds.max_bits
            << " max_iter=" << d.bounds.max_iter << " fuel=" << d.bounds.fuel
            << "\n";
  for (const auto& [size, count] : hist)
    std::cout << "size " << size << ": " << count << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded-quantifier set-formula synthesis"};
  app.require_subcommand(1);

  // gen-dataset
  std::string gd_out = "dataset.tsv", gd_report;
  int gd_max_size = 15, gd_threads = 1;
  uint64_t gd_max_bits = 65536, gd_max_iter = 65536, gd_fuel = 1000000;
  auto* gd = app.add_subcommand("gen-dataset", "enumerate and deduplicate formulas");
  gd->add_option("--max-size", gd_max_size, "maximum formula size")
      ->check(CLI::Range(3, 64));
  gd->add_option("--out", gd_out, "output TSV path");
  gd->add_option("--report", gd_report, "also write the comparison report here");
  gd->add_option("--threads", gd_threads)->check(CLI::PositiveNumber);
  gd->add_option("--max-bits", gd_max_bits);
  gd->add_option("--max-iter", gd_max_iter);
  gd->add_option("--fuel", gd_fuel);

  // train
  std::string tr_config;
  bool tr_resume = false;
  auto* tr = app.add_subcommand("train", "run the curriculum RL loop");
  tr->add_option("--config", tr_config, "key=value config file")->required();
  tr->add_flag("--resume", tr_resume, "continue from the latest checkpoint");

  // eval
  std::string ev_checkpoint, ev_dataset, ev_mode = "guided", ev_config, ev_csv;
  std::vector<int> ev_levels;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on dataset levels");
  ev->add_option("--checkpoint", ev_checkpoint, "params.bin path");
  ev->add_option("--dataset", ev_dataset)->required();
  ev->add_option("--levels", ev_levels, "1-based levels (default: all)");
  ev->add_option("--mode", ev_mode, "guided|hidden-graph|breadth-first");
  ev->add_option("--config", ev_config);
  ev->add_option("--out", ev_csv, "CSV output path (default: stdout)");

  // synth
  std::string sy_checkpoint, sy_graph, sy_config;
  int sy_size = 15;
  bool sy_hidden = false;
  auto* sy = app.add_subcommand("synth", "synthesize one formula for a graph");
  sy->add_option("--checkpoint", sy_checkpoint)->required();
  sy->add_option("graph", sy_graph, "target graph, 16 hex digits")->required();
  sy->add_option("--size-budget", sy_size, "source-size proxy; token budget is 2x")
      ->check(CLI::Range(3, 64));
  sy->add_option("--config", sy_config);
  sy->add_flag("--hidden", sy_hidden, "blind the network to the target graph");

  // stats
  std::string st_dataset;
  auto* st = app.add_subcommand("stats", "print dataset statistics");
  st->add_option("dataset", st_dataset)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gd->parsed())
      return cmd_gen_dataset(gd_out, gd_max_size, gd_max_bits, gd_max_iter, gd_fuel,
                             gd_threads, gd_report);
    if (tr->parsed()) return cmd_train(tr_config, tr_resume);
    if (ev->parsed())
      return cmd_eval(ev_checkpoint, ev_dataset, ev_levels, ev_mode, ev_config, ev_csv);
    if (sy->parsed())
      return cmd_synth(sy_checkpoint, sy_graph, sy_size, sy_config, sy_hidden);
    if (st->parsed()) return cmd_stats(st_dataset);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
