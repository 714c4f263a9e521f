// cwb - causal workbench command line
//
// Subcommands:
//   gen     emit graph / ground-truth SCM files
//   run     run a discovery experiment from a config file
//   probe   informative-target probe (belief pinned to truth, edges held
//           undirected, AIT score histogram)
//   plot    render SVG plots from a result directory
//   verify  recompute aggregate statistics from raw CSVs and diff

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causal/experiment.hpp"
#include "causal/network_io.hpp"
#include "causal/plots.hpp"

namespace fs = std::filesystem;
using namespace causal;

namespace {

struct CommonOverrides {
  std::string out;
  std::string strategy;
  std::string allowed_targets;
  std::vector<std::uint64_t> seeds;
  double eta = -1.0;
  int budget = -1;
  bool paper_scale = false;
};

void apply_overrides(ConfigMap& map, const CommonOverrides& o) {
  if (!o.out.empty()) set_config_key(map, "out", o.out);
  if (!o.strategy.empty()) set_config_key(map, "strategy", o.strategy);
  if (!o.allowed_targets.empty()) set_config_key(map, "allowed_targets", o.allowed_targets);
  if (!o.seeds.empty()) {
    std::string s;
    for (std::size_t i = 0; i < o.seeds.size(); ++i)
      s += (i ? " " : "") + std::to_string(o.seeds[i]);
    set_config_key(map, "seeds", s);
  }
  if (o.eta >= 0.0) set_config_key(map, "eta", csv_double(o.eta));
  if (o.budget >= 0) set_config_key(map, "budget", std::to_string(o.budget));
  if (o.paper_scale) set_config_key(map, "paper_scale", "1");
}

int cmd_gen(const std::string& graph_spec, int n, int er_k, std::uint64_t seed,
            const std::string& out_dir, bool emit_scm, int m, int hidden) {
  fs::create_directories(out_dir);
  Dag dag;
  if (graph_spec == "er") {
    Rng rng = make_rng(derive_seed(seed, "graph"));
    dag = erdos_renyi(n, er_k, rng);
  } else {
    dag = structured_graph(graph_kind_from_string(graph_spec), n);
  }
  {
    std::ofstream f(fs::path(out_dir) / "dag.txt");
    write_dag(f, dag);
  }
  {
    std::ofstream f(fs::path(out_dir) / "adjacency.csv");
    write_adjacency_csv(f, dag);
  }
  std::cout << "wrote " << (fs::path(out_dir) / "dag.txt").string() << " ("
            << dag.edge_count() << " edges)\n";
  if (emit_scm) {
    Rng rng = make_rng(derive_seed(seed, "scm"));
    GroundTruthScm scm = init_mlp_scm(dag, m, hidden, rng);
    const std::string net_path = (fs::path(out_dir) / "network.net").string();
    save_discrete_network(net_path, tabulate(scm));
    std::cout << "wrote " << net_path << "\n";
  }
  return 0;
}

int cmd_run(const std::string& config_path, const CommonOverrides& overrides) {
  ConfigMap map = load_config_map(config_path);
  apply_overrides(map, overrides);
  ExperimentConfig cfg = experiment_from_map(map);
  std::cout << "running " << cfg.graph.describe() << " strategy=" << to_string(cfg.strategy)
            << " seeds=" << cfg.seeds.size() << " budget=" << cfg.budget << " eta=" << cfg.eta
            << "\n";
  AggregateResult agg = run_experiment(cfg);
  for (const SeedResult& s : agg.seeds) {
    std::cout << "  seed " << s.seed << ": "
              << (s.ok ? "final shd " + std::to_string(s.final_shd) + ", rounds " +
                             std::to_string(s.rounds_run)
                       : "FAILED (" + s.error + ")")
              << "\n";
  }
  std::cout << "mean final shd " << agg.mean_final_shd << " (+- " << agg.std_final_shd
            << "), median rounds-to-zero " << agg.rounds_to_zero_q50 << "\n";
  std::cout << "artifacts in " << cfg.out_dir << "\n";
  return agg.partial ? 2 : 0;
}

int cmd_probe(const std::string& config_path, const CommonOverrides& overrides) {
  ConfigMap map = load_config_map(config_path);
  apply_overrides(map, overrides);
  ExperimentConfig cfg = experiment_from_map(map);
  if (cfg.seeds.empty()) throw std::runtime_error("probe: need a seed");
  GroundTruthScm truth = build_ground_truth(cfg, cfg.seeds.front());
  Rng rng = make_rng(derive_seed(cfg.seeds.front(), "probe"));
  ProbeResult pr = informative_target_probe(truth, cfg.probe_pairs, cfg.train, cfg.probe_reps, rng);
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "probe.csv");
    write_probe_csv(f, pr);
  }
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config_echo.cfg");
    echo << canonical_config(cfg);
  }
  std::cout << "probe over " << pr.repetitions << " repetitions:\n";
  for (std::size_t k = 0; k < pr.targets.size(); ++k)
    std::cout << "  target " << pr.targets[k].label() << ": top " << pr.top_counts[k]
              << " times, mean D " << pr.mean_score[k] << "\n";
  std::cout << "artifacts in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_plot(const std::string& dir) {
  for (const std::string& f : emit_plots(dir)) std::cout << "wrote " << f << "\n";
  return 0;
}

int cmd_verify(const std::string& dir) {
  VerifyReport report = verify_aggregates(dir);
  if (report.ok()) {
    std::cout << "verify: all aggregate statistics match the raw per-seed data\n";
    return 0;
  }
  for (const std::string& m : report.mismatches) std::cout << "verify: MISMATCH " << m << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal workbench: active causal structure discovery on discrete data"};
  app.require_subcommand(1);

  // gen
  std::string gen_graph = "chain";
  int gen_n = 5, gen_er_k = 1, gen_m = 2, gen_hidden = 32;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "generated";
  bool gen_scm = false;
  auto* gen = app.add_subcommand("gen", "emit graph / SCM files");
  gen->add_option("--graph", gen_graph, "chain|collider|tree|bidiag|jungle|full|er");
  gen->add_option("--n", gen_n, "node count");
  gen->add_option("--er-k", gen_er_k, "edges-per-node density for er graphs");
  gen->add_option("--seed", gen_seed, "seed for er graphs and SCM weights");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_flag("--emit-scm", gen_scm, "also tabulate an MLP ground truth into network.net");
  gen->add_option("--m", gen_m, "category count");
  gen->add_option("--hidden", gen_hidden, "ground-truth MLP width");

  // shared run/probe options
  auto add_common = [](CLI::App* cmd, std::string& config, CommonOverrides& o) {
    cmd->add_option("--config", config, "experiment config file")->required();
    cmd->add_option("--out", o.out, "override output directory");
    cmd->add_option("--strategy", o.strategy, "override strategy: ait|random|round_robin");
    cmd->add_option("--allowed-targets", o.allowed_targets, "override target set, e.g. 0,2,3");
    cmd->add_option("--seed", o.seeds, "override seed list");
    cmd->add_option("--eta", o.eta, "override noise level");
    cmd->add_option("--budget", o.budget, "override round budget");
    cmd->add_flag("--paper-scale", o.paper_scale, "restore full paper-scale hyperparameters");
  };

  std::string run_config;
  CommonOverrides run_overrides;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  add_common(run, run_config, run_overrides);

  std::string probe_config;
  CommonOverrides probe_overrides;
  auto* probe = app.add_subcommand("probe", "informative-target probe");
  add_common(probe, probe_config, probe_overrides);

  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "render SVG plots from result CSVs");
  plot->add_option("--dir", plot_dir, "result directory")->required();

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "recompute aggregates and diff");
  verify->add_option("--dir", verify_dir, "result directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_graph, gen_n, gen_er_k, gen_seed, gen_out, gen_scm,
                                      gen_m, gen_hidden);
    if (run->parsed()) return cmd_run(run_config, run_overrides);
    if (probe->parsed()) return cmd_probe(probe_config, probe_overrides);
    if (plot->parsed()) return cmd_plot(plot_dir);
    if (verify->parsed()) return cmd_verify(verify_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
