#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "causal/checkpoint.hpp"
#include "causal/csv.hpp"
#include "causal/graph.hpp"
#include "causal/network_io.hpp"
#include "causal/rng.hpp"
#include "causal/scm.hpp"
#include "causal/sdi.hpp"

namespace causal {

// ---------------------------------------------------------------------------
// Experiment configuration: a flat key-value text file with a schema version.
// ---------------------------------------------------------------------------

struct GraphSpec {
  enum class Kind { structured, er, file };
  Kind kind = Kind::structured;
  GraphKind structured_kind = GraphKind::chain;
  int n = 0;
  int er_density = 1;
  std::string path;

  std::string describe() const {
    switch (kind) {
      case Kind::structured: return to_string(structured_kind) + " " + std::to_string(n);
      case Kind::er: return "er " + std::to_string(n) + " " + std::to_string(er_density);
      case Kind::file: return "file " + path;
    }
    throw std::logic_error("unreachable");
  }
};

struct ExperimentConfig {
  int schema = 1;
  GraphSpec graph;
  int m = 2;
  int gt_hidden = 32;
  double eta = 0.0;
  StrategyKind strategy = StrategyKind::random;
  std::vector<int> allowed_targets;  // empty = all single nodes
  std::vector<int> sequence;         // fixed_sequence only
  int budget = 100;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "results/run";
  bool paper_scale = false;
  TrainConfig train;
  // informative-target probe settings
  std::vector<std::pair<int, int>> probe_pairs;
  int probe_reps = 50;
};

using ConfigMap = std::vector<std::pair<std::string, std::string>>;

inline ConfigMap load_config_map(std::istream& is, const std::string& name = "<stream>") {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string rest;
    std::getline(ls, rest);
    const auto first = rest.find_first_not_of(" \t\r");
    rest = first == std::string::npos ? "" : rest.substr(first);
    const auto last = rest.find_last_not_of(" \t\r");
    if (last != std::string::npos) rest = rest.substr(0, last + 1);
    if (rest.empty())
      throw std::runtime_error(name + ":" + std::to_string(lineno) + ": key '" + key +
                               "' has no value");
    out.emplace_back(key, rest);
  }
  return out;
}

inline ConfigMap load_config_map(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  return load_config_map(f, path);
}

// Replaces an existing key or appends; used for CLI flag overrides.
inline void set_config_key(ConfigMap& map, const std::string& key, const std::string& value) {
  for (auto& [k, v] : map) {
    if (k == key) {
      v = value;
      return;
    }
  }
  map.emplace_back(key, value);
}

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    try {
      out.push_back(std::stoi(cur));
    } catch (const std::exception&) {
      throw std::runtime_error("bad " + what + " entry: '" + cur + "'");
    }
    cur.clear();
  };
  for (char c : s) {
    if (c == ',' || c == ' ')
      flush();
    else
      cur += c;
  }
  flush();
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "0" || v == "false") return false;
  if (v == "1" || v == "true") return true;
  throw std::runtime_error("key '" + key + "' expects 0/1, got '" + v + "'");
}

}  // namespace detail

inline ExperimentConfig experiment_from_map(const ConfigMap& map) {
  ExperimentConfig cfg;
  bool have_graph = false;
  ConfigMap train_overrides;

  for (const auto& [key, value] : map) {
    std::istringstream vs(value);
    if (key == "schema") {
      vs >> cfg.schema;
      if (cfg.schema != 1) throw std::runtime_error("unsupported config schema " + value);
    } else if (key == "graph") {
      std::string kind;
      vs >> kind;
      if (kind == "er") {
        cfg.graph.kind = GraphSpec::Kind::er;
        if (!(vs >> cfg.graph.n >> cfg.graph.er_density))
          throw std::runtime_error("graph er expects '<n> <k>'");
      } else if (kind == "file") {
        cfg.graph.kind = GraphSpec::Kind::file;
        if (!(vs >> cfg.graph.path)) throw std::runtime_error("graph file expects a path");
      } else {
        cfg.graph.kind = GraphSpec::Kind::structured;
        cfg.graph.structured_kind = graph_kind_from_string(kind);
        if (!(vs >> cfg.graph.n)) throw std::runtime_error("graph " + kind + " expects '<n>'");
      }
      have_graph = true;
    } else if (key == "m") {
      vs >> cfg.m;
    } else if (key == "gt_hidden") {
      vs >> cfg.gt_hidden;
    } else if (key == "eta") {
      vs >> cfg.eta;
    } else if (key == "strategy") {
      cfg.strategy = strategy_from_string(value);
    } else if (key == "allowed_targets") {
      cfg.allowed_targets = detail::parse_int_list(value, "allowed_targets");
    } else if (key == "sequence") {
      cfg.sequence = detail::parse_int_list(value, "sequence");
    } else if (key == "budget") {
      vs >> cfg.budget;
    } else if (key == "seeds") {
      cfg.seeds.clear();
      std::uint64_t s;
      while (vs >> s) cfg.seeds.push_back(s);
      if (cfg.seeds.empty()) throw std::runtime_error("seeds: need at least one seed");
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "paper_scale") {
      cfg.paper_scale = detail::parse_bool(value, key);
    } else if (key == "probe_pairs") {
      cfg.probe_pairs.clear();
      std::string tok;
      while (vs >> tok) {
        const auto dash = tok.find('-');
        if (dash == std::string::npos)
          throw std::runtime_error("probe_pairs entries look like 'a-b', got '" + tok + "'");
        cfg.probe_pairs.emplace_back(std::stoi(tok.substr(0, dash)),
                                     std::stoi(tok.substr(dash + 1)));
      }
    } else if (key == "probe_reps") {
      vs >> cfg.probe_reps;
    } else {
      train_overrides.emplace_back(key, value);
    }
  }
  if (!have_graph) throw std::runtime_error("config is missing the 'graph' key");
  {
    std::sort(cfg.seeds.begin(), cfg.seeds.end());
    auto dup = std::adjacent_find(cfg.seeds.begin(), cfg.seeds.end());
    if (dup != cfg.seeds.end()) throw std::runtime_error("seeds must be distinct");
  }

  int n_hint = cfg.graph.n;
  if (cfg.graph.kind == GraphSpec::Kind::file && cfg.paper_scale) {
    // the size-dependent paper-scale defaults need the node count up front
    std::ifstream f(cfg.graph.path);
    if (!f) throw std::runtime_error("paper_scale with a file graph needs a readable network: " +
                                     cfg.graph.path);
    std::string tok, nspec;
    f >> tok >> nspec;
    if (tok != "net" || nspec.rfind("n=", 0) != 0)
      throw std::runtime_error(cfg.graph.path + ": expected 'net n=<N> m=<M>' header");
    n_hint = std::stoi(nspec.substr(2));
  }
  cfg.train = cfg.paper_scale ? paper_scale_config(std::max(n_hint, 2)) : TrainConfig{};

  for (const auto& [key, value] : train_overrides) {
    std::istringstream vs(value);
    TrainConfig& t = cfg.train;
    if (key == "functional_iters") vs >> t.functional_iters;
    else if (key == "batch_size") vs >> t.batch_size;
    else if (key == "functional_lr") vs >> t.functional_lr;
    else if (key == "learner_hidden") vs >> t.learner_hidden;
    else if (key == "sparsity_coeff") vs >> t.sparsity_coeff;
    else if (key == "dag_coeff") vs >> t.dag_coeff;
    else if (key == "interventions_per_phase2") vs >> t.interventions_per_phase2;
    else if (key == "scoring_batches") vs >> t.scoring_batches;
    else if (key == "scoring_graphs") vs >> t.scoring_graphs;
    else if (key == "structural_lr") vs >> t.structural_lr;
    else if (key == "sampler_temperature") vs >> t.sampler_temperature;
    else if (key == "edge_threshold") vs >> t.edge_threshold;
    else if (key == "intervention_sample_limit") vs >> t.samples_per_intervention_limit;
    else if (key == "ait_graphs") vs >> t.ait.graphs_count;
    else if (key == "ait_samples") vs >> t.ait.samples_per_graph;
    else if (key == "ait_vwg_floor") vs >> t.ait.vwg_floor;
    else if (key == "stop_at_zero_shd") t.stop_at_zero_shd = detail::parse_bool(value, key);
    else if (key == "plateau_patience") vs >> t.plateau_patience;
    else if (key == "record_edge_dynamics") t.record_edge_dynamics = detail::parse_bool(value, key);
    else throw std::runtime_error("unknown config key '" + key + "'");
    if (vs.fail()) throw std::runtime_error("bad value for config key '" + key + "'");
  }
  cfg.train.ait.temperature = cfg.train.sampler_temperature;
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_from_map(load_config_map(path));
}

// Canonical echo of a resolved config; also the basis of the config hash
// stamped into checkpoints.
inline std::string canonical_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "schema " << cfg.schema << "\n";
  os << "graph " << cfg.graph.describe() << "\n";
  os << "m " << cfg.m << "\n";
  os << "gt_hidden " << cfg.gt_hidden << "\n";
  os << "eta " << csv_double(cfg.eta) << "\n";
  os << "strategy " << to_string(cfg.strategy) << "\n";
  if (!cfg.allowed_targets.empty()) {
    os << "allowed_targets";
    for (std::size_t i = 0; i < cfg.allowed_targets.size(); ++i)
      os << (i ? "," : " ") << cfg.allowed_targets[i];
    os << "\n";
  }
  if (!cfg.sequence.empty()) {
    os << "sequence";
    for (std::size_t i = 0; i < cfg.sequence.size(); ++i) os << (i ? "," : " ") << cfg.sequence[i];
    os << "\n";
  }
  os << "budget " << cfg.budget << "\n";
  os << "seeds";
  for (auto s : cfg.seeds) os << " " << s;
  os << "\n";
  os << "out " << cfg.out_dir << "\n";
  os << "paper_scale " << (cfg.paper_scale ? 1 : 0) << "\n";
  const TrainConfig& t = cfg.train;
  os << "functional_iters " << t.functional_iters << "\n";
  os << "batch_size " << t.batch_size << "\n";
  os << "functional_lr " << csv_double(t.functional_lr) << "\n";
  os << "learner_hidden " << t.learner_hidden << "\n";
  os << "sparsity_coeff " << csv_double(t.sparsity_coeff) << "\n";
  os << "dag_coeff " << csv_double(t.dag_coeff) << "\n";
  os << "interventions_per_phase2 " << t.interventions_per_phase2 << "\n";
  os << "scoring_batches " << t.scoring_batches << "\n";
  os << "scoring_graphs " << t.scoring_graphs << "\n";
  os << "structural_lr " << csv_double(t.structural_lr) << "\n";
  os << "sampler_temperature " << csv_double(t.sampler_temperature) << "\n";
  os << "edge_threshold " << csv_double(t.edge_threshold) << "\n";
  os << "intervention_sample_limit " << t.samples_per_intervention_limit << "\n";
  os << "ait_graphs " << t.ait.graphs_count << "\n";
  os << "ait_samples " << t.ait.samples_per_graph << "\n";
  os << "ait_vwg_floor " << csv_double(t.ait.vwg_floor) << "\n";
  os << "stop_at_zero_shd " << (t.stop_at_zero_shd ? 1 : 0) << "\n";
  os << "plateau_patience " << t.plateau_patience << "\n";
  os << "record_edge_dynamics " << (t.record_edge_dynamics ? 1 : 0) << "\n";
  if (!cfg.probe_pairs.empty()) {
    os << "probe_pairs";
    for (auto [a, b] : cfg.probe_pairs) os << " " << a << "-" << b;
    os << "\n";
    os << "probe_reps " << cfg.probe_reps << "\n";
  }
  return os.str();
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Per-seed environment construction
// ---------------------------------------------------------------------------

inline GroundTruthScm build_ground_truth(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.graph.kind) {
    case GraphSpec::Kind::structured: {
      Rng scm_rng = make_rng(derive_seed(seed, "scm"));
      return init_mlp_scm(structured_graph(cfg.graph.structured_kind, cfg.graph.n), cfg.m,
                          cfg.gt_hidden, scm_rng);
    }
    case GraphSpec::Kind::er: {
      Rng graph_rng = make_rng(derive_seed(seed, "graph"));
      Dag dag = erdos_renyi(cfg.graph.n, cfg.graph.er_density, graph_rng);
      Rng scm_rng = make_rng(derive_seed(seed, "scm"));
      return init_mlp_scm(dag, cfg.m, cfg.gt_hidden, scm_rng);
    }
    case GraphSpec::Kind::file:
      return load_discrete_network(cfg.graph.path);
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Result aggregation
// ---------------------------------------------------------------------------

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int final_shd = -1;
  int rounds_run = 0;
  long rounds_to_zero = -1;  // -1 = never reached SHD 0
  std::size_t interventional_samples = 0;
  std::vector<int> selection_counts;
  std::optional<double> corr_out_degree;
  std::optional<double> corr_descendants;
};

struct AggregateResult {
  std::vector<SeedResult> seeds;
  double mean_final_shd = 0.0;
  double std_final_shd = 0.0;
  // quantiles of rounds-to-zero with never-converged runs counted as budget+1
  double rounds_to_zero_q0 = 0.0, rounds_to_zero_q50 = 0.0, rounds_to_zero_q100 = 0.0;
  std::vector<long> selection_histogram;  // summed over seeds
  std::optional<double> mean_corr_out_degree;
  std::optional<double> mean_corr_descendants;
  bool partial = false;  // true when any seed failed

  double median_rounds_to_zero() const { return rounds_to_zero_q50; }
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline AggregateResult aggregate_results(std::vector<SeedResult> seeds, int budget, int n_nodes) {
  AggregateResult agg;
  agg.seeds = std::move(seeds);
  agg.selection_histogram.assign(n_nodes, 0);
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> rounds;
  double corr_out_sum = 0.0, corr_desc_sum = 0.0;
  int corr_out_n = 0, corr_desc_n = 0, ok_count = 0;
  for (const SeedResult& s : agg.seeds) {
    if (!s.ok) {
      agg.partial = true;
      continue;
    }
    ++ok_count;
    sum += s.final_shd;
    sum2 += static_cast<double>(s.final_shd) * s.final_shd;
    rounds.push_back(s.rounds_to_zero >= 0 ? static_cast<double>(s.rounds_to_zero)
                                           : static_cast<double>(budget + 1));
    for (std::size_t i = 0; i < s.selection_counts.size() && i < agg.selection_histogram.size(); ++i)
      agg.selection_histogram[i] += s.selection_counts[i];
    if (s.corr_out_degree) {
      corr_out_sum += *s.corr_out_degree;
      ++corr_out_n;
    }
    if (s.corr_descendants) {
      corr_desc_sum += *s.corr_descendants;
      ++corr_desc_n;
    }
  }
  if (ok_count > 0) {
    agg.mean_final_shd = sum / ok_count;
    const double var = std::max(0.0, sum2 / ok_count - agg.mean_final_shd * agg.mean_final_shd);
    agg.std_final_shd = std::sqrt(var);
    std::sort(rounds.begin(), rounds.end());
    agg.rounds_to_zero_q0 = detail::quantile_sorted(rounds, 0.0);
    agg.rounds_to_zero_q50 = detail::quantile_sorted(rounds, 0.5);
    agg.rounds_to_zero_q100 = detail::quantile_sorted(rounds, 1.0);
  }
  if (corr_out_n > 0) agg.mean_corr_out_degree = corr_out_sum / corr_out_n;
  if (corr_desc_n > 0) agg.mean_corr_descendants = corr_desc_sum / corr_desc_n;
  return agg;
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

namespace detail {

inline void write_history_csv(std::ostream& os, const RunHistory& h) {
  os << "round,intervention,target,shd,samples_used\n";
  for (const RoundRecord& r : h.rounds)
    os << r.round << "," << r.intervention << "," << r.target.label() << "," << r.shd << ","
       << r.samples_used << "\n";
}

inline void write_edge_dynamics_csv(std::ostream& os, const RunHistory& h, int n) {
  os << "round";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) os << ",b_" << i << "_" << j;
  os << "\n";
  for (std::size_t r = 0; r < h.soft_adj_rounds.size(); ++r) {
    os << r;
    const auto& a = h.soft_adj_rounds[r];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) os << "," << csv_double(a[static_cast<std::size_t>(i) * n + j]);
    os << "\n";
  }
}

inline void write_ait_scores_csv(std::ostream& os, const RunHistory& h) {
  os << "round,target,vbg,vwg,d,chosen\n";
  for (const auto& [round, report] : h.ait_reports) {
    for (std::size_t k = 0; k < report.targets.size(); ++k) {
      os << round << "," << report.targets[k].label() << "," << csv_double(report.vbg[k]) << ","
         << csv_double(report.vwg[k]) << "," << csv_double(report.score[k]) << ","
         << (static_cast<int>(k) == report.chosen ? 1 : 0) << "\n";
    }
  }
}

inline void write_selection_counts_csv(std::ostream& os, const std::vector<int>& counts) {
  os << "node,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) os << i << "," << counts[i] << "\n";
}

inline long first_zero_round(const RunHistory& h) {
  for (const RoundRecord& r : h.rounds)
    if (r.shd == 0) return r.round + 1;  // rounds consumed until first SHD 0
  return -1;
}

}  // namespace detail

// Runs one seed and writes its artifacts under <out>/seed<seed>/.
inline SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                           bool write_artifacts = true) {
  namespace fs = std::filesystem;
  SeedResult res;
  res.seed = seed;
  const fs::path seed_dir = fs::path(cfg.out_dir) / ("seed" + std::to_string(seed));
  try {
    GroundTruthScm truth = build_ground_truth(cfg, seed);
    Environment env(truth, cfg.eta, cfg.train.samples_per_intervention_limit);
    AcquisitionStrategy strategy;
    strategy.kind = cfg.strategy;
    for (int t : cfg.allowed_targets) strategy.allowed.emplace_back(std::vector<int>{t});
    strategy.sequence = cfg.sequence;

    Rng run_rng = make_rng(derive_seed(seed, "run"));
    RunHistory history;
    try {
      history = run_discovery(env, strategy, cfg.budget, cfg.train, run_rng);
      res.ok = true;
    } catch (DiscoveryError& e) {
      history = std::move(e.partial);
      res.error = e.what();
    }
    res.final_shd = history.final_shd;
    res.rounds_run = static_cast<int>(history.rounds.size());
    res.rounds_to_zero = detail::first_zero_round(history);
    res.interventional_samples = history.interventional_samples;
    res.selection_counts = history.selection_counts;

    const auto props = topo_props(env.scm().dag);
    std::vector<double> counts(props.size()), outdeg(props.size()), desc(props.size());
    for (std::size_t i = 0; i < props.size(); ++i) {
      counts[i] = static_cast<double>(history.selection_counts[i]);
      outdeg[i] = props[i].out_degree;
      desc[i] = props[i].descendant_count;
    }
    try {
      res.corr_out_degree = selection_correlation(counts, outdeg);
    } catch (const std::exception&) {
    }
    try {
      res.corr_descendants = selection_correlation(counts, desc);
    } catch (const std::exception&) {
    }

    if (write_artifacts) {
      fs::create_directories(seed_dir);
      {
        std::ofstream f(seed_dir / "truth_dag.txt");
        write_dag(f, env.scm().dag);
      }
      {
        std::ofstream f(seed_dir / "truth_adjacency.csv");
        write_adjacency_csv(f, env.scm().dag);
      }
      {
        std::ofstream f(seed_dir / "history.csv");
        detail::write_history_csv(f, history);
      }
      if (cfg.train.record_edge_dynamics) {
        std::ofstream f(seed_dir / "edge_dynamics.csv");
        detail::write_edge_dynamics_csv(f, history, env.n());
      }
      if (cfg.strategy == StrategyKind::ait) {
        std::ofstream f(seed_dir / "ait_scores.csv");
        detail::write_ait_scores_csv(f, history);
      }
      {
        std::ofstream f(seed_dir / "selection_counts.csv");
        detail::write_selection_counts_csv(f, history.selection_counts);
      }
      save_checkpoint((seed_dir / "checkpoint.json").string(), history.model, config_hash(cfg));
    }
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

// Runs every seed (in parallel when hardware allows), aggregates, and writes
// per-seed and aggregate CSVs. A failing seed marks the aggregate partial
// but never drops silently.
inline AggregateResult run_experiment(const ExperimentConfig& cfg, bool write_artifacts = true) {
  namespace fs = std::filesystem;
  cfg.train.validate();
  if (write_artifacts) {
    fs::create_directories(cfg.out_dir);
    std::ofstream echo(fs::path(cfg.out_dir) / "config_echo.cfg");
    echo << canonical_config(cfg);
  }

  std::vector<SeedResult> results(cfg.seeds.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(cfg.seeds.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      results[i] = run_seed(cfg, cfg.seeds[i], write_artifacts);
  } else {
    std::vector<std::future<SeedResult>> futs;
    futs.reserve(cfg.seeds.size());
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      futs.push_back(std::async(std::launch::async, [&cfg, write_artifacts, seed = cfg.seeds[i]] {
        return run_seed(cfg, seed, write_artifacts);
      }));
    for (std::size_t i = 0; i < futs.size(); ++i) results[i] = futs[i].get();
  }

  int n_nodes = 0;
  for (const auto& r : results) n_nodes = std::max(n_nodes, static_cast<int>(r.selection_counts.size()));
  AggregateResult agg = aggregate_results(std::move(results), cfg.budget, n_nodes);

  if (write_artifacts) {
    {
      std::ofstream f(fs::path(cfg.out_dir) / "per_seed.csv");
      f << "seed,status,final_shd,rounds_run,rounds_to_zero,interventional_samples,"
           "corr_out_degree,corr_descendants\n";
      for (const SeedResult& s : agg.seeds) {
        f << s.seed << "," << (s.ok ? "ok" : "failed") << "," << s.final_shd << "," << s.rounds_run
          << "," << s.rounds_to_zero << "," << s.interventional_samples << ","
          << (s.corr_out_degree ? csv_double(*s.corr_out_degree) : "") << ","
          << (s.corr_descendants ? csv_double(*s.corr_descendants) : "") << "\n";
      }
    }
    {
      std::ofstream f(fs::path(cfg.out_dir) / "selection_histogram.csv");
      f << "node,count\n";
      for (std::size_t i = 0; i < agg.selection_histogram.size(); ++i)
        f << i << "," << agg.selection_histogram[i] << "\n";
    }
    {
      std::ofstream f(fs::path(cfg.out_dir) / "aggregate.csv");
      f << "field,value\n";
      f << "seeds," << agg.seeds.size() << "\n";
      f << "partial," << (agg.partial ? 1 : 0) << "\n";
      f << "mean_final_shd," << csv_double(agg.mean_final_shd) << "\n";
      f << "std_final_shd," << csv_double(agg.std_final_shd) << "\n";
      f << "rounds_to_zero_q0," << csv_double(agg.rounds_to_zero_q0) << "\n";
      f << "rounds_to_zero_q50," << csv_double(agg.rounds_to_zero_q50) << "\n";
      f << "rounds_to_zero_q100," << csv_double(agg.rounds_to_zero_q100) << "\n";
      f << "mean_corr_out_degree,"
        << (agg.mean_corr_out_degree ? csv_double(*agg.mean_corr_out_degree) : "") << "\n";
      f << "mean_corr_descendants,"
        << (agg.mean_corr_descendants ? csv_double(*agg.mean_corr_descendants) : "") << "\n";
    }
  }
  return agg;
}

// ---------------------------------------------------------------------------
// Informative-target probe: pin the belief to the ground truth except for
// chosen skeleton edges held undirected, fit theta, and histogram which
// targets AIT ranks first across repetitions.
// ---------------------------------------------------------------------------

struct ProbeResult {
  std::vector<InterventionTarget> targets;
  std::vector<long> top_counts;       // how often each target scored highest
  std::vector<double> mean_score;     // average D per target
  int repetitions = 0;

  double top_share(std::span<const int> nodes) const {
    long hits = 0, total = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      total += top_counts[k];
      for (int node : nodes)
        if (targets[k].nodes.size() == 1 && targets[k].nodes[0] == node) hits += top_counts[k];
    }
    return total > 0 ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
  }
};

inline ProbeResult informative_target_probe(const GroundTruthScm& net,
                                            std::span<const std::pair<int, int>> undirected,
                                            const TrainConfig& cfg, int repetitions, Rng& rng) {
  const int n = net.n();
  for (auto [a, b] : undirected) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b)
      throw std::invalid_argument("probe: bad node pair");
    if (!net.dag.has_edge(a, b) && !net.dag.has_edge(b, a))
      throw std::invalid_argument("probe: pair " + std::to_string(a) + "-" + std::to_string(b) +
                                  " is not a skeleton edge");
  }
  if (repetitions < 1) throw std::invalid_argument("probe: repetitions must be >= 1");

  NeuralCausalModel ncm = init_ncm(n, net.m, cfg.learner_hidden, rng);
  constexpr double kPinned = 20.0;  // sigmoid saturates within 1e-8
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) ncm.structure.gamma.at(i, j) = net.dag.has_edge(j, i) ? kPinned : -kPinned;
  for (auto [a, b] : undirected) {
    ncm.structure.gamma.at(a, b) = 0.0;
    ncm.structure.gamma.at(b, a) = 0.0;
  }

  Environment env(net, 0.0);
  functional_fit(ncm, env, cfg, rng);

  ProbeResult pr;
  pr.targets = AcquisitionStrategy::all_singletons(n);
  pr.top_counts.assign(n, 0);
  pr.mean_score.assign(n, 0.0);
  pr.repetitions = repetitions;
  for (int rep = 0; rep < repetitions; ++rep) {
    DiscrepancyReport report =
        discrepancy_scores(ncm.structure, ncm.functions, pr.targets, cfg.ait, rng);
    ++pr.top_counts[report.chosen];
    for (int k = 0; k < n; ++k) pr.mean_score[k] += report.score[k] / repetitions;
  }
  return pr;
}

inline void write_probe_csv(std::ostream& os, const ProbeResult& pr) {
  os << "target,top_count,mean_d\n";
  for (std::size_t k = 0; k < pr.targets.size(); ++k)
    os << pr.targets[k].label() << "," << pr.top_counts[k] << "," << csv_double(pr.mean_score[k])
       << "\n";
}

}  // namespace causal
