#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "causal/acyclicity.hpp"
#include "causal/ait.hpp"
#include "causal/dag_sampler.hpp"
#include "causal/graph.hpp"
#include "causal/ncm.hpp"
#include "causal/optim.hpp"
#include "causal/rng.hpp"
#include "causal/scm.hpp"

namespace causal {

// Ground-truth environment as seen by the discovery loop: ancestral samples
// plus measurement noise, with exact accounting of delivered interventional
// samples. Each intervention has a fresh-sample budget; once it is spent,
// further scoring batches recycle rows from the already-delivered pool.
class Environment {
 public:
  Environment(GroundTruthScm scm, double eta = 0.0, int samples_per_intervention_limit = 1000)
      : scm_(std::move(scm)), eta_(eta), limit_(samples_per_intervention_limit) {
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("Environment: eta must be in [0,1]");
    if (limit_ < 1) throw std::invalid_argument("Environment: sample limit must be positive");
  }

  const GroundTruthScm& scm() const { return scm_; }
  int n() const { return scm_.n(); }
  int m() const { return scm_.m; }
  double eta() const { return eta_; }
  std::size_t interventional_delivered() const { return delivered_total_; }

  SampleBatch observational(std::size_t count, Rng& rng) const {
    SampleBatch b = ancestral_sample(scm_, std::nullopt, count, rng);
    return eta_ > 0.0 ? corrupt(b, eta_, rng) : b;
  }

  void begin_intervention(const InterventionTarget& target) {
    target.validate_for(n());
    pool_.clear();
    pool_target_ = target;
    delivered_current_ = 0;
  }

  // One scoring batch for the current intervention. Fresh while the
  // per-intervention budget allows a whole batch; recycled from the pool
  // afterwards (recycled rows are not counted as delivered).
  SampleBatch interventional(std::size_t count, Rng& rng) {
    if (!pool_target_) throw std::logic_error("Environment: begin_intervention first");
    const bool fresh =
        pool_.empty() || delivered_current_ + count <= static_cast<std::size_t>(limit_);
    if (fresh) {
      SampleBatch b = ancestral_sample(scm_, pool_target_, count, rng);
      if (eta_ > 0.0) b = corrupt(b, eta_, rng);
      delivered_current_ += count;
      delivered_total_ += count;
      pool_.insert(pool_.end(), b.values.begin(), b.values.end());
      return b;
    }
    SampleBatch b;
    b.n = n();
    b.m = m();
    b.batch = count;
    b.regime = pool_target_;
    b.noise_level = eta_;
    b.values.resize(count * n());
    const std::size_t pool_rows = pool_.size() / n();
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t src = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(pool_rows)));
      std::copy_n(pool_.begin() + src * n(), n(), b.values.begin() + r * n());
    }
    return b;
  }

 private:
  GroundTruthScm scm_;
  double eta_;
  int limit_;
  std::vector<int> pool_;
  std::optional<InterventionTarget> pool_target_;
  std::size_t delivered_current_ = 0;
  std::size_t delivered_total_ = 0;
};

enum class StrategyKind { random, ait, round_robin, fixed_sequence };

inline StrategyKind strategy_from_string(const std::string& s) {
  if (s == "random") return StrategyKind::random;
  if (s == "ait") return StrategyKind::ait;
  if (s == "round_robin") return StrategyKind::round_robin;
  if (s == "fixed_sequence") return StrategyKind::fixed_sequence;
  throw std::invalid_argument("unknown strategy: " + s);
}

inline std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::random: return "random";
    case StrategyKind::ait: return "ait";
    case StrategyKind::round_robin: return "round_robin";
    case StrategyKind::fixed_sequence: return "fixed_sequence";
  }
  throw std::logic_error("unreachable");
}

struct AcquisitionStrategy {
  StrategyKind kind = StrategyKind::random;
  std::vector<InterventionTarget> allowed;  // empty = all single nodes
  std::vector<int> sequence;                // indices into allowed (fixed_sequence)

  static std::vector<InterventionTarget> all_singletons(int n) {
    std::vector<InterventionTarget> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.emplace_back(std::vector<int>{i});
    return out;
  }

  std::vector<InterventionTarget> resolved_targets(int n) const {
    std::vector<InterventionTarget> targets = allowed.empty() ? all_singletons(n) : allowed;
    for (const auto& t : targets) t.validate_for(n);
    if (kind == StrategyKind::fixed_sequence) {
      if (sequence.empty()) throw std::invalid_argument("fixed_sequence: empty sequence");
      for (int idx : sequence)
        if (idx < 0 || idx >= static_cast<int>(targets.size()))
          throw std::invalid_argument("fixed_sequence: index out of range");
    }
    return targets;
  }
};

struct TrainConfig {
  // functional phase
  int functional_iters = 2000;  // desk-scale; 10000 at paper scale
  int batch_size = 256;
  double functional_lr = 1e-3;
  int learner_hidden = 32;
  // structural phase
  double sparsity_coeff = 0.1;
  double dag_coeff = 0.5;
  int interventions_per_phase2 = 25;
  int scoring_batches = 10;
  int scoring_graphs = 10;  // desk-scale; 10/20/40 by graph size at paper scale
  double structural_lr = 5e-2;
  double sampler_temperature = 0.1;
  double edge_threshold = 0.5;
  int samples_per_intervention_limit = 1000;
  // acquisition
  AitConfig ait{.graphs_count = 50, .samples_per_graph = 128};  // desk; 100/256 at paper scale
  // control
  bool stop_at_zero_shd = true;
  int plateau_patience = 0;  // rounds without SHD improvement before stopping; 0 = off
  bool record_edge_dynamics = true;

  void validate() const {
    if (functional_iters < 0 || batch_size < 1 || interventions_per_phase2 < 1 ||
        scoring_batches < 1 || scoring_graphs < 2 || learner_hidden < 1)
      throw std::invalid_argument("TrainConfig: counts must be positive (scoring_graphs >= 2)");
    if (sparsity_coeff < 0 || dag_coeff < 0)
      throw std::invalid_argument("TrainConfig: regularizer coefficients must be >= 0");
    if (structural_lr <= 0 || functional_lr <= 0 || sampler_temperature <= 0)
      throw std::invalid_argument("TrainConfig: rates must be positive");
  }
};

// Table 2 settings.
inline TrainConfig paper_scale_config(int n) {
  TrainConfig cfg;
  cfg.functional_iters = 10000;
  cfg.scoring_graphs = n <= 5 ? 10 : (n <= 10 ? 20 : 40);
  cfg.ait.graphs_count = 100;
  cfg.ait.samples_per_graph = 256;
  return cfg;
}

// One structural round = one interventional batch and one gamma update.
// An intervention spans `scoring_batches` consecutive rounds.
struct RoundRecord {
  int round = 0;         // 0-based structural round
  int intervention = 0;  // 0-based intervention index
  InterventionTarget target;
  int shd = 0;                    // SHD of thresholded belief vs ground truth
  std::size_t samples_used = 0;   // cumulative fresh interventional samples
};

struct RunHistory {
  std::vector<RoundRecord> rounds;
  std::vector<std::vector<double>> soft_adj_rounds;          // per-round belief snapshot
  std::vector<std::pair<int, DiscrepancyReport>> ait_reports;  // (round at selection, report)
  std::vector<int> selection_counts;                         // per-node, one count per intervention
  int final_shd = -1;
  std::size_t interventional_samples = 0;
  NeuralCausalModel model;  // belief and conditionals at the end of the run
};

// Carries whatever history had accumulated before an environment or numeric
// failure ended the run.
struct DiscoveryError : std::runtime_error {
  RunHistory partial;
  DiscoveryError(const std::string& msg, RunHistory h)
      : std::runtime_error(msg), partial(std::move(h)) {}
};

// Functional fitting: gamma frozen, theta fitted to observational data with
// hypothesis-graph masking redrawn every step (one graph per sample).
inline double functional_fit(NeuralCausalModel& ncm, const Environment& env, const TrainConfig& cfg,
                             Rng& rng, FunctionalAdam* optimizer = nullptr) {
  const Matrix a = soft_adjacency(ncm.structure);
  std::optional<FunctionalAdam> local;
  if (!optimizer) {
    local.emplace(ncm.functions, AdamConfig{.lr = cfg.functional_lr});
    optimizer = &*local;
  }
  double last_loss = 0.0;
  std::vector<Dag> graphs(cfg.batch_size, Dag(env.n()));
  std::vector<int> assignment(cfg.batch_size);
  for (int i = 0; i < cfg.batch_size; ++i) assignment[i] = i;
  for (int iter = 0; iter < cfg.functional_iters; ++iter) {
    const SampleBatch batch = env.observational(cfg.batch_size, rng);
    for (int i = 0; i < cfg.batch_size; ++i)
      graphs[i] = sample_dag(a, cfg.sampler_temperature, rng);
    GradientBundle gb = nll_and_grad(ncm.functions, batch, graphs, assignment);
    if (!std::isfinite(gb.loss))
      throw std::runtime_error("functional_fit: non-finite loss at iteration " +
                               std::to_string(iter));
    optimizer->step(ncm.functions, gb);
    last_loss = gb.loss;
  }
  return last_loss;
}

// Same fit against a fixed observational dataset (minibatches drawn with
// replacement). Used when no live environment is available.
inline double functional_fit(NeuralCausalModel& ncm, const SampleBatch& dataset,
                             const TrainConfig& cfg, Rng& rng,
                             FunctionalAdam* optimizer = nullptr) {
  if (dataset.regime) throw std::invalid_argument("functional_fit: dataset must be observational");
  if (dataset.batch == 0) throw std::invalid_argument("functional_fit: empty dataset");
  const Matrix a = soft_adjacency(ncm.structure);
  std::optional<FunctionalAdam> local;
  if (!optimizer) {
    local.emplace(ncm.functions, AdamConfig{.lr = cfg.functional_lr});
    optimizer = &*local;
  }
  double last_loss = 0.0;
  const int bs = static_cast<int>(std::min<std::size_t>(cfg.batch_size, dataset.batch));
  SampleBatch mini;
  mini.n = dataset.n;
  mini.m = dataset.m;
  mini.batch = bs;
  mini.values.resize(static_cast<std::size_t>(bs) * dataset.n);
  std::vector<Dag> graphs(bs, Dag(dataset.n));
  std::vector<int> assignment(bs);
  for (int i = 0; i < bs; ++i) assignment[i] = i;
  for (int iter = 0; iter < cfg.functional_iters; ++iter) {
    for (int r = 0; r < bs; ++r) {
      const std::size_t src = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(dataset.batch)));
      std::copy_n(dataset.values.begin() + src * dataset.n, dataset.n,
                  mini.values.begin() + static_cast<std::size_t>(r) * dataset.n);
    }
    for (int i = 0; i < bs; ++i) graphs[i] = sample_dag(a, cfg.sampler_temperature, rng);
    GradientBundle gb = nll_and_grad(ncm.functions, mini, graphs, assignment);
    if (!std::isfinite(gb.loss))
      throw std::runtime_error("functional_fit: non-finite loss at iteration " +
                               std::to_string(iter));
    optimizer->step(ncm.functions, gb);
    last_loss = gb.loss;
  }
  return last_loss;
}

// Per-graph, per-node adaptation scores on one interventional batch:
// scores[g][i] is the log-likelihood of node i's column under graph g's
// parent mask, summed over the batch. Intervened nodes score 0 and are
// excluded everywhere: the intervention overwrites their mechanism, so
// their columns say nothing about their causal parents.
inline std::vector<std::vector<double>> structural_score_by_node(const FunctionalParams& fp,
                                                                 const SampleBatch& batch,
                                                                 std::span<const Dag> graphs) {
  if (!batch.regime) throw std::invalid_argument("structural_score: batch must be interventional");
  const InterventionTarget& target = *batch.regime;
  target.validate_for(fp.n);
  std::vector<std::vector<double>> scores(graphs.size(), std::vector<double>(fp.n, 0.0));
  std::vector<double> logits(fp.m);
  std::vector<int> active;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    for (std::size_t r = 0; r < batch.batch; ++r) {
      std::span<const int> values{batch.values.data() + r * fp.n, static_cast<std::size_t>(fp.n)};
      for (int i = 0; i < fp.n; ++i) {
        if (target.contains(i)) continue;
        masked_active_slots(values, graphs[g].parent_row(i), i, fp.m, active);
        fp.nets[i].forward(active, logits);
        scores[g][i] += log_softmax_at(logits, values[i]);
      }
    }
  }
  return scores;
}

// Batch log-likelihood per graph, summed over non-intervened nodes.
inline std::vector<double> structural_score(const FunctionalParams& fp, const SampleBatch& batch,
                                            std::span<const Dag> graphs) {
  const auto by_node = structural_score_by_node(fp, batch, graphs);
  std::vector<double> totals;
  totals.reserve(by_node.size());
  for (const auto& per_node : by_node) {
    double ll = 0.0;
    for (double v : per_node) ll += v;
    totals.push_back(ll);
  }
  return totals;
}

// Gamma update: score-function estimator with softmax-normalized adaptation
// scores plus sparsity and acyclicity regularizers.
//   gamma_ij -= lr * [ sum_g w_g(i) (sigma(gamma_ij) - g_ij)
//                      + lambda_s * d/dgamma sigma(gamma_ij)
//                      + lambda_d * d/dgamma tr(exp(sigma(gamma))) ]
// Row i's weights w_g(i) are the softmax of node i's adaptation scores over
// the hypothesis set, so every parent row is judged by its own conditional's
// fit rather than by the whole-graph likelihood.
inline void structural_update(StructuralParams& sp, std::span<const Dag> graphs,
                              std::span<const std::vector<double>> scores_by_node,
                              const TrainConfig& cfg) {
  if (scores_by_node.size() != graphs.size() || graphs.size() < 2)
    throw std::invalid_argument("structural_update: need matching scores for >= 2 graphs");
  const int n = sp.n();
  const Matrix a = soft_adjacency(sp);
  Matrix dag_grad(n, n);
  if (cfg.dag_coeff > 0.0) dag_grad = acyclicity_penalty_grad(a);

  std::vector<double> w(graphs.size());
  for (int i = 0; i < n; ++i) {
    double best = scores_by_node[0][i];
    for (const auto& s : scores_by_node) best = std::max(best, s[i]);
    if (!std::isfinite(best)) throw std::runtime_error("structural_update: degenerate scores");
    double z = 0.0;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      w[g] = std::exp(scores_by_node[g][i] - best);
      z += w[g];
    }
    for (double& v : w) v /= z;

    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double s = a.at(i, j);
      double grad = 0.0;
      for (std::size_t g = 0; g < graphs.size(); ++g)
        grad += w[g] * (s - static_cast<double>(graphs[g].at(i, j)));
      const double dsig = s * (1.0 - s);
      grad += cfg.sparsity_coeff * dsig;
      if (cfg.dag_coeff > 0.0) grad += cfg.dag_coeff * dag_grad.at(i, j) * dsig;
      sp.gamma.at(i, j) -= cfg.structural_lr * grad;
    }
  }
}

// Scalar per-graph scores: every row shares the graph-level weights.
inline void structural_update(StructuralParams& sp, std::span<const Dag> graphs,
                              std::span<const double> scores, const TrainConfig& cfg) {
  std::vector<std::vector<double>> by_node(scores.size(),
                                           std::vector<double>(sp.n(), 0.0));
  for (std::size_t g = 0; g < scores.size(); ++g)
    for (int i = 0; i < sp.n(); ++i) by_node[g][i] = scores[g];
  structural_update(sp, graphs, by_node, cfg);
}

// The alternating discovery loop. Phase 1 fits theta under the frozen
// belief; phase 2 performs `interventions_per_phase2` interventions, each
// spanning `scoring_batches` structural rounds. `budget` caps the total
// number of structural rounds.
inline RunHistory run_discovery(Environment& env, const AcquisitionStrategy& strategy, int budget,
                                const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (budget < 0) throw std::invalid_argument("run_discovery: negative budget");
  const int n = env.n();
  const std::vector<InterventionTarget> targets = strategy.resolved_targets(n);

  RunHistory history;
  history.selection_counts.assign(n, 0);
  NeuralCausalModel ncm = init_ncm(n, env.m(), cfg.learner_hidden, rng);
  if (budget == 0) {
    history.final_shd = shd(threshold_adjacency(soft_adjacency(ncm.structure), cfg.edge_threshold),
                            env.scm().dag);
    history.model = std::move(ncm);
    return history;
  }
  FunctionalAdam adam(ncm.functions, AdamConfig{.lr = cfg.functional_lr});

  int round = 0, intervention = 0, best_shd = std::numeric_limits<int>::max(), stale = 0;
  bool stop = false;
  try {
    while (round < budget && !stop) {
      functional_fit(ncm, env, cfg, rng, &adam);
      for (int k = 0; k < cfg.interventions_per_phase2 && round < budget && !stop; ++k) {
        // acquisition
        std::size_t pick = 0;
        switch (strategy.kind) {
          case StrategyKind::random:
            pick = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(targets.size())));
            break;
          case StrategyKind::round_robin:
            pick = static_cast<std::size_t>(intervention % targets.size());
            break;
          case StrategyKind::fixed_sequence:
            pick = static_cast<std::size_t>(
                strategy.sequence[intervention % strategy.sequence.size()]);
            break;
          case StrategyKind::ait: {
            DiscrepancyReport report =
                discrepancy_scores(ncm.structure, ncm.functions, targets, cfg.ait, rng);
            pick = static_cast<std::size_t>(report.chosen);
            history.ait_reports.emplace_back(round, std::move(report));
            break;
          }
        }
        const InterventionTarget& target = targets[pick];
        for (int node : target.nodes) ++history.selection_counts[node];
        env.begin_intervention(target);

        // one mask set per intervention; per-node scores accumulate over the
        // scoring batches and feed a single gamma update. Averaging before
        // the softmax keeps batch noise from inflating spurious rows.
        const std::vector<Dag> masks = sample_parent_rows(ncm.structure, cfg.scoring_graphs, rng);
        std::vector<std::vector<double>> accum(masks.size(),
                                               std::vector<double>(n, 0.0));
        for (int b = 0; b < cfg.scoring_batches && round < budget && !stop; ++b) {
          const SampleBatch batch = env.interventional(cfg.batch_size, rng);
          const auto scores = structural_score_by_node(ncm.functions, batch, masks);
          for (std::size_t g = 0; g < masks.size(); ++g)
            for (int i = 0; i < n; ++i) accum[g][i] += scores[g][i];

          const bool last_batch = b == cfg.scoring_batches - 1 || round + 1 >= budget;
          if (last_batch) structural_update(ncm.structure, masks, accum, cfg);

          const Matrix a = soft_adjacency(ncm.structure);
          const int current_shd = shd(threshold_adjacency(a, cfg.edge_threshold), env.scm().dag);
          history.rounds.push_back(RoundRecord{round, intervention, target, current_shd,
                                               env.interventional_delivered()});
          if (cfg.record_edge_dynamics) history.soft_adj_rounds.push_back(a.data);
          ++round;
          if (current_shd < best_shd) {
            best_shd = current_shd;
            stale = 0;
          } else {
            ++stale;
          }
          if (cfg.stop_at_zero_shd && current_shd == 0) stop = true;
          if (cfg.plateau_patience > 0 && stale >= cfg.plateau_patience) stop = true;
        }
        ++intervention;
      }
    }
  } catch (const std::exception& e) {
    history.final_shd = history.rounds.empty() ? -1 : history.rounds.back().shd;
    history.interventional_samples = env.interventional_delivered();
    history.model = std::move(ncm);
    throw DiscoveryError(std::string("run_discovery: ") + e.what(), std::move(history));
  }
  history.final_shd = history.rounds.empty()
                          ? shd(threshold_adjacency(soft_adjacency(ncm.structure), cfg.edge_threshold),
                                env.scm().dag)
                          : history.rounds.back().shd;
  history.interventional_samples = env.interventional_delivered();
  history.model = std::move(ncm);
  return history;
}

}  // namespace causal
