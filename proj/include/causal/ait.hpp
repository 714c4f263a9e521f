#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "causal/dag_sampler.hpp"
#include "causal/graph.hpp"
#include "causal/ncm.hpp"
#include "causal/rng.hpp"
#include "causal/scm.hpp"

namespace causal {

struct AitConfig {
  int graphs_count = 100;      // hypothesis graphs per scoring round
  int samples_per_graph = 256; // interventional samples per graph and target
  double temperature = 0.1;    // ordering-softmax temperature
  double vwg_floor = 1e-8;     // keeps the ratio defined when VWG collapses to 0
};

struct DiscrepancyReport {
  std::vector<InterventionTarget> targets;
  std::vector<double> vbg;
  std::vector<double> vwg;
  std::vector<double> score;  // D_k = VBG_k / max(VWG_k, floor)
  std::uint64_t hypothesis_set_id = 0;
  int chosen = -1;

  void write_csv(std::ostream& os, int round = 0) const {
    os << "round,target,vbg,vwg,d,chosen\n";
    char buf[64];
    for (std::size_t k = 0; k < targets.size(); ++k) {
      os << round << "," << targets[k].label() << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", vbg[k]);
      os << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", vwg[k]);
      os << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", score[k]);
      os << buf << "," << (static_cast<int>(k) == chosen ? 1 : 0) << "\n";
    }
  }
};

// Content hash of a hypothesis set, stamped into reports so score rows can
// be traced back to the exact graph draw.
inline std::uint64_t hypothesis_set_id(std::span<const Dag> graphs) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const Dag& g : graphs) {
    h ^= static_cast<std::uint64_t>(g.n);
    h *= 0x100000001b3ull;
    for (std::uint8_t b : g.adj) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

// Hypothetical post-interventional samples: apply the hard intervention to
// the hypothesis graph (incoming edges of target nodes removed), then
// ancestral-sample with the learner's conditionals; intervened nodes come
// from the uniform policy.
inline std::vector<int> post_interventional_samples(const FunctionalParams& fp, const Dag& g,
                                                    const InterventionTarget& target, int count,
                                                    Rng& rng) {
  if (g.n != fp.n) throw std::invalid_argument("post_interventional_samples: size mismatch");
  target.validate_for(g.n);
  Dag cut = g;
  for (int node : target.nodes)
    for (int p = 0; p < g.n; ++p) cut.remove_edge(p, node);
  const auto order = topological_order(cut);
  if (!order) throw std::invalid_argument("post_interventional_samples: hypothesis graph is cyclic");

  std::vector<int> samples(static_cast<std::size_t>(count) * g.n, 0);
  std::vector<double> logits(fp.m), probs(fp.m);
  std::vector<int> active;
  for (int s = 0; s < count; ++s) {
    int* vals = samples.data() + static_cast<std::size_t>(s) * g.n;
    for (int node : *order) {
      if (target.contains(node)) {
        vals[node] = uniform_int(rng, fp.m);
        continue;
      }
      masked_active_slots({vals, static_cast<std::size_t>(g.n)}, cut.parent_row(node), node, fp.m,
                          active);
      fp.nets[node].forward(active, logits);
      for (int c = 0; c < fp.m; ++c) probs[c] = logits[c];
      softmax_inplace(probs);
      vals[node] = categorical(rng, probs);
    }
  }
  return samples;
}

namespace detail {

// VBG / VWG / D from already-drawn per-graph sample blocks. Samples are
// embedded as raw category indices at m = 2 and one-hot otherwise;
// intervened coordinates are zeroed before any variance is computed.
struct VarianceDecomposition {
  double vbg = 0.0;
  double vwg = 0.0;
  double score = 0.0;
};

inline VarianceDecomposition discrepancy_from_samples(
    std::span<const std::vector<int>> per_graph_samples, int n, int m,
    const InterventionTarget& target, double vwg_floor) {
  if (per_graph_samples.size() < 2)
    throw std::invalid_argument("discrepancy: need at least two graphs");
  const int dim = m == 2 ? n : n * m;
  const std::size_t groups = per_graph_samples.size();
  const std::size_t per_group = per_graph_samples[0].size() / n;

  auto embed = [&](const int* vals, std::vector<double>& e) {
    std::fill(e.begin(), e.end(), 0.0);
    if (m == 2) {
      for (int i = 0; i < n; ++i)
        if (!target.contains(i)) e[i] = static_cast<double>(vals[i]);
    } else {
      for (int i = 0; i < n; ++i)
        if (!target.contains(i)) e[static_cast<std::size_t>(i) * m + vals[i]] = 1.0;
    }
  };

  std::vector<std::vector<double>> means(groups, std::vector<double>(dim, 0.0));
  std::vector<double> grand(dim, 0.0), e(dim);
  for (std::size_t g = 0; g < groups; ++g) {
    if (per_graph_samples[g].size() != per_group * static_cast<std::size_t>(n))
      throw std::invalid_argument("discrepancy: unequal group sizes");
    for (std::size_t s = 0; s < per_group; ++s) {
      embed(per_graph_samples[g].data() + s * n, e);
      for (int d = 0; d < dim; ++d) means[g][d] += e[d];
    }
    for (int d = 0; d < dim; ++d) {
      means[g][d] /= static_cast<double>(per_group);
      grand[d] += means[g][d];
    }
  }
  for (int d = 0; d < dim; ++d) grand[d] /= static_cast<double>(groups);

  VarianceDecomposition out;
  for (std::size_t g = 0; g < groups; ++g) {
    for (int d = 0; d < dim; ++d) {
      const double diff = means[g][d] - grand[d];
      out.vbg += diff * diff;
    }
    for (std::size_t s = 0; s < per_group; ++s) {
      embed(per_graph_samples[g].data() + s * n, e);
      for (int d = 0; d < dim; ++d) {
        const double diff = e[d] - means[g][d];
        out.vwg += diff * diff;
      }
    }
  }
  out.score = out.vbg / std::max(out.vwg, vwg_floor);
  return out;
}

}  // namespace detail

// argmax over scores, ties broken uniformly at random.
inline std::size_t select_target_index(std::span<const double> scores, Rng& rng) {
  if (scores.empty()) throw std::invalid_argument("select_target: empty score list");
  double best = scores[0];
  for (double s : scores) best = std::max(best, s);
  std::vector<int> ties;
  for (std::size_t k = 0; k < scores.size(); ++k)
    if (scores[k] == best) ties.push_back(static_cast<int>(k));
  return static_cast<std::size_t>(ties[uniform_int(rng, static_cast<int>(ties.size()))]);
}

// F-test-inspired discrepancy scores for every candidate target. One
// hypothesis set is drawn up front and reused for all targets, so scores are
// comparable within the round.
inline DiscrepancyReport discrepancy_scores(const StructuralParams& sp, const FunctionalParams& fp,
                                            std::span<const InterventionTarget> candidates,
                                            const AitConfig& cfg, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("discrepancy_scores: no candidate targets");
  if (cfg.graphs_count < 2)
    throw std::invalid_argument("discrepancy_scores: need at least two hypothesis graphs");
  const std::vector<Dag> graphs = sample_hypothesis_set(sp, cfg.graphs_count, cfg.temperature, rng);

  DiscrepancyReport report;
  report.targets.assign(candidates.begin(), candidates.end());
  report.hypothesis_set_id = hypothesis_set_id(graphs);

  // Identical hypothesis graphs share one sample block: their group means then
  // coincide exactly, so a fully converged belief scores D = 0 instead of
  // residual sampling noise.
  std::map<std::vector<std::uint8_t>, std::size_t> distinct;
  std::vector<std::size_t> block_of(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    auto [it, inserted] = distinct.try_emplace(graphs[i].adj, distinct.size());
    block_of[i] = it->second;
  }
  std::vector<const Dag*> distinct_graphs(distinct.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) distinct_graphs[block_of[i]] = &graphs[i];

  std::vector<std::vector<int>> distinct_blocks(distinct.size());
  std::vector<std::vector<int>> blocks(graphs.size());
  for (const InterventionTarget& target : candidates) {
    target.validate_for(fp.n);
    for (std::size_t d = 0; d < distinct_graphs.size(); ++d)
      distinct_blocks[d] =
          post_interventional_samples(fp, *distinct_graphs[d], target, cfg.samples_per_graph, rng);
    for (std::size_t i = 0; i < graphs.size(); ++i) blocks[i] = distinct_blocks[block_of[i]];
    const auto vd =
        detail::discrepancy_from_samples(blocks, fp.n, fp.m, target, cfg.vwg_floor);
    report.vbg.push_back(vd.vbg);
    report.vwg.push_back(vd.vwg);
    report.score.push_back(vd.score);
  }
  report.chosen = static_cast<int>(select_target_index(report.score, rng));
  return report;
}

inline InterventionTarget select_target(const DiscrepancyReport& report, Rng& rng) {
  return report.targets[select_target_index(report.score, rng)];
}

}  // namespace causal
