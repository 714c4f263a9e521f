#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "causal/matrix.hpp"
#include "causal/mlp.hpp"
#include "causal/rng.hpp"
#include "causal/scm.hpp"

namespace causal {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Structural belief: gamma(i, j) is the logit of the belief that X_j is a
// direct cause of X_i. The diagonal is pinned out of the model: it is never
// read, never updated, and maps to exactly 0 in the soft adjacency.
struct StructuralParams {
  Matrix gamma;

  StructuralParams() = default;
  explicit StructuralParams(int n) : gamma(n, n) {}
  int n() const { return gamma.rows; }
};

inline Matrix soft_adjacency(const StructuralParams& sp) {
  Matrix a(sp.n(), sp.n());
  for (int i = 0; i < sp.n(); ++i)
    for (int j = 0; j < sp.n(); ++j) a.at(i, j) = i == j ? 0.0 : sigmoid(sp.gamma.at(i, j));
  return a;
}

// Edge read-out: threshold the soft adjacency (strictly greater). When both
// directions of a pair clear the threshold, only the stronger belief is kept
// so the result never contains a 2-cycle.
inline Dag threshold_adjacency(const Matrix& soft, double threshold) {
  Dag g(soft.rows);
  for (int c = 0; c < soft.rows; ++c) {
    for (int p = 0; p < soft.cols; ++p) {
      if (c == p || soft.at(c, p) <= threshold) continue;
      // opposite direction dominates (exact ties resolve low-index -> high-index)
      if (soft.at(p, c) > soft.at(c, p) || (soft.at(p, c) == soft.at(c, p) && p > c)) continue;
      g.adj[static_cast<std::size_t>(c) * soft.rows + p] = 1;
    }
  }
  return g;
}

// One 2-layer MLP per variable, mapping the parent-masked one-hot encoding
// of all variables to m category logits.
struct FunctionalParams {
  int n = 0;
  int m = 0;
  int hidden = 0;
  std::vector<TwoLayerMlp> nets;
};

struct NeuralCausalModel {
  StructuralParams structure;
  FunctionalParams functions;
};

// gamma starts at zero (soft adjacency 0.5 everywhere off-diagonal); the
// functional nets start with small random weights so initial logits are
// near zero.
inline NeuralCausalModel init_ncm(int n, int m, int hidden, Rng& rng) {
  if (n < 1 || m < 2 || hidden < 1) throw std::invalid_argument("init_ncm: bad dimensions");
  NeuralCausalModel ncm;
  ncm.structure = StructuralParams(n);
  ncm.functions.n = n;
  ncm.functions.m = m;
  ncm.functions.hidden = hidden;
  ncm.functions.nets.reserve(n);
  for (int i = 0; i < n; ++i) {
    TwoLayerMlp net(n * m, hidden, m);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(net.in));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& w : net.w1) w = s1 * normal(rng);
    for (double& w : net.w2) w = s2 * normal(rng);
    ncm.functions.nets.push_back(std::move(net));
  }
  return ncm;
}

// Active one-hot slots of `values` under `parent_mask` (row of a hypothesis
// graph). The self slot must be masked.
inline void masked_active_slots(std::span<const int> values, std::span<const std::uint8_t> parent_mask,
                                int node, int m, std::vector<int>& out) {
  if (parent_mask[node] != 0)
    throw std::logic_error("conditional_logits: node must be masked from its own input");
  out.clear();
  for (std::size_t p = 0; p < values.size(); ++p)
    if (parent_mask[p]) out.push_back(static_cast<int>(p) * m + values[p]);
}

// Logit vector for X_node given one sample and a hypothesis parent row.
inline void conditional_logits(const FunctionalParams& fp, int node, std::span<const int> values,
                               std::span<const std::uint8_t> parent_mask, std::span<double> logits) {
  std::vector<int> active;
  masked_active_slots(values, parent_mask, node, fp.m, active);
  fp.nets[node].forward(active, logits);
}

// Per-parameter gradient tensors, one set per node, shapes matching
// FunctionalParams.
struct GradientBundle {
  double loss = 0.0;
  std::vector<TwoLayerMlp> grads;  // reused as plain tensor storage

  static GradientBundle zeros_like(const FunctionalParams& fp) {
    GradientBundle gb;
    gb.grads.reserve(fp.nets.size());
    for (const auto& net : fp.nets) gb.grads.emplace_back(net.in, net.hidden, net.out, net.leak);
    return gb;
  }
};

// Mean categorical cross-entropy over (sample, node) pairs, with exact
// backprop. Sample j is masked by graphs[assignment[j]]; each node uses its
// own row of that graph.
inline GradientBundle nll_and_grad(const FunctionalParams& fp, const SampleBatch& batch,
                                   std::span<const Dag> graphs, std::span<const int> assignment) {
  if (graphs.empty()) throw std::invalid_argument("nll_and_grad: empty hypothesis set");
  if (batch.regime) throw std::invalid_argument("nll_and_grad: batch must be observational");
  if (assignment.size() != batch.batch)
    throw std::invalid_argument("nll_and_grad: one graph assignment per sample required");
  GradientBundle gb = GradientBundle::zeros_like(fp);
  const double inv = 1.0 / (static_cast<double>(batch.batch) * fp.n);
  std::vector<double> logits(fp.m), probs(fp.m), pre(fp.hidden), dhidden(fp.hidden);
  std::vector<int> active;
  for (std::size_t j = 0; j < batch.batch; ++j) {
    const Dag& g = graphs[assignment[j]];
    std::span<const int> values{batch.values.data() + j * fp.n, static_cast<std::size_t>(fp.n)};
    for (int i = 0; i < fp.n; ++i) {
      masked_active_slots(values, g.parent_row(i), i, fp.m, active);
      const TwoLayerMlp& net = fp.nets[i];
      net.forward(active, logits, pre);
      for (int c = 0; c < fp.m; ++c) probs[c] = logits[c];
      softmax_inplace(probs);
      const int target = values[i];
      gb.loss -= inv * std::log(std::max(probs[target], 1e-300));

      // dlogits = (probs - onehot(target)) * inv
      TwoLayerMlp& grad = gb.grads[i];
      for (int h = 0; h < fp.hidden; ++h) dhidden[h] = 0.0;
      for (int c = 0; c < fp.m; ++c) {
        const double dl = (probs[c] - (c == target ? 1.0 : 0.0)) * inv;
        grad.b2[c] += dl;
        double* gw2 = grad.w2.data() + static_cast<std::size_t>(c) * fp.hidden;
        const double* w2 = net.w2.data() + static_cast<std::size_t>(c) * fp.hidden;
        for (int h = 0; h < fp.hidden; ++h) {
          const double act = pre[h] > 0.0 ? pre[h] : net.leak * pre[h];
          gw2[h] += dl * act;
          dhidden[h] += dl * w2[h];
        }
      }
      for (int h = 0; h < fp.hidden; ++h) {
        const double dz = dhidden[h] * (pre[h] > 0.0 ? 1.0 : net.leak);
        grad.b1[h] += dz;
        double* gcol = grad.w1.data() + static_cast<std::size_t>(h) * net.in;
        for (int a : active) gcol[a] += dz;
      }
    }
  }
  return gb;
}

// Convenience wrapper: draw the per-sample graph assignment uniformly.
inline GradientBundle nll_and_grad(const FunctionalParams& fp, const SampleBatch& batch,
                                   std::span<const Dag> graphs, Rng& rng) {
  std::vector<int> assignment(batch.batch);
  for (auto& a : assignment) a = uniform_int(rng, static_cast<int>(graphs.size()));
  return nll_and_grad(fp, batch, graphs, assignment);
}

}  // namespace causal
