#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "causal/graph.hpp"
#include "causal/matrix.hpp"
#include "causal/ncm.hpp"
#include "causal/rng.hpp"

namespace causal {

// Two-phase DAG sampling from a soft adjacency A (A(i,j) = belief that X_j
// causes X_i):
//   phase 1 draws a topological node ordering by iterative root sampling,
//   phase 2 takes independent Bernoulli edge draws constrained to that
//   ordering, so every sample is acyclic by construction.

struct OrderingDraw {
  std::vector<int> order;                       // order[l] = l-th drawn root
  std::vector<std::vector<double>> step_probs;  // per-step p_l over remaining nodes (diagnostics)
};

inline void validate_soft_adjacency(const Matrix& a) {
  if (!a.square()) throw std::invalid_argument("soft adjacency must be square");
  if (a.rows < 1) throw std::invalid_argument("soft adjacency must be non-empty");
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) {
      const double v = a.at(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("soft adjacency entries must lie in [0,1]");
      if (i == j && v != 0.0)
        throw std::invalid_argument("soft adjacency must have a zero diagonal");
    }
  }
}

// Phase 1. At each step the probability of node i still being a child is
// the maximum of its remaining row; its root probability is the complement,
// and the next root is drawn from softmax(p_root / t).
inline OrderingDraw sample_ordering(const Matrix& soft_adj, double t, Rng& rng,
                                    bool keep_diagnostics = false) {
  validate_soft_adjacency(soft_adj);
  if (!(t > 0.0)) throw std::invalid_argument("sample_ordering: temperature must be > 0");
  const int n = soft_adj.rows;
  OrderingDraw draw;
  draw.order.reserve(n);
  std::vector<int> alive(n);
  for (int i = 0; i < n; ++i) alive[i] = i;
  std::vector<double> p_root, p;
  while (!alive.empty()) {
    const std::size_t k = alive.size();
    p_root.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      double p_child = 0.0;
      for (std::size_t b = 0; b < k; ++b)
        p_child = std::max(p_child, soft_adj.at(alive[a], alive[b]));
      p_root[a] = 1.0 - p_child;
    }
    p.assign(k, 0.0);
    double mx = p_root[0];
    for (double v : p_root) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      p[a] = std::exp((p_root[a] - mx) / t);
      sum += p[a];
    }
    for (double& v : p) v /= sum;
    if (keep_diagnostics) draw.step_probs.push_back(p);
    const int idx = categorical(rng, p);
    draw.order.push_back(alive[idx]);
    alive.erase(alive.begin() + idx);
  }
  return draw;
}

// Phase 2. A node may only be caused by nodes earlier in the ordering; each
// permitted edge is an independent Bernoulli draw of its belief.
inline Dag sample_dag(const Matrix& soft_adj, const OrderingDraw& ordering, Rng& rng) {
  validate_soft_adjacency(soft_adj);
  const int n = soft_adj.rows;
  if (static_cast<int>(ordering.order.size()) != n)
    throw std::invalid_argument("sample_dag: ordering length mismatch");
  {
    std::vector<std::uint8_t> seen(n, 0);
    for (int v : ordering.order) {
      if (v < 0 || v >= n || seen[v])
        throw std::invalid_argument("sample_dag: ordering is not a permutation");
      seen[v] = 1;
    }
  }
  Dag g(n);
  for (int a = 1; a < n; ++a) {
    const int child = ordering.order[a];
    for (int b = 0; b < a; ++b) {
      const int parent = ordering.order[b];
      if (bernoulli(rng, soft_adj.at(child, parent))) g.add_edge(parent, child);
    }
  }
  return g;
}

inline Dag sample_dag(const Matrix& soft_adj, double t, Rng& rng) {
  return sample_dag(soft_adj, sample_ordering(soft_adj, t, rng), rng);
}

// A hypothesis set: `count` independent (ordering, dag) draws from the
// current structural belief.
inline std::vector<Dag> sample_hypothesis_set(const StructuralParams& sp, int count, double t,
                                              Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample_hypothesis_set: count must be >= 1");
  const Matrix a = soft_adjacency(sp);
  std::vector<Dag> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sample_dag(a, t, rng));
  return out;
}

// Parent-mask bundles for structural scoring: every off-diagonal entry is an
// independent Bernoulli draw of its belief. Unlike the two-phase draws these
// are not constrained to be acyclic (each node's row is evaluated on its own,
// so no ancestral sampling ever runs on them), which keeps the inclusion rate
// of a candidate parent equal to its belief instead of belief times the
// chance of a compatible ordering.
inline std::vector<Dag> sample_parent_rows(const StructuralParams& sp, int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample_parent_rows: count must be >= 1");
  const Matrix a = soft_adjacency(sp);
  const int n = sp.n();
  std::vector<Dag> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    Dag g(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && bernoulli(rng, a.at(i, j)))
          g.adj[static_cast<std::size_t>(i) * n + j] = 1;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace causal
