#pragma once

// Test-only oracles, kept independent of the library's sampling paths.

#include <cmath>
#include <map>
#include <vector>

#include "causal/graph.hpp"
#include "causal/matrix.hpp"

namespace causal::test {

// Exact two-phase sampling distribution over labeled DAGs by exhaustive
// enumeration: sum over all orderings of ordering-probability times the
// product of per-edge Bernoulli terms. Keys are adjacency bitmasks over
// (child, parent) pairs in row-major order.
inline std::map<std::uint64_t, double> two_phase_exact_distribution(const Matrix& a, double t) {
  const int n = a.rows;
  std::map<std::uint64_t, double> dist;

  std::vector<int> alive(n), order;
  for (int i = 0; i < n; ++i) alive[i] = i;

  auto edge_bit = [n](int child, int parent) {
    return static_cast<std::uint64_t>(1) << (child * n + parent);
  };

  // enumerate edge subsets permitted by a complete ordering
  auto accumulate_dags = [&](const std::vector<int>& ord, double p_order) {
    std::vector<std::pair<int, int>> slots;  // (child, parent)
    std::vector<double> probs;
    for (int ci = 1; ci < n; ++ci)
      for (int pi = 0; pi < ci; ++pi) {
        slots.emplace_back(ord[ci], ord[pi]);
        probs.push_back(a.at(ord[ci], ord[pi]));
      }
    const std::size_t subsets = std::size_t{1} << slots.size();
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      double p = p_order;
      std::uint64_t key = 0;
      for (std::size_t s = 0; s < slots.size(); ++s) {
        if (mask & (std::size_t{1} << s)) {
          p *= probs[s];
          key |= edge_bit(slots[s].first, slots[s].second);
        } else {
          p *= 1.0 - probs[s];
        }
      }
      if (p > 0.0) dist[key] += p;
    }
  };

  // depth-first over orderings, carrying the sequential categorical
  // probabilities of the root draws
  auto recurse = [&](auto&& self, double p_so_far) -> void {
    if (alive.empty()) {
      accumulate_dags(order, p_so_far);
      return;
    }
    const std::size_t k = alive.size();
    std::vector<double> p_root(k), p(k);
    for (std::size_t i = 0; i < k; ++i) {
      double p_child = 0.0;
      for (std::size_t j = 0; j < k; ++j) p_child = std::max(p_child, a.at(alive[i], alive[j]));
      p_root[i] = 1.0 - p_child;
    }
    double mx = p_root[0];
    for (double v : p_root) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = std::exp((p_root[i] - mx) / t);
      z += p[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
      const int node = alive[i];
      order.push_back(node);
      alive.erase(alive.begin() + i);
      self(self, p_so_far * p[i] / z);
      alive.insert(alive.begin() + i, node);
      order.pop_back();
    }
  };
  recurse(recurse, 1.0);
  return dist;
}

inline std::uint64_t dag_bitmask(const Dag& g) {
  std::uint64_t key = 0;
  for (int c = 0; c < g.n; ++c)
    for (int p = 0; p < g.n; ++p)
      if (g.has_edge(p, c)) key |= std::uint64_t{1} << (c * g.n + p);
  return key;
}

}  // namespace causal::test
