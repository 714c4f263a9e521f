#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "causal/graph.hpp"
#include "causal/mlp.hpp"
#include "causal/rng.hpp"

namespace causal {

// A hard intervention on a non-empty set of nodes. The intervened variables
// are redrawn from a uniform categorical, severing all parent influence.
struct InterventionTarget {
  std::vector<int> nodes;  // kept sorted and distinct

  InterventionTarget() = default;
  explicit InterventionTarget(std::vector<int> ns) : nodes(std::move(ns)) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    if (nodes.empty()) throw std::invalid_argument("InterventionTarget: empty target set");
    if (nodes.front() < 0) throw std::invalid_argument("InterventionTarget: negative index");
  }

  bool contains(int node) const {
    return std::binary_search(nodes.begin(), nodes.end(), node);
  }
  void validate_for(int n) const {
    if (nodes.back() >= n) throw std::invalid_argument("InterventionTarget: index out of range");
  }
  std::string label() const {
    std::string s;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (i) s += ';';
      s += std::to_string(nodes[i]);
    }
    return s;
  }
  friend bool operator==(const InterventionTarget&, const InterventionTarget&) = default;
};

// MLP-parameterized conditional: input is the one-hot encoding of all n
// variables with non-parents zeroed by the mask; output is m logits.
struct MlpMechanism {
  TwoLayerMlp net;
};

// Explicit CPT. probs is (m^|parents|) x m row-major; rows are indexed in
// lexicographic parent order with the lowest-numbered parent most
// significant.
struct TableMechanism {
  std::vector<int> parents;  // ascending
  std::vector<double> probs;
};

using Mechanism = std::variant<MlpMechanism, TableMechanism>;

struct SampleBatch {
  int n = 0;
  int m = 0;
  std::size_t batch = 0;
  std::vector<int> values;  // batch x n, row-major
  std::optional<InterventionTarget> regime;  // nullopt = observational
  double noise_level = 0.0;

  int at(std::size_t row, int node) const { return values[row * n + node]; }
  int& at(std::size_t row, int node) { return values[row * n + node]; }
};

// Ground-truth data-generating environment: a DAG plus one conditional
// sampler per variable.
struct GroundTruthScm {
  Dag dag;
  int m = 2;
  std::vector<Mechanism> mechanisms;
  std::vector<int> topo;  // cached parent-before-child order

  int n() const { return dag.n; }

  // conditional distribution of `node` given the current row of values
  void conditional(int node, std::span<const int> values, std::span<double> probs) const {
    const auto& mech = mechanisms[node];
    if (const auto* t = std::get_if<TableMechanism>(&mech)) {
      std::size_t row = 0;
      for (int p : t->parents) row = row * m + static_cast<std::size_t>(values[p]);
      const double* src = t->probs.data() + row * m;
      std::copy(src, src + m, probs.begin());
      return;
    }
    const auto& net = std::get<MlpMechanism>(mech).net;
    std::vector<int> active;
    active.reserve(dag.n);
    for (int p = 0; p < dag.n; ++p)
      if (dag.has_edge(p, node)) active.push_back(p * m + values[p]);
    net.forward(active, probs);
    softmax_inplace(probs);
  }
};

inline GroundTruthScm make_scm(Dag dag, int m, std::vector<Mechanism> mechanisms) {
  validate_dag(dag);
  if (m < 2) throw std::invalid_argument("make_scm: need at least two categories");
  if (mechanisms.size() != static_cast<std::size_t>(dag.n))
    throw std::invalid_argument("make_scm: one mechanism per node required");
  GroundTruthScm scm{std::move(dag), m, std::move(mechanisms), {}};
  scm.topo = *topological_order(scm.dag);
  return scm;
}

namespace detail {

// Smallest over parents of the largest conditional shift that flipping just
// that parent can produce (total variation, maximized over the other
// parents' configurations). Zero response means the edge is invisible in
// data. Config enumeration is strided down to 4096 rows for very wide
// parent sets.
inline double mechanism_response(const TwoLayerMlp& net, const Dag& dag, int node, int m) {
  const std::vector<int> parents = dag.parents(node);
  if (parents.empty()) return 1.0;
  double total_configs = 1.0;
  for (std::size_t k = 0; k < parents.size(); ++k) total_configs *= m;
  const long configs = total_configs > 4096.0 ? 4096 : static_cast<long>(total_configs);
  const long stride =
      total_configs > 4096.0 ? static_cast<long>(total_configs / 4096.0) : 1;

  std::vector<int> values(dag.n, 0);
  std::vector<double> pa(m), pb(m);
  std::vector<int> active;
  auto conditional = [&](std::span<double> out) {
    active.clear();
    for (int p : parents) active.push_back(p * m + values[p]);
    net.forward(active, out);
    softmax_inplace(out);
  };

  double min_response = 1.0;
  for (int target_parent : parents) {
    double best = 0.0;
    for (long c = 0; c < configs; ++c) {
      long rem = c * stride;
      for (std::size_t k = parents.size(); k-- > 0;) {
        values[parents[k]] = static_cast<int>(rem % m);
        rem /= m;
      }
      for (int va = 0; va < m && best < 1.0; ++va) {
        values[target_parent] = va;
        conditional(pa);
        for (int vb = va + 1; vb < m; ++vb) {
          values[target_parent] = vb;
          conditional(pb);
          double tv = 0.0;
          for (int cat = 0; cat < m; ++cat) tv += std::abs(pa[cat] - pb[cat]);
          best = std::max(best, tv / 2.0);
        }
      }
    }
    min_response = std::min(min_response, best);
  }
  return min_response;
}

}  // namespace detail

// MLP ground truth: weights semi-orthogonal scaled into [-2.5, 2.5], biases
// uniform in [-1.1, 1.1]. Mechanisms whose conditional barely responds to
// one of their parents are redrawn (up to a cap, keeping the most responsive
// draw), so every edge of the benchmark graph is actually visible in data.
inline GroundTruthScm init_mlp_scm(const Dag& dag, int m, int hidden, Rng& rng,
                                   double min_edge_response = 0.1) {
  validate_dag(dag);
  if (m < 2) throw std::invalid_argument("init_mlp_scm: need at least two categories");
  if (hidden < 1) throw std::invalid_argument("init_mlp_scm: hidden width must be >= 1");
  std::vector<Mechanism> mechs;
  mechs.reserve(dag.n);
  for (int i = 0; i < dag.n; ++i) {
    TwoLayerMlp best;
    double best_response = -1.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      TwoLayerMlp net(dag.n * m, hidden, m);
      net.w1 = orthogonal_scaled(hidden, dag.n * m, 2.5, rng);
      net.w2 = orthogonal_scaled(m, hidden, 2.5, rng);
      for (double& b : net.b1) b = uniform_in(rng, -1.1, 1.1);
      for (double& b : net.b2) b = uniform_in(rng, -1.1, 1.1);
      const double response = detail::mechanism_response(net, dag, i, m);
      if (response > best_response) {
        best_response = response;
        best = std::move(net);
      }
      if (best_response >= min_edge_response) break;
    }
    mechs.push_back(MlpMechanism{std::move(best)});
  }
  return make_scm(dag, m, std::move(mechs));
}

// Ancestral sampling: variables drawn parent-before-child; intervened nodes
// come from the hard-uniform policy and ignore their mechanisms.
inline SampleBatch ancestral_sample(const GroundTruthScm& scm,
                                    const std::optional<InterventionTarget>& target,
                                    std::size_t batch, Rng& rng) {
  if (target) target->validate_for(scm.n());
  SampleBatch out;
  out.n = scm.n();
  out.m = scm.m;
  out.batch = batch;
  out.values.assign(batch * scm.n(), 0);
  out.regime = target;
  std::vector<double> probs(scm.m);
  for (std::size_t row = 0; row < batch; ++row) {
    int* vals = out.values.data() + row * scm.n();
    for (int node : scm.topo) {
      if (target && target->contains(node)) {
        vals[node] = uniform_int(rng, scm.m);
      } else {
        scm.conditional(node, {vals, static_cast<std::size_t>(scm.n())}, probs);
        vals[node] = categorical(rng, probs);
      }
    }
  }
  return out;
}

// Measurement noise: each cell is independently resampled among the other
// m-1 categories with probability eta (a bit-flip at m = 2). Applies to
// intervened columns as well; regime metadata is untouched.
inline SampleBatch corrupt(const SampleBatch& batch, double eta, Rng& rng) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("corrupt: eta must be in [0,1]");
  SampleBatch out = batch;
  out.noise_level = eta;
  if (eta == 0.0) return out;
  for (int& v : out.values) {
    if (uniform01(rng) < eta) {
      int shift = 1 + uniform_int(rng, batch.m - 1);
      v = (v + shift) % batch.m;
    }
  }
  return out;
}

// One row per sample: x0..x{n-1},regime. Regime is "obs" or the
// semicolon-joined intervened node list.
inline void write_batch_csv(std::ostream& os, const SampleBatch& b) {
  for (int i = 0; i < b.n; ++i) os << "x" << i << ",";
  os << "regime\n";
  const std::string regime = b.regime ? b.regime->label() : "obs";
  for (std::size_t r = 0; r < b.batch; ++r) {
    for (int i = 0; i < b.n; ++i) os << b.at(r, i) << ",";
    os << regime << "\n";
  }
}

}  // namespace causal
