#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "causal/rng.hpp"

namespace causal {

// Directed acyclic graph over nodes 0..n-1.
//
// Adjacency convention used throughout the workbench: adj(child, parent) == 1
// means "parent is a direct cause of child" (row = child, column = parent).
// This matches the soft-adjacency convention, where row i holds the beliefs
// about the causes of X_i.
struct Dag {
  int n = 0;
  std::vector<std::uint8_t> adj;  // row-major n*n, adj[child*n + parent]

  Dag() = default;
  explicit Dag(int nodes) : n(nodes), adj(static_cast<std::size_t>(nodes) * nodes, 0) {
    if (nodes < 1) throw std::invalid_argument("Dag: need at least one node");
  }

  std::uint8_t at(int child, int parent) const {
    return adj[static_cast<std::size_t>(child) * n + parent];
  }
  bool has_edge(int parent, int child) const { return at(child, parent) != 0; }
  void add_edge(int parent, int child) {
    if (parent == child) throw std::invalid_argument("Dag: self-loop");
    adj[static_cast<std::size_t>(child) * n + parent] = 1;
  }
  void remove_edge(int parent, int child) {
    adj[static_cast<std::size_t>(child) * n + parent] = 0;
  }

  std::span<const std::uint8_t> parent_row(int child) const {
    return {adj.data() + static_cast<std::size_t>(child) * n, static_cast<std::size_t>(n)};
  }

  std::vector<int> parents(int child) const {
    std::vector<int> out;
    for (int p = 0; p < n; ++p)
      if (has_edge(p, child)) out.push_back(p);
    return out;
  }

  int edge_count() const {
    int c = 0;
    for (auto v : adj) c += v;
    return c;
  }

  // Edges as (parent, child) pairs in sorted order.
  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int p = 0; p < n; ++p)
      for (int c = 0; c < n; ++c)
        if (has_edge(p, c)) out.emplace_back(p, c);
    return out;
  }

  friend bool operator==(const Dag&, const Dag&) = default;
};

// Kahn's algorithm. Returns a parent-before-child order, or nullopt on a
// cycle. Doubles as the independent acyclicity check used by the samplers'
// property tests.
inline std::optional<std::vector<int>> topological_order(const Dag& g) {
  std::vector<int> indeg(g.n, 0);
  for (int c = 0; c < g.n; ++c)
    for (int p = 0; p < g.n; ++p)
      if (g.has_edge(p, c)) ++indeg[c];
  std::vector<int> ready, order;
  for (int i = g.n - 1; i >= 0; --i)
    if (indeg[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    int v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (int c = 0; c < g.n; ++c)
      if (g.has_edge(v, c) && --indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<int>(order.size()) != g.n) return std::nullopt;
  return order;
}

inline bool is_acyclic(const Dag& g) { return topological_order(g).has_value(); }

inline void validate_dag(const Dag& g) {
  if (g.n < 1) throw std::invalid_argument("Dag: n must be >= 1");
  if (g.adj.size() != static_cast<std::size_t>(g.n) * g.n)
    throw std::invalid_argument("Dag: adjacency size mismatch");
  for (int i = 0; i < g.n; ++i)
    if (g.at(i, i) != 0) throw std::invalid_argument("Dag: non-zero diagonal");
  if (!is_acyclic(g)) throw std::invalid_argument("Dag: contains a cycle");
}

enum class GraphKind { chain, collider, tree, bidiag, jungle, full };

inline GraphKind graph_kind_from_string(const std::string& s) {
  if (s == "chain") return GraphKind::chain;
  if (s == "collider") return GraphKind::collider;
  if (s == "tree") return GraphKind::tree;
  if (s == "bidiag") return GraphKind::bidiag;
  if (s == "jungle") return GraphKind::jungle;
  if (s == "full") return GraphKind::full;
  throw std::invalid_argument("unknown graph kind: " + s);
}

inline std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::chain: return "chain";
    case GraphKind::collider: return "collider";
    case GraphKind::tree: return "tree";
    case GraphKind::bidiag: return "bidiag";
    case GraphKind::jungle: return "jungle";
    case GraphKind::full: return "full";
  }
  throw std::logic_error("unreachable");
}

// Deterministic structured benchmark graphs.
//   chain:    i -> i+1
//   collider: i -> n-1 for all i < n-1
//   tree:     binary tree, i -> 2i+1, i -> 2i+2
//   bidiag:   i -> i+1 and i -> i+2
//   jungle:   tree plus grandparent edges i -> 4i+3 .. 4i+6
//   full:     i -> j for all i < j
inline Dag structured_graph(GraphKind kind, int n) {
  const int min_n = (kind == GraphKind::tree || kind == GraphKind::jungle) ? 3 : 2;
  if (n < min_n) {
    throw std::invalid_argument("structured_graph: " + to_string(kind) + " needs n >= " +
                                std::to_string(min_n));
  }
  Dag g(n);
  switch (kind) {
    case GraphKind::chain:
      for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
      break;
    case GraphKind::collider:
      for (int i = 0; i + 1 < n; ++i) g.add_edge(i, n - 1);
      break;
    case GraphKind::tree:
      for (int i = 0; i < n; ++i)
        for (int c : {2 * i + 1, 2 * i + 2})
          if (c < n) g.add_edge(i, c);
      break;
    case GraphKind::bidiag:
      for (int i = 0; i < n; ++i)
        for (int c : {i + 1, i + 2})
          if (c < n) g.add_edge(i, c);
      break;
    case GraphKind::jungle:
      for (int i = 0; i < n; ++i) {
        for (int c : {2 * i + 1, 2 * i + 2})
          if (c < n) g.add_edge(i, c);
        for (int c = 4 * i + 3; c <= 4 * i + 6; ++c)
          if (c < n) g.add_edge(i, c);
      }
      break;
    case GraphKind::full:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
      break;
  }
  return g;
}

// Random DAG with exactly density_k * n edges: draw a uniform node
// permutation, then k*n distinct position pairs in its upper triangle.
// Acyclic by construction.
inline Dag erdos_renyi(int n, int density_k, Rng& rng) {
  if (n < 2) throw std::invalid_argument("erdos_renyi: n must be >= 2");
  if (density_k < 1) throw std::invalid_argument("erdos_renyi: density must be >= 1");
  const long long want = static_cast<long long>(density_k) * n;
  const long long slots = static_cast<long long>(n) * (n - 1) / 2;
  if (want > slots) {
    throw std::invalid_argument("erdos_renyi: " + std::to_string(want) + " edges requested but only " +
                                std::to_string(slots) + " positions exist");
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[uniform_int(rng, i + 1)]);

  std::vector<std::pair<int, int>> positions;
  positions.reserve(slots);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) positions.emplace_back(a, b);
  // partial Fisher-Yates: the first `want` entries are a uniform subset
  for (long long i = 0; i < want; ++i) {
    long long j = i + uniform_int(rng, static_cast<int>(positions.size() - i));
    std::swap(positions[i], positions[j]);
  }
  Dag g(n);
  for (long long i = 0; i < want; ++i) {
    auto [a, b] = positions[i];
    g.add_edge(perm[a], perm[b]);
  }
  return g;
}

// Structural Hamming distance; a reversed edge counts as one edit.
inline int shd(const Dag& g1, const Dag& g2) {
  if (g1.n != g2.n) throw std::invalid_argument("shd: node-count mismatch");
  int d = 0;
  for (int i = 0; i < g1.n; ++i) {
    for (int j = i + 1; j < g1.n; ++j) {
      // state of the unordered pair {i,j}: 0 none, 1 i->j, 2 j->i
      int s1 = g1.has_edge(i, j) ? 1 : (g1.has_edge(j, i) ? 2 : 0);
      int s2 = g2.has_edge(i, j) ? 1 : (g2.has_edge(j, i) ? 2 : 0);
      d += (s1 != s2);
    }
  }
  return d;
}

struct NodeTopoProps {
  int out_degree = 0;
  int descendant_count = 0;
  int topo_level = 0;  // longest-path depth from any root
};

inline std::vector<NodeTopoProps> topo_props(const Dag& g) {
  auto order = topological_order(g);
  if (!order) throw std::invalid_argument("topo_props: graph is cyclic");
  std::vector<NodeTopoProps> props(g.n);
  for (int p = 0; p < g.n; ++p)
    for (int c = 0; c < g.n; ++c)
      if (g.has_edge(p, c)) ++props[p].out_degree;

  for (int v : *order) {
    int level = 0;
    for (int p : g.parents(v)) level = std::max(level, props[p].topo_level + 1);
    props[v].topo_level = level;
  }

  for (int v = 0; v < g.n; ++v) {
    std::vector<std::uint8_t> seen(g.n, 0);
    std::vector<int> stack{v};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int c = 0; c < g.n; ++c) {
        if (g.has_edge(u, c) && !seen[c]) {
          seen[c] = 1;
          stack.push_back(c);
        }
      }
    }
    props[v].descendant_count =
        static_cast<int>(std::count(seen.begin(), seen.end(), std::uint8_t{1}));
  }
  return props;
}

// Pearson correlation between per-node selection counts and a per-node
// topological property. Throws domain_error when either input is constant.
inline double selection_correlation(std::span<const double> counts, std::span<const double> props) {
  if (counts.size() != props.size())
    throw std::invalid_argument("selection_correlation: length mismatch");
  if (counts.size() < 3) throw std::invalid_argument("selection_correlation: need length >= 3");
  const double k = static_cast<double>(counts.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    mx += counts[i];
    my += props[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    sxx += (counts[i] - mx) * (counts[i] - mx);
    syy += (props[i] - my) * (props[i] - my);
    sxy += (counts[i] - mx) * (props[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("selection_correlation: constant input, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

// Line format: header "dag n=<N>", then one "edge <parent> <child>" per edge.
inline void write_dag(std::ostream& os, const Dag& g) {
  os << "dag n=" << g.n << "\n";
  for (auto [p, c] : g.edges()) os << "edge " << p << " " << c << "\n";
}

inline Dag read_dag(std::istream& is) {
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("dag parse error at line " + std::to_string(lineno) + ": " + msg);
  };
  Dag g;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (!have_header) {
      if (tok != "dag") fail("expected 'dag n=<N>' header");
      std::string nspec;
      ls >> nspec;
      if (nspec.rfind("n=", 0) != 0) fail("expected n=<N>");
      int n = 0;
      try {
        n = std::stoi(nspec.substr(2));
      } catch (const std::exception&) {
        fail("bad node count");
      }
      if (n < 1) fail("node count must be >= 1");
      g = Dag(n);
      have_header = true;
    } else if (tok == "edge") {
      int p = -1, c = -1;
      if (!(ls >> p >> c)) fail("expected 'edge <parent> <child>'");
      if (p < 0 || p >= g.n || c < 0 || c >= g.n) fail("edge endpoint out of range");
      if (p == c) fail("self-loop");
      g.add_edge(p, c);
    } else {
      fail("unknown directive '" + tok + "'");
    }
  }
  if (!have_header) {
    lineno = 0;
    fail("missing 'dag' header");
  }
  validate_dag(g);
  return g;
}

// Adjacency matrix as CSV, row = child, column = parent.
inline void write_adjacency_csv(std::ostream& os, const Dag& g) {
  for (int c = 0; c < g.n; ++c) {
    for (int p = 0; p < g.n; ++p) {
      if (p) os << ",";
      os << static_cast<int>(g.at(c, p));
    }
    os << "\n";
  }
}

}  // namespace causal
