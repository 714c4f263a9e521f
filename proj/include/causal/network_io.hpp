#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "causal/scm.hpp"

namespace causal {

// Text format for table-based discrete networks:
//
//   net n=<N> m=<M>
//   parents <i> <p1> <p2> ...     (one line per node, parents ascending)
//   cpt <i>                       (followed by m^|parents| rows of m probs,
//                                  lexicographic parent order, lowest parent
//                                  index most significant)
//
// '#' starts a comment; blank lines are skipped. Every probability row must
// sum to 1 within 1e-6, and the parent structure must be acyclic.

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline GroundTruthScm load_discrete_network(std::istream& is, const std::string& name = "<stream>") {
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(name + ":" + std::to_string(lineno) + ": " + msg);
  };
  std::string line;
  auto next_content_line = [&](std::string& out) -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      out = line;
      return true;
    }
    return false;
  };

  std::string content;
  if (!next_content_line(content)) fail("empty file, expected 'net n=<N> m=<M>' header");
  int n = -1, m = -1;
  {
    std::istringstream ls(content);
    std::string tok, nspec, mspec;
    ls >> tok >> nspec >> mspec;
    if (tok != "net" || nspec.rfind("n=", 0) != 0 || mspec.rfind("m=", 0) != 0)
      fail("expected 'net n=<N> m=<M>' header");
    try {
      n = std::stoi(nspec.substr(2));
      m = std::stoi(mspec.substr(2));
    } catch (const std::exception&) {
      fail("bad n/m value in header");
    }
    if (n < 1) fail("n must be >= 1");
    if (m < 2) fail("m must be >= 2");
  }

  std::vector<std::vector<int>> parents(n);
  std::vector<bool> have_parents(n, false), have_cpt(n, false);
  std::vector<std::vector<double>> tables(n);

  while (next_content_line(content)) {
    std::istringstream ls(content);
    std::string tok;
    ls >> tok;
    if (tok == "parents") {
      int i = -1;
      if (!(ls >> i)) fail("expected 'parents <i> ...'");
      if (i < 0 || i >= n) fail("node index out of range");
      if (have_parents[i]) fail("duplicate parents line for node " + std::to_string(i));
      have_parents[i] = true;
      int p;
      while (ls >> p) {
        if (p < 0 || p >= n) fail("parent index out of range");
        if (p == i) fail("node cannot be its own parent");
        parents[i].push_back(p);
      }
      for (std::size_t k = 1; k < parents[i].size(); ++k)
        if (parents[i][k] <= parents[i][k - 1])
          fail("parents must be listed in strictly ascending order");
    } else if (tok == "cpt") {
      int i = -1;
      if (!(ls >> i)) fail("expected 'cpt <i>'");
      if (i < 0 || i >= n) fail("node index out of range");
      if (!have_parents[i]) fail("cpt before parents line for node " + std::to_string(i));
      if (have_cpt[i]) fail("duplicate cpt block for node " + std::to_string(i));
      have_cpt[i] = true;
      std::size_t rows = 1;
      for (std::size_t k = 0; k < parents[i].size(); ++k) rows *= m;
      tables[i].reserve(rows * m);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!next_content_line(content))
          fail("unexpected end of file inside cpt block for node " + std::to_string(i));
        std::istringstream rs(content);
        double sum = 0.0;
        for (int c = 0; c < m; ++c) {
          double v;
          if (!(rs >> v)) fail("expected " + std::to_string(m) + " probabilities");
          if (v < 0.0 || v > 1.0) fail("probability out of [0,1]");
          tables[i].push_back(v);
          sum += v;
        }
        std::string extra;
        if (rs >> extra) fail("trailing token '" + extra + "' in probability row");
        if (std::abs(sum - 1.0) > 1e-6)
          fail("probability row sums to " + detail::fmt_double(sum) + ", expected 1");
      }
    } else {
      fail("unknown directive '" + tok + "'");
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!have_parents[i]) fail("missing parents line for node " + std::to_string(i));
    if (!have_cpt[i]) fail("missing cpt block for node " + std::to_string(i));
  }

  Dag dag(n);
  for (int i = 0; i < n; ++i)
    for (int p : parents[i]) dag.add_edge(p, i);
  if (!is_acyclic(dag)) {
    lineno = 0;
    fail("parent structure is cyclic");
  }
  std::vector<Mechanism> mechs;
  mechs.reserve(n);
  for (int i = 0; i < n; ++i)
    mechs.push_back(TableMechanism{std::move(parents[i]), std::move(tables[i])});
  return make_scm(std::move(dag), m, std::move(mechs));
}

inline GroundTruthScm load_discrete_network(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open network file: " + path);
  return load_discrete_network(f, path);
}

// Serialize a table-based SCM. Probabilities are printed with 17 significant
// digits so a load/save cycle is bit-exact.
inline void save_discrete_network(std::ostream& os, const GroundTruthScm& scm) {
  os << "net n=" << scm.n() << " m=" << scm.m << "\n";
  for (int i = 0; i < scm.n(); ++i) {
    const auto* t = std::get_if<TableMechanism>(&scm.mechanisms[i]);
    if (!t) throw std::invalid_argument("save_discrete_network: node " + std::to_string(i) +
                                        " is not table-based (tabulate first)");
    os << "parents " << i;
    for (int p : t->parents) os << " " << p;
    os << "\n";
  }
  for (int i = 0; i < scm.n(); ++i) {
    const auto& t = std::get<TableMechanism>(scm.mechanisms[i]);
    os << "cpt " << i << "\n";
    const std::size_t rows = t.probs.size() / scm.m;
    for (std::size_t r = 0; r < rows; ++r) {
      for (int c = 0; c < scm.m; ++c) {
        if (c) os << " ";
        os << detail::fmt_double(t.probs[r * scm.m + c]);
      }
      os << "\n";
    }
  }
}

inline void save_discrete_network(const std::string& path, const GroundTruthScm& scm) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write network file: " + path);
  save_discrete_network(f, scm);
}

// Convert any SCM to explicit tables by enumerating parent configurations.
// Guarded against exploding CPTs on very dense graphs.
inline GroundTruthScm tabulate(const GroundTruthScm& scm, std::size_t max_rows_per_node = 1u << 16) {
  std::vector<Mechanism> mechs;
  mechs.reserve(scm.n());
  std::vector<int> values(scm.n(), 0);
  std::vector<double> probs(scm.m);
  for (int i = 0; i < scm.n(); ++i) {
    std::vector<int> parents = scm.dag.parents(i);
    std::size_t rows = 1;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      rows *= scm.m;
      if (rows > max_rows_per_node)
        throw std::invalid_argument("tabulate: node " + std::to_string(i) + " has too many parent configurations");
    }
    std::vector<double> table(rows * scm.m);
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t rem = r;
      for (std::size_t k = parents.size(); k-- > 0;) {
        values[parents[k]] = static_cast<int>(rem % scm.m);
        rem /= scm.m;
      }
      scm.conditional(i, values, probs);
      std::copy(probs.begin(), probs.end(), table.begin() + r * scm.m);
    }
    mechs.push_back(TableMechanism{std::move(parents), std::move(table)});
  }
  return make_scm(scm.dag, scm.m, std::move(mechs));
}

}  // namespace causal
