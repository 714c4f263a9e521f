#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "causal/network_io.hpp"

using namespace causal;

namespace {

const char* kTwoNode =
    "net n=2 m=2\n"
    "parents 0\n"
    "parents 1 0\n"
    "cpt 0\n"
    "0.6 0.4\n"
    "cpt 1\n"
    "0.9 0.1\n"
    "0.1 0.9\n";

// BnLearn Asia structure, transcribed by hand once:
// 0=asia 1=tub 2=smoke 3=lung 4=bronc 5=either 6=xray 7=dysp
const std::vector<std::pair<int, int>> kAsiaEdges = {
    {0, 1}, {2, 3}, {2, 4}, {1, 5}, {3, 5}, {5, 6}, {5, 7}, {4, 7}};

}  // namespace

TEST_CASE("two-node network round-trips bit-exactly") {
  std::istringstream in(kTwoNode);
  const auto scm = load_discrete_network(in, "two_node");
  REQUIRE(scm.n() == 2);
  REQUIRE(scm.m == 2);
  REQUIRE(scm.dag.has_edge(0, 1));

  std::ostringstream first;
  save_discrete_network(first, scm);
  std::istringstream again(first.str());
  const auto reloaded = load_discrete_network(again, "reload");
  std::ostringstream second;
  save_discrete_network(second, reloaded);
  REQUIRE(first.str() == second.str());
  REQUIRE(std::get<TableMechanism>(reloaded.mechanisms[1]).probs ==
          std::vector<double>{0.9, 0.1, 0.1, 0.9});
}

TEST_CASE("bundled asia network matches the hand-transcribed reference adjacency") {
  const auto scm = load_discrete_network("networks/asia.net");
  REQUIRE(scm.n() == 8);
  REQUIRE(scm.dag.edge_count() == 8);
  Dag reference(8);
  for (auto [p, c] : kAsiaEdges) reference.add_edge(p, c);
  REQUIRE(shd(scm.dag, reference) == 0);
}

TEST_CASE("bundled sachs stand-in loads with the consensus structure") {
  const auto scm = load_discrete_network("networks/sachs.net");
  REQUIRE(scm.n() == 11);
  REQUIRE(scm.m == 3);
  REQUIRE(scm.dag.edge_count() == 17);
}

TEST_CASE("row-sum validation") {
  std::istringstream in(
      "net n=1 m=2\n"
      "parents 0\n"
      "cpt 0\n"
      "0.6 0.3\n");
  REQUIRE_THROWS_WITH(load_discrete_network(in, "bad"),
                      Catch::Matchers::ContainsSubstring("sums to"));
}

TEST_CASE("parse errors carry line numbers") {
  std::istringstream in(
      "net n=2 m=2\n"
      "parents 0\n"
      "parents 1 0\n"
      "cpt 0\n"
      "0.6 0.4\n"
      "cpt 1\n"
      "0.9 oops\n");
  REQUIRE_THROWS_WITH(load_discrete_network(in, "bad"),
                      Catch::Matchers::ContainsSubstring("bad:7"));
}

TEST_CASE("cyclic parent structure is rejected") {
  std::istringstream in(
      "net n=2 m=2\n"
      "parents 0 1\n"
      "parents 1 0\n"
      "cpt 0\n"
      "0.5 0.5\n"
      "0.5 0.5\n"
      "cpt 1\n"
      "0.5 0.5\n"
      "0.5 0.5\n");
  REQUIRE_THROWS_WITH(load_discrete_network(in, "cyclic"),
                      Catch::Matchers::ContainsSubstring("cyclic"));
}

TEST_CASE("missing blocks and duplicate directives are rejected") {
  std::istringstream missing(
      "net n=2 m=2\n"
      "parents 0\n"
      "parents 1 0\n"
      "cpt 0\n"
      "0.6 0.4\n");
  REQUIRE_THROWS_WITH(load_discrete_network(missing, "m"),
                      Catch::Matchers::ContainsSubstring("missing cpt"));

  std::istringstream dup(
      "net n=1 m=2\n"
      "parents 0\n"
      "parents 0\n"
      "cpt 0\n"
      "1 0\n");
  REQUIRE_THROWS_WITH(load_discrete_network(dup, "d"),
                      Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("tabulating an mlp scm preserves its conditionals") {
  Rng rng = make_rng(9);
  const auto scm = init_mlp_scm(structured_graph(GraphKind::collider, 4), 2, 8, rng);
  const auto tables = tabulate(scm);
  std::vector<double> pa(2), pb(2);
  std::vector<int> values{1, 0, 1, 0};
  for (int node = 0; node < 4; ++node) {
    scm.conditional(node, values, pa);
    tables.conditional(node, values, pb);
    REQUIRE(pa[0] == Catch::Approx(pb[0]).margin(1e-12));
  }
  std::ostringstream os;
  REQUIRE_NOTHROW(save_discrete_network(os, tables));
}
