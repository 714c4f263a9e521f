#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "causal/scm.hpp"

using namespace causal;

namespace {

GroundTruthScm single_node_table(double p0, double p1) {
  return make_scm(Dag(1), 2, {TableMechanism{{}, {p0, p1}}});
}

// plug-in mutual information (nats) between column a and the joint of cols
double empirical_mi(const SampleBatch& b, int a, const std::vector<int>& others) {
  std::map<std::pair<int, long>, double> joint;
  std::map<int, double> pa;
  std::map<long, double> pb;
  for (std::size_t r = 0; r < b.batch; ++r) {
    long key = 0;
    for (int o : others) key = key * b.m + b.at(r, o);
    const int va = b.at(r, a);
    joint[{va, key}] += 1.0;
    pa[va] += 1.0;
    pb[key] += 1.0;
  }
  const double n = static_cast<double>(b.batch);
  double mi = 0.0;
  for (const auto& [k, c] : joint) {
    const double pxy = c / n, px = pa[k.first] / n, py = pb[k.second] / n;
    mi += pxy * std::log(pxy / (px * py));
  }
  return mi;
}

}  // namespace

TEST_CASE("intervention target validation") {
  REQUIRE_THROWS_AS(InterventionTarget(std::vector<int>{}), std::invalid_argument);
  REQUIRE_THROWS_AS(InterventionTarget(std::vector<int>{-1}), std::invalid_argument);
  InterventionTarget t(std::vector<int>{2, 0, 2});
  REQUIRE(t.nodes == std::vector<int>{0, 2});  // sorted, distinct
  REQUIRE(t.label() == "0;2");
  REQUIRE_THROWS_AS(t.validate_for(2), std::invalid_argument);
}

TEST_CASE("mlp scm: conditional rows are distributions on every parent configuration") {
  Rng rng = make_rng(3);
  for (GraphKind kind : {GraphKind::chain, GraphKind::full, GraphKind::collider}) {
    const Dag dag = structured_graph(kind, 5);
    const auto scm = init_mlp_scm(dag, 2, 16, rng);
    std::vector<double> probs(2);
    std::vector<int> values(5, 0);
    for (int node = 0; node < 5; ++node) {
      const auto parents = dag.parents(node);
      const int configs = 1 << parents.size();
      for (int c = 0; c < configs; ++c) {
        for (std::size_t k = 0; k < parents.size(); ++k) values[parents[k]] = (c >> k) & 1;
        scm.conditional(node, values, probs);
        REQUIRE(probs[0] + probs[1] == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(probs[0] >= 0.0);
      }
    }
  }
}

TEST_CASE("mlp scm: isolated node has a fixed categorical, same seed is bit-identical") {
  Dag dag(3);
  dag.add_edge(1, 2);  // node 0 isolated
  Rng rng_a = make_rng(11), rng_b = make_rng(11);
  const auto a = init_mlp_scm(dag, 2, 8, rng_a);
  const auto b = init_mlp_scm(dag, 2, 8, rng_b);

  std::vector<double> p1(2), p2(2);
  std::vector<int> v1{0, 0, 0}, v2{0, 1, 1};
  a.conditional(0, v1, p1);
  a.conditional(0, v2, p2);
  REQUIRE(p1 == p2);  // ignores all inputs

  for (int node = 0; node < 3; ++node) {
    const auto& na = std::get<MlpMechanism>(a.mechanisms[node]).net;
    const auto& nb = std::get<MlpMechanism>(b.mechanisms[node]).net;
    REQUIRE(na.w1 == nb.w1);
    REQUIRE(na.b1 == nb.b1);
    REQUIRE(na.w2 == nb.w2);
    REQUIRE(na.b2 == nb.b2);
  }
}

TEST_CASE("hard intervention forces the uniform policy") {
  Rng rng = make_rng(5);
  const auto scm = init_mlp_scm(structured_graph(GraphKind::chain, 2), 2, 16, rng);
  const auto batch =
      ancestral_sample(scm, InterventionTarget{std::vector<int>{0}}, 10000, rng);
  double ones = 0;
  for (std::size_t r = 0; r < batch.batch; ++r) ones += batch.at(r, 0);
  REQUIRE(ones / 10000.0 == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("observational sampling matches an exact binomial oracle") {
  Rng rng = make_rng(17);
  const auto scm = single_node_table(0.3, 0.7);
  const auto batch = ancestral_sample(scm, std::nullopt, 10000, rng);
  double ones = 0;
  for (std::size_t r = 0; r < batch.batch; ++r) ones += batch.at(r, 0);
  const double sigma = std::sqrt(10000 * 0.3 * 0.7);
  REQUIRE(std::abs(ones - 7000.0) <= 3.0 * sigma);
}

TEST_CASE("downstream mechanisms are untouched by an upstream intervention") {
  Rng rng = make_rng(23);
  const auto scm = init_mlp_scm(structured_graph(GraphKind::chain, 3), 2, 16, rng);
  const auto batch =
      ancestral_sample(scm, InterventionTarget{std::vector<int>{0}}, 10000, rng);
  std::vector<double> probs(2);
  std::vector<int> values(3, 0);
  for (int x0 = 0; x0 < 2; ++x0) {
    double count = 0, ones = 0;
    for (std::size_t r = 0; r < batch.batch; ++r) {
      if (batch.at(r, 0) != x0) continue;
      count += 1;
      ones += batch.at(r, 1);
    }
    values[0] = x0;
    scm.conditional(1, values, probs);
    const double p = probs[1];
    const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / count);
    REQUIRE(ones / count == Catch::Approx(p).margin(3.0 * sigma + 1e-9));
  }
}

TEST_CASE("hard-intervention independence: MI between target and its parents is tiny") {
  Rng rng = make_rng(29);
  const auto scm = init_mlp_scm(structured_graph(GraphKind::chain, 2), 2, 16, rng);
  const auto batch =
      ancestral_sample(scm, InterventionTarget{std::vector<int>{1}}, 10000, rng);
  REQUIRE(empirical_mi(batch, 1, {0}) < 0.01);
}

TEST_CASE("seed determinism for sampling") {
  Rng rng_scm = make_rng(31);
  const auto scm = init_mlp_scm(structured_graph(GraphKind::tree, 5), 2, 16, rng_scm);
  Rng a = make_rng(101), b = make_rng(101);
  const auto ba = ancestral_sample(scm, std::nullopt, 256, a);
  const auto bb = ancestral_sample(scm, std::nullopt, 256, b);
  REQUIRE(ba.values == bb.values);
}

TEST_CASE("corrupt: identity at eta=0, full flip at eta=1, binomial rate in between") {
  Rng rng = make_rng(37);
  const auto scm = single_node_table(0.5, 0.5);
  const auto batch = ancestral_sample(scm, std::nullopt, 100000, rng);

  const auto same = corrupt(batch, 0.0, rng);
  REQUIRE(same.values == batch.values);

  const auto flipped = corrupt(batch, 1.0, rng);
  for (std::size_t r = 0; r < batch.batch; ++r)
    REQUIRE(flipped.at(r, 0) == 1 - batch.at(r, 0));

  const auto noisy = corrupt(batch, 0.05, rng);
  double flips = 0;
  for (std::size_t r = 0; r < batch.batch; ++r) flips += noisy.at(r, 0) != batch.at(r, 0);
  REQUIRE(flips / 100000.0 == Catch::Approx(0.05).margin(0.003));
}

TEST_CASE("corrupt preserves shape and regime, commutes with row subsetting") {
  Rng rng = make_rng(41);
  const auto scm = init_mlp_scm(structured_graph(GraphKind::chain, 4), 2, 8, rng);
  const InterventionTarget target{std::vector<int>{2}};
  const auto batch = ancestral_sample(scm, target, 128, rng);
  Rng ca = make_rng(55);
  const auto noisy = corrupt(batch, 0.1, ca);
  REQUIRE(noisy.n == batch.n);
  REQUIRE(noisy.batch == batch.batch);
  REQUIRE(noisy.regime == batch.regime);
  REQUIRE(noisy.noise_level == 0.1);

  // corrupting a prefix equals taking the prefix of the corrupted batch
  SampleBatch prefix = batch;
  prefix.batch = 64;
  prefix.values.resize(64 * batch.n);
  Rng cb = make_rng(55);
  const auto noisy_prefix = corrupt(prefix, 0.1, cb);
  for (std::size_t i = 0; i < noisy_prefix.values.size(); ++i)
    REQUIRE(noisy_prefix.values[i] == noisy.values[i]);
}

TEST_CASE("corrupt generalizes to m>2 by resampling among other categories") {
  Dag dag(1);
  const auto scm = make_scm(dag, 3, {TableMechanism{{}, {1.0, 0.0, 0.0}}});
  Rng rng = make_rng(43);
  const auto batch = ancestral_sample(scm, std::nullopt, 30000, rng);
  const auto noisy = corrupt(batch, 1.0, rng);
  double c1 = 0, c2 = 0;
  for (std::size_t r = 0; r < noisy.batch; ++r) {
    REQUIRE(noisy.at(r, 0) != 0);  // always flipped away
    c1 += noisy.at(r, 0) == 1;
    c2 += noisy.at(r, 0) == 2;
  }
  REQUIRE(c1 / 30000.0 == Catch::Approx(0.5).margin(0.02));  // uniform over the others
  REQUIRE(c2 / 30000.0 == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("batch csv export") {
  SampleBatch b;
  b.n = 2;
  b.m = 2;
  b.batch = 2;
  b.values = {0, 1, 1, 1};
  b.regime = InterventionTarget{std::vector<int>{1}};
  std::ostringstream os;
  write_batch_csv(os, b);
  REQUIRE(os.str() == "x0,x1,regime\n0,1,1\n1,1,1\n");
}
