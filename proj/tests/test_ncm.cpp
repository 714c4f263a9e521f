#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "causal/dag_sampler.hpp"
#include "causal/ncm.hpp"
#include "causal/optim.hpp"

using namespace causal;

namespace {

SampleBatch random_binary_batch(int n, std::size_t rows, Rng& rng) {
  SampleBatch b;
  b.n = n;
  b.m = 2;
  b.batch = rows;
  b.values.resize(rows * n);
  for (int& v : b.values) v = uniform_int(rng, 2);
  return b;
}

// dense-forward oracle: explicit one-hot vector times explicit matrices
std::vector<double> dense_forward(const TwoLayerMlp& net, const std::vector<double>& x) {
  std::vector<double> hidden(net.hidden), out(net.out);
  for (int h = 0; h < net.hidden; ++h) {
    double acc = net.b1[h];
    for (int i = 0; i < net.in; ++i) acc += net.w1[static_cast<std::size_t>(h) * net.in + i] * x[i];
    hidden[h] = acc > 0.0 ? acc : net.leak * acc;
  }
  for (int o = 0; o < net.out; ++o) {
    double acc = net.b2[o];
    for (int h = 0; h < net.hidden; ++h)
      acc += net.w2[static_cast<std::size_t>(o) * net.hidden + h] * hidden[h];
    out[o] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("soft adjacency: sigmoid off-diagonal, pinned zero diagonal, monotone") {
  StructuralParams sp(3);
  sp.gamma.at(0, 1) = 0.0;
  sp.gamma.at(0, 2) = 20.0;
  sp.gamma.at(1, 1) = 123.0;  // stored diagonal value must be ignored
  Matrix a = soft_adjacency(sp);
  REQUIRE(a.at(0, 1) == Catch::Approx(0.5));
  REQUIRE(a.at(0, 2) == Catch::Approx(1.0).margin(1e-8));
  REQUIRE(a.at(1, 1) == 0.0);
  REQUIRE(a.at(2, 2) == 0.0);

  Rng rng = make_rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const double lo = uniform_in(rng, -5, 5);
    const double hi = lo + uniform_in(rng, 0, 5);
    REQUIRE(sigmoid(lo) <= sigmoid(hi));
  }
}

TEST_CASE("conditional logits: masking contract") {
  Rng rng = make_rng(7);
  NeuralCausalModel ncm = init_ncm(3, 2, 8, rng);
  std::vector<double> la(2), lb(2);

  // all-zero mask: bias-only forward, independent of the sample
  std::vector<std::uint8_t> zero_mask{0, 0, 0};
  std::vector<int> x1{0, 0, 0}, x2{1, 1, 1};
  conditional_logits(ncm.functions, 1, x1, zero_mask, la);
  conditional_logits(ncm.functions, 1, x2, zero_mask, lb);
  REQUIRE(la == lb);

  // masked coordinates never influence the logits
  std::vector<std::uint8_t> mask{1, 0, 0};  // node 1 sees only node 0
  std::vector<int> y1{1, 0, 0}, y2{1, 1, 1};
  conditional_logits(ncm.functions, 1, y1, mask, la);
  conditional_logits(ncm.functions, 1, y2, mask, lb);
  REQUIRE(la == lb);

  // self-unmasked is a contract violation
  std::vector<std::uint8_t> self_mask{1, 1, 0};
  REQUIRE_THROWS_AS(conditional_logits(ncm.functions, 1, y1, self_mask, la), std::logic_error);
}

TEST_CASE("conditional logits agree bitwise with a dense-forward oracle") {
  Rng rng = make_rng(11);
  NeuralCausalModel ncm = init_ncm(3, 2, 8, rng);
  std::vector<std::uint8_t> full_mask{1, 1, 0};  // node 2: all others visible
  std::vector<int> x{1, 0, 1};
  std::vector<double> logits(2);
  conditional_logits(ncm.functions, 2, x, full_mask, logits);

  std::vector<double> onehot(6, 0.0);
  onehot[0 * 2 + 1] = 1.0;  // x0 = 1
  onehot[1 * 2 + 0] = 1.0;  // x1 = 0
  const auto expect = dense_forward(ncm.functions.nets[2], onehot);
  REQUIRE(logits[0] == expect[0]);
  REQUIRE(logits[1] == expect[1]);
}

TEST_CASE("untrained model sits near the uniform-predictor loss") {
  Rng rng = make_rng(13);
  NeuralCausalModel ncm = init_ncm(4, 2, 32, rng);
  SampleBatch batch = random_binary_batch(4, 256, rng);
  auto graphs = sample_hypothesis_set(ncm.structure, 8, 0.1, rng);
  const auto gb = nll_and_grad(ncm.functions, batch, graphs, rng);
  REQUIRE(gb.loss == Catch::Approx(std::log(2.0)).margin(0.2));
}

TEST_CASE("backprop matches central finite differences on a 3-node model") {
  Rng rng = make_rng(17);
  NeuralCausalModel ncm = init_ncm(3, 2, 6, rng);
  // keep every pre-activation at least 0.4 away from the leaky-relu kink so
  // the +-1e-4 perturbations never cross it, while both branches are hit
  for (auto& net : ncm.functions.nets) {
    for (double& w : net.w1) w = uniform_in(rng, -0.03, 0.03);
    for (std::size_t h = 0; h < net.b1.size(); ++h) net.b1[h] = h % 2 ? 0.5 : -0.5;
  }
  SampleBatch batch = random_binary_batch(3, 16, rng);
  std::vector<Dag> graphs;
  graphs.push_back(structured_graph(GraphKind::chain, 3));
  graphs.push_back(structured_graph(GraphKind::collider, 3));
  std::vector<int> assignment(batch.batch);
  for (std::size_t j = 0; j < batch.batch; ++j) assignment[j] = static_cast<int>(j % 2);

  {  // verify the kink margin the check relies on
    std::vector<double> logits(2), pre(6);
    std::vector<int> active;
    double min_abs = 1e9;
    for (std::size_t j = 0; j < batch.batch; ++j) {
      std::span<const int> values{batch.values.data() + j * 3, 3};
      for (int i = 0; i < 3; ++i) {
        masked_active_slots(values, graphs[assignment[j]].parent_row(i), i, 2, active);
        ncm.functions.nets[i].forward(active, logits, pre);
        for (double z : pre) min_abs = std::min(min_abs, std::abs(z));
      }
    }
    REQUIRE(min_abs > 0.1);
  }

  const auto analytic = nll_and_grad(ncm.functions, batch, graphs, assignment);
  const double eps = 1e-4;
  double max_rel = 0.0;
  for (std::size_t node = 0; node < 3; ++node) {
    TwoLayerMlp& net = ncm.functions.nets[node];
    const TwoLayerMlp& g = analytic.grads[node];
    const std::pair<std::vector<double>*, const std::vector<double>*> tensors[] = {
        {&net.w1, &g.w1}, {&net.b1, &g.b1}, {&net.w2, &g.w2}, {&net.b2, &g.b2}};
    for (auto [params, grads] : tensors) {
      for (std::size_t i = 0; i < params->size(); ++i) {
        const double saved = (*params)[i];
        (*params)[i] = saved + eps;
        const double up = nll_and_grad(ncm.functions, batch, graphs, assignment).loss;
        (*params)[i] = saved - eps;
        const double down = nll_and_grad(ncm.functions, batch, graphs, assignment).loss;
        (*params)[i] = saved;
        const double fd = (up - down) / (2 * eps);
        const double an = (*grads)[i];
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  REQUIRE(max_rel < 1e-4);
}

TEST_CASE("training reduces the loss on chain data with the true graph fixed") {
  Rng rng = make_rng(19);
  const auto scm = init_mlp_scm(structured_graph(GraphKind::chain, 3), 2, 16, rng);
  const SampleBatch batch = ancestral_sample(scm, std::nullopt, 256, rng);
  NeuralCausalModel ncm = init_ncm(3, 2, 16, rng);
  std::vector<Dag> truth{scm.dag};
  std::vector<int> assignment(batch.batch, 0);

  const double initial = nll_and_grad(ncm.functions, batch, truth, assignment).loss;
  FunctionalAdam adam(ncm.functions);
  for (int it = 0; it < 2000; ++it) {
    const auto gb = nll_and_grad(ncm.functions, batch, truth, assignment);
    adam.step(ncm.functions, gb);
  }
  const double final_loss = nll_and_grad(ncm.functions, batch, truth, assignment).loss;
  REQUIRE(final_loss < initial);
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
  std::vector<double> params{1.0, -2.0};
  std::vector<double> grads{0.0, 0.0};
  AdamState state(2);
  for (int t = 0; t < 10; ++t) adam_step(params, grads, state);
  REQUIRE(std::abs(params[0] - 1.0) < 1e-12);
  REQUIRE(std::abs(params[1] + 2.0) < 1e-12);
}

TEST_CASE("adam: constant gradient moves parameters against its sign") {
  std::vector<double> params{0.0};
  std::vector<double> grads{2.5};
  AdamState state(1);
  for (int t = 0; t < 100; ++t) adam_step(params, grads, state);
  REQUIRE(params[0] < 0.0);
}

TEST_CASE("adam: converges to the minimum of a quadratic bowl") {
  std::vector<double> params{0.0, 0.0};
  const double ax = 0.3, ay = -0.7;
  AdamState state(2);
  std::vector<double> grads(2);
  for (int t = 0; t < 5000; ++t) {
    grads[0] = 2.0 * (params[0] - ax);
    grads[1] = 20.0 * (params[1] - ay);
    adam_step(params, grads, state);
  }
  REQUIRE(std::abs(params[0] - ax) < 1e-3);
  REQUIRE(std::abs(params[1] - ay) < 1e-3);
}

TEST_CASE("adam: non-finite gradient aborts") {
  std::vector<double> params{0.0};
  std::vector<double> grads{std::nan("")};
  AdamState state(1);
  REQUIRE_THROWS_AS(adam_step(params, grads, state), std::runtime_error);
}

TEST_CASE("masking invariance fuzz") {
  Rng rng = make_rng(23);
  NeuralCausalModel ncm = init_ncm(5, 2, 8, rng);
  std::vector<double> la(2), lb(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int node = uniform_int(rng, 5);
    std::vector<std::uint8_t> mask(5);
    for (int i = 0; i < 5; ++i) mask[i] = i == node ? 0 : static_cast<std::uint8_t>(uniform_int(rng, 2));
    std::vector<int> x(5), y(5);
    for (int i = 0; i < 5; ++i) x[i] = y[i] = uniform_int(rng, 2);
    bool perturbed = false;
    for (int i = 0; i < 5; ++i) {
      if (!mask[i] && uniform_int(rng, 2)) {
        y[i] = 1 - y[i];
        perturbed = true;
      }
    }
    conditional_logits(ncm.functions, node, x, mask, la);
    conditional_logits(ncm.functions, node, y, mask, lb);
    REQUIRE(la == lb);
    (void)perturbed;
  }
}
