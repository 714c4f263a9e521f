#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "causal/ncm.hpp"

namespace causal {

// Adam over one flat parameter vector.
struct AdamState {
  std::vector<double> m, v;
  long t = 0;

  explicit AdamState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamConfig& cfg = {}) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g))
      throw std::runtime_error("adam_step: non-finite gradient at index " + std::to_string(i));
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

// Adam state covering every functional tensor, in net order W1,b1,W2,b2.
struct FunctionalAdam {
  std::vector<AdamState> states;
  AdamConfig cfg;

  explicit FunctionalAdam(const FunctionalParams& fp, AdamConfig c = {}) : cfg(c) {
    for (const auto& net : fp.nets) {
      states.emplace_back(net.w1.size());
      states.emplace_back(net.b1.size());
      states.emplace_back(net.w2.size());
      states.emplace_back(net.b2.size());
    }
  }

  void step(FunctionalParams& fp, const GradientBundle& gb) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < fp.nets.size(); ++i) {
      auto& net = fp.nets[i];
      const auto& g = gb.grads[i];
      adam_step(net.w1, g.w1, states[s++], cfg);
      adam_step(net.b1, g.b1, states[s++], cfg);
      adam_step(net.w2, g.w2, states[s++], cfg);
      adam_step(net.b2, g.b2, states[s++], cfg);
    }
  }
};

}  // namespace causal
