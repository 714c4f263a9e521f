#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "causal/rng.hpp"

namespace causal {

// Two-layer MLP with Leaky-ReLU between the layers. Used both for the
// ground-truth mechanisms and the learner's conditionals; inputs are
// concatenated one-hot encodings, so the forward pass takes the list of
// active input slots instead of a dense vector.
struct TwoLayerMlp {
  int in = 0;
  int hidden = 0;
  int out = 0;
  double leak = 0.1;
  std::vector<double> w1;  // hidden x in, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // out x hidden, row-major
  std::vector<double> b2;  // out

  TwoLayerMlp() = default;
  TwoLayerMlp(int in_dim, int hidden_dim, int out_dim, double leak_slope = 0.1)
      : in(in_dim),
        hidden(hidden_dim),
        out(out_dim),
        leak(leak_slope),
        w1(static_cast<std::size_t>(hidden_dim) * in_dim, 0.0),
        b1(hidden_dim, 0.0),
        w2(static_cast<std::size_t>(out_dim) * hidden_dim, 0.0),
        b2(out_dim, 0.0) {
    if (in_dim < 1 || hidden_dim < 1 || out_dim < 1)
      throw std::invalid_argument("TwoLayerMlp: dimensions must be positive");
  }

  std::size_t param_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  // logits for a sparse binary input (active = indices of 1-entries).
  // pre_act, when given, receives the hidden pre-activations for backprop.
  void forward(std::span<const int> active, std::span<double> logits,
               std::span<double> pre_act = {}) const {
    std::vector<double> local;
    std::span<double> z = pre_act;
    if (z.size() != static_cast<std::size_t>(hidden)) {
      local.assign(hidden, 0.0);
      z = local;
    }
    for (int h = 0; h < hidden; ++h) z[h] = b1[h];
    for (int a : active) {
      const double* col = w1.data() + a;
      for (int h = 0; h < hidden; ++h) z[h] += col[static_cast<std::size_t>(h) * in];
    }
    for (int o = 0; o < out; ++o) {
      double acc = b2[o];
      const double* row = w2.data() + static_cast<std::size_t>(o) * hidden;
      for (int h = 0; h < hidden; ++h) {
        const double a = z[h] > 0.0 ? z[h] : leak * z[h];
        acc += row[h] * a;
      }
      logits[o] = acc;
    }
  }
};

inline void softmax_inplace(std::span<double> v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

// log softmax(v)[idx] without materializing the full softmax
inline double log_softmax_at(std::span<const double> v, int idx) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - m);
  return v[idx] - m - std::log(sum);
}

// Semi-orthogonal rows x cols matrix scaled by `gain`: modified Gram-Schmidt
// on a Gaussian draw, so every entry lies within [-gain, gain]. Per-column
// max-rescaling would saturate the downstream softmax into constant 0/1
// conditionals; the gain form keeps the generated CPDs informative.
inline std::vector<double> orthogonal_scaled(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  // orthonormalize `small` vectors of length `big`
  std::vector<std::vector<double>> basis(small, std::vector<double>(big));
  for (auto& v : basis)
    for (double& x : v) x = normal(rng);
  for (int i = 0; i < small; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < big; ++k) dot += basis[i][k] * basis[j][k];
      for (int k = 0; k < big; ++k) basis[i][k] -= dot * basis[j][k];
    }
    double norm = 0.0;
    for (double x : basis[i]) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw std::runtime_error("orthogonal_scaled: degenerate draw");
    for (double& x : basis[i]) x /= norm;
  }
  std::vector<double> w(static_cast<std::size_t>(rows) * cols);
  auto entry = [&](int r, int c) { return rows <= cols ? basis[r][c] : basis[c][r]; };
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r)
      w[static_cast<std::size_t>(r) * cols + c] = gain * entry(r, c);
  return w;
}

}  // namespace causal
