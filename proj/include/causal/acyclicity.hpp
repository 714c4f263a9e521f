#pragma once

#include <cmath>
#include <stdexcept>

#include "causal/matrix.hpp"

namespace causal {

// Matrix exponential by scaling-and-squaring with a Taylor series. The
// matrices here are small (n <= 15) with entries in [0,1], so the plain
// series after scaling converges to machine precision quickly.
inline Matrix matrix_exponential(const Matrix& a) {
  if (!a.square()) throw std::invalid_argument("matrix_exponential: square matrix required");
  const int n = a.rows;
  int squarings = 0;
  double norm = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(a.at(i, j));
    norm = std::max(norm, row);
  }
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  Matrix scaled = a;
  const double factor = std::ldexp(1.0, -squarings);
  for (double& x : scaled.data) x *= factor;

  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 24; ++k) {
    term = multiply(term, scaled);
    for (double& x : term.data) x /= static_cast<double>(k);
    for (std::size_t i = 0; i < result.data.size(); ++i) result.data[i] += term.data[i];
    if (max_abs(term) < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

// Differentiable acyclicity penalty on a soft adjacency: tr(exp(A)) - n.
// Zero iff A encodes no directed cycles (in the thresholded sense, A >= 0).
inline double acyclicity_penalty(const Matrix& soft_adj) {
  const Matrix e = matrix_exponential(soft_adj);
  double tr = 0.0;
  for (int i = 0; i < e.rows; ++i) tr += e.at(i, i);
  return tr - static_cast<double>(e.rows);
}

// d tr(exp(A)) / dA = exp(A)^T.
inline Matrix acyclicity_penalty_grad(const Matrix& soft_adj) {
  const Matrix e = matrix_exponential(soft_adj);
  Matrix g(e.rows, e.cols);
  for (int i = 0; i < e.rows; ++i)
    for (int j = 0; j < e.cols; ++j) g.at(i, j) = e.at(j, i);
  return g;
}

}  // namespace causal
