#pragma once

#include "zqoc/zqoc.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace zqoc::testing {

inline constexpr double pi = std::numbers::pi;

inline Matrix sx() { return pauli('x'); }
inline Matrix sy() { return pauli('y'); }
inline Matrix sz() { return pauli('z'); }

/// Random su(n) element with Gaussian entries, scaled to Frobenius norm `size`.
inline AlgebraElement random_algebra(std::mt19937_64& rng, Eigen::Index n, double size = 1.0) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  AlgebraElement a = AlgebraElement::project(m);
  return a * (size / a.matrix().norm());
}

inline GroupElement random_group(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.1, 3.0);
  return expm(random_algebra(rng, n, u(rng)));
}

inline double dist(const Matrix& a, const Matrix& b) { return (a - b).norm(); }

/// Drift -(bx sx + by sy) of the single-spin model.
inline AlgebraElement spin_drift(double bx, double by) {
  return AlgebraElement::from_hamiltonian(model_hamiltonian(SingleSpin{bx, by, 1.0}));
}

inline AlgebraElement xxx_drift(double j) {
  return AlgebraElement::from_hamiltonian(model_hamiltonian(XXXChain{j}));
}

}  // namespace zqoc::testing
