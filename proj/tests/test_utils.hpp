/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
// Shared helpers and independent dense oracles used by the test suites.
// Everything here works from explicit dense matrices so that the lazy
// structured paths are checked against a separate computation route.
#ifndef LKGP_TESTS_TEST_UTILS_HPP
#define LKGP_TESTS_TEST_UTILS_HPP

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "lkgp/kernels.hpp"
#include "lkgp/structured_linalg.hpp"

namespace lkgp::testutil {

inline MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline VectorXd random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline MatrixXd random_spd(Index n, std::mt19937_64& rng, double ridge = 1.0) {
  const MatrixXd a = random_matrix(n, n, rng);
  MatrixXd k = a * a.transpose() / static_cast<double>(n);
  k.diagonal().array() += ridge;
  return k;
}

inline MatrixXd random_symmetric(Index n, std::mt19937_64& rng) {
  const MatrixXd a = random_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

/// Random mask with every config row observed at least once.
inline ProjectionMask random_mask(Index n, Index m, std::mt19937_64& rng,
                                  double keep_prob = 0.6) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<Index> col(0, m - 1);
  std::vector<std::uint8_t> obs(static_cast<std::size_t>(n * m), 0);
  for (Index i = 0; i < n; ++i) {
    bool any = false;
    for (Index j = 0; j < m; ++j) {
      if (uniform(rng) < keep_prob) {
        obs[static_cast<std::size_t>(i * m + j)] = 1;
        any = true;
      }
    }
    if (!any) obs[static_cast<std::size_t>(i * m + col(rng))] = 1;
  }
  return ProjectionMask(obs, n, m);
}

struct DensePosterior {
  VectorXd mean;  // flattened test grid, config-major
  MatrixXd cov;
};

/// Dense GP conditioning oracle on the product space. Train covariance is
/// the masked submatrix of kron(k1, k2) plus (noise + jitter) I, built
/// entirely from explicit matrices.
inline DensePosterior dense_gp_posterior(
    const MatrixXd& k1, const MatrixXd& k2, const MatrixXd& k1_cross,
    const MatrixXd& k2_cross, const MatrixXd& k1_test, const MatrixXd& k2_test,
    const ProjectionMask& mask, double noise, double jitter, const VectorXd& y) {
  const Index m = k2.rows();
  const Index p = mask.count();
  const Index n_test = k1_cross.rows();
  const Index m_test = k2_cross.rows();
  const auto& idx = mask.indices();

  MatrixXd k_train(p, p);
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      k_train(a, b) = k1(idx[static_cast<std::size_t>(a)] / m,
                         idx[static_cast<std::size_t>(b)] / m) *
                      k2(idx[static_cast<std::size_t>(a)] % m,
                         idx[static_cast<std::size_t>(b)] % m);
    }
  }
  k_train.diagonal().array() += noise + jitter;

  MatrixXd k_cross(n_test * m_test, p);
  for (Index a = 0; a < n_test; ++a) {
    for (Index b = 0; b < m_test; ++b) {
      for (Index l = 0; l < p; ++l) {
        k_cross(a * m_test + b, l) =
            k1_cross(a, idx[static_cast<std::size_t>(l)] / m) *
            k2_cross(b, idx[static_cast<std::size_t>(l)] % m);
      }
    }
  }

  MatrixXd k_test(n_test * m_test, n_test * m_test);
  for (Index a = 0; a < n_test; ++a)
    for (Index b = 0; b < m_test; ++b)
      for (Index a2 = 0; a2 < n_test; ++a2)
        for (Index b2 = 0; b2 < m_test; ++b2)
          k_test(a * m_test + b, a2 * m_test + b2) =
              k1_test(a, a2) * k2_test(b, b2);

  const Eigen::LLT<MatrixXd> llt(k_train);
  DensePosterior out;
  out.mean = k_cross * llt.solve(y);
  out.cov = k_test - k_cross * llt.solve(k_cross.transpose());
  return out;
}

}  // namespace lkgp::testutil

#endif  // LKGP_TESTS_TEST_UTILS_HPP
