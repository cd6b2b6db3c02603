/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#ifndef LKGP_KERNELS_HPP
#define LKGP_KERNELS_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace lkgp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Free parameters of the product kernel, all kept in log space.
/// Layout of the flat parameter vector (length d + 3):
///   [0, d)  RBF log-lengthscales
///   [d]     Matern-5/2 log-lengthscale
///   [d+1]   Matern-5/2 log-outputscale (log of the signal variance)
///   [d+2]   log noise variance (standardized-output units)
struct ProductKernelParams {
  VectorXd rbf_log_lengthscales;
  double matern_log_lengthscale = 0.0;
  double matern_log_outputscale = 0.0;
  double log_noise = 0.0;

  Index input_dim() const { return rbf_log_lengthscales.size(); }
  Index free_count() const { return input_dim() + 3; }
  double noise_variance() const { return std::exp(log_noise); }

  VectorXd to_vector() const;
  static ProductKernelParams from_vector(const Eigen::Ref<const VectorXd>& v, Index d);

  /// Initialization used by model fitting: prior means where priors exist,
  /// log(0.25) / 0 for the Matern lengthscale / outputscale.
  static ProductKernelParams initial(Index d);
};

/// Unit-variance RBF Gram matrix; the product's overall scale lives in the
/// Matern factor's outputscale.
MatrixXd rbf_gram(const Eigen::Ref<const MatrixXd>& x,
                  const Eigen::Ref<const MatrixXd>& x2,
                  const Eigen::Ref<const VectorXd>& log_lengthscales);

/// Matern-5/2 Gram matrix with scalar lengthscale and outputscale.
MatrixXd matern52_gram(const Eigen::Ref<const VectorXd>& t,
                       const Eigen::Ref<const VectorXd>& t2, double log_lengthscale,
                       double log_outputscale);

/// Derivatives of the factor Grams with respect to each log-parameter.
/// Each parameter touches exactly one factor; the untouched side is an
/// empty matrix. The noise parameter has both sides empty (its derivative
/// is sigma^2 I on the observed block, handled by the objective).
struct GramGradients {
  std::vector<MatrixXd> d_left;   // dK1/dtheta_k, empty when zero
  std::vector<MatrixXd> d_right;  // dK2/dtheta_k, empty when zero
};

GramGradients gram_grads(const Eigen::Ref<const MatrixXd>& x,
                         const Eigen::Ref<const VectorXd>& t,
                         const ProductKernelParams& params);

/// Log-normal priors from the training recipe, expressed as normal
/// densities over the log-parameters.
struct PriorSpec {
  double rbf_log_mean;  // sqrt(2) + 0.5 * log d
  double rbf_log_std;   // sqrt(3)
  double noise_log_mean = -4.0;
  double noise_log_std = 1.0;

  explicit PriorSpec(Index d);
};

struct LogPrior {
  double value = 0.0;
  VectorXd grad;  // with respect to all d+3 log-parameters
};

LogPrior log_prior(const ProductKernelParams& params, Index d);

namespace ref {
/// Serial reference implementations, kept for testing the parallel kernels
/// and for the serial-vs-parallel benchmark.
MatrixXd rbf_gram(const Eigen::Ref<const MatrixXd>& x,
                  const Eigen::Ref<const MatrixXd>& x2,
                  const Eigen::Ref<const VectorXd>& log_lengthscales);
MatrixXd matern52_gram(const Eigen::Ref<const VectorXd>& t,
                       const Eigen::Ref<const VectorXd>& t2, double log_lengthscale,
                       double log_outputscale);
/// Explicit Kronecker product; oracle for the lazy operators.
MatrixXd dense_kron(const Eigen::Ref<const MatrixXd>& a,
                    const Eigen::Ref<const MatrixXd>& b);
}  // namespace ref

}  // namespace lkgp

#endif  // LKGP_KERNELS_HPP
