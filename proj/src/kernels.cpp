/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include "lkgp/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lkgp {

namespace {

constexpr double kSqrt5 = 2.2360679774997896;

double rbf_entry(const Eigen::Ref<const MatrixXd>& x,
                 const Eigen::Ref<const MatrixXd>& x2,
                 const VectorXd& inv_ls2, Index i, Index j) {
  double q = 0.0;
  for (Index k = 0; k < x.cols(); ++k) {
    const double diff = x(i, k) - x2(j, k);
    q += diff * diff * inv_ls2(k);
  }
  q = std::max(q, 0.0);
  return std::exp(-0.5 * q);
}

double matern_entry(double r, double inv_ls, double outputscale) {
  const double a = kSqrt5 * r * inv_ls;
  return outputscale * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

double normal_logpdf(double x, double mean, double std) {
  const double z = (x - mean) / std;
  return -0.5 * z * z - std::log(std) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

VectorXd ProductKernelParams::to_vector() const {
  VectorXd v(free_count());
  v.head(input_dim()) = rbf_log_lengthscales;
  v(input_dim()) = matern_log_lengthscale;
  v(input_dim() + 1) = matern_log_outputscale;
  v(input_dim() + 2) = log_noise;
  return v;
}

ProductKernelParams ProductKernelParams::from_vector(
    const Eigen::Ref<const VectorXd>& v, Index d) {
  if (v.size() != d + 3) {
    throw std::invalid_argument("ProductKernelParams: expected d+3 entries");
  }
  ProductKernelParams p;
  p.rbf_log_lengthscales = v.head(d);
  p.matern_log_lengthscale = v(d);
  p.matern_log_outputscale = v(d + 1);
  p.log_noise = v(d + 2);
  return p;
}

ProductKernelParams ProductKernelParams::initial(Index d) {
  const PriorSpec prior(d);
  ProductKernelParams p;
  p.rbf_log_lengthscales = VectorXd::Constant(d, prior.rbf_log_mean);
  p.matern_log_lengthscale = std::log(0.25);
  p.matern_log_outputscale = 0.0;
  p.log_noise = prior.noise_log_mean;
  return p;
}

MatrixXd rbf_gram(const Eigen::Ref<const MatrixXd>& x,
                  const Eigen::Ref<const MatrixXd>& x2,
                  const Eigen::Ref<const VectorXd>& log_lengthscales) {
  if (x.cols() != x2.cols() || x.cols() != log_lengthscales.size() || x.cols() < 1) {
    throw std::invalid_argument("rbf_gram: dimension mismatch");
  }
  const VectorXd inv_ls2 = (-2.0 * log_lengthscales).array().exp();
  MatrixXd out(x.rows(), x2.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x2.rows(); ++j) {
      out(i, j) = rbf_entry(x, x2, inv_ls2, i, j);
    }
  }
  return out;
}

MatrixXd matern52_gram(const Eigen::Ref<const VectorXd>& t,
                       const Eigen::Ref<const VectorXd>& t2, double log_lengthscale,
                       double log_outputscale) {
  const double inv_ls = std::exp(-log_lengthscale);
  const double outputscale = std::exp(log_outputscale);
  MatrixXd out(t.size(), t2.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < t.size(); ++i) {
    for (Index j = 0; j < t2.size(); ++j) {
      out(i, j) = matern_entry(std::abs(t(i) - t2(j)), inv_ls, outputscale);
    }
  }
  return out;
}

GramGradients gram_grads(const Eigen::Ref<const MatrixXd>& x,
                         const Eigen::Ref<const VectorXd>& t,
                         const ProductKernelParams& params) {
  const Index d = params.input_dim();
  if (x.cols() != d) {
    throw std::invalid_argument("gram_grads: hyperparameter dimension mismatch");
  }
  GramGradients grads;
  grads.d_left.resize(static_cast<std::size_t>(params.free_count()));
  grads.d_right.resize(static_cast<std::size_t>(params.free_count()));

  const MatrixXd k1 = rbf_gram(x, x, params.rbf_log_lengthscales);
  // d/d(log l_k) exp(-0.5 sum_k sq_k / l_k^2) = K1 .* sq_k / l_k^2
  for (Index k = 0; k < d; ++k) {
    const double inv_ls2 = std::exp(-2.0 * params.rbf_log_lengthscales(k));
    MatrixXd dk(x.rows(), x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.rows(); ++j) {
        const double diff = x(i, k) - x(j, k);
        dk(i, j) = k1(i, j) * diff * diff * inv_ls2;
      }
    }
    grads.d_left[static_cast<std::size_t>(k)] = std::move(dk);
  }

  const double inv_ls = std::exp(-params.matern_log_lengthscale);
  const double outputscale = std::exp(params.matern_log_outputscale);
  // d/d(log l) [os (1 + a + a^2/3) e^-a] = os (a^2 (1 + a) / 3) e^-a, a = sqrt5 r / l
  MatrixXd dk2_ls(t.size(), t.size());
  for (Index i = 0; i < t.size(); ++i) {
    for (Index j = 0; j < t.size(); ++j) {
      const double a = kSqrt5 * std::abs(t(i) - t(j)) * inv_ls;
      dk2_ls(i, j) = outputscale * (a * a * (1.0 + a) / 3.0) * std::exp(-a);
    }
  }
  grads.d_right[static_cast<std::size_t>(d)] = std::move(dk2_ls);
  grads.d_right[static_cast<std::size_t>(d + 1)] =
      matern52_gram(t, t, params.matern_log_lengthscale, params.matern_log_outputscale);
  // index d+2 (noise) stays empty on both sides
  return grads;
}

PriorSpec::PriorSpec(Index d)
    : rbf_log_mean(std::numbers::sqrt2 + 0.5 * std::log(static_cast<double>(d))),
      rbf_log_std(std::sqrt(3.0)) {
  if (d < 1) {
    throw std::invalid_argument("PriorSpec: d must be >= 1");
  }
}

LogPrior log_prior(const ProductKernelParams& params, Index d) {
  const PriorSpec prior(d);
  LogPrior out;
  out.grad = VectorXd::Zero(params.free_count());
  for (Index k = 0; k < d; ++k) {
    const double theta = params.rbf_log_lengthscales(k);
    out.value += normal_logpdf(theta, prior.rbf_log_mean, prior.rbf_log_std);
    out.grad(k) = -(theta - prior.rbf_log_mean) /
                  (prior.rbf_log_std * prior.rbf_log_std);
  }
  out.value += normal_logpdf(params.log_noise, prior.noise_log_mean,
                             prior.noise_log_std);
  out.grad(d + 2) = -(params.log_noise - prior.noise_log_mean) /
                    (prior.noise_log_std * prior.noise_log_std);
  // Matern parameters carry flat priors; their components stay zero.
  return out;
}

namespace ref {

MatrixXd rbf_gram(const Eigen::Ref<const MatrixXd>& x,
                  const Eigen::Ref<const MatrixXd>& x2,
                  const Eigen::Ref<const VectorXd>& log_lengthscales) {
  const VectorXd inv_ls2 = (-2.0 * log_lengthscales).array().exp();
  MatrixXd out(x.rows(), x2.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x2.rows(); ++j) {
      out(i, j) = rbf_entry(x, x2, inv_ls2, i, j);
    }
  }
  return out;
}

MatrixXd matern52_gram(const Eigen::Ref<const VectorXd>& t,
                       const Eigen::Ref<const VectorXd>& t2, double log_lengthscale,
                       double log_outputscale) {
  const double inv_ls = std::exp(-log_lengthscale);
  const double outputscale = std::exp(log_outputscale);
  MatrixXd out(t.size(), t2.size());
  for (Index i = 0; i < t.size(); ++i) {
    for (Index j = 0; j < t2.size(); ++j) {
      out(i, j) = matern_entry(std::abs(t(i) - t2(j)), inv_ls, outputscale);
    }
  }
  return out;
}

MatrixXd dense_kron(const Eigen::Ref<const MatrixXd>& a,
                    const Eigen::Ref<const MatrixXd>& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace ref

}  // namespace lkgp
