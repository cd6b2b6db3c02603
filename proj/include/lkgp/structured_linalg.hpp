/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#ifndef LKGP_STRUCTURED_LINALG_HPP
#define LKGP_STRUCTURED_LINALG_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lkgp/alloc_tracker.hpp"

namespace lkgp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Lazy representation of K1 (x) K2 for symmetric factors; the full
/// nm x nm matrix is never stored.
class KroneckerOperator {
 public:
  KroneckerOperator(MatrixXd left, MatrixXd right);

  Index n() const { return left_.rows(); }
  Index m() const { return right_.rows(); }
  Index dim() const { return n() * m(); }

  const MatrixXd& left() const { return left_; }
  const MatrixXd& right() const { return right_; }

 private:
  MatrixXd left_;   // K1, n x n
  MatrixXd right_;  // K2, m x m
  tracker::TrackedBytes tracked_;
};

/// Observation pattern over the n x m grid. Flattening is config-major:
/// grid cell (i, j) maps to flat index i*m + j.
class ProjectionMask {
 public:
  ProjectionMask(std::vector<std::uint8_t> observed, Index n, Index m);
  static ProjectionMask full(Index n, Index m);

  Index grid_rows() const { return n_; }
  Index grid_cols() const { return m_; }
  Index count() const { return static_cast<Index>(indices_.size()); }
  bool is_full() const { return count() == n_ * m_; }
  bool observed_at(Index i, Index j) const {
    return observed_[static_cast<std::size_t>(i * m_ + j)] != 0;
  }
  const std::vector<Index>& indices() const { return indices_; }

  /// P: select observed rows. full is nm x k, result is p x k.
  MatrixXd gather(const Eigen::Ref<const MatrixXd>& full) const;
  /// P^T: zero padding. proj is p x k, result is nm x k.
  MatrixXd scatter(const Eigen::Ref<const MatrixXd>& proj) const;

 private:
  Index n_ = 0, m_ = 0;
  std::vector<std::uint8_t> observed_;
  std::vector<Index> indices_;  // sorted flat indices of observed cells
};

/// Computes (K1 (x) K2) V for a batch of flattened grid vectors (nm x k)
/// via two dense products per column; never materializes the product.
MatrixXd kron_mvm(const KroneckerOperator& op, const Eigen::Ref<const MatrixXd>& v);

/// Cross-covariance application: (A (x) B) applied to a flattened grid
/// vector, where A is n2 x n and B is m2 x m. v is n*m x k, result n2*m2 x k.
MatrixXd kron_cross_mvm(const Eigen::Ref<const MatrixXd>& a,
                        const Eigen::Ref<const MatrixXd>& b,
                        const Eigen::Ref<const MatrixXd>& v);

/// P (K1 (x) K2) P^T + (noise + jitter) I over the observed entries.
class ProjectedKroneckerOperator {
 public:
  ProjectedKroneckerOperator(KroneckerOperator kron, ProjectionMask mask,
                             double noise, double jitter);

  Index dim() const { return mask_.count(); }
  const KroneckerOperator& kron() const { return kron_; }
  const ProjectionMask& mask() const { return mask_; }
  double noise() const { return noise_; }
  double jitter() const { return jitter_; }

  ProjectedKroneckerOperator with_jitter(double jitter) const {
    return {kron_, mask_, noise_, jitter};
  }

  /// Applies the operator to a batch of right-hand sides (p x k).
  MatrixXd apply(const Eigen::Ref<const MatrixXd>& v) const;

 private:
  KroneckerOperator kron_;
  ProjectionMask mask_;
  double noise_;
  double jitter_;
};

/// 1e-6 times the mean diagonal of K1 (x) K2 restricted to observed entries.
double default_jitter(const KroneckerOperator& kron, const ProjectionMask& mask);

struct CgConfig {
  double rel_tolerance = 0.01;
  int max_iters = 10000;
};

struct CgReport {
  std::vector<int> iterations;
  std::vector<double> final_rel_residual;
  std::vector<bool> converged;

  bool all_converged() const;
};

struct CgResult {
  MatrixXd solutions;
  CgReport report;
};

using LinearOperator = std::function<MatrixXd(const Eigen::Ref<const MatrixXd>&)>;

/// Batched conjugate gradients. All right-hand sides share iterations;
/// convergence is tracked per column and converged columns are frozen.
/// x0, when given, is an initial guess (same shape as rhs); convergence is
/// still measured against the right-hand-side norms.
CgResult cg_solve(const LinearOperator& op, const Eigen::Ref<const MatrixXd>& rhs,
                  const CgConfig& cfg, const MatrixXd* x0 = nullptr);

CgResult cg_solve(const ProjectedKroneckerOperator& op,
                  const Eigen::Ref<const MatrixXd>& rhs, const CgConfig& cfg,
                  const MatrixXd* x0 = nullptr);

/// Rademacher probe vectors, regenerated deterministically from the seed.
struct ProbeSet {
  MatrixXd probes;  // p x z, entries in {-1, +1}
  std::uint64_t seed = 0;

  static ProbeSet rademacher(Index p, int z, std::uint64_t seed);
};

/// Stochastic Lanczos quadrature estimate of log det(op).
double slq_logdet(const ProjectedKroneckerOperator& op, const ProbeSet& probes,
                  int lanczos_steps);

struct TraceEstimate {
  double value = 0.0;
  bool cg_converged = true;
};

/// Hutchinson estimate of tr(op^-1 dop) using CG solves against the probes.
TraceEstimate hutchinson_trace_grad(const ProjectedKroneckerOperator& op,
                                    const LinearOperator& dop, const ProbeSet& probes,
                                    const CgConfig& cfg);

/// Square root of K1 (x) K2 through factor eigendecompositions, with
/// eigenvalues clipped at zero. Cached so batches of draws reuse the
/// decompositions.
class KroneckerRoot {
 public:
  KroneckerRoot(const Eigen::Ref<const MatrixXd>& k1,
                const Eigen::Ref<const MatrixXd>& k2);

  /// Maps standard normal draws (nm x s) to draws with covariance K1 (x) K2.
  MatrixXd sample(const Eigen::Ref<const MatrixXd>& eps) const;

 private:
  MatrixXd root_left_;   // U1 * sqrt(L1)
  MatrixXd root_right_;  // U2 * sqrt(L2)
  tracker::TrackedBytes tracked_;
};

/// Single-vector convenience wrapper around KroneckerRoot.
VectorXd kron_root_sample(const Eigen::Ref<const MatrixXd>& k1,
                          const Eigen::Ref<const MatrixXd>& k2,
                          const Eigen::Ref<const VectorXd>& eps);

inline constexpr Index kDenseCapDefault = 8192;

/// Thrown when a dense materialization would exceed the safety cap.
struct DenseCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Explicit p x p matrix of the projected operator. Exists for the exact
/// backend, oracle tests and the scaling baseline; refuses above the cap.
MatrixXd dense_materialize(const ProjectedKroneckerOperator& op,
                           Index cap = kDenseCapDefault);

/// P (A (x) B) P^T without the diagonal shift, materialized densely.
/// Backs the exact-backend gradient terms.
MatrixXd dense_projected(const Eigen::Ref<const MatrixXd>& a,
                         const Eigen::Ref<const MatrixXd>& b,
                         const ProjectionMask& mask, Index cap = kDenseCapDefault);

}  // namespace lkgp

#endif  // LKGP_STRUCTURED_LINALG_HPP
