/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include "lkgp/structured_linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace lkgp {

namespace {

using RowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_symmetric(const MatrixXd& a, const char* name) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(name) + ": factor must be square");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw std::invalid_argument(std::string(name) + ": factor is not symmetric");
  }
}

}  // namespace

KroneckerOperator::KroneckerOperator(MatrixXd left, MatrixXd right)
    : left_(std::move(left)), right_(std::move(right)) {
  check_symmetric(left_, "KroneckerOperator(left)");
  check_symmetric(right_, "KroneckerOperator(right)");
  tracked_ = tracker::TrackedBytes(
      static_cast<std::int64_t>(sizeof(double)) *
      (left_.size() + right_.size()));
}

ProjectionMask::ProjectionMask(std::vector<std::uint8_t> observed, Index n, Index m)
    : n_(n), m_(m), observed_(std::move(observed)) {
  if (n_ < 1 || m_ < 1 ||
      observed_.size() != static_cast<std::size_t>(n_ * m_)) {
    throw std::invalid_argument("ProjectionMask: grid shape mismatch");
  }
  indices_.reserve(observed_.size());
  for (Index i = 0; i < n_; ++i) {
    bool any = false;
    for (Index j = 0; j < m_; ++j) {
      if (observed_[static_cast<std::size_t>(i * m_ + j)]) {
        indices_.push_back(i * m_ + j);
        any = true;
      }
    }
    if (!any) {
      throw std::invalid_argument("ProjectionMask: config row " +
                                  std::to_string(i) + " has no observed entries");
    }
  }
}

ProjectionMask ProjectionMask::full(Index n, Index m) {
  return ProjectionMask(std::vector<std::uint8_t>(static_cast<std::size_t>(n * m), 1),
                        n, m);
}

MatrixXd ProjectionMask::gather(const Eigen::Ref<const MatrixXd>& full) const {
  if (full.rows() != n_ * m_) {
    throw std::invalid_argument("gather: expected nm rows");
  }
  MatrixXd out(count(), full.cols());
  for (Index a = 0; a < count(); ++a) {
    out.row(a) = full.row(indices_[static_cast<std::size_t>(a)]);
  }
  return out;
}

MatrixXd ProjectionMask::scatter(const Eigen::Ref<const MatrixXd>& proj) const {
  if (proj.rows() != count()) {
    throw std::invalid_argument("scatter: expected p rows");
  }
  MatrixXd out = MatrixXd::Zero(n_ * m_, proj.cols());
  for (Index a = 0; a < count(); ++a) {
    out.row(indices_[static_cast<std::size_t>(a)]) = proj.row(a);
  }
  return out;
}

MatrixXd kron_cross_mvm(const Eigen::Ref<const MatrixXd>& a,
                        const Eigen::Ref<const MatrixXd>& b,
                        const Eigen::Ref<const MatrixXd>& v) {
  const Index n = a.cols();
  const Index m = b.cols();
  if (v.rows() != n * m) {
    throw std::invalid_argument("kron_cross_mvm: vector length must be n*m");
  }
  const Index k = v.cols();
  MatrixXd out(a.rows() * b.rows(), k);
  tracker::TrackedBytes scratch(static_cast<std::int64_t>(sizeof(double)) *
                                (out.size() + n * m));
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < k; ++c) {
    RowMajorMap grid(v.col(c).data(), n, m);
    RowMajorMutMap res(out.col(c).data(), a.rows(), b.rows());
    res = a * grid * b.transpose();
  }
  return out;
}

MatrixXd kron_mvm(const KroneckerOperator& op, const Eigen::Ref<const MatrixXd>& v) {
  return kron_cross_mvm(op.left(), op.right(), v);
}

ProjectedKroneckerOperator::ProjectedKroneckerOperator(KroneckerOperator kron,
                                                       ProjectionMask mask,
                                                       double noise, double jitter)
    : kron_(std::move(kron)), mask_(std::move(mask)), noise_(noise), jitter_(jitter) {
  if (mask_.grid_rows() != kron_.n() || mask_.grid_cols() != kron_.m()) {
    throw std::invalid_argument("ProjectedKroneckerOperator: mask/kron shape mismatch");
  }
  if (noise_ < 0.0 || jitter_ < 0.0) {
    throw std::invalid_argument("ProjectedKroneckerOperator: negative diagonal shift");
  }
}

MatrixXd ProjectedKroneckerOperator::apply(const Eigen::Ref<const MatrixXd>& v) const {
  if (v.rows() != dim()) {
    throw std::invalid_argument("ProjectedKroneckerOperator::apply: dimension mismatch");
  }
  MatrixXd out = mask_.gather(kron_mvm(kron_, mask_.scatter(v)));
  const double shift = noise_ + jitter_;
  if (shift != 0.0) {
    out += shift * v;
  }
  return out;
}

double default_jitter(const KroneckerOperator& kron, const ProjectionMask& mask) {
  const Index m = kron.m();
  double diag_sum = 0.0;
  for (Index flat : mask.indices()) {
    diag_sum += kron.left()(flat / m, flat / m) * kron.right()(flat % m, flat % m);
  }
  return 1e-6 * diag_sum / static_cast<double>(mask.count());
}

bool CgReport::all_converged() const {
  for (bool c : converged) {
    if (!c) return false;
  }
  return true;
}

CgResult cg_solve(const LinearOperator& op, const Eigen::Ref<const MatrixXd>& rhs,
                  const CgConfig& cfg, const MatrixXd* x0) {
  if (cfg.rel_tolerance <= 0.0 || cfg.max_iters < 1) {
    throw std::invalid_argument("cg_solve: invalid config");
  }
  const Index p = rhs.rows();
  const Index k = rhs.cols();
  if (x0 != nullptr && (x0->rows() != p || x0->cols() != k)) {
    throw std::invalid_argument("cg_solve: initial guess shape mismatch");
  }

  MatrixXd x = x0 != nullptr ? *x0 : MatrixXd::Zero(p, k);
  MatrixXd r = x0 != nullptr ? MatrixXd(rhs - op(x)) : MatrixXd(rhs);
  MatrixXd dir = r;
  tracker::TrackedBytes scratch(static_cast<std::int64_t>(sizeof(double)) * 4 * p * k);

  CgReport report;
  report.iterations.assign(static_cast<std::size_t>(k), 0);
  report.final_rel_residual.assign(static_cast<std::size_t>(k), 0.0);
  report.converged.assign(static_cast<std::size_t>(k), false);

  VectorXd bnorm(k), rs(k);
  Index active = 0;
  for (Index c = 0; c < k; ++c) {
    bnorm(c) = rhs.col(c).norm();
    rs(c) = r.col(c).squaredNorm();
    if (bnorm(c) == 0.0 ||
        std::sqrt(rs(c)) / bnorm(c) <= cfg.rel_tolerance) {
      report.converged[static_cast<std::size_t>(c)] = true;
      if (bnorm(c) != 0.0) {
        report.final_rel_residual[static_cast<std::size_t>(c)] =
            std::sqrt(rs(c)) / bnorm(c);
      }
    } else {
      ++active;
    }
  }

  for (int it = 1; it <= cfg.max_iters && active > 0; ++it) {
    const MatrixXd a_dir = op(dir);
    for (Index c = 0; c < k; ++c) {
      if (report.converged[static_cast<std::size_t>(c)]) continue;
      const double denom = dir.col(c).dot(a_dir.col(c));
      const double alpha = rs(c) / denom;
      x.col(c) += alpha * dir.col(c);
      r.col(c) -= alpha * a_dir.col(c);
      const double rs_new = r.col(c).squaredNorm();
      if (!std::isfinite(rs_new)) {
        throw std::runtime_error("cg_solve: numerical breakdown (non-finite residual)");
      }
      const double rel = std::sqrt(rs_new) / bnorm(c);
      report.iterations[static_cast<std::size_t>(c)] = it;
      report.final_rel_residual[static_cast<std::size_t>(c)] = rel;
      if (rel <= cfg.rel_tolerance) {
        report.converged[static_cast<std::size_t>(c)] = true;
        --active;
      } else {
        dir.col(c) = r.col(c) + (rs_new / rs(c)) * dir.col(c);
      }
      rs(c) = rs_new;
    }
  }
  return {std::move(x), std::move(report)};
}

CgResult cg_solve(const ProjectedKroneckerOperator& op,
                  const Eigen::Ref<const MatrixXd>& rhs, const CgConfig& cfg,
                  const MatrixXd* x0) {
  return cg_solve(
      [&op](const Eigen::Ref<const MatrixXd>& v) { return op.apply(v); }, rhs, cfg,
      x0);
}

ProbeSet ProbeSet::rademacher(Index p, int z, std::uint64_t seed) {
  if (p < 1 || z < 1) {
    throw std::invalid_argument("ProbeSet: need p >= 1 and z >= 1");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  MatrixXd probes(p, z);
  for (Index c = 0; c < z; ++c) {
    for (Index i = 0; i < p; ++i) {
      probes(i, c) = coin(rng) ? 1.0 : -1.0;
    }
  }
  return {std::move(probes), seed};
}

double slq_logdet(const ProjectedKroneckerOperator& op, const ProbeSet& probes,
                  int lanczos_steps) {
  if (lanczos_steps < 2) {
    throw std::invalid_argument("slq_logdet: need at least 2 Lanczos steps");
  }
  const Index p = op.dim();
  if (probes.probes.rows() != p) {
    throw std::invalid_argument("slq_logdet: probe dimension mismatch");
  }
  const Index z = probes.probes.cols();
  const int steps = static_cast<int>(std::min<Index>(lanczos_steps, p));

  double estimate = 0.0;
  for (Index c = 0; c < z; ++c) {
    const VectorXd& probe = probes.probes.col(c);
    const double pnorm2 = probe.squaredNorm();

    // Lanczos with full reorthogonalization; steps is small.
    MatrixXd basis(p, steps);
    VectorXd alpha(steps), beta(steps);
    basis.col(0) = probe / std::sqrt(pnorm2);
    int built = 0;
    for (int s = 0; s < steps; ++s) {
      VectorXd w = op.apply(basis.col(s));
      alpha(s) = basis.col(s).dot(w);
      w -= alpha(s) * basis.col(s);
      if (s > 0) w -= beta(s - 1) * basis.col(s - 1);
      w -= basis.leftCols(s + 1) * (basis.leftCols(s + 1).transpose() * w);
      if (!w.allFinite() || !std::isfinite(alpha(s))) {
        throw std::runtime_error("slq_logdet: Lanczos breakdown at step " +
                                 std::to_string(s));
      }
      built = s + 1;
      if (s + 1 == steps) break;
      beta(s) = w.norm();
      if (beta(s) <= 1e-13 * std::abs(alpha(s)) || beta(s) == 0.0) {
        break;  // invariant subspace found; quadrature on the smaller T is exact
      }
      basis.col(s + 1) = w / beta(s);
    }

    MatrixXd tri = MatrixXd::Zero(built, built);
    for (int s = 0; s < built; ++s) {
      tri(s, s) = alpha(s);
      if (s + 1 < built) {
        tri(s, s + 1) = beta(s);
        tri(s + 1, s) = beta(s);
      }
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(tri);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("slq_logdet: tridiagonal eigendecomposition failed");
    }
    for (int s = 0; s < built; ++s) {
      const double ritz = eig.eigenvalues()(s);
      if (ritz <= 0.0) {
        throw std::runtime_error("slq_logdet: nonpositive Ritz value at node " +
                                 std::to_string(s));
      }
      const double weight = eig.eigenvectors()(0, s) * eig.eigenvectors()(0, s);
      estimate += pnorm2 * weight * std::log(ritz);
    }
  }
  return estimate / static_cast<double>(z);
}

TraceEstimate hutchinson_trace_grad(const ProjectedKroneckerOperator& op,
                                    const LinearOperator& dop, const ProbeSet& probes,
                                    const CgConfig& cfg) {
  if (probes.probes.rows() != op.dim()) {
    throw std::invalid_argument("hutchinson_trace_grad: probe dimension mismatch");
  }
  CgResult solve = cg_solve(op, probes.probes, cfg);
  const MatrixXd dz = dop(probes.probes);
  const Index z = probes.probes.cols();
  double acc = 0.0;
  for (Index c = 0; c < z; ++c) {
    acc += solve.solutions.col(c).dot(dz.col(c));
  }
  return {acc / static_cast<double>(z), solve.report.all_converged()};
}

KroneckerRoot::KroneckerRoot(const Eigen::Ref<const MatrixXd>& k1,
                             const Eigen::Ref<const MatrixXd>& k2) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig1(k1);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig2(k2);
  if (eig1.info() != Eigen::Success || eig2.info() != Eigen::Success) {
    throw std::runtime_error("KroneckerRoot: eigendecomposition failed");
  }
  root_left_ = eig1.eigenvectors() *
               eig1.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  root_right_ = eig2.eigenvectors() *
                eig2.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  tracked_ = tracker::TrackedBytes(
      static_cast<std::int64_t>(sizeof(double)) *
      (root_left_.size() + root_right_.size()));
}

MatrixXd KroneckerRoot::sample(const Eigen::Ref<const MatrixXd>& eps) const {
  return kron_cross_mvm(root_left_, root_right_, eps);
}

VectorXd kron_root_sample(const Eigen::Ref<const MatrixXd>& k1,
                          const Eigen::Ref<const MatrixXd>& k2,
                          const Eigen::Ref<const VectorXd>& eps) {
  return KroneckerRoot(k1, k2).sample(eps);
}

MatrixXd dense_projected(const Eigen::Ref<const MatrixXd>& a,
                         const Eigen::Ref<const MatrixXd>& b,
                         const ProjectionMask& mask, Index cap) {
  const Index p = mask.count();
  if (p > cap) {
    throw DenseCapExceeded("dense_projected: p = " + std::to_string(p) +
                           " exceeds the dense safety cap " + std::to_string(cap));
  }
  const Index m = mask.grid_cols();
  const auto& idx = mask.indices();
  MatrixXd out(p, p);
  tracker::TrackedBytes scratch(static_cast<std::int64_t>(sizeof(double)) * p * p);
#pragma omp parallel for schedule(static)
  for (Index col = 0; col < p; ++col) {
    const Index i2 = idx[static_cast<std::size_t>(col)] / m;
    const Index j2 = idx[static_cast<std::size_t>(col)] % m;
    for (Index row = 0; row < p; ++row) {
      const Index i1 = idx[static_cast<std::size_t>(row)] / m;
      const Index j1 = idx[static_cast<std::size_t>(row)] % m;
      out(row, col) = a(i1, i2) * b(j1, j2);
    }
  }
  return out;
}

MatrixXd dense_materialize(const ProjectedKroneckerOperator& op, Index cap) {
  MatrixXd out = dense_projected(op.kron().left(), op.kron().right(), op.mask(), cap);
  out.diagonal().array() += op.noise() + op.jitter();
  return out;
}

}  // namespace lkgp
