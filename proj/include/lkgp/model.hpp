/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#ifndef LKGP_MODEL_HPP
#define LKGP_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lkgp/kernels.hpp"
#include "lkgp/structured_linalg.hpp"
#include "lkgp/transforms.hpp"

namespace lkgp {

/// Training inputs in the transformed domain: X in the unit hypercube,
/// t on the log-spaced unit interval, Y standardized. Missing entries of Y
/// are excluded through the mask, never imputed.
struct TrainingData {
  MatrixXd X;          // n x d
  VectorXd t;          // m
  MatrixXd Y;          // n x m; unobserved cells hold 0 and are ignored
  ProjectionMask mask;

  Index n() const { return X.rows(); }
  Index m() const { return t.size(); }
  Index d() const { return X.cols(); }

  /// P vec(Y) under the config-major flattening.
  VectorXd observed_values() const;
};

/// Training data together with the fitted transforms and the original
/// (untransformed) identifiers needed by the CLI layer.
struct PreparedDataset {
  TrainingData data;
  InputScaler input_scaler;
  ProgressionScaler progression_scaler;
  OutputScaler output_scaler;
  VectorXd grid_steps;                  // original progression values
  std::vector<std::string> config_ids;  // sorted, one per row of X
};

enum class Backend { automatic, exact, iterative };

/// Problem size at which automatic backend selection switches to iterative.
inline constexpr Index kExactAutoCap = 4096;

Backend resolve_backend(Backend requested, Index p);
std::string backend_name(Backend b);

struct FitConfig {
  Backend backend = Backend::automatic;
  CgConfig cg;
  int max_lbfgs_iters = 100;
  int probes = 16;
  int lanczos_steps = 30;
  std::uint64_t seed = 0;
};

struct FitReport {
  std::vector<double> objective_trace;
  int lbfgs_iterations = 0;
  Backend backend_used = Backend::exact;
  bool cg_all_converged = true;
  bool line_search_failed_at_start = false;
};

struct LkgpModel {
  ProductKernelParams params;
  TrainingData data;
  InputScaler input_scaler;
  ProgressionScaler progression_scaler;
  OutputScaler output_scaler;
  VectorXd grid_steps;
  FitReport fit_report;
  std::uint64_t seed = 0;
};

struct Objective {
  double value = 0.0;
  VectorXd grad;
  bool cg_converged = true;
};

/// Negative (marginal likelihood + priors) and its gradient with respect to
/// all d+3 log-parameters. The exact backend uses a dense Cholesky
/// factorization; the iterative backend uses CG solves, stochastic Lanczos
/// quadrature for the log-determinant and Hutchinson probes for the traces.
Objective neg_map_objective(const ProductKernelParams& params,
                            const TrainingData& data, Backend backend,
                            const ProbeSet* probes, const CgConfig& cg_cfg,
                            int lanczos_steps = 30);

/// MAP training with L-BFGS from the fixed initialization.
LkgpModel fit(const PreparedDataset& prepared, const FitConfig& cfg = {});

struct PredictConfig {
  Backend backend = Backend::automatic;
  CgConfig cg;
};

/// Exact posterior mean at the test grid, on the original output scale.
/// test_X and test_t are given in original (untransformed) units.
MatrixXd posterior_mean(const LkgpModel& model,
                        const Eigen::Ref<const MatrixXd>& test_X,
                        const Eigen::Ref<const VectorXd>& test_t,
                        const PredictConfig& cfg = {});

struct PosteriorSampleSet {
  std::vector<MatrixXd> samples;  // S matrices, each n_* x m_*, original scale
  MatrixXd test_X;
  VectorXd test_t;
  std::uint64_t seed = 0;
  bool cg_converged = true;
};

/// Pathwise posterior samples of full curves: prior draw on the joint grid
/// plus a data-dependent correction solved through the projected operator.
PosteriorSampleSet matheron_sample(const LkgpModel& model,
                                   const Eigen::Ref<const MatrixXd>& test_X,
                                   const Eigen::Ref<const VectorXd>& test_t,
                                   int num_samples, std::uint64_t seed,
                                   const PredictConfig& cfg = {});

struct CurvePrediction {
  MatrixXd mean;      // n_* x m_*, original scale
  MatrixXd variance;  // n_* x m_*, sample variance plus observation noise
  PosteriorSampleSet samples;
};

/// Mean via the exact posterior, variance via Matheron samples plus the
/// observation noise on the original scale. Requires num_samples >= 2.
CurvePrediction predict_curves(const LkgpModel& model,
                               const Eigen::Ref<const MatrixXd>& test_X,
                               const Eigen::Ref<const VectorXd>& test_t,
                               int num_samples, std::uint64_t seed,
                               const PredictConfig& cfg = {});

struct PredictionResult {
  VectorXd mean;
  VectorXd variance;
  std::optional<PosteriorSampleSet> samples;
};

/// Prediction of the final curve value per test configuration. target_step
/// defaults to the last progression of the training grid.
PredictionResult predict_final(const LkgpModel& model,
                               const Eigen::Ref<const MatrixXd>& test_X,
                               int num_samples, std::uint64_t seed,
                               const PredictConfig& cfg = {},
                               std::optional<double> target_step = std::nullopt);

struct Metrics {
  double mse = 0.0;
  double llh = 0.0;
};

/// MSE of predictive means and mean Gaussian log-density of the truths.
Metrics metrics_mse_llh(const Eigen::Ref<const VectorXd>& mean,
                        const Eigen::Ref<const VectorXd>& variance,
                        const Eigen::Ref<const VectorXd>& truth);

}  // namespace lkgp

#endif  // LKGP_MODEL_HPP
