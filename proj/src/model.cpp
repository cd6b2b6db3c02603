/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include "lkgp/model.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "lkgp/lbfgs.hpp"

namespace lkgp {

namespace {

VectorXd flatten_config_major(const Eigen::Ref<const MatrixXd>& grid) {
  const Index n = grid.rows();
  const Index m = grid.cols();
  VectorXd out(n * m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      out(i * m + j) = grid(i, j);
    }
  }
  return out;
}

MatrixXd unflatten_config_major(const Eigen::Ref<const VectorXd>& flat, Index n,
                                Index m) {
  MatrixXd out(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      out(i, j) = flat(i * m + j);
    }
  }
  return out;
}

struct OperatorBundle {
  MatrixXd k1;
  MatrixXd k2;
  ProjectedKroneckerOperator op;
  VectorXd y;
};

OperatorBundle build_operator(const ProductKernelParams& params,
                              const TrainingData& data) {
  MatrixXd k1 = rbf_gram(data.X, data.X, params.rbf_log_lengthscales);
  MatrixXd k2 = matern52_gram(data.t, data.t, params.matern_log_lengthscale,
                              params.matern_log_outputscale);
  KroneckerOperator kron(k1, k2);
  const double jitter = default_jitter(kron, data.mask);
  ProjectedKroneckerOperator op(std::move(kron), data.mask,
                                params.noise_variance(), jitter);
  return {std::move(k1), std::move(k2), std::move(op), data.observed_values()};
}

/// Dense Cholesky with jitter escalation.
Eigen::LLT<MatrixXd> dense_factorize(const ProjectedKroneckerOperator& op,
                                     MatrixXd& dense_out) {
  double jitter = op.jitter();
  for (int attempt = 0; attempt < 4; ++attempt) {
    dense_out = dense_materialize(op.with_jitter(jitter));
    Eigen::LLT<MatrixXd> llt(dense_out);
    if (llt.info() == Eigen::Success) {
      return llt;
    }
    jitter = (jitter > 0.0 ? jitter * 10.0 : 1e-8);
  }
  throw std::runtime_error("dense_factorize: Cholesky failed after jitter escalation");
}

MatrixXd solve_system(const ProjectedKroneckerOperator& op,
                      const Eigen::Ref<const MatrixXd>& rhs, Backend backend,
                      const CgConfig& cg_cfg, bool* converged) {
  if (backend == Backend::exact) {
    MatrixXd dense;
    Eigen::LLT<MatrixXd> llt = dense_factorize(op, dense);
    if (converged) *converged = true;
    return llt.solve(rhs);
  }
  CgResult res = cg_solve(op, rhs, cg_cfg);
  if (converged) *converged = res.report.all_converged();
  return std::move(res.solutions);
}

}  // namespace

VectorXd TrainingData::observed_values() const {
  return mask.gather(flatten_config_major(Y));
}

Backend resolve_backend(Backend requested, Index p) {
  if (requested != Backend::automatic) return requested;
  return p <= kExactAutoCap ? Backend::exact : Backend::iterative;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::exact:
      return "exact";
    case Backend::iterative:
      return "iterative";
    default:
      return "auto";
  }
}

Objective neg_map_objective(const ProductKernelParams& params,
                            const TrainingData& data, Backend backend,
                            const ProbeSet* probes, const CgConfig& cg_cfg,
                            int lanczos_steps) {
  backend = resolve_backend(backend, data.mask.count());
  const Index d = data.d();
  const Index p = data.mask.count();
  const double sigma2 = params.noise_variance();
  const LogPrior prior = log_prior(params, d);
  const GramGradients grads = gram_grads(data.X, data.t, params);
  OperatorBundle bundle = build_operator(params, data);

  Objective out;
  out.grad = VectorXd::Zero(params.free_count());

  // The jitter tracks the mean observed diagonal of K1 (x) K2, which scales
  // linearly with exp(matern_log_outputscale); its derivative with respect
  // to that parameter contributes an extra identity term jitter * I.
  const double d_jitter = bundle.op.jitter();

  if (backend == Backend::exact) {
    MatrixXd dense;
    Eigen::LLT<MatrixXd> llt = dense_factorize(bundle.op, dense);
    const VectorXd alpha = llt.solve(bundle.y);
    const double logdet =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.value = 0.5 * bundle.y.dot(alpha) + 0.5 * logdet +
                0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) -
                prior.value;
    const MatrixXd kinv = llt.solve(MatrixXd::Identity(p, p));
    for (Index k = 0; k < params.free_count(); ++k) {
      double quad, trace;
      if (k == d + 2) {
        quad = sigma2 * alpha.squaredNorm();
        trace = sigma2 * kinv.trace();
      } else {
        const bool left = k < d;
        const MatrixXd dk =
            left ? dense_projected(grads.d_left[static_cast<std::size_t>(k)],
                                   bundle.k2, data.mask)
                 : dense_projected(bundle.k1,
                                   grads.d_right[static_cast<std::size_t>(k)],
                                   data.mask);
        quad = alpha.dot(dk * alpha);
        trace = kinv.cwiseProduct(dk).sum();
        if (k == d + 1) {
          quad += d_jitter * alpha.squaredNorm();
          trace += d_jitter * kinv.trace();
        }
      }
      out.grad(k) = -0.5 * quad + 0.5 * trace - prior.grad(k);
    }
    return out;
  }

  if (probes == nullptr) {
    throw std::invalid_argument("neg_map_objective: iterative backend needs probes");
  }
  const Index z = probes->probes.cols();
  MatrixXd rhs(p, 1 + z);
  rhs.col(0) = bundle.y;
  rhs.rightCols(z) = probes->probes;
  CgResult solve = cg_solve(bundle.op, rhs, cg_cfg);
  out.cg_converged = solve.report.all_converged();
  const VectorXd alpha = solve.solutions.col(0);
  const MatrixXd& w = solve.solutions;  // columns 1..z are op^-1 z_i

  const double logdet = slq_logdet(bundle.op, *probes, lanczos_steps);
  out.value = 0.5 * bundle.y.dot(alpha) + 0.5 * logdet +
              0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) -
              prior.value;

  MatrixXd probe_and_alpha(p, z + 1);
  probe_and_alpha.col(0) = alpha;
  probe_and_alpha.rightCols(z) = probes->probes;
  for (Index k = 0; k < params.free_count(); ++k) {
    double quad, trace;
    if (k == d + 2) {
      quad = sigma2 * alpha.squaredNorm();
      trace = 0.0;
      for (Index c = 0; c < z; ++c) {
        trace += w.col(1 + c).dot(probes->probes.col(c));
      }
      trace *= sigma2 / static_cast<double>(z);
    } else {
      const bool left = k < d;
      KroneckerOperator dkron(
          left ? grads.d_left[static_cast<std::size_t>(k)] : bundle.k1,
          left ? bundle.k2 : grads.d_right[static_cast<std::size_t>(k)]);
      ProjectedKroneckerOperator dop(std::move(dkron), data.mask, 0.0, 0.0);
      const MatrixXd applied = dop.apply(probe_and_alpha);
      quad = alpha.dot(applied.col(0));
      trace = 0.0;
      for (Index c = 0; c < z; ++c) {
        trace += w.col(1 + c).dot(applied.col(1 + c));
      }
      trace /= static_cast<double>(z);
      if (k == d + 1) {
        quad += d_jitter * alpha.squaredNorm();
        double id_trace = 0.0;
        for (Index c = 0; c < z; ++c) {
          id_trace += w.col(1 + c).dot(probes->probes.col(c));
        }
        trace += d_jitter * id_trace / static_cast<double>(z);
      }
    }
    out.grad(k) = -0.5 * quad + 0.5 * trace - prior.grad(k);
  }
  return out;
}

LkgpModel fit(const PreparedDataset& prepared, const FitConfig& cfg) {
  const TrainingData& data = prepared.data;
  const Index d = data.d();
  const Index p = data.mask.count();
  const Backend backend = resolve_backend(cfg.backend, p);

  ProbeSet probes;
  if (backend == Backend::iterative) {
    probes = ProbeSet::rademacher(p, cfg.probes, cfg.seed);
  }

  bool cg_all_converged = true;
  auto objective = [&](const VectorXd& x, VectorXd& grad) {
    const ProductKernelParams params = ProductKernelParams::from_vector(x, d);
    try {
      const Objective obj =
          neg_map_objective(params, data, backend,
                            backend == Backend::iterative ? &probes : nullptr,
                            cfg.cg, cfg.lanczos_steps);
      cg_all_converged = cg_all_converged && obj.cg_converged;
      grad = obj.grad;
      return obj.value;
    } catch (const DenseCapExceeded&) {
      throw;  // a hard refusal, not a recoverable trial point
    } catch (const std::runtime_error&) {
      // Extreme trial parameters can overflow the Grams and break the
      // solvers; report +inf so the line search backtracks instead.
      grad = VectorXd::Zero(x.size());
      return std::numeric_limits<double>::infinity();
    }
  };

  LbfgsConfig opt_cfg;
  opt_cfg.max_iters = cfg.max_lbfgs_iters;
  const LbfgsResult opt =
      lbfgs_minimize(objective, ProductKernelParams::initial(d).to_vector(), opt_cfg);

  LkgpModel model{ProductKernelParams::from_vector(opt.x, d),
                  data,
                  prepared.input_scaler,
                  prepared.progression_scaler,
                  prepared.output_scaler,
                  prepared.grid_steps,
                  FitReport{},
                  cfg.seed};
  model.fit_report.objective_trace = opt.trace;
  model.fit_report.lbfgs_iterations = opt.iterations;
  model.fit_report.backend_used = backend;
  model.fit_report.cg_all_converged = cg_all_converged;
  model.fit_report.line_search_failed_at_start = opt.line_search_failed_at_start;
  return model;
}

MatrixXd posterior_mean(const LkgpModel& model,
                        const Eigen::Ref<const MatrixXd>& test_X,
                        const Eigen::Ref<const VectorXd>& test_t,
                        const PredictConfig& cfg) {
  const TrainingData& data = model.data;
  const MatrixXd xt = model.input_scaler.apply(test_X);
  const VectorXd tt = model.progression_scaler.apply(test_t);
  const Backend backend = resolve_backend(cfg.backend, data.mask.count());

  OperatorBundle bundle = build_operator(model.params, data);
  const MatrixXd alpha = solve_system(bundle.op, bundle.y, backend, cfg.cg, nullptr);

  const MatrixXd k1_cross =
      rbf_gram(xt, data.X, model.params.rbf_log_lengthscales);
  const MatrixXd k2_cross =
      matern52_gram(tt, data.t, model.params.matern_log_lengthscale,
                    model.params.matern_log_outputscale);
  const MatrixXd mean_flat =
      kron_cross_mvm(k1_cross, k2_cross, data.mask.scatter(alpha));
  return model.output_scaler.invert(
      unflatten_config_major(mean_flat.col(0), xt.rows(), tt.size()));
}

PosteriorSampleSet matheron_sample(const LkgpModel& model,
                                   const Eigen::Ref<const MatrixXd>& test_X,
                                   const Eigen::Ref<const VectorXd>& test_t,
                                   int num_samples, std::uint64_t seed,
                                   const PredictConfig& cfg) {
  if (num_samples < 1) {
    throw std::invalid_argument("matheron_sample: need at least one sample");
  }
  const TrainingData& data = model.data;
  const Index n = data.n(), m = data.m();
  const Index n_test = test_X.rows(), m_test = test_t.size();
  const Index p = data.mask.count();
  const Index s_count = num_samples;
  const Backend backend = resolve_backend(cfg.backend, p);

  const MatrixXd xt = model.input_scaler.apply(test_X);
  const VectorXd tt = model.progression_scaler.apply(test_t);

  OperatorBundle bundle = build_operator(model.params, data);
  const double sigma2 = model.params.noise_variance();

  // Joint grid over train and test locations for the prior draw.
  MatrixXd x_joint(n + n_test, data.d());
  x_joint.topRows(n) = data.X;
  x_joint.bottomRows(n_test) = xt;
  VectorXd t_joint(m + m_test);
  t_joint.head(m) = data.t;
  t_joint.tail(m_test) = tt;
  const Index m_joint = m + m_test;

  const MatrixXd k1_joint = rbf_gram(x_joint, x_joint, model.params.rbf_log_lengthscales);
  const MatrixXd k2_joint =
      matern52_gram(t_joint, t_joint, model.params.matern_log_lengthscale,
                    model.params.matern_log_outputscale);
  KroneckerRoot root(k1_joint, k2_joint);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd eps((n + n_test) * m_joint, s_count);
  for (Index c = 0; c < s_count; ++c) {
    for (Index i = 0; i < eps.rows(); ++i) {
      eps(i, c) = normal(rng);
    }
  }
  MatrixXd noise = MatrixXd::Zero(p, s_count);
  if (sigma2 > 0.0) {
    const double sigma = std::sqrt(sigma2);
    for (Index c = 0; c < s_count; ++c) {
      for (Index i = 0; i < p; ++i) {
        noise(i, c) = sigma * normal(rng);
      }
    }
  }

  const MatrixXd prior_draws = root.sample(eps);

  // Prior draws at the training cells, projected to the observed entries.
  MatrixXd prior_train(n * m, s_count);
  for (Index i = 0; i < n; ++i) {
    prior_train.middleRows(i * m, m) = prior_draws.middleRows(i * m_joint, m);
  }
  const MatrixXd rhs =
      bundle.y.replicate(1, s_count) - data.mask.gather(prior_train) - noise;

  bool converged = true;
  const MatrixXd w = solve_system(bundle.op, rhs, backend, cfg.cg, &converged);

  const MatrixXd k1_cross = rbf_gram(xt, data.X, model.params.rbf_log_lengthscales);
  const MatrixXd k2_cross =
      matern52_gram(tt, data.t, model.params.matern_log_lengthscale,
                    model.params.matern_log_outputscale);
  const MatrixXd correction =
      kron_cross_mvm(k1_cross, k2_cross, data.mask.scatter(w));

  PosteriorSampleSet out;
  out.test_X = test_X;
  out.test_t = test_t;
  out.seed = seed;
  out.cg_converged = converged;
  out.samples.reserve(static_cast<std::size_t>(s_count));
  for (Index c = 0; c < s_count; ++c) {
    MatrixXd sample(n_test, m_test);
    for (Index a = 0; a < n_test; ++a) {
      for (Index b = 0; b < m_test; ++b) {
        const double prior_val = prior_draws((n + a) * m_joint + (m + b), c);
        sample(a, b) = prior_val + correction(a * m_test + b, c);
      }
    }
    out.samples.push_back(model.output_scaler.invert(sample));
  }
  return out;
}

CurvePrediction predict_curves(const LkgpModel& model,
                               const Eigen::Ref<const MatrixXd>& test_X,
                               const Eigen::Ref<const VectorXd>& test_t,
                               int num_samples, std::uint64_t seed,
                               const PredictConfig& cfg) {
  if (num_samples < 2) {
    throw std::invalid_argument("predict_curves: variance needs num_samples >= 2");
  }
  CurvePrediction out;
  out.mean = posterior_mean(model, test_X, test_t, cfg);
  out.samples = matheron_sample(model, test_X, test_t, num_samples, seed, cfg);

  const Index n_test = test_X.rows(), m_test = test_t.size();
  const double s = static_cast<double>(num_samples);
  MatrixXd sample_mean = MatrixXd::Zero(n_test, m_test);
  for (const MatrixXd& draw : out.samples.samples) {
    sample_mean += draw;
  }
  sample_mean /= s;
  MatrixXd var = MatrixXd::Zero(n_test, m_test);
  for (const MatrixXd& draw : out.samples.samples) {
    var += (draw - sample_mean).cwiseAbs2();
  }
  var /= (s - 1.0);

  const double obs_noise = model.output_scaler.invert_variance(
      model.params.noise_variance());
  out.variance = var.array() + obs_noise;
  return out;
}

PredictionResult predict_final(const LkgpModel& model,
                               const Eigen::Ref<const MatrixXd>& test_X,
                               int num_samples, std::uint64_t seed,
                               const PredictConfig& cfg,
                               std::optional<double> target_step) {
  VectorXd tt(1);
  tt(0) = target_step.value_or(model.grid_steps(model.grid_steps.size() - 1));
  const CurvePrediction curves =
      predict_curves(model, test_X, tt, num_samples, seed, cfg);
  PredictionResult out;
  out.mean = curves.mean.col(0);
  out.variance = curves.variance.col(0);
  out.samples = curves.samples;
  return out;
}

Metrics metrics_mse_llh(const Eigen::Ref<const VectorXd>& mean,
                        const Eigen::Ref<const VectorXd>& variance,
                        const Eigen::Ref<const VectorXd>& truth) {
  if (mean.size() != truth.size() || variance.size() != truth.size()) {
    throw std::invalid_argument("metrics_mse_llh: length mismatch");
  }
  const Index count = truth.size();
  Metrics out;
  for (Index i = 0; i < count; ++i) {
    const double err = mean(i) - truth(i);
    out.mse += err * err;
    out.llh += -0.5 * std::log(2.0 * std::numbers::pi * variance(i)) -
               err * err / (2.0 * variance(i));
  }
  out.mse /= static_cast<double>(count);
  out.llh /= static_cast<double>(count);
  return out;
}

}  // namespace lkgp
