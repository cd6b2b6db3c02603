/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lkgp/model.hpp"
#include "test_utils.hpp"

using namespace lkgp;

namespace {

/// Model with identity input/output scalers; the progression scaler is
/// fitted on the original steps so data.t holds the transformed grid.
LkgpModel make_model(ProductKernelParams params, MatrixXd x, VectorXd t_orig,
                     MatrixXd y, ProjectionMask mask) {
  const ProgressionScaler ps = ProgressionScaler::fit(t_orig);
  TrainingData data{std::move(x), ps.apply(t_orig), std::move(y), std::move(mask)};
  const Index d = data.d();
  return LkgpModel{std::move(params),
                   std::move(data),
                   InputScaler::from_stats(VectorXd::Zero(d), VectorXd::Ones(d)),
                   ps,
                   OutputScaler::from_stats(0.0, 1.0),
                   std::move(t_orig),
                   FitReport{},
                   0};
}

ProductKernelParams typical_params(Index d, std::mt19937_64& rng) {
  ProductKernelParams params;
  params.rbf_log_lengthscales =
      VectorXd::Constant(d, -0.3) + 0.2 * testutil::random_vector(d, rng);
  params.matern_log_lengthscale = -0.5;
  params.matern_log_outputscale = 0.2;
  params.log_noise = -2.5;
  return params;
}

struct Problem {
  ProductKernelParams params;
  MatrixXd x;
  VectorXd t_orig;
  MatrixXd y;
  ProjectionMask mask;
};

Problem random_problem(Index n, Index m, Index d, std::mt19937_64& rng,
                       double keep_prob = 0.7) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = uniform(rng);
  VectorXd t_orig(m);
  for (Index j = 0; j < m; ++j) t_orig(j) = static_cast<double>(j + 1);
  const MatrixXd y = testutil::random_matrix(n, m, rng);
  auto mask = testutil::random_mask(n, m, rng, keep_prob);
  return {typical_params(d, rng), std::move(x), std::move(t_orig), y,
          std::move(mask)};
}

}  // namespace

TEST_CASE("resolve_backend: automatic switches at the exact cap") {
  CHECK(resolve_backend(Backend::automatic, kExactAutoCap) == Backend::exact);
  CHECK(resolve_backend(Backend::automatic, kExactAutoCap + 1) ==
        Backend::iterative);
  CHECK(resolve_backend(Backend::exact, 1 << 20) == Backend::exact);
  CHECK(resolve_backend(Backend::iterative, 2) == Backend::iterative);
}

TEST_CASE("neg_map_objective: univariate closed form") {
  // One config, one step: K_joint = sigma_out^2 + sigma^2 = 2, y = 0.
  ProductKernelParams params;
  params.rbf_log_lengthscales = VectorXd::Zero(1);
  params.matern_log_lengthscale = 0.0;
  params.matern_log_outputscale = 0.0;  // sigma_out^2 = 1
  params.log_noise = 0.0;               // sigma^2 = 1
  TrainingData data{MatrixXd::Zero(1, 1), VectorXd::Zero(1), MatrixXd::Zero(1, 1),
                    ProjectionMask::full(1, 1)};
  const Objective obj =
      neg_map_objective(params, data, Backend::exact, nullptr, CgConfig{});
  const double jitter = 1e-6;  // 1e-6 * mean observed diagonal (= 1)
  const double expected = 0.5 * std::log(2.0 + jitter) +
                          0.5 * std::log(2.0 * std::numbers::pi) -
                          log_prior(params, 1).value;
  CHECK(obj.value == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("neg_map_objective: exact gradient matches finite differences") {
  std::mt19937_64 rng(1);
  const double h = 1e-5;
  for (int rep = 0; rep < 5; ++rep) {
    Problem prob = random_problem(4, 3, 2, rng);
    TrainingData data{prob.x, prob.t_orig / 3.0, prob.y, prob.mask};
    const VectorXd theta = prob.params.to_vector();
    const Objective obj =
        neg_map_objective(prob.params, data, Backend::exact, nullptr, CgConfig{});
    for (Index k = 0; k < theta.size(); ++k) {
      VectorXd tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      const double vp = neg_map_objective(ProductKernelParams::from_vector(tp, 2),
                                          data, Backend::exact, nullptr, CgConfig{})
                            .value;
      const double vm = neg_map_objective(ProductKernelParams::from_vector(tm, 2),
                                          data, Backend::exact, nullptr, CgConfig{})
                            .value;
      const double fd = (vp - vm) / (2.0 * h);
      CHECK(std::abs(obj.grad(k) - fd) <= 1e-4 * std::max(std::abs(fd), 1e-6));
    }
  }
}

TEST_CASE("neg_map_objective: iterative within 2% of exact") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 3; ++rep) {
    Problem prob = random_problem(7, 6, 3, rng);
    TrainingData data{prob.x, prob.t_orig / 6.0, prob.y, prob.mask};
    const Objective exact =
        neg_map_objective(prob.params, data, Backend::exact, nullptr, CgConfig{});
    const ProbeSet probes = ProbeSet::rademacher(
        data.mask.count(), 64, 500 + static_cast<std::uint64_t>(rep));
    const Objective iter = neg_map_objective(prob.params, data, Backend::iterative,
                                             &probes, CgConfig{1e-8, 5000});
    CHECK(iter.cg_converged);
    CHECK(std::abs(iter.value - exact.value) <= 0.02 * std::abs(exact.value));
  }
}

TEST_CASE("posterior_mean: matches the dense conditioning oracle") {
  std::mt19937_64 rng(3);
  Problem prob = random_problem(5, 4, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);

  MatrixXd test_x(3, 2);
  test_x << 0.1, 0.9, 0.5, 0.5, 0.8, 0.2;
  VectorXd test_t(2);
  test_t << 1.5, 4.0;

  const MatrixXd mean = posterior_mean(model, test_x, test_t);

  const VectorXd tt = model.progression_scaler.apply(test_t);
  const MatrixXd k1 = rbf_gram(model.data.X, model.data.X,
                               prob.params.rbf_log_lengthscales);
  const MatrixXd k2 =
      matern52_gram(model.data.t, model.data.t, prob.params.matern_log_lengthscale,
                    prob.params.matern_log_outputscale);
  const MatrixXd k1c = rbf_gram(test_x, model.data.X, prob.params.rbf_log_lengthscales);
  const MatrixXd k2c = matern52_gram(tt, model.data.t,
                                     prob.params.matern_log_lengthscale,
                                     prob.params.matern_log_outputscale);
  const MatrixXd k1t = rbf_gram(test_x, test_x, prob.params.rbf_log_lengthscales);
  const MatrixXd k2t = matern52_gram(tt, tt, prob.params.matern_log_lengthscale,
                                     prob.params.matern_log_outputscale);
  const double jitter = default_jitter(KroneckerOperator(k1, k2), model.data.mask);
  const auto oracle = testutil::dense_gp_posterior(
      k1, k2, k1c, k2c, k1t, k2t, model.data.mask, prob.params.noise_variance(),
      jitter, model.data.observed_values());

  for (Index a = 0; a < 3; ++a)
    for (Index b = 0; b < 2; ++b)
      CHECK(mean(a, b) == doctest::Approx(oracle.mean(a * 2 + b)).epsilon(1e-10));
}

TEST_CASE("posterior_mean: noiseless interpolation at observed points") {
  std::mt19937_64 rng(4);
  Problem prob = random_problem(4, 3, 2, rng, 1.0);
  prob.params.log_noise = -1000.0;  // exp underflows to exactly zero
  // Well-separated inputs and short lengthscales keep the jitter-only system
  // well conditioned, so the interpolation error stays at the jitter scale.
  prob.x << 0.05, 0.05, 0.95, 0.05, 0.05, 0.95, 0.95, 0.95;
  prob.params.rbf_log_lengthscales = VectorXd::Constant(2, -1.5);
  prob.params.matern_log_lengthscale = -1.5;
  prob.params.matern_log_outputscale = 0.0;
  prob.y *= 0.25;
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y,
                               ProjectionMask::full(4, 3));
  const MatrixXd mean = posterior_mean(model, prob.x, prob.t_orig);
  CHECK((mean - prob.y).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("posterior_mean: n=1 reduces to a dense 1-D GP on t") {
  std::mt19937_64 rng(5);
  Problem prob = random_problem(1, 6, 2, rng, 1.0);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y,
                               ProjectionMask::full(1, 6));
  VectorXd test_t(3);
  test_t << 1.3, 3.7, 6.0;
  const MatrixXd mean = posterior_mean(model, prob.x, test_t);

  // Independent 1-D route: kernel sigma_out^2 * k2 on the transformed grid
  // (the RBF factor is 1 at zero distance).
  const VectorXd tt = model.progression_scaler.apply(test_t);
  const MatrixXd k2 =
      matern52_gram(model.data.t, model.data.t, prob.params.matern_log_lengthscale,
                    prob.params.matern_log_outputscale);
  MatrixXd k_train = k2;
  const double jitter = 1e-6 * k2.diagonal().mean();
  k_train.diagonal().array() += prob.params.noise_variance() + jitter;
  const MatrixXd k_cross =
      matern52_gram(tt, model.data.t, prob.params.matern_log_lengthscale,
                    prob.params.matern_log_outputscale);
  const VectorXd oracle =
      k_cross * Eigen::LLT<MatrixXd>(k_train).solve(prob.y.row(0).transpose());
  for (Index b = 0; b < 3; ++b)
    CHECK(mean(0, b) == doctest::Approx(oracle(b)).epsilon(1e-8));
}

TEST_CASE("posterior_mean: iterative matches exact within 1e-6") {
  std::mt19937_64 rng(6);
  Problem prob = random_problem(6, 5, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);
  MatrixXd test_x(2, 2);
  test_x << 0.2, 0.3, 0.7, 0.9;
  VectorXd test_t(2);
  test_t << 2.0, 5.0;
  PredictConfig exact_cfg;
  exact_cfg.backend = Backend::exact;
  PredictConfig iter_cfg;
  iter_cfg.backend = Backend::iterative;
  iter_cfg.cg = CgConfig{1e-10, 5000};
  const MatrixXd a = posterior_mean(model, test_x, test_t, exact_cfg);
  const MatrixXd b = posterior_mean(model, test_x, test_t, iter_cfg);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("posterior_mean: permutation equivariance in the training configs") {
  std::mt19937_64 rng(7);
  Problem prob = random_problem(5, 4, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);

  // Reverse the config order, permuting X, Y and the mask rows together.
  const Index n = 5, m = 4;
  MatrixXd xp(n, 2);
  MatrixXd yp(n, m);
  std::vector<std::uint8_t> obs(static_cast<std::size_t>(n * m), 0);
  for (Index i = 0; i < n; ++i) {
    xp.row(i) = prob.x.row(n - 1 - i);
    yp.row(i) = prob.y.row(n - 1 - i);
    for (Index j = 0; j < m; ++j)
      obs[static_cast<std::size_t>(i * m + j)] =
          prob.mask.observed_at(n - 1 - i, j) ? 1 : 0;
  }
  LkgpModel permuted = make_model(prob.params, xp, prob.t_orig, yp,
                                  ProjectionMask(obs, n, m));

  MatrixXd test_x(2, 2);
  test_x << 0.4, 0.6, 0.1, 0.1;
  VectorXd test_t(2);
  test_t << 1.0, 3.5;
  const MatrixXd a = posterior_mean(model, test_x, test_t);
  const MatrixXd b = posterior_mean(permuted, test_x, test_t);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("matheron_sample: equal seeds are bit-identical, different seeds differ") {
  std::mt19937_64 rng(8);
  Problem prob = random_problem(4, 4, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);
  MatrixXd test_x(2, 2);
  test_x << 0.3, 0.3, 0.6, 0.8;
  VectorXd test_t(2);
  test_t << 2.0, 4.0;
  const auto a = matheron_sample(model, test_x, test_t, 8, 42);
  const auto b = matheron_sample(model, test_x, test_t, 8, 42);
  const auto c = matheron_sample(model, test_x, test_t, 8, 43);
  double max_diff = 0.0, diff_seeds = 0.0;
  for (std::size_t s = 0; s < 8; ++s) {
    max_diff = std::max(max_diff,
                        (a.samples[s] - b.samples[s]).cwiseAbs().maxCoeff());
    diff_seeds = std::max(diff_seeds,
                          (a.samples[s] - c.samples[s]).cwiseAbs().maxCoeff());
  }
  CHECK(max_diff == 0.0);
  CHECK(diff_seeds > 0.0);
}

TEST_CASE("matheron_sample: noiseless samples interpolate the observations") {
  std::mt19937_64 rng(9);
  Problem prob = random_problem(3, 4, 2, rng);
  prob.params.log_noise = -1000.0;  // sigma^2 = 0 exactly; jitter only
  prob.params.rbf_log_lengthscales = VectorXd::Constant(2, -1.0);
  prob.params.matern_log_lengthscale = -1.5;
  prob.params.matern_log_outputscale = 0.0;
  prob.y *= 0.5;
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);
  const auto set = matheron_sample(model, prob.x, prob.t_orig, 20, 11);
  for (const MatrixXd& sample : set.samples) {
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 4; ++j) {
        if (model.data.mask.observed_at(i, j)) {
          CHECK(std::abs(sample(i, j) - prob.y(i, j)) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("matheron_sample: empirical mean approaches the exact posterior mean") {
  std::mt19937_64 rng(10);
  Problem prob = random_problem(4, 3, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);
  MatrixXd test_x(1, 2);
  test_x << 0.5, 0.5;
  VectorXd test_t(2);
  test_t << 1.5, 3.0;
  const MatrixXd exact = posterior_mean(model, test_x, test_t);
  const auto set = matheron_sample(model, test_x, test_t, 4000, 77);
  MatrixXd emp = MatrixXd::Zero(1, 2);
  for (const MatrixXd& s : set.samples) emp += s;
  emp /= 4000.0;
  MatrixXd var = MatrixXd::Zero(1, 2);
  for (const MatrixXd& s : set.samples) var += (s - emp).cwiseAbs2();
  var /= 3999.0;
  for (Index b = 0; b < 2; ++b) {
    const double mcse = std::sqrt(var(0, b) / 4000.0);
    CHECK(std::abs(emp(0, b) - exact(0, b)) <= 5.0 * mcse);
  }
}

TEST_CASE("predict_curves: rejects S < 2 and reports nonnegative variance") {
  std::mt19937_64 rng(11);
  Problem prob = random_problem(3, 3, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);
  MatrixXd test_x(1, 2);
  test_x << 0.2, 0.8;
  VectorXd test_t(1);
  test_t << 2.0;
  CHECK_THROWS_AS(predict_curves(model, test_x, test_t, 1, 0),
                  std::invalid_argument);
  const CurvePrediction pred = predict_curves(model, test_x, test_t, 16, 0);
  CHECK(pred.variance.minCoeff() >= 0.0);
}

TEST_CASE("predict_final: fully observed curve with tiny noise") {
  std::mt19937_64 rng(12);
  Problem prob = random_problem(4, 5, 2, rng, 1.0);
  prob.params.log_noise = -16.0;
  prob.x << 0.05, 0.05, 0.95, 0.05, 0.05, 0.95, 0.95, 0.95;
  prob.params.rbf_log_lengthscales = VectorXd::Constant(2, -1.5);
  prob.params.matern_log_lengthscale = -1.5;
  prob.params.matern_log_outputscale = 0.0;
  prob.y *= 0.25;
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y,
                               ProjectionMask::full(4, 5));
  const PredictionResult res = predict_final(model, prob.x, 64, 3);
  for (Index i = 0; i < 4; ++i)
    CHECK(std::abs(res.mean(i) - prob.y(i, 4)) < 1e-3);
}

TEST_CASE("predict_final: S=1 is rejected and target_step is honored") {
  std::mt19937_64 rng(13);
  Problem prob = random_problem(3, 4, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);
  MatrixXd test_x(1, 2);
  test_x << 0.5, 0.4;
  CHECK_THROWS_AS(predict_final(model, test_x, 1, 0), std::invalid_argument);

  const PredictionResult at_default = predict_final(model, test_x, 8, 5);
  const PredictionResult at_last = predict_final(model, test_x, 8, 5, {}, 4.0);
  CHECK((at_default.mean - at_last.mean).cwiseAbs().maxCoeff() == 0.0);
  const PredictionResult at_mid = predict_final(model, test_x, 8, 5, {}, 2.0);
  CHECK((at_default.mean - at_mid.mean).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("predict_final: variance estimate stabilizes as S doubles") {
  std::mt19937_64 rng(14);
  Problem prob = random_problem(4, 3, 2, rng);
  LkgpModel model = make_model(prob.params, prob.x, prob.t_orig, prob.y, prob.mask);
  MatrixXd test_x(2, 2);
  test_x << 0.25, 0.5, 0.75, 0.5;
  const PredictionResult a = predict_final(model, test_x, 1024, 7);
  const PredictionResult b = predict_final(model, test_x, 2048, 7);
  for (Index i = 0; i < 2; ++i)
    CHECK(std::abs(b.variance(i) - a.variance(i)) / a.variance(i) <= 0.1);
}

TEST_CASE("monotone conditioning: revealing entries never increases final variance") {
  std::mt19937_64 rng(15);
  const Index n = 2, m = 4, d = 2;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = uniform(rng);
  const VectorXd t = VectorXd::LinSpaced(m, 0.0, 1.0);
  const ProductKernelParams params = typical_params(d, rng);
  const MatrixXd k1 = rbf_gram(x, x, params.rbf_log_lengthscales);
  const MatrixXd k2 = matern52_gram(t, t, params.matern_log_lengthscale,
                                    params.matern_log_outputscale);
  MatrixXd test_t_cross = matern52_gram(t.tail(1), t, params.matern_log_lengthscale,
                                        params.matern_log_outputscale);
  const MatrixXd k1c = k1.topRows(1);  // test config = config 0
  const MatrixXd k1t = k1.topLeftCorner(1, 1);
  const MatrixXd k2t = matern52_gram(t.tail(1), t.tail(1),
                                     params.matern_log_lengthscale,
                                     params.matern_log_outputscale);
  const VectorXd y_grid = testutil::random_vector(n * m, rng);

  double prev_var = std::numeric_limits<double>::infinity();
  for (Index reveal = 1; reveal <= m; ++reveal) {
    // Config 0 observed at the first `reveal` steps; config 1 fully observed.
    std::vector<std::uint8_t> obs(static_cast<std::size_t>(n * m), 0);
    for (Index j = 0; j < reveal; ++j) obs[static_cast<std::size_t>(j)] = 1;
    for (Index j = 0; j < m; ++j) obs[static_cast<std::size_t>(m + j)] = 1;
    ProjectionMask mask(obs, n, m);
    VectorXd y(mask.count());
    for (Index l = 0; l < mask.count(); ++l)
      y(l) = y_grid(mask.indices()[static_cast<std::size_t>(l)]);
    const auto post = testutil::dense_gp_posterior(
        k1, k2, k1c, test_t_cross, k1t, k2t, mask, params.noise_variance(), 1e-8, y);
    CHECK(post.cov(0, 0) <= prev_var + 1e-12);
    prev_var = post.cov(0, 0);
  }
}

TEST_CASE("fit: final objective never exceeds the initial one") {
  std::mt19937_64 rng(16);
  Problem prob = random_problem(6, 5, 2, rng);
  PreparedDataset prepared{TrainingData{prob.x, prob.t_orig / 5.0, prob.y, prob.mask},
                           InputScaler::from_stats(VectorXd::Zero(2), VectorXd::Ones(2)),
                           ProgressionScaler::from_stats(0.0, 1.0),
                           OutputScaler::from_stats(0.0, 1.0),
                           prob.t_orig,
                           {"a", "b", "c", "d", "e", "f"}};
  FitConfig cfg;
  cfg.max_lbfgs_iters = 15;
  const LkgpModel model = fit(prepared, cfg);
  REQUIRE(model.fit_report.objective_trace.size() >= 1);
  CHECK(model.fit_report.objective_trace.back() <=
        model.fit_report.objective_trace.front() + 1e-12);
}

TEST_CASE("fit: iterative backend is deterministic in the seed") {
  std::mt19937_64 rng(17);
  Problem prob = random_problem(5, 4, 2, rng);
  PreparedDataset prepared{TrainingData{prob.x, prob.t_orig / 4.0, prob.y, prob.mask},
                           InputScaler::from_stats(VectorXd::Zero(2), VectorXd::Ones(2)),
                           ProgressionScaler::from_stats(0.0, 1.0),
                           OutputScaler::from_stats(0.0, 1.0),
                           prob.t_orig,
                           {"a", "b", "c", "d", "e"}};
  FitConfig cfg;
  cfg.backend = Backend::iterative;
  cfg.max_lbfgs_iters = 8;
  cfg.probes = 8;
  cfg.seed = 12345;
  const LkgpModel a = fit(prepared, cfg);
  const LkgpModel b = fit(prepared, cfg);
  CHECK((a.params.to_vector() - b.params.to_vector()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit: recovers the noise level on data drawn from the prior") {
  std::mt19937_64 rng(18);
  const Index n = 32, m = 16, d = 2;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = uniform(rng);
  const VectorXd t = VectorXd::LinSpaced(m, 1.0 / m, 1.0);

  ProductKernelParams truth;
  truth.rbf_log_lengthscales = VectorXd::Constant(d, 0.5);
  truth.matern_log_lengthscale = std::log(0.3);
  truth.matern_log_outputscale = 0.0;
  truth.log_noise = -3.0;

  const MatrixXd k1 = rbf_gram(x, x, truth.rbf_log_lengthscales);
  const MatrixXd k2 = matern52_gram(t, t, truth.matern_log_lengthscale,
                                    truth.matern_log_outputscale);
  const VectorXd eps = testutil::random_vector(n * m, rng);
  VectorXd f = kron_root_sample(k1, k2, eps);
  const double sigma = std::sqrt(truth.noise_variance());
  MatrixXd y(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      y(i, j) = f(i * m + j) + sigma * testutil::random_vector(1, rng)(0);

  PreparedDataset prepared{TrainingData{x, t, y, ProjectionMask::full(n, m)},
                           InputScaler::from_stats(VectorXd::Zero(d), VectorXd::Ones(d)),
                           ProgressionScaler::from_stats(0.0, 1.0),
                           OutputScaler::from_stats(0.0, 1.0),
                           t,
                           {}};
  FitConfig cfg;
  cfg.backend = Backend::exact;
  cfg.max_lbfgs_iters = 50;
  const LkgpModel model = fit(prepared, cfg);
  CHECK(std::abs(model.params.log_noise - truth.log_noise) <= 1.0);
}

TEST_CASE("metrics_mse_llh: worked examples") {
  VectorXd truth(3);
  truth << 1.0, -2.0, 0.5;
  const VectorXd ones = VectorXd::Ones(3);
  const Metrics perfect = metrics_mse_llh(truth, ones, truth);
  CHECK(perfect.mse == doctest::Approx(0.0));
  CHECK(perfect.llh ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));

  const double delta = 0.3;
  const Metrics offset = metrics_mse_llh(truth.array() + delta, ones, truth);
  CHECK(offset.mse == doctest::Approx(delta * delta).epsilon(1e-12));
  CHECK(offset.llh ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) - delta * delta / 2.0)
            .epsilon(1e-12));

  CHECK_THROWS_AS(metrics_mse_llh(truth, ones, VectorXd::Ones(2)),
                  std::invalid_argument);
}
