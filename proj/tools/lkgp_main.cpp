/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lkgp/alloc_tracker.hpp"
#include "lkgp/data_io.hpp"
#include "lkgp/model.hpp"

namespace {

using json = nlohmann::json;
using lkgp::Index;
using lkgp::MatrixXd;
using lkgp::VectorXd;

// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

lkgp::Backend parse_backend(const std::string& s) {
  if (s == "exact") return lkgp::Backend::exact;
  if (s == "iterative") return lkgp::Backend::iterative;
  if (s == "auto") return lkgp::Backend::automatic;
  throw CLI::ValidationError("--backend", "expected exact, iterative or auto");
}

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

struct TargetList {
  std::vector<std::string> config_ids;
  MatrixXd x;
};

TargetList read_targets(const std::string& path, Index expected_d) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(path + ": empty file");
  }
  std::stringstream header(line);
  std::string field;
  Index cols = 0;
  while (std::getline(header, field, ',')) ++cols;
  const Index d = cols - 1;
  if (d != expected_d) {
    throw std::invalid_argument(path + ": targets have d=" + std::to_string(d) +
                                " hyperparameters but the model expects d=" +
                                std::to_string(expected_d));
  }
  TargetList out;
  std::vector<VectorXd> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id;
    std::getline(ss, id, ',');
    VectorXd hp(d);
    for (Index k = 0; k < d; ++k) {
      if (!std::getline(ss, field, ',')) {
        throw std::invalid_argument(path + ": line " + std::to_string(line_no) +
                                    ": too few fields");
      }
      hp(k) = std::stod(field);
    }
    out.config_ids.push_back(id);
    rows.push_back(hp);
  }
  if (rows.empty()) {
    throw std::invalid_argument(path + ": no target rows");
  }
  out.x.resize(static_cast<Index>(rows.size()), d);
  for (Index i = 0; i < out.x.rows(); ++i) {
    out.x.row(i) = rows[static_cast<std::size_t>(i)].transpose();
  }
  return out;
}

int cmd_fit(const std::string& data_path, const std::string& out_path,
            const std::string& backend, double cg_tol, int cg_max_iters, int probes,
            int lbfgs_iters, std::uint64_t seed) {
  const lkgp::Dataset ds = lkgp::read_csv(data_path);
  const lkgp::PreparedDataset prepared = lkgp::to_training_data(ds);

  lkgp::FitConfig cfg;
  cfg.backend = parse_backend(backend);
  cfg.cg.rel_tolerance = cg_tol;
  cfg.cg.max_iters = cg_max_iters;
  cfg.probes = probes;
  cfg.max_lbfgs_iters = lbfgs_iters;
  cfg.seed = seed;

  const lkgp::LkgpModel model = lkgp::fit(prepared, cfg);
  lkgp::save_model(model, out_path);

  json report;
  report["backend"] = lkgp::backend_name(model.fit_report.backend_used);
  report["cg_tol"] = cg_tol;
  report["cg_max_iters"] = cg_max_iters;
  report["probes"] = probes;
  report["seed"] = seed;
  report["lbfgs_iterations"] = model.fit_report.lbfgs_iterations;
  report["cg_all_converged"] = model.fit_report.cg_all_converged;
  report["line_search_failed_at_start"] =
      model.fit_report.line_search_failed_at_start;
  report["objective_trace"] = model.fit_report.objective_trace;
  std::cout << report.dump(2) << std::endl;
  if (model.fit_report.line_search_failed_at_start) {
    std::cerr << "warning: no line search step was accepted; "
                 "returning the initialization" << std::endl;
  }
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& targets_path,
                const std::string& out_path, int samples, std::uint64_t seed,
                const std::vector<double>& steps, bool write_samples) {
  const lkgp::LkgpModel model = lkgp::load_model(model_path);
  const TargetList targets = read_targets(targets_path, model.data.d());

  VectorXd test_t = model.grid_steps;
  if (!steps.empty()) {
    test_t.resize(static_cast<Index>(steps.size()));
    for (Index j = 0; j < test_t.size(); ++j) {
      test_t(j) = steps[static_cast<std::size_t>(j)];
    }
  }
  const double grid_max = model.grid_steps(model.grid_steps.size() - 1);
  if ((test_t.array() > grid_max).any()) {
    std::cerr << "warning: predicting beyond the last training progression ("
              << lkgp::format_double(grid_max) << "); this is extrapolation"
              << std::endl;
  }

  const lkgp::CurvePrediction pred =
      lkgp::predict_curves(model, targets.x, test_t, samples, seed);

  std::ofstream out(out_path);
  if (!out) {
    throw std::invalid_argument("cannot write '" + out_path + "'");
  }
  out << "config_id,step,mean,variance";
  if (write_samples) {
    for (int s = 0; s < samples; ++s) out << ",s" << s;
  }
  out << '\n';
  for (Index i = 0; i < targets.x.rows(); ++i) {
    for (Index j = 0; j < test_t.size(); ++j) {
      out << targets.config_ids[static_cast<std::size_t>(i)] << ','
          << lkgp::format_double(test_t(j)) << ','
          << lkgp::format_double(pred.mean(i, j)) << ','
          << lkgp::format_double(pred.variance(i, j));
      if (write_samples) {
        for (const MatrixXd& draw : pred.samples.samples) {
          out << ',' << lkgp::format_double(draw(i, j));
        }
      }
      out << '\n';
    }
  }
  return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path) {
  auto read_table = [](const std::string& path, bool with_variance) {
    std::ifstream in(path);
    if (!in) {
      throw std::invalid_argument("cannot open '" + path + "'");
    }
    std::string line;
    std::getline(in, line);  // header
    std::map<std::pair<std::string, double>, std::pair<double, double>> rows;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string id, step_s, a_s, b_s;
      std::getline(ss, id, ',');
      std::getline(ss, step_s, ',');
      std::getline(ss, a_s, ',');
      double b = 0.0;
      if (with_variance) {
        std::getline(ss, b_s, ',');
        b = std::stod(b_s);
      }
      rows[{id, std::stod(step_s)}] = {std::stod(a_s), b};
    }
    return rows;
  };

  const auto preds = read_table(pred_path, true);
  const auto truths = read_table(truth_path, false);

  std::vector<std::string> unmatched;
  VectorXd mean(static_cast<Index>(truths.size()));
  VectorXd variance(static_cast<Index>(truths.size()));
  VectorXd truth(static_cast<Index>(truths.size()));
  Index i = 0;
  for (const auto& [key, val] : truths) {
    auto it = preds.find(key);
    if (it == preds.end()) {
      unmatched.push_back(key.first + "@" + lkgp::format_double(key.second));
      continue;
    }
    mean(i) = it->second.first;
    variance(i) = it->second.second;
    truth(i) = val.first;
    ++i;
  }
  if (!unmatched.empty()) {
    std::string msg = "unmatched truth rows:";
    for (const auto& u : unmatched) msg += " " + u;
    throw std::invalid_argument(msg);
  }
  const lkgp::Metrics metrics =
      lkgp::metrics_mse_llh(mean.head(i), variance.head(i), truth.head(i));
  json out;
  out["mse"] = metrics.mse;
  out["llh"] = metrics.llh;
  std::cout << out.dump(2) << std::endl;
  return kExitOk;
}

int cmd_bench(const std::vector<Index>& sizes, Index d,
              const std::vector<std::string>& backends, Index test_configs,
              std::uint64_t seed, int lbfgs_iters, double max_seconds,
              const std::string& out_path) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw CLI::ValidationError("--sizes", "sizes must be strictly ascending");
    }
  }

  std::ostringstream csv;
  csv << "size,backend,fit_seconds,predict_seconds,peak_tracked_bytes,status\n";

  // Warm-up outside the measured phases.
  {
    const lkgp::PreparedDataset warm =
        lkgp::to_training_data(lkgp::synth_benchmark(4, 4, d, seed));
    lkgp::FitConfig warm_cfg;
    warm_cfg.max_lbfgs_iters = 2;
    (void)lkgp::fit(warm, warm_cfg);
  }

  for (Index size : sizes) {
    const lkgp::Dataset ds = lkgp::synth_benchmark(size, size, d, seed);
    for (const std::string& backend_str : backends) {
      const lkgp::Backend backend = parse_backend(backend_str);
      double fit_seconds = 0.0, predict_seconds = 0.0;
      std::int64_t peak = 0;
      std::string status = "ok";
      try {
        lkgp::tracker::reset();
        auto start = std::chrono::steady_clock::now();
        const lkgp::PreparedDataset prepared = lkgp::to_training_data(ds);
        lkgp::FitConfig cfg;
        cfg.backend = backend;
        cfg.max_lbfgs_iters = lbfgs_iters;
        cfg.seed = seed;
        const lkgp::LkgpModel model = lkgp::fit(prepared, cfg);
        fit_seconds = elapsed_seconds(start);
        peak = lkgp::tracker::peak_bytes();

        Index n_test = test_configs;
        if (max_seconds > 0.0 && fit_seconds > max_seconds) {
          n_test = std::max<Index>(8, n_test / 8);
        }
        std::mt19937_64 rng(seed + 1);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        MatrixXd test_x(n_test, d);
        for (Index i = 0; i < n_test; ++i) {
          for (Index k = 0; k < d; ++k) test_x(i, k) = uniform(rng);
        }

        lkgp::tracker::reset();
        start = std::chrono::steady_clock::now();
        lkgp::PredictConfig pred_cfg;
        pred_cfg.backend = backend;
        (void)lkgp::matheron_sample(model, test_x, model.grid_steps, 1, seed + 2,
                                    pred_cfg);
        predict_seconds = elapsed_seconds(start);
        peak = std::max(peak, lkgp::tracker::peak_bytes());
      } catch (const lkgp::DenseCapExceeded&) {
        status = "refused";
      } catch (const std::exception& e) {
        status = "failed";
        std::cerr << "bench size=" << size << " backend=" << backend_str << ": "
                  << e.what() << std::endl;
      }
      csv << size << ',' << backend_str << ',' << lkgp::format_double(fit_seconds)
          << ',' << lkgp::format_double(predict_seconds) << ',' << peak << ','
          << status << '\n';
    }
  }

  if (out_path.empty() || out_path == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream out(out_path);
    if (!out) {
      throw std::invalid_argument("cannot write '" + out_path + "'");
    }
    out << csv.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent Kronecker Gaussian process for learning curves"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "Log verbosity (quiet, info, debug)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to a curves CSV");
  std::string fit_data, fit_out, fit_backend = "auto";
  double cg_tol = 0.01;
  int cg_max_iters = 10000, probes = 16, lbfgs_iters = 100;
  std::uint64_t fit_seed = 0;
  fit->add_option("--data", fit_data, "Curves CSV")->required();
  fit->add_option("--out", fit_out, "Output model file")->required();
  fit->add_option("--backend", fit_backend, "exact, iterative or auto");
  fit->add_option("--cg-tol", cg_tol, "CG relative residual tolerance");
  fit->add_option("--cg-max-iters", cg_max_iters, "CG iteration cap");
  fit->add_option("--probes", probes, "Rademacher probes for the iterative backend");
  fit->add_option("--lbfgs-iters", lbfgs_iters, "Maximum L-BFGS iterations");
  fit->add_option("--seed", fit_seed, "RNG seed");

  // predict
  auto* predict = app.add_subcommand("predict", "Predict curves at target configs");
  std::string pr_model, pr_targets, pr_out;
  int pr_samples = 256;
  std::uint64_t pr_seed = 0;
  std::vector<double> pr_steps;
  bool pr_write_samples = false;
  predict->add_option("--model", pr_model, "Model file")->required();
  predict->add_option("--targets", pr_targets, "Targets CSV (config_id,hp_1,...)")
      ->required();
  predict->add_option("--out", pr_out, "Predictions CSV")->required();
  predict->add_option("--samples", pr_samples, "Posterior samples for variance");
  predict->add_option("--seed", pr_seed, "RNG seed");
  predict->add_option("--steps", pr_steps,
                      "Progression values to predict at (default: training grid)");
  predict->add_flag("--write-samples", pr_write_samples,
                    "Append per-sample columns s0..s{S-1}");

  // eval
  auto* eval = app.add_subcommand("eval", "MSE/LLH of predictions against truth");
  std::string ev_pred, ev_truth;
  eval->add_option("--pred", ev_pred, "Predictions CSV")->required();
  eval->add_option("--truth", ev_truth, "Truth CSV (config_id,step,value)")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Scaling benchmark on synthetic data");
  std::vector<Index> bn_sizes = {16, 32, 64, 128, 256};
  Index bn_d = 10, bn_test_configs = 512;
  std::vector<std::string> bn_backends = {"exact", "iterative"};
  std::uint64_t bn_seed = 0;
  int bn_lbfgs_iters = 10;
  double bn_max_seconds = 0.0;
  std::string bn_out = "-";
  bench->add_option("--sizes", bn_sizes, "Ascending n=m sizes")->delimiter(',');
  bench->add_option("--d", bn_d, "Hyperparameter dimension");
  bench->add_option("--backends", bn_backends, "Backends to run")->delimiter(',');
  bench->add_option("--test-configs", bn_test_configs,
                    "Configurations in the prediction phase");
  bench->add_option("--seed", bn_seed, "RNG seed");
  bench->add_option("--lbfgs-iters", bn_lbfgs_iters, "L-BFGS iterations per fit");
  bench->add_option("--max-seconds", bn_max_seconds,
                    "Budget per phase; prediction scaled down when exceeded");
  bench->add_option("--out", bn_out, "Output CSV path, or - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help/usage text
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit) {
      return cmd_fit(fit_data, fit_out, fit_backend, cg_tol, cg_max_iters, probes,
                     lbfgs_iters, fit_seed);
    }
    if (*predict) {
      return cmd_predict(pr_model, pr_targets, pr_out, pr_samples, pr_seed, pr_steps,
                         pr_write_samples);
    }
    if (*eval) {
      return cmd_eval(ev_pred, ev_truth);
    }
    if (*bench) {
      return cmd_bench(bn_sizes, bn_d, bn_backends, bn_test_configs, bn_seed,
                       bn_lbfgs_iters, bn_max_seconds, bn_out);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitNumerical;
  }
  return kExitUsage;
}
