/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include "lkgp/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lkgp {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_double(const std::string& s, int line_no, const char* what) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &consumed);
  } catch (const std::exception&) {
    throw std::invalid_argument("line " + std::to_string(line_no) +
                                ": cannot parse " + what + " '" + s + "'");
  }
  if (consumed != s.size() || !std::isfinite(value)) {
    throw std::invalid_argument("line " + std::to_string(line_no) +
                                ": cannot parse " + what + " '" + s + "'");
  }
  return value;
}

std::string config_label(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cfg_%05lld", static_cast<long long>(i));
  return buf;
}

json vector_to_json(const Eigen::Ref<const VectorXd>& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

VectorXd json_to_vector(const json& arr) {
  VectorXd v(arr.size());
  Index i = 0;
  for (const auto& x : arr) v(i++) = x.get<double>();
  return v;
}

json matrix_to_json(const Eigen::Ref<const MatrixXd>& m) {
  json arr = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      arr.push_back(m(i, j));
    }
  }
  return arr;
}

MatrixXd json_to_matrix(const json& arr, Index rows, Index cols) {
  if (static_cast<Index>(arr.size()) != rows * cols) {
    throw std::invalid_argument("model file: matrix size mismatch");
  }
  MatrixXd m(rows, cols);
  Index k = 0;
  for (const auto& x : arr) {
    m(k / cols, k % cols) = x.get<double>();
    ++k;
  }
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec < 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::stod(buf) == v) {
      return buf;
    }
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 4 || header.front() != "config_id" ||
      header[header.size() - 2] != "step" || header.back() != "value") {
    throw std::invalid_argument(
        path + ": expected header config_id,hp_1,...,hp_d,step,value");
  }
  const Index d = static_cast<Index>(header.size()) - 3;
  for (Index k = 0; k < d; ++k) {
    if (header[static_cast<std::size_t>(k + 1)] != "hp_" + std::to_string(k + 1)) {
      throw std::invalid_argument(path + ": expected hyperparameter column hp_" +
                                  std::to_string(k + 1));
    }
  }

  Dataset ds;
  ds.input_dim = d;
  std::map<std::string, VectorXd> seen_hyperparams;
  std::map<std::string, std::set<double>> seen_steps;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    CurveRecord rec;
    rec.config_id = fields[0];
    rec.hyperparams.resize(d);
    for (Index k = 0; k < d; ++k) {
      rec.hyperparams(k) =
          parse_double(fields[static_cast<std::size_t>(k + 1)], line_no, "hyperparameter");
    }
    rec.step = parse_double(fields[fields.size() - 2], line_no, "step");
    rec.value = parse_double(fields.back(), line_no, "value");
    if (rec.step <= 0.0) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": step must be positive");
    }

    auto [it, inserted] = seen_hyperparams.emplace(rec.config_id, rec.hyperparams);
    if (!inserted && (it->second.array() != rec.hyperparams.array()).any()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": config '" +
                                  rec.config_id +
                                  "' has inconsistent hyperparameter values");
    }
    if (!seen_steps[rec.config_id].insert(rec.step).second) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": duplicate (config_id, step) for '" +
                                  rec.config_id + "'");
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) {
    throw std::invalid_argument(path + ": no data rows");
  }
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::invalid_argument("cannot write '" + path + "'");
  }
  out << "config_id";
  for (Index k = 0; k < ds.input_dim; ++k) out << ",hp_" << (k + 1);
  out << ",step,value\n";

  std::vector<const CurveRecord*> order;
  order.reserve(ds.records.size());
  for (const auto& rec : ds.records) order.push_back(&rec);
  std::sort(order.begin(), order.end(), [](const CurveRecord* a, const CurveRecord* b) {
    if (a->config_id != b->config_id) return a->config_id < b->config_id;
    return a->step < b->step;
  });

  const auto fmt = format_double;
  for (const CurveRecord* rec : order) {
    out << rec->config_id;
    for (Index k = 0; k < ds.input_dim; ++k) out << ',' << fmt(rec->hyperparams(k));
    out << ',' << fmt(rec->step) << ',' << fmt(rec->value) << '\n';
  }
}

PreparedDataset to_training_data(const Dataset& ds) {
  if (ds.records.empty()) {
    throw std::invalid_argument("to_training_data: empty dataset");
  }
  std::map<std::string, VectorXd> configs;
  std::set<double> steps;
  for (const auto& rec : ds.records) {
    configs.emplace(rec.config_id, rec.hyperparams);
    steps.insert(rec.step);
  }
  const Index n = static_cast<Index>(configs.size());
  const Index m = static_cast<Index>(steps.size());
  const Index d = ds.input_dim;
  if (m < 2) {
    throw std::invalid_argument("to_training_data: need at least 2 grid steps");
  }

  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  MatrixXd raw_x(n, d);
  std::map<std::string, Index> config_index;
  for (const auto& [id, hp] : configs) {
    config_index[id] = static_cast<Index>(ids.size());
    raw_x.row(static_cast<Index>(ids.size())) = hp.transpose();
    ids.push_back(id);
  }
  VectorXd grid(m);
  std::map<double, Index> step_index;
  Index j = 0;
  for (double s : steps) {
    step_index[s] = j;
    grid(j++) = s;
  }

  MatrixXd raw_y = MatrixXd::Zero(n, m);
  std::vector<std::uint8_t> observed(static_cast<std::size_t>(n * m), 0);
  for (const auto& rec : ds.records) {
    const Index i = config_index[rec.config_id];
    const Index col = step_index[rec.step];
    raw_y(i, col) = rec.value;
    observed[static_cast<std::size_t>(i * m + col)] = 1;
  }
  ProjectionMask mask(observed, n, m);

  VectorXd observed_values(mask.count());
  Index k = 0;
  for (Index flat : mask.indices()) {
    observed_values(k++) = raw_y(flat / m, flat % m);
  }

  PreparedDataset prepared{
      TrainingData{MatrixXd(), VectorXd(), MatrixXd(), mask},
      InputScaler::fit(raw_x),
      ProgressionScaler::fit(grid),
      OutputScaler::fit(observed_values),
      grid,
      std::move(ids)};
  prepared.data.X = prepared.input_scaler.apply(raw_x);
  prepared.data.t = prepared.progression_scaler.apply(grid);
  prepared.data.Y = MatrixXd::Zero(n, m);
  for (Index flat : mask.indices()) {
    prepared.data.Y(flat / m, flat % m) =
        prepared.output_scaler.apply(raw_y(flat / m, flat % m));
  }
  return prepared;
}

Dataset synth_benchmark(Index n, Index m, Index d, std::uint64_t seed) {
  if (n < 1 || m < 1 || d < 1) {
    throw std::invalid_argument("synth_benchmark: need n, m, d >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.input_dim = d;
  ds.records.reserve(static_cast<std::size_t>(n * m));
  for (Index i = 0; i < n; ++i) {
    VectorXd hp(d);
    for (Index k = 0; k < d; ++k) hp(k) = uniform(rng);
    for (Index j = 0; j < m; ++j) {
      CurveRecord rec;
      rec.config_id = config_label(i);
      rec.hyperparams = hp;
      rec.step = static_cast<double>(j + 1) / static_cast<double>(m);
      rec.value = normal(rng);
      ds.records.push_back(std::move(rec));
    }
  }
  return ds;
}

SynthCurves synth_curves(Index n, Index m, Index d, double noise,
                         double missing_fraction, std::uint64_t seed) {
  if (n < 1 || m < 2 || d < 1) {
    throw std::invalid_argument("synth_curves: need n >= 1, m >= 2, d >= 1");
  }
  if (missing_fraction < 0.0 || missing_fraction >= 1.0) {
    throw std::invalid_argument("synth_curves: missing_fraction must be in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthCurves out;
  out.dataset.input_dim = d;
  out.truth.resize(n);
  out.final_step = static_cast<double>(m);
  for (Index i = 0; i < n; ++i) {
    VectorXd hp(d);
    for (Index k = 0; k < d; ++k) hp(k) = uniform(rng);
    // Early-stopping pattern: each curve is cut off at its own random point,
    // with the expected hidden-suffix length equal to missing_fraction * m.
    const Index hidden = std::min<Index>(
        m - 1, static_cast<Index>(std::llround(2.0 * missing_fraction *
                                               static_cast<double>(m) *
                                               uniform(rng))));
    const double a = 0.60 + 0.35 * hp(0);
    const double b = 0.20 + 0.30 * hp(1 % d);
    const double c = 0.50 + 1.00 * hp(2 % d);
    for (Index j = 0; j < m; ++j) {
      const double step = static_cast<double>(j + 1);
      const double value =
          a - b * std::pow(step, -c) + (noise > 0.0 ? noise * normal(rng) : 0.0);
      if (j == m - 1) {
        out.truth(i) = value;
      }
      if (j < m - hidden) {
        CurveRecord rec;
        rec.config_id = config_label(i);
        rec.hyperparams = hp;
        rec.step = step;
        rec.value = value;
        out.dataset.records.push_back(std::move(rec));
      }
    }
  }
  return out;
}

void save_model(const LkgpModel& model, const std::string& path) {
  json doc;
  doc["format_version"] = 1;
  doc["seed"] = model.seed;
  doc["params"] = {
      {"rbf_log_lengthscales", vector_to_json(model.params.rbf_log_lengthscales)},
      {"matern_log_lengthscale", model.params.matern_log_lengthscale},
      {"matern_log_outputscale", model.params.matern_log_outputscale},
      {"log_noise", model.params.log_noise}};
  doc["input_scaler"] = {{"min", vector_to_json(model.input_scaler.min())},
                         {"range", vector_to_json(model.input_scaler.range())}};
  doc["progression_scaler"] = {{"log_t1", model.progression_scaler.log_t1()},
                               {"log_span", model.progression_scaler.log_span()}};
  doc["output_scaler"] = {{"y_max", model.output_scaler.y_max()},
                          {"y_std", model.output_scaler.y_std()}};
  doc["grid_steps"] = vector_to_json(model.grid_steps);

  const TrainingData& data = model.data;
  json mask_arr = json::array();
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.m(); ++j) {
      mask_arr.push_back(data.mask.observed_at(i, j) ? 1 : 0);
    }
  }
  doc["data"] = {{"n", data.n()},          {"m", data.m()},
                 {"d", data.d()},          {"X", matrix_to_json(data.X)},
                 {"t", vector_to_json(data.t)}, {"Y", matrix_to_json(data.Y)},
                 {"mask", std::move(mask_arr)}};
  doc["fit_report"] = {
      {"objective_trace", model.fit_report.objective_trace},
      {"lbfgs_iterations", model.fit_report.lbfgs_iterations},
      {"backend", backend_name(model.fit_report.backend_used)},
      {"cg_all_converged", model.fit_report.cg_all_converged},
      {"line_search_failed_at_start", model.fit_report.line_search_failed_at_start}};

  std::ofstream out(path);
  if (!out) {
    throw std::invalid_argument("cannot write '" + path + "'");
  }
  out << doc.dump(2) << '\n';
}

LkgpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open '" + path + "'");
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": model file parse error: " + e.what());
  }
  try {
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
      throw std::invalid_argument(path + ": missing format_version");
    }
    if (doc["format_version"].get<int>() != 1) {
      throw std::invalid_argument(
          path + ": unsupported model format version " +
          doc["format_version"].dump());
    }
    const auto& jd = doc.at("data");
    const Index n = jd.at("n").get<Index>();
    const Index m = jd.at("m").get<Index>();
    const Index d = jd.at("d").get<Index>();
    std::vector<std::uint8_t> observed;
    for (const auto& v : jd.at("mask")) {
      observed.push_back(v.get<int>() != 0 ? 1 : 0);
    }
    TrainingData data{json_to_matrix(jd.at("X"), n, d), json_to_vector(jd.at("t")),
                      json_to_matrix(jd.at("Y"), n, m),
                      ProjectionMask(std::move(observed), n, m)};

    const auto& jp = doc.at("params");
    ProductKernelParams params;
    params.rbf_log_lengthscales = json_to_vector(jp.at("rbf_log_lengthscales"));
    params.matern_log_lengthscale = jp.at("matern_log_lengthscale").get<double>();
    params.matern_log_outputscale = jp.at("matern_log_outputscale").get<double>();
    params.log_noise = jp.at("log_noise").get<double>();

    LkgpModel model{
        std::move(params),
        std::move(data),
        InputScaler::from_stats(json_to_vector(doc.at("input_scaler").at("min")),
                                json_to_vector(doc.at("input_scaler").at("range"))),
        ProgressionScaler::from_stats(
            doc.at("progression_scaler").at("log_t1").get<double>(),
            doc.at("progression_scaler").at("log_span").get<double>()),
        OutputScaler::from_stats(doc.at("output_scaler").at("y_max").get<double>(),
                                 doc.at("output_scaler").at("y_std").get<double>()),
        json_to_vector(doc.at("grid_steps")),
        FitReport{},
        doc.at("seed").get<std::uint64_t>()};
    const auto& jr = doc.at("fit_report");
    model.fit_report.objective_trace =
        jr.at("objective_trace").get<std::vector<double>>();
    model.fit_report.lbfgs_iterations = jr.at("lbfgs_iterations").get<int>();
    model.fit_report.backend_used =
        jr.at("backend").get<std::string>() == "iterative" ? Backend::iterative
                                                           : Backend::exact;
    model.fit_report.cg_all_converged = jr.at("cg_all_converged").get<bool>();
    model.fit_report.line_search_failed_at_start =
        jr.at("line_search_failed_at_start").get<bool>();
    return model;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": model file schema violation: " + e.what());
  }
}

}  // namespace lkgp
