/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#ifndef LKGP_DATA_IO_HPP
#define LKGP_DATA_IO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lkgp/model.hpp"

namespace lkgp {

/// One observed learning-curve value.
struct CurveRecord {
  std::string config_id;
  VectorXd hyperparams;
  double step = 0.0;
  double value = 0.0;
};

/// Long-format learning-curve dataset; the grid and mask are derived during
/// alignment, unobserved cells are masked rather than filled.
struct Dataset {
  std::vector<CurveRecord> records;
  Index input_dim = 0;
};

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Curves CSV with header config_id,hp_1,...,hp_d,step,value.
Dataset read_csv(const std::string& path);
void write_csv(const Dataset& ds, const std::string& path);

/// Aligns records onto the step grid (sorted union of observed steps),
/// fits the three transforms and produces transformed training data.
/// Ordering is canonical: configs sorted by id, steps ascending.
PreparedDataset to_training_data(const Dataset& ds);

/// Random data matching the scaling-benchmark recipe: X uniform on the unit
/// hypercube, Y standard normal, steps {1..m}/m (linear spacing shifted to
/// stay positive for the log transform), no missing values.
Dataset synth_benchmark(Index n, Index m, Index d, std::uint64_t seed);

struct SynthCurves {
  Dataset dataset;
  VectorXd truth;  // hidden final value per config, in config_id order
  double final_step = 0.0;
};

/// Power-law curves y(t) = a - b t^-c with coefficients tied to the
/// hyperparameters, plus optional noise; a contiguous suffix of each curve
/// is hidden to mimic early stopping.
SynthCurves synth_curves(Index n, Index m, Index d, double noise,
                         double missing_fraction, std::uint64_t seed);

/// Versioned JSON model file; reloading reproduces predictions bitwise.
void save_model(const LkgpModel& model, const std::string& path);
LkgpModel load_model(const std::string& path);

}  // namespace lkgp

#endif  // LKGP_DATA_IO_HPP
