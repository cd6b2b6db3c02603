/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#ifndef LKGP_LBFGS_HPP
#define LKGP_LBFGS_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace lkgp {

using Eigen::VectorXd;

struct LbfgsConfig {
  int max_iters = 100;
  int history = 10;
  double grad_tol = 1e-5;       // stop when ||g||_inf falls below
  double value_tol = 1e-9;      // stop when relative improvement falls below
  double sufficient_decrease = 1e-4;  // Armijo c1
  double curvature = 0.9;             // strong Wolfe c2
  int max_line_search = 30;
  int max_zoom = 10;
  // Per-trial move cap (infinity norm); keeps quasi-Newton steps from
  // jumping to regions where the objective is astronomically expensive
  // or numerically unstable. Nonpositive disables the cap.
  double max_step = 5.0;
};

struct LbfgsResult {
  VectorXd x;
  double value = 0.0;
  VectorXd grad;
  int iterations = 0;
  std::vector<double> trace;  // accepted objective values, starting at x0
  bool line_search_failed_at_start = false;
};

/// fg evaluates the objective and writes its gradient.
using ObjectiveFn = std::function<double(const VectorXd&, VectorXd&)>;

/// Limited-memory BFGS with a strong Wolfe line search (bracket + zoom).
LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, VectorXd x0,
                           const LbfgsConfig& cfg = {});

}  // namespace lkgp

#endif  // LKGP_LBFGS_HPP
