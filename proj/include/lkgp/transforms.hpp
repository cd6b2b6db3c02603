/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#ifndef LKGP_TRANSFORMS_HPP
#define LKGP_TRANSFORMS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace lkgp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Maps hyperparameters to the unit hypercube (per-dimension min/max of the
/// training data). Test inputs outside the training range are not clamped.
class InputScaler {
 public:
  InputScaler() = default;
  static InputScaler fit(const Eigen::Ref<const MatrixXd>& x);

  MatrixXd apply(const Eigen::Ref<const MatrixXd>& x) const;
  MatrixXd invert(const Eigen::Ref<const MatrixXd>& u) const;

  const VectorXd& min() const { return min_; }
  const VectorXd& range() const { return range_; }
  static InputScaler from_stats(VectorXd min, VectorXd range);

 private:
  VectorXd min_;
  VectorXd range_;  // max - min; zero-range dimensions map to constant 0
};

/// Maps the progression grid to the unit interval with logarithmic spacing.
class ProgressionScaler {
 public:
  ProgressionScaler() = default;
  static ProgressionScaler fit(const Eigen::Ref<const VectorXd>& t);

  VectorXd apply(const Eigen::Ref<const VectorXd>& t) const;
  VectorXd invert(const Eigen::Ref<const VectorXd>& u) const;

  double log_t1() const { return log_t1_; }
  double log_span() const { return log_span_; }
  static ProgressionScaler from_stats(double log_t1, double log_span);

 private:
  double log_t1_ = 0.0;
  double log_span_ = 1.0;
};

/// Standardizes outputs by subtracting the largest observed value and
/// dividing by the population standard deviation over observed values.
class OutputScaler {
 public:
  OutputScaler() = default;
  /// observed holds one flag per entry of the flattened values.
  static OutputScaler fit(const Eigen::Ref<const VectorXd>& values);

  double apply(double y) const { return (y - y_max_) / y_std_; }
  double invert(double z) const { return z * y_std_ + y_max_; }
  double invert_variance(double v) const { return v * y_std_ * y_std_; }

  MatrixXd apply(const Eigen::Ref<const MatrixXd>& y) const;
  MatrixXd invert(const Eigen::Ref<const MatrixXd>& z) const;

  double y_max() const { return y_max_; }
  double y_std() const { return y_std_; }
  static OutputScaler from_stats(double y_max, double y_std);

 private:
  double y_max_ = 0.0;
  double y_std_ = 1.0;
};

}  // namespace lkgp

#endif  // LKGP_TRANSFORMS_HPP
