/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include "lkgp/transforms.hpp"

#include <cmath>
#include <stdexcept>

namespace lkgp {

InputScaler InputScaler::fit(const Eigen::Ref<const MatrixXd>& x) {
  if (x.rows() < 1) {
    throw std::invalid_argument("InputScaler: need at least one row");
  }
  InputScaler s;
  s.min_ = x.colwise().minCoeff();
  s.range_ = x.colwise().maxCoeff().transpose() - s.min_;
  return s;
}

InputScaler InputScaler::from_stats(VectorXd min, VectorXd range) {
  InputScaler s;
  s.min_ = std::move(min);
  s.range_ = std::move(range);
  return s;
}

MatrixXd InputScaler::apply(const Eigen::Ref<const MatrixXd>& x) const {
  if (x.cols() != min_.size()) {
    throw std::invalid_argument("InputScaler::apply: dimension mismatch");
  }
  MatrixXd out(x.rows(), x.cols());
  for (Index k = 0; k < x.cols(); ++k) {
    if (range_(k) > 0.0) {
      out.col(k) = (x.col(k).array() - min_(k)) / range_(k);
    } else {
      out.col(k).setZero();  // degenerate constant dimension
    }
  }
  return out;
}

MatrixXd InputScaler::invert(const Eigen::Ref<const MatrixXd>& u) const {
  if (u.cols() != min_.size()) {
    throw std::invalid_argument("InputScaler::invert: dimension mismatch");
  }
  MatrixXd out(u.rows(), u.cols());
  for (Index k = 0; k < u.cols(); ++k) {
    if (range_(k) > 0.0) {
      out.col(k) = u.col(k).array() * range_(k) + min_(k);
    } else {
      out.col(k).setConstant(min_(k));
    }
  }
  return out;
}

ProgressionScaler ProgressionScaler::fit(const Eigen::Ref<const VectorXd>& t) {
  if (t.size() < 2) {
    throw std::invalid_argument("ProgressionScaler: need m >= 2 grid points");
  }
  if (t(0) <= 0.0) {
    throw std::invalid_argument("ProgressionScaler: progressions must be positive");
  }
  for (Index j = 1; j < t.size(); ++j) {
    if (t(j) <= t(j - 1)) {
      throw std::invalid_argument("ProgressionScaler: grid must be strictly increasing");
    }
  }
  ProgressionScaler s;
  s.log_t1_ = std::log(t(0));
  s.log_span_ = std::log(t(t.size() - 1)) - s.log_t1_;
  return s;
}

ProgressionScaler ProgressionScaler::from_stats(double log_t1, double log_span) {
  ProgressionScaler s;
  s.log_t1_ = log_t1;
  s.log_span_ = log_span;
  return s;
}

VectorXd ProgressionScaler::apply(const Eigen::Ref<const VectorXd>& t) const {
  if ((t.array() <= 0.0).any()) {
    throw std::invalid_argument("ProgressionScaler::apply: progressions must be positive");
  }
  return (t.array().log() - log_t1_) / log_span_;
}

VectorXd ProgressionScaler::invert(const Eigen::Ref<const VectorXd>& u) const {
  return (u.array() * log_span_ + log_t1_).exp();
}

OutputScaler OutputScaler::fit(const Eigen::Ref<const VectorXd>& values) {
  if (values.size() < 2) {
    throw std::invalid_argument("OutputScaler: need at least two observed values");
  }
  OutputScaler s;
  s.y_max_ = values.maxCoeff();
  const double mean = values.mean();
  s.y_std_ = std::sqrt((values.array() - mean).square().mean());
  if (s.y_std_ <= 0.0) {
    throw std::invalid_argument("OutputScaler: observed values have zero variance");
  }
  return s;
}

OutputScaler OutputScaler::from_stats(double y_max, double y_std) {
  OutputScaler s;
  s.y_max_ = y_max;
  s.y_std_ = y_std;
  return s;
}

MatrixXd OutputScaler::apply(const Eigen::Ref<const MatrixXd>& y) const {
  return (y.array() - y_max_) / y_std_;
}

MatrixXd OutputScaler::invert(const Eigen::Ref<const MatrixXd>& z) const {
  return z.array() * y_std_ + y_max_;
}

}  // namespace lkgp
