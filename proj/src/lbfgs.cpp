/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include "lkgp/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace lkgp {

namespace {

struct Eval {
  double f;
  VectorXd g;
};

// Cubic minimizer of the interpolant through (a, fa, da) and (b, fb, db),
// clipped to the interior of [a, b]. Falls back to bisection.
double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) {
      return t;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, VectorXd x0, const LbfgsConfig& cfg) {
  const Eigen::Index dim = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);
  result.grad.resize(dim);
  result.value = fg(result.x, result.grad);
  result.trace.push_back(result.value);

  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  VectorXd x = result.x;
  VectorXd g = result.grad;
  double f = result.value;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) break;

    // Two-loop recursion for the search direction.
    VectorXd q = -g;
    const int h = static_cast<int>(s_hist.size());
    std::vector<double> alpha(static_cast<std::size_t>(h));
    for (int i = h - 1; i >= 0; --i) {
      alpha[static_cast<std::size_t>(i)] =
          rho_hist[static_cast<std::size_t>(i)] *
          s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (h > 0) {
      const VectorXd& s = s_hist.back();
      const VectorXd& y = y_hist.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (int i = 0; i < h; ++i) {
      const double beta = rho_hist[static_cast<std::size_t>(i)] *
                          y_hist[static_cast<std::size_t>(i)].dot(q);
      q += (alpha[static_cast<std::size_t>(i)] - beta) *
           s_hist[static_cast<std::size_t>(i)];
    }
    VectorXd dir = q;
    double d0 = g.dot(dir);
    if (!(d0 < 0.0)) {  // not a descent direction; restart from steepest descent
      dir = -g;
      d0 = g.dot(dir);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Strong Wolfe line search (bracketing phase followed by zoom).
    const double c1 = cfg.sufficient_decrease;
    const double c2 = cfg.curvature;
    auto phi = [&](double step, Eval& out) {
      out.g.resize(dim);
      out.f = fg(x + step * dir, out.g);
      return out.f;
    };

    const double dir_inf = dir.lpNorm<Eigen::Infinity>();
    const double step_cap =
        (cfg.max_step > 0.0 && dir_inf > 0.0)
            ? cfg.max_step / dir_inf
            : std::numeric_limits<double>::infinity();
    double step = std::min(1.0, step_cap);
    double prev_step = 0.0;
    double prev_f = f;
    double prev_d = d0;
    Eval prev_eval{f, g};
    Eval trial;
    double lo = -1.0, hi = -1.0, f_lo = 0.0, d_lo = 0.0, f_hi = 0.0, d_hi = 0.0;
    Eval lo_eval;
    bool bracketed = false;
    bool accepted = false;
    double accepted_step = 0.0;
    Eval accepted_eval;

    for (int ls = 0; ls < cfg.max_line_search; ++ls) {
      phi(step, trial);
      const double d_trial = trial.g.dot(dir);
      if (!std::isfinite(trial.f)) {
        step = 0.5 * (prev_step + step);
        continue;
      }
      if (trial.f > f + c1 * step * d0 || (ls > 0 && trial.f >= prev_f)) {
        lo = prev_step; f_lo = prev_f; d_lo = prev_d; lo_eval = prev_eval;
        hi = step; f_hi = trial.f; d_hi = d_trial;
        bracketed = true;
        break;
      }
      if (std::abs(d_trial) <= -c2 * d0) {
        accepted = true;
        accepted_step = step;
        accepted_eval = trial;
        break;
      }
      if (d_trial >= 0.0) {
        lo = step; f_lo = trial.f; d_lo = d_trial; lo_eval = trial;
        hi = prev_step; f_hi = prev_f; d_hi = prev_d;
        bracketed = true;
        break;
      }
      if (step >= step_cap) {
        // Sufficient decrease holds at the largest allowed step; take it.
        accepted = true;
        accepted_step = step;
        accepted_eval = trial;
        break;
      }
      prev_step = step;
      prev_f = trial.f;
      prev_d = d_trial;
      prev_eval = trial;
      step = std::min(2.0 * step, step_cap);
    }

    if (bracketed && !accepted) {
      for (int zi = 0; zi < cfg.max_zoom; ++zi) {
        // A flat bracket cannot satisfy the curvature condition any further;
        // settle for the best point instead of burning the trial budget.
        if (std::abs(f_hi - f_lo) <=
            cfg.value_tol * std::max(1.0, std::abs(f_lo))) {
          break;
        }
        const double mid = cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi);
        phi(mid, trial);
        const double d_mid = trial.g.dot(dir);
        if (trial.f > f + c1 * mid * d0 || trial.f >= f_lo) {
          hi = mid; f_hi = trial.f; d_hi = d_mid;
        } else {
          if (std::abs(d_mid) <= -c2 * d0) {
            accepted = true;
            accepted_step = mid;
            accepted_eval = trial;
            break;
          }
          if (d_mid * (hi - lo) >= 0.0) {
            hi = lo; f_hi = f_lo; d_hi = d_lo;
          }
          lo = mid; f_lo = trial.f; d_lo = d_mid; lo_eval = trial;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      // No strong Wolfe point found; take the best bracketed point if it
      // improves on the current iterate (its evaluation is already cached).
      if (!accepted && f_lo < f && lo > 0.0) {
        accepted = true;
        accepted_step = lo;
        accepted_eval = lo_eval;
      }
    }

    if (!accepted) {
      if (iter == 0) {
        result.line_search_failed_at_start = true;
      }
      break;
    }

    const VectorXd x_new = x + accepted_step * dir;
    const VectorXd s = x_new - x;
    const VectorXd yv = accepted_eval.g - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double improvement = f - accepted_eval.f;
    x = x_new;
    f = accepted_eval.f;
    g = accepted_eval.g;
    result.iterations = iter + 1;
    result.trace.push_back(f);
    if (f < result.value) {
      result.value = f;
      result.x = x;
      result.grad = g;
    }
    // Converged in value: further iterations only chase estimator noise.
    if (improvement <= cfg.value_tol * std::max(1.0, std::abs(f))) break;
  }
  return result;
}

}  // namespace lkgp
