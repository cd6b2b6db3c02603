/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
// Compares the OpenMP kernels against their serial reference
// implementations and the structured MVM against the dense baseline.
// Also asserts the allocation contract of kron_mvm through the tracker.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>

#include "lkgp/alloc_tracker.hpp"
#include "lkgp/kernels.hpp"
#include "lkgp/structured_linalg.hpp"

using lkgp::Index;
using lkgp::MatrixXd;
using lkgp::VectorXd;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
             .count() /
         reps;
}

MatrixXd random_spd_kernel(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  MatrixXd k = a * a.transpose() / static_cast<double>(n);
  k.diagonal().array() += 1.0;
  return k;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::printf("%-34s %10s %10s %8s\n", "kernel", "serial_s", "parallel_s", "check");

  const std::vector<Index> sizes = quick ? std::vector<Index>{64}
                                         : std::vector<Index>{128, 256, 512};
  const int reps = quick ? 2 : 5;
  bool all_ok = true;

  for (Index n : sizes) {
    const Index d = 10;
    MatrixXd x(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < d; ++k) x(i, k) = uniform(rng);
    const VectorXd log_ls = VectorXd::Constant(d, 0.5);

    MatrixXd gram_serial, gram_parallel;
    const double t_serial =
        time_of([&] { gram_serial = lkgp::ref::rbf_gram(x, x, log_ls); }, reps);
    const double t_parallel =
        time_of([&] { gram_parallel = lkgp::rbf_gram(x, x, log_ls); }, reps);
    const bool same = (gram_serial - gram_parallel).cwiseAbs().maxCoeff() == 0.0;
    all_ok = all_ok && same;
    std::printf("%-24s n=%-8lld %10.6f %10.6f %8s\n", "rbf_gram", (long long)n,
                t_serial, t_parallel, same ? "equal" : "DIFFER");
  }

  // Structured MVM against the dense Kronecker baseline.
  for (Index n : (quick ? std::vector<Index>{16} : std::vector<Index>{32, 64})) {
    const Index m = n;
    const MatrixXd k1 = random_spd_kernel(n, rng);
    const MatrixXd k2 = random_spd_kernel(m, rng);
    lkgp::KroneckerOperator op(k1, k2);
    VectorXd v(n * m);
    for (Index i = 0; i < v.size(); ++i) v(i) = normal(rng);

    const MatrixXd dense = lkgp::ref::dense_kron(k1, k2);
    VectorXd structured, baseline;
    const double t_dense = time_of([&] { baseline = dense * v; }, reps);
    const double t_struct = time_of([&] { structured = lkgp::kron_mvm(op, v); }, reps);
    const double err = (structured - baseline).cwiseAbs().maxCoeff();
    const bool ok = err < 1e-10;
    all_ok = all_ok && ok;
    std::printf("%-24s nm=%-7lld %10.6f %10.6f %8s\n", "kron_mvm vs dense",
                (long long)(n * m), t_dense, t_struct, ok ? "equal" : "DIFFER");

    // Allocation contract: the structured MVM must never allocate a buffer
    // quadratic in nm.
    lkgp::tracker::reset();
    (void)lkgp::kron_mvm(op, v);
    const std::int64_t peak = lkgp::tracker::peak_bytes();
    const std::int64_t linear_budget = 8 * (4 * n * m + 16);
    if (peak > linear_budget) {
      std::printf("kron_mvm allocation check FAILED: peak %lld > budget %lld\n",
                  (long long)peak, (long long)linear_budget);
      all_ok = false;
    } else {
      std::printf("%-34s peak=%lld bytes (budget %lld)\n", "kron_mvm allocations",
                  (long long)peak, (long long)linear_budget);
    }
  }

  if (!all_ok) {
    std::printf("BENCH CHECKS FAILED\n");
    return 1;
  }
  std::printf("all checks passed\n");
  return 0;
}
