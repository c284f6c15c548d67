#pragma once

// Slow reference implementations for cross-checking the fast paths.
//
// Nothing here touches the QR kernel: coefficients come from Gaussian
// elimination with partial pivoting on the normal equations, and hat
// matrices from an explicit Gauss-Jordan inverse of X'X, all on plain
// row-major std::vector storage.

#include "oosmse/linalg.hpp"
#include "oosmse/rng.hpp"

#include <cstddef>
#include <vector>

namespace oosmse::oracle {

/// Row-major dense matrix used only by the reference code.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

DenseMatrix from_eigen(const linalg::Matrix& m);

/// Solves A x = b by Gaussian elimination with partial pivoting. Throws
/// RankDeficient when a pivot falls below tolerance * max |A|.
std::vector<double> solve(DenseMatrix a, std::vector<double> b,
                          double tolerance = 1e-12);

/// Inverse by Gauss-Jordan elimination with partial pivoting.
DenseMatrix invert(DenseMatrix a, double tolerance = 1e-12);

/// Normal-equations OLS coefficients for (x, y).
std::vector<double> normal_equations_beta(const DenseMatrix& x,
                                          const std::vector<double>& y);

/// y_i - x_i beta_(i) with beta_(i) refit without row i.
double loo_residual_bruteforce(const linalg::Dataset& data, std::size_t i);

double press_bruteforce(const linalg::Dataset& data);

/// X (X'X)^-1 X' with an explicit inverse.
DenseMatrix naive_hat_matrix(const linalg::Dataset& data);

/// Xtest (X'X)^-1 X' with an explicit inverse.
DenseMatrix naive_oos_hat_matrix(const linalg::Dataset& data,
                                 const linalg::Matrix& x_test);

struct ExpectedSqErrorSums {
  double in_sample = 0.0;   // sum (1 - h_i) sigma_i^2
  double out_sample = 0.0;  // sum (1 + h_i) sigma_i^2
};

/// Expected in-sample and out-of-sample residual sums of squares for a
/// correctly specified model with fixed design reused as the test design.
ExpectedSqErrorSums expected_sq_error_sums(const linalg::HatMatrix& h,
                                           const linalg::Vector& sigma2);

/// e_i^2 / (1 - h_i) from normal-equation residuals and the naive hat
/// matrix diagonal.
std::vector<double> naive_scaled_sq_residuals(const linalg::Dataset& data);

/// Direct double-sum evaluation of the per-case stochastic projection from
/// an explicit Ho row and scaled squared residuals.
std::vector<double> projected_sq_errors_direct(const DenseMatrix& ho,
                                               const std::vector<double>& e_star);

/// Random regression instance: intercept plus k - 1 normal predictors with
/// varied scales, n in [k + 2, max_n], and a fresh test design that is
/// wider than the training design. collinearity in [0, 1) mixes column 1
/// into the last predictor.
struct RandomCase {
  linalg::Dataset train;
  linalg::Matrix x_test;
};

RandomCase random_case(rng::RandomStream& stream, int max_n = 50, int max_k = 8,
                       double collinearity = 0.0);

/// Worst discrepancies between the fast paths and the reference code over
/// a batch of random instances.
struct CheckSummary {
  int trials = 0;
  double press_rel = 0.0;         // |press - brute force| / brute force
  double jackknife_rel = 0.0;     // per observation
  double reduction_rel = 0.0;     // project_oos(X) vs fixed-design estimator
  double reduction_leverage = 0.0;
  double hat_abs = 0.0;           // QR hat matrix vs explicit inverse
  double projection_rel = 0.0;    // per-case projection vs direct double sum
  int skipped = 0;                // instances the reference could not solve

  bool passed() const noexcept {
    return press_rel < 1e-8 && jackknife_rel < 1e-8 && reduction_rel < 1e-10 &&
           reduction_leverage < 1e-10 && hat_abs < 1e-8 && projection_rel < 1e-8;
  }
};

CheckSummary run_check(int trials, std::uint64_t seed);

}  // namespace oosmse::oracle
