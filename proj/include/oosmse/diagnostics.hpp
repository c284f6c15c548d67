#pragma once

// Out-of-sample error estimators for an OLS fit: PRESS and jackknife
// residuals, the fixed-design MSE projection, the auxiliary variance
// regression, out-of-sample leverage, and the per-test-case projection for
// fresh predictor values.

#include "oosmse/linalg.hpp"

#include <cstddef>
#include <optional>

namespace oosmse::diagnostics {

using linalg::Dataset;
using linalg::Matrix;
using linalg::OlsFit;
using linalg::OosHatMatrix;
using linalg::Vector;

struct OosProjection {
  /// sum_i (ho_ji + ho_ji^2) * e*_i^2 for each test case j. May be negative.
  Vector per_case_projected_sq_error;
  /// sum_i ho_ji^2 for each test case j. May exceed one.
  Vector oos_leverage;
  double projected_mse = 0.0;
  std::size_t negative_projection_count = 0;
};

/// Auxiliary regression of the scaled squared residuals on the training
/// design. The dependent variable is always e_i^2 / (1 - h_i).
struct VarianceModel {
  Vector gamma_hat;
  Vector fitted_train_variance;
  static constexpr const char* kMethod = "scaled_sq_residual_1_minus_h";
};

enum class ProjectionMethod {
  /// Evaluates the double sum through the QR factor: with c_j the test row's
  /// coordinates in Q, sum_i ho_ji e*_i = c_j . Q'e* and
  /// sum_i ho_ji^2 e*_i = c_j' (Q' diag(e*) Q) c_j. O(k^2) per test case.
  kFactored,
  /// Streams explicit rows of Ho in blocks and sums over training cases in
  /// index order. O(n k) per test case.
  kHatRows,
};

struct ProjectionOptions {
  ProjectionMethod method = ProjectionMethod::kFactored;
  /// Replace negative per-case values by zero before averaging. The count
  /// of negative values is reported either way.
  bool clamp_negative = false;
  /// Test rows per Ho block for kHatRows.
  Eigen::Index block_rows = 256;
};

/// Throws LeverageAtOne if any training leverage is within tolerance of one.
void require_leverage_below_one(const OlsFit& fit);

Vector jackknife_residuals(const OlsFit& fit);

double press(const OlsFit& fit);

/// (1/n) sum (1 + h_i)/(1 - h_i) e_i^2.
double mse_nonstochastic(const OlsFit& fit);

Vector scaled_sq_residuals(const OlsFit& fit);

/// (1/n) sum e_i^2.
double training_mse(const OlsFit& fit);

VarianceModel fit_variance_model(const OlsFit& fit, const Dataset& data);

Vector oos_leverage(const OosHatMatrix& ho);

OosProjection project_oos(const OlsFit& fit, const Matrix& x_test,
                          const ProjectionOptions& options = {});

double actual_test_mse(const OlsFit& fit, const Matrix& x_test,
                       const Vector& y_test);

/// Every estimator for one (training, test) pair, computed through a single
/// fit. Shared by the simulator and the dataset diagnostics so both paths
/// produce bit-identical numbers for identical inputs.
struct ModelEvaluation {
  OlsFit fit;
  double train_mse = 0.0;
  double press_over_n = 0.0;
  Vector jackknife;
  OosProjection projection;
  Vector predictions;
  std::optional<double> test_mse;
  std::optional<Vector> actual_sq_error;
};

ModelEvaluation evaluate_model(const Dataset& train, const Matrix& x_test,
                               const std::optional<Vector>& y_test,
                               const ProjectionOptions& options = {});

}  // namespace oosmse::diagnostics
