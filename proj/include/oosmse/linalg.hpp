#pragma once

// Dense least-squares kernel: OLS fits, in-sample and out-of-sample hat
// matrices, and the per-row quantities the error estimators consume.

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oosmse::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Smallest admissible ratio between the smallest and largest
/// column-normalised R diagonal of the QR factorisation.
inline constexpr double kRankTolerance = 1e-10;

inline constexpr const char* kInterceptName = "(intercept)";

/// Predictor matrix and outcome vector. Immutable once constructed; the
/// constructor rejects empty, mismatched, or non-finite input.
class Dataset {
 public:
  Dataset(Matrix x, Vector y, std::vector<std::string> column_names = {});

  const Matrix& x() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  const std::vector<std::string>& column_names() const noexcept {
    return column_names_;
  }
  Eigen::Index rows() const noexcept { return x_.rows(); }
  Eigen::Index cols() const noexcept { return x_.cols(); }

  /// Copy with a leading column of ones. Never applied implicitly.
  Dataset with_intercept() const;

  /// Copy restricted to the given predictor columns, in the given order.
  Dataset select_columns(std::span<const Eigen::Index> columns) const;

  /// Copy restricted to the given rows, in the given order.
  Dataset select_rows(std::span<const Eigen::Index> rows) const;

 private:
  Matrix x_;
  Vector y_;
  std::vector<std::string> column_names_;
};

/// Result of one training fit.
///
/// beta_hat is defined by the Householder QR path X = QR, beta = R^-1 Q'y.
/// xtx_inverse = R^-1 R^-T is materialised from the same factor, and the
/// thin Q and R are retained so leverage, auxiliary regressions, and
/// out-of-sample hat rows never need a second factorisation.
struct OlsFit {
  Vector beta_hat;
  Vector fitted;
  Vector residuals;
  Vector leverage;
  /// residual^2 / (1 - h). NaN for rows whose leverage is within
  /// kLeverageTolerance of one; see has_unit_leverage.
  Vector scaled_sq_residuals;
  Matrix xtx_inverse;
  Matrix q_thin;    // n x k, orthonormal columns
  Matrix r_factor;  // k x k, upper triangular
  Eigen::Index training_n = 0;
  Eigen::Index model_k = 0;
  double condition_estimate = 1.0;
  bool has_unit_leverage = false;

  /// Residual variance proxies are undefined once h_i reaches 1 - tol.
  static constexpr double kLeverageTolerance = 1e-8;
};

struct HatMatrix {
  Matrix h;  // n x n
};

/// Maps training outcomes to test predictions: Ho = Xtest (X'X)^-1 X'.
struct OosHatMatrix {
  Matrix ho;  // m x n
};

OlsFit fit_ols(const Dataset& data);

HatMatrix hat_matrix(const Dataset& data);

/// Same as hat_matrix(data) but reusing an existing fit of that data.
HatMatrix hat_matrix(const OlsFit& fit);

OosHatMatrix oos_hat_matrix(const OlsFit& fit, const Matrix& x_test);

Vector predict(const OlsFit& fit, const Matrix& x_test);

/// Rows of Xtest R^-1, i.e. the coordinates of each test row in the
/// orthonormal basis Q. Returned transposed (k x m) so each test case is a
/// contiguous column. Ho = coords' Q'.
Matrix test_coordinates(const OlsFit& fit, const Matrix& x_test);

/// Throws DimensionMismatch unless x_test has fit.model_k columns and only
/// finite entries.
void check_test_design(const OlsFit& fit, const Matrix& x_test);

}  // namespace oosmse::linalg
