#include "oosmse/linalg.hpp"

#include "oosmse/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace oosmse::linalg {

namespace {

std::vector<std::string> default_names(Eigen::Index k) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

}  // namespace

Dataset::Dataset(Matrix x, Vector y, std::vector<std::string> column_names)
    : x_(std::move(x)), y_(std::move(y)), column_names_(std::move(column_names)) {
  if (x_.rows() != y_.size()) {
    std::ostringstream msg;
    msg << "dataset has " << x_.rows() << " predictor rows but " << y_.size()
        << " outcomes";
    throw DimensionMismatch(msg.str());
  }
  if (x_.rows() < 1 || x_.cols() < 1) {
    throw DimensionMismatch("dataset needs at least one row and one column");
  }
  if (column_names_.empty()) {
    column_names_ = default_names(x_.cols());
  } else if (static_cast<Eigen::Index>(column_names_.size()) != x_.cols()) {
    throw DimensionMismatch("column_names length does not match predictor count");
  }
  if (!x_.allFinite() || !y_.allFinite()) {
    throw NonFiniteValue("dataset contains NaN or infinite values");
  }
}

Dataset Dataset::with_intercept() const {
  Matrix x(rows(), cols() + 1);
  x.col(0).setOnes();
  x.rightCols(cols()) = x_;
  std::vector<std::string> names;
  names.reserve(column_names_.size() + 1);
  names.emplace_back(kInterceptName);
  names.insert(names.end(), column_names_.begin(), column_names_.end());
  return Dataset(std::move(x), y_, std::move(names));
}

Dataset Dataset::select_columns(std::span<const Eigen::Index> columns) const {
  Matrix x(rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const Eigen::Index c = columns[j];
    if (c < 0 || c >= cols()) throw DimensionMismatch("column index out of range");
    x.col(static_cast<Eigen::Index>(j)) = x_.col(c);
    names.push_back(column_names_[static_cast<std::size_t>(c)]);
  }
  return Dataset(std::move(x), y_, std::move(names));
}

Dataset Dataset::select_rows(std::span<const Eigen::Index> rows_to_keep) const {
  const auto m = static_cast<Eigen::Index>(rows_to_keep.size());
  Matrix x(m, cols());
  Vector y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = rows_to_keep[static_cast<std::size_t>(i)];
    if (r < 0 || r >= rows()) throw DimensionMismatch("row index out of range");
    x.row(i) = x_.row(r);
    y(i) = y_(r);
  }
  return Dataset(std::move(x), std::move(y), column_names_);
}

OlsFit fit_ols(const Dataset& data) {
  const Matrix& x = data.x();
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (n < k) {
    std::ostringstream msg;
    msg << "cannot identify " << k << " coefficients from " << n << " rows";
    throw RankDeficient(msg.str(), std::numeric_limits<double>::infinity());
  }

  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();

  // Column-normalised R diagonal: invariant to rescaling any predictor.
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double norm = x.col(j).norm();
    const double d = norm > 0.0 ? std::abs(r(j, j)) / norm : 0.0;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || lo < kRankTolerance * hi) {
    std::ostringstream msg;
    msg << "design matrix is rank deficient (condition estimate " << condition
        << ")";
    throw RankDeficient(msg.str(), condition);
  }

  OlsFit fit;
  fit.training_n = n;
  fit.model_k = k;
  fit.condition_estimate = condition;
  fit.q_thin = qr.householderQ() * Matrix::Identity(n, k);
  fit.r_factor = std::move(r);

  const auto r_upper = fit.r_factor.triangularView<Eigen::Upper>();
  fit.beta_hat = r_upper.solve(fit.q_thin.transpose() * data.y());
  fit.fitted = x * fit.beta_hat;
  fit.residuals = data.y() - fit.fitted;
  fit.leverage = fit.q_thin.rowwise().squaredNorm();

  Matrix r_inv = r_upper.solve(Matrix::Identity(k, k));
  fit.xtx_inverse = r_inv * r_inv.transpose();

  fit.scaled_sq_residuals.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slack = 1.0 - fit.leverage(i);
    if (slack <= OlsFit::kLeverageTolerance) {
      fit.scaled_sq_residuals(i) = std::numeric_limits<double>::quiet_NaN();
      fit.has_unit_leverage = true;
    } else {
      fit.scaled_sq_residuals(i) = fit.residuals(i) * fit.residuals(i) / slack;
    }
  }
  return fit;
}

HatMatrix hat_matrix(const OlsFit& fit) {
  return HatMatrix{fit.q_thin * fit.q_thin.transpose()};
}

HatMatrix hat_matrix(const Dataset& data) { return hat_matrix(fit_ols(data)); }

void check_test_design(const OlsFit& fit, const Matrix& x_test) {
  if (x_test.cols() != fit.model_k) {
    std::ostringstream msg;
    msg << "test design has " << x_test.cols() << " columns, model has "
        << fit.model_k;
    throw DimensionMismatch(msg.str());
  }
  if (!x_test.allFinite()) {
    throw DimensionMismatch("test design contains non-finite entries");
  }
}

Matrix test_coordinates(const OlsFit& fit, const Matrix& x_test) {
  check_test_design(fit, x_test);
  // R' c = x' for each test row x.
  return fit.r_factor.transpose().triangularView<Eigen::Lower>().solve(
      x_test.transpose());
}

OosHatMatrix oos_hat_matrix(const OlsFit& fit, const Matrix& x_test) {
  const Matrix coords = test_coordinates(fit, x_test);
  return OosHatMatrix{coords.transpose() * fit.q_thin.transpose()};
}

Vector predict(const OlsFit& fit, const Matrix& x_test) {
  check_test_design(fit, x_test);
  return x_test * fit.beta_hat;
}

}  // namespace oosmse::linalg
