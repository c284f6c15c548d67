#include "oosmse/diagnostics.hpp"

#include "oosmse/error.hpp"

#include <algorithm>
#include <sstream>

namespace oosmse::diagnostics {

void require_leverage_below_one(const OlsFit& fit) {
  for (Eigen::Index i = 0; i < fit.leverage.size(); ++i) {
    const double h = fit.leverage(i);
    if (h >= 1.0 - OlsFit::kLeverageTolerance) {
      std::ostringstream msg;
      msg << "training row " << i << " has leverage " << h
          << "; jackknife rescaling undefined";
      throw LeverageAtOne(msg.str(), static_cast<std::size_t>(i), h);
    }
  }
}

Vector jackknife_residuals(const OlsFit& fit) {
  require_leverage_below_one(fit);
  return fit.residuals.array() / (1.0 - fit.leverage.array());
}

double press(const OlsFit& fit) { return jackknife_residuals(fit).squaredNorm(); }

double mse_nonstochastic(const OlsFit& fit) {
  require_leverage_below_one(fit);
  const auto h = fit.leverage.array();
  const auto e2 = fit.residuals.array().square();
  return ((1.0 + h) / (1.0 - h) * e2).sum() / static_cast<double>(fit.training_n);
}

Vector scaled_sq_residuals(const OlsFit& fit) {
  require_leverage_below_one(fit);
  return fit.scaled_sq_residuals;
}

double training_mse(const OlsFit& fit) {
  return fit.residuals.squaredNorm() / static_cast<double>(fit.training_n);
}

VarianceModel fit_variance_model(const OlsFit& fit, const Dataset& data) {
  if (data.rows() != fit.training_n || data.cols() != fit.model_k) {
    throw DimensionMismatch("variance model data does not match the fit");
  }
  const Vector target = scaled_sq_residuals(fit);
  VarianceModel model;
  model.gamma_hat = fit.r_factor.triangularView<Eigen::Upper>().solve(
      fit.q_thin.transpose() * target);
  model.fitted_train_variance = data.x() * model.gamma_hat;
  return model;
}

Vector oos_leverage(const OosHatMatrix& ho) { return ho.ho.rowwise().squaredNorm(); }

namespace {

void project_factored(const OlsFit& fit, const Matrix& x_test,
                      OosProjection& out) {
  const Matrix coords = linalg::test_coordinates(fit, x_test);
  const Vector& e_star = fit.scaled_sq_residuals;
  const Vector weighted_sum = fit.q_thin.transpose() * e_star;
  const Matrix sandwich =
      fit.q_thin.transpose() * (e_star.asDiagonal() * fit.q_thin);
  const Matrix sandwich_coords = sandwich * coords;

  const Eigen::Index m = x_test.rows();
  out.per_case_projected_sq_error.resize(m);
  out.oos_leverage.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto c = coords.col(j);
    out.oos_leverage(j) = c.squaredNorm();
    // Forecast residual variance plus coefficient-imprecision term.
    out.per_case_projected_sq_error(j) =
        c.dot(weighted_sum) + c.dot(sandwich_coords.col(j));
  }
}

void project_hat_rows(const OlsFit& fit, const Matrix& x_test,
                      Eigen::Index block_rows, OosProjection& out) {
  linalg::check_test_design(fit, x_test);
  const Eigen::Index m = x_test.rows();
  const Eigen::Index n = fit.training_n;
  const Vector& e_star = fit.scaled_sq_residuals;
  const Eigen::Index block = std::max<Eigen::Index>(1, block_rows);
  out.per_case_projected_sq_error.resize(m);
  out.oos_leverage.resize(m);
  for (Eigen::Index start = 0; start < m; start += block) {
    const Eigen::Index rows = std::min(block, m - start);
    const Matrix ho =
        linalg::oos_hat_matrix(fit, x_test.middleRows(start, rows)).ho;
    for (Eigen::Index r = 0; r < rows; ++r) {
      double projected = 0.0;
      double leverage = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = ho(r, i);
        projected += (w + w * w) * e_star(i);
        leverage += w * w;
      }
      out.per_case_projected_sq_error(start + r) = projected;
      out.oos_leverage(start + r) = leverage;
    }
  }
}

}  // namespace

OosProjection project_oos(const OlsFit& fit, const Matrix& x_test,
                          const ProjectionOptions& options) {
  require_leverage_below_one(fit);
  OosProjection out;
  switch (options.method) {
    case ProjectionMethod::kFactored:
      project_factored(fit, x_test, out);
      break;
    case ProjectionMethod::kHatRows:
      project_hat_rows(fit, x_test, options.block_rows, out);
      break;
  }

  auto& per_case = out.per_case_projected_sq_error;
  out.negative_projection_count = static_cast<std::size_t>(
      (per_case.array() < 0.0).count());
  if (options.clamp_negative) per_case = per_case.cwiseMax(0.0);
  out.projected_mse =
      per_case.size() > 0 ? per_case.sum() / static_cast<double>(per_case.size())
                          : 0.0;
  return out;
}

double actual_test_mse(const OlsFit& fit, const Matrix& x_test,
                       const Vector& y_test) {
  if (y_test.size() != x_test.rows()) {
    throw DimensionMismatch("test outcome length does not match test design");
  }
  if (y_test.size() == 0) throw DimensionMismatch("empty test set");
  const Vector sq = (y_test - linalg::predict(fit, x_test)).array().square();
  return sq.sum() / static_cast<double>(sq.size());
}

ModelEvaluation evaluate_model(const Dataset& train, const Matrix& x_test,
                               const std::optional<Vector>& y_test,
                               const ProjectionOptions& options) {
  ModelEvaluation eval{linalg::fit_ols(train), 0.0, 0.0, {}, {}, {}, std::nullopt, std::nullopt};
  const OlsFit& fit = eval.fit;
  eval.train_mse = training_mse(fit);
  eval.jackknife = jackknife_residuals(fit);
  eval.press_over_n =
      eval.jackknife.squaredNorm() / static_cast<double>(fit.training_n);
  eval.projection = project_oos(fit, x_test, options);
  eval.predictions = linalg::predict(fit, x_test);
  if (y_test) {
    if (y_test->size() != x_test.rows()) {
      throw DimensionMismatch("test outcome length does not match test design");
    }
    Vector sq = (*y_test - eval.predictions).array().square();
    eval.test_mse = sq.size() > 0 ? sq.sum() / static_cast<double>(sq.size()) : 0.0;
    eval.actual_sq_error = std::move(sq);
  }
  return eval;
}

}  // namespace oosmse::diagnostics
