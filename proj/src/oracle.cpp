#include "oosmse/oracle.hpp"

#include "oosmse/diagnostics.hpp"
#include "oosmse/error.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace oosmse::oracle {

namespace {

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.values) m = std::max(m, std::abs(v));
  return m;
}

DenseMatrix transpose_times(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.rows; ++r) s += a.at(r, i) * b.at(r, j);
      out.at(i, j) = s;
    }
  return out;
}

DenseMatrix times(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.cols; ++r) s += a.at(i, r) * b.at(r, j);
      out.at(i, j) = s;
    }
  return out;
}

DenseMatrix times_transpose(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.cols; ++r) s += a.at(i, r) * b.at(j, r);
      out.at(i, j) = s;
    }
  return out;
}

std::vector<double> to_vector(const linalg::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

DenseMatrix from_eigen(const linalg::Matrix& m) {
  DenseMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j)
      out.at(i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

std::vector<double> solve(DenseMatrix a, std::vector<double> b, double tolerance) {
  const std::size_t n = a.rows;
  if (a.cols != n || b.size() != n) throw DimensionMismatch("solve: shape mismatch");
  const double scale = max_abs(a);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
    if (!(std::abs(a.at(pivot, col)) > tolerance * scale)) {
      throw RankDeficient("oracle: singular normal equations",
                          std::numeric_limits<double>::infinity());
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a.at(col, j), a.at(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a.at(r, col) / a.at(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a.at(ii, j) * x[j];
    x[ii] = s / a.at(ii, ii);
  }
  return x;
}

DenseMatrix invert(DenseMatrix a, double tolerance) {
  const std::size_t n = a.rows;
  if (a.cols != n) throw DimensionMismatch("invert: matrix not square");
  const double scale = max_abs(a);
  DenseMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) inv.at(i, i) = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
    if (!(std::abs(a.at(pivot, col)) > tolerance * scale)) {
      throw RankDeficient("oracle: singular matrix",
                          std::numeric_limits<double>::infinity());
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a.at(col, j), a.at(pivot, j));
        std::swap(inv.at(col, j), inv.at(pivot, j));
      }
    }
    const double d = a.at(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a.at(col, j) /= d;
      inv.at(col, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a.at(r, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a.at(r, j) -= f * a.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

std::vector<double> normal_equations_beta(const DenseMatrix& x,
                                          const std::vector<double>& y) {
  if (y.size() != x.rows) throw DimensionMismatch("oracle: outcome length mismatch");
  const DenseMatrix xtx = transpose_times(x, x);
  std::vector<double> xty(x.cols, 0.0);
  for (std::size_t j = 0; j < x.cols; ++j)
    for (std::size_t r = 0; r < x.rows; ++r) xty[j] += x.at(r, j) * y[r];
  return solve(xtx, std::move(xty));
}

double loo_residual_bruteforce(const linalg::Dataset& data, std::size_t i) {
  const DenseMatrix x = from_eigen(data.x());
  const std::vector<double> y = to_vector(data.y());
  if (i >= x.rows) throw DimensionMismatch("oracle: row index out of range");
  if (x.rows - 1 < x.cols) {
    throw RankDeficient("oracle: too few rows after dropping one",
                        std::numeric_limits<double>::infinity());
  }
  DenseMatrix reduced(x.rows - 1, x.cols);
  std::vector<double> y_reduced;
  y_reduced.reserve(x.rows - 1);
  for (std::size_t r = 0, out = 0; r < x.rows; ++r) {
    if (r == i) continue;
    for (std::size_t j = 0; j < x.cols; ++j) reduced.at(out, j) = x.at(r, j);
    y_reduced.push_back(y[r]);
    ++out;
  }
  const std::vector<double> beta = normal_equations_beta(reduced, y_reduced);
  double forecast = 0.0;
  for (std::size_t j = 0; j < x.cols; ++j) forecast += x.at(i, j) * beta[j];
  return y[i] - forecast;
}

double press_bruteforce(const linalg::Dataset& data) {
  double total = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(data.rows()); ++i) {
    const double r = loo_residual_bruteforce(data, i);
    total += r * r;
  }
  return total;
}

DenseMatrix naive_oos_hat_matrix(const linalg::Dataset& data,
                                 const linalg::Matrix& x_test) {
  const DenseMatrix x = from_eigen(data.x());
  if (static_cast<std::size_t>(x_test.cols()) != x.cols) {
    throw DimensionMismatch("oracle: test design column mismatch");
  }
  const DenseMatrix xtx_inv = invert(transpose_times(x, x));
  return times_transpose(times(from_eigen(x_test), xtx_inv), x);
}

DenseMatrix naive_hat_matrix(const linalg::Dataset& data) {
  return naive_oos_hat_matrix(data, data.x());
}

std::vector<double> naive_scaled_sq_residuals(const linalg::Dataset& data) {
  const DenseMatrix x = from_eigen(data.x());
  const std::vector<double> y = to_vector(data.y());
  const std::vector<double> beta = normal_equations_beta(x, y);
  const DenseMatrix h = naive_hat_matrix(data);
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double fitted = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) fitted += x.at(i, j) * beta[j];
    const double e = y[i] - fitted;
    out[i] = e * e / (1.0 - h.at(i, i));
  }
  return out;
}

ExpectedSqErrorSums expected_sq_error_sums(const linalg::HatMatrix& h,
                                           const linalg::Vector& sigma2) {
  if (h.h.rows() != sigma2.size()) {
    throw DimensionMismatch("oracle: variance vector length mismatch");
  }
  ExpectedSqErrorSums sums;
  for (Eigen::Index i = 0; i < sigma2.size(); ++i) {
    const double hi = h.h(i, i);
    sums.in_sample += (1.0 - hi) * sigma2(i);
    sums.out_sample += (1.0 + hi) * sigma2(i);
  }
  return sums;
}

std::vector<double> projected_sq_errors_direct(const DenseMatrix& ho,
                                               const std::vector<double>& e_star) {
  if (e_star.size() != ho.cols) throw DimensionMismatch("oracle: e_star length mismatch");
  std::vector<double> out(ho.rows, 0.0);
  for (std::size_t j = 0; j < ho.rows; ++j)
    for (std::size_t i = 0; i < ho.cols; ++i) {
      const double w = ho.at(j, i);
      out[j] += (w + w * w) * e_star[i];
    }
  return out;
}

namespace {

int uniform_int(rng::RandomStream& stream, int lo, int hi) {
  const auto span = static_cast<std::uint32_t>(hi - lo + 1);
  return lo + static_cast<int>(stream.next_u32() % span);
}

double rel(double got, double want) {
  const double diff = std::abs(got - want);
  return want == 0.0 ? diff : diff / std::abs(want);
}

}  // namespace

RandomCase random_case(rng::RandomStream& stream, int max_n, int max_k,
                       double collinearity) {
  const int k = uniform_int(stream, 1, max_k);
  const int n = uniform_int(stream, k + 2, std::max(k + 2, max_n));
  const int m = uniform_int(stream, 1, 20);
  std::vector<double> scale(static_cast<std::size_t>(k));
  for (int j = 1; j < k; ++j) scale[static_cast<std::size_t>(j)] = std::exp(2.0 * stream.normal());

  auto draw = [&](int rows, double spread) {
    linalg::Matrix x(rows, k);
    for (int i = 0; i < rows; ++i) {
      x(i, 0) = 1.0;
      for (int j = 1; j < k; ++j) {
        x(i, j) = scale[static_cast<std::size_t>(j)] * (spread * stream.normal() + 0.3);
      }
      if (k > 2 && collinearity > 0.0) {
        const double s1 = scale[1];
        const double sk = scale[static_cast<std::size_t>(k - 1)];
        x(i, k - 1) = collinearity * x(i, 1) / s1 * sk + (1.0 - collinearity) * x(i, k - 1);
      }
    }
    return x;
  };
  linalg::Matrix x = draw(n, 1.0);
  linalg::Vector y(n);
  for (int i = 0; i < n; ++i) {
    double mean = 0.0;
    for (int j = 0; j < k; ++j) mean += 0.5 * x(i, j) / (j == 0 ? 1.0 : scale[static_cast<std::size_t>(j)]);
    y(i) = mean + stream.normal();
  }
  return RandomCase{linalg::Dataset(std::move(x), std::move(y)), draw(m, 1.5)};
}

CheckSummary run_check(int trials, std::uint64_t seed) {
  CheckSummary s;
  rng::RandomStream stream(seed, 0x4f52434cu);
  for (int t = 0; t < trials; ++t) {
    const RandomCase rc = random_case(stream);
    const linalg::Dataset& data = rc.train;
    try {
      const linalg::OlsFit fit = linalg::fit_ols(data);
      const auto n = static_cast<std::size_t>(data.rows());

      const double fast_press = diagnostics::press(fit);
      const double slow_press = press_bruteforce(data);
      s.press_rel = std::max(s.press_rel, rel(fast_press, slow_press));

      const linalg::Vector jk = diagnostics::jackknife_residuals(fit);
      for (std::size_t i = 0; i < n; ++i) {
        s.jackknife_rel = std::max(
            s.jackknife_rel, rel(jk(static_cast<Eigen::Index>(i)), loo_residual_bruteforce(data, i)));
      }

      const diagnostics::OosProjection same = diagnostics::project_oos(fit, data.x());
      s.reduction_rel = std::max(s.reduction_rel,
                                 rel(same.projected_mse, diagnostics::mse_nonstochastic(fit)));
      s.reduction_leverage = std::max(
          s.reduction_leverage, (same.oos_leverage - fit.leverage).cwiseAbs().maxCoeff());

      const DenseMatrix naive = naive_hat_matrix(data);
      const linalg::HatMatrix h = linalg::hat_matrix(fit);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          s.hat_abs = std::max(s.hat_abs, std::abs(naive.at(i, j) -
                                                   h.h(static_cast<Eigen::Index>(i),
                                                       static_cast<Eigen::Index>(j))));

      const diagnostics::OosProjection proj = diagnostics::project_oos(fit, rc.x_test);
      const std::vector<double> direct = projected_sq_errors_direct(
          naive_oos_hat_matrix(data, rc.x_test), naive_scaled_sq_residuals(data));
      double scale = 0.0;
      for (double v : direct) scale = std::max(scale, std::abs(v));
      for (std::size_t j = 0; j < direct.size(); ++j) {
        const double diff = std::abs(proj.per_case_projected_sq_error(static_cast<Eigen::Index>(j)) - direct[j]);
        s.projection_rel = std::max(s.projection_rel, scale > 0.0 ? diff / scale : diff);
      }
      ++s.trials;
    } catch (const RankDeficient&) {
      ++s.skipped;
    }
  }
  return s;
}

}  // namespace oosmse::oracle
