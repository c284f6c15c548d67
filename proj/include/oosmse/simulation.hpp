#pragma once

// Synthetic data and the Monte Carlo experiment grid.
//
// The true model draws independent normal predictors with descending
// standard deviations, gives every predictor the same coefficient, and
// scales that coefficient so Var(y) = 1. Each iteration fits nested models
// on the k highest-variance predictors (plus an intercept) and scores every
// estimator against the realised test-sample error.

#include "oosmse/linalg.hpp"
#include "oosmse/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oosmse::sim {

using linalg::Matrix;
using linalg::Vector;

enum class ErrorProcess { kHomoskedastic, kHeteroskedastic };
enum class PredictorDesign {
  kNonStochastic,  // test design reuses the training X with fresh residuals
  kStochastic,     // test design is a fresh draw
};

/// How heteroskedastic residual variance depends on the predictors. Both
/// forms keep the unconditional residual variance at (scale * beta)^2.
enum class HeteroskedasticForm {
  /// eps = (scale * beta) * z * w with w = p^-1/2 sum_s x_s / sd_s, i.e. the
  /// product of two independent standard normals.
  kProductOfNormals,
  /// eps = (scale * beta) * z * sqrt(c) with c = p^-1 sum_s (x_s / sd_s)^2.
  kMeanSquare,
};

const char* to_string(ErrorProcess p) noexcept;
const char* to_string(HeteroskedasticForm f) noexcept;
const char* to_string(PredictorDesign d) noexcept;

/// Sum of squared SDs plus the squared residual scale, inverted and rooted.
double beta_for_unit_variance(std::span<const double> predictor_sds,
                              double residual_sd_scale);

struct TrueProcess {
  std::vector<double> predictor_sds;
  double beta_true = 0.0;
  double intercept_true = 0.0;
  /// Residual SD is residual_sd_scale * beta_true.
  double residual_sd_scale = 150.0;
  ErrorProcess error_process = ErrorProcess::kHomoskedastic;
  HeteroskedasticForm hetero_form = HeteroskedasticForm::kProductOfNormals;

  std::size_t n_true_predictors() const noexcept { return predictor_sds.size(); }
  double residual_sd() const noexcept { return residual_sd_scale * beta_true; }

  /// SDs n, n-1, ..., 1 with beta_true chosen for unit outcome variance.
  static TrueProcess descending(std::size_t n_true, ErrorProcess process,
                                double residual_sd_scale = 150.0);
};

double beta_for_unit_variance(const TrueProcess& process);

/// Column indices sorted by decreasing SD (ties keep original order).
std::vector<Eigen::Index> predictor_order(const TrueProcess& process);

struct Outcomes {
  Vector y;
  Vector sigma2;  // true residual variance of each row
};

struct Sample {
  Matrix x;  // one column per true predictor, no intercept
  Vector y;
  Vector sigma2;
};

/// Residual variance of each row given its predictors; see
/// HeteroskedasticForm.
Vector residual_variances(const TrueProcess& process, const Matrix& x);

/// Fresh residuals for a fixed design (one standard normal per row).
Outcomes draw_outcomes(const TrueProcess& process, const Matrix& x,
                       rng::RandomStream& stream);

/// Draws n rows: each row's predictors, then its residual.
Sample generate_sample(const TrueProcess& process, Eigen::Index n,
                       rng::RandomStream& stream);

struct SimConfig {
  std::string id;
  TrueProcess process;
  Eigen::Index n_train = 80;
  /// Ignored under kNonStochastic, where the test sample has n_train rows.
  Eigen::Index m_test = 2000;
  PredictorDesign design = PredictorDesign::kStochastic;
  std::vector<int> k_sweep;
  int iterations = 0;
  std::uint64_t base_seed = 0;
  /// Leading test (and training) cases per (iteration, k) kept as per-case
  /// records.
  int case_sample = 200;

  Eigen::Index test_rows() const noexcept {
    return design == PredictorDesign::kNonStochastic ? n_train : m_test;
  }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct IterationResult {
  int iteration = 0;
  int k = 0;  // predictors in the model, intercept not counted
  double train_mse = 0.0;
  double test_mse = 0.0;
  double press_over_n = 0.0;
  double proposed_mse = 0.0;
  bool operator==(const IterationResult&) const = default;
};

struct CaseRecord {
  int iteration = 0;
  int k = 0;
  int case_id = 0;
  double oos_leverage = 0.0;
  double projected_sq_error = 0.0;
  double actual_sq_error = 0.0;
  bool operator==(const CaseRecord&) const = default;
};

/// Training-side per-case record: in-sample leverage and the squared
/// jackknife residual (this case's contribution to PRESS).
struct TrainCaseRecord {
  int iteration = 0;
  int k = 0;
  int case_id = 0;
  double leverage = 0.0;
  double press_sq_error = 0.0;
  bool operator==(const TrainCaseRecord&) const = default;
};

struct CellFailure {
  int iteration = 0;
  int k = 0;
  std::string message;
  bool operator==(const CellFailure&) const = default;
};

struct IterationOutput {
  std::vector<IterationResult> results;
  std::vector<CaseRecord> cases;
  std::vector<TrainCaseRecord> train_cases;
  std::vector<CellFailure> failures;
};

/// One iteration's samples as design matrices: intercept column first, then
/// the true predictors in decreasing-SD order.
struct IterationData {
  Matrix train_design;
  Vector train_y;
  Matrix test_design;
  Vector test_y;
};

/// Training draw uses substream 0 of stream `iteration`, the test draw
/// substream 1, both keyed by base_seed.
IterationData iteration_data(const SimConfig& config, int iteration);

IterationOutput run_iteration(const SimConfig& config, int iteration);

struct ConfigResults {
  SimConfig config;
  std::vector<IterationResult> results;
  std::vector<CaseRecord> cases;
  std::vector<TrainCaseRecord> train_cases;
  std::vector<CellFailure> failures;
};

struct ResultStore {
  std::string rng_algorithm = rng::kAlgorithm;
  std::vector<ConfigResults> configs;

  std::size_t failure_count() const noexcept;
};

/// Runs every (config, iteration) cell on up to `threads` workers. Output
/// order and content do not depend on the thread count.
ResultStore run_grid(std::span<const SimConfig> configs, unsigned threads = 1);

}  // namespace oosmse::sim
