#pragma once

// Reduces a result store to the report tables: error curves by model size,
// MAPE grids, leverage densities, leverage-binned errors, and a per-config
// summary.

#include "oosmse/simulation.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace oosmse::report {

struct AggregateOptions {
  /// Width of the leverage bins on [0, 1]; one open bin collects > 1.
  double bin_width = 0.1;
  double density_bin_width = 0.05;
  /// Density bins cover [0, density_max); larger values share one bin.
  double density_max = 3.0;
  /// MAPE skips cells whose actual MSE is below this.
  double mape_floor = 1e-12;
};

/// Mean with its count and Monte Carlo standard error (sd / sqrt(count)).
/// mean is NaN for an empty set; se is 0 for fewer than two values.
struct MeanStat {
  std::size_t count = 0;
  double mean = 0.0;
  double se = 0.0;
};

struct CurveRow {
  std::string config_id;
  int k = 0;
  MeanStat train_mse;
  MeanStat test_mse;
  MeanStat press_over_n;
  MeanStat proposed_mse;
};

struct MapeRow {
  std::string config_id;
  long n_train = 0;
  int k = 0;
  std::string estimator;  // "proposed" or "press_over_n"
  MeanStat mape;
  std::size_t excluded = 0;
};

struct DensityRow {
  std::string config_id;
  int k = 0;
  std::string sample;  // "train" or "test"
  double lower = 0.0;
  double upper = 0.0;  // +inf for the overflow bin
  std::size_t count = 0;
  double density = 0.0;  // count / (total * width); the overflow bin reports share
};

/// Test cases are binned by out-of-sample leverage, training cases by
/// in-sample leverage. press is the mean squared jackknife residual of the
/// training cases in the bin; it has no cases in the "> 1.0" bin.
struct LeverageBinRow {
  std::string config_id;
  std::string label;
  double lower = 0.0;
  double upper = 0.0;
  bool overflow = false;
  MeanStat actual;
  MeanStat proposed;
  MeanStat press;
};

struct SummaryRow {
  std::string config_id;
  std::string error_process;
  std::size_t n_true_predictors = 0;
  long n_train = 0;
  std::string design;
  // Means over every (iteration, k) result row.
  MeanStat train_mse;
  MeanStat test_mse;
  MeanStat press_over_n;
  MeanStat proposed_mse;
  // Pooled over the recorded test cases.
  MeanStat case_actual;
  MeanStat case_proposed;
  double leverage_gt1_share = 0.0;
  MeanStat leverage_gt1_actual;
  MeanStat leverage_gt1_proposed;
  std::size_t negative_projection_count = 0;
  double negative_projection_share = 0.0;
  std::size_t failures = 0;
};

struct AggregateReport {
  std::vector<CurveRow> curves;
  std::vector<MapeRow> mape;
  std::vector<DensityRow> leverage_density;
  std::vector<LeverageBinRow> leverage_bins;
  std::vector<SummaryRow> summary;
};

/// Pure fold over the store: records are put in canonical (iteration, k,
/// case) order first, so any row permutation gives identical output.
/// Throws EmptyStore if the store holds no result rows.
AggregateReport aggregate(const sim::ResultStore& store,
                          const AggregateOptions& options = {});

/// Writes curves.csv, mape.csv, leverage_density.csv, leverage_bins.csv
/// and summary.csv into `dir`.
void write_report(const std::filesystem::path& dir, const AggregateReport& report);

}  // namespace oosmse::report
