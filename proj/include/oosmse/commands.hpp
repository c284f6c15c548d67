#pragma once

// Command implementations behind the oosmse executable. Each returns the
// process exit code and writes progress and errors to `log`, so tests can
// drive them without spawning a process.

#include "oosmse/aggregate.hpp"
#include "oosmse/data_io.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace oosmse::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigInvalid = 2,   // schema or validation error; nothing was run
  kCellsFailed = 3,     // the run finished but some cells or k values failed
  kDataError = 4,       // missing files, unparseable data, degenerate split, bad store
  kOracleMismatch = 5,
};

struct SimulateOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;  // overrides every config's seed
  unsigned threads = 1;
  std::filesystem::path out_dir = "results";
};

int cmd_simulate(const SimulateOptions& options, std::ostream& log);

struct DiagnoseOptions {
  io::DiagnoseJob job;
  std::filesystem::path out_dir = ".";
};

/// One row of diagnose.csv. Values are NaN when status is not "ok".
struct DiagnoseRow {
  int k = 0;
  Eigen::Index model_k = 0;
  Eigen::Index n_train = 0;
  Eigen::Index m_test = 0;
  double train_mse = 0.0;
  double press_over_n = 0.0;
  double proposed_mse = 0.0;
  std::optional<double> test_mse;
  std::size_t negative_projection_count = 0;
  std::string status = "ok";
  std::string message;
};

struct DiagnoseCase {
  int k = 0;
  Eigen::Index case_id = 0;
  double oos_leverage = 0.0;
  double projected_sq_error = 0.0;
  std::optional<double> actual_sq_error;
};

struct DiagnoseReport {
  bool has_test_outcomes = false;
  std::vector<DiagnoseRow> rows;
  std::vector<DiagnoseCase> cases;

  std::size_t failed() const noexcept;
};

/// Model k uses the intercept (unless disabled) and the first k predictors
/// in the order given. Throws DegenerateSplit when the training part cannot
/// support even the smallest requested model.
DiagnoseReport run_diagnose(const io::DiagnoseJob& job);

/// Writes diagnose.csv and diagnose_cases.csv. The test_mse and
/// actual_sq_error columns are present only with test outcomes.
void write_diagnose_report(const std::filesystem::path& dir, const DiagnoseReport& report);

int cmd_diagnose(const DiagnoseOptions& options, std::ostream& log);

struct AggregateCommandOptions {
  std::filesystem::path store_dir;
  std::optional<std::filesystem::path> out_dir;  // defaults to store_dir
  report::AggregateOptions report;
};

int cmd_aggregate(const AggregateCommandOptions& options, std::ostream& log);

int cmd_oracle_check(int trials, std::uint64_t seed, std::ostream& log);

struct GenerateOptions {
  std::filesystem::path config;
  std::string config_id;  // empty selects the only config
  int iteration = 0;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
};

/// Writes one simulated iteration as train.csv and test.csv (outcome y,
/// predictors x1..xp in decreasing-SD order), ready for diagnose.
int cmd_generate(const GenerateOptions& options, std::ostream& log);

}  // namespace oosmse::cli
