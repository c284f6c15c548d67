#pragma once

// Delimited-text datasets, train/test splitting, and run-config parsing.

#include "oosmse/linalg.hpp"
#include "oosmse/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace oosmse::io {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Strict full-field parse; throws ParseError(row, column) on failure.
double parse_double(std::string_view text, std::size_t row, std::size_t column);

/// Split one line on `delimiter`. Double-quoted fields may contain the
/// delimiter; "" inside quotes is a literal quote.
std::vector<std::string> split_line(std::string_view line, char delimiter);

struct DatasetSpec {
  std::filesystem::path path;
  std::string outcome_column;
  /// Ordered predictor names; empty means every non-outcome column in file
  /// order.
  std::vector<std::string> predictor_columns;
  bool add_intercept = false;
  char delimiter = ',';
};

/// Predictors plus the outcome when the file has it.
struct LoadedTable {
  linalg::Matrix x;
  std::optional<linalg::Vector> y;
  std::vector<std::string> predictor_names;
};

/// Reads the predictors named by `spec`. When the outcome column is absent
/// and `require_outcome` is false, y is left empty.
LoadedTable load_table(const DatasetSpec& spec, bool require_outcome);

linalg::Dataset load_dataset(const DatasetSpec& spec);

/// Writes outcome then predictors (intercept column omitted) at full
/// round-trip precision.
void write_dataset(const std::filesystem::path& path, const linalg::Dataset& data,
                   const std::string& outcome_name = "y", char delimiter = ',');

/// Independent per-row Bernoulli(train_fraction) assignment. Throws
/// DegenerateSplit when the training part has fewer than min_train rows or
/// the test part is empty.
std::pair<linalg::Dataset, linalg::Dataset> split_train_test(
    const linalg::Dataset& data, double train_fraction, std::uint64_t seed,
    Eigen::Index min_train = 2);

struct SimulationJob {
  std::vector<sim::SimConfig> configs;
};

struct DiagnoseJob {
  DatasetSpec train;
  std::optional<DatasetSpec> test;
  std::optional<double> split_fraction;
  std::vector<int> k_sweep;
  bool intercept = true;
  std::uint64_t seed = 0;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::variant<SimulationJob, DiagnoseJob> job;
};

/// Validates the document (unknown keys rejected, ConfigError names the
/// JSON path) and expands list-valued simulation fields into one config
/// per combination.
RunConfig parse_run_config(const nlohmann::json& doc);

RunConfig load_run_config(const std::filesystem::path& path);

/// JSON description of a simulation config, as stored in run manifests.
nlohmann::json to_json(const sim::SimConfig& config);

/// Inverse of to_json; the input must be a manifest entry.
sim::SimConfig sim_config_from_json(const nlohmann::json& entry);

/// "fnv1a64:<hex>" of the compact JSON dump.
std::string config_hash(const nlohmann::json& doc);

}  // namespace oosmse::io
