#pragma once

// On-disk layout of a simulation result store:
//
//   manifest.json              schema_version, rng, config hash, configs
//   <id>.results.csv           config_id,iteration,k,train_mse,test_mse,press_over_n,proposed_mse
//   <id>.cases.csv             config_id,iteration,k,case_id,oos_leverage,projected_sq_error,actual_sq_error
//   <id>.train_cases.csv       config_id,iteration,k,case_id,leverage,press_sq_error
//   <id>.failures.csv          config_id,iteration,k,message
//
// Every number is written at shortest round-trip precision, and nothing
// run-dependent (time, host, thread count) is recorded, so equal stores
// produce equal bytes.

#include "oosmse/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace oosmse::io {

inline constexpr const char* kResultsHeader =
    "config_id,iteration,k,train_mse,test_mse,press_over_n,proposed_mse";
inline constexpr const char* kCasesHeader =
    "config_id,iteration,k,case_id,oos_leverage,projected_sq_error,actual_sq_error";
inline constexpr const char* kTrainCasesHeader =
    "config_id,iteration,k,case_id,leverage,press_sq_error";
inline constexpr const char* kFailuresHeader = "config_id,iteration,k,message";

nlohmann::json make_manifest(const sim::ResultStore& store);

void write_result_store(const std::filesystem::path& dir, const sim::ResultStore& store);

/// Throws EmptyStore when the directory has no manifest, SchemaMismatch
/// when a file's header or field count is wrong.
sim::ResultStore read_result_store(const std::filesystem::path& dir);

}  // namespace oosmse::io
