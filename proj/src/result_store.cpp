#include "oosmse/result_store.hpp"

#include "oosmse/data_io.hpp"
#include "oosmse/error.hpp"

#include <fstream>
#include <sstream>

namespace oosmse::io {

using nlohmann::json;

namespace {

std::filesystem::path file_for(const std::filesystem::path& dir, const std::string& id,
                               const char* suffix) {
  return dir / (id + suffix);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileNotFound("cannot write '" + path.string() + "'");
  f << text;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

template <typename Fn>
void read_rows(const std::filesystem::path& path, const char* header, std::size_t fields,
               Fn&& on_row) {
  std::ifstream in(path);
  if (!in) throw SchemaMismatch("store file missing: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw SchemaMismatch("unexpected header in " + path.string());
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::vector<std::string> f = split_line(line, ',');
    if (f.size() != fields) {
      std::ostringstream msg;
      msg << path.string() << " row " << row << ": expected " << fields << " fields";
      throw SchemaMismatch(msg.str());
    }
    try {
      on_row(f, row);
    } catch (const ParseError& e) {
      throw SchemaMismatch(path.string() + ": " + e.what());
    }
  }
}

int parse_int(const std::string& s, std::size_t row, std::size_t col) {
  const double v = parse_double(s, row, col);
  return static_cast<int>(v);
}

}  // namespace

json make_manifest(const sim::ResultStore& store) {
  json configs = json::array();
  for (const auto& c : store.configs) configs.push_back(to_json(c.config));
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["library_version"] = kLibraryVersion;
  manifest["rng"] = store.rng_algorithm;
  manifest["config_hash"] = config_hash(configs);
  manifest["configs"] = configs;
  json counts = json::array();
  for (const auto& c : store.configs) {
    counts.push_back({{"id", c.config.id},
                      {"results", c.results.size()},
                      {"cases", c.cases.size()},
                      {"train_cases", c.train_cases.size()},
                      {"failures", c.failures.size()}});
  }
  manifest["row_counts"] = counts;
  return manifest;
}

void write_result_store(const std::filesystem::path& dir, const sim::ResultStore& store) {
  std::filesystem::create_directories(dir);
  for (const auto& c : store.configs) {
    const std::string& id = c.config.id;
    std::string out = std::string(kResultsHeader) + "\n";
    for (const auto& r : c.results) {
      out += id + ',' + std::to_string(r.iteration) + ',' + std::to_string(r.k) + ',' +
             format_double(r.train_mse) + ',' + format_double(r.test_mse) + ',' +
             format_double(r.press_over_n) + ',' + format_double(r.proposed_mse) + '\n';
    }
    write_text(file_for(dir, id, ".results.csv"), out);

    out = std::string(kCasesHeader) + "\n";
    for (const auto& r : c.cases) {
      out += id + ',' + std::to_string(r.iteration) + ',' + std::to_string(r.k) + ',' +
             std::to_string(r.case_id) + ',' + format_double(r.oos_leverage) + ',' +
             format_double(r.projected_sq_error) + ',' + format_double(r.actual_sq_error) +
             '\n';
    }
    write_text(file_for(dir, id, ".cases.csv"), out);

    out = std::string(kTrainCasesHeader) + "\n";
    for (const auto& r : c.train_cases) {
      out += id + ',' + std::to_string(r.iteration) + ',' + std::to_string(r.k) + ',' +
             std::to_string(r.case_id) + ',' + format_double(r.leverage) + ',' +
             format_double(r.press_sq_error) + '\n';
    }
    write_text(file_for(dir, id, ".train_cases.csv"), out);

    out = std::string(kFailuresHeader) + "\n";
    for (const auto& f : c.failures) {
      out += id + ',' + std::to_string(f.iteration) + ',' + std::to_string(f.k) + ',' +
             csv_quote(f.message) + '\n';
    }
    write_text(file_for(dir, id, ".failures.csv"), out);
  }
  write_text(dir / "manifest.json", make_manifest(store).dump(2) + "\n");
}

sim::ResultStore read_result_store(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw EmptyStore("no manifest.json in '" + dir.string() + "'");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaMismatch(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.contains("schema_version") || manifest["schema_version"] != kSchemaVersion) {
    throw SchemaMismatch("manifest schema_version missing or unsupported");
  }
  if (!manifest.contains("configs") || !manifest["configs"].is_array()) {
    throw SchemaMismatch("manifest has no configs list");
  }

  sim::ResultStore store;
  store.rng_algorithm = manifest.value("rng", std::string());
  for (const auto& entry : manifest["configs"]) {
    sim::ConfigResults c{sim_config_from_json(entry), {}, {}, {}, {}};
    const std::string& id = c.config.id;
    auto check_id = [&](const std::string& got, std::size_t row) {
      if (got != id) {
        throw SchemaMismatch("row " + std::to_string(row) + " belongs to config '" + got +
                             "', expected '" + id + "'");
      }
    };
    read_rows(file_for(dir, id, ".results.csv"), kResultsHeader, 7,
                    [&](const std::vector<std::string>& f, std::size_t row) {
                      check_id(f[0], row);
                      c.results.push_back({parse_int(f[1], row, 2), parse_int(f[2], row, 3),
                                           parse_double(f[3], row, 4), parse_double(f[4], row, 5),
                                           parse_double(f[5], row, 6), parse_double(f[6], row, 7)});
                    });
    read_rows(file_for(dir, id, ".cases.csv"), kCasesHeader, 7,
                    [&](const std::vector<std::string>& f, std::size_t row) {
                      check_id(f[0], row);
                      c.cases.push_back({parse_int(f[1], row, 2), parse_int(f[2], row, 3),
                                         parse_int(f[3], row, 4), parse_double(f[4], row, 5),
                                         parse_double(f[5], row, 6), parse_double(f[6], row, 7)});
                    });
    read_rows(file_for(dir, id, ".train_cases.csv"), kTrainCasesHeader, 6,
                    [&](const std::vector<std::string>& f, std::size_t row) {
                      check_id(f[0], row);
                      c.train_cases.push_back({parse_int(f[1], row, 2), parse_int(f[2], row, 3),
                                               parse_int(f[3], row, 4), parse_double(f[4], row, 5),
                                               parse_double(f[5], row, 6)});
                    });
    read_rows(file_for(dir, id, ".failures.csv"), kFailuresHeader, 4,
                    [&](const std::vector<std::string>& f, std::size_t row) {
                      check_id(f[0], row);
                      c.failures.push_back({parse_int(f[1], row, 2), parse_int(f[2], row, 3), f[3]});
                    });
    store.configs.push_back(std::move(c));
  }
  return store;
}

}  // namespace oosmse::io
