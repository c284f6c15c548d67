#include "oosmse/data_io.hpp"

#include "oosmse/error.hpp"
#include "oosmse/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <system_error>
#include <unordered_map>

namespace oosmse::io {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

double parse_double(std::string_view text, std::size_t row, std::size_t column) {
  std::string_view t = trim(text);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  if (t.empty()) {
    std::ostringstream msg;
    msg << "row " << row << ", column " << column << ": missing numeric value";
    throw ParseError(msg.str(), row, column);
  }
  double value = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    std::ostringstream msg;
    msg << "row " << row << ", column " << column << ": cannot parse '" << text
        << "' as a number";
    throw ParseError(msg.str(), row, column);
  }
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "row " << row << ", column " << column << ": non-finite value '" << text
        << "'";
    throw NonFiniteValue(msg.str());
  }
  return value;
}

std::vector<std::string> split_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

LoadedTable load_table(const DatasetSpec& spec, bool require_outcome) {
  std::ifstream in(spec.path);
  if (!in) throw FileNotFound("cannot open dataset '" + spec.path.string() + "'");

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw EmptyDataset("dataset '" + spec.path.string() + "' has no header row");
  }
  std::vector<std::string> header = split_line(line, spec.delimiter);
  for (auto& h : header) h = std::string(trim(h));

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!index.emplace(header[c], c).second) {
      throw ParseError("duplicate column '" + header[c] + "' in header", 0, c + 1);
    }
  }

  std::optional<std::size_t> outcome_col;
  if (auto it = index.find(spec.outcome_column); it != index.end()) {
    outcome_col = it->second;
  } else if (require_outcome) {
    throw ParseError("outcome column '" + spec.outcome_column + "' not in header", 0, 0);
  }

  std::vector<std::size_t> predictor_cols;
  std::vector<std::string> names;
  if (spec.predictor_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == spec.outcome_column) continue;
      predictor_cols.push_back(c);
      names.push_back(header[c]);
    }
  } else {
    for (const auto& name : spec.predictor_columns) {
      if (name == spec.outcome_column) {
        throw ParseError("outcome column '" + name + "' listed as a predictor", 0, 0);
      }
      auto it = index.find(name);
      if (it == index.end()) {
        throw ParseError("predictor column '" + name + "' not in header", 0, 0);
      }
      predictor_cols.push_back(it->second);
      names.push_back(name);
    }
  }

  std::vector<double> x_values;
  std::vector<double> y_values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> fields = split_line(line, spec.delimiter);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << row << ": expected " << header.size() << " fields, found "
          << fields.size();
      throw ParseError(msg.str(), row, std::min(fields.size(), header.size()) + 1);
    }
    for (std::size_t c : predictor_cols) x_values.push_back(parse_double(fields[c], row, c + 1));
    if (outcome_col) y_values.push_back(parse_double(fields[*outcome_col], row, *outcome_col + 1));
  }
  if (row == 0) throw EmptyDataset("dataset '" + spec.path.string() + "' has no data rows");

  const auto n = static_cast<Eigen::Index>(row);
  const auto k = static_cast<Eigen::Index>(predictor_cols.size());
  LoadedTable table;
  table.x.resize(n, k + (spec.add_intercept ? 1 : 0));
  Eigen::Index offset = 0;
  if (spec.add_intercept) {
    table.x.col(0).setOnes();
    table.predictor_names.emplace_back(linalg::kInterceptName);
    offset = 1;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      table.x(i, j + offset) = x_values[static_cast<std::size_t>(i * k + j)];
  table.predictor_names.insert(table.predictor_names.end(), names.begin(), names.end());
  if (outcome_col) {
    table.y = Eigen::Map<const linalg::Vector>(y_values.data(), n);
  }
  return table;
}

linalg::Dataset load_dataset(const DatasetSpec& spec) {
  LoadedTable t = load_table(spec, true);
  if (t.x.cols() == 0) throw EmptyDataset("dataset has no predictor columns");
  return linalg::Dataset(std::move(t.x), std::move(*t.y), std::move(t.predictor_names));
}

void write_dataset(const std::filesystem::path& path, const linalg::Dataset& data,
                   const std::string& outcome_name, char delimiter) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (data.column_names()[static_cast<std::size_t>(j)] != linalg::kInterceptName) {
      cols.push_back(j);
    }
  }
  std::string out = outcome_name;
  for (Eigen::Index j : cols) {
    out += delimiter;
    out += data.column_names()[static_cast<std::size_t>(j)];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    out += format_double(data.y()(i));
    for (Eigen::Index j : cols) {
      out += delimiter;
      out += format_double(data.x()(i, j));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileNotFound("cannot write '" + path.string() + "'");
  f << out;
}

std::pair<linalg::Dataset, linalg::Dataset> split_train_test(
    const linalg::Dataset& data, double train_fraction, std::uint64_t seed,
    Eigen::Index min_train) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DegenerateSplit("train fraction must lie strictly between 0 and 1");
  }
  constexpr std::uint32_t kSplitStream = 0x53504c54u;
  rng::RandomStream stream(seed, kSplitStream);
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    (stream.uniform() < train_fraction ? train_rows : test_rows).push_back(i);
  }
  if (static_cast<Eigen::Index>(train_rows.size()) < std::max<Eigen::Index>(min_train, 2) ||
      test_rows.empty()) {
    std::ostringstream msg;
    msg << "split produced " << train_rows.size() << " training and "
        << test_rows.size() << " test rows";
    throw DegenerateSplit(msg.str());
  }
  return {data.select_rows(train_rows), data.select_rows(test_rows)};
}

// ---------------------------------------------------------------------------
// Run configs

namespace {

[[noreturn]] void config_fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what, key);
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail(path.empty() ? "(root)" : path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!keys.contains(key)) {
      config_fail(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

std::string join_key(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

template <typename T>
T get_number(const json& obj, const std::string& path, const char* key) {
  const json& v = obj.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) config_fail(join_key(path, key), "expected a number");
  } else {
    if (!v.is_number_integer()) config_fail(join_key(path, key), "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        config_fail(join_key(path, key), "expected a nonnegative integer");
      }
    }
  }
  return v.get<T>();
}

std::string get_string(const json& obj, const std::string& path, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_string()) config_fail(join_key(path, key), "expected a string");
  return v.get<std::string>();
}

template <typename T, typename Fn>
std::vector<T> one_or_many(const json& obj, const std::string& path, const char* key,
                           Fn convert) {
  const json& v = obj.at(key);
  std::vector<T> out;
  if (v.is_array()) {
    if (v.empty()) config_fail(join_key(path, key), "list must be non-empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(convert(v[i], join_key(path, key) + "[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(convert(v, join_key(path, key)));
  }
  return out;
}

sim::ErrorProcess parse_error_process(const json& v, const std::string& key) {
  if (v == "homoskedastic") return sim::ErrorProcess::kHomoskedastic;
  if (v == "heteroskedastic") return sim::ErrorProcess::kHeteroskedastic;
  config_fail(key, "expected 'homoskedastic' or 'heteroskedastic'");
}

sim::PredictorDesign parse_design(const json& v, const std::string& key) {
  if (v == "stochastic") return sim::PredictorDesign::kStochastic;
  if (v == "nonstochastic") return sim::PredictorDesign::kNonStochastic;
  config_fail(key, "expected 'stochastic' or 'nonstochastic'");
}

sim::HeteroskedasticForm parse_hetero_form(const json& v, const std::string& key) {
  if (v == "product_of_normals") return sim::HeteroskedasticForm::kProductOfNormals;
  if (v == "mean_square") return sim::HeteroskedasticForm::kMeanSquare;
  config_fail(key, "expected 'product_of_normals' or 'mean_square'");
}

std::vector<int> parse_k_sweep(const json& v, const std::string& key) {
  std::vector<int> ks;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) {
        config_fail(key + "[" + std::to_string(i) + "]", "expected an integer");
      }
      ks.push_back(v[i].get<int>());
    }
    return ks;
  }
  reject_unknown(v, key, {"from", "to", "step"});
  for (const char* req : {"from", "to"}) {
    if (!v.contains(req)) config_fail(key + "." + req, "missing required key");
  }
  const int from = get_number<int>(v, key, "from");
  const int to = get_number<int>(v, key, "to");
  const int step = v.contains("step") ? get_number<int>(v, key, "step") : 1;
  if (step < 1) config_fail(key + ".step", "step must be positive");
  for (int k = from; k <= to; k += step) ks.push_back(k);
  return ks;
}

std::string auto_id(const sim::SimConfig& c) {
  const bool hetero = c.process.error_process == sim::ErrorProcess::kHeteroskedastic;
  std::ostringstream id;
  id << (hetero ? "hetero" : "homo") << "_p" << c.process.n_true_predictors() << "_n"
     << c.n_train << "_"
     << (c.design == sim::PredictorDesign::kStochastic ? "stoch" : "nonstoch");
  return id.str();
}

std::vector<sim::SimConfig> parse_sim_entry(const json& entry, const std::string& path,
                                            std::optional<std::uint64_t> default_seed) {
  reject_unknown(entry, path,
                 {"id", "n_true_predictors", "predictor_sds", "residual_sd_scale",
                  "error_process", "hetero_form", "n_train", "m_test", "design",
                  "k_sweep", "iterations", "seed", "case_sample"});
  for (const char* req : {"n_train", "iterations"}) {
    if (!entry.contains(req)) config_fail(join_key(path, req), "missing required key");
  }

  sim::TrueProcess base;
  const double scale = entry.contains("residual_sd_scale")
                           ? get_number<double>(entry, path, "residual_sd_scale")
                           : 150.0;
  if (entry.contains("predictor_sds")) {
    const json& sds = entry.at("predictor_sds");
    if (!sds.is_array() || sds.empty()) {
      config_fail(join_key(path, "predictor_sds"), "expected a non-empty list");
    }
    for (const auto& sd : sds) {
      if (!sd.is_number()) config_fail(join_key(path, "predictor_sds"), "expected numbers");
      base.predictor_sds.push_back(sd.get<double>());
    }
    if (entry.contains("n_true_predictors") &&
        get_number<std::size_t>(entry, path, "n_true_predictors") != base.predictor_sds.size()) {
      config_fail(join_key(path, "n_true_predictors"), "disagrees with predictor_sds length");
    }
    base.residual_sd_scale = scale;
    base.beta_true = sim::beta_for_unit_variance(base);
  } else {
    const std::size_t p = entry.contains("n_true_predictors")
                              ? get_number<std::size_t>(entry, path, "n_true_predictors")
                              : 45;
    if (p < 1) config_fail(join_key(path, "n_true_predictors"), "must be positive");
    base = sim::TrueProcess::descending(p, sim::ErrorProcess::kHomoskedastic, scale);
  }
  if (entry.contains("hetero_form")) {
    base.hetero_form = parse_hetero_form(entry.at("hetero_form"), join_key(path, "hetero_form"));
  }

  auto processes = entry.contains("error_process")
                       ? one_or_many<sim::ErrorProcess>(entry, path, "error_process",
                                                        parse_error_process)
                       : std::vector<sim::ErrorProcess>{sim::ErrorProcess::kHomoskedastic};
  auto designs = entry.contains("design")
                     ? one_or_many<sim::PredictorDesign>(entry, path, "design", parse_design)
                     : std::vector<sim::PredictorDesign>{sim::PredictorDesign::kStochastic};
  auto n_trains = one_or_many<Eigen::Index>(
      entry, path, "n_train", [](const json& v, const std::string& key) -> Eigen::Index {
        if (!v.is_number_integer()) config_fail(key, "expected an integer");
        return v.get<Eigen::Index>();
      });

  std::optional<std::vector<int>> k_sweep;
  if (entry.contains("k_sweep")) k_sweep = parse_k_sweep(entry.at("k_sweep"), join_key(path, "k_sweep"));

  const bool expands = processes.size() * designs.size() * n_trains.size() > 1;
  std::vector<sim::SimConfig> out;
  for (auto process : processes)
    for (Eigen::Index n_train : n_trains)
      for (auto design : designs) {
        sim::SimConfig c;
        c.process = base;
        c.process.error_process = process;
        c.n_train = n_train;
        c.design = design;
        c.m_test = entry.contains("m_test") ? get_number<Eigen::Index>(entry, path, "m_test") : 2000;
        c.iterations = get_number<int>(entry, path, "iterations");
        c.case_sample = entry.contains("case_sample") ? get_number<int>(entry, path, "case_sample") : 200;
        if (entry.contains("seed")) {
          c.base_seed = get_number<std::uint64_t>(entry, path, "seed");
        } else {
          c.base_seed = default_seed.value_or(0);
        }
        if (k_sweep) {
          c.k_sweep = *k_sweep;
        } else {
          const auto k_max = std::min<Eigen::Index>(
              static_cast<Eigen::Index>(c.process.n_true_predictors()), n_train - 2);
          for (int k = 1; k <= k_max; ++k) c.k_sweep.push_back(k);
        }
        if (entry.contains("id")) {
          const std::string id = get_string(entry, path, "id");
          c.id = expands ? id + "_" + auto_id(c) : id;
        } else {
          c.id = auto_id(c);
        }
        try {
          c.validate();
        } catch (const ConfigError& e) {
          config_fail(join_key(path, e.key().c_str()), e.what());
        }
        out.push_back(std::move(c));
      }
  return out;
}

DatasetSpec parse_dataset_spec(const json& v, const std::string& path) {
  reject_unknown(v, path, {"path", "outcome", "predictors", "delimiter"});
  for (const char* req : {"path", "outcome"}) {
    if (!v.contains(req)) config_fail(join_key(path, req), "missing required key");
  }
  DatasetSpec spec;
  spec.path = get_string(v, path, "path");
  spec.outcome_column = get_string(v, path, "outcome");
  if (v.contains("predictors")) {
    const json& p = v.at("predictors");
    if (!p.is_array()) config_fail(join_key(path, "predictors"), "expected a list of names");
    for (const auto& name : p) {
      if (!name.is_string()) config_fail(join_key(path, "predictors"), "expected strings");
      spec.predictor_columns.push_back(name.get<std::string>());
    }
  }
  if (v.contains("delimiter")) {
    const std::string d = get_string(v, path, "delimiter");
    if (d.size() != 1) config_fail(join_key(path, "delimiter"), "expected one character");
    spec.delimiter = d[0];
  }
  return spec;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) config_fail("(root)", "expected an object");
  if (!doc.contains("schema_version")) config_fail("schema_version", "missing required key");
  RunConfig rc;
  rc.schema_version = get_number<int>(doc, "", "schema_version");
  if (rc.schema_version != kSchemaVersion) {
    config_fail("schema_version", "unsupported version " + std::to_string(rc.schema_version));
  }
  if (!doc.contains("kind")) config_fail("kind", "missing required key");
  const std::string kind = get_string(doc, "", "kind");

  if (kind == "simulate") {
    reject_unknown(doc, "", {"schema_version", "kind", "seed", "configs"});
    if (!doc.contains("configs") || !doc.at("configs").is_array()) {
      config_fail("configs", "expected a list of configs");
    }
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed")) seed = get_number<std::uint64_t>(doc, "", "seed");
    SimulationJob job;
    std::set<std::string> ids;
    const json& configs = doc.at("configs");
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const std::string path = "configs[" + std::to_string(i) + "]";
      for (auto& c : parse_sim_entry(configs[i], path, seed)) {
        if (!ids.insert(c.id).second) config_fail(path + ".id", "duplicate config id '" + c.id + "'");
        job.configs.push_back(std::move(c));
      }
    }
    rc.job = std::move(job);
  } else if (kind == "diagnose") {
    reject_unknown(doc, "", {"schema_version", "kind", "train", "test", "split_fraction",
                             "k_max", "k_sweep", "intercept", "seed"});
    if (!doc.contains("train")) config_fail("train", "missing required key");
    DiagnoseJob job;
    job.train = parse_dataset_spec(doc.at("train"), "train");
    if (doc.contains("test")) job.test = parse_dataset_spec(doc.at("test"), "test");
    if (doc.contains("split_fraction")) {
      job.split_fraction = get_number<double>(doc, "", "split_fraction");
      if (!(*job.split_fraction > 0.0 && *job.split_fraction < 1.0)) {
        config_fail("split_fraction", "must lie strictly between 0 and 1");
      }
    }
    if (job.test && job.split_fraction) {
      config_fail("split_fraction", "give either test or split_fraction, not both");
    }
    if (doc.contains("k_sweep") && doc.contains("k_max")) {
      config_fail("k_sweep", "give either k_sweep or k_max, not both");
    }
    if (doc.contains("k_sweep")) {
      job.k_sweep = parse_k_sweep(doc.at("k_sweep"), "k_sweep");
    } else if (doc.contains("k_max")) {
      const int k_max = get_number<int>(doc, "", "k_max");
      for (int k = 1; k <= k_max; ++k) job.k_sweep.push_back(k);
    } else {
      config_fail("k_max", "missing required key");
    }
    for (int k : job.k_sweep) {
      if (k < 1) config_fail("k_sweep", "model sizes start at 1");
    }
    if (doc.contains("intercept")) {
      if (!doc.at("intercept").is_boolean()) config_fail("intercept", "expected a boolean");
      job.intercept = doc.at("intercept").get<bool>();
    }
    if (doc.contains("seed")) job.seed = get_number<std::uint64_t>(doc, "", "seed");
    rc.job = std::move(job);
  } else {
    config_fail("kind", "expected 'simulate' or 'diagnose'");
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "(root)");
  }
  return parse_run_config(doc);
}

json to_json(const sim::SimConfig& c) {
  json j;
  j["id"] = c.id;
  j["n_true_predictors"] = c.process.n_true_predictors();
  j["predictor_sds"] = c.process.predictor_sds;
  j["beta_true"] = c.process.beta_true;
  j["residual_sd_scale"] = c.process.residual_sd_scale;
  j["error_process"] = sim::to_string(c.process.error_process);
  j["hetero_form"] = sim::to_string(c.process.hetero_form);
  j["n_train"] = c.n_train;
  j["m_test"] = c.m_test;
  j["design"] = sim::to_string(c.design);
  j["k_sweep"] = c.k_sweep;
  j["iterations"] = c.iterations;
  j["seed"] = c.base_seed;
  j["case_sample"] = c.case_sample;
  return j;
}

sim::SimConfig sim_config_from_json(const json& j) {
  try {
    sim::SimConfig c;
    c.id = j.at("id").get<std::string>();
    c.process.predictor_sds = j.at("predictor_sds").get<std::vector<double>>();
    c.process.beta_true = j.at("beta_true").get<double>();
    c.process.residual_sd_scale = j.at("residual_sd_scale").get<double>();
    c.process.error_process = parse_error_process(j.at("error_process"), "error_process");
    c.process.hetero_form = parse_hetero_form(j.at("hetero_form"), "hetero_form");
    c.n_train = j.at("n_train").get<Eigen::Index>();
    c.m_test = j.at("m_test").get<Eigen::Index>();
    c.design = parse_design(j.at("design"), "design");
    c.k_sweep = j.at("k_sweep").get<std::vector<int>>();
    c.iterations = j.at("iterations").get<int>();
    c.base_seed = j.at("seed").get<std::uint64_t>();
    c.case_sample = j.at("case_sample").get<int>();
    return c;
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("manifest config entry malformed: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaMismatch(std::string("manifest config entry malformed: ") + e.what());
  }
}

std::string config_hash(const json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace oosmse::io
