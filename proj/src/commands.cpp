#include "oosmse/commands.hpp"

#include "oosmse/diagnostics.hpp"
#include "oosmse/error.hpp"
#include "oosmse/oracle.hpp"
#include "oosmse/result_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

namespace oosmse::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int report_error(const std::exception& e, std::ostream& log) {
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    log << "config error [" << c->key() << "]: " << c->what() << '\n';
    return kConfigInvalid;
  }
  if (dynamic_cast<const Error*>(&e) != nullptr) {
    log << "error: " << e.what() << '\n';
    return kDataError;
  }
  log << "unexpected error: " << e.what() << '\n';
  return kUnexpected;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FileNotFound("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileNotFound("cannot write '" + path.string() + "'");
  f << text;
}

std::string num(double v) { return std::isnan(v) ? std::string() : io::format_double(v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

linalg::Matrix prepend_ones(const linalg::Matrix& x) {
  linalg::Matrix out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

std::vector<sim::SimConfig> simulation_configs(const std::filesystem::path& path,
                                               std::optional<std::uint64_t> seed) {
  io::RunConfig rc = io::load_run_config(path);
  auto* job = std::get_if<io::SimulationJob>(&rc.job);
  if (job == nullptr) throw ConfigError("expected a config of kind 'simulate'", "kind");
  for (auto& c : job->configs) {
    if (seed) c.base_seed = *seed;
    c.validate();
  }
  return std::move(job->configs);
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_simulate(const SimulateOptions& options, std::ostream& log) {
  try {
    const std::vector<sim::SimConfig> configs = simulation_configs(options.config, options.seed);
    const sim::ResultStore store = sim::run_grid(configs, options.threads);
    ensure_dir(options.out_dir);
    io::write_result_store(options.out_dir, store);

    std::size_t rows = 0;
    for (const auto& c : store.configs) rows += c.results.size();
    log << "simulated " << configs.size() << " config(s), " << rows << " result rows -> "
        << options.out_dir.string() << '\n';
    if (const std::size_t failed = store.failure_count(); failed > 0) {
      log << failed << " cell(s) failed; see *.failures.csv\n";
      return kCellsFailed;
    }
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, log);
  }
}

// ---------------------------------------------------------------------------

std::size_t DiagnoseReport::failed() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const DiagnoseRow& r) { return r.status != "ok"; }));
}

DiagnoseReport run_diagnose(const io::DiagnoseJob& job) {
  if (job.k_sweep.empty()) throw ConfigError("no model sizes requested", "k_max");

  linalg::Dataset full = io::load_dataset(job.train);
  std::optional<linalg::Dataset> train;
  linalg::Matrix x_test;
  std::optional<linalg::Vector> y_test;

  if (job.test) {
    io::DatasetSpec spec = *job.test;
    if (spec.predictor_columns.empty()) spec.predictor_columns = full.column_names();
    io::LoadedTable t = io::load_table(spec, false);
    x_test = std::move(t.x);
    y_test = std::move(t.y);
    train = std::move(full);
  } else if (job.split_fraction) {
    auto [tr, te] = io::split_train_test(full, *job.split_fraction, job.seed);
    x_test = te.x();
    y_test = te.y();
    train = std::move(tr);
  } else {
    // No test design: project onto the training design itself.
    x_test = full.x();
    y_test = full.y();
    train = std::move(full);
  }

  const Eigen::Index p = train->cols();
  const Eigen::Index offset = job.intercept ? 1 : 0;
  if (job.intercept) {
    train = train->with_intercept();
    x_test = prepend_ones(x_test);
  }
  const int k_min = *std::min_element(job.k_sweep.begin(), job.k_sweep.end());
  if (train->rows() <= k_min + offset) {
    throw DegenerateSplit("training set has " + std::to_string(train->rows()) +
                          " rows, too few for a model with " + std::to_string(k_min + offset) +
                          " coefficients");
  }

  DiagnoseReport report;
  report.has_test_outcomes = y_test.has_value();
  for (int k : job.k_sweep) {
    DiagnoseRow row;
    row.k = k;
    row.model_k = k + offset;
    row.n_train = train->rows();
    row.m_test = x_test.rows();
    row.train_mse = row.press_over_n = row.proposed_mse = kNaN;
    if (report.has_test_outcomes) row.test_mse = kNaN;
    try {
      if (k > p) {
        throw DimensionMismatch("k = " + std::to_string(k) + " exceeds the " +
                                std::to_string(p) + " available predictors");
      }
      const std::vector<std::string> names(train->column_names().begin(),
                                           train->column_names().begin() + row.model_k);
      const linalg::Dataset data(train->x().leftCols(row.model_k), train->y(), names);
      const diagnostics::ModelEvaluation eval =
          diagnostics::evaluate_model(data, x_test.leftCols(row.model_k), y_test);
      row.train_mse = eval.train_mse;
      row.press_over_n = eval.press_over_n;
      row.proposed_mse = eval.projection.projected_mse;
      row.test_mse = eval.test_mse;
      row.negative_projection_count = eval.projection.negative_projection_count;
      for (Eigen::Index j = 0; j < x_test.rows(); ++j) {
        DiagnoseCase c{k, j, eval.projection.oos_leverage(j),
                       eval.projection.per_case_projected_sq_error(j), std::nullopt};
        if (eval.actual_sq_error) c.actual_sq_error = (*eval.actual_sq_error)(j);
        report.cases.push_back(c);
      }
    } catch (const RankDeficient& e) {
      row.status = "rank_deficient";
      row.message = e.what();
    } catch (const LeverageAtOne& e) {
      row.status = "leverage_at_one";
      row.message = e.what();
    } catch (const Error& e) {
      row.status = "error";
      row.message = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_diagnose_report(const std::filesystem::path& dir, const DiagnoseReport& report) {
  const bool actual = report.has_test_outcomes;
  std::string out = "k,model_k,n_train,m_test,train_mse,press_over_n,proposed_mse,";
  if (actual) out += "test_mse,";
  out += "negative_projection_count,status,message\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.k) + ',' + std::to_string(r.model_k) + ',' +
           std::to_string(r.n_train) + ',' + std::to_string(r.m_test) + ',' + num(r.train_mse) +
           ',' + num(r.press_over_n) + ',' + num(r.proposed_mse) + ',';
    if (actual) out += num(r.test_mse.value_or(kNaN)) + ',';
    out += std::to_string(r.negative_projection_count) + ',' + r.status + ',' +
           csv_field(r.message) + '\n';
  }
  write_text(dir / "diagnose.csv", out);

  out = "k,case_id,oos_leverage,projected_sq_error";
  out += actual ? ",actual_sq_error\n" : "\n";
  for (const auto& c : report.cases) {
    out += std::to_string(c.k) + ',' + std::to_string(c.case_id) + ',' + num(c.oos_leverage) +
           ',' + num(c.projected_sq_error);
    if (actual) out += ',' + num(c.actual_sq_error.value_or(kNaN));
    out += '\n';
  }
  write_text(dir / "diagnose_cases.csv", out);
}

int cmd_diagnose(const DiagnoseOptions& options, std::ostream& log) {
  try {
    const DiagnoseReport report = run_diagnose(options.job);
    ensure_dir(options.out_dir);
    write_diagnose_report(options.out_dir, report);
    for (const auto& r : report.rows) {
      if (r.status != "ok") log << "k = " << r.k << ": " << r.status << ": " << r.message << '\n';
    }
    log << "diagnosed " << report.rows.size() << " model size(s) -> "
        << options.out_dir.string() << '\n';
    return report.failed() > 0 ? kCellsFailed : kOk;
  } catch (const std::exception& e) {
    return report_error(e, log);
  }
}

// ---------------------------------------------------------------------------

int cmd_aggregate(const AggregateCommandOptions& options, std::ostream& log) {
  try {
    const sim::ResultStore store = io::read_result_store(options.store_dir);
    const report::AggregateReport rep = report::aggregate(store, options.report);
    const std::filesystem::path out = options.out_dir.value_or(options.store_dir);
    ensure_dir(out);
    report::write_report(out, rep);
    log << "aggregated " << store.configs.size() << " config(s) -> " << out.string() << '\n';
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, log);
  }
}

int cmd_oracle_check(int trials, std::uint64_t seed, std::ostream& log) {
  try {
    const oracle::CheckSummary s = oracle::run_check(trials, seed);
    log << "trials " << s.trials << " (skipped " << s.skipped << ")\n"
        << "press relative error      " << s.press_rel << '\n'
        << "jackknife relative error  " << s.jackknife_rel << '\n'
        << "reduction relative error  " << s.reduction_rel << '\n'
        << "reduction leverage error  " << s.reduction_leverage << '\n'
        << "hat matrix abs error      " << s.hat_abs << '\n'
        << "projection relative error " << s.projection_rel << '\n'
        << (s.passed() ? "oracle check passed\n" : "oracle check FAILED\n");
    return s.passed() ? kOk : kOracleMismatch;
  } catch (const std::exception& e) {
    return report_error(e, log);
  }
}

int cmd_generate(const GenerateOptions& options, std::ostream& log) {
  try {
    const std::vector<sim::SimConfig> configs = simulation_configs(options.config, options.seed);
    const sim::SimConfig* chosen = nullptr;
    if (options.config_id.empty()) {
      if (configs.size() != 1) {
        throw ConfigError("config defines several grids; pass --config-id", "configs");
      }
      chosen = &configs.front();
    } else {
      for (const auto& c : configs) {
        if (c.id == options.config_id) chosen = &c;
      }
      if (chosen == nullptr) throw ConfigError("no config with id '" + options.config_id + "'", "id");
    }
    if (options.iteration < 0) throw ConfigError("iteration must be nonnegative", "iteration");

    const sim::IterationData d = sim::iteration_data(*chosen, options.iteration);
    const Eigen::Index p = d.train_design.cols() - 1;
    std::vector<std::string> names;
    for (Eigen::Index j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
    ensure_dir(options.out_dir);
    io::write_dataset(options.out_dir / "train.csv",
                      linalg::Dataset(d.train_design.rightCols(p), d.train_y, names));
    io::write_dataset(options.out_dir / "test.csv",
                      linalg::Dataset(d.test_design.rightCols(p), d.test_y, names));
    log << "wrote iteration " << options.iteration << " of '" << chosen->id << "' -> "
        << options.out_dir.string() << '\n';
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, log);
  }
}

}  // namespace oosmse::cli
