#include "oosmse/commands.hpp"
#include "oosmse/diagnostics.hpp"
#include "oosmse/error.hpp"
#include "oosmse/result_store.hpp"
#include "support.hpp"

#include <sstream>

using namespace oosmse;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

namespace {

const char* kSmallConfig = R"({"schema_version": 1, "kind": "simulate", "seed": 3,
  "configs": [{"id": "s", "n_true_predictors": 8, "n_train": 25, "m_test": 60,
               "iterations": 6, "case_sample": 60}]})";

io::DiagnoseJob job_for(const std::filesystem::path& train, int k_max) {
  io::DiagnoseJob job;
  job.train = {train, "y", {}, false, ','};
  for (int k = 1; k <= k_max; ++k) job.k_sweep.push_back(k);
  return job;
}

}  // namespace

TEST_CASE("simulate writes a store and reruns are byte-identical") {
  TempDir dir("simulate");
  write_file(dir / "cfg.json", kSmallConfig);
  std::ostringstream log;
  cli::SimulateOptions o{dir / "cfg.json", std::nullopt, 1, dir / "a"};
  CHECK(cli::cmd_simulate(o, log) == cli::kOk);
  o.out_dir = dir / "b";
  o.threads = 4;
  CHECK(cli::cmd_simulate(o, log) == cli::kOk);
  for (const char* f : {"manifest.json", "s.results.csv", "s.cases.csv", "s.train_cases.csv", "s.failures.csv"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }
  const sim::ResultStore store = io::read_result_store(dir / "a");
  CHECK(store.configs[0].results.size() == 6 * 8);

  o.out_dir = dir / "c";
  o.seed = 4;
  CHECK(cli::cmd_simulate(o, log) == cli::kOk);
  CHECK(read_file(dir / "a" / "s.results.csv") != read_file(dir / "c" / "s.results.csv"));
}

TEST_CASE("simulate rejects bad configs before running") {
  TempDir dir("simulate_bad");
  std::ostringstream log;
  write_file(dir / "cfg.json", R"({"schema_version": 1, "kind": "simulate",
    "configs": [{"id": "s", "n_train": 25, "iterations": 2, "k_sweep": [1, 24]}]})");
  CHECK(cli::cmd_simulate({dir / "cfg.json", std::nullopt, 1, dir / "out"}, log) == cli::kConfigInvalid);
  CHECK(log.str().find("configs[0].k_sweep") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "out"));

  write_file(dir / "cfg.json", "{ not json");
  CHECK(cli::cmd_simulate({dir / "cfg.json", std::nullopt, 1, dir / "out"}, log) == cli::kConfigInvalid);
  CHECK(cli::cmd_simulate({dir / "nope.json", std::nullopt, 1, dir / "out"}, log) == cli::kDataError);
}

TEST_CASE("simulate reports failed cells with a distinct code") {
  TempDir dir("simulate_fail");
  // Two rows more than coefficients: unit leverage happens in some draws.
  write_file(dir / "cfg.json", R"({"schema_version": 1, "kind": "simulate", "seed": 1,
    "configs": [{"id": "t", "n_true_predictors": 3, "n_train": 5, "m_test": 5,
                 "iterations": 200, "k_sweep": [3], "residual_sd_scale": 0}]})");
  std::ostringstream log;
  const int rc = cli::cmd_simulate({dir / "cfg.json", std::nullopt, 1, dir / "out"}, log);
  const sim::ResultStore store = io::read_result_store(dir / "out");
  CHECK(rc == (store.failure_count() > 0 ? cli::kCellsFailed : cli::kOk));
}

TEST_CASE("diagnose on the training design reduces to the fixed-design estimator") {
  TempDir dir("diag_same");
  write_file(dir / "cfg.json", kSmallConfig);
  std::ostringstream log;
  REQUIRE(cli::cmd_generate({dir / "cfg.json", "", 0, std::nullopt, dir.path()}, log) == cli::kOk);

  io::DiagnoseJob job = job_for(dir / "train.csv", 8);
  job.test = job.train;  // explicit test = train
  const cli::DiagnoseReport rep = cli::run_diagnose(job);
  const linalg::Dataset train = io::load_dataset({dir / "train.csv", "y", {}, true, ','});
  for (const auto& row : rep.rows) {
    REQUIRE(row.status == "ok");
    const std::vector<std::string> names(train.column_names().begin(),
                                         train.column_names().begin() + row.model_k);
    const linalg::OlsFit fit =
        linalg::fit_ols(linalg::Dataset(train.x().leftCols(row.model_k), train.y(), names));
    CHECK(testing::rel_err(row.proposed_mse, diagnostics::mse_nonstochastic(fit)) < 1e-10);
    CHECK(*row.test_mse == doctest::Approx(row.train_mse).epsilon(1e-12));
  }
}

TEST_CASE("diagnose matches the simulator's own records bit for bit") {
  TempDir dir("diag_cross");
  write_file(dir / "cfg.json", kSmallConfig);
  std::ostringstream log;
  REQUIRE(cli::cmd_simulate({dir / "cfg.json", std::nullopt, 1, dir / "store"}, log) == cli::kOk);
  const sim::ResultStore store = io::read_result_store(dir / "store");
  const int iteration = 4;
  REQUIRE(cli::cmd_generate({dir / "cfg.json", "s", iteration, std::nullopt, dir.path()}, log) == cli::kOk);

  io::DiagnoseJob job = job_for(dir / "train.csv", 8);
  job.test = io::DatasetSpec{dir / "test.csv", "y", {}, false, ','};
  const cli::DiagnoseReport rep = cli::run_diagnose(job);
  REQUIRE(rep.failed() == 0);
  for (const auto& row : rep.rows) {
    const auto& want = store.configs[0].results[static_cast<std::size_t>(iteration * 8 + row.k - 1)];
    REQUIRE(want.k == row.k);
    CHECK(row.train_mse == want.train_mse);
    CHECK(*row.test_mse == want.test_mse);
    CHECK(row.press_over_n == want.press_over_n);
    CHECK(row.proposed_mse == want.proposed_mse);
  }
  std::size_t matched = 0;
  for (const auto& c : store.configs[0].cases) {
    if (c.iteration != iteration) continue;
    const auto& d = rep.cases[static_cast<std::size_t>((c.k - 1) * 60 + c.case_id)];
    CHECK(d.k == c.k);
    CHECK(d.oos_leverage == c.oos_leverage);
    CHECK(d.projected_sq_error == c.projected_sq_error);
    CHECK(*d.actual_sq_error == c.actual_sq_error);
    ++matched;
  }
  CHECK(matched == 8 * 60);
}

TEST_CASE("diagnose without test outcomes reports projections only") {
  TempDir dir("diag_noy");
  write_file(dir / "train.csv", "y,a,b\n1,0,1\n2,1,0\n4,2,2\n3,3,1\n6,4,3\n5,5,1\n");
  write_file(dir / "test.csv", "b,a\n1,7\n2,-1\n");
  io::DiagnoseJob job = job_for(dir / "train.csv", 2);
  job.test = io::DatasetSpec{dir / "test.csv", "y", {}, false, ','};
  std::ostringstream log;
  CHECK(cli::cmd_diagnose({job, dir / "out"}, log) == cli::kOk);
  const std::string summary = read_file(dir / "out" / "diagnose.csv");
  const std::string cases = read_file(dir / "out" / "diagnose_cases.csv");
  CHECK(summary.rfind("k,model_k,n_train,m_test,train_mse,press_over_n,proposed_mse,negative", 0) == 0);
  CHECK(summary.find("test_mse") == std::string::npos);
  CHECK(cases.rfind("k,case_id,oos_leverage,projected_sq_error\n", 0) == 0);
  CHECK(cases.find("actual") == std::string::npos);

  // Test columns are matched by name, not position.
  const cli::DiagnoseReport rep = cli::run_diagnose(job);
  const linalg::OlsFit fit = linalg::fit_ols(
      io::load_dataset({dir / "train.csv", "y", {"a"}, true, ','}));
  const linalg::Vector lev = diagnostics::oos_leverage(linalg::oos_hat_matrix(fit, testing::mat({{1, 7}, {1, -1}})));
  CHECK(rep.cases[0].oos_leverage == doctest::Approx(lev(0)).epsilon(1e-12));
  CHECK(rep.cases[1].oos_leverage == doctest::Approx(lev(1)).epsilon(1e-12));
}

TEST_CASE("diagnose keeps going past a failing model size") {
  TempDir dir("diag_fail");
  // c duplicates a, so the k = 3 model is rank deficient.
  write_file(dir / "train.csv", "y,a,b,c,d\n1,0,1,0,5\n2,1,0,1,3\n4,2,2,2,1\n3,3,1,3,0\n6,4,3,4,2\n5,5,1,5,9\n7,6,0,6,1\n");
  io::DiagnoseJob job = job_for(dir / "train.csv", 5);
  const cli::DiagnoseReport rep = cli::run_diagnose(job);
  REQUIRE(rep.rows.size() == 5);
  CHECK(rep.rows[0].status == "ok");
  CHECK(rep.rows[1].status == "ok");
  CHECK(rep.rows[2].status == "rank_deficient");
  CHECK(rep.rows[3].status == "rank_deficient");
  CHECK(rep.rows[4].status == "error");
  CHECK(std::isnan(rep.rows[2].proposed_mse));
  std::ostringstream log;
  CHECK(cli::cmd_diagnose({job, dir / "out"}, log) == cli::kCellsFailed);
  CHECK(log.str().find("k = 3") != std::string::npos);
}

TEST_CASE("diagnose with a random split") {
  TempDir dir("diag_split");
  write_file(dir / "cfg.json", kSmallConfig);
  std::ostringstream log;
  REQUIRE(cli::cmd_generate({dir / "cfg.json", "", 1, std::nullopt, dir.path()}, log) == cli::kOk);
  io::DiagnoseJob job = job_for(dir / "test.csv", 4);
  job.split_fraction = 0.5;
  job.seed = 8;
  const cli::DiagnoseReport a = cli::run_diagnose(job);
  const cli::DiagnoseReport b = cli::run_diagnose(job);
  CHECK(a.rows[0].n_train + a.rows[0].m_test == 60);
  CHECK(a.rows[3].proposed_mse == b.rows[3].proposed_mse);
  REQUIRE(a.has_test_outcomes);

  write_file(dir / "tiny.csv", "y,x\n1,2\n2,3\n3,5\n");
  io::DiagnoseJob tiny = job_for(dir / "tiny.csv", 1);
  tiny.split_fraction = 0.5;
  CHECK_THROWS_AS(cli::run_diagnose(tiny), DegenerateSplit);
  CHECK(cli::cmd_diagnose({tiny, dir / "out"}, log) == cli::kDataError);
}

TEST_CASE("aggregate command") {
  TempDir dir("aggregate");
  write_file(dir / "cfg.json", kSmallConfig);
  std::ostringstream log;
  REQUIRE(cli::cmd_simulate({dir / "cfg.json", std::nullopt, 2, dir / "store"}, log) == cli::kOk);
  cli::AggregateCommandOptions o;
  o.store_dir = dir / "store";
  CHECK(cli::cmd_aggregate(o, log) == cli::kOk);
  for (const char* f : {"curves.csv", "mape.csv", "leverage_density.csv", "leverage_bins.csv", "summary.csv"}) {
    CHECK(std::filesystem::exists(dir / "store" / f));
  }
  o.out_dir = dir / "elsewhere";
  o.report.bin_width = 0.25;
  CHECK(cli::cmd_aggregate(o, log) == cli::kOk);
  CHECK(read_file(dir / "elsewhere" / "leverage_bins.csv").find("[0.75,1.00]") != std::string::npos);

  o.store_dir = dir / "missing";
  CHECK(cli::cmd_aggregate(o, log) == cli::kDataError);
}

TEST_CASE("oracle check command") {
  std::ostringstream log;
  CHECK(cli::cmd_oracle_check(100, 2, log) == cli::kOk);
  CHECK(log.str().find("passed") != std::string::npos);
}
