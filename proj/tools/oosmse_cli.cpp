// oosmse: simulation grids, dataset diagnostics and report aggregation for
// out-of-sample MSE projection.

#include "oosmse/commands.hpp"
#include "oosmse/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> names;
  std::stringstream in(list);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) names.push_back(item);
  }
  return names;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace oosmse;

  CLI::App app{"Out-of-sample MSE projection for OLS models"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--threads", threads, "Worker threads (never changes results)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "Output directory");
  };

  // simulate
  std::string sim_config;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation grid into a result store");
  simulate->add_option("config", sim_config, "Run config (JSON)")->required();
  add_common(simulate);

  // diagnose
  std::string train_path, test_path, outcome, predictors, diag_config;
  std::optional<double> split;
  int k_max = 0;
  bool no_intercept = false;
  char delimiter = ',';
  auto* diagnose = app.add_subcommand("diagnose", "Projected out-of-sample MSE for a dataset");
  diagnose->add_option("--config", diag_config, "Diagnose run config (JSON)");
  diagnose->add_option("--train", train_path, "Training data");
  auto* test_opt = diagnose->add_option("--test", test_path, "Test design, outcome optional");
  diagnose->add_option("--split", split, "Training fraction for a random split")
      ->excludes(test_opt);
  diagnose->add_option("--outcome", outcome, "Outcome column");
  diagnose->add_option("--predictors", predictors, "Ordered predictor columns, comma separated");
  diagnose->add_option("--k-max", k_max, "Fit models with 1..K predictors");
  diagnose->add_flag("--no-intercept", no_intercept, "Fit without an intercept");
  diagnose->add_option("--delimiter", delimiter, "Field delimiter");
  add_common(diagnose);

  // aggregate
  std::string store_dir;
  report::AggregateOptions agg;
  auto* aggregate = app.add_subcommand("aggregate", "Summarize a result store into report CSVs");
  aggregate->add_option("store", store_dir, "Result store directory")->required();
  aggregate->add_option("--bin-width", agg.bin_width, "Leverage bin width on [0, 1]")
      ->check(CLI::Range(1e-3, 1.0));
  aggregate->add_option("--density-bin-width", agg.density_bin_width, "Leverage density bin width")
      ->check(CLI::Range(1e-4, 10.0));
  aggregate->add_option("--density-max", agg.density_max, "Upper end of the density bins")
      ->check(CLI::PositiveNumber);
  add_common(aggregate);

  // oracle-check (not listed in help)
  int trials = 1000;
  auto* oracle_check = app.add_subcommand("oracle-check", "");
  oracle_check->group("");
  oracle_check->add_option("--trials", trials, "Random instances")->check(CLI::PositiveNumber);
  add_common(oracle_check);

  // generate (not listed in help)
  cli::GenerateOptions gen;
  std::string gen_config;
  auto* generate = app.add_subcommand("generate", "");
  generate->group("");
  generate->add_option("config", gen_config, "Run config (JSON)")->required();
  generate->add_option("--config-id", gen.config_id, "Config to draw from");
  generate->add_option("--iteration", gen.iteration, "Iteration to draw");
  add_common(generate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      cli::SimulateOptions o;
      o.config = sim_config;
      o.seed = seed;
      o.threads = threads;
      if (!out_dir.empty()) o.out_dir = out_dir;
      return cli::cmd_simulate(o, std::cerr);
    }
    if (diagnose->parsed()) {
      cli::DiagnoseOptions o;
      if (!diag_config.empty()) {
        io::RunConfig rc = io::load_run_config(diag_config);
        auto* job = std::get_if<io::DiagnoseJob>(&rc.job);
        if (job == nullptr) throw ConfigError("expected a config of kind 'diagnose'", "kind");
        o.job = std::move(*job);
      } else {
        if (train_path.empty() || outcome.empty() || k_max < 1) {
          std::cerr << "diagnose needs --train, --outcome and --k-max (or --config)\n";
          return cli::kConfigInvalid;
        }
        o.job.train.path = train_path;
        o.job.train.outcome_column = outcome;
        o.job.train.predictor_columns = split_names(predictors);
        o.job.train.delimiter = delimiter;
        if (!test_path.empty()) {
          io::DatasetSpec t = o.job.train;
          t.path = test_path;
          o.job.test = t;
        }
        o.job.split_fraction = split;
        for (int k = 1; k <= k_max; ++k) o.job.k_sweep.push_back(k);
        o.job.intercept = !no_intercept;
      }
      if (seed) o.job.seed = *seed;
      if (!out_dir.empty()) o.out_dir = out_dir;
      return cli::cmd_diagnose(o, std::cerr);
    }
    if (aggregate->parsed()) {
      cli::AggregateCommandOptions o;
      o.store_dir = store_dir;
      if (!out_dir.empty()) o.out_dir = out_dir;
      o.report = agg;
      return cli::cmd_aggregate(o, std::cerr);
    }
    if (oracle_check->parsed()) {
      return cli::cmd_oracle_check(trials, seed.value_or(1), std::cout);
    }
    if (generate->parsed()) {
      gen.config = gen_config;
      gen.seed = seed;
      if (!out_dir.empty()) gen.out_dir = out_dir;
      return cli::cmd_generate(gen, std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
    return cli::kConfigInvalid;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kDataError;
  }
  return cli::kUnexpected;
}
