#include "oosmse/simulation.hpp"

#include "oosmse/diagnostics.hpp"
#include "oosmse/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace oosmse::sim {

const char* to_string(ErrorProcess p) noexcept {
  switch (p) {
    case ErrorProcess::kHomoskedastic:
      return "homoskedastic";
    case ErrorProcess::kHeteroskedastic:
      return "heteroskedastic";
  }
  return "unknown";
}

const char* to_string(HeteroskedasticForm f) noexcept {
  switch (f) {
    case HeteroskedasticForm::kProductOfNormals:
      return "product_of_normals";
    case HeteroskedasticForm::kMeanSquare:
      return "mean_square";
  }
  return "unknown";
}

const char* to_string(PredictorDesign d) noexcept {
  switch (d) {
    case PredictorDesign::kNonStochastic:
      return "nonstochastic";
    case PredictorDesign::kStochastic:
      return "stochastic";
  }
  return "unknown";
}

double beta_for_unit_variance(std::span<const double> predictor_sds,
                              double residual_sd_scale) {
  double total = residual_sd_scale * residual_sd_scale;
  for (double sd : predictor_sds) total += sd * sd;
  return 1.0 / std::sqrt(total);
}

double beta_for_unit_variance(const TrueProcess& process) {
  return beta_for_unit_variance(process.predictor_sds, process.residual_sd_scale);
}

TrueProcess TrueProcess::descending(std::size_t n_true, ErrorProcess process,
                                    double residual_sd_scale) {
  TrueProcess p;
  p.predictor_sds.resize(n_true);
  for (std::size_t s = 0; s < n_true; ++s) {
    p.predictor_sds[s] = static_cast<double>(n_true - s);
  }
  p.residual_sd_scale = residual_sd_scale;
  p.error_process = process;
  p.beta_true = beta_for_unit_variance(p);
  return p;
}

std::vector<Eigen::Index> predictor_order(const TrueProcess& process) {
  std::vector<Eigen::Index> order(process.n_true_predictors());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return process.predictor_sds[static_cast<std::size_t>(a)] >
           process.predictor_sds[static_cast<std::size_t>(b)];
  });
  return order;
}

Vector residual_variances(const TrueProcess& process, const Matrix& x) {
  const double base = process.residual_sd() * process.residual_sd();
  Vector sigma2 = Vector::Constant(x.rows(), base);
  if (process.error_process == ErrorProcess::kHeteroskedastic &&
      process.n_true_predictors() > 0) {
    const auto p = static_cast<Eigen::Index>(process.n_true_predictors());
    const bool product = process.hetero_form == HeteroskedasticForm::kProductOfNormals;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (Eigen::Index s = 0; s < p; ++s) {
        const double z = x(i, s) / process.predictor_sds[static_cast<std::size_t>(s)];
        sum += z;
        sum_sq += z * z;
      }
      sigma2(i) = base * (product ? sum * sum : sum_sq) / static_cast<double>(p);
    }
  }
  return sigma2;
}

namespace {

double systematic_part(const TrueProcess& process, const Matrix& x, Eigen::Index i) {
  return process.intercept_true + process.beta_true * x.row(i).sum();
}

}  // namespace

Outcomes draw_outcomes(const TrueProcess& process, const Matrix& x,
                       rng::RandomStream& stream) {
  Outcomes out{Vector(x.rows()), residual_variances(process, x)};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.y(i) = systematic_part(process, x, i) +
               std::sqrt(out.sigma2(i)) * stream.normal();
  }
  return out;
}

Sample generate_sample(const TrueProcess& process, Eigen::Index n,
                       rng::RandomStream& stream) {
  const auto p = static_cast<Eigen::Index>(process.n_true_predictors());
  Sample sample{Matrix(n, p), Vector(n), Vector()};
  std::vector<double> z(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index s = 0; s < p; ++s) {
      sample.x(i, s) = process.predictor_sds[static_cast<std::size_t>(s)] * stream.normal();
    }
    z[static_cast<std::size_t>(i)] = stream.normal();
  }
  sample.sigma2 = residual_variances(process, sample.x);
  for (Eigen::Index i = 0; i < n; ++i) {
    sample.y(i) = systematic_part(process, sample.x, i) +
                  std::sqrt(sample.sigma2(i)) * z[static_cast<std::size_t>(i)];
  }
  return sample;
}

void SimConfig::validate() const {
  auto fail = [&](const std::string& key, const std::string& what) {
    throw ConfigError("config '" + id + "': " + what, key);
  };
  if (id.empty()) fail("id", "id must be non-empty");
  if (id.find_first_of("/\\ \t\n,") != std::string::npos) {
    fail("id", "id may not contain path separators, whitespace or commas");
  }
  if (process.predictor_sds.empty()) fail("n_true_predictors", "need at least one true predictor");
  for (double sd : process.predictor_sds) {
    if (!(sd > 0.0) || !std::isfinite(sd)) fail("predictor_sds", "SDs must be positive");
  }
  if (!(process.residual_sd_scale >= 0.0)) {
    fail("residual_sd_scale", "residual scale must be nonnegative");
  }
  if (n_train < 3) fail("n_train", "n_train must be at least 3");
  if (design == PredictorDesign::kStochastic && m_test < 1) {
    fail("m_test", "m_test must be positive");
  }
  if (iterations < 0) fail("iterations", "iterations must be nonnegative");
  if (case_sample < 0) fail("case_sample", "case_sample must be nonnegative");
  for (int k : k_sweep) {
    if (k < 1) fail("k_sweep", "model sizes start at 1");
    if (k > n_train - 2) {
      std::ostringstream msg;
      msg << "k = " << k << " exceeds n_train - 2 = " << n_train - 2;
      fail("k_sweep", msg.str());
    }
    if (static_cast<std::size_t>(k) > process.n_true_predictors()) {
      fail("k_sweep", "k exceeds the number of true predictors");
    }
  }
}

IterationData iteration_data(const SimConfig& config, int iteration) {
  const auto stream_id = static_cast<std::uint32_t>(iteration);
  rng::RandomStream train_stream(config.base_seed, stream_id, 0);
  rng::RandomStream test_stream(config.base_seed, stream_id, 1);

  const TrueProcess& process = config.process;
  Sample train = generate_sample(process, config.n_train, train_stream);

  Matrix x_test_raw;
  Vector y_test;
  if (config.design == PredictorDesign::kNonStochastic) {
    x_test_raw = train.x;
    y_test = draw_outcomes(process, train.x, test_stream).y;
  } else {
    Sample test = generate_sample(process, config.m_test, test_stream);
    x_test_raw = std::move(test.x);
    y_test = std::move(test.y);
  }

  // Intercept followed by predictors in decreasing-variance order, so the
  // model with k predictors is the leading k + 1 columns.
  const std::vector<Eigen::Index> order = predictor_order(process);
  auto ordered_design = [&](const Matrix& raw) {
    Matrix d(raw.rows(), raw.cols() + 1);
    d.col(0).setOnes();
    for (std::size_t s = 0; s < order.size(); ++s) {
      d.col(static_cast<Eigen::Index>(s) + 1) = raw.col(order[s]);
    }
    return d;
  };
  return IterationData{ordered_design(train.x), std::move(train.y), ordered_design(x_test_raw),
                       std::move(y_test)};
}

IterationOutput run_iteration(const SimConfig& config, int iteration) {
  IterationOutput out;
  if (config.k_sweep.empty()) return out;

  const IterationData d = iteration_data(config, iteration);
  const Matrix& train_design = d.train_design;
  const Matrix& test_design = d.test_design;
  const Vector& y_test = d.test_y;

  const Eigen::Index test_records =
      std::min<Eigen::Index>(config.case_sample, test_design.rows());
  const Eigen::Index train_records =
      std::min<Eigen::Index>(config.case_sample, train_design.rows());

  for (int k : config.k_sweep) {
    try {
      const linalg::Dataset data(train_design.leftCols(k + 1), d.train_y);
      const Matrix x_test = test_design.leftCols(k + 1);
      const diagnostics::ModelEvaluation eval =
          diagnostics::evaluate_model(data, x_test, y_test);

      out.results.push_back({iteration, k, eval.train_mse, *eval.test_mse,
                             eval.press_over_n, eval.projection.projected_mse});
      for (Eigen::Index j = 0; j < test_records; ++j) {
        out.cases.push_back({iteration, k, static_cast<int>(j),
                             eval.projection.oos_leverage(j),
                             eval.projection.per_case_projected_sq_error(j),
                             (*eval.actual_sq_error)(j)});
      }
      for (Eigen::Index i = 0; i < train_records; ++i) {
        const double jk = eval.jackknife(i);
        out.train_cases.push_back(
            {iteration, k, static_cast<int>(i), eval.fit.leverage(i), jk * jk});
      }
    } catch (const Error& e) {
      out.failures.push_back({iteration, k, e.what()});
    }
  }
  return out;
}

std::size_t ResultStore::failure_count() const noexcept {
  std::size_t total = 0;
  for (const auto& c : configs) total += c.failures.size();
  return total;
}

ResultStore run_grid(std::span<const SimConfig> configs, unsigned threads) {
  struct Task {
    std::size_t config;
    int iteration;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (int it = 0; it < configs[c].iterations; ++it) tasks.push_back({c, it});
  }

  std::vector<IterationOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) {
      const Task& task = tasks[t];
      try {
        outputs[t] = run_iteration(configs[task.config], task.iteration);
      } catch (const std::exception& e) {
        outputs[t].failures.push_back({task.iteration, -1, e.what()});
      }
    }
  };
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ResultStore store;
  store.configs.reserve(configs.size());
  for (const auto& cfg : configs) store.configs.push_back({cfg, {}, {}, {}, {}});
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    ConfigResults& dst = store.configs[tasks[t].config];
    IterationOutput& src = outputs[t];
    auto append = [](auto& to, auto& from) {
      to.insert(to.end(), std::make_move_iterator(from.begin()),
                std::make_move_iterator(from.end()));
    };
    append(dst.results, src.results);
    append(dst.cases, src.cases);
    append(dst.train_cases, src.train_cases);
    append(dst.failures, src.failures);
  }
  return store;
}

}  // namespace oosmse::sim
