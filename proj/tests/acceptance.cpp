// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Desk-scale simulation runs take about a minute.

#include "oosmse/aggregate.hpp"
#include "oosmse/commands.hpp"
#include "oosmse/diagnostics.hpp"
#include "oosmse/oracle.hpp"
#include "oosmse/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace oosmse;

namespace {

constexpr std::uint64_t kSeed = 20240601;
int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

sim::SimConfig baseline(const std::string& id, sim::ErrorProcess process, Eigen::Index n_train,
                        int iterations = 200) {
  sim::SimConfig c;
  c.id = id;
  c.process = sim::TrueProcess::descending(45, process);
  c.n_train = n_train;
  c.m_test = 2000;
  c.design = sim::PredictorDesign::kStochastic;
  for (int k = 1; k <= 45; ++k) c.k_sweep.push_back(k);
  c.iterations = iterations;
  c.base_seed = kSeed;
  c.case_sample = 200;
  return c;
}

struct Run {
  sim::ResultStore store;
  report::AggregateReport report;
  const report::SummaryRow& summary() const { return report.summary.front(); }
};

Run run(const sim::SimConfig& config) {
  const std::vector<sim::SimConfig> configs{config};
  Run r{sim::run_grid(configs, threads()), {}};
  r.report = report::aggregate(r.store);
  return r;
}

bool within_rel(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::abs(want);
}

// 1-3 -----------------------------------------------------------------------

void oracle_criteria() {
  const oracle::CheckSummary s = oracle::run_check(1000, kSeed);
  const bool enough = s.trials == 1000 && s.skipped == 0;
  verdict(1, "jackknife identity", enough && s.press_rel < 1e-8 && s.jackknife_rel < 1e-8,
          std::to_string(s.trials) + " datasets; worst press rel " + fmt(s.press_rel) +
              ", worst jackknife rel " + fmt(s.jackknife_rel) + " (tol 1e-8)");
  verdict(2, "reduction identity",
          enough && s.reduction_rel < 1e-10 && s.reduction_leverage < 1e-10,
          std::to_string(s.trials) + " datasets; worst projection rel " + fmt(s.reduction_rel) +
              ", worst leverage diff " + fmt(s.reduction_leverage) + " (tol 1e-10)");

  rng::RandomStream stream(kSeed, 3);
  double sym = 0, idem = 0, rows = 0, range = 0, trace = 0, diag = 0;
  int designs = 0, collinear = 0;
  for (int t = 0; t < 1000; ++t) {
    const double c = t % 4 == 0 ? 1.0 - 1e-6 : 0.0;
    const auto rc = oracle::random_case(stream, 50, 8, c);
    const linalg::OlsFit fit = linalg::fit_ols(rc.train);
    const linalg::Matrix h = linalg::hat_matrix(fit).h;
    sym = std::max(sym, (h - h.transpose()).cwiseAbs().maxCoeff());
    idem = std::max(idem, (h * h - h).cwiseAbs().maxCoeff());
    rows = std::max(rows, (h.rowwise().sum().array() - 1.0).abs().maxCoeff());
    range = std::max({range, -h.diagonal().minCoeff(), h.diagonal().maxCoeff() - 1.0});
    trace = std::max(trace, std::abs(h.trace() - static_cast<double>(rc.train.cols())));
    diag = std::max(diag, (h.diagonal() - h.rowwise().squaredNorm()).cwiseAbs().maxCoeff());
    ++designs;
    if (c > 0.0 && rc.train.cols() > 2) ++collinear;
  }
  const double worst = std::max({sym, idem, rows, range, trace, diag});
  verdict(3, "hat-matrix properties", worst < 1e-8,
          std::to_string(designs) + " designs (" + std::to_string(collinear) +
              " near-collinear); symmetry " + fmt(sym) + ", idempotence " + fmt(idem) +
              ", row sums " + fmt(rows) + ", range " + fmt(range) + ", trace " + fmt(trace) +
              ", h=sum h^2 " + fmt(diag) + " (tol 1e-8)");
}

// 4-8 -----------------------------------------------------------------------

void replication_criteria() {
  const Run homo80 = run(baseline("homo_n80", sim::ErrorProcess::kHomoskedastic, 80));
  const Run homo1000 = run(baseline("homo_n1000", sim::ErrorProcess::kHomoskedastic, 1000));
  const Run homo50 = run(baseline("homo_n50", sim::ErrorProcess::kHomoskedastic, 50));
  const Run hetero80 = run(baseline("hetero_n80", sim::ErrorProcess::kHeteroskedastic, 80));

  {
    const auto& s = homo80.summary();
    const auto& l = homo1000.summary();
    const double want80[] = {0.414, 0.802, 0.804, 0.800};
    const double want1000[] = {0.547, 0.570, 0.570, 0.570};
    const double got80[] = {s.train_mse.mean, s.test_mse.mean, s.press_over_n.mean, s.proposed_mse.mean};
    const double got1000[] = {l.train_mse.mean, l.test_mse.mean, l.press_over_n.mean, l.proposed_mse.mean};
    bool ok = true;
    std::string detail = "n=80 (train, test, press/n, proposed) = (";
    for (int i = 0; i < 4; ++i) {
      ok = ok && within_rel(got80[i], want80[i], 0.05);
      detail += fmt(got80[i]) + (i < 3 ? ", " : ") vs (0.414, 0.802, 0.804, 0.800) +-5%; ");
    }
    detail += "n=1000 = (";
    for (int i = 0; i < 4; ++i) {
      ok = ok && within_rel(got1000[i], want1000[i], 0.03);
      detail += fmt(got1000[i]) + (i < 3 ? ", " : ") vs (0.547, 0.570, 0.570, 0.570) +-3%");
    }
    verdict(4, "desk-scale error replication", ok, detail);
  }
  {
    const double s50 = 100.0 * homo50.summary().leverage_gt1_share;
    const double s80 = 100.0 * homo80.summary().leverage_gt1_share;
    verdict(5, "leverage > 1 share",
            std::abs(s50 - 46.64) <= 5.0 && std::abs(s80 - 14.62) <= 5.0,
            "n=50 " + fmt(s50) + "% vs 46.64%, n=80 " + fmt(s80) + "% vs 14.62% (+-5 pp)");
  }
  {
    const auto& s = homo80.summary();
    const double gap = std::abs(s.leverage_gt1_proposed.mean - s.leverage_gt1_actual.mean);
    bool ok = gap <= 0.05;
    std::string detail = "leverage>1 actual " + fmt(s.leverage_gt1_actual.mean) + ", proposed " +
                         fmt(s.leverage_gt1_proposed.mean) + ", gap " + fmt(gap) +
                         " (tol 0.05); bins:";
    int compared = 0;
    for (const auto& b : homo80.report.leverage_bins) {
      if (b.overflow || 0.5 * (b.lower + b.upper) < 0.5) continue;
      if (b.actual.count == 0 || b.press.count == 0) {
        detail += " " + b.label + " skipped (empty)";
        continue;
      }
      const double e_prop = std::abs(b.proposed.mean - b.actual.mean);
      const double e_press = std::abs(b.press.mean - b.actual.mean);
      ok = ok && e_prop < e_press;
      ++compared;
      detail += " " + b.label + " |prop-act| " + fmt(e_prop, 3) + " < |press-act| " + fmt(e_press, 3) + ";";
    }
    verdict(6, "high-leverage tracking", ok && compared > 0, detail);
  }
  {
    const auto& h = hetero80.summary();
    const double share = 100.0 * h.negative_projection_share;
    verdict(7, "negative-projection share", std::abs(share - 8.6) <= 3.0,
            "heteroskedastic n=80: " + fmt(share) + "% of " + std::to_string(h.case_proposed.count) +
                " sampled test cases (8.6 +- 3 pp); homoskedastic n=80 for reference: " +
                fmt(100.0 * homo80.summary().negative_projection_share) + "%");
  }
  {
    const auto& curves = homo80.report.curves;
    double min_test = curves.front().test_mse.mean;
    int argmin = curves.front().k;
    for (const auto& c : curves) {
      if (c.test_mse.mean < min_test) {
        min_test = c.test_mse.mean;
        argmin = c.k;
      }
    }
    const double last = curves.back().test_mse.mean;
    bool monotone = true;
    double worst = -1e300;
    for (std::size_t i = 1; i < curves.size(); ++i) {
      const auto& a = curves[i - 1].train_mse;
      const auto& b = curves[i].train_mse;
      const double noise = 3.0 * std::sqrt(a.se * a.se + b.se * b.se);
      worst = std::max(worst, (b.mean - a.mean) / noise);
      monotone = monotone && b.mean - a.mean <= noise;
    }
    verdict(8, "U-shaped test error", curves.back().k == 45 && last >= 1.10 * min_test && monotone,
            "test MSE at k=45 " + fmt(last) + " vs minimum " + fmt(min_test) + " at k=" +
                std::to_string(argmin) + " (ratio " + fmt(last / min_test) +
                ", need >= 1.10); largest training-MSE step " + fmt(worst) +
                " x 3 SE (need <= 1)");
  }
}

// 9 -------------------------------------------------------------------------

void theory_criterion() {
  bool ok = true;
  std::string detail;
  for (auto process : {sim::ErrorProcess::kHomoskedastic, sim::ErrorProcess::kHeteroskedastic}) {
    sim::SimConfig c = baseline("theory", process, 80, 2000);
    c.design = sim::PredictorDesign::kNonStochastic;
    const int k = 45;
    double s_in = 0, s_in2 = 0, s_out = 0, s_out2 = 0, e_in = 0, e_out = 0;
    for (int it = 0; it < c.iterations; ++it) {
      const sim::IterationData d = sim::iteration_data(c, it);
      const linalg::OlsFit fit = linalg::fit_ols(linalg::Dataset(d.train_design.leftCols(k + 1), d.train_y));
      const linalg::Vector sigma2 = sim::residual_variances(c.process, d.train_design.rightCols(45));
      const auto expected = oracle::expected_sq_error_sums(linalg::hat_matrix(fit), sigma2);
      const double a = fit.residuals.squaredNorm() - expected.in_sample;
      const double b = (d.test_y - fit.fitted).squaredNorm() - expected.out_sample;
      s_in += a;
      s_in2 += a * a;
      s_out += b;
      s_out2 += b * b;
      e_in += expected.in_sample;
      e_out += expected.out_sample;
    }
    const double n = c.iterations;
    const double m_in = s_in / n, m_out = s_out / n;
    const double se_in = std::sqrt((s_in2 / n - m_in * m_in) / (n - 1));
    const double se_out = std::sqrt((s_out2 / n - m_out * m_out) / (n - 1));
    const bool pass = std::abs(m_in) <= 3 * se_in && std::abs(m_out) <= 3 * se_out;
    ok = ok && pass;
    detail += std::string(sim::to_string(process)) + ": in-sample mean diff " + fmt(m_in) + " (" +
              fmt(m_in / se_in, 3) + " SE, expected sum " + fmt(e_in / n) + "), out-of-sample " +
              fmt(m_out) + " (" + fmt(m_out / se_out, 3) + " SE, expected sum " + fmt(e_out / n) + "); ";
  }
  verdict(9, "fixed-design theory check", ok, detail + "limit 3 SE, 2000 iterations, k=45");
}

// 10 ------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void determinism_criterion() {
  const auto root = std::filesystem::temp_directory_path() /
                    ("oosmse_acceptance_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::filesystem::create_directories(root);
  {
    std::ofstream cfg(root / "grid.json");
    cfg << R"({"schema_version": 1, "kind": "simulate", "seed": 77, "configs": [
      {"id": "det", "n_train": [50, 80], "error_process": ["homoskedastic", "heteroskedastic"],
       "design": ["stochastic", "nonstochastic"], "m_test": 300, "iterations": 8}]})";
  }
  std::ostringstream log;
  bool ok = true;
  std::size_t files = 0, bytes = 0;
  std::vector<unsigned> counts{1, 2, 5};
  for (unsigned t : counts) {
    cli::SimulateOptions o{root / "grid.json", std::nullopt, t, root / ("t" + std::to_string(t))};
    ok = ok && cli::cmd_simulate(o, log) == cli::kOk;
  }
  for (const auto& entry : std::filesystem::directory_iterator(root / "t1")) {
    const std::string name = entry.path().filename().string();
    const std::string ref = slurp(entry.path());
    for (unsigned t : counts) ok = ok && slurp(root / ("t" + std::to_string(t)) / name) == ref;
    ++files;
    bytes += ref.size();
  }
  for (unsigned t : counts) {
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(root / ("t" + std::to_string(t)))) ++n;
    ok = ok && n == files;
  }
  std::filesystem::remove_all(root);
  verdict(10, "determinism across thread counts", ok && files > 0,
          std::to_string(files) + " store files (" + std::to_string(bytes) +
              " bytes) byte-identical for 1, 2 and 5 threads");
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  oracle_criteria();
  replication_criteria();
  theory_criterion();
  determinism_criterion();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d criteria failed (%.1f s)\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
