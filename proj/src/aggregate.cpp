#include "oosmse/aggregate.hpp"

#include "oosmse/data_io.hpp"
#include "oosmse/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace oosmse::report {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Welford running mean / variance.
class Accumulator {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  MeanStat stat() const {
    if (n_ == 0) return {0, kNaN, kNaN};
    const double se =
        n_ < 2 ? 0.0 : std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_));
    return {n_, mean_, se};
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

template <typename T, typename Key>
std::vector<const T*> sorted_view(const std::vector<T>& rows, Key key) {
  std::vector<const T*> view;
  view.reserve(rows.size());
  for (const auto& r : rows) view.push_back(&r);
  std::stable_sort(view.begin(), view.end(),
                   [&](const T* a, const T* b) { return key(*a) < key(*b); });
  return view;
}

struct Bins {
  double width;
  std::size_t in_range;  // bins covering [0, limit]
  double per_unit;       // 1 / width when that is a whole number, else 0

  Bins(double w, double limit)
      : width(w),
        in_range(static_cast<std::size_t>(std::llround(std::ceil(limit / w - 1e-9)))),
        per_unit(std::abs(1.0 / w - std::round(1.0 / w)) < 1e-9 ? std::round(1.0 / w) : 0.0) {}

  /// Left edge of bin b; 0.3 rather than 3 * 0.1 for decimal widths.
  double edge(std::size_t b) const {
    const auto d = static_cast<double>(b);
    return per_unit > 0.0 ? d / per_unit : d * width;
  }

  /// in_range for values above limit.
  std::size_t index(double v, double limit) const {
    if (v > limit) return in_range;
    if (v <= 0.0) return 0;
    auto b = std::min(static_cast<std::size_t>(v / width), in_range - 1);
    if (b + 1 < in_range && v >= edge(b + 1)) ++b;
    if (b > 0 && v < edge(b)) --b;
    return b;
  }
};

std::string bin_label(double lo, double hi) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << "[" << lo << "," << hi << ")";
  return s.str();
}

}  // namespace

AggregateReport aggregate(const sim::ResultStore& store, const AggregateOptions& options) {
  if (!(options.bin_width > 0.0 && options.bin_width <= 1.0)) {
    throw Error("leverage bin width must lie in (0, 1]");
  }
  if (!(options.density_bin_width > 0.0 && options.density_max > 0.0)) {
    throw Error("density bin width and range must be positive");
  }
  std::size_t total_results = 0;
  for (const auto& c : store.configs) total_results += c.results.size();
  if (total_results == 0) throw EmptyStore("result store has no result rows");

  AggregateReport report;
  const Bins lev_bins(options.bin_width, 1.0);
  const Bins dens_bins(options.density_bin_width, options.density_max);

  for (const auto& c : store.configs) {
    const std::string& id = c.config.id;
    const auto results = sorted_view(
        c.results, [](const sim::IterationResult& r) { return std::tuple(r.k, r.iteration); });
    const auto cases = sorted_view(c.cases, [](const sim::CaseRecord& r) {
      return std::tuple(r.iteration, r.k, r.case_id);
    });
    const auto train_cases = sorted_view(c.train_cases, [](const sim::TrainCaseRecord& r) {
      return std::tuple(r.iteration, r.k, r.case_id);
    });

    // Curves and MAPE, per k.
    struct PerK {
      Accumulator train, test, press, proposed, mape_proposed, mape_press;
      std::size_t excluded = 0;
    };
    std::map<int, PerK> per_k;
    SummaryRow summary;
    Accumulator s_train, s_test, s_press, s_proposed;
    for (const auto* r : results) {
      PerK& acc = per_k[r->k];
      acc.train.add(r->train_mse);
      acc.test.add(r->test_mse);
      acc.press.add(r->press_over_n);
      acc.proposed.add(r->proposed_mse);
      if (r->test_mse < options.mape_floor) {
        ++acc.excluded;
      } else {
        acc.mape_proposed.add(std::abs(r->proposed_mse - r->test_mse) / r->test_mse);
        acc.mape_press.add(std::abs(r->press_over_n - r->test_mse) / r->test_mse);
      }
      s_train.add(r->train_mse);
      s_test.add(r->test_mse);
      s_press.add(r->press_over_n);
      s_proposed.add(r->proposed_mse);
    }
    for (const auto& [k, acc] : per_k) {
      report.curves.push_back(
          {id, k, acc.train.stat(), acc.test.stat(), acc.press.stat(), acc.proposed.stat()});
      report.mape.push_back({id, static_cast<long>(c.config.n_train), k, "proposed",
                             acc.mape_proposed.stat(), acc.excluded});
      report.mape.push_back({id, static_cast<long>(c.config.n_train), k, "press_over_n",
                             acc.mape_press.stat(), acc.excluded});
    }

    // Leverage densities, per k and sample.
    std::map<int, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> density;
    auto density_for = [&](int k) -> auto& {
      auto [it, inserted] = density.try_emplace(k);
      if (inserted) {
        it->second.first.assign(dens_bins.in_range + 1, 0);
        it->second.second.assign(dens_bins.in_range + 1, 0);
      }
      return it->second;
    };
    for (const auto* r : train_cases) {
      ++density_for(r->k).first[dens_bins.index(r->leverage, options.density_max)];
    }
    for (const auto* r : cases) {
      ++density_for(r->k).second[dens_bins.index(r->oos_leverage, options.density_max)];
    }
    for (const auto& [k, counts] : density) {
      for (int side = 0; side < 2; ++side) {
        const auto& bins = side == 0 ? counts.first : counts.second;
        std::size_t total = 0;
        for (auto n : bins) total += n;
        for (std::size_t b = 0; b < bins.size(); ++b) {
          const bool overflow = b == dens_bins.in_range;
          const double lo = overflow ? options.density_max : dens_bins.edge(b);
          const double hi = overflow ? kInf : std::min(dens_bins.edge(b + 1), options.density_max);
          double d = 0.0;
          if (total > 0) {
            d = static_cast<double>(bins[b]) / static_cast<double>(total);
            if (!overflow) d /= (hi - lo);
          }
          report.leverage_density.push_back(
              {id, k, side == 0 ? "train" : "test", lo, hi, bins[b], d});
        }
      }
    }

    // Leverage-binned errors, pooled over k and iterations.
    const std::size_t n_bins = lev_bins.in_range + 1;
    std::vector<Accumulator> actual(n_bins), proposed(n_bins), press(n_bins);
    Accumulator case_actual, case_proposed, gt1_actual, gt1_proposed;
    std::size_t negative = 0;
    std::size_t gt1 = 0;
    for (const auto* r : cases) {
      const std::size_t b = lev_bins.index(r->oos_leverage, 1.0);
      actual[b].add(r->actual_sq_error);
      proposed[b].add(r->projected_sq_error);
      case_actual.add(r->actual_sq_error);
      case_proposed.add(r->projected_sq_error);
      if (r->oos_leverage > 1.0) {
        ++gt1;
        gt1_actual.add(r->actual_sq_error);
        gt1_proposed.add(r->projected_sq_error);
      }
      if (r->projected_sq_error < 0.0) ++negative;
    }
    for (const auto* r : train_cases) {
      press[lev_bins.index(r->leverage, 1.0)].add(r->press_sq_error);
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
      const bool overflow = b == lev_bins.in_range;
      const double lo = overflow ? 1.0 : lev_bins.edge(b);
      const double hi = overflow ? kInf : std::min(lev_bins.edge(b + 1), 1.0);
      std::string label = overflow ? "> 1.0" : bin_label(lo, hi);
      if (!overflow && b + 1 == lev_bins.in_range) label.back() = ']';
      report.leverage_bins.push_back({id, label, lo, hi, overflow, actual[b].stat(),
                                      proposed[b].stat(), press[b].stat()});
    }

    summary.config_id = id;
    summary.error_process = sim::to_string(c.config.process.error_process);
    summary.n_true_predictors = c.config.process.n_true_predictors();
    summary.n_train = static_cast<long>(c.config.n_train);
    summary.design = sim::to_string(c.config.design);
    summary.train_mse = s_train.stat();
    summary.test_mse = s_test.stat();
    summary.press_over_n = s_press.stat();
    summary.proposed_mse = s_proposed.stat();
    summary.case_actual = case_actual.stat();
    summary.case_proposed = case_proposed.stat();
    const double n_cases = static_cast<double>(cases.size());
    summary.leverage_gt1_share = cases.empty() ? kNaN : static_cast<double>(gt1) / n_cases;
    summary.leverage_gt1_actual = gt1_actual.stat();
    summary.leverage_gt1_proposed = gt1_proposed.stat();
    summary.negative_projection_count = negative;
    summary.negative_projection_share =
        cases.empty() ? kNaN : static_cast<double>(negative) / n_cases;
    summary.failures = c.failures.size();
    report.summary.push_back(summary);
  }
  return report;
}

namespace {

std::string num(double v) { return std::isnan(v) ? std::string() : io::format_double(v); }

std::string stat_fields(const MeanStat& s) {
  return std::to_string(s.count) + ',' + num(s.mean) + ',' + num(s.se);
}

std::string stat_header(const std::string& name) {
  return name + "_count," + name + "_mean," + name + "_se";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileNotFound("cannot write '" + path.string() + "'");
  f << text;
}

}  // namespace

void write_report(const std::filesystem::path& dir, const AggregateReport& report) {
  std::filesystem::create_directories(dir);

  std::string out = "config_id,k," + stat_header("train_mse") + ',' + stat_header("test_mse") +
                    ',' + stat_header("press_over_n") + ',' + stat_header("proposed_mse") + '\n';
  for (const auto& r : report.curves) {
    out += r.config_id + ',' + std::to_string(r.k) + ',' + stat_fields(r.train_mse) + ',' +
           stat_fields(r.test_mse) + ',' + stat_fields(r.press_over_n) + ',' +
           stat_fields(r.proposed_mse) + '\n';
  }
  write_file(dir / "curves.csv", out);

  out = "config_id,n_train,k,estimator," + stat_header("mape") + ",excluded\n";
  for (const auto& r : report.mape) {
    out += r.config_id + ',' + std::to_string(r.n_train) + ',' + std::to_string(r.k) + ',' +
           r.estimator + ',' + stat_fields(r.mape) + ',' + std::to_string(r.excluded) + '\n';
  }
  write_file(dir / "mape.csv", out);

  out = "config_id,k,sample,bin_lower,bin_upper,count,density\n";
  for (const auto& r : report.leverage_density) {
    out += r.config_id + ',' + std::to_string(r.k) + ',' + r.sample + ',' + num(r.lower) + ',' +
           (std::isinf(r.upper) ? std::string("inf") : num(r.upper)) + ',' +
           std::to_string(r.count) + ',' + num(r.density) + '\n';
  }
  write_file(dir / "leverage_density.csv", out);

  out = "config_id,bin,bin_lower,bin_upper," + stat_header("actual") + ',' +
        stat_header("proposed") + ',' + stat_header("press") + '\n';
  for (const auto& r : report.leverage_bins) {
    out += r.config_id + ",\"" + r.label + "\"," + num(r.lower) + ',' +
           (std::isinf(r.upper) ? std::string("inf") : num(r.upper)) + ',' +
           stat_fields(r.actual) + ',' + stat_fields(r.proposed) + ',' + stat_fields(r.press) +
           '\n';
  }
  write_file(dir / "leverage_bins.csv", out);

  out = "config_id,error_process,n_true_predictors,n_train,design," + stat_header("train_mse") +
        ',' + stat_header("test_mse") + ',' + stat_header("press_over_n") + ',' +
        stat_header("proposed_mse") + ',' + stat_header("case_actual") + ',' +
        stat_header("case_proposed") + ",leverage_gt1_share," +
        stat_header("leverage_gt1_actual") + ',' + stat_header("leverage_gt1_proposed") +
        ",negative_projection_count,negative_projection_share,failures\n";
  for (const auto& r : report.summary) {
    out += r.config_id + ',' + r.error_process + ',' + std::to_string(r.n_true_predictors) + ',' +
           std::to_string(r.n_train) + ',' + r.design + ',' + stat_fields(r.train_mse) + ',' +
           stat_fields(r.test_mse) + ',' + stat_fields(r.press_over_n) + ',' +
           stat_fields(r.proposed_mse) + ',' + stat_fields(r.case_actual) + ',' +
           stat_fields(r.case_proposed) + ',' + num(r.leverage_gt1_share) + ',' +
           stat_fields(r.leverage_gt1_actual) + ',' + stat_fields(r.leverage_gt1_proposed) + ',' +
           std::to_string(r.negative_projection_count) + ',' +
           num(r.negative_projection_share) + ',' + std::to_string(r.failures) + '\n';
  }
  write_file(dir / "summary.csv", out);
}

}  // namespace oosmse::report
