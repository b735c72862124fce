#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "pips/experiment.hpp"

namespace pips {

namespace {

constexpr const char* kRunsHeader = "algo,run,t,identified,perf_factor,resamples,stopped";
constexpr const char* kFinalHeader = "algo,run,stop_episode,identified,perf_factor";
constexpr const char* kAggregateHeader =
    "algo,t,runs,id_rate,id_lo,id_hi,perf_mean,perf_stderr,perf_bin_rate,perf_bin_lo,"
    "perf_bin_hi,mean_log_resamples,log_mean_resamples";
constexpr const char* kPlotHeader = "algo,episode,mean,lo,hi";
constexpr const char* kDiagnosticsHeader =
    "algo,series,t_lo,t_hi,points,loglin_slope,loglin_intercept,loglin_r2,loglog_slope,"
    "loglog_intercept,loglog_r2";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_int(const std::string& field, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": bad integer '" +
                             field + "'");
  return value;
}

double parse_double(const std::string& field, std::size_t line_no) {
  // strtod rather than from_chars: the latter has no double support in older libstdc++.
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size())
    throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": bad number '" +
                             field + "'");
  return value;
}

bool parse_flag(const std::string& field, std::size_t line_no) {
  if (field == "0") return false;
  if (field == "1") return true;
  throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": bad flag '" + field +
                           "'");
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::vector<RunCsvRow> flatten(const std::vector<RunRecord>& records) {
  std::vector<RunCsvRow> rows;
  for (const RunRecord& r : records)
    for (const EpisodeRow& e : r.rows) rows.push_back({r.algorithm, r.run, e});
  return rows;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kRunsHeader << '\n';
  for (const RunCsvRow& r : flatten(records))
    out << r.algo << ',' << r.run << ',' << r.row.t << ',' << (r.row.identified ? 1 : 0) << ','
        << format_double(r.row.performance) << ',' << r.row.resamples << ','
        << (r.row.stopped ? 1 : 0) << '\n';
}

std::vector<RunCsvRow> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRunsHeader)
    throw std::runtime_error("runs.csv: unexpected header");
  std::vector<RunCsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7)
      throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": expected 7 fields");
    RunCsvRow r;
    r.algo = f[0];
    r.run = parse_int<int>(f[1], line_no);
    r.row.t = parse_int<std::int64_t>(f[2], line_no);
    r.row.identified = parse_flag(f[3], line_no);
    r.row.performance = parse_double(f[4], line_no);
    r.row.resamples = parse_int<std::uint64_t>(f[5], line_no);
    r.row.stopped = parse_flag(f[6], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_final_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kFinalHeader << '\n';
  for (const RunRecord& r : records) {
    out << r.algorithm << ',' << r.run << ',';
    if (r.stop_episode) out << *r.stop_episode;
    out << ',' << (r.identified ? 1 : 0) << ',' << format_double(r.performance) << '\n';
  }
}

std::vector<AggregateRow> aggregate(const std::vector<RunCsvRow>& rows) {
  // algo -> run -> rows sorted by t; algorithm order is first appearance.
  std::vector<std::string> order;
  std::map<std::string, std::map<int, std::vector<EpisodeRow>>> by_algo;
  for (const RunCsvRow& r : rows) {
    if (!by_algo.count(r.algo)) order.push_back(r.algo);
    by_algo[r.algo][r.run].push_back(r.row);
  }

  std::vector<AggregateRow> out;
  for (const std::string& algo : order) {
    auto& runs = by_algo[algo];
    std::vector<std::int64_t> grid;
    for (auto& [run, episodes] : runs) {
      std::stable_sort(episodes.begin(), episodes.end(),
                       [](const EpisodeRow& a, const EpisodeRow& b) { return a.t < b.t; });
      for (const EpisodeRow& e : episodes) grid.push_back(e.t);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    for (const std::int64_t t : grid) {
      AggregateRow row;
      row.algo = algo;
      row.t = t;
      std::int64_t identified = 0, perfect = 0, with_resamples = 0;
      double log_sum = 0, resample_sum = 0;
      std::vector<double> perf;
      for (const auto& [run, episodes] : runs) {
        auto it = std::upper_bound(episodes.begin(), episodes.end(), t,
                                   [](std::int64_t v, const EpisodeRow& e) { return v < e.t; });
        if (it == episodes.begin()) continue;  // run has no row at or before t
        const EpisodeRow& e = *std::prev(it);
        ++row.runs;
        identified += e.identified ? 1 : 0;
        perfect += e.performance >= 1.0 - kPerfBinTol ? 1 : 0;
        perf.push_back(e.performance);
        if (e.resamples > 0) {
          ++with_resamples;
          log_sum += std::log(static_cast<double>(e.resamples));
          resample_sum += static_cast<double>(e.resamples);
        }
      }
      const double n = row.runs;
      row.id_rate = identified / n;
      std::tie(row.id_lo, row.id_hi) = wilson_interval(identified, row.runs);
      double perf_sum = 0;
      for (double p : perf) perf_sum += p;
      row.perf_mean = perf_sum / n;
      if (row.runs > 1) {
        double ss = 0;
        for (double p : perf) ss += (p - row.perf_mean) * (p - row.perf_mean);
        row.perf_stderr = std::sqrt(ss / (n - 1) / n);
      }
      row.perf_bin_rate = perfect / n;
      std::tie(row.perf_bin_lo, row.perf_bin_hi) = wilson_interval(perfect, row.runs);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.mean_log_resamples = with_resamples ? log_sum / with_resamples : nan;
      row.log_mean_resamples = with_resamples ? std::log(resample_sum / with_resamples) : nan;
      out.push_back(row);
    }
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kAggregateHeader << '\n';
  for (const AggregateRow& r : rows)
    out << r.algo << ',' << r.t << ',' << r.runs << ',' << format_double(r.id_rate) << ','
        << format_double(r.id_lo) << ',' << format_double(r.id_hi) << ','
        << format_double(r.perf_mean) << ',' << format_double(r.perf_stderr) << ','
        << format_double(r.perf_bin_rate) << ',' << format_double(r.perf_bin_lo) << ','
        << format_double(r.perf_bin_hi) << ',' << format_double(r.mean_log_resamples) << ','
        << format_double(r.log_mean_resamples) << '\n';
}

void write_plot_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kPlotHeader << '\n';
  for (const AggregateRow& r : rows)
    out << r.algo << ',' << r.t << ',' << format_double(r.id_rate) << ','
        << format_double(r.id_lo) << ',' << format_double(r.id_hi) << '\n';
}

LineFit fit_ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_ols: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("fit_ols: need at least 3 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw std::invalid_argument("fit_ols: x is constant");
  LineFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A constant response is fitted exactly.
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

ContractionReport contraction_diagnostics(const std::vector<RunCsvRow>& rows,
                                          const std::string& algo, std::int64_t t_lo,
                                          std::int64_t t_hi) {
  if (t_lo > t_hi) throw std::invalid_argument("contraction_diagnostics: empty window");
  struct Acc {
    double log_sum = 0, sum = 0;
    int n = 0;
  };
  std::map<std::int64_t, Acc> by_t;
  for (const RunCsvRow& r : rows) {
    if (r.algo != algo || r.row.t < t_lo || r.row.t > t_hi || r.row.resamples == 0) continue;
    Acc& a = by_t[r.row.t];
    a.log_sum += std::log(static_cast<double>(r.row.resamples));
    a.sum += static_cast<double>(r.row.resamples);
    ++a.n;
  }
  if (by_t.size() < 3)
    throw std::invalid_argument("contraction_diagnostics: fewer than 3 episodes with resample data for " +
                                algo);
  std::vector<double> t, log_t, mean_log, log_mean;
  for (const auto& [episode, a] : by_t) {
    t.push_back(static_cast<double>(episode));
    log_t.push_back(std::log(static_cast<double>(episode)));
    mean_log.push_back(a.log_sum / a.n);
    log_mean.push_back(std::log(a.sum / a.n));
  }
  ContractionReport rep;
  rep.algo = algo;
  rep.t_lo = t_lo;
  rep.t_hi = t_hi;
  rep.mean_log = {fit_ols(t, mean_log), fit_ols(log_t, mean_log)};
  rep.log_mean = {fit_ols(t, log_mean), fit_ols(log_t, log_mean)};
  return rep;
}

ContractionReport contraction_diagnostics(const std::vector<RunRecord>& records,
                                          const std::string& algo, std::int64_t t_lo,
                                          std::int64_t t_hi) {
  return contraction_diagnostics(flatten(records), algo, t_lo, t_hi);
}

void write_diagnostics_csv(std::ostream& out, const std::vector<ContractionReport>& reports) {
  out << kDiagnosticsHeader << '\n';
  for (const ContractionReport& r : reports) {
    const std::pair<const char*, const SeriesFits*> series[] = {{"mean_log", &r.mean_log},
                                                                {"log_mean", &r.log_mean}};
    for (const auto& [name, fits] : series)
      out << r.algo << ',' << name << ',' << r.t_lo << ',' << r.t_hi << ','
          << fits->log_linear.points << ',' << format_double(fits->log_linear.slope) << ','
          << format_double(fits->log_linear.intercept) << ',' << format_double(fits->log_linear.r2)
          << ',' << format_double(fits->log_log.slope) << ','
          << format_double(fits->log_log.intercept) << ',' << format_double(fits->log_log.r2)
          << '\n';
  }
}

}  // namespace pips
