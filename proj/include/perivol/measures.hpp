#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "perivol/grid.hpp"

namespace perivol {

// log-return series sampled every `step` grid slots; values[i] is the return
// ending at slot i + step, so two series from the same grid stay aligned
struct ReturnSeries {
  GridSpec spec;
  std::int64_t step = 1;
  std::vector<double> values;
};

inline ReturnSeries log_returns(const MinuteGrid& g, std::int64_t step = 1) {
  if (step < 1) throw std::invalid_argument("log_returns: step must be >= 1");
  if (step >= g.spec.slots)
    throw std::invalid_argument("log_returns: step " + std::to_string(step) +
                                " >= grid length " + std::to_string(g.spec.slots));
  ReturnSeries out;
  out.spec = g.spec;
  out.step = step;
  out.values.resize(g.spec.slots - step);
  for (std::int64_t i = 0; i + step < g.spec.slots; ++i)
    out.values[i] = g.log_price[i + step] - g.log_price[i];
  return out;
}

// per-day realized variance from 5-minute log returns: day t sums the 288
// squared returns between its 00:00 UTC and the next day's 00:00.  Days with
// fewer marks in the grid keep their partial sum and are flagged incomplete.
struct DailyRV {
  std::vector<std::int64_t> epoch_day;
  std::vector<double> rv;
  std::vector<int> n_returns;          // 288 on a complete day
  std::vector<std::uint8_t> complete;
};

inline DailyRV realized_variance(const MinuteGrid& g) {
  if (g.spec.resolution != Resolution::minute)
    throw std::invalid_argument("realized_variance: requires a one-minute grid");
  if (g.spec.slots < 2) throw data_error("realized_variance: grid too short");
  const std::int64_t end_epoch = g.spec.epoch_of(g.spec.slots - 1);
  const std::int64_t first_day = detail::floor_div(g.spec.start, detail::kSecPerDay);
  const std::int64_t last_day = detail::floor_div(end_epoch, detail::kSecPerDay);

  DailyRV out;
  for (std::int64_t day = first_day; day <= last_day; ++day) {
    const std::int64_t midnight = day * detail::kSecPerDay;
    double rv = 0.0;
    int n = 0;
    for (int j = 1; j <= 288; ++j) {
      const std::int64_t t0 = midnight + (j - 1) * 300;
      const std::int64_t t1 = midnight + j * 300;
      if (t0 < g.spec.start || t1 > end_epoch) continue;
      const double r = g.log_price[(t1 - g.spec.start) / 60] -
                       g.log_price[(t0 - g.spec.start) / 60];
      rv += r * r;
      ++n;
    }
    if (n == 0) continue;
    out.epoch_day.push_back(day);
    out.rv.push_back(rv);
    out.n_returns.push_back(n);
    out.complete.push_back(n == 288 ? 1 : 0);
  }
  if (out.epoch_day.empty() ||
      std::find(out.complete.begin(), out.complete.end(), 1) == out.complete.end())
    throw data_error("realized_variance: grid covers no complete UTC day");
  return out;
}

// annualized volatility in percent: sqrt(365 * RV) * 100
inline double annualized_vol(double rv) {
  if (!(rv >= 0.0)) throw std::domain_error("annualized_vol: rv must be non-negative");
  return std::sqrt(365.0 * rv) * 100.0;
}

namespace detail {

// Pearson correlation of x[i] with y[i+lag] over their overlap; exact 1 when
// the two windows are numerically identical
inline double lagged_corr(const std::vector<double>& x, const std::vector<double>& y,
                          std::int64_t lag, std::int64_t n, const char* op) {
  const std::int64_t m = n - lag;
  double mx = 0.0, my = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i + lag];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    const double a = x[i] - mx;
    const double b = y[i + lag] - my;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw data_error(std::string(op) + ": zero-variance window at lag " + std::to_string(lag));
  if (sxy == sxx && sxy == syy) return 1.0;  // identical windows
  const double rho = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(rho, -1.0, 1.0);
}

inline void check_aligned(const ReturnSeries& a, const ReturnSeries& b, const char* op) {
  if (a.spec.start != b.spec.start || a.spec.resolution != b.spec.resolution ||
      a.spec.slots != b.spec.slots || a.step != b.step ||
      a.values.size() != b.values.size())
    throw std::invalid_argument(std::string(op) + ": series not aligned on a common grid");
}

}  // namespace detail

// sample cross-correlation rho(h) = corr(a_t, b_{t+h}) for h = 0..max_lag,
// with per-lag white-noise 95% bands 1.96/sqrt(n-h)
struct CorrelationFunction {
  std::vector<double> rho;
  std::vector<double> band;  // same length as rho
  std::vector<std::int64_t> n_pairs;
};

inline CorrelationFunction cross_correlation(const ReturnSeries& a, const ReturnSeries& b,
                                             std::int64_t max_lag) {
  detail::check_aligned(a, b, "cross_correlation");
  const std::int64_t n = static_cast<std::int64_t>(a.values.size());
  if (max_lag < 0 || max_lag >= n / 10)
    throw std::invalid_argument("cross_correlation: max_lag " + std::to_string(max_lag) +
                                " out of range for series length " + std::to_string(n));
  CorrelationFunction out;
  for (std::int64_t h = 0; h <= max_lag; ++h) {
    out.rho.push_back(detail::lagged_corr(a.values, b.values, h, n, "cross_correlation"));
    out.band.push_back(1.96 / std::sqrt(static_cast<double>(n - h)));
    out.n_pairs.push_back(n - h);
  }
  return out;
}

// symmetric lag-0 correlation matrix across aligned series; unit diagonal
inline std::vector<std::vector<double>> correlation_matrix(
    const std::vector<ReturnSeries>& series) {
  if (series.empty()) throw std::invalid_argument("correlation_matrix: no series");
  const std::size_t k = series.size();
  for (std::size_t i = 1; i < k; ++i)
    detail::check_aligned(series[0], series[i], "correlation_matrix");
  const std::int64_t n = static_cast<std::int64_t>(series[0].values.size());
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double rho =
          detail::lagged_corr(series[i].values, series[j].values, 0, n, "correlation_matrix");
      m[i][j] = rho;
      m[j][i] = rho;
    }
  return m;
}

}  // namespace perivol
