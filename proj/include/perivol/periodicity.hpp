#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "perivol/grid.hpp"

namespace perivol {

enum class Scale { day, hour, minute, second };
enum class Metric { vol, volume, illiq };

inline constexpr int bins_of(Scale s) {
  switch (s) {
    case Scale::day: return 7;
    case Scale::hour: return 24;
    case Scale::minute: return 60;
    case Scale::second: return 3600;
  }
  return 0;
}

// trailing-window length in units of the scale's own aggregation period
inline constexpr int window_of(Scale s) { return bins_of(s); }

inline constexpr const char* scale_name(Scale s) {
  switch (s) {
    case Scale::day: return "day";
    case Scale::hour: return "hour";
    case Scale::minute: return "minute";
    case Scale::second: return "second";
  }
  return "?";
}

inline constexpr const char* metric_name(Metric m) {
  switch (m) {
    case Metric::vol: return "vol";
    case Metric::volume: return "volume";
    case Metric::illiq: return "illiq";
  }
  return "?";
}

namespace detail {

// Acklam's rational approximation to the standard normal quantile
// (|relative error| < 1.2e-9, ample for confidence levels)
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) return -normal_quantile(1 - p);
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

inline double z_critical(double level) {
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("confidence level must lie in (0,1)");
  if (level == 0.95) return 1.96;  // the conventional two-sided value
  return normal_quantile(0.5 * (1.0 + level));
}

}  // namespace detail

// inverse logit
inline double tigol(double y) { return 1.0 / (1.0 + std::exp(-y)); }

struct ConfidenceBand {
  double point;
  double lower;
  double upper;
};

// delta-method band for a mean share transported through the logit:
// point = scale * mean(z); the interval is scale * tigol(logit(mean) -+ z* s)
// with s = sd(z) / (sqrt(n) * mean * (1 - mean)).  Degenerate means (0 or 1)
// have an infinite logit and raise data_error instead.
inline ConfidenceBand confidence_band(const std::vector<double>& z_shares, double scale,
                                      double level = 0.95) {
  const std::size_t n = z_shares.size();
  if (n < 2) throw std::invalid_argument("confidence_band: need at least 2 samples");
  double mean = 0.0;
  for (double z : z_shares) {
    if (!(z >= 0.0) || !(z <= 1.0))
      throw std::invalid_argument("confidence_band: share outside [0,1]");
    mean += z;
  }
  mean /= static_cast<double>(n);
  if (mean <= 0.0 || mean >= 1.0)
    throw data_error("confidence_band: degenerate mean share " + std::to_string(mean));
  double var = 0.0;
  for (double z : z_shares) var += (z - mean) * (z - mean);
  var /= static_cast<double>(n);
  const double logit = std::log(mean / (1.0 - mean));
  const double sd = std::sqrt(var) / (std::sqrt(static_cast<double>(n)) * mean * (1.0 - mean));
  const double zc = detail::z_critical(level);
  return ConfidenceBand{scale * mean, scale * tigol(logit - zc * sd),
                        scale * tigol(logit + zc * sd)};
}

// relative periodicity profile at one scale: lambda[b] averages, over every
// trailing window that ends in bin b, the window length times the terminal
// unit's share of the window total.  1 everywhere means "no periodicity".
struct PeriodicProfile {
  Scale scale = Scale::day;
  Metric metric = Metric::vol;
  double level = 0.95;
  std::vector<double> lambda;             // NaN where a bin never completes a window
  std::vector<double> ci_low, ci_high;    // NaN where no band is defined (n < 2, share 0/1)
  std::vector<int> n_obs;                 // windows contributing to each bin
  std::vector<std::int64_t> skipped;      // zero-denominator windows dropped per bin
};

namespace detail {

enum class UnitState : std::uint8_t {
  ok,       // usable value
  dead,     // defined position but value undefined (zero-volume hour): poisons windows, counted
  missing,  // no data (grid edge / first return): windows simply don't exist here
};

// one aggregation unit per scale period (calendar day, hour, or single slot)
struct UnitSeries {
  std::vector<double> value;
  std::vector<UnitState> state;
  std::vector<int> bin;
};

// aggregate |y| or volume over aligned periods of `period_s` seconds.
// vol units need every constituent return, and returns only exist from slot 1.
inline UnitSeries aggregate_units(const MinuteGrid& g, Metric metric, std::int64_t period_s,
                                  Scale scale) {
  const std::int64_t step = g.spec.step();
  const std::int64_t per_unit = period_s / step;
  // first aligned period fully inside the grid
  const std::int64_t first_epoch = detail::floor_div(g.spec.start + period_s - 1, period_s) * period_s;
  UnitSeries u;
  for (std::int64_t e = first_epoch; e + period_s <= g.spec.start + g.spec.slots * step;
       e += period_s) {
    const std::int64_t s0 = (e - g.spec.start) / step;
    double sum = 0.0;
    UnitState st = UnitState::ok;
    if (metric == Metric::vol) {
      if (s0 == 0) {
        st = UnitState::missing;  // the first slot has no return
      } else {
        for (std::int64_t k = 0; k < per_unit; ++k)
          sum += std::abs(g.log_price[s0 + k] - g.log_price[s0 + k - 1]);
      }
    } else {
      for (std::int64_t k = 0; k < per_unit; ++k) sum += g.volume[s0 + k];
    }
    u.value.push_back(sum);
    u.state.push_back(st);
    const CalendarCoord c = coord_of(g.spec, s0);
    switch (scale) {
      case Scale::day: u.bin.push_back(c.day - 1); break;
      case Scale::hour: u.bin.push_back(c.hour); break;
      case Scale::minute: u.bin.push_back(c.minute); break;
      case Scale::second: u.bin.push_back(c.minute * 60 + c.second); break;
    }
  }
  return u;
}

// slide the trailing window over the units and collect per-bin ratio samples.
// the numerator is an S-fold repeated sum of the terminal value — the same
// float operation sequence as the denominator — so homogeneous inputs give
// ratio == 1.0 exactly.
inline PeriodicProfile scan_profile(const UnitSeries& u, Scale scale, Metric metric,
                                    double level) {
  const int S = window_of(scale);
  const int nbins = bins_of(scale);
  PeriodicProfile p;
  p.scale = scale;
  p.metric = metric;
  p.level = level;
  p.lambda.assign(nbins, std::numeric_limits<double>::quiet_NaN());
  p.ci_low.assign(nbins, std::numeric_limits<double>::quiet_NaN());
  p.ci_high.assign(nbins, std::numeric_limits<double>::quiet_NaN());
  p.n_obs.assign(nbins, 0);
  p.skipped.assign(nbins, 0);

  std::vector<std::vector<double>> ratios(nbins);
  const std::int64_t n_units = static_cast<std::int64_t>(u.value.size());
  for (std::int64_t t = S - 1; t < n_units; ++t) {
    bool usable = true, dead = false;
    for (int j = 0; j < S && usable; ++j) {
      if (u.state[t - j] == UnitState::missing) usable = false;
      if (u.state[t - j] == UnitState::dead) dead = true;
    }
    if (!usable) continue;
    if (dead) {
      ++p.skipped[u.bin[t]];
      continue;
    }
    double den = 0.0, num = 0.0;
    const double x = u.value[t];
    for (int j = S - 1; j >= 0; --j) {
      den += u.value[t - j];
      num += x;
    }
    if (den == 0.0) {
      ++p.skipped[u.bin[t]];
      continue;
    }
    ratios[u.bin[t]].push_back(num / den);
  }

  std::int64_t total = 0;
  for (int b = 0; b < nbins; ++b) {
    const auto& r = ratios[b];
    p.n_obs[b] = static_cast<int>(r.size());
    total += p.n_obs[b];
    if (r.empty()) continue;
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    p.lambda[b] = mean;
    if (r.size() >= 2) {
      std::vector<double> z(r.size());
      for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / static_cast<double>(S);
      try {
        ConfidenceBand cb = confidence_band(z, static_cast<double>(S), level);
        p.ci_low[b] = std::min(cb.lower, mean);   // the point estimate always sits
        p.ci_high[b] = std::max(cb.upper, mean);  // inside its own band
      } catch (const data_error&) {
        // share 0 or 1: band undefined, bin reported without one
      }
    }
  }
  if (total == 0)
    throw data_error(std::string("relative_") + scale_name(scale) +
                     "_profile: sample shorter than one trailing window");
  return p;
}

inline void require_rate_metric(Metric m, const char* op) {
  if (m == Metric::illiq)
    throw std::invalid_argument(std::string(op) + ": use relative_illiquidity_hour for illiq");
}

}  // namespace detail

// day-of-week profile: each complete calendar day against its trailing week
inline PeriodicProfile relative_day_profile(const MinuteGrid& g, Metric metric,
                                            double level = 0.95) {
  detail::require_rate_metric(metric, "relative_day_profile");
  return detail::scan_profile(detail::aggregate_units(g, metric, detail::kSecPerDay, Scale::day),
                              Scale::day, metric, level);
}

// hour-of-day profile: each complete hour against its trailing 24 hours
inline PeriodicProfile relative_hour_profile(const MinuteGrid& g, Metric metric,
                                             double level = 0.95) {
  detail::require_rate_metric(metric, "relative_hour_profile");
  return detail::scan_profile(detail::aggregate_units(g, metric, 3600, Scale::hour),
                              Scale::hour, metric, level);
}

// minute-of-hour profile: each minute against its trailing 60 minutes
inline PeriodicProfile relative_minute_profile(const MinuteGrid& g, Metric metric,
                                               double level = 0.95) {
  detail::require_rate_metric(metric, "relative_minute_profile");
  if (g.spec.resolution != Resolution::minute)
    throw std::invalid_argument("relative_minute_profile: requires a one-minute grid");
  return detail::scan_profile(detail::aggregate_units(g, metric, 60, Scale::minute),
                              Scale::minute, metric, level);
}

// second-of-hour profile on a one-second grid: each second against its
// trailing 3600 seconds (windows may cross hour boundaries, like every other
// scale).  Uses compensated rolling sums — the windows are too long for the
// quadratic repeated-add scan.
inline PeriodicProfile relative_second_profile(const MinuteGrid& g, Metric metric,
                                               double level = 0.95) {
  detail::require_rate_metric(metric, "relative_second_profile");
  if (g.spec.resolution != Resolution::second)
    throw std::invalid_argument("relative_second_profile: requires a one-second grid");
  const int S = 3600;
  const int nbins = 3600;
  PeriodicProfile p;
  p.scale = Scale::second;
  p.metric = metric;
  p.level = level;
  p.lambda.assign(nbins, std::numeric_limits<double>::quiet_NaN());
  p.ci_low.assign(nbins, std::numeric_limits<double>::quiet_NaN());
  p.ci_high.assign(nbins, std::numeric_limits<double>::quiet_NaN());
  p.n_obs.assign(nbins, 0);
  p.skipped.assign(nbins, 0);

  const std::int64_t n = g.spec.slots;
  const std::int64_t first = metric == Metric::vol ? 1 : 0;  // slot 0 has no return
  if (n - first < S)
    throw data_error("relative_second_profile: sample shorter than one trailing window");

  // Kahan prefix sums of the per-slot values
  std::vector<double> prefix(n + 1 - first, 0.0);
  {
    double sum = 0.0, comp = 0.0;
    for (std::int64_t i = first; i < n; ++i) {
      const double v = metric == Metric::vol
                           ? std::abs(g.log_price[i] - g.log_price[i - 1])
                           : g.volume[i];
      const double y = v - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      prefix[i + 1 - first] = sum;
    }
  }
  std::vector<std::vector<double>> ratios(nbins);
  for (std::int64_t t = first + S - 1; t < n; ++t) {
    const double den = prefix[t + 1 - first] - prefix[t + 1 - S - first];
    const CalendarCoord c = coord_of(g.spec, t);
    const int bin = c.minute * 60 + c.second;
    const double x = metric == Metric::vol ? std::abs(g.log_price[t] - g.log_price[t - 1])
                                           : g.volume[t];
    if (den == 0.0) {
      ++p.skipped[bin];
      continue;
    }
    ratios[bin].push_back(static_cast<double>(S) * x / den);
  }
  std::int64_t total = 0;
  for (int b = 0; b < nbins; ++b) {
    const auto& r = ratios[b];
    p.n_obs[b] = static_cast<int>(r.size());
    total += p.n_obs[b];
    if (r.empty()) continue;
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    p.lambda[b] = mean;
    if (r.size() >= 2) {
      std::vector<double> z(r.size());
      for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / static_cast<double>(S);
      try {
        ConfidenceBand cb = confidence_band(z, static_cast<double>(S), level);
        p.ci_low[b] = std::min(cb.lower, mean);
        p.ci_high[b] = std::max(cb.upper, mean);
      } catch (const data_error&) {
      }
    }
  }
  if (total == 0) throw data_error("relative_second_profile: no complete windows");
  return p;
}

// hourly Amihud-style relative illiquidity: I = (sum of |y|) / (hour volume),
// each defined hour against its trailing 24; windows touching a zero-volume
// hour are skipped and counted
inline PeriodicProfile relative_illiquidity_hour(const MinuteGrid& g, double level = 0.95) {
  detail::UnitSeries absret = detail::aggregate_units(g, Metric::vol, 3600, Scale::hour);
  detail::UnitSeries vol = detail::aggregate_units(g, Metric::volume, 3600, Scale::hour);
  detail::UnitSeries illiq;
  bool any_volume = false;
  for (std::size_t i = 0; i < absret.value.size(); ++i) {
    illiq.bin.push_back(absret.bin[i]);
    if (absret.state[i] == detail::UnitState::missing) {
      illiq.value.push_back(0.0);
      illiq.state.push_back(detail::UnitState::missing);
    } else if (vol.value[i] == 0.0) {
      illiq.value.push_back(0.0);  // undefined: zero volume traded this hour
      illiq.state.push_back(detail::UnitState::dead);
    } else {
      any_volume = true;
      illiq.value.push_back(absret.value[i] / vol.value[i]);
      illiq.state.push_back(detail::UnitState::ok);
    }
  }
  if (!any_volume) throw data_error("relative_illiquidity_hour: every hour has zero volume");
  PeriodicProfile p = detail::scan_profile(illiq, Scale::hour, Metric::illiq, level);
  p.metric = Metric::illiq;
  return p;
}

// conditional profiles: shares within a parent period, averaged across the sample
struct ConditionalProfile {
  Metric metric = Metric::vol;
  std::vector<std::vector<double>> value;  // [outer][inner], NaN when never observed
  std::vector<std::vector<int>> n_obs;
  std::vector<std::int64_t> skipped;       // zero-total parent periods per outer bin
};

namespace detail {

// per-slot metric with the vol convention (return attached to its endpoint;
// slot 0 has none)
inline double slot_value(const MinuteGrid& g, Metric metric, std::int64_t s) {
  return metric == Metric::vol ? std::abs(g.log_price[s] - g.log_price[s - 1]) : g.volume[s];
}

}  // namespace detail

// hour shares by weekday: for every complete (week, weekday) day, each hour's
// metric over 1/24 of that day's total, averaged across weeks.  Row means are
// 1 per day by construction; zero-total days are skipped and counted.
inline ConditionalProfile hour_by_weekday(const MinuteGrid& g, Metric metric) {
  detail::require_rate_metric(metric, "hour_by_weekday");
  const std::int64_t step = g.spec.step();
  const std::int64_t per_hour = 3600 / step;
  const std::int64_t end = g.spec.start + g.spec.slots * step;
  ConditionalProfile cp;
  cp.metric = metric;
  cp.value.assign(7, std::vector<double>(24, 0.0));
  cp.n_obs.assign(7, std::vector<int>(24, 0));
  cp.skipped.assign(7, 0);
  std::int64_t days_used = 0;
  const std::int64_t first_day =
      detail::floor_div(g.spec.start + detail::kSecPerDay - 1, detail::kSecPerDay) *
      detail::kSecPerDay;
  for (std::int64_t e = first_day; e + detail::kSecPerDay <= end; e += detail::kSecPerDay) {
    const std::int64_t s0 = (e - g.spec.start) / step;
    if (metric == Metric::vol && s0 == 0) continue;  // first slot has no return
    double hours[24];
    double total = 0.0;
    for (int h = 0; h < 24; ++h) {
      double sum = 0.0;
      const std::int64_t hs = s0 + h * per_hour;
      for (std::int64_t k = 0; k < per_hour; ++k) sum += detail::slot_value(g, metric, hs + k);
      hours[h] = sum;
      total += sum;
    }
    const int weekday = coord_of(g.spec, s0).day;
    if (total == 0.0) {
      ++cp.skipped[weekday - 1];
      continue;
    }
    ++days_used;
    for (int h = 0; h < 24; ++h) {
      cp.value[weekday - 1][h] += 24.0 * hours[h] / total;
      ++cp.n_obs[weekday - 1][h];
    }
  }
  if (days_used == 0) throw data_error("hour_by_weekday: no usable complete day");
  for (int d = 0; d < 7; ++d)
    for (int h = 0; h < 24; ++h)
      cp.value[d][h] = cp.n_obs[d][h] ? cp.value[d][h] / cp.n_obs[d][h]
                                      : std::numeric_limits<double>::quiet_NaN();
  return cp;
}

// minute shares by hour of day: for every complete hour, each minute's metric
// over 1/60 of that hour's total, averaged across the sample.  Every row mean
// is exactly 1 up to rounding; zero-total hours are skipped and counted.
inline ConditionalProfile minute_by_hour(const MinuteGrid& g, Metric metric) {
  detail::require_rate_metric(metric, "minute_by_hour");
  const std::int64_t step = g.spec.step();
  const std::int64_t per_min = 60 / step;
  const std::int64_t end = g.spec.start + g.spec.slots * step;
  ConditionalProfile cp;
  cp.metric = metric;
  cp.value.assign(24, std::vector<double>(60, 0.0));
  cp.n_obs.assign(24, std::vector<int>(60, 0));
  cp.skipped.assign(24, 0);
  std::int64_t hours_used = 0;
  const std::int64_t first_hour = detail::floor_div(g.spec.start + 3599, 3600) * 3600;
  for (std::int64_t e = first_hour; e + 3600 <= end; e += 3600) {
    const std::int64_t s0 = (e - g.spec.start) / step;
    if (metric == Metric::vol && s0 == 0) continue;
    double minutes[60];
    double total = 0.0;
    for (int m = 0; m < 60; ++m) {
      double sum = 0.0;
      const std::int64_t ms = s0 + m * per_min;
      for (std::int64_t k = 0; k < per_min; ++k) sum += detail::slot_value(g, metric, ms + k);
      minutes[m] = sum;
      total += sum;
    }
    const int hour = coord_of(g.spec, s0).hour;
    if (total == 0.0) {
      ++cp.skipped[hour];
      continue;
    }
    ++hours_used;
    for (int m = 0; m < 60; ++m) {
      cp.value[hour][m] += 60.0 * minutes[m] / total;
      ++cp.n_obs[hour][m];
    }
  }
  if (hours_used == 0) throw data_error("minute_by_hour: no usable complete hour");
  for (int h = 0; h < 24; ++h)
    for (int m = 0; m < 60; ++m)
      cp.value[h][m] = cp.n_obs[h][m] ? cp.value[h][m] / cp.n_obs[h][m]
                                      : std::numeric_limits<double>::quiet_NaN();
  return cp;
}

}  // namespace perivol
