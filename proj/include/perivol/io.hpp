#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "perivol/csv.hpp"
#include "perivol/garch.hpp"
#include "perivol/grid.hpp"
#include "perivol/measures.hpp"
#include "perivol/periodicity.hpp"
#include "perivol/synthetic.hpp"

// result serialization: CSV for tabular outputs, JSON (schema-tagged) for
// structured reports.  NaN cells serialize as "nan" in CSV and null in JSON.

namespace perivol {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error(path + ": cannot open for writing");
  return out;
}

inline nlohmann::json json_num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace detail

// ---- periodic profiles ----

inline int bin_label(Scale scale, int idx) {
  return scale == Scale::day ? idx + 1 : idx;  // weekdays are 1..7, the rest 0-based
}

inline void write_profile_csv(const std::string& path, const PeriodicProfile& p) {
  auto out = detail::open_out(path);
  out << "bin,lambda,ci_low,ci_high,n_obs\n";  // skip counts live in the json form
  for (std::size_t b = 0; b < p.lambda.size(); ++b)
    out << bin_label(p.scale, static_cast<int>(b)) << ',' << format_double(p.lambda[b]) << ','
        << format_double(p.ci_low[b]) << ',' << format_double(p.ci_high[b]) << ','
        << p.n_obs[b] << '\n';
}

inline nlohmann::json profile_to_json(const PeriodicProfile& p, const std::string& market) {
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t b = 0; b < p.lambda.size(); ++b)
    bins.push_back({{"bin", bin_label(p.scale, static_cast<int>(b))},
                    {"lambda", detail::json_num(p.lambda[b])},
                    {"ci_low", detail::json_num(p.ci_low[b])},
                    {"ci_high", detail::json_num(p.ci_high[b])},
                    {"n_obs", p.n_obs[b]},
                    {"skipped", p.skipped[b]}});
  return {{"schema", "perivol.profile/1"},
          {"market", market},
          {"scale", scale_name(p.scale)},
          {"metric", metric_name(p.metric)},
          {"level", p.level},
          {"band", "logit-delta"},
          {"bins", bins}};
}

inline void write_conditional_csv(const std::string& path, const ConditionalProfile& cp,
                                  const char* outer_axis, const char* inner_axis,
                                  int outer_base) {
  auto out = detail::open_out(path);
  out << outer_axis << ',' << inner_axis << ",value,n_obs\n";
  for (std::size_t o = 0; o < cp.value.size(); ++o)
    for (std::size_t i = 0; i < cp.value[o].size(); ++i)
      out << (static_cast<int>(o) + outer_base) << ',' << i << ','
          << format_double(cp.value[o][i]) << ',' << cp.n_obs[o][i] << '\n';
}

inline nlohmann::json conditional_to_json(const ConditionalProfile& cp,
                                          const std::string& market, const char* outer_axis,
                                          const char* inner_axis, int outer_base) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t o = 0; o < cp.value.size(); ++o) {
    nlohmann::json vals = nlohmann::json::array();
    for (double v : cp.value[o]) vals.push_back(detail::json_num(v));
    rows.push_back({{outer_axis, static_cast<int>(o) + outer_base},
                    {"values", vals},
                    {"n_obs", cp.n_obs[o][0]},
                    {"skipped", cp.skipped[o]}});
  }
  return {{"schema", "perivol.conditional/1"},
          {"market", market},
          {"metric", metric_name(cp.metric)},
          {"outer", outer_axis},
          {"inner", inner_axis},
          {"rows", rows}};
}

// ---- realized variance ----

inline void write_rv_csv(const std::string& path, const DailyRV& rv) {
  auto out = detail::open_out(path);
  out << "date,rv,ann_vol_pct,n_returns,complete\n";
  for (std::size_t i = 0; i < rv.rv.size(); ++i)
    out << format_date(rv.epoch_day[i]) << ',' << format_double(rv.rv[i]) << ','
        << format_double(annualized_vol(rv.rv[i])) << ',' << rv.n_returns[i] << ','
        << int(rv.complete[i]) << '\n';
}

inline nlohmann::json rv_to_json(const DailyRV& rv, const std::string& market) {
  nlohmann::json days = nlohmann::json::array();
  for (std::size_t i = 0; i < rv.rv.size(); ++i)
    days.push_back({{"date", format_date(rv.epoch_day[i])},
                    {"rv", detail::json_num(rv.rv[i])},
                    {"ann_vol_pct", detail::json_num(annualized_vol(rv.rv[i]))},
                    {"n_returns", rv.n_returns[i]},
                    {"complete", bool(rv.complete[i])}});
  return {{"schema", "perivol.rv/1"}, {"market", market}, {"days", days}};
}

// ---- correlations ----

inline void write_corr_csv(const std::string& path, const CorrelationFunction& cf) {
  auto out = detail::open_out(path);
  out << "lag,rho,band,n_pairs\n";
  for (std::size_t h = 0; h < cf.rho.size(); ++h)
    out << h << ',' << format_double(cf.rho[h]) << ',' << format_double(cf.band[h]) << ','
        << cf.n_pairs[h] << '\n';
}

inline nlohmann::json corr_to_json(const CorrelationFunction& cf, const std::string& market) {
  nlohmann::json lags = nlohmann::json::array();
  for (std::size_t h = 0; h < cf.rho.size(); ++h)
    lags.push_back({{"lag", h},
                    {"rho", detail::json_num(cf.rho[h])},
                    {"band", detail::json_num(cf.band[h])},
                    {"n_pairs", cf.n_pairs[h]}});
  return {{"schema", "perivol.corr/1"},
          {"market", market},
          {"band", "white-noise 1.96/sqrt(n-h)"},
          {"lags", lags}};
}

inline void write_matrix_csv(const std::string& path,
                             const std::vector<std::vector<double>>& m,
                             const std::vector<std::string>& names) {
  auto out = detail::open_out(path);
  out << "series";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << names[i];
    for (double v : m[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

// ---- garch fits ----

inline nlohmann::json fit_to_json(const GarchFit& fit, const std::string& market) {
  nlohmann::json params;
  const detail::ParamMap map{fit.spec};
  const auto values = map.report_values(fit.params);
  for (std::size_t i = 0; i < fit.param_names.size(); ++i)
    params[fit.param_names[i]] = values[i];
  nlohmann::json se;
  for (std::size_t i = 0; i < fit.param_names.size(); ++i)
    se[fit.param_names[i]] = detail::json_num(fit.std_errors[i]);
  nlohmann::json j{{"schema", "perivol.garch_fit/1"},
                   {"market", market},
                   {"family", family_name(fit.spec.family)},
                   {"periodic", fit.spec.periodic},
                   {"mu", fit.params.mu},
                   {"omega", fit.params.omega},
                   {"alpha", fit.params.alpha},
                   {"beta", fit.params.beta},
                   {"tau", fit.params.tau},
                   {"gamma", fit.params.gamma},
                   {"lambda", fit.params.lambda},
                   {"params", params},
                   {"std_errors", se},
                   {"robust_se", "qmle-sandwich"},
                   {"loglik_in", fit.loglik_in},
                   {"n_in", fit.in_sample.size()},
                   {"iterations", fit.iterations},
                   {"converged", fit.converged},
                   {"grad_norm", fit.grad_norm},
                   {"rv_substituted", fit.rv_substituted}};
  return j;
}

// enough of a fit to filter and score new data
inline std::pair<ModelSpec, GarchParams> fit_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.family = parse_family(j.at("family").get<std::string>());
  spec.periodic = j.at("periodic").get<bool>();
  GarchParams p;
  p.mu = j.at("mu").get<double>();
  p.omega = j.at("omega").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.tau = j.at("tau").get<double>();
  p.gamma = j.at("gamma").get<double>();
  const auto lam = j.at("lambda");
  for (int d = 0; d < 7; ++d) p.lambda[d] = lam.at(d).get<double>();
  return {spec, p};
}

inline void write_variance_path_csv(const std::string& path, const DailyReturns& data,
                                    const std::vector<double>& h) {
  auto out = detail::open_out(path);
  out << "date,h,ann_vol_pct\n";
  for (std::size_t t = 0; t < h.size(); ++t)
    out << format_date(data.epoch_day[t]) << ',' << format_double(h[t]) << ','
        << format_double(std::sqrt(365.0 * h[t])) << '\n';
}

// ---- synthetic config + grid round trip ----

inline SyntheticSpec parse_synthetic_config(const nlohmann::json& j) {
  SyntheticSpec s;
  s.length_weeks = j.value("length_weeks", s.length_weeks);
  s.base_vol = j.value("base_vol", s.base_vol);
  s.seed = j.value("seed", s.seed);
  if (j.contains("start"))
    s.start = detail::floor_div(
        parse_timestamp_ms(j.at("start").get<std::string>(), "config start"), 1000);
  if (j.contains("resolution")) {
    const auto r = j.at("resolution").get<std::string>();
    if (r == "1m") s.resolution = Resolution::minute;
    else if (r == "1s") s.resolution = Resolution::second;
    else throw std::invalid_argument("config: resolution must be '1m' or '1s'");
  }
  auto fill = [&](const nlohmann::json& src, const char* key, auto& arr) {
    if (!src.contains(key)) return;
    const auto& a = src.at(key);
    if (a.size() != arr.size())
      throw std::invalid_argument(std::string("config: ") + key + " needs " +
                                  std::to_string(arr.size()) + " entries");
    for (std::size_t i = 0; i < arr.size(); ++i) arr[i] = a.at(i).get<double>();
  };
  fill(j, "day_factors", s.day_factors);
  fill(j, "hour_factors", s.hour_factors);
  fill(j, "minute_factors", s.minute_factors);
  if (j.contains("volume")) {
    const auto& v = j.at("volume");
    s.base_volume = v.value("base", s.base_volume);
    fill(v, "day_factors", s.volume_day);
    fill(v, "hour_factors", s.volume_hour);
    fill(v, "minute_factors", s.volume_minute);
  }
  return s;
}

inline SyntheticSpec load_synthetic_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path + ": invalid json: " + e.what());
  }
  return parse_synthetic_config(j);
}

// OHLCV form that load_ohlcv_csv reads back onto the identical grid
inline void write_grid_ohlcv_csv(const std::string& path, const MinuteGrid& g) {
  auto out = detail::open_out(path);
  out << "timestamp,open,high,low,close,volume\n";
  for (std::int64_t t = 0; t < g.spec.slots; ++t) {
    const std::string px = format_double(std::exp(g.log_price[t]));
    out << format_iso_utc(g.spec.epoch_of(t)) << ',' << px << ',' << px << ',' << px << ','
        << px << ',' << format_double(g.volume[t]) << '\n';
  }
}

}  // namespace perivol
