// perivol: periodicity analytics for high-frequency market grids.
// one subcommand per analysis; results go to files under --out (amm-quote and
// ingest-check print to stdout), logs go to stderr.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "perivol/amm.hpp"
#include "perivol/garch.hpp"
#include "perivol/grid.hpp"
#include "perivol/ingest.hpp"
#include "perivol/io.hpp"
#include "perivol/measures.hpp"
#include "perivol/periodicity.hpp"
#include "perivol/synthetic.hpp"

namespace {

using namespace perivol;

struct RunConfig {
  std::vector<std::string> inputs;
  std::string columns;
  std::string resolution = "1m";
  std::string from, to;  // UTC, half-open [from, to)
  std::string scale = "day";
  std::string metric = "vol";
  std::string family = "garch";
  bool periodic = false;
  std::string split;  // last in-sample date (inclusive)
  double level = 0.95;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string format = "csv";
  std::string market;
  std::string config_path;  // simulate spec / garch-score fit report
  std::int64_t max_lag = 20;
};

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string market_of(const RunConfig& cfg) {
  if (!cfg.market.empty()) return cfg.market;
  if (!cfg.inputs.empty()) return stem_of(cfg.inputs[0]);
  return "out";
}

std::string out_path(const RunConfig& cfg, const std::string& name, const std::string& ext) {
  return (std::filesystem::path(cfg.out) / (market_of(cfg) + "_" + name + "." + ext)).string();
}

Resolution parse_resolution(const std::string& r) {
  if (r == "1m") return Resolution::minute;
  if (r == "1s") return Resolution::second;
  throw std::invalid_argument("--resolution must be 1m or 1s");
}

Metric parse_metric(const std::string& m) {
  if (m == "vol" || m == "volatility") return Metric::vol;
  if (m == "volume") return Metric::volume;
  if (m == "illiq") return Metric::illiq;
  throw std::invalid_argument("--metric must be vol, volume or illiq");
}

Scale parse_scale(const std::string& s) {
  if (s == "day") return Scale::day;
  if (s == "hour") return Scale::hour;
  if (s == "minute") return Scale::minute;
  if (s == "second") return Scale::second;
  throw std::invalid_argument("--scale must be day, hour, minute or second");
}

std::int64_t parse_epoch_s(const std::string& text, const char* flag) {
  try {
    return detail::floor_div(parse_timestamp_ms(text, flag), 1000);
  } catch (const data_error& e) {
    throw std::invalid_argument(e.what());  // bad flag value, not bad data
  }
}

MinuteGrid load_grid(const RunConfig& cfg, const std::string& path,
                     IngestStats* stats = nullptr) {
  MinuteGrid g = load_ohlcv_csv(path, parse_column_map(cfg.columns),
                                parse_resolution(cfg.resolution), stats);
  if (!cfg.from.empty() || !cfg.to.empty()) {
    const std::int64_t from =
        cfg.from.empty() ? g.spec.start : parse_epoch_s(cfg.from, "--from");
    const std::int64_t to = cfg.to.empty() ? g.spec.start + g.spec.slots * g.spec.step()
                                           : parse_epoch_s(cfg.to, "--to");
    if (from >= to) throw std::invalid_argument("--from must precede --to");
    g = slice(g, from, to);
  }
  return g;
}

void require_inputs(const RunConfig& cfg, std::size_t n, const char* sub) {
  if (cfg.inputs.size() < n)
    throw std::invalid_argument(std::string(sub) + ": needs at least " + std::to_string(n) +
                                " --input file(s)");
}

void log_wrote(const std::string& path) { std::cerr << "wrote " << path << "\n"; }

// ---- subcommands ----

void run_ingest_check(const RunConfig& cfg) {
  require_inputs(cfg, 1, "ingest-check");
  IngestStats stats;
  const MinuteGrid g = load_grid(cfg, cfg.inputs[0], &stats);
  std::int64_t observed = 0;
  for (auto o : g.observed) observed += o;
  nlohmann::json j{{"schema", "perivol.ingest_check/1"},
                   {"market", market_of(cfg)},
                   {"resolution", resolution_name(g.spec.resolution)},
                   {"slots", g.spec.slots},
                   {"start", format_iso_utc(g.spec.start)},
                   {"end", format_iso_utc(g.spec.start + g.spec.slots * g.spec.step())},
                   {"rows", stats.rows},
                   {"observed", observed},
                   {"filled", g.spec.slots - observed},
                   {"duplicates", stats.duplicates}};
  std::cout << j.dump(2) << "\n";
}

void run_rv(const RunConfig& cfg) {
  require_inputs(cfg, 1, "rv");
  const DailyRV rv = realized_variance(load_grid(cfg, cfg.inputs[0]));
  if (cfg.format == "json") {
    const std::string path = out_path(cfg, "rv", "json");
    detail::open_out(path) << rv_to_json(rv, market_of(cfg)).dump(2) << "\n";
    log_wrote(path);
  } else {
    const std::string path = out_path(cfg, "rv", "csv");
    write_rv_csv(path, rv);
    log_wrote(path);
  }
}

void run_corr(const RunConfig& cfg) {
  require_inputs(cfg, 1, "corr");
  std::vector<ReturnSeries> series;
  std::vector<std::string> names;
  for (const auto& path : cfg.inputs) {
    series.push_back(log_returns(load_grid(cfg, path)));
    names.push_back(stem_of(path));
  }
  for (std::size_t i = 1; i < series.size(); ++i)
    if (series[i].spec.start != series[0].spec.start ||
        series[i].spec.slots != series[0].spec.slots ||
        series[i].spec.resolution != series[0].spec.resolution)
      throw data_error("corr: input grids do not align (" + names[0] + " vs " + names[i] +
                       "); slice with --from/--to");
  const std::string market =
      cfg.market.empty() && names.size() > 1 ? names[0] + "-" + names[1] : market_of(cfg);
  if (series.size() <= 2) {
    const auto& a = series[0];
    const auto& b = series.size() == 2 ? series[1] : series[0];
    const CorrelationFunction cf = cross_correlation(a, b, cfg.max_lag);
    if (cfg.format == "json") {
      const std::string path = out_path(cfg, "corr", "json");
      detail::open_out(path) << corr_to_json(cf, market).dump(2) << "\n";
      log_wrote(path);
    } else {
      const std::string path = out_path(cfg, "corr", "csv");
      write_corr_csv(path, cf);
      log_wrote(path);
    }
    return;
  }
  const auto m = correlation_matrix(series);
  if (cfg.format == "json") {
    const std::string path = out_path(cfg, "corr_matrix", "json");
    detail::open_out(path) << nlohmann::json{{"schema", "perivol.corr_matrix/1"},
                                             {"market", market},
                                             {"names", names},
                                             {"matrix", m}}
                                  .dump(2)
                           << "\n";
    log_wrote(path);
  } else {
    const std::string path = out_path(cfg, "corr_matrix", "csv");
    write_matrix_csv(path, m, names);
    log_wrote(path);
  }
}

void write_profile_out(const RunConfig& cfg, const PeriodicProfile& p, const std::string& name) {
  if (cfg.format == "json") {
    const std::string path = out_path(cfg, name, "json");
    detail::open_out(path) << profile_to_json(p, market_of(cfg)).dump(2) << "\n";
    log_wrote(path);
  } else {
    const std::string path = out_path(cfg, name, "csv");
    write_profile_csv(path, p);
    log_wrote(path);
  }
}

void run_profile(const RunConfig& cfg) {
  require_inputs(cfg, 1, "profile");
  const Scale scale = parse_scale(cfg.scale);
  const Metric metric = parse_metric(cfg.metric);
  const MinuteGrid g = load_grid(cfg, cfg.inputs[0]);
  PeriodicProfile p;
  if (metric == Metric::illiq) {
    if (scale != Scale::hour)
      throw std::invalid_argument("profile: the illiq metric is hourly; use --scale hour");
    p = relative_illiquidity_hour(g, cfg.level);
  } else {
    switch (scale) {
      case Scale::day: p = relative_day_profile(g, metric, cfg.level); break;
      case Scale::hour: p = relative_hour_profile(g, metric, cfg.level); break;
      case Scale::minute: p = relative_minute_profile(g, metric, cfg.level); break;
      case Scale::second: p = relative_second_profile(g, metric, cfg.level); break;
    }
  }
  // metric suffix keeps vol and volume runs from clobbering each other
  const std::string name = std::string("profile_") + scale_name(scale) +
                           (metric == Metric::vol ? "" : std::string("-") + metric_name(metric));
  write_profile_out(cfg, p, name);
}

void run_illiquidity(const RunConfig& cfg) {
  require_inputs(cfg, 1, "illiquidity");
  const PeriodicProfile p = relative_illiquidity_hour(load_grid(cfg, cfg.inputs[0]), cfg.level);
  write_profile_out(cfg, p, "illiquidity_hour");
}

void run_conditional(const RunConfig& cfg) {
  require_inputs(cfg, 1, "conditional");
  const Scale scale = parse_scale(cfg.scale);
  const Metric metric = parse_metric(cfg.metric);
  const MinuteGrid g = load_grid(cfg, cfg.inputs[0]);
  const bool by_weekday = scale == Scale::hour;  // hour shares by weekday vs minute shares by hour
  if (scale != Scale::hour && scale != Scale::minute)
    throw std::invalid_argument("conditional: --scale must be hour (by weekday) or minute (by hour)");
  const ConditionalProfile cp = by_weekday ? hour_by_weekday(g, metric) : minute_by_hour(g, metric);
  const char* outer = by_weekday ? "weekday" : "hour";
  const char* inner = by_weekday ? "hour" : "minute";
  const int outer_base = by_weekday ? 1 : 0;
  const std::string name = std::string("conditional_") + scale_name(scale) +
                           (metric == Metric::vol ? "" : std::string("-") + metric_name(metric));
  if (cfg.format == "json") {
    const std::string path = out_path(cfg, name, "json");
    detail::open_out(path) << conditional_to_json(cp, market_of(cfg), outer, inner, outer_base)
                                  .dump(2)
                           << "\n";
    log_wrote(path);
  } else {
    const std::string path = out_path(cfg, name, "csv");
    write_conditional_csv(path, cp, outer, inner, outer_base);
    log_wrote(path);
  }
}

std::size_t index_after_date(const DailyReturns& data, std::int64_t epoch_day) {
  std::size_t i = 0;
  while (i < data.size() && data.epoch_day[i] <= epoch_day) ++i;
  return i;
}

void run_garch_fit(const RunConfig& cfg) {
  require_inputs(cfg, 1, "garch-fit");
  const DailyReturns data = load_daily_csv(cfg.inputs[0]);
  ModelSpec spec{parse_family(cfg.family), cfg.periodic};
  Span in_span{0, data.size()};
  if (!cfg.split.empty()) {
    in_span.end = index_after_date(data, parse_epoch_s(cfg.split, "--split") / 86400);
    if (in_span.end == 0) throw std::invalid_argument("--split predates the sample");
  }
  FitOptions opts;
  opts.seed = cfg.seed;
  const GarchFit fit = perivol::fit(spec, data, in_span, opts);
  nlohmann::json j = fit_to_json(fit, market_of(cfg));
  j["in_sample"] = {{"from", format_date(data.epoch_day[in_span.begin])},
                    {"to", format_date(data.epoch_day[in_span.end - 1])}};
  if (in_span.end < data.size()) {
    const Span os{in_span.end, data.size()};
    j["loglik_os"] = log_likelihood(spec, fit.params, data, os, in_span).total;
    j["n_os"] = os.size();
  }
  const std::string path = out_path(cfg, "garch-fit", "json");
  detail::open_out(path) << j.dump(2) << "\n";
  log_wrote(path);
  const std::string vpath = out_path(cfg, "garch-fit_path", "csv");
  write_variance_path_csv(vpath, data, fit.h_path);
  log_wrote(vpath);
}

void run_garch_score(const RunConfig& cfg) {
  require_inputs(cfg, 1, "garch-score");
  if (cfg.config_path.empty())
    throw std::invalid_argument("garch-score: needs --fit <fit report json>");
  std::ifstream in(cfg.config_path);
  if (!in) throw data_error(cfg.config_path + ": cannot open file");
  nlohmann::json jfit;
  try {
    in >> jfit;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(cfg.config_path + ": invalid json: " + e.what());
  }
  const auto [spec, params] = fit_from_json(jfit);
  const DailyReturns data = load_daily_csv(cfg.inputs[0]);
  if (!jfit.contains("in_sample"))
    throw data_error(cfg.config_path + ": fit report lacks in_sample dates");
  const std::int64_t in_from =
      detail::floor_div(parse_timestamp_ms(jfit["in_sample"]["from"].get<std::string>(),
                                           "in_sample.from"), 86400000);
  const std::int64_t in_to = detail::floor_div(
      parse_timestamp_ms(jfit["in_sample"]["to"].get<std::string>(), "in_sample.to"), 86400000);
  Span init{0, 0};
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (data.epoch_day[t] < in_from) init.begin = t + 1;
    if (data.epoch_day[t] <= in_to) init.end = t + 1;
  }
  if (init.begin >= init.end)
    throw data_error("garch-score: the data does not cover the fit's in-sample dates");
  Span eval{init.end, data.size()};
  if (!cfg.from.empty())
    eval.begin = index_after_date(data, parse_epoch_s(cfg.from, "--from") / 86400 - 1);
  if (!cfg.to.empty()) eval.end = index_after_date(data, parse_epoch_s(cfg.to, "--to") / 86400 - 1);
  if (eval.begin >= eval.end) throw std::invalid_argument("garch-score: empty evaluation span");
  const Loglik ll = log_likelihood(spec, params, data, eval, init);
  nlohmann::json j{{"schema", "perivol.garch_score/1"},
                   {"market", market_of(cfg)},
                   {"family", family_name(spec.family)},
                   {"periodic", spec.periodic},
                   {"loglik", ll.total},
                   {"n_obs", eval.size()},
                   {"from", format_date(data.epoch_day[eval.begin])},
                   {"to", format_date(data.epoch_day[eval.end - 1])}};
  const std::string path = out_path(cfg, "garch-score", "json");
  detail::open_out(path) << j.dump(2) << "\n";
  log_wrote(path);
}

void run_simulate(const RunConfig& cfg, bool seed_given) {
  if (cfg.config_path.empty()) throw std::invalid_argument("simulate: needs --config <json>");
  SyntheticSpec spec = load_synthetic_config(cfg.config_path);
  if (seed_given) spec.seed = cfg.seed;
  const MinuteGrid g = simulate_periodic_grid(spec);
  const std::string market = cfg.market.empty() ? "synthetic" : cfg.market;
  const std::string path =
      (std::filesystem::path(cfg.out) / (market + "_simulate.csv")).string();
  write_grid_ohlcv_csv(path, g);
  log_wrote(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodicity analytics for high-frequency market grids"};
  app.require_subcommand(1);
  app.set_config("--config");  // optional ini/toml defaults for any subcommand

  RunConfig cfg;
  double amm_x = 0, amm_y = 0, amm_fee = 0.003, amm_in = 0;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    auto* in = sub->add_option("--input", cfg.inputs, "input csv file(s)");
    if (needs_input) in->required();
    sub->add_option("--columns", cfg.columns, "column remap, e.g. close=price,timestamp=ts");
    sub->add_option("--resolution", cfg.resolution, "grid resolution: 1m or 1s");
    sub->add_option("--from", cfg.from, "span start, UTC, inclusive");
    sub->add_option("--to", cfg.to, "span end, UTC, exclusive");
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--format", cfg.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--market", cfg.market, "market name for output files");
    sub->add_option("--level", cfg.level, "confidence level");
    sub->add_option("--seed", cfg.seed, "rng seed");
  };

  auto* c_ingest = app.add_subcommand("ingest-check", "load a grid and print a summary");
  add_common(c_ingest, true);
  auto* c_rv = app.add_subcommand("rv", "daily realized variance");
  add_common(c_rv, true);
  auto* c_corr = app.add_subcommand("corr", "cross-correlation or correlation matrix");
  add_common(c_corr, true);
  c_corr->add_option("--max-lag", cfg.max_lag, "largest lag");
  auto* c_profile = app.add_subcommand("profile", "relative periodicity profile");
  add_common(c_profile, true);
  c_profile->add_option("--scale", cfg.scale, "day, hour, minute or second");
  c_profile->add_option("--metric", cfg.metric, "vol, volume or illiq");
  auto* c_illiq = app.add_subcommand("illiquidity", "hourly relative illiquidity profile");
  add_common(c_illiq, true);
  auto* c_cond = app.add_subcommand("conditional", "hour-by-weekday or minute-by-hour shares");
  add_common(c_cond, true);
  c_cond->add_option("--scale", cfg.scale, "hour (by weekday) or minute (by hour)");
  c_cond->add_option("--metric", cfg.metric, "vol or volume");
  auto* c_gfit = app.add_subcommand("garch-fit", "fit a daily conditional-variance model");
  add_common(c_gfit, true);
  c_gfit->add_option("--family", cfg.family, "garch, egarch or egarchx");
  c_gfit->add_flag("--periodic", cfg.periodic, "day-of-week effects");
  c_gfit->add_option("--split", cfg.split, "last in-sample date (inclusive)");
  auto* c_gscore = app.add_subcommand("garch-score", "score data under a saved fit");
  add_common(c_gscore, true);
  c_gscore->add_option("--fit", cfg.config_path, "fit report json from garch-fit");
  auto* c_amm = app.add_subcommand("amm-quote", "constant-product swap quote");
  c_amm->add_option("--x", amm_x, "quote reserve")->required();
  c_amm->add_option("--y", amm_y, "base reserve")->required();
  c_amm->add_option("--fee", amm_fee, "proportional fee");
  c_amm->add_option("--in", amm_in, "quote amount swapped in")->required();
  auto* c_sim = app.add_subcommand("simulate", "synthetic periodic grid to OHLCV csv");
  add_common(c_sim, false);
  auto* sim_spec = c_sim->add_option("--spec", cfg.config_path, "synthetic spec json");
  sim_spec->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (c_ingest->parsed()) run_ingest_check(cfg);
    else if (c_rv->parsed()) run_rv(cfg);
    else if (c_corr->parsed()) run_corr(cfg);
    else if (c_profile->parsed()) run_profile(cfg);
    else if (c_illiq->parsed()) run_illiquidity(cfg);
    else if (c_cond->parsed()) run_conditional(cfg);
    else if (c_gfit->parsed()) run_garch_fit(cfg);
    else if (c_gscore->parsed()) run_garch_score(cfg);
    else if (c_sim->parsed()) run_simulate(cfg, c_sim->count("--seed") > 0);
    else if (c_amm->parsed()) {
      const PoolState pool{amm_x, amm_y, amm_fee};
      std::cout << "spot " << format_double(spot_price(pool)) << "\n"
                << "y_out " << format_double(swap_out(pool, amm_in)) << "\n"
                << "average_price " << format_double(average_price(pool, amm_in)) << "\n"
                << "slippage " << format_double(slippage(pool, amm_in)) << "\n";
    }
  } catch (const data_error& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const std::underflow_error& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
