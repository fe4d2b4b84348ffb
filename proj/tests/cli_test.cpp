#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "perivol/ingest.hpp"
#include "perivol/io.hpp"

using namespace perivol;
namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
  const char* bin = std::getenv("PERIVOL_CLI");
  REQUIRE(bin != nullptr);
  return bin;
}

int run_cli(const std::string& args) {
  const int st = std::system((cli_bin() + " " + args + " 2>/dev/null").c_str());
  REQUIRE(st != -1);
  return WEXITSTATUS(st);
}

std::string run_stdout(const std::string& args, int expect_exit = 0) {
  FILE* p = popen((cli_bin() + " " + args + " 2>/dev/null").c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int st = pclose(p);
  CHECK(WEXITSTATUS(st) == expect_exit);
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// scratch dir, fresh per test case
struct Scratch {
  fs::path dir;
  Scratch() : dir("cli_test_scratch") {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

void write_sim_spec(const std::string& path, int weeks, std::uint64_t seed) {
  nlohmann::json j{{"length_weeks", weeks},
                   {"base_vol", 5e-4},
                   {"seed", seed},
                   {"hour_factors", nlohmann::json::array()},
                   {"volume", {{"base", 250.0}}}};
  for (int h = 0; h < 24; ++h) j["hour_factors"].push_back(h >= 13 && h <= 15 ? 1.6 : 1.0);
  std::ofstream(path) << j.dump(2);
}

void write_garch_csv(const std::string& path, std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  double h = 0.1 / (1.0 - 0.9);
  double e_prev = 0.0;
  std::ofstream out(path);
  out << "date,return,rv\n";
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) h = 0.1 + 0.1 * e_prev * e_prev + 0.8 * h;
    const double r = std::sqrt(h) * z(rng);
    e_prev = r;
    const double rv = h * std::exp(0.15 * z(rng) - 0.01125);
    out << format_date(18540 + std::int64_t(t)) << ',' << format_double(r) << ','
        << format_double(rv) << '\n';
  }
}

}  // namespace

TEST_CASE("help and usage errors exit with status 0 and 1") {
  CHECK(run_cli("--help >/dev/null") == 0);
  CHECK(run_cli("profile --help >/dev/null") == 0);
  CHECK(run_cli("no-such-subcommand") == 1);
  CHECK(run_cli("profile") == 1);                       // missing --input
  CHECK(run_cli("amm-quote --x 1 --y 1") == 1);         // missing --in
  Scratch s;
  write_sim_spec(s / "spec.json", 1, 3);
  CHECK(run_cli("simulate --spec " + (s / "spec.json") + " --out " + (s / "") +
                " --market m >/dev/null") == 0);
  CHECK(run_cli("profile --input " + (s / "m_simulate.csv") + " --format xml") == 1);
  CHECK(run_cli("profile --input " + (s / "m_simulate.csv") + " --scale year") == 1);
  CHECK(run_cli("profile --input " + (s / "m_simulate.csv") + " --scale day --from x") == 1);
}

TEST_CASE("missing and malformed inputs exit with status 2") {
  CHECK(run_cli("profile --input not_here.csv --scale day") == 2);
  CHECK(run_cli("rv --input not_here.csv") == 2);
  CHECK(run_cli("garch-fit --input not_here.csv") == 2);
  Scratch s;
  std::ofstream(s / "bad.csv") << "nope\n1\n";
  CHECK(run_cli("profile --input " + (s / "bad.csv") + " --scale day") == 2);
}

TEST_CASE("amm-quote prints the worked quote on stdout") {
  const std::string out = run_stdout("amm-quote --x 20000 --y 10 --fee 0.003 --in 20000");
  CHECK(out ==
        "spot 2000\n"
        "y_out 4.992488733099649\n"
        "average_price 4006.018054162487\n"
        "slippage 0.997\n");
  CHECK(run_cli("amm-quote --x 0 --y 10 --in 5") == 1);  // empty pool is a usage error
}

TEST_CASE("simulate then profile emits the pinned csv contract") {
  Scratch s;
  write_sim_spec(s / "spec.json", 2, 11);
  REQUIRE(run_cli("simulate --spec " + (s / "spec.json") + " --out " + s.dir.string() +
                  " --market fix >/dev/null") == 0);
  REQUIRE(fs::exists(s / "fix_simulate.csv"));

  REQUIRE(run_cli("profile --input " + (s / "fix_simulate.csv") + " --scale minute --metric " +
                  "volatility --out " + s.dir.string() + " --market fix") == 0);
  const std::string csv = read_file(s / "fix_profile_minute.csv");
  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "bin,lambda,ci_low,ci_high,n_obs");
  int rows = 0;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 60);

  // hour-scale profile picks up the amplified afternoon hours
  REQUIRE(run_cli("profile --input " + (s / "fix_simulate.csv") + " --scale hour --out " +
                  s.dir.string() + " --market fix") == 0);
  const std::string hour_csv = read_file(s / "fix_profile_hour.csv");
  std::istringstream hl(hour_csv);
  std::getline(hl, line);
  double lam13 = 0.0, lam3 = 0.0;
  while (std::getline(hl, line)) {
    std::istringstream f(line);
    std::string bin, lam;
    std::getline(f, bin, ',');
    std::getline(f, lam, ',');
    if (bin == "13") lam13 = std::stod(lam);
    if (bin == "3") lam3 = std::stod(lam);
  }
  CHECK(lam13 > 1.2);
  CHECK(lam3 < 1.0);
}

TEST_CASE("outputs are byte-identical across reruns") {
  Scratch s;
  write_sim_spec(s / "spec.json", 1, 5);
  fs::create_directories(s / "a");
  fs::create_directories(s / "b");
  for (const std::string d : {"a", "b"}) {
    REQUIRE(run_cli("simulate --spec " + (s / "spec.json") + " --out " + (s / d) +
                    " --market m >/dev/null") == 0);
    REQUIRE(run_cli("profile --input " + (s / d) + "/m_simulate.csv --scale hour --out " +
                    (s / d) + " --market m") == 0);
    REQUIRE(run_cli("rv --input " + (s / d) + "/m_simulate.csv --out " + (s / d) +
                    " --market m --format json") == 0);
  }
  CHECK(read_file(s / "a/m_simulate.csv") == read_file(s / "b/m_simulate.csv"));
  CHECK(read_file(s / "a/m_profile_hour.csv") == read_file(s / "b/m_profile_hour.csv"));
  CHECK(read_file(s / "a/m_rv.json") == read_file(s / "b/m_rv.json"));
}

TEST_CASE("ingest-check reports grid coverage as json") {
  Scratch s;
  write_sim_spec(s / "spec.json", 1, 9);
  REQUIRE(run_cli("simulate --spec " + (s / "spec.json") + " --out " + s.dir.string() +
                  " --market m >/dev/null") == 0);
  const std::string out = run_stdout("ingest-check --input " + (s / "m_simulate.csv"));
  const nlohmann::json j = nlohmann::json::parse(out);
  CHECK(j["schema"] == "perivol.ingest_check/1");
  CHECK(j["slots"] == 7 * 1440);
  CHECK(j["observed"] == 7 * 1440);
  CHECK(j["filled"] == 0);
  CHECK(j["duplicates"] == 0);
  CHECK(j["resolution"] == "1m");
  CHECK(j["start"] == "2020-10-05T00:00:00Z");
}

TEST_CASE("rv, illiquidity, conditional and corr write their artifacts") {
  Scratch s;
  write_sim_spec(s / "spec.json", 2, 21);
  REQUIRE(run_cli("simulate --spec " + (s / "spec.json") + " --out " + s.dir.string() +
                  " --market m >/dev/null") == 0);
  const std::string grid = s / "m_simulate.csv";

  REQUIRE(run_cli("rv --input " + grid + " --out " + s.dir.string() + " --market m") == 0);
  const std::string rv_csv = read_file(s / "m_rv.csv");
  CHECK(rv_csv.rfind("date,rv,ann_vol_pct,n_returns,complete\n", 0) == 0);

  REQUIRE(run_cli("illiquidity --input " + grid + " --out " + s.dir.string() +
                  " --market m") == 0);
  CHECK(fs::exists(s / "m_illiquidity_hour.csv"));

  REQUIRE(run_cli("conditional --input " + grid + " --scale hour --out " + s.dir.string() +
                  " --market m") == 0);
  const std::string cond = read_file(s / "m_conditional_hour.csv");
  CHECK(cond.rfind("weekday,hour,value,n_obs\n", 0) == 0);

  REQUIRE(run_cli("conditional --input " + grid + " --scale minute --format json --out " +
                  s.dir.string() + " --market m") == 0);
  const nlohmann::json cj = nlohmann::json::parse(read_file(s / "m_conditional_minute.json"));
  CHECK(cj["schema"] == "perivol.conditional/1");
  CHECK(cj["outer"] == "hour");
  CHECK(cj["rows"].size() == 24);

  REQUIRE(run_cli("corr --input " + grid + " --max-lag 5 --out " + s.dir.string() +
                  " --market m") == 0);
  const std::string corr = read_file(s / "m_corr.csv");
  CHECK(corr.rfind("lag,rho,band,n_pairs\n", 0) == 0);
  // lag 0 of a series with itself is exactly 1
  CHECK(corr.find("\n0,1,") != std::string::npos);

  // profile file names carry the metric when it is not the default
  REQUIRE(run_cli("profile --input " + grid + " --scale day --metric volume --out " +
                  s.dir.string() + " --market m") == 0);
  CHECK(fs::exists(s / "m_profile_day-volume.csv"));

  // second-scale profile on a minute grid is a usage error
  CHECK(run_cli("profile --input " + grid + " --scale second") == 1);
  // illiq metric is hourly only
  CHECK(run_cli("profile --input " + grid + " --scale day --metric illiq") == 1);
}

TEST_CASE("garch-fit writes the full model report") {
  Scratch s;
  write_garch_csv(s / "daily.csv", 900, 42);
  REQUIRE(run_cli("garch-fit --input " + (s / "daily.csv") + " --family garch --split " +
                  "2022-05-28 --out " + s.dir.string() + " --market m") == 0);
  const nlohmann::json j = nlohmann::json::parse(read_file(s / "m_garch-fit.json"));
  CHECK(j["schema"] == "perivol.garch_fit/1");
  CHECK(j["family"] == "garch");
  CHECK(j["periodic"] == false);
  for (const char* k : {"mu", "omega", "alpha", "beta", "tau", "gamma", "loglik_in",
                        "loglik_os", "n_os", "grad_norm"})
    CHECK(j.contains(k));
  CHECK(j["lambda"].size() == 7);
  CHECK(j["converged"] == true);
  CHECK(j["robust_se"] == "qmle-sandwich");
  CHECK(j["params"].contains("omega"));
  CHECK(j["std_errors"].contains("beta"));
  CHECK(j["in_sample"]["from"] == "2020-10-05");
  CHECK(j["in_sample"]["to"] == "2022-05-28");
  CHECK(j["omega"].get<double>() > 0.0);
  CHECK(j["beta"].get<double>() > 0.5);

  const std::string path_csv = read_file(s / "m_garch-fit_path.csv");
  CHECK(path_csv.rfind("date,h,ann_vol_pct\n", 0) == 0);

  // scoring the held-out span reproduces loglik_os from the fit report
  REQUIRE(run_cli("garch-score --input " + (s / "daily.csv") + " --fit " +
                  (s / "m_garch-fit.json") + " --out " + s.dir.string() + " --market m") == 0);
  const nlohmann::json sc = nlohmann::json::parse(read_file(s / "m_garch-score.json"));
  CHECK(sc["schema"] == "perivol.garch_score/1");
  CHECK(sc["loglik"].get<double>() == j["loglik_os"].get<double>());
  CHECK(sc["n_obs"].get<int>() == j["n_os"].get<int>());
}

TEST_CASE("diverging parameters in a fit report exit with status 3") {
  Scratch s;
  write_garch_csv(s / "daily.csv", 400, 17);
  nlohmann::json fit{{"schema", "perivol.garch_fit/1"},
                     {"family", "egarch"},
                     {"periodic", false},
                     {"mu", 0.0},
                     {"omega", 50.0},
                     {"alpha", 0.1},
                     {"beta", 0.999},
                     {"tau", 0.0},
                     {"gamma", 0.0},
                     {"lambda", {0, 0, 0, 0, 0, 0, 0}},
                     {"in_sample", {{"from", "2020-10-05"}, {"to", "2021-06-01"}}}};
  std::ofstream(s / "fit.json") << fit.dump(2);
  CHECK(run_cli("garch-score --input " + (s / "daily.csv") + " --fit " + (s / "fit.json") +
                " --out " + s.dir.string()) == 3);
}

TEST_CASE("fit reports round-trip through json") {
  ModelSpec spec{GarchFamily::egarchx, true};
  GarchFit fit;
  fit.spec = spec;
  fit.params.mu = 0.04;
  fit.params.omega = -0.11;
  fit.params.alpha = 0.13;
  fit.params.beta = 0.9;
  fit.params.tau = -0.05;
  fit.params.gamma = 0.07;
  fit.params.lambda = {0.1, 0.05, 0.0, 0.05, 0.1, -0.15, -0.15};
  const detail::ParamMap map{spec};
  fit.param_names = map.report_names();
  fit.std_errors.assign(fit.param_names.size(), 0.01);
  fit.loglik_in = -123.5;

  const nlohmann::json j = fit_to_json(fit, "m");
  const auto [spec2, params2] = fit_from_json(j);
  CHECK(spec2.family == GarchFamily::egarchx);
  CHECK(spec2.periodic == true);
  CHECK(params2.mu == fit.params.mu);
  CHECK(params2.omega == fit.params.omega);
  CHECK(params2.alpha == fit.params.alpha);
  CHECK(params2.beta == fit.params.beta);
  CHECK(params2.tau == fit.params.tau);
  CHECK(params2.gamma == fit.params.gamma);
  for (int d = 0; d < 7; ++d) CHECK(params2.lambda[d] == fit.params.lambda[d]);
}

TEST_CASE("synthetic grids round-trip through the ohlcv writer") {
  SyntheticSpec spec;
  spec.length_weeks = 1;
  spec.seed = 31;
  const MinuteGrid g = simulate_periodic_grid(spec);
  const std::string path = "cli_test_roundtrip.csv";
  write_grid_ohlcv_csv(path, g);
  const MinuteGrid back = load_ohlcv_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.spec.slots == g.spec.slots);
  CHECK(back.spec.start == g.spec.start);
  CHECK(back.spec.resolution == g.spec.resolution);
  for (std::int64_t t = 0; t < g.spec.slots; ++t) {
    CHECK_THAT(back.log_price[t], Catch::Matchers::WithinAbs(g.log_price[t], 1e-12));
    CHECK(back.volume[t] == g.volume[t]);  // shortest round-trip formatting is exact
  }
}

TEST_CASE("profiles serialize to versioned json") {
  SyntheticSpec spec;
  spec.length_weeks = 2;
  spec.seed = 8;
  const MinuteGrid g = simulate_periodic_grid(spec);
  const PeriodicProfile p = relative_hour_profile(g, Metric::vol);
  const nlohmann::json j = profile_to_json(p, "mkt");
  CHECK(j["schema"] == "perivol.profile/1");
  CHECK(j["market"] == "mkt");
  CHECK(j["scale"] == "hour");
  CHECK(j["metric"] == "vol");
  CHECK(j["band"] == "logit-delta");
  CHECK(j["bins"].size() == 24);
  CHECK(j["bins"][0].contains("lambda"));
  CHECK(j["bins"][0].contains("ci_low"));
  CHECK(j["bins"][0].contains("n_obs"));
  CHECK(j["bins"][0].contains("skipped"));
}
