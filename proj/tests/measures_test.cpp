#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "perivol/measures.hpp"
#include "perivol/synthetic.hpp"

using namespace perivol;

namespace {

constexpr std::int64_t kMonday = 1601856000;  // 2020-10-05 00:00 UTC

MinuteGrid grid_from_prices(std::int64_t start, Resolution res,
                            const std::vector<double>& prices) {
  MinuteGrid g;
  g.spec = make_grid(start, res, static_cast<std::int64_t>(prices.size()));
  for (double p : prices) g.log_price.push_back(std::log(p));
  g.volume.assign(prices.size(), 1.0);
  g.observed.assign(prices.size(), 1);
  return g;
}

}  // namespace

TEST_CASE("log returns difference the log price at the requested step") {
  const MinuteGrid g = grid_from_prices(kMonday, Resolution::minute, {100, 110, 121, 133.1});
  const ReturnSeries r1 = log_returns(g);
  REQUIRE(r1.values.size() == 3);
  CHECK_THAT(r1.values[0], Catch::Matchers::WithinAbs(std::log(1.1), 1e-15));
  CHECK_THAT(r1.values[2], Catch::Matchers::WithinAbs(std::log(133.1 / 121.0), 1e-15));

  const ReturnSeries r2 = log_returns(g, 2);
  REQUIRE(r2.values.size() == 2);
  CHECK_THAT(r2.values[0], Catch::Matchers::WithinAbs(std::log(1.21), 1e-15));
  CHECK(r2.step == 2);

  CHECK_THROWS_AS(log_returns(g, 0), std::invalid_argument);
  CHECK_THROWS_AS(log_returns(g, 4), std::invalid_argument);
}

TEST_CASE("realized variance sums 288 five-minute squared returns per day") {
  // two full days, log price rising by delta each minute
  const std::int64_t slots = 2 * 1440 + 1;
  MinuteGrid g;
  g.spec = make_grid(kMonday, Resolution::minute, slots);
  const double delta = 1e-4;
  for (std::int64_t i = 0; i < slots; ++i) g.log_price.push_back(delta * double(i));
  g.volume.assign(slots, 1.0);
  g.observed.assign(slots, 1);

  const DailyRV rv = realized_variance(g);
  REQUIRE(rv.epoch_day.size() == 2);
  CHECK(rv.epoch_day[0] == kMonday / 86400);
  CHECK(rv.epoch_day[1] == kMonday / 86400 + 1);
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(rv.n_returns[d] == 288);
    CHECK(rv.complete[d] == 1);
    // each 5-minute return is exactly 5*delta
    CHECK_THAT(rv.rv[d], Catch::Matchers::WithinRel(288.0 * 25.0 * delta * delta, 1e-12));
  }
}

TEST_CASE("partial days are kept but flagged incomplete") {
  // start 23:00, so day one has 12 five-minute marks and day two is complete
  const std::int64_t start = kMonday + 23 * 3600;
  const std::int64_t slots = 60 + 1440 + 1;
  MinuteGrid g;
  g.spec = make_grid(start, Resolution::minute, slots);
  for (std::int64_t i = 0; i < slots; ++i) g.log_price.push_back(1e-3 * double(i));
  g.volume.assign(slots, 1.0);
  g.observed.assign(slots, 1);

  const DailyRV rv = realized_variance(g);
  REQUIRE(rv.epoch_day.size() == 2);
  CHECK(rv.n_returns[0] == 12);
  CHECK(rv.complete[0] == 0);
  CHECK(rv.n_returns[1] == 288);
  CHECK(rv.complete[1] == 1);
}

TEST_CASE("realized variance rejects unusable grids") {
  const MinuteGrid g = grid_from_prices(kMonday, Resolution::minute,
                                        std::vector<double>(100, 50.0));
  CHECK_THROWS_AS(realized_variance(g), data_error);  // no complete day
  MinuteGrid s;
  s.spec = make_grid(kMonday, Resolution::second, 200000);
  s.log_price.assign(200000, 0.0);
  s.volume.assign(200000, 1.0);
  s.observed.assign(200000, 1);
  CHECK_THROWS_AS(realized_variance(s), std::invalid_argument);  // wrong resolution
}

TEST_CASE("mean realized variance matches iid Gaussian returns") {
  // prices follow a random walk with known per-minute sigma; the 5-minute
  // returns have variance 5 sigma^2, so E[RV] = 288 * 5 sigma^2
  const double sigma = 2e-4;
  const std::int64_t days = 300;
  const std::int64_t slots = days * 1440 + 1;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, sigma);
  MinuteGrid g;
  g.spec = make_grid(kMonday, Resolution::minute, slots);
  g.log_price.resize(slots);
  for (std::int64_t i = 1; i < slots; ++i) g.log_price[i] = g.log_price[i - 1] + noise(rng);
  g.volume.assign(slots, 1.0);
  g.observed.assign(slots, 1);

  const DailyRV rv = realized_variance(g);
  REQUIRE(std::int64_t(rv.rv.size()) == days);
  const double mean = std::accumulate(rv.rv.begin(), rv.rv.end(), 0.0) / double(days);
  const double expect = 288.0 * 5.0 * sigma * sigma;
  // MC standard error of the mean of day RVs: sd(RV)/sqrt(days), sd = sqrt(2/288)*E
  const double se = std::sqrt(2.0 / 288.0) * expect / std::sqrt(double(days));
  CHECK(std::abs(mean - expect) < 3.0 * se);
}

TEST_CASE("annualization is exact at the calibration point") {
  // rv = 1/365 annualizes to exactly 100 percent
  CHECK(annualized_vol(1.0 / 365.0) == 100.0);
  CHECK(annualized_vol(0.0) == 0.0);
  CHECK_THAT(annualized_vol(4.0 / 365.0), Catch::Matchers::WithinRel(200.0, 1e-15));
  CHECK_THROWS_AS(annualized_vol(-1e-9), std::domain_error);
}

TEST_CASE("autocorrelation of a series with itself is exactly 1 at lag 0") {
  const std::int64_t slots = 5000;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.0);
  MinuteGrid g;
  g.spec = make_grid(kMonday, Resolution::minute, slots);
  g.log_price.resize(slots);
  for (std::int64_t i = 1; i < slots; ++i) g.log_price[i] = g.log_price[i - 1] + noise(rng);
  g.volume.assign(slots, 1.0);
  g.observed.assign(slots, 1);

  const ReturnSeries r = log_returns(g);
  const CorrelationFunction cf = cross_correlation(r, r, 20);
  REQUIRE(cf.rho.size() == 21);
  CHECK(cf.rho[0] == 1.0);
  CHECK(cf.n_pairs[0] == std::int64_t(r.values.size()));
  CHECK(cf.n_pairs[20] == std::int64_t(r.values.size()) - 20);
  // white-noise bands shrink with the pair count
  for (std::size_t h = 0; h <= 20; ++h)
    CHECK_THAT(cf.band[h],
               Catch::Matchers::WithinRel(1.96 / std::sqrt(double(cf.n_pairs[h])), 1e-14));
  // iid increments: everything beyond lag 0 inside the band (generous x1.5)
  for (std::size_t h = 1; h <= 20; ++h) CHECK(std::abs(cf.rho[h]) < 1.5 * cf.band[h]);
}

TEST_CASE("cross correlation matches a hand-rolled Pearson oracle") {
  const std::vector<double> xs{0.3, -0.1, 0.7, 0.2, -0.5, 0.9, 0.0, -0.3, 0.4, 0.1,
                               -0.2, 0.6, -0.7, 0.8, 0.05, -0.15, 0.25, -0.35, 0.45, 0.55};
  const std::int64_t n = static_cast<std::int64_t>(xs.size());
  MinuteGrid a, b;
  a.spec = b.spec = make_grid(kMonday, Resolution::minute, n + 1);
  a.log_price.assign(n + 1, 0.0);
  b.log_price.assign(n + 1, 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    a.log_price[i + 1] = a.log_price[i] + xs[i];
    b.log_price[i + 1] = b.log_price[i] + xs[n - 1 - i];  // reversed copy
  }
  a.volume = b.volume = std::vector<double>(n + 1, 1.0);
  a.observed = b.observed = std::vector<std::uint8_t>(n + 1, 1);

  const ReturnSeries ra = log_returns(a), rb = log_returns(b);
  const CorrelationFunction cf = cross_correlation(ra, rb, 1);

  auto pearson = [&](std::int64_t lag) {
    const std::int64_t m = n - lag;
    double mx = 0, my = 0;
    for (std::int64_t i = 0; i < m; ++i) {
      mx += xs[i];
      my += xs[n - 1 - (i + lag)];
    }
    mx /= double(m);
    my /= double(m);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::int64_t i = 0; i < m; ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      syy += (xs[n - 1 - (i + lag)] - my) * (xs[n - 1 - (i + lag)] - my);
      sxy += (xs[i] - mx) * (xs[n - 1 - (i + lag)] - my);
    }
    return sxy / std::sqrt(sxx * syy);
  };
  CHECK_THAT(cf.rho[0], Catch::Matchers::WithinAbs(pearson(0), 1e-12));
  CHECK_THAT(cf.rho[1], Catch::Matchers::WithinAbs(pearson(1), 1e-12));
}

TEST_CASE("lagged copies produce unit correlation at the lag") {
  const std::int64_t slots = 1000;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 1.0);
  MinuteGrid a;
  a.spec = make_grid(kMonday, Resolution::minute, slots);
  a.log_price.resize(slots);
  for (std::int64_t i = 1; i < slots; ++i) a.log_price[i] = a.log_price[i - 1] + noise(rng);
  a.volume.assign(slots, 1.0);
  a.observed.assign(slots, 1);
  MinuteGrid b = a;  // b lags a by 3 slots: b[t] = a[t-3]
  for (std::int64_t i = slots - 1; i >= 3; --i) b.log_price[i] = a.log_price[i - 3];
  for (std::int64_t i = 0; i < 3; ++i) b.log_price[i] = a.log_price[0];

  const CorrelationFunction cf = cross_correlation(log_returns(a), log_returns(b), 6);
  CHECK(cf.rho[3] > 0.99);
  CHECK(std::abs(cf.rho[5]) < 0.2);
}

TEST_CASE("correlation matrix is symmetric with unit diagonal") {
  const std::int64_t slots = 2000;
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<ReturnSeries> series;
  std::vector<double> common(slots);
  for (auto& v : common) v = noise(rng);
  for (int k = 0; k < 3; ++k) {
    MinuteGrid g;
    g.spec = make_grid(kMonday, Resolution::minute, slots);
    g.log_price.resize(slots);
    for (std::int64_t i = 1; i < slots; ++i)
      g.log_price[i] = g.log_price[i - 1] + 0.5 * common[i] + noise(rng);
    g.volume.assign(slots, 1.0);
    g.observed.assign(slots, 1);
    series.push_back(log_returns(g));
  }
  const auto m = correlation_matrix(series);
  REQUIRE(m.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m[i][i] == 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(m[i][j] == m[j][i]);
      CHECK(std::abs(m[i][j]) <= 1.0);
    }
  }
  // the shared factor induces clearly positive co-movement
  CHECK(m[0][1] > 0.1);
}

TEST_CASE("misaligned series are rejected") {
  MinuteGrid a, b;
  a.spec = make_grid(kMonday, Resolution::minute, 300);
  b.spec = make_grid(kMonday + 60, Resolution::minute, 300);
  a.log_price.assign(300, 0.0);
  b.log_price.assign(300, 0.0);
  for (std::int64_t i = 0; i < 300; ++i) {
    a.log_price[i] = double(i % 7);
    b.log_price[i] = double(i % 5);
  }
  a.volume = b.volume = std::vector<double>(300, 1.0);
  a.observed = b.observed = std::vector<std::uint8_t>(300, 1);
  CHECK_THROWS_AS(cross_correlation(log_returns(a), log_returns(b), 5),
                  std::invalid_argument);
  // max_lag bounded by a tenth of the series
  CHECK_THROWS_AS(cross_correlation(log_returns(a), log_returns(a), 30),
                  std::invalid_argument);
  CHECK_THROWS_AS(cross_correlation(log_returns(a), log_returns(a), -1),
                  std::invalid_argument);
}

TEST_CASE("constant series have no defined correlation") {
  MinuteGrid g = grid_from_prices(kMonday, Resolution::minute,
                                  std::vector<double>(500, 42.0));
  const ReturnSeries r = log_returns(g);
  CHECK_THROWS_AS(cross_correlation(r, r, 5), data_error);
}
