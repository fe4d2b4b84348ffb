#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "perivol/grid.hpp"

namespace perivol {

// deterministic synthetic market with multiplicative day/hour/minute effects.
// factor vectors carry shape only — they are renormalized to geometric mean 1,
// so base_vol / base_volume fix the level.  day factors run Monday..Sunday.
struct SyntheticSpec {
  int length_weeks = 4;
  double base_vol = 1e-3;  // per-slot return sd before factors
  std::array<double, 7> day_factors{1, 1, 1, 1, 1, 1, 1};
  std::array<double, 24> hour_factors{};   // zero-init; fixed up to 1s below
  std::array<double, 60> minute_factors{};
  double base_volume = 1000.0;
  std::array<double, 7> volume_day{1, 1, 1, 1, 1, 1, 1};
  std::array<double, 24> volume_hour{};
  std::array<double, 60> volume_minute{};
  std::uint64_t seed = 1;
  std::int64_t start = 1601856000;  // 2020-10-05, a Monday 00:00 UTC
  Resolution resolution = Resolution::minute;

  SyntheticSpec() {
    hour_factors.fill(1.0);
    minute_factors.fill(1.0);
    volume_hour.fill(1.0);
    volume_minute.fill(1.0);
  }
};

namespace detail {

template <std::size_t N>
inline std::array<double, N> geo_normalized(const std::array<double, N>& f, const char* name) {
  double sum_log = 0.0;
  for (double v : f) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("synthetic: ") + name +
                                                " factors must be positive");
    sum_log += std::log(v);
  }
  const double gm = std::exp(sum_log / static_cast<double>(N));
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = f[i] / gm;
  return out;
}

}  // namespace detail

// simulate a grid whose returns are N(0, sigma^2) with
// sigma = base_vol * day * hour * minute factor of the slot, and whose volume
// is base_volume * (volume factors) * U(0.5, 1.5).  Returns are attached to
// their endpoint slot; slot 0 carries the initial price only.
inline MinuteGrid simulate_periodic_grid(const SyntheticSpec& spec) {
  if (spec.length_weeks < 1) throw std::invalid_argument("synthetic: length_weeks < 1");
  if (!(spec.base_vol > 0.0)) throw std::invalid_argument("synthetic: base_vol must be positive");
  if (!(spec.base_volume > 0.0)) throw std::invalid_argument("synthetic: base_volume must be positive");

  const auto fd = detail::geo_normalized(spec.day_factors, "day");
  const auto fh = detail::geo_normalized(spec.hour_factors, "hour");
  const auto fm = detail::geo_normalized(spec.minute_factors, "minute");
  const auto vd = detail::geo_normalized(spec.volume_day, "volume day");
  const auto vh = detail::geo_normalized(spec.volume_hour, "volume hour");
  const auto vm = detail::geo_normalized(spec.volume_minute, "volume minute");

  const std::int64_t per_week = detail::kSecPerWeek / step_seconds(spec.resolution);
  MinuteGrid g;
  g.spec = make_grid(spec.start, spec.resolution, spec.length_weeks * per_week);
  if (coord_of(g.spec, 0) != CalendarCoord{1, 1, 0, 0, 0})
    throw std::invalid_argument("synthetic: start must be a Monday 00:00 UTC");
  g.log_price.assign(g.spec.slots, 0.0);
  g.volume.assign(g.spec.slots, 0.0);
  g.observed.assign(g.spec.slots, 1);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.5, 1.5);

  g.log_price[0] = std::log(100.0);
  {
    const CalendarCoord c = coord_of(g.spec, 0);
    g.volume[0] = spec.base_volume * vd[c.day - 1] * vh[c.hour] * vm[c.minute] * u(rng);
  }
  for (std::int64_t t = 1; t < g.spec.slots; ++t) {
    const CalendarCoord c = coord_of(g.spec, t);
    const double sd = spec.base_vol * fd[c.day - 1] * fh[c.hour] * fm[c.minute];
    g.log_price[t] = g.log_price[t - 1] + sd * z(rng);
    g.volume[t] = spec.base_volume * vd[c.day - 1] * vh[c.hour] * vm[c.minute] * u(rng);
  }
  return g;
}

}  // namespace perivol
