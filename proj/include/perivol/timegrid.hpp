#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace perivol {

// slot spacing of a sample grid, in seconds
enum class Resolution : std::int64_t { minute = 60, second = 1 };

inline constexpr std::int64_t step_seconds(Resolution r) {
  return static_cast<std::int64_t>(r);
}

inline constexpr const char* resolution_name(Resolution r) {
  return r == Resolution::minute ? "1m" : "1s";
}

namespace detail {
constexpr std::int64_t kSecPerDay = 86400;
constexpr std::int64_t kSecPerWeek = 7 * kSecPerDay;

inline constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

inline constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}
}  // namespace detail

// calendar coordinate (w, d, h, m[, s]) on the weekly cycle:
// d = 1 (Monday) .. 7 (Sunday), weeks start Monday 00:00 UTC and count from 1
// at the first week of the grid.  Coordinates are equivalence classes under
// wrap-around, e.g. (w, d, h, m) == (w-1, d+7, h, m); all functions here
// produce and expect the canonical representative (fields inside their ranges).
struct CalendarCoord {
  std::int64_t week = 1;
  int day = 1;     // 1..7, Monday..Sunday
  int hour = 0;    // 0..23
  int minute = 0;  // 0..59
  int second = 0;  // 0..59, always 0 on one-minute grids
  friend bool operator==(const CalendarCoord&, const CalendarCoord&) = default;
};

inline bool is_canonical(const CalendarCoord& c) {
  return c.week >= 1 && c.day >= 1 && c.day <= 7 && c.hour >= 0 && c.hour <= 23 &&
         c.minute >= 0 && c.minute <= 59 && c.second >= 0 && c.second <= 59;
}

inline std::string to_string(const CalendarCoord& c) {
  return "(w=" + std::to_string(c.week) + ",d=" + std::to_string(c.day) +
         ",h=" + std::to_string(c.hour) + ",m=" + std::to_string(c.minute) +
         (c.second ? ",s=" + std::to_string(c.second) : "") + ")";
}

// uniform UTC sample grid: `slots` samples starting at `start` (epoch seconds,
// aligned to the resolution step).  week_origin is the Monday 00:00 UTC at or
// before `start`; it anchors week 1 of the calendar coordinates.
struct GridSpec {
  std::int64_t start = 0;  // epoch seconds, UTC
  Resolution resolution = Resolution::minute;
  std::int64_t slots = 0;
  std::int64_t week_origin = 0;  // epoch seconds of week-1 Monday 00:00 UTC

  std::int64_t step() const { return step_seconds(resolution); }
  std::int64_t epoch_of(std::int64_t slot) const { return start + slot * step(); }
};

// 1970-01-05 (epoch day 4) was a Monday
inline std::int64_t monday_on_or_before(std::int64_t epoch_s) {
  const std::int64_t day = detail::floor_div(epoch_s, detail::kSecPerDay);
  return (day - detail::floor_mod(day - 4, 7)) * detail::kSecPerDay;
}

inline GridSpec make_grid(std::int64_t start_epoch_s, Resolution res, std::int64_t slots) {
  if (slots < 0) throw std::invalid_argument("grid: negative slot count");
  if (detail::floor_mod(start_epoch_s, step_seconds(res)) != 0)
    throw std::invalid_argument("grid: start " + std::to_string(start_epoch_s) +
                                " not aligned to " + resolution_name(res) + " step");
  return GridSpec{start_epoch_s, res, slots, monday_on_or_before(start_epoch_s)};
}

// calendar coordinate of a grid slot
inline CalendarCoord coord_of(const GridSpec& spec, std::int64_t slot) {
  if (slot < 0 || slot >= spec.slots)
    throw std::out_of_range("coord_of: slot " + std::to_string(slot) + " outside grid [0," +
                            std::to_string(spec.slots) + ")");
  std::int64_t off = spec.epoch_of(slot) - spec.week_origin;  // >= 0 by construction
  CalendarCoord c;
  c.week = off / detail::kSecPerWeek + 1;
  off %= detail::kSecPerWeek;
  c.day = static_cast<int>(off / detail::kSecPerDay) + 1;
  off %= detail::kSecPerDay;
  c.hour = static_cast<int>(off / 3600);
  off %= 3600;
  c.minute = static_cast<int>(off / 60);
  c.second = static_cast<int>(off % 60);
  return c;
}

// inverse of coord_of; the coordinate must be canonical and lie on the grid
inline std::int64_t slot_of(const GridSpec& spec, const CalendarCoord& c) {
  if (!is_canonical(c))
    throw std::out_of_range("slot_of: non-canonical coordinate " + to_string(c));
  const std::int64_t epoch = spec.week_origin + (c.week - 1) * detail::kSecPerWeek +
                             (c.day - 1) * detail::kSecPerDay + c.hour * 3600 +
                             c.minute * 60 + c.second;
  const std::int64_t off = epoch - spec.start;
  if (off % spec.step() != 0)
    throw std::out_of_range("slot_of: coordinate " + to_string(c) + " not on the " +
                            resolution_name(spec.resolution) + " grid");
  const std::int64_t slot = off / spec.step();
  if (slot < 0 || slot >= spec.slots)
    throw std::out_of_range("slot_of: coordinate " + to_string(c) + " outside grid span");
  return slot;
}

// shift a coordinate by a signed number of minutes, staying in week >= 1;
// the second component rides along unchanged.  Crossing below week 1 throws —
// that is the signal that a trailing window leaves the sample.
inline CalendarCoord shift(const CalendarCoord& c, std::int64_t minutes) {
  if (!is_canonical(c))
    throw std::out_of_range("shift: non-canonical coordinate " + to_string(c));
  const std::int64_t total =
      ((c.week - 1) * 7 + (c.day - 1)) * 1440 + c.hour * 60 + c.minute + minutes;
  if (total < 0)
    throw std::underflow_error("shift: " + to_string(c) + (minutes >= 0 ? "+" : "") +
                               std::to_string(minutes) + "m falls before week 1");
  CalendarCoord out;
  out.week = total / 10080 + 1;
  std::int64_t rem = total % 10080;
  out.day = static_cast<int>(rem / 1440) + 1;
  rem %= 1440;
  out.hour = static_cast<int>(rem / 60);
  out.minute = static_cast<int>(rem % 60);
  out.second = c.second;
  return out;
}

}  // namespace perivol
