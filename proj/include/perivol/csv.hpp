#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "perivol/errors.hpp"
#include "perivol/timegrid.hpp"

// small CSV / timestamp helpers shared by the loaders and writers.
// deliberately minimal: numeric OHLCV files, comma-separated, no quoting.

namespace perivol {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, const std::string& context) {
  s = trim(s);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw data_error(context + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

namespace detail {

inline int parse_int_field(std::string_view s, std::size_t pos, std::size_t len,
                           const std::string& context) {
  int v = 0;
  if (pos + len > s.size()) throw data_error(context);
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc{} || p != s.data() + pos + len) throw data_error(context);
  return v;
}

}  // namespace detail

// accepts "YYYY-MM-DD[T ]HH:MM[:SS][.fff][Z|+00:00]" (UTC) or integer epoch
// milliseconds; returns epoch milliseconds
inline std::int64_t parse_timestamp_ms(std::string_view raw, const std::string& context) {
  using namespace std::chrono;
  std::string_view s = trim(raw);
  if (s.empty()) throw data_error(context + ": empty timestamp");

  bool digits_only = true;
  for (char c : s)
    if (c < '0' || c > '9') { digits_only = false; break; }
  if (digits_only) {
    std::int64_t ms = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), ms);
    if (ec != std::errc{})
      throw data_error(context + ": cannot parse epoch milliseconds '" + std::string(s) + "'");
    return ms;
  }

  const std::string bad = context + ": cannot parse timestamp '" + std::string(s) + "'";
  int y = detail::parse_int_field(s, 0, 4, bad);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw data_error(bad);
  int mo = detail::parse_int_field(s, 5, 2, bad);
  int da = detail::parse_int_field(s, 8, 2, bad);
  int hh = 0, mi = 0, ss = 0, ms_frac = 0;
  if (s.size() > 10) {
    if (s[10] != 'T' && s[10] != ' ') throw data_error(bad);
    hh = detail::parse_int_field(s, 11, 2, bad);
    if (s.size() < 16 || s[13] != ':') throw data_error(bad);
    mi = detail::parse_int_field(s, 14, 2, bad);
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
      ss = detail::parse_int_field(s, pos + 1, 2, bad);
      pos += 3;
    }
    if (pos < s.size() && s[pos] == '.') {
      std::size_t end = pos + 1;
      while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
      if (end == pos + 1) throw data_error(bad);
      // keep millisecond precision, ignore finer digits
      std::string frac(s.substr(pos + 1, std::min<std::size_t>(3, end - pos - 1)));
      while (frac.size() < 3) frac += '0';
      ms_frac = detail::parse_int_field(frac, 0, 3, bad);
      pos = end;
    }
    if (pos < s.size()) {
      std::string_view tz = s.substr(pos);
      if (tz != "Z" && tz != "+00:00" && tz != "+0000")
        throw data_error(context + ": non-UTC timestamp '" + std::string(s) + "'");
    }
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(da)}};
  if (!ymd.ok()) throw data_error(bad);
  if (hh > 23 || mi > 59 || ss > 60) throw data_error(bad);
  if (ss == 60) ss = 59;  // leap-second markers collapse onto the previous second
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return ((days * 86400 + hh * 3600 + mi * 60 + ss) * 1000) + ms_frac;
}

inline std::string format_iso_utc(std::int64_t epoch_s) {
  using namespace std::chrono;
  const std::int64_t day = detail::floor_div(epoch_s, 86400);
  std::int64_t rem = epoch_s - day * 86400;
  year_month_day ymd{sys_days{days{day}}};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(rem / 3600),
                int(rem % 3600 / 60), int(rem % 60));
  return buf;
}

inline std::string format_date(std::int64_t epoch_day) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{epoch_day}}};
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

// shortest round-trip decimal form, locale independent
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace perivol
