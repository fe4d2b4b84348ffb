#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "perivol/csv.hpp"
#include "perivol/grid.hpp"

namespace perivol {

// maps the required logical columns onto the header names used by a file
struct ColumnMap {
  std::string timestamp = "timestamp";
  std::string open = "open";
  std::string high = "high";
  std::string low = "low";
  std::string close = "close";
  std::string volume = "volume";
};

// parse "close=price,timestamp=ts" style remaps
inline ColumnMap parse_column_map(std::string_view text) {
  ColumnMap m;
  if (trim(text).empty()) return m;
  for (std::string_view item : split_csv(text)) {
    item = trim(item);
    std::size_t eq = item.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("--columns: expected key=name, got '" + std::string(item) + "'");
    std::string_view key = trim(item.substr(0, eq));
    std::string name(trim(item.substr(eq + 1)));
    if (name.empty())
      throw std::invalid_argument("--columns: empty column name for '" + std::string(key) + "'");
    if (key == "timestamp") m.timestamp = name;
    else if (key == "open") m.open = name;
    else if (key == "high") m.high = name;
    else if (key == "low") m.low = name;
    else if (key == "close") m.close = name;
    else if (key == "volume") m.volume = name;
    else throw std::invalid_argument("--columns: unknown column key '" + std::string(key) + "'");
  }
  return m;
}

struct IngestStats {
  std::int64_t rows = 0;        // data rows parsed
  std::int64_t duplicates = 0;  // rows that landed on an already-filled slot
  std::int64_t filled = 0;      // gap slots forward-filled
};

namespace detail {

struct RawTick {
  std::int64_t epoch_s;
  double log_price;
  double volume;
};

// assemble a forward-filled grid from (slot-aligned) ticks kept in file order
inline MinuteGrid grid_from_ticks(const std::vector<RawTick>& ticks, Resolution res,
                                  IngestStats* stats) {
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& t : ticks) {
    lo = std::min(lo, t.epoch_s);
    hi = std::max(hi, t.epoch_s);
  }
  const std::int64_t step = step_seconds(res);
  MinuteGrid g;
  g.spec = make_grid(lo, res, (hi - lo) / step + 1);
  g.log_price.assign(g.spec.slots, 0.0);
  g.volume.assign(g.spec.slots, 0.0);
  g.observed.assign(g.spec.slots, 0);
  for (const auto& t : ticks) {
    const std::int64_t slot = (t.epoch_s - lo) / step;
    if (stats && g.observed[slot]) ++stats->duplicates;
    g.log_price[slot] = t.log_price;  // duplicates: last row wins
    g.volume[slot] = t.volume;
    g.observed[slot] = 1;
  }
  double last = g.log_price[0];  // slot 0 is observed (lo comes from the data)
  for (std::int64_t i = 1; i < g.spec.slots; ++i) {
    if (g.observed[i]) {
      last = g.log_price[i];
    } else {
      g.log_price[i] = last;  // carry price forward, volume stays 0
      if (stats) ++stats->filled;
    }
  }
  if (stats) stats->rows = static_cast<std::int64_t>(ticks.size());
  return g;
}

inline std::size_t require_column(const std::vector<std::string_view>& header,
                                  const std::string& name, const std::string& path) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == name) return i;
  throw data_error(path + ": missing required column '" + name + "'");
}

}  // namespace detail

// load an OHLCV csv onto a uniform grid; timestamps are floored to the
// resolution boundary, duplicate slots keep the last row, gaps are
// forward-filled with zero volume and observed=false
inline MinuteGrid load_ohlcv_csv(const std::string& path, const ColumnMap& cols = {},
                                 Resolution res = Resolution::minute,
                                 IngestStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw data_error(path + ": empty file");
  const auto header = split_csv(line);
  const std::size_t c_ts = detail::require_column(header, cols.timestamp, path);
  detail::require_column(header, cols.open, path);
  detail::require_column(header, cols.high, path);
  detail::require_column(header, cols.low, path);
  const std::size_t c_close = detail::require_column(header, cols.close, path);
  const std::size_t c_vol = detail::require_column(header, cols.volume, path);

  const std::int64_t step = step_seconds(res);
  std::vector<detail::RawTick> ticks;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() < header.size())
      throw data_error(where + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    const std::int64_t ms = parse_timestamp_ms(fields[c_ts], where);
    const std::int64_t epoch_s = detail::floor_div(ms, 1000 * step) * step;
    const double close = parse_double(fields[c_close], where + " close");
    if (!(close > 0.0) || !std::isfinite(close))
      throw data_error(where + ": non-positive close price " + format_double(close));
    const double vol = parse_double(fields[c_vol], where + " volume");
    if (vol < 0.0 || !std::isfinite(vol))
      throw data_error(where + ": negative volume " + format_double(vol));
    ticks.push_back({epoch_s, std::log(close), vol});
  }
  if (ticks.empty()) throw data_error(path + ": no data rows");
  return detail::grid_from_ticks(ticks, res, stats);
}

// one on-chain pool snapshot; volume_quote is 0 for files without that column
struct BlockRecord {
  std::int64_t number;
  std::int64_t epoch_s;
  double reserve_base;
  double reserve_quote;
  double volume_quote;
};

// columns: block_number, timestamp, reserve_base, reserve_quote[, volume_quote]
inline std::vector<BlockRecord> load_block_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw data_error(path + ": empty file");
  const auto header = split_csv(line);
  const std::size_t c_num = detail::require_column(header, "block_number", path);
  const std::size_t c_ts = detail::require_column(header, "timestamp", path);
  const std::size_t c_base = detail::require_column(header, "reserve_base", path);
  const std::size_t c_quote = detail::require_column(header, "reserve_quote", path);
  std::size_t c_vol = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == "volume_quote") c_vol = i;

  std::vector<BlockRecord> out;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() < header.size())
      throw data_error(where + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    BlockRecord r;
    r.number = static_cast<std::int64_t>(parse_double(fields[c_num], where + " block_number"));
    r.epoch_s = detail::floor_div(parse_timestamp_ms(fields[c_ts], where), 1000);
    r.reserve_base = parse_double(fields[c_base], where + " reserve_base");
    r.reserve_quote = parse_double(fields[c_quote], where + " reserve_quote");
    r.volume_quote = c_vol < header.size() ? parse_double(fields[c_vol], where + " volume_quote") : 0.0;
    if (!(r.reserve_base > 0.0) || !(r.reserve_quote > 0.0))
      throw data_error(where + ": non-positive reserves");
    if (r.volume_quote < 0.0) throw data_error(where + ": negative volume_quote");
    if (!out.empty()) {
      if (r.number <= out.back().number)
        throw data_error(where + ": block numbers not strictly increasing");
      if (r.epoch_s < out.back().epoch_s)
        throw data_error(where + ": block timestamps decrease");
    }
    out.push_back(r);
  }
  if (out.empty()) throw data_error(path + ": no data rows");
  return out;
}

// collapse per-block pool states to a one-minute grid: each minute takes the
// price implied by its last block (reserve_quote / reserve_base) and the sum
// of quote volume over its blocks; minutes without blocks are forward-filled
inline MinuteGrid blocks_to_minute_grid(const std::vector<BlockRecord>& blocks,
                                        IngestStats* stats = nullptr) {
  if (blocks.empty()) throw data_error("blocks_to_minute_grid: no records");
  std::vector<detail::RawTick> ticks;
  for (const auto& b : blocks) {
    const std::int64_t minute = detail::floor_div(b.epoch_s, 60) * 60;
    const double lp = std::log(b.reserve_quote / b.reserve_base);
    if (!ticks.empty() && ticks.back().epoch_s == minute) {
      ticks.back().log_price = lp;  // later block supersedes the price
      ticks.back().volume += b.volume_quote;
    } else {
      ticks.push_back({minute, lp, b.volume_quote});
    }
  }
  return detail::grid_from_ticks(ticks, Resolution::minute, stats);
}

}  // namespace perivol
