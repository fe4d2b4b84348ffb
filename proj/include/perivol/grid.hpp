#pragma once

#include <cstdint>
#include <vector>

#include "perivol/errors.hpp"
#include "perivol/timegrid.hpp"

namespace perivol {

// uniform price/volume sample grid (one-minute or one-second resolution).
// log_price is forward-filled over gaps; observed marks slots backed by data.
struct MinuteGrid {
  GridSpec spec;
  std::vector<double> log_price;
  std::vector<double> volume;
  std::vector<std::uint8_t> observed;

  std::int64_t size() const { return spec.slots; }
};

// restrict a grid to epoch-second range [from, to); throws if the selection is empty
inline MinuteGrid slice(const MinuteGrid& g, std::int64_t from, std::int64_t to) {
  const std::int64_t step = g.spec.step();
  auto ceil_div = [](std::int64_t a, std::int64_t b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
  };
  std::int64_t first = std::max<std::int64_t>(0, ceil_div(from - g.spec.start, step));
  std::int64_t last = std::min<std::int64_t>(g.spec.slots, ceil_div(to - g.spec.start, step));
  if (first >= last)
    throw data_error("slice: selected range [" + std::to_string(from) + "," +
                     std::to_string(to) + ") contains no grid slots");
  MinuteGrid out;
  out.spec = make_grid(g.spec.epoch_of(first), g.spec.resolution, last - first);
  out.log_price.assign(g.log_price.begin() + first, g.log_price.begin() + last);
  out.volume.assign(g.volume.begin() + first, g.volume.begin() + last);
  out.observed.assign(g.observed.begin() + first, g.observed.begin() + last);
  return out;
}

}  // namespace perivol
