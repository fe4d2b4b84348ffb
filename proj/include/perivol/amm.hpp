#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace perivol {

// constant-product pool: X units of quote (e.g. USDC) against Y units of base
// (e.g. ETH); the invariant K = X*Y is preserved by fee-free swaps.  fee is the
// proportional trading fee taken from the input side (0.003 on Uniswap v2).
struct PoolState {
  double reserve_quote = 0.0;  // X
  double reserve_base = 0.0;   // Y
  double fee = 0.003;
};

namespace detail {
inline void check_pool(const PoolState& p, const char* op) {
  if (!(p.reserve_quote > 0.0) || !(p.reserve_base > 0.0))
    throw std::domain_error(std::string(op) + ": pool reserves must be positive");
  if (!(p.fee >= 0.0) || !(p.fee < 1.0))
    throw std::domain_error(std::string(op) + ": fee must lie in [0, 1)");
}
inline void check_trade(double x_in, const char* op) {
  if (!(x_in > 0.0)) throw std::domain_error(std::string(op) + ": x_in must be positive");
}
}  // namespace detail

// marginal (infinitesimal) price of base in quote units: X / Y
inline double spot_price(const PoolState& p) {
  detail::check_pool(p, "spot_price");
  return p.reserve_quote / p.reserve_base;
}

// base units received for x_in quote units: the fee-reduced input moves the
// pool along the constant-product curve,
//   y_out = Y - K / (X + (1 - fee) * x_in)
inline double swap_out(const PoolState& p, double x_in) {
  detail::check_pool(p, "swap_out");
  detail::check_trade(x_in, "swap_out");
  const double k = p.reserve_quote * p.reserve_base;
  return p.reserve_base - k / (p.reserve_quote + (1.0 - p.fee) * x_in);
}

// volume-weighted price actually paid, x_in / y_out; in closed form
//   (1/(1-fee) + x_in/X) * (X/Y)
// which exceeds spot and grows linearly in trade size
inline double average_price(const PoolState& p, double x_in) {
  detail::check_pool(p, "average_price");
  detail::check_trade(x_in, "average_price");
  return (1.0 / (1.0 - p.fee) + x_in / p.reserve_quote) *
         (p.reserve_quote / p.reserve_base);
}

// relative execution-price drag versus the fee-adjusted spot:
//   slippage = (x_in / X) * (1 - fee)
inline double slippage(const PoolState& p, double x_in) {
  detail::check_pool(p, "slippage");
  detail::check_trade(x_in, "slippage");
  return x_in / p.reserve_quote * (1.0 - p.fee);
}

// pool state after swapping x_in quote units for base
inline PoolState apply_swap(const PoolState& p, double x_in) {
  const double y = swap_out(p, x_in);
  return PoolState{p.reserve_quote + x_in, p.reserve_base - y, p.fee};
}

}  // namespace perivol
