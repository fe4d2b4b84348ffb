#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "perivol/amm.hpp"

using namespace perivol;

TEST_CASE("swap quote on the worked pool") {
  // X = 20000 USDC, Y = 10 ETH, fee 30 bps, swap 20000 USDC in
  const PoolState pool{20000.0, 10.0, 0.003};
  const double x_in = 20000.0;

  CHECK(spot_price(pool) == 2000.0);
  CHECK_THAT(swap_out(pool, x_in), Catch::Matchers::WithinRel(4.992488733099649, 1e-15));
  CHECK_THAT(average_price(pool, x_in),
             Catch::Matchers::WithinRel(4006.0180541624875, 1e-15));
  CHECK_THAT(slippage(pool, x_in), Catch::Matchers::WithinRel(0.997, 1e-15));
}

TEST_CASE("swap_out agrees with the direct curve evaluation") {
  // independent route: y_out = (1-f) x Y / (X + (1-f) x)
  std::mt19937_64 rng(20201005);
  std::uniform_real_distribution<double> res_q(1e2, 1e9);
  std::uniform_real_distribution<double> res_b(1e-3, 1e6);
  std::uniform_real_distribution<double> fee(0.0, 0.05);
  std::uniform_real_distribution<double> frac(1e-6, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const PoolState p{res_q(rng), res_b(rng), fee(rng)};
    const double x_in = frac(rng) * p.reserve_quote;
    const double f = p.fee;
    const double direct = (1.0 - f) * x_in * p.reserve_base /
                          (p.reserve_quote + (1.0 - f) * x_in);
    CHECK_THAT(swap_out(p, x_in), Catch::Matchers::WithinRel(direct, 1e-12));
    // outputs stay inside the pool
    CHECK(swap_out(p, x_in) > 0.0);
    CHECK(swap_out(p, x_in) < p.reserve_base);
  }
}

TEST_CASE("average price is the quote actually paid per base unit") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> res(1.0, 1e7);
  std::uniform_real_distribution<double> frac(1e-4, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const PoolState p{res(rng), res(rng), 0.003};
    const double x_in = frac(rng) * p.reserve_quote;
    CHECK_THAT(average_price(p, x_in),
               Catch::Matchers::WithinRel(x_in / swap_out(p, x_in), 1e-12));
    // fee makes execution strictly worse than spot
    CHECK(average_price(p, x_in) > spot_price(p));
  }
}

TEST_CASE("zero-fee swaps preserve the product invariant") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> res(0.5, 1e8);
  std::uniform_real_distribution<double> frac(1e-5, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const PoolState p{res(rng), res(rng), 0.0};
    const double x_in = frac(rng) * p.reserve_quote;
    const PoolState q = apply_swap(p, x_in);
    const double k0 = p.reserve_quote * p.reserve_base;
    const double k1 = q.reserve_quote * q.reserve_base;
    CHECK_THAT(k1, Catch::Matchers::WithinRel(k0, 1e-12));
  }
}

TEST_CASE("fees grow the invariant") {
  const PoolState p{20000.0, 10.0, 0.003};
  const PoolState q = apply_swap(p, 5000.0);
  CHECK(q.reserve_quote * q.reserve_base > p.reserve_quote * p.reserve_base);
  CHECK(q.fee == p.fee);
  CHECK(q.reserve_quote == p.reserve_quote + 5000.0);
}

TEST_CASE("slippage is linear in trade size") {
  const PoolState p{1e6, 500.0, 0.003};
  CHECK_THAT(slippage(p, 2e4), Catch::Matchers::WithinRel(0.02 * 0.997, 1e-15));
  CHECK_THAT(slippage(p, 4e4), Catch::Matchers::WithinRel(2.0 * slippage(p, 2e4), 1e-15));
  // small trades execute near the fee-adjusted spot: avg -> spot/(1-f)
  const double tiny = 1e-6;
  CHECK_THAT(average_price(p, tiny),
             Catch::Matchers::WithinRel(spot_price(p) / (1.0 - p.fee), 1e-9));
}

TEST_CASE("degenerate pools and trades are rejected") {
  CHECK_THROWS_AS(spot_price(PoolState{0.0, 10.0, 0.003}), std::domain_error);
  CHECK_THROWS_AS(spot_price(PoolState{10.0, -1.0, 0.003}), std::domain_error);
  CHECK_THROWS_AS(spot_price(PoolState{10.0, 10.0, 1.0}), std::domain_error);
  CHECK_THROWS_AS(spot_price(PoolState{10.0, 10.0, -0.1}), std::domain_error);
  const PoolState ok{10.0, 10.0, 0.003};
  CHECK_THROWS_AS(swap_out(ok, 0.0), std::domain_error);
  CHECK_THROWS_AS(swap_out(ok, -5.0), std::domain_error);
  CHECK_THROWS_AS(average_price(ok, 0.0), std::domain_error);
  CHECK_THROWS_AS(slippage(ok, std::nan("")), std::domain_error);
}
