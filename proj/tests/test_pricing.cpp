#include <gtest/gtest.h>

#include <random>

#include "herd/error.hpp"
#include "herd/pricing.hpp"
#include "oracles.hpp"

using namespace herd;

TEST(Pricing, ComputeError) {
  ControllerState s;
  EXPECT_EQ(compute_error(s, 0), 180);
  EXPECT_EQ(compute_error(s, 180), 0);
  EXPECT_EQ(compute_error(s, 200), -20);
}

TEST(Pricing, HandComputedSteps) {
  ControllerState s;
  auto first = update_price(s, 180);
  EXPECT_NEAR(first.price, 18.0, 1e-12);
  EXPECT_EQ(first.state.e_history, 180);
  EXPECT_DOUBLE_EQ(first.state.pi_history, first.price);

  auto second = update_price(first.state, 100);
  EXPECT_NEAR(second.price, 0.99 * 18 + 0.1 * (100 + 4.01 * 180), 1e-12);
  EXPECT_NEAR(second.price, 100.0, 1e-9);

  ControllerState decay;
  decay.pi_history = 37.5;
  EXPECT_NEAR(update_price(decay, 0).price, 0.99 * 37.5, 1e-12);
}

TEST(Pricing, LinearFromZeroHistories) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::int64_t> d(-500, 500);
  const ControllerState zero;
  for (int i = 0; i < 100; ++i) {
    const auto e1 = d(gen), e2 = d(gen);
    EXPECT_NEAR(update_price(zero, e1 + e2).price, update_price(zero, e1).price + update_price(zero, e2).price, 1e-9);
  }
}

TEST(Pricing, GeometricDecayWithZeroError) {
  ControllerState s;
  s.pi_history = 250.0;
  double expected = 250.0;
  for (int i = 0; i < 100; ++i) {
    auto u = update_price(s, 0);
    expected *= 0.99;
    EXPECT_NEAR(u.price, expected, 1e-9);
    s = u.state;
  }
}

TEST(Pricing, MatchesScalarOracleOverRandomSteps) {
  std::mt19937_64 gen(31337);
  std::uniform_int_distribution<std::int64_t> d(-400, 400);
  ControllerState s;
  oracle::ScalarController o;
  for (int i = 0; i < 1000; ++i) {
    const auto e = d(gen);
    const auto u = update_price(s, e);
    EXPECT_NEAR(u.price, o.step(static_cast<double>(e)), 1e-9);
    s = u.state;
  }
}

TEST(Pricing, PureFunctionAndValidation) {
  const ControllerState s;
  const auto a = update_price(s, 42);
  const auto b = update_price(s, 42);
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(s, ControllerState{});

  ControllerState bad;
  bad.fixed_demand = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
  ControllerState nan_gain;
  nan_gain.kappa = std::numeric_limits<double>::infinity();
  EXPECT_THROW(nan_gain.validate(), ValidationError);
}
