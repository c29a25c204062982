#pragma once

#include <cstdint>

namespace herd {

/// Discrete price controller
///
///   price(k) = beta * price(k-1) + kappa * (e(k) - alpha * e(k-1))
///
/// where e = fixed_demand - agents_on. Histories start at zero. The output
/// is not clamped; negative prices fall to zero acceptance downstream.
struct ControllerState {
  double alpha = -4.01;
  double beta = 0.99;
  double kappa = 0.1;
  std::int64_t fixed_demand = 180;

  std::int64_t e_history = 0;
  double pi_history = 0.0;

  /// Throws ValidationError if fixed_demand < 0 or a gain is not finite.
  void validate() const;

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

struct PriceUpdate {
  double price = 0.0;
  ControllerState state;
};

[[nodiscard]] std::int64_t compute_error(const ControllerState& state, std::int64_t agents_on);

[[nodiscard]] PriceUpdate update_price(const ControllerState& state, std::int64_t error);

}  // namespace herd
