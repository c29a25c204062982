#include "herd/pricing.hpp"

#include <cmath>

#include <fmt/core.h>

#include "herd/error.hpp"

namespace herd {

void ControllerState::validate() const {
  if (fixed_demand < 0) throw ValidationError(fmt::format("fixed_demand must be >= 0, got {}", fixed_demand));
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(kappa)) {
    throw ValidationError("controller gains must be finite");
  }
}

std::int64_t compute_error(const ControllerState& state, std::int64_t agents_on) {
  return state.fixed_demand - agents_on;
}

PriceUpdate update_price(const ControllerState& state, std::int64_t error) {
  PriceUpdate out{0.0, state};
  const auto e = static_cast<double>(error);
  const auto e_prev = static_cast<double>(state.e_history);
  out.price = state.beta * state.pi_history + state.kappa * (e - state.alpha * e_prev);
  out.state.e_history = error;
  out.state.pi_history = out.price;
  return out;
}

}  // namespace herd
