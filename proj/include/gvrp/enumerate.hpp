#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>

#include "gvrp/model.hpp"

namespace gvrp {

inline constexpr std::size_t kEnumerateMaxCustomers = 8;

class EnumerationBoundError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct EnumerationResult {
  Solution solution;  // evaluated
  double energy_kwh = 0.0;
  std::size_t sequences = 0;  // feasible ordered routes examined
};

// Global optimum over every partition of the customers into at most
// fleet_size ordered routes, each with its energy-optimal feasible speed
// assignment. nullopt when no feasible solution exists.
std::optional<EnumerationResult> enumerate_optimum(const Problem& problem);

}  // namespace gvrp
