#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gvrp/model.hpp"

namespace gvrp {

struct SpeedAssignment {
  std::vector<SpeedLevel> speeds;
  double energy_kwh = 0.0;
  bool feasible = false;  // time windows and battery
};

// Load-first speed optimisation. Starts with every leg at the slowest level;
// while some stop is late, raises by one level the lightest-loaded leg that
// can still bring the first late stop forward (earliest leg on ties).
SpeedAssignment optimize_speeds(std::span<const int> customers, const Problem& problem);
SpeedAssignment optimize_speeds(const Route& route, const Problem& problem);

// Reusable-buffer variant for the solver's inner loop.
void optimize_speeds(std::span<const int> customers, const Problem& problem, RouteEval& scratch,
                     SpeedAssignment& out);

// Time windows alone, every leg at the top level. The load-first optimiser
// meets every window exactly when this holds.
bool windows_met_at_top(std::span<const int> customers, const Problem& problem);

class OracleBoundError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kOracleMaxLegs = 12;

// Minimum-energy assignment satisfying time windows and battery, by
// depth-first enumeration of all level combinations. nullopt when none is
// feasible. Throws OracleBoundError above kOracleMaxLegs legs.
std::optional<SpeedAssignment> exhaustive_speed_oracle(std::span<const int> customers,
                                                       const Problem& problem);

}  // namespace gvrp
