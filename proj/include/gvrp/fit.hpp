#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "gvrp/energy.hpp"
#include "gvrp/simulator.hpp"

namespace gvrp {

class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct FitPoint {
  double distance_km = 0.0;
  double load_kg = 0.0;
  double energy_kwh = 0.0;
};

// Least-squares fit of the quadratic surface per speed level.
EnergyCoefficients fit_coefficients(const std::map<int, std::vector<FitPoint>>& samples_by_speed);

struct FitPlan {
  std::vector<int> speeds_kmh{40, 50, 60};
  int load_levels = 5;  // equally spaced from empty to full payload
  DriveCycleConfig cycle{};
  double max_distance_km = 2000.0;  // upper bound; runs usually end at the battery reserve
};

struct SimulationSet {
  int speed_kmh = 0;
  double load_kg = 0.0;
  std::vector<SimSample> trace;
};

std::vector<double> plan_loads(const VehicleSpec& spec, int load_levels);

// Runs every (speed, load) drive cycle of the plan.
std::vector<SimulationSet> simulate_plan(const VehicleSpec& spec, const FitPlan& plan);

std::map<int, std::vector<FitPoint>> to_fit_points(const std::vector<SimulationSet>& runs);

// simulate_plan + fit_coefficients.
EnergyCoefficients build_coefficients(const VehicleSpec& spec, const FitPlan& plan = {});

// Finite-difference check that the surface of every level increases in
// distance and does not decrease in load over [0, max_km] x [0, max_kg].
bool surfaces_monotone(const EnergyCoefficients& coeffs, double max_km, double max_kg,
                       int grid = 25);

}  // namespace gvrp
