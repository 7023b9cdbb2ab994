#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gvrp/energy.hpp"
#include "gvrp/instance.hpp"
#include "gvrp/simulator.hpp"

namespace gvrp {

// Index into EnergyCoefficients::levels(); 0 is the slowest speed.
using SpeedLevel = std::uint8_t;

struct BatteryLimits {
  double capacity_kwh = 50.228;
  double reserve_fraction = 0.10;

  double usable_kwh() const noexcept { return (1.0 - reserve_fraction) * capacity_kwh; }
  double reserve_kwh() const noexcept { return reserve_fraction * capacity_kwh; }
};

// Everything needed to evaluate a routing plan. Value type, shared read-only.
struct Problem {
  Instance instance;
  EnergyCoefficients coeffs;
  BatteryLimits battery{};
  double early_slack_minutes = 0.0;  // service may start this long before ready

  Problem(Instance inst, EnergyCoefficients c, BatteryLimits b = {}, double early_slack = 0.0);
  Problem(Instance inst, EnergyCoefficients c, const VehicleSpec& spec, double early_slack = 0.0);

  std::size_t level_count() const noexcept { return coeffs.level_count(); }
  SpeedLevel top_level() const noexcept { return static_cast<SpeedLevel>(coeffs.level_count() - 1); }
  double speed_kmh(SpeedLevel level) const { return coeffs.speed_kmh(level); }
};

// Customers are node indices 1..n; the depot is implicit at both ends, so a
// route with k customers has k+1 legs.
struct Route {
  std::vector<int> customers;
  std::vector<SpeedLevel> leg_speeds;

  std::size_t leg_count() const noexcept { return customers.empty() ? 0 : customers.size() + 1; }
  bool operator==(const Route&) const = default;
};

struct Visit {
  int node = 0;
  double arrival = 0.0;        // minutes since depot departure
  double service_start = 0.0;
  double departure = 0.0;
  double lateness = 0.0;       // arrival past due, 0 when on time
};

struct LegRecord {
  int from = 0;
  int to = 0;
  double distance_km = 0.0;
  double load_kg = 0.0;
  SpeedLevel speed = 0;
  double travel_minutes = 0.0;
  double energy_kwh = 0.0;
  double battery_after_kwh = 0.0;
};

struct Schedule {
  std::vector<Visit> visits;  // one per customer, then the depot return
  std::vector<LegRecord> legs;
  double energy_kwh = 0.0;
  double lateness_minutes = 0.0;  // summed over visits and the depot return
};

enum class ConstraintKind {
  VisitOnce,       // a customer is missing or served more than once
  FleetSize,       // more routes than vehicles
  EmptyRoute,      // a vehicle leaves without customers
  Capacity,        // departure load above capacity
  Battery,         // state of charge below the reserve
  DepotStartEnd,   // depot or unknown node inside a route
  SpeedChoice,     // not exactly one configured speed per leg
  TimeWindow,      // service after the due time or late depot return
};

std::string_view to_string(ConstraintKind kind);

struct Violation {
  ConstraintKind kind{};
  double magnitude = 0.0;  // kg, kWh, minutes, or a count
  int route = -1;
  int node = -1;

  bool operator==(const Violation&) const = default;
};

struct Solution {
  std::vector<Route> routes;
  std::vector<Schedule> schedules;  // parallel to routes once evaluated
  double total_energy = 0.0;
  std::vector<Violation> violations;

  bool feasible() const noexcept { return violations.empty(); }
};

// Load on each leg (empty for an empty route): the first leg carries the
// whole route demand, the last one nothing.
std::vector<double> route_loads(const Route& route, const Instance& instance);

// Forward simulation of one route: depart the depot at time 0, wait until
// ready minus the early slack, accumulate leg energies along the route.
Schedule schedule(const Route& route, const Problem& problem);

// Energy of the route; independent per vehicle.
double route_energy(const Route& route, const Problem& problem);
double total_energy(const Solution& solution, const Problem& problem);

std::vector<Violation> check_feasibility(const Solution& solution, const Problem& problem);

// Computes schedules, total energy and violations in place.
void evaluate(Solution& solution, const Problem& problem);

// Scratch-buffer evaluator used on hot paths (speed search, decoding).
struct RouteEval {
  std::vector<double> loads;       // per leg
  std::vector<double> arrival;     // per stop (customers, then depot)
  std::vector<double> start;       // service start per stop
  std::vector<double> lateness;    // per stop
  std::vector<double> leg_energy;  // per leg
  double energy = 0.0;
  double lateness_total = 0.0;
  double load = 0.0;               // departure load
  int first_late = -1;             // first stop with lateness, -1 if none
};

void evaluate_route(const Problem& problem,
                    std::span<const int> customers,
                    std::span<const SpeedLevel> speeds,
                    RouteEval& out);

}  // namespace gvrp
