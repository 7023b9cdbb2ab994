#include "gvrp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gvrp {

namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kEps = 1e-9;

}  // namespace

Problem::Problem(Instance inst, EnergyCoefficients c, BatteryLimits b, double early_slack)
  : instance(std::move(inst)), coeffs(std::move(c)), battery(b), early_slack_minutes(early_slack) {
  if (coeffs.level_count() == 0) {
    throw std::invalid_argument("problem needs at least one speed level");
  }
  if (coeffs.level_count() > 255) {
    throw std::invalid_argument("too many speed levels");
  }
  if (early_slack_minutes < 0.0) {
    throw std::invalid_argument("early delivery slack must be nonnegative");
  }
  if (!(battery.capacity_kwh > 0.0) || battery.reserve_fraction < 0.0 ||
      battery.reserve_fraction >= 1.0) {
    throw std::invalid_argument("invalid battery limits");
  }
}

Problem::Problem(Instance inst, EnergyCoefficients c, const VehicleSpec& spec, double early_slack)
  : Problem(std::move(inst), std::move(c), BatteryLimits{spec.battery_capacity(), spec.reserve_fraction},
            early_slack) {
}

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
  case ConstraintKind::VisitOnce: return "visit_once";
  case ConstraintKind::FleetSize: return "fleet_size";
  case ConstraintKind::EmptyRoute: return "empty_route";
  case ConstraintKind::Capacity: return "capacity";
  case ConstraintKind::Battery: return "battery";
  case ConstraintKind::DepotStartEnd: return "depot_start_end";
  case ConstraintKind::SpeedChoice: return "speed_choice";
  case ConstraintKind::TimeWindow: return "time_window";
  }
  return "unknown";
}

std::vector<double> route_loads(const Route& route, const Instance& instance) {
  std::vector<double> loads;
  if (route.customers.empty()) {
    return loads;
  }
  double load = 0.0;
  for (int c : route.customers) {
    load += instance.demand_kg(static_cast<std::size_t>(c));
  }
  loads.reserve(route.customers.size() + 1);
  loads.push_back(load);
  for (int c : route.customers) {
    load -= instance.demand_kg(static_cast<std::size_t>(c));
    loads.push_back(std::max(load, 0.0));
  }
  loads.back() = 0.0;
  return loads;
}

void evaluate_route(const Problem& problem,
                    std::span<const int> customers,
                    std::span<const SpeedLevel> speeds,
                    RouteEval& out) {
  const auto& inst = problem.instance;
  const std::size_t k = customers.size();
  const std::size_t legs = k == 0 ? 0 : k + 1;
  out.loads.resize(legs);
  out.arrival.resize(legs);
  out.start.resize(legs);
  out.lateness.resize(legs);
  out.leg_energy.resize(legs);
  out.energy = 0.0;
  out.lateness_total = 0.0;
  out.load = 0.0;
  out.first_late = -1;
  if (k == 0) {
    return;
  }

  double load = 0.0;
  for (int c : customers) {
    load += inst.demand_kg(static_cast<std::size_t>(c));
  }
  out.load = load;

  double t = 0.0;
  double acc = 0.0;  // cumulative energy on the surface scale
  std::size_t prev = 0;
  for (std::size_t leg = 0; leg < legs; ++leg) {
    const std::size_t node = leg < k ? static_cast<std::size_t>(customers[leg]) : 0;
    const double d = inst.distance(prev, node);
    const SpeedLevel level = speeds[leg];
    const Surface& surf = problem.coeffs.surface(level);
    if (leg == 0) {
      acc = surf(0.0, load);
    }
    out.loads[leg] = load;
    const double e = surf.leg_energy(load, acc, d);
    acc += e;
    out.leg_energy[leg] = e;
    out.energy += e;

    t += d / problem.speed_kmh(level) * 60.0;
    out.arrival[leg] = t;
    const double due = inst.due_minutes(node);
    const double late = t - due > kTimeEps ? t - due : 0.0;
    out.lateness[leg] = late;
    if (late > 0.0) {
      out.lateness_total += late;
      if (out.first_late < 0) {
        out.first_late = static_cast<int>(leg);
      }
    }
    if (leg < k) {
      const double open = inst.ready_minutes(node) - problem.early_slack_minutes;
      const double start = std::max(t, open);
      out.start[leg] = start;
      t = start + inst.service_minutes(node);
      load = std::max(0.0, load - inst.demand_kg(node));
    } else {
      out.start[leg] = t;
    }
    prev = node;
  }
}

Schedule schedule(const Route& route, const Problem& problem) {
  Schedule s;
  if (route.customers.empty()) {
    return s;
  }
  if (route.leg_speeds.size() != route.leg_count()) {
    throw std::invalid_argument("route needs exactly one speed per leg");
  }
  RouteEval ev;
  evaluate_route(problem, route.customers, route.leg_speeds, ev);
  const auto& inst = problem.instance;
  const std::size_t legs = route.leg_count();
  double battery = problem.battery.capacity_kwh;
  int prev = 0;
  for (std::size_t leg = 0; leg < legs; ++leg) {
    const int node = leg < route.customers.size() ? route.customers[leg] : 0;
    LegRecord rec;
    rec.from = prev;
    rec.to = node;
    rec.distance_km = inst.distance(static_cast<std::size_t>(prev), static_cast<std::size_t>(node));
    rec.load_kg = ev.loads[leg];
    rec.speed = route.leg_speeds[leg];
    rec.travel_minutes = rec.distance_km / problem.speed_kmh(rec.speed) * 60.0;
    rec.energy_kwh = ev.leg_energy[leg];
    battery -= rec.energy_kwh;
    rec.battery_after_kwh = battery;
    s.legs.push_back(rec);

    Visit v;
    v.node = node;
    v.arrival = ev.arrival[leg];
    v.service_start = ev.start[leg];
    v.departure = node == 0 ? v.service_start
                            : v.service_start + inst.service_minutes(static_cast<std::size_t>(node));
    v.lateness = ev.lateness[leg];
    s.visits.push_back(v);
    prev = node;
  }
  s.energy_kwh = ev.energy;
  s.lateness_minutes = ev.lateness_total;
  return s;
}

double route_energy(const Route& route, const Problem& problem) {
  if (route.customers.empty()) {
    return 0.0;
  }
  if (route.leg_speeds.size() != route.leg_count()) {
    throw std::invalid_argument("route needs exactly one speed per leg");
  }
  RouteEval ev;
  evaluate_route(problem, route.customers, route.leg_speeds, ev);
  return ev.energy;
}

double total_energy(const Solution& solution, const Problem& problem) {
  double sum = 0.0;
  for (const auto& r : solution.routes) {
    sum += route_energy(r, problem);
  }
  return sum;
}

namespace {

bool route_well_formed(const Route& route, const Problem& problem, int index,
                       std::vector<Violation>& out) {
  bool ok = true;
  const auto n = static_cast<int>(problem.instance.size());
  int bad_nodes = 0;
  for (int c : route.customers) {
    if (c <= 0 || c >= n) {
      ++bad_nodes;
    }
  }
  if (bad_nodes > 0) {
    out.push_back({ConstraintKind::DepotStartEnd, static_cast<double>(bad_nodes), index, -1});
    ok = false;
  }
  const auto expected = static_cast<double>(route.leg_count());
  const auto given = static_cast<double>(route.leg_speeds.size());
  int bad_levels = 0;
  for (SpeedLevel s : route.leg_speeds) {
    if (s >= problem.level_count()) {
      ++bad_levels;
    }
  }
  if (given != expected || bad_levels > 0) {
    out.push_back({ConstraintKind::SpeedChoice, std::abs(given - expected) + bad_levels, index, -1});
    ok = false;
  }
  return ok;
}

}  // namespace

std::vector<Violation> check_feasibility(const Solution& solution, const Problem& problem) {
  std::vector<Violation> out;
  const auto& inst = problem.instance;
  std::vector<int> seen(inst.size(), 0);
  int used = 0;
  RouteEval ev;

  for (std::size_t r = 0; r < solution.routes.size(); ++r) {
    const auto& route = solution.routes[r];
    const int ri = static_cast<int>(r);
    if (route.customers.empty()) {
      out.push_back({ConstraintKind::EmptyRoute, 1.0, ri, -1});
      continue;
    }
    ++used;
    const bool ok = route_well_formed(route, problem, ri, out);
    for (int c : route.customers) {
      if (c > 0 && c < static_cast<int>(inst.size())) {
        ++seen[static_cast<std::size_t>(c)];
      }
    }
    if (!ok) {
      continue;
    }
    evaluate_route(problem, route.customers, route.leg_speeds, ev);
    const double over = ev.load - inst.capacity_kg();
    if (over > kEps) {
      out.push_back({ConstraintKind::Capacity, over, ri, -1});
    }
    const double shortfall = ev.energy - problem.battery.usable_kwh();
    if (shortfall > kEps) {
      out.push_back({ConstraintKind::Battery, shortfall, ri, -1});
    }
    for (std::size_t stop = 0; stop < ev.lateness.size(); ++stop) {
      if (ev.lateness[stop] > 0.0) {
        const int node = stop < route.customers.size() ? route.customers[stop] : 0;
        out.push_back({ConstraintKind::TimeWindow, ev.lateness[stop], ri, node});
      }
    }
  }

  for (std::size_t c = 1; c < inst.size(); ++c) {
    if (seen[c] != 1) {
      const double mag = seen[c] == 0 ? 1.0 : static_cast<double>(seen[c] - 1);
      out.push_back({ConstraintKind::VisitOnce, mag, -1, static_cast<int>(c)});
    }
  }
  if (used > inst.fleet_size()) {
    out.push_back({ConstraintKind::FleetSize, static_cast<double>(used - inst.fleet_size()), -1, -1});
  }
  return out;
}

void evaluate(Solution& solution, const Problem& problem) {
  solution.violations = check_feasibility(solution, problem);
  solution.schedules.clear();
  solution.total_energy = 0.0;
  for (const auto& route : solution.routes) {
    const bool evaluable =
        !route.customers.empty() && route.leg_speeds.size() == route.leg_count() &&
        std::all_of(route.customers.begin(), route.customers.end(),
                    [&](int c) { return c > 0 && c < static_cast<int>(problem.instance.size()); }) &&
        std::all_of(route.leg_speeds.begin(), route.leg_speeds.end(),
                    [&](SpeedLevel s) { return s < problem.level_count(); });
    if (evaluable) {
      solution.schedules.push_back(schedule(route, problem));
      solution.total_energy += solution.schedules.back().energy_kwh;
    } else {
      solution.schedules.emplace_back();
    }
  }
}

}  // namespace gvrp
