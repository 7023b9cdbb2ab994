#include "gvrp/lsa.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace gvrp {

namespace {

constexpr double kWaitEps = 1e-9;
constexpr double kLateEps = 1e-9;

// Legs that can bring stop `late` forward: those after the last stop before
// it where the vehicle waited, since arriving earlier there changes nothing.
std::size_t first_effective_leg(const RouteEval& ev, std::size_t late) {
  std::size_t lo = 0;
  for (std::size_t stop = 0; stop < late; ++stop) {
    if (ev.start[stop] > ev.arrival[stop] + kWaitEps) {
      lo = stop + 1;
    }
  }
  return lo;
}

// Re-times stops from `from` onward after a speed change on leg `from`;
// earlier stops are untouched. Returns the first late stop at or after
// `from`, or -1.
int retime_from(const Problem& problem, std::span<const int> customers,
                std::span<const SpeedLevel> speeds, std::size_t from, RouteEval& ev) {
  const auto& inst = problem.instance;
  const std::size_t k = customers.size();
  const std::size_t legs = k + 1;
  std::size_t prev = from == 0 ? 0 : static_cast<std::size_t>(customers[from - 1]);
  double t = from == 0 ? 0.0 : ev.start[from - 1] + inst.service_minutes(prev);
  int first_late = -1;
  for (std::size_t leg = from; leg < legs; ++leg) {
    const std::size_t node = leg < k ? static_cast<std::size_t>(customers[leg]) : 0;
    t += inst.distance(prev, node) / problem.speed_kmh(speeds[leg]) * 60.0;
    ev.arrival[leg] = t;
    if (first_late < 0 && t - inst.due_minutes(node) > kLateEps) {
      first_late = static_cast<int>(leg);
    }
    if (leg < k) {
      t = std::max(t, inst.ready_minutes(node) - problem.early_slack_minutes);
      ev.start[leg] = t;
      t += inst.service_minutes(node);
    } else {
      ev.start[leg] = t;
    }
    prev = node;
  }
  return first_late;
}

}  // namespace

void optimize_speeds(std::span<const int> customers, const Problem& problem, RouteEval& scratch,
                     SpeedAssignment& out) {
  const std::size_t legs = customers.empty() ? 0 : customers.size() + 1;
  const SpeedLevel top = problem.top_level();
  out.speeds.assign(legs, 0);
  evaluate_route(problem, customers, out.speeds, scratch);
  // Raising a leg only moves later stops, so the climb needs times alone;
  // energy is recomputed once at the end.
  int late_stop = scratch.first_late;
  bool changed = false;
  while (late_stop >= 0) {
    const auto late = static_cast<std::size_t>(late_stop);
    int pick = -1;
    double lightest = std::numeric_limits<double>::infinity();
    for (std::size_t leg = first_effective_leg(scratch, late); leg <= late; ++leg) {
      if (out.speeds[leg] < top && scratch.loads[leg] < lightest) {
        lightest = scratch.loads[leg];
        pick = static_cast<int>(leg);
      }
    }
    if (pick < 0) {
      break;  // window cannot be met at any speed
    }
    const auto raised = static_cast<std::size_t>(pick);
    ++out.speeds[raised];
    changed = true;
    late_stop = retime_from(problem, customers, out.speeds, raised, scratch);
  }
  if (changed) {
    evaluate_route(problem, customers, out.speeds, scratch);
  }
  out.energy_kwh = scratch.energy;
  out.feasible = scratch.first_late < 0 && scratch.energy <= problem.battery.usable_kwh() + 1e-9;
}

bool windows_met_at_top(std::span<const int> customers, const Problem& problem) {
  const auto& inst = problem.instance;
  const double speed = problem.speed_kmh(problem.top_level());
  double t = 0.0;
  std::size_t prev = 0;
  for (int c : customers) {
    const auto node = static_cast<std::size_t>(c);
    t += inst.distance(prev, node) / speed * 60.0;
    if (t - inst.due_minutes(node) > kLateEps) {
      return false;
    }
    t = std::max(t, inst.ready_minutes(node) - problem.early_slack_minutes) + inst.service_minutes(node);
    prev = node;
  }
  if (customers.empty()) {
    return true;
  }
  t += inst.distance(prev, 0) / speed * 60.0;
  return t - inst.due_minutes(0) <= kLateEps;
}

SpeedAssignment optimize_speeds(std::span<const int> customers, const Problem& problem) {
  RouteEval scratch;
  SpeedAssignment out;
  optimize_speeds(customers, problem, scratch, out);
  return out;
}

SpeedAssignment optimize_speeds(const Route& route, const Problem& problem) {
  return optimize_speeds(route.customers, problem);
}

namespace {

struct OracleSearch {
  const Problem& problem;
  std::span<const int> customers;
  std::size_t legs;
  std::vector<SpeedLevel> current;
  std::vector<SpeedLevel> best;
  double best_energy = std::numeric_limits<double>::infinity();
  double usable;

  double demand(std::size_t leg) const {
    return problem.instance.demand_kg(static_cast<std::size_t>(customers[leg]));
  }

  void dfs(std::size_t leg, double t, double acc, double energy, double load, std::size_t prev) {
    if (leg == legs) {
      if (energy < best_energy) {
        best_energy = energy;
        best = current;
      }
      return;
    }
    const auto& inst = problem.instance;
    const std::size_t node = leg < customers.size() ? static_cast<std::size_t>(customers[leg]) : 0;
    const double d = inst.distance(prev, node);
    for (std::size_t level = 0; level < problem.level_count(); ++level) {
      const Surface& surf = problem.coeffs.surface(level);
      const double a0 = leg == 0 ? surf(0.0, load) : acc;
      const double e = surf.leg_energy(load, a0, d);
      const double energy_next = energy + e;
      if (energy_next >= best_energy || energy_next > usable + 1e-9) {
        continue;
      }
      const double arrival = t + d / problem.speed_kmh(static_cast<SpeedLevel>(level)) * 60.0;
      if (arrival - inst.due_minutes(node) > 1e-9) {
        continue;  // later legs cannot repair this stop
      }
      current[leg] = static_cast<SpeedLevel>(level);
      if (node != 0) {
        const double start = std::max(arrival, inst.ready_minutes(node) - problem.early_slack_minutes);
        dfs(leg + 1, start + inst.service_minutes(node), a0 + e, energy_next,
            std::max(0.0, load - demand(leg)), node);
      } else {
        dfs(leg + 1, arrival, a0 + e, energy_next, load, node);
      }
    }
  }
};

}  // namespace

std::optional<SpeedAssignment> exhaustive_speed_oracle(std::span<const int> customers,
                                                       const Problem& problem) {
  const std::size_t legs = customers.empty() ? 0 : customers.size() + 1;
  if (legs > kOracleMaxLegs) {
    throw OracleBoundError("speed oracle supports at most " + std::to_string(kOracleMaxLegs) +
                           " legs, route has " + std::to_string(legs));
  }
  if (legs == 0) {
    return SpeedAssignment{{}, 0.0, true};
  }
  double load = 0.0;
  for (int c : customers) {
    load += problem.instance.demand_kg(static_cast<std::size_t>(c));
  }
  OracleSearch search{problem, customers, legs, std::vector<SpeedLevel>(legs, 0), {},
                      std::numeric_limits<double>::infinity(), problem.battery.usable_kwh()};
  search.dfs(0, 0.0, 0.0, 0.0, load, 0);
  if (search.best.empty()) {
    return std::nullopt;
  }
  RouteEval ev;
  evaluate_route(problem, customers, search.best, ev);
  return SpeedAssignment{search.best, ev.energy, true};
}

}  // namespace gvrp
