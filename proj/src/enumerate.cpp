#include "gvrp/enumerate.hpp"

#include <limits>
#include <string>
#include <vector>

#include "gvrp/lsa.hpp"

namespace gvrp {

namespace {

struct BestRoute {
  double energy = std::numeric_limits<double>::infinity();
  std::vector<int> customers;
  std::vector<SpeedLevel> speeds;
};

class SequenceSearch {
public:
  SequenceSearch(const Problem& problem, std::vector<BestRoute>& best)
    : problem_(problem), best_(best), n_(problem.instance.customer_count()) {}

  std::size_t run() {
    std::vector<int> seq;
    extend(seq, 0u, 0.0, 0.0, 0);
    return examined_;
  }

private:
  // t_top: departure time from the last customer when every leg is driven at
  // the top speed, which lower-bounds every later arrival of any extension.
  void extend(std::vector<int>& seq, unsigned mask, double load, double t_top, std::size_t last) {
    const auto& inst = problem_.instance;
    const double top = problem_.speed_kmh(problem_.top_level());
    for (std::size_t c = 1; c <= n_; ++c) {
      const unsigned bit = 1u << (c - 1);
      if (mask & bit) {
        continue;
      }
      const double new_load = load + inst.demand_kg(c);
      if (new_load > inst.capacity_kg() + 1e-9) {
        continue;
      }
      const double arrival = t_top + inst.distance(last, c) / top * 60.0;
      if (arrival - inst.due_minutes(c) > 1e-9) {
        continue;
      }
      const double start = std::max(arrival, inst.ready_minutes(c) - problem_.early_slack_minutes);
      seq.push_back(static_cast<int>(c));
      if (auto speeds = exhaustive_speed_oracle(seq, problem_)) {
        ++examined_;
        auto& slot = best_[mask | bit];
        if (speeds->energy_kwh < slot.energy) {
          slot.energy = speeds->energy_kwh;
          slot.customers = seq;
          slot.speeds = speeds->speeds;
        }
      }
      extend(seq, mask | bit, new_load, start + inst.service_minutes(c), c);
      seq.pop_back();
    }
  }

  const Problem& problem_;
  std::vector<BestRoute>& best_;
  std::size_t n_;
  std::size_t examined_ = 0;
};

}  // namespace

std::optional<EnumerationResult> enumerate_optimum(const Problem& problem) {
  const std::size_t n = problem.instance.customer_count();
  if (n > kEnumerateMaxCustomers) {
    throw EnumerationBoundError("enumeration supports at most " +
                                std::to_string(kEnumerateMaxCustomers) + " customers, instance has " +
                                std::to_string(n));
  }
  const unsigned full = (1u << n) - 1;
  std::vector<BestRoute> best(full + 1);
  SequenceSearch search(problem, best);
  const std::size_t examined = search.run();

  // cost[r][mask]: cheapest cover of mask by exactly r routes.
  const auto max_routes = std::min<std::size_t>(n, static_cast<std::size_t>(problem.instance.fleet_size()));
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(max_routes + 1, std::vector<double>(full + 1, inf));
  std::vector<std::vector<unsigned>> choice(max_routes + 1, std::vector<unsigned>(full + 1, 0));
  cost[0][0] = 0.0;
  for (std::size_t r = 1; r <= max_routes; ++r) {
    for (unsigned mask = 1; mask <= full; ++mask) {
      const unsigned low = mask & (~mask + 1);
      // Submasks containing the lowest set bit, so each partition is counted once.
      for (unsigned sub = mask; sub; sub = (sub - 1) & mask) {
        if (!(sub & low) || best[sub].energy == inf) {
          continue;
        }
        const double prev = cost[r - 1][mask ^ sub];
        if (prev == inf) {
          continue;
        }
        const double total = prev + best[sub].energy;
        if (total < cost[r][mask]) {
          cost[r][mask] = total;
          choice[r][mask] = sub;
        }
      }
    }
  }

  std::size_t best_r = 0;
  double best_total = inf;
  for (std::size_t r = 1; r <= max_routes; ++r) {
    if (cost[r][full] < best_total) {
      best_total = cost[r][full];
      best_r = r;
    }
  }
  if (best_total == inf) {
    return std::nullopt;
  }

  EnumerationResult result;
  unsigned mask = full;
  for (std::size_t r = best_r; r > 0; --r) {
    const unsigned sub = choice[r][mask];
    result.solution.routes.push_back({best[sub].customers, best[sub].speeds});
    mask ^= sub;
  }
  evaluate(result.solution, problem);
  result.energy_kwh = result.solution.total_energy;
  result.sequences = examined;
  return result;
}

}  // namespace gvrp
