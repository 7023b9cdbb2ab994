#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gvrp/lsa.hpp"
#include "gvrp/model.hpp"
#include "gvrp/rng.hpp"

namespace gvrp {

// How leg speeds are chosen for a route: the load-first optimiser, or one
// constant speed on every leg.
struct SpeedStrategy {
  enum class Kind { Lsa, Fixed };
  Kind kind = Kind::Lsa;
  int fixed_kmh = 0;

  static SpeedStrategy lsa() { return {}; }
  static SpeedStrategy fixed(int kmh) { return {Kind::Fixed, kmh}; }
  // "lsa" or "fixed-<kmh>".
  static SpeedStrategy parse(std::string_view text);
  std::string name() const;

  bool operator==(const SpeedStrategy&) const = default;
};

struct PenaltyWeights {
  double per_kg = 10.0;           // capacity overage
  double per_minute = 10.0;       // lateness
  double per_kwh = 100.0;         // battery shortfall
  double per_customer = 10000.0;  // missing or duplicated customer
  double per_route = 10000.0;     // extra or empty vehicles, malformed routes
};

double penalty(std::span<const Violation> violations, const PenaltyWeights& weights);

enum class SplitPolicy {
  Optimal,  // shortest-path split over the giant tour
  Greedy,   // extend the current route while it stays feasible
};

struct GaConfig {
  int population_size = 100;
  int max_generations = 500;
  int tournament_size = 3;
  double k1 = 0.9;  // crossover scale, better-than-average individuals
  double k2 = 0.1;  // mutation scale, better-than-average individuals
  double k3 = 0.9;  // crossover rate, worse-than-average individuals
  double k4 = 0.1;  // mutation rate, worse-than-average individuals
  double reversal_rate = 0.5;
  double nn_fraction = 0.1;
  PenaltyWeights penalty{};
  SpeedStrategy strategy{};
  SplitPolicy split = SplitPolicy::Optimal;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

// Giant tour over customer indices 1..n.
using Permutation = std::vector<int>;

struct Chromosome {
  Permutation tour;
  Solution solution;
  double fitness = 0.0;
};

bool is_permutation_of_customers(std::span<const int> tour, std::size_t customers);

// Turns giant tours into routes with leg speeds. Holds scratch buffers, so
// one decoder per thread.
class Decoder {
public:
  Decoder(const Problem& problem, SpeedStrategy strategy, SplitPolicy split,
          PenaltyWeights weights);

  // Routes, speeds, total energy and violations; schedules are left empty.
  Solution decode(std::span<const int> tour);
  double fitness(const Solution& solution) const;

  struct TourHash {
    std::size_t operator()(const std::vector<int>& tour) const noexcept;
  };

  // Speeds for a single route under this decoder's strategy.
  void assign(std::span<const int> customers, SpeedAssignment& out);

private:
  struct RouteCost {
    double cost = 0.0;
    bool feasible = false;
  };
  RouteCost route_cost(std::span<const int> customers, SpeedAssignment& speeds);
  std::vector<Route> split_optimal(std::span<const int> tour);
  std::vector<Route> split_greedy(std::span<const int> tour);
  Solution decode_uncached(std::span<const int> tour);

  static constexpr std::size_t kCacheLimit = 20000;

  const Problem& problem_;
  SpeedStrategy strategy_;
  SplitPolicy split_;
  PenaltyWeights weights_;
  SpeedLevel fixed_level_ = 0;
  RouteEval scratch_;
  SpeedAssignment speeds_;
  std::unordered_map<std::vector<int>, Solution, TourHash> cache_;
};

// Greedy nearest-unvisited tour. Starts with the customer nearest to the
// depot unless `first` names a starting customer.
Permutation nearest_neighbor_tour(const Instance& instance, int first = 0);

std::vector<Chromosome> init_population(const Problem& problem, const GaConfig& config,
                                        Decoder& decoder, Rng& rng);

// Lower fitness is better.
double fitness(const Solution& solution, const PenaltyWeights& weights);

const Chromosome& tournament_select(std::span<const Chromosome> population, std::size_t k, Rng& rng);

// PMX with an inclusive segment [first, last] copied from the first parent
// into the first child (and from the second into the second child).
std::pair<Permutation, Permutation> pmx_crossover(std::span<const int> p1, std::span<const int> p2,
                                                  std::size_t first, std::size_t last);
std::pair<Permutation, Permutation> pmx_crossover(std::span<const int> p1, std::span<const int> p2,
                                                  Rng& rng);

void swap_positions(Permutation& tour, std::size_t i, std::size_t j);
void mutate(Permutation& tour, Rng& rng);

void reverse_positions(Permutation& tour, std::size_t first, std::size_t last);
// Reverses a random segment and keeps it only when the fitness improves.
// Returns true when the reversal was kept.
bool reverse_segment(Chromosome& chromosome, Decoder& decoder, Rng& rng);

struct Rates {
  double crossover = 0.0;
  double mutation = 0.0;
};
Rates adaptive_rates(double f, double f_best, double f_avg, const GaConfig& config);

struct GenerationStats {
  int generation = 0;
  double best = 0.0;
  double average = 0.0;
};

struct SolveReport {
  Solution best;  // fully evaluated, schedules included
  Permutation best_tour;
  double best_fitness = 0.0;
  std::vector<GenerationStats> curve;
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;
  GaConfig config;
};

SolveReport evolve(const Problem& problem, const GaConfig& config);

}  // namespace gvrp
