#include "gvrp/ga.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <charconv>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

namespace gvrp {

SpeedStrategy SpeedStrategy::parse(std::string_view text) {
  if (text == "lsa") {
    return lsa();
  }
  constexpr std::string_view prefix = "fixed-";
  if (text.substr(0, prefix.size()) == prefix) {
    const auto digits = text.substr(prefix.size());
    int kmh = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), kmh);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && kmh > 0) {
      return fixed(kmh);
    }
  }
  throw std::invalid_argument("unknown speed strategy '" + std::string(text) +
                              "' (expected lsa or fixed-<kmh>)");
}

std::string SpeedStrategy::name() const {
  return kind == Kind::Lsa ? std::string("lsa") : "fixed-" + std::to_string(fixed_kmh);
}

double penalty(std::span<const Violation> violations, const PenaltyWeights& w) {
  double p = 0.0;
  for (const auto& v : violations) {
    switch (v.kind) {
    case ConstraintKind::Capacity: p += w.per_kg * v.magnitude; break;
    case ConstraintKind::TimeWindow: p += w.per_minute * v.magnitude; break;
    case ConstraintKind::Battery: p += w.per_kwh * v.magnitude; break;
    case ConstraintKind::VisitOnce: p += w.per_customer * v.magnitude; break;
    case ConstraintKind::FleetSize:
    case ConstraintKind::EmptyRoute:
    case ConstraintKind::DepotStartEnd:
    case ConstraintKind::SpeedChoice: p += w.per_route * v.magnitude; break;
    }
  }
  return p;
}

double fitness(const Solution& solution, const PenaltyWeights& weights) {
  return solution.total_energy + penalty(solution.violations, weights);
}

void GaConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(what);
    }
  };
  require(population_size >= 2, "population_size must be at least 2");
  require(max_generations >= 0, "max_generations must be nonnegative");
  require(tournament_size >= 1 && tournament_size <= population_size,
          "tournament_size must lie in [1, population_size]");
  for (double k : {k1, k2, k3, k4}) {
    require(k > 0.0 && k <= 1.0, "adaptive rate parameters must lie in (0, 1]");
  }
  require(reversal_rate >= 0.0 && reversal_rate <= 1.0, "reversal_rate must lie in [0, 1]");
  require(nn_fraction >= 0.0 && nn_fraction <= 1.0, "nn_fraction must lie in [0, 1]");
  for (double w : {penalty.per_kg, penalty.per_minute, penalty.per_kwh, penalty.per_customer,
                   penalty.per_route}) {
    require(w > 0.0, "penalty weights must be positive");
  }
}

bool is_permutation_of_customers(std::span<const int> tour, std::size_t customers) {
  if (tour.size() != customers) {
    return false;
  }
  std::vector<char> seen(customers + 1, 0);
  for (int c : tour) {
    if (c < 1 || static_cast<std::size_t>(c) > customers || seen[static_cast<std::size_t>(c)]) {
      return false;
    }
    seen[static_cast<std::size_t>(c)] = 1;
  }
  return true;
}

std::size_t Decoder::TourHash::operator()(const std::vector<int>& tour) const noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (int c : tour) {
    h = mix64(h ^ static_cast<std::uint64_t>(c));
  }
  return static_cast<std::size_t>(h);
}

Decoder::Decoder(const Problem& problem, SpeedStrategy strategy, SplitPolicy split,
                 PenaltyWeights weights)
  : problem_(problem), strategy_(strategy), split_(split), weights_(weights) {
  if (strategy_.kind == SpeedStrategy::Kind::Fixed) {
    fixed_level_ = static_cast<SpeedLevel>(problem_.coeffs.level_of(strategy_.fixed_kmh));
  }
}

void Decoder::assign(std::span<const int> customers, SpeedAssignment& out) {
  if (strategy_.kind == SpeedStrategy::Kind::Lsa) {
    optimize_speeds(customers, problem_, scratch_, out);
    return;
  }
  out.speeds.assign(customers.empty() ? 0 : customers.size() + 1, fixed_level_);
  evaluate_route(problem_, customers, out.speeds, scratch_);
  out.energy_kwh = scratch_.energy;
  out.feasible = scratch_.first_late < 0 && scratch_.energy <= problem_.battery.usable_kwh() + 1e-9;
}

Decoder::RouteCost Decoder::route_cost(std::span<const int> customers, SpeedAssignment& speeds) {
  if (strategy_.kind == SpeedStrategy::Kind::Lsa && customers.size() > 1) {
    // Speed optimisation meets every window iff the all-top assignment does;
    // rejecting here skips the full climb on routes that cannot be repaired.
    if (!windows_met_at_top(customers, problem_)) {
      return {std::numeric_limits<double>::infinity(), false};
    }
  }
  assign(customers, speeds);
  const double over = std::max(0.0, scratch_.load - problem_.instance.capacity_kg());
  const double shortfall = std::max(0.0, scratch_.energy - problem_.battery.usable_kwh());
  const double pen = weights_.per_kg * (over > 1e-9 ? over : 0.0) +
                     weights_.per_minute * scratch_.lateness_total +
                     weights_.per_kwh * (shortfall > 1e-9 ? shortfall : 0.0);
  return {scratch_.energy + pen, pen == 0.0};
}

std::vector<Route> Decoder::split_optimal(std::span<const int> tour) {
  const std::size_t n = tour.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, inf);
  std::vector<std::size_t> pred(n + 1, 0);
  best[0] = 0.0;
  const double cap = problem_.instance.capacity_kg();
  for (std::size_t i = 0; i < n; ++i) {
    if (best[i] == inf) {
      continue;
    }
    double load = 0.0;
    for (std::size_t j = i; j < n; ++j) {
      load += problem_.instance.demand_kg(static_cast<std::size_t>(tour[j]));
      if (j > i && load > cap + 1e-9) {
        break;
      }
      const auto rc = route_cost(tour.subspan(i, j - i + 1), speeds_);
      if (j > i && !rc.feasible) {
        break;  // every longer route starting at i is infeasible too
      }
      const double total = best[i] + rc.cost;
      if (total < best[j + 1]) {
        best[j + 1] = total;
        pred[j + 1] = i;
      }
      if (!rc.feasible) {
        break;  // a single-customer route that is already infeasible
      }
    }
  }
  std::vector<Route> routes;
  for (std::size_t j = n; j > 0; j = pred[j]) {
    const std::size_t i = pred[j];
    routes.push_back({std::vector<int>(tour.begin() + static_cast<std::ptrdiff_t>(i),
                                       tour.begin() + static_cast<std::ptrdiff_t>(j)),
                      {}});
  }
  std::reverse(routes.begin(), routes.end());
  return routes;
}

std::vector<Route> Decoder::split_greedy(std::span<const int> tour) {
  // Capacity and battery at the slowest speed only; windows are left to the
  // speed assignment and the penalties.
  const double cap = problem_.instance.capacity_kg();
  const double usable = problem_.battery.usable_kwh();
  std::vector<Route> routes;
  std::size_t start = 0;
  double load = tour.empty() ? 0.0 : problem_.instance.demand_kg(static_cast<std::size_t>(tour[0]));
  for (std::size_t j = 1; j < tour.size(); ++j) {
    const double demand = problem_.instance.demand_kg(static_cast<std::size_t>(tour[j]));
    bool fits = load + demand <= cap + 1e-9;
    if (fits) {
      const auto candidate = tour.subspan(start, j - start + 1);
      speeds_.speeds.assign(candidate.size() + 1, 0);
      evaluate_route(problem_, candidate, speeds_.speeds, scratch_);
      fits = scratch_.energy <= usable + 1e-9;
    }
    if (!fits) {
      routes.push_back({std::vector<int>(tour.begin() + static_cast<std::ptrdiff_t>(start),
                                         tour.begin() + static_cast<std::ptrdiff_t>(j)),
                        {}});
      start = j;
      load = 0.0;
    }
    load += demand;
  }
  if (!tour.empty()) {
    routes.push_back({std::vector<int>(tour.begin() + static_cast<std::ptrdiff_t>(start), tour.end()), {}});
  }
  return routes;
}

Solution Decoder::decode(std::span<const int> tour) {
  Permutation key(tour.begin(), tour.end());
  if (auto it = cache_.find(key); it != cache_.end()) {
    return it->second;
  }
  Solution s = decode_uncached(tour);
  if (cache_.size() >= kCacheLimit) {
    cache_.clear();
  }
  cache_.emplace(std::move(key), s);
  return s;
}

Solution Decoder::decode_uncached(std::span<const int> tour) {
  Solution s;
  s.routes = split_ == SplitPolicy::Optimal ? split_optimal(tour) : split_greedy(tour);
  for (auto& r : s.routes) {
    assign(r.customers, speeds_);
    r.leg_speeds = speeds_.speeds;
    s.total_energy += speeds_.energy_kwh;
  }
  s.violations = check_feasibility(s, problem_);
  return s;
}

double Decoder::fitness(const Solution& solution) const {
  return gvrp::fitness(solution, weights_);
}

Permutation nearest_neighbor_tour(const Instance& instance, int first) {
  const std::size_t n = instance.customer_count();
  std::vector<char> used(n + 1, 0);
  Permutation tour;
  tour.reserve(n);
  std::size_t current = 0;
  if (first > 0) {
    tour.push_back(first);
    used[static_cast<std::size_t>(first)] = 1;
    current = static_cast<std::size_t>(first);
  }
  while (tour.size() < n) {
    std::size_t next = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 1; c <= n; ++c) {
      if (!used[c] && instance.distance(current, c) < best) {
        best = instance.distance(current, c);
        next = c;
      }
    }
    used[next] = 1;
    tour.push_back(static_cast<int>(next));
    current = next;
  }
  return tour;
}

namespace {

Chromosome make_chromosome(Permutation tour, Decoder& decoder) {
  Chromosome c;
  c.solution = decoder.decode(tour);
  c.fitness = decoder.fitness(c.solution);
  c.tour = std::move(tour);
  return c;
}

}  // namespace

std::vector<Chromosome> init_population(const Problem& problem, const GaConfig& config,
                                        Decoder& decoder, Rng& rng) {
  const auto& inst = problem.instance;
  const std::size_t n = inst.customer_count();
  const auto size = static_cast<std::size_t>(config.population_size);
  const auto nn_count = static_cast<std::size_t>(std::lround(config.nn_fraction * static_cast<double>(size)));

  std::vector<Chromosome> pop;
  pop.reserve(size);
  for (std::size_t i = 0; i < nn_count; ++i) {
    const int first = i == 0 ? 0 : static_cast<int>(1 + rng.index(n));
    pop.push_back(make_chromosome(nearest_neighbor_tour(inst, first), decoder));
  }
  Permutation base(n);
  std::iota(base.begin(), base.end(), 1);
  while (pop.size() < size) {
    Permutation tour = base;
    std::shuffle(tour.begin(), tour.end(), rng.engine());
    pop.push_back(make_chromosome(std::move(tour), decoder));
  }
  return pop;
}

const Chromosome& tournament_select(std::span<const Chromosome> population, std::size_t k, Rng& rng) {
  const std::size_t n = population.size();
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t best = n;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(idx[i], idx[j]);
    if (best == n || population[idx[i]].fitness < population[best].fitness) {
      best = idx[i];
    }
  }
  return population[best];
}

namespace {

Permutation pmx_child(std::span<const int> donor, std::span<const int> filler, std::size_t first,
                      std::size_t last) {
  const int max_value = *std::max_element(donor.begin(), donor.end());
  std::vector<int> pos_in_donor(static_cast<std::size_t>(max_value) + 1, -1);
  for (std::size_t i = first; i <= last; ++i) {
    pos_in_donor[static_cast<std::size_t>(donor[i])] = static_cast<int>(i);
  }
  Permutation child(donor.size());
  for (std::size_t i = 0; i < donor.size(); ++i) {
    if (i >= first && i <= last) {
      child[i] = donor[i];
      continue;
    }
    int v = filler[i];
    while (v >= 0 && v <= max_value && pos_in_donor[static_cast<std::size_t>(v)] >= 0) {
      v = filler[static_cast<std::size_t>(pos_in_donor[static_cast<std::size_t>(v)])];
    }
    child[i] = v;
  }
  return child;
}

}  // namespace

std::pair<Permutation, Permutation> pmx_crossover(std::span<const int> p1, std::span<const int> p2,
                                                  std::size_t first, std::size_t last) {
  if (p1.size() != p2.size()) {
    throw std::invalid_argument("pmx parents differ in length");
  }
  if (p1.empty()) {
    return {};
  }
  if (first > last || last >= p1.size()) {
    throw std::invalid_argument("pmx segment out of range");
  }
  return {pmx_child(p1, p2, first, last), pmx_child(p2, p1, first, last)};
}

std::pair<Permutation, Permutation> pmx_crossover(std::span<const int> p1, std::span<const int> p2,
                                                  Rng& rng) {
  if (p1.size() < 2) {
    return {Permutation(p1.begin(), p1.end()), Permutation(p2.begin(), p2.end())};
  }
  std::size_t a = rng.index(p1.size());
  std::size_t b = rng.index(p1.size());
  if (a > b) {
    std::swap(a, b);
  }
  return pmx_crossover(p1, p2, a, b);
}

void swap_positions(Permutation& tour, std::size_t i, std::size_t j) {
  std::swap(tour.at(i), tour.at(j));
}

void mutate(Permutation& tour, Rng& rng) {
  if (tour.size() < 2) {
    return;
  }
  const std::size_t i = rng.index(tour.size());
  std::size_t j = rng.index(tour.size() - 1);
  if (j >= i) {
    ++j;
  }
  swap_positions(tour, i, j);
}

void reverse_positions(Permutation& tour, std::size_t first, std::size_t last) {
  if (first > last || last >= tour.size()) {
    throw std::invalid_argument("reversal segment out of range");
  }
  std::reverse(tour.begin() + static_cast<std::ptrdiff_t>(first),
               tour.begin() + static_cast<std::ptrdiff_t>(last) + 1);
}

bool reverse_segment(Chromosome& chromosome, Decoder& decoder, Rng& rng) {
  const std::size_t n = chromosome.tour.size();
  if (n < 2) {
    return false;
  }
  std::size_t a = rng.index(n);
  std::size_t b = rng.index(n - 1);
  if (b >= a) {
    ++b;
  }
  if (a > b) {
    std::swap(a, b);
  }
  Permutation trial = chromosome.tour;
  reverse_positions(trial, a, b);
  Solution sol = decoder.decode(trial);
  const double f = decoder.fitness(sol);
  if (f < chromosome.fitness) {
    chromosome.tour = std::move(trial);
    chromosome.solution = std::move(sol);
    chromosome.fitness = f;
    return true;
  }
  return false;
}

Rates adaptive_rates(double f, double f_best, double f_avg, const GaConfig& config) {
  const double spread = f_avg - f_best;
  if (!(spread > 1e-12 * std::max(1.0, std::abs(f_avg)))) {
    return {config.k3, config.k4};
  }
  if (f <= f_avg) {
    const double r = std::max(0.0, (f - f_best) / spread);
    return {config.k1 * r, config.k2 * r};
  }
  return {config.k3, config.k4};
}

namespace {

GenerationStats stats_of(int generation, const std::vector<Chromosome>& pop) {
  GenerationStats s;
  s.generation = generation;
  s.best = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& c : pop) {
    s.best = std::min(s.best, c.fitness);
    sum += c.fitness;
  }
  s.average = sum / static_cast<double>(pop.size());
  return s;
}

std::size_t best_index(const std::vector<Chromosome>& pop) {
  std::size_t b = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (pop[i].fitness < pop[b].fitness) {
      b = i;
    }
  }
  return b;
}

constexpr int kCloneRetries = 8;

// Offspring keep the parent's decoded state when no operator touched them.
Chromosome finish_child(Permutation tour, const Chromosome& parent, Decoder& decoder) {
  if (tour == parent.tour) {
    return parent;
  }
  return make_chromosome(std::move(tour), decoder);
}

}  // namespace

SolveReport evolve(const Problem& problem, const GaConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  Decoder decoder(problem, config.strategy, config.split, config.penalty);

  std::vector<Chromosome> pop = init_population(problem, config, decoder, rng);
  SolveReport report;
  report.seed = config.seed;
  report.config = config;
  report.curve.push_back(stats_of(0, pop));

  const auto size = static_cast<std::size_t>(config.population_size);
  const auto k = static_cast<std::size_t>(config.tournament_size);
  for (int gen = 1; gen <= config.max_generations; ++gen) {
    const GenerationStats& stats = report.curve.back();
    std::vector<Chromosome> next;
    next.reserve(size);
    next.push_back(pop[best_index(pop)]);  // elitism
    std::unordered_set<Permutation, Decoder::TourHash> present{next.front().tour};

    while (next.size() < size) {
      const Chromosome& a = tournament_select(pop, k, rng);
      const Chromosome& b = tournament_select(pop, k, rng);
      const Rates pair_rates =
          adaptive_rates(std::min(a.fitness, b.fitness), stats.best, stats.average, config);
      Permutation ca = a.tour;
      Permutation cb = b.tour;
      if (rng.chance(pair_rates.crossover)) {
        std::tie(ca, cb) = pmx_crossover(a.tour, b.tour, rng);
      }
      const Chromosome* parents[2] = {&a, &b};
      Permutation* children[2] = {&ca, &cb};
      for (int side = 0; side < 2 && next.size() < size; ++side) {
        const Chromosome& parent = *parents[side];
        Permutation& tour = *children[side];
        if (rng.chance(adaptive_rates(parent.fitness, stats.best, stats.average, config).mutation)) {
          mutate(tour, rng);
        }
        // Clones of tours already in the next generation are perturbed;
        // otherwise copies of the incumbent, which the rate formula leaves
        // untouched, take over the population within a few generations.
        for (int attempt = 0; attempt < kCloneRetries && present.count(tour); ++attempt) {
          mutate(tour, rng);
        }
        Chromosome child = finish_child(std::move(tour), parent, decoder);
        if (rng.chance(config.reversal_rate)) {
          reverse_segment(child, decoder, rng);
        }
        present.insert(child.tour);
        next.push_back(std::move(child));
      }
    }
    pop = std::move(next);
    report.curve.push_back(stats_of(gen, pop));
  }

  const Chromosome& best = pop[best_index(pop)];
  report.best = best.solution;
  evaluate(report.best, problem);
  report.best_tour = best.tour;
  report.best_fitness = best.fitness;
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace gvrp
