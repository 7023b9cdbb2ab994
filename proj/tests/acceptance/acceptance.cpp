// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails. Optional `--out-dir DIR` keeps the benchmark CSVs.

#include <algorithm>
#include <array>
#include <map>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gvrp/bench.hpp"
#include "gvrp/enumerate.hpp"
#include "gvrp/fit.hpp"
#include "gvrp/ga.hpp"
#include "gvrp/lsa.hpp"
#include "gvrp/simulator.hpp"
#include "../support/test_support.hpp"

using namespace gvrp;
using namespace gvrp::testing;

namespace {

// Tolerances.
constexpr double kTableGapTol = 0.02;     // percentage points
constexpr double kAbstractTol = 0.01;     // percentage points
constexpr double kFixed40Band = 5.0;      // percentage points
constexpr double kEconomyTol = 0.10;      // relative
constexpr double kRangeTol = 0.01;        // km and percentage points
constexpr double kMinRSquared = 0.99;
constexpr double kRecoveryTol = 1e-9;     // relative coefficient error
constexpr double kOptimumHitRate = 0.80;
constexpr double kEnergyMatchTol = 1e-9;  // relative
constexpr double kLsaWithin = 0.05;       // relative
constexpr double kLsaWithinRate = 0.90;
constexpr double kInvariantTol = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Printed energies and gaps, rows rc201..rc208.
struct PrintedStrategy {
  const char* name;
  std::array<double, 8> best, best_gap, avg, avg_gap;
  double mean_best_gap, mean_avg_gap;
};

constexpr std::array<double, 8> kLsaBest{165.22, 155.39, 150.53, 130.92, 148.75, 158.19, 152.46, 141.19};
constexpr std::array<double, 8> kLsaAvg{173.52, 174.06, 154.2, 137.51, 162.31, 165.72, 162.31, 146.42};
constexpr std::array<PrintedStrategy, 3> kPrinted{{
    {"fixed-40",
     {175.43, 162.63, 149.77, 135.21, 158.57, 160.03, 155.75, 133.98},
     {6.18, 4.66, -0.50, 3.28, 6.60, 1.16, 2.16, -5.11},
     {184.7, 169.48, 155.92, 136.54, 166.05, 167.14, 163.24, 145.34},
     {6.44, -2.63, 1.11, -0.70, 2.30, 0.86, 0.57, -0.74},
     2.30, 0.90},
    {"fixed-50",
     {192.76, 195.31, 162.71, 158.5, 192.46, 190.53, 163.68, 161.96},
     {16.67, 25.69, 8.09, 21.07, 29.38, 20.44, 7.36, 14.71},
     {208.86, 200.99, 174.19, 160.63, 201.02, 198.27, 183.39, 164.7},
     {20.37, 15.47, 12.96, 16.82, 23.85, 19.64, 12.99, 12.48},
     17.93, 16.82},
    {"fixed-60",
     {216.16, 205.48, 197.31, 179.42, 209.21, 221.47, 193.99, 185.12},
     {30.83, 32.24, 31.08, 37.05, 40.65, 40.00, 27.24, 31.11},
     {237.08, 225.04, 203.82, 184.24, 218.30, 232.90, 210.06, 195.55},
     {36.63, 29.29, 32.17, 33.98, 34.49, 40.54, 29.41, 33.55},
     33.77, 33.76},
}};

Outcome table_gaps() {
  const auto t0 = Clock::now();
  int ok = 0;
  int total = 0;
  double worst = 0.0;
  std::ostringstream misses;
  for (const auto& s : kPrinted) {
    for (std::size_t i = 0; i < 8; ++i) {
      const double db = std::abs(gap(s.best[i], kLsaBest[i]) - s.best_gap[i]);
      const double da = std::abs(gap(s.avg[i], kLsaAvg[i]) - s.avg_gap[i]);
      for (double d : {db, da}) {
        ++total;
        worst = std::max(worst, d);
        if (d <= kTableGapTol) {
          ++ok;
        } else {
          misses << ' ' << s.name << "/rc20" << i + 1;
        }
      }
    }
  }
  std::ostringstream os;
  os << ok << "/" << total << " printed gaps reproduced, worst deviation " << fmt("%.4f", worst) << " pp"
     << misses.str() << ", " << fmt("%.3f", seconds_since(t0) * 1e3) << " ms";
  return {ok == total && total == 48, os.str()};
}

Outcome abstract_mean() {
  const auto t0 = Clock::now();
  std::vector<double> means;
  for (const auto& s : kPrinted) means.push_back(s.mean_avg_gap);
  const double m = strategy_mean_gap(means);
  // Same figure recomputed from the per-instance printed gaps.
  std::vector<double> from_rows;
  for (const auto& s : kPrinted) from_rows.push_back(strategy_mean_gap(s.avg_gap));
  const double m_rows = strategy_mean_gap(from_rows);
  std::ostringstream os;
  os << "mean of strategy avg gaps " << fmt("%.4f", m) << " (from rows " << fmt("%.4f", m_rows) << "), "
     << fmt("%.3f", seconds_since(t0) * 1e3) << " ms";
  return {std::abs(m - 17.16) <= kAbstractTol, os.str()};
}

struct Replication {
  Outcome outcome;
  ExperimentResult result;
};

Replication directional(const std::string& out_dir) {
  const auto t0 = Clock::now();
  const VehicleSpec spec;
  const EnergyCoefficients coeffs = build_coefficients(spec);
  std::vector<BenchInstance> insts;
  for (int i = 1; i <= 8; ++i) {
    const std::string name = "rc20" + std::to_string(i);
    const Instance full = load_solomon(data_path("solomon/" + name + ".txt"));
    insts.push_back({name, std::make_shared<const Problem>(truncate(full, 25), coeffs, spec, 0.0), {}});
  }
  ExperimentConfig cfg;  // default: all four strategies, 10 runs, default GA
  cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  Replication rep;
  rep.result = run_experiment(insts, cfg);
  const double secs = seconds_since(t0);
  const auto& t = rep.result.table;
  print_gap_table(std::cout, t);

  if (!out_dir.empty()) {
    write_results_raw(std::filesystem::path(out_dir) / "results_raw.csv", rep.result.cells);
    write_gap_table(std::filesystem::path(out_dir) / "gap_table.csv", t);
    write_fitness_curves(std::filesystem::path(out_dir) / "fitness_curves", rep.result.cells);
  }

  auto ordered = [&](bool use_best) {
    auto g = [&](const char* s) {
      const auto& m = t.strategy_mean.at(s);
      return use_best ? m.best_gap_pct : m.avg_gap_pct;
    };
    const double g40 = g("fixed-40");
    const double g50 = g("fixed-50");
    const double g60 = g("fixed-60");
    return g60 > g50 && g50 > g40 && g50 > 0.0 && g60 > 0.0 && std::abs(g40) <= kFixed40Band;
  };
  const bool ok_best = ordered(true);
  const bool ok_avg = ordered(false);
  std::ostringstream os;
  os << "mean gaps avg 40/50/60 = " << fmt("%.2f", t.strategy_mean.at("fixed-40").avg_gap_pct) << "/"
     << fmt("%.2f", t.strategy_mean.at("fixed-50").avg_gap_pct) << "/"
     << fmt("%.2f", t.strategy_mean.at("fixed-60").avg_gap_pct) << " %, best 40/50/60 = "
     << fmt("%.2f", t.strategy_mean.at("fixed-40").best_gap_pct) << "/"
     << fmt("%.2f", t.strategy_mean.at("fixed-50").best_gap_pct) << "/"
     << fmt("%.2f", t.strategy_mean.at("fixed-60").best_gap_pct) << " %, overall avg "
     << fmt("%.2f", t.grand_mean_avg_pct) << " %; ordering on avg " << (ok_avg ? "holds" : "fails")
     << ", on best " << (ok_best ? "holds" : "fails") << "; " << fmt("%.0f", secs) << " s with " << cfg.jobs
     << " worker(s)";
  rep.outcome = {ok_best && ok_avg && !rep.result.any_failed() && secs <= 1800.0, os.str()};
  return rep;
}

Outcome calibration() {
  const auto t0 = Clock::now();
  const auto rep = simulate_profile(VehicleSpec{}, nedc_profile());
  const double rel = (rep.kwh_per_km - 0.2162) / 0.2162;
  const double range = nedc_range(4.6253, 50.228);
  const double delta = nedc_delta(234.67, range);
  std::ostringstream os;
  os << "economy " << fmt("%.4f", rep.kwh_per_km) << " kWh/km (" << fmt("%+.2f", rel * 100) << " % vs 0.2162), range "
     << fmt("%.3f", range) << " km, delta " << fmt("%.3f", delta) << " %, " << fmt("%.2f", seconds_since(t0)) << " s";
  return {std::abs(rel) <= kEconomyTol && std::abs(range - 232.32) <= kRangeTol && std::abs(delta - 1.00) <= kRangeTol &&
              seconds_since(t0) < 60.0,
          os.str()};
}

Outcome fit_quality() {
  const auto c = build_coefficients(VehicleSpec{});
  double min_r2 = 1.0;
  for (const auto& lv : c.levels()) min_r2 = std::min(min_r2, lv.r_squared);

  const Surface truth{0.0123, 0.1456, 2.3e-5, 3.1e-4, 4.2e-5};
  std::map<int, std::vector<FitPoint>> samples;
  for (int v : {40, 50, 60}) {
    for (double L = 0; L <= 200; L += 10) {
      for (double W = 0; W <= 1000; W += 250) samples[v].push_back({L, W, truth(L, W) * v / 40.0});
    }
  }
  const auto fitted = fit_coefficients(samples);
  double worst = 0.0;
  for (std::size_t lv = 0; lv < 3; ++lv) {
    const double k = fitted.speed_kmh(lv) / 40.0;
    const Surface& f = fitted.surface(lv);
    const std::array<std::pair<double, double>, 5> pairs{
        {{f.p00, truth.p00 * k}, {f.p10, truth.p10 * k}, {f.p01, truth.p01 * k}, {f.p20, truth.p20 * k},
         {f.p11, truth.p11 * k}}};
    for (const auto& [got, want] : pairs) worst = std::max(worst, std::abs(got - want) / std::abs(want));
  }
  std::ostringstream os;
  os << "min R^2 " << fmt("%.6f", min_r2) << " over " << c.level_count() << " speeds, exact-recovery max relative error "
     << fmt("%.2e", worst);
  return {min_r2 >= kMinRSquared && worst < kRecoveryTol, os.str()};
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  const VehicleSpec spec;
  const EnergyCoefficients& coeffs = default_coeffs();
  Rng rng(20240601);
  int instances = 0;
  int runs = 0;
  int hits = 0;
  int below = 0;
  int skipped = 0;
  constexpr int kInstances = 24;
  constexpr int kRunsPer = 5;
  std::ostringstream misses;
  while (instances < kInstances) {
    RandomInstanceOptions o;
    o.fleet = 2 + static_cast<int>(rng.index(2));
    o.coord_max = 30.0;
    o.min_width = 60.0;
    o.max_width = 240.0;
    const std::size_t n = 4 + rng.index(4);  // 4..7 customers
    const Problem p(random_instance(rng, n, o, "oracle" + std::to_string(instances)), coeffs, spec, 0.0);
    const auto opt = enumerate_optimum(p);
    if (!opt) {
      ++skipped;
      continue;
    }
    ++instances;
    for (int r = 0; r < kRunsPer; ++r) {
      GaConfig c;
      c.seed = run_seed(7, p.instance.name(), "lsa", r);
      const auto rep = evolve(p, c);
      ++runs;
      const double e = rep.best.total_energy;
      if (rep.best.feasible() && e < opt->energy_kwh * (1.0 - kEnergyMatchTol)) ++below;
      if (rep.best.feasible() && std::abs(e - opt->energy_kwh) <= kEnergyMatchTol * opt->energy_kwh) {
        ++hits;
      } else {
        misses << "\n    miss " << p.instance.name() << " (" << n << " customers) run " << r << ": "
               << fmt("%.6f", e) << " vs optimum " << fmt("%.6f", opt->energy_kwh)
               << (rep.best.feasible() ? "" : " infeasible");
      }
    }
  }
  const double rate = static_cast<double>(hits) / runs;
  std::ostringstream os;
  os << hits << "/" << runs << " runs on " << instances << " instances hit the enumerated optimum ("
     << fmt("%.1f", rate * 100) << " %), " << below << " below it, " << skipped << " infeasible draws skipped, "
     << fmt("%.0f", seconds_since(t0)) << " s" << misses.str();
  return {instances >= 20 && rate >= kOptimumHitRate && below == 0, os.str()};
}

Outcome lsa_vs_oracle() {
  const auto t0 = Clock::now();
  Rng rng(777);
  int routes = 0;
  int both = 0;
  int within = 0;
  int incomplete = 0;
  int below_oracle = 0;
  std::ostringstream log;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t k = 2 + rng.index(10);  // 3..12 legs
    const Problem p = make_problem(tight_route_instance(rng, k, default_coeffs()));
    std::vector<int> route(k);
    std::iota(route.begin(), route.end(), 1);
    const auto h = optimize_speeds(route, p);
    const auto o = exhaustive_speed_oracle(route, p);
    ++routes;
    if (o && !h.feasible) {
      ++incomplete;
      log << "\n    incomplete: route " << trial << " (" << k + 1 << " legs) oracle feasible, heuristic not";
    }
    if (o && h.feasible) {
      ++both;
      if (h.energy_kwh < o->energy_kwh - 1e-12) ++below_oracle;
      const double excess = h.energy_kwh / o->energy_kwh - 1.0;
      if (excess <= kLsaWithin) {
        ++within;
      } else {
        log << "\n    exceedance: route " << trial << " (" << k + 1 << " legs) " << fmt("%+.2f", excess * 100)
            << " % above the oracle";
      }
    }
  }
  const double rate = both ? static_cast<double>(within) / both : 0.0;
  std::ostringstream os;
  os << routes << " routes, " << both + incomplete << " feasible for the oracle; heuristic infeasible on " << incomplete
     << " of them; within 5 % on " << within << " of " << both << " solved by both (" << fmt("%.1f", rate * 100)
     << " %), "
     << fmt("%.1f", seconds_since(t0)) << " s" << log.str();
  return {both >= 100 && incomplete == 0 && below_oracle == 0 && rate >= kLsaWithinRate, os.str()};
}

// Random, possibly corrupted, solution for the checker comparison.
Solution random_solution(Rng& rng, const Problem& p) {
  const auto n = p.instance.customer_count();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  Solution s;
  for (std::size_t i = 0; i < n;) {
    const std::size_t len = 1 + rng.index(std::min<std::size_t>(5, n - i));
    Route r;
    r.customers.assign(perm.begin() + static_cast<std::ptrdiff_t>(i), perm.begin() + static_cast<std::ptrdiff_t>(i + len));
    for (std::size_t l = 0; l <= len; ++l) r.leg_speeds.push_back(static_cast<SpeedLevel>(rng.index(3)));
    s.routes.push_back(std::move(r));
    i += len;
  }
  if (rng.chance(0.4)) {
    switch (rng.index(5)) {
    case 0: s.routes.front().customers.push_back(s.routes.back().customers.front());
            s.routes.front().leg_speeds.push_back(0); break;
    case 1: s.routes.back().customers.pop_back(); s.routes.back().leg_speeds.pop_back(); break;
    case 2: s.routes.push_back({}); break;
    case 3: s.routes.front().leg_speeds.pop_back(); break;
    case 4: s.routes.front().customers.front() = 0; break;
    }
  }
  return s;
}

Outcome invariants(const ExperimentResult& bench) {
  const auto t0 = Clock::now();
  std::vector<std::string> failures;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok && std::find(failures.begin(), failures.end(), what) == failures.end()) failures.push_back(what);
  };

  Rng rng(99);
  // Operators keep permutations valid.
  for (int t = 0; t < 5000; ++t) {
    const std::size_t n = 1 + rng.index(40);
    Permutation a(n), b(n);
    std::iota(a.begin(), a.end(), 1);
    std::iota(b.begin(), b.end(), 1);
    std::shuffle(a.begin(), a.end(), rng.engine());
    std::shuffle(b.begin(), b.end(), rng.engine());
    auto [x, y] = pmx_crossover(a, b, rng);
    require(is_permutation_of_customers(x, n) && is_permutation_of_customers(y, n), "pmx validity");
    mutate(x, rng);
    require(is_permutation_of_customers(x, n), "mutation validity");
    const std::size_t i = rng.index(n);
    const std::size_t j = i + rng.index(n - i);
    reverse_positions(y, i, j);
    require(is_permutation_of_customers(y, n), "reversal validity");
  }

  // Energy model.
  const auto& c = default_coeffs();
  double worst_tele = 0.0;
  double worst_round = 0.0;
  for (int t = 0; t < 5000; ++t) {
    const int v = c.speed_kmh(rng.index(3));
    const double W = rng.uniform() * 1000.0;
    const double d1 = rng.uniform() * 80.0;
    const double d2 = rng.uniform() * 80.0;
    const Surface& s = c.at_speed(v);
    const double e0 = s(0.0, W);
    const double e1 = leg_energy(c, v, W, e0, d1);
    const double e2 = leg_energy(c, v, W, e0 + e1, d2);
    worst_tele = std::max(worst_tele, std::abs(e1 + e2 - (s(d1 + d2, W) - e0)));
    const double L = rng.uniform() * 400.0;
    worst_round = std::max(worst_round, std::abs(equivalent_distance(c, v, W, energy(c, v, L, W)) - L));
  }
  require(worst_tele <= kInvariantTol, "leg-energy telescoping");
  require(worst_round <= kInvariantTol, "equivalent-distance round trip");

  // Elitism on every benchmark run.
  std::size_t curves = 0;
  for (const auto& cell : bench.cells) {
    for (const auto& run : cell.runs) {
      ++curves;
      for (std::size_t g = 1; g < run.curve.size(); ++g) {
        require(run.curve[g].best <= run.curve[g - 1].best, "monotone best-fitness curve");
      }
    }
  }
  require(curves > 0, "benchmark curves present");

  // Bit-identical reruns.
  {
    const Problem p(truncate(load_solomon(data_path("solomon/rc205.txt")), 25), c, VehicleSpec{}, 0.0);
    GaConfig g;
    g.seed = 31337;
    g.max_generations = 100;
    const auto a = evolve(p, g);
    const auto b = evolve(p, g);
    bool same = a.best_tour == b.best_tour && a.best_fitness == b.best_fitness && a.curve.size() == b.curve.size();
    for (std::size_t i = 0; same && i < a.curve.size(); ++i) {
      same = a.curve[i].best == b.curve[i].best && a.curve[i].average == b.curve[i].average;
    }
    require(same, "bit-identical reruns");
  }

  // Feasibility checker against the independent validator.
  int compared = 0;
  for (int t = 0; t < 1000; ++t) {
    RandomInstanceOptions o;
    o.fleet = 1 + static_cast<int>(rng.index(4));
    const Problem p = make_problem(random_instance(rng, 3 + rng.index(8), o), rng.chance(0.3) ? 15.0 : 0.0);
    Solution s = random_solution(rng, p);
    evaluate(s, p);
    const auto ref = reference_validate(s, p);
    require(kinds_of(s.violations) == ref.kinds, "checker agrees on violated constraints");
    require(std::abs(s.total_energy - ref.energy) <= 1e-7, "checker agrees on energy");
    ++compared;
  }

  std::ostringstream os;
  os << "operators 5000x3, telescoping worst " << fmt("%.1e", worst_tele) << ", round trip worst "
     << fmt("%.1e", worst_round) << ", " << curves << " elitist curves, rerun identity, " << compared
     << " checker comparisons, " << fmt("%.1f", seconds_since(t0)) << " s";
  for (const auto& f : failures) os << "\n    violated: " << f;
  return {failures.empty(), os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_dir;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--out-dir") == 0) out_dir = argv[i + 1];
  }

  int failed = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  };

  report(1, "table gap arithmetic", table_gaps());
  report(2, "overall mean gap", abstract_mean());
  report(4, "drive-cycle calibration", calibration());
  report(5, "fit quality", fit_quality());
  report(7, "speed heuristic vs oracle", lsa_vs_oracle());
  report(6, "GA vs enumeration", oracle_equivalence());
  const Replication rep = directional(out_dir);
  report(3, "directional replication", rep.outcome);
  report(8, "invariant suites", invariants(rep.result));

  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " of 8 criteria failing" << std::endl;
  return failed ? 1 : 0;
}
