#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "gvrp/bench.hpp"
#include "../support/test_support.hpp"

using namespace gvrp;
using namespace gvrp::testing;

namespace {

StrategyResult cell(std::string inst, std::string strat, std::vector<double> energies) {
  StrategyResult c{std::move(inst), std::move(strat), {}, {}};
  int run = 0;
  for (double e : energies) c.runs.push_back({run++, 0, e, e, true, 0.0, {}});
  return c;
}

BenchInstance bench_instance(const std::string& name, Instance inst) {
  return {name, std::make_shared<const Problem>(make_problem(std::move(inst))), {}};
}

ExperimentConfig quick(std::vector<SpeedStrategy> strategies, int runs) {
  ExperimentConfig c;
  c.strategies = std::move(strategies);
  c.runs = runs;
  c.seed = 5;
  c.ga.population_size = 20;
  c.ga.max_generations = 30;
  return c;
}

Instance wide_toy() {
  return Instance("toy", {node(0, 0, 0, 0, 0, 1e6, 0), node(1, 8, 2, 30, 0, 1e6, 0), node(2, -4, 9, 40, 0, 1e6, 0),
                          node(3, 3, -7, 20, 0, 1e6, 0), node(4, -6, -5, 50, 0, 1e6, 0)},
                  2, 200);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("gap examples") {
  CHECK(std::abs(gap(175.43, 165.22) - 6.18) <= 0.01);
  CHECK(std::abs(gap(237.08, 173.52) - 36.63) <= 0.01);
  CHECK(gap(42.0, 42.0) == 0.0);
  CHECK(gap(90.0, 100.0) == doctest::Approx(-10.0));
  CHECK_THROWS_AS(gap(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gap(1.0, -3.0), std::invalid_argument);
}

TEST_CASE("strategy mean gap examples") {
  const std::vector<double> fixed40{6.44, -2.63, 1.11, -0.70, 2.30, 0.86, 0.57, -0.74};
  CHECK(std::abs(strategy_mean_gap(fixed40) - 0.90) <= 0.02);
  CHECK(strategy_mean_gap(std::vector<double>{3.25}) == 3.25);
  CHECK(std::abs(strategy_mean_gap(std::vector<double>{0.90, 16.82, 33.76}) - 17.16) <= 0.01);
  CHECK_THROWS_AS(strategy_mean_gap(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("gap table statistics") {
  const std::vector<StrategyResult> cells{cell("a", "lsa", {10, 12}), cell("a", "fixed-60", {13, 13}),
                                          cell("b", "lsa", {20}), cell("b", "fixed-60", {19})};
  const auto t = build_gap_table(cells, {"a", "b"}, {"lsa", "fixed-60"});
  REQUIRE(t.rows.size() == 4);
  const GapRow* a60 = t.find("a", "fixed-60");
  REQUIRE(a60);
  CHECK(a60->best == 13);
  CHECK(a60->avg == 13);
  CHECK(a60->best_gap_pct == doctest::Approx(30.0));
  CHECK(a60->avg_gap_pct == doctest::Approx(200.0 / 11.0));
  CHECK(t.find("a", "lsa")->best_gap_pct == 0.0);
  CHECK(t.find("b", "fixed-60")->best_gap_pct == doctest::Approx(-5.0));
  CHECK(t.strategy_mean.at("fixed-60").best_gap_pct == doctest::Approx(12.5));
  CHECK(t.grand_mean_best_pct == doctest::Approx(12.5));
  CHECK(t.strategy_mean.at("lsa").best_gap_pct == 0.0);

  StrategyResult broken{"b", "lsa", {}, "boom"};
  const std::vector<StrategyResult> partial{cells[0], cells[1], broken, cells[3]};
  const auto p = build_gap_table(partial, {"a", "b"}, {"lsa", "fixed-60"});
  CHECK(p.find("b", "lsa")->status == "failed");
  CHECK(p.find("b", "fixed-60")->status == "no-baseline");
  CHECK(std::isnan(p.find("b", "fixed-60")->best_gap_pct));
  CHECK(p.strategy_mean.at("fixed-60").instances == 1);
}

TEST_CASE("single lsa cell gives a single zero-gap row") {
  const std::vector<BenchInstance> insts{bench_instance("toy", wide_toy())};
  const auto r = run_experiment(insts, quick({SpeedStrategy::lsa()}, 1));
  REQUIRE(r.table.rows.size() == 1);
  CHECK(r.table.rows[0].best_gap_pct == 0.0);
  CHECK(r.table.rows[0].avg_gap_pct == 0.0);
  CHECK(r.table.rows[0].status == "ok");
  CHECK_FALSE(r.any_failed());
  CHECK_THROWS_AS(run_experiment(insts, quick({SpeedStrategy::lsa()}, 0)), std::invalid_argument);
}

TEST_CASE("top fixed speed costs more on a wide-window toy") {
  const std::vector<BenchInstance> insts{bench_instance("toy", wide_toy())};
  const auto r = run_experiment(insts, quick({SpeedStrategy::lsa(), SpeedStrategy::fixed(60)}, 2));
  CHECK(r.table.find("toy", "fixed-60")->best_gap_pct > 0.0);
  CHECK(r.table.find("toy", "fixed-60")->avg_gap_pct > 0.0);
}

TEST_CASE("experiments are deterministic and independent of the worker count") {
  Rng rng(12);
  std::vector<BenchInstance> insts{bench_instance("r1", random_instance(rng, 8)),
                                   bench_instance("r2", random_instance(rng, 9))};
  auto cfg = quick({SpeedStrategy::lsa(), SpeedStrategy::fixed(40), SpeedStrategy::fixed(60)}, 3);
  const auto a = run_experiment(insts, cfg);
  cfg.jobs = 3;
  const auto b = run_experiment(insts, cfg);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    REQUIRE(a.cells[i].runs.size() == b.cells[i].runs.size());
    CHECK(a.cells[i].best() <= a.cells[i].avg());
    for (std::size_t r = 0; r < a.cells[i].runs.size(); ++r) {
      CHECK(a.cells[i].runs[r].energy_kwh == b.cells[i].runs[r].energy_kwh);
      CHECK(a.cells[i].runs[r].seed == b.cells[i].runs[r].seed);
      CHECK(a.cells[i].runs[r].seed ==
            run_seed(cfg.seed, a.cells[i].instance, a.cells[i].strategy, static_cast<int>(r)));
    }
  }
  CHECK(a.table.grand_mean_avg_pct == b.table.grand_mean_avg_pct);
  CHECK(run_seed(1, "x", "lsa", 0) != run_seed(1, "x", "lsa", 1));
  CHECK(run_seed(1, "x", "lsa", 0) != run_seed(1, "y", "lsa", 0));
  CHECK(run_seed(1, "x", "lsa", 0) != run_seed(2, "x", "lsa", 0));
}

TEST_CASE("failed instances are reported while the rest complete") {
  std::vector<BenchInstance> insts{bench_instance("toy", wide_toy()), {"missing", nullptr, "cannot open missing.txt"}};
  const auto r = run_experiment(insts, quick({SpeedStrategy::lsa(), SpeedStrategy::fixed(50)}, 1));
  CHECK(r.any_failed());
  CHECK(r.table.find("toy", "fixed-50")->status == "ok");
  CHECK(r.table.find("missing", "lsa")->status == "failed");
  CHECK(r.cells[2].error.find("missing.txt") != std::string::npos);
}

TEST_CASE("gap table is re-derivable from the raw csv") {
  Rng rng(21);
  std::vector<BenchInstance> insts{bench_instance("r1", random_instance(rng, 7)),
                                   bench_instance("r2", random_instance(rng, 7))};
  const auto r = run_experiment(insts, quick({SpeedStrategy::lsa(), SpeedStrategy::fixed(50)}, 3));
  const auto dir = std::filesystem::temp_directory_path() / "gvrp_bench_test";
  std::filesystem::remove_all(dir);
  write_results_raw(dir / "results_raw.csv", r.cells, "config {}");
  write_gap_table(dir / "gap_table.csv", r.table);
  write_fitness_curves(dir / "curves", r.cells);

  std::ifstream raw(dir / "results_raw.csv");
  std::string line;
  std::getline(raw, line);
  CHECK(line == "# config {}");
  std::getline(raw, line);
  CHECK(line == "instance,strategy,run,seed,energy_kwh,runtime_s,feasible,error");
  std::map<std::pair<std::string, std::string>, std::vector<double>> energies;
  while (std::getline(raw, line)) {
    const auto f = split_csv(line);
    REQUIRE(f.size() == 8);
    energies[{f[0], f[1]}].push_back(std::stod(f[4]));
  }
  std::vector<StrategyResult> rebuilt;
  for (const auto& [key, es] : energies) rebuilt.push_back(cell(key.first, key.second, es));
  const auto t = build_gap_table(rebuilt, {"r1", "r2"}, {"lsa", "fixed-50"});
  for (const auto& row : r.table.rows) {
    const GapRow* x = t.find(row.instance, row.strategy);
    REQUIRE(x);
    CHECK(x->best == row.best);
    CHECK(x->avg_gap_pct == row.avg_gap_pct);
  }

  std::ifstream gt(dir / "gap_table.csv");
  std::getline(gt, line);
  CHECK(line == "instance,strategy,runs,best_kwh,avg_kwh,best_gap_pct,avg_gap_pct,status");
  int rows = 0;
  int summaries = 0;
  while (std::getline(gt, line)) {
    const auto f = split_csv(line);
    REQUIRE(f.size() == 8);
    (f[7] == "summary" ? summaries : rows) += 1;
  }
  CHECK(rows == 4);
  CHECK(summaries == 3);
  CHECK(std::filesystem::exists(dir / "curves" / "r1_lsa.csv"));
  std::filesystem::remove_all(dir);
}
