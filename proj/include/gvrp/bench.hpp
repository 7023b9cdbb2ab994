#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gvrp/ga.hpp"

namespace gvrp {

// Percent by which `value` exceeds `baseline`. Throws std::invalid_argument
// unless baseline > 0.
double gap(double value, double baseline);
// Arithmetic mean; throws std::invalid_argument on an empty list.
double strategy_mean_gap(std::span<const double> gaps);

struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  double energy_kwh = 0.0;
  double fitness = 0.0;
  bool feasible = false;
  double runtime_seconds = 0.0;
  std::vector<GenerationStats> curve;
};

struct StrategyResult {
  std::string instance;
  std::string strategy;
  std::vector<RunRecord> runs;
  std::string error;  // non-empty when the cell failed

  bool failed() const noexcept { return !error.empty(); }
  double best() const;  // min over run energies
  double avg() const;   // mean over run energies
};

struct GapRow {
  std::string instance;
  std::string strategy;
  std::size_t runs = 0;
  double best = 0.0;
  double avg = 0.0;
  double best_gap_pct = 0.0;  // NaN without a usable baseline
  double avg_gap_pct = 0.0;
  std::string status;         // ok | failed | no-baseline
};

struct StrategyGap {
  double best_gap_pct = 0.0;
  double avg_gap_pct = 0.0;
  std::size_t instances = 0;
};

struct GapTable {
  std::string baseline;
  std::vector<std::string> instances;   // row order
  std::vector<std::string> strategies;  // column order
  std::vector<GapRow> rows;             // instance-major
  std::map<std::string, StrategyGap> strategy_mean;
  // Mean of the non-baseline strategy means.
  double grand_mean_best_pct = 0.0;
  double grand_mean_avg_pct = 0.0;

  const GapRow* find(const std::string& instance, const std::string& strategy) const;
};

// Gaps of every cell against the baseline cell of the same instance (best vs
// best, avg vs avg). Cells are looked up by name; order comes from the lists.
GapTable build_gap_table(std::span<const StrategyResult> cells,
                         const std::vector<std::string>& instances,
                         const std::vector<std::string>& strategies,
                         const std::string& baseline = "lsa");

// A benchmark instance; `problem` is null when loading failed.
struct BenchInstance {
  std::string name;
  std::shared_ptr<const Problem> problem;
  std::string error;
};

struct ExperimentConfig {
  std::vector<SpeedStrategy> strategies{SpeedStrategy::lsa(), SpeedStrategy::fixed(40),
                                        SpeedStrategy::fixed(50), SpeedStrategy::fixed(60)};
  int runs = 10;
  std::uint64_t seed = 1;
  int jobs = 1;
  GaConfig ga{};  // strategy and seed are overwritten per run
};

struct ExperimentResult {
  std::vector<StrategyResult> cells;  // instance-major, strategies in config order
  GapTable table;
  bool any_failed() const;
};

std::uint64_t run_seed(std::uint64_t base, const std::string& instance, const std::string& strategy,
                       int run);

using ProgressFn = std::function<void(const StrategyResult& cell, const RunRecord& run)>;

// Runs every (instance, strategy, run) cell. Independent runs share a thread
// pool of `jobs` workers; aggregation order is fixed, so results do not
// depend on scheduling. A failing run marks its cell failed and the rest
// continue.
ExperimentResult run_experiment(std::span<const BenchInstance> instances, const ExperimentConfig& config,
                                const ProgressFn& progress = {});

// CSV artifacts. A non-empty `comment` is written first as a '#' line.
void write_results_raw(const std::filesystem::path& path, std::span<const StrategyResult> cells,
                       const std::string& comment = {});
void write_gap_table(const std::filesystem::path& path, const GapTable& table,
                     const std::string& comment = {});
// One file per cell: <instance>_<strategy>.csv with run, seed, generation,
// best, average.
void write_fitness_curves(const std::filesystem::path& dir, std::span<const StrategyResult> cells,
                          const std::string& comment = {});

// Human-readable table: instances across, strategies down.
void print_gap_table(std::ostream& os, const GapTable& table);

}  // namespace gvrp
