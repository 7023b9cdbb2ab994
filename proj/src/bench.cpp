#include "gvrp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gvrp {

double gap(double value, double baseline) {
  if (!(baseline > 0.0)) {
    throw std::invalid_argument("gap baseline must be positive");
  }
  return (value - baseline) / baseline * 100.0;
}

double strategy_mean_gap(std::span<const double> gaps) {
  if (gaps.empty()) {
    throw std::invalid_argument("mean of an empty gap list");
  }
  return std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
}

double StrategyResult::best() const {
  if (runs.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double b = runs.front().energy_kwh;
  for (const auto& r : runs) {
    b = std::min(b, r.energy_kwh);
  }
  return b;
}

double StrategyResult::avg() const {
  if (runs.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  // Offsets from the minimum keep the rounded mean from dropping below it.
  const double lo = best();
  double sum = 0.0;
  for (const auto& r : runs) {
    sum += r.energy_kwh - lo;
  }
  return lo + sum / static_cast<double>(runs.size());
}

const GapRow* GapTable::find(const std::string& instance, const std::string& strategy) const {
  for (const auto& r : rows) {
    if (r.instance == instance && r.strategy == strategy) {
      return &r;
    }
  }
  return nullptr;
}

GapTable build_gap_table(std::span<const StrategyResult> cells, const std::vector<std::string>& instances,
                         const std::vector<std::string>& strategies, const std::string& baseline) {
  auto lookup = [&](const std::string& inst, const std::string& strat) -> const StrategyResult* {
    for (const auto& c : cells) {
      if (c.instance == inst && c.strategy == strat) {
        return &c;
      }
    }
    return nullptr;
  };
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  GapTable table;
  table.baseline = baseline;
  table.instances = instances;
  table.strategies = strategies;
  std::map<std::string, std::vector<double>> best_gaps;
  std::map<std::string, std::vector<double>> avg_gaps;
  for (const auto& inst : instances) {
    const StrategyResult* base = lookup(inst, baseline);
    const bool base_ok = base && !base->failed() && !base->runs.empty();
    for (const auto& strat : strategies) {
      GapRow row;
      row.instance = inst;
      row.strategy = strat;
      row.best = row.avg = row.best_gap_pct = row.avg_gap_pct = nan;
      const StrategyResult* cell = lookup(inst, strat);
      if (!cell || cell->failed() || cell->runs.empty()) {
        row.status = "failed";
      } else {
        row.runs = cell->runs.size();
        row.best = cell->best();
        row.avg = cell->avg();
        if (base_ok) {
          row.status = "ok";
          row.best_gap_pct = gap(row.best, base->best());
          row.avg_gap_pct = gap(row.avg, base->avg());
          best_gaps[strat].push_back(row.best_gap_pct);
          avg_gaps[strat].push_back(row.avg_gap_pct);
        } else {
          row.status = "no-baseline";
        }
      }
      table.rows.push_back(std::move(row));
    }
  }

  std::vector<double> grand_best;
  std::vector<double> grand_avg;
  for (const auto& strat : strategies) {
    StrategyGap g{nan, nan, 0};
    if (!best_gaps[strat].empty()) {
      g.best_gap_pct = strategy_mean_gap(best_gaps[strat]);
      g.avg_gap_pct = strategy_mean_gap(avg_gaps[strat]);
      g.instances = best_gaps[strat].size();
      if (strat != baseline) {
        grand_best.push_back(g.best_gap_pct);
        grand_avg.push_back(g.avg_gap_pct);
      }
    }
    table.strategy_mean[strat] = g;
  }
  table.grand_mean_best_pct = grand_best.empty() ? nan : strategy_mean_gap(grand_best);
  table.grand_mean_avg_pct = grand_avg.empty() ? nan : strategy_mean_gap(grand_avg);
  return table;
}

bool ExperimentResult::any_failed() const {
  return std::any_of(cells.begin(), cells.end(), [](const StrategyResult& c) { return c.failed(); });
}

std::uint64_t run_seed(std::uint64_t base, const std::string& instance, const std::string& strategy,
                       int run) {
  return derive_seed(base, {hash_name(instance), hash_name(strategy), static_cast<std::uint64_t>(run)});
}

ExperimentResult run_experiment(std::span<const BenchInstance> instances, const ExperimentConfig& config,
                                const ProgressFn& progress) {
  if (config.runs < 1) {
    throw std::invalid_argument("runs must be at least 1");
  }
  config.ga.validate();

  ExperimentResult result;
  std::vector<std::string> inst_names;
  std::vector<std::string> strat_names;
  for (const auto& s : config.strategies) {
    strat_names.push_back(s.name());
  }
  for (const auto& inst : instances) {
    inst_names.push_back(inst.name);
    for (const auto& s : config.strategies) {
      StrategyResult cell;
      cell.instance = inst.name;
      cell.strategy = s.name();
      if (!inst.problem) {
        cell.error = inst.error.empty() ? "instance not loaded" : inst.error;
      } else {
        cell.runs.resize(static_cast<std::size_t>(config.runs));
      }
      result.cells.push_back(std::move(cell));
    }
  }

  struct Task {
    std::size_t cell;
    std::size_t strategy;
    std::size_t instance;
    int run;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      const std::size_t c = i * config.strategies.size() + s;
      if (result.cells[c].failed()) {
        continue;
      }
      for (int r = 0; r < config.runs; ++r) {
        tasks.push_back({c, s, i, r});
      }
    }
  }

  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      StrategyResult& cell = result.cells[task.cell];
      RunRecord& rec = cell.runs[static_cast<std::size_t>(task.run)];
      rec.run = task.run;
      rec.seed = run_seed(config.seed, cell.instance, cell.strategy, task.run);
      try {
        GaConfig ga = config.ga;
        ga.strategy = config.strategies[task.strategy];
        ga.seed = rec.seed;
        SolveReport rep = evolve(*instances[task.instance].problem, ga);
        rec.energy_kwh = rep.best.total_energy;
        rec.fitness = rep.best_fitness;
        rec.feasible = rep.best.feasible();
        rec.runtime_seconds = rep.runtime_seconds;
        rec.curve = std::move(rep.curve);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << cell.instance << ", " << cell.strategy << ", seed " << rec.seed << ": " << e.what();
        errors[t] = msg.str();
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(cell, rec);
      }
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  // First error per cell in task order, independent of scheduling.
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& cell = result.cells[tasks[t].cell];
    if (!errors[t].empty() && cell.error.empty()) {
      cell.error = errors[t];
    }
  }
  for (auto& cell : result.cells) {
    if (cell.failed()) {
      cell.runs.clear();
    }
  }
  result.table = build_gap_table(result.cells, inst_names, strat_names);
  return result;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const std::string& comment) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << std::setprecision(17);
  if (!comment.empty()) {
    out << "# " << comment << '\n';
  }
  return out;
}

std::string num(double v) {
  if (std::isnan(v)) {
    return "";
  }
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

void write_results_raw(const std::filesystem::path& path, std::span<const StrategyResult> cells,
                       const std::string& comment) {
  auto out = open_csv(path, comment);
  out << "instance,strategy,run,seed,energy_kwh,runtime_s,feasible,error\n";
  for (const auto& c : cells) {
    if (c.failed()) {
      std::string err = c.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      out << c.instance << ',' << c.strategy << ",,,,,,\"" << err << "\"\n";
      continue;
    }
    for (const auto& r : c.runs) {
      out << c.instance << ',' << c.strategy << ',' << r.run << ',' << r.seed << ',' << num(r.energy_kwh)
          << ',' << num(r.runtime_seconds) << ',' << (r.feasible ? 1 : 0) << ",\n";
    }
  }
}

void write_gap_table(const std::filesystem::path& path, const GapTable& table, const std::string& comment) {
  auto out = open_csv(path, comment);
  out << "instance,strategy,runs,best_kwh,avg_kwh,best_gap_pct,avg_gap_pct,status\n";
  for (const auto& r : table.rows) {
    out << r.instance << ',' << r.strategy << ',' << r.runs << ',' << num(r.best) << ',' << num(r.avg) << ','
        << num(r.best_gap_pct) << ',' << num(r.avg_gap_pct) << ',' << r.status << '\n';
  }
  for (const auto& s : table.strategies) {
    const auto& g = table.strategy_mean.at(s);
    out << "mean," << s << ",,,," << num(g.best_gap_pct) << ',' << num(g.avg_gap_pct)
        << ",summary\n";
  }
  out << "mean,all-fixed,,,," << num(table.grand_mean_best_pct) << ',' << num(table.grand_mean_avg_pct)
      << ",summary\n";
}

void write_fitness_curves(const std::filesystem::path& dir, std::span<const StrategyResult> cells,
                          const std::string& comment) {
  std::filesystem::create_directories(dir);
  for (const auto& c : cells) {
    if (c.failed()) {
      continue;
    }
    auto out = open_csv(dir / (c.instance + "_" + c.strategy + ".csv"), comment);
    out << "run,seed,generation,best,average\n";
    for (const auto& r : c.runs) {
      for (const auto& g : r.curve) {
        out << r.run << ',' << r.seed << ',' << g.generation << ',' << num(g.best) << ',' << num(g.average)
            << '\n';
      }
    }
  }
}

void print_gap_table(std::ostream& os, const GapTable& table) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(12) << "strategy" << std::setw(8) << "";
  for (const auto& inst : table.instances) {
    os << std::right << std::setw(10) << inst;
  }
  os << std::right << std::setw(10) << "mean" << '\n';

  auto cell = [&](double v, bool pct) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2);
    if (std::isnan(v)) {
      s << "-";
    } else {
      s << v << (pct ? "%" : "");
    }
    os << std::setw(10) << s.str();
  };
  for (const auto& strat : table.strategies) {
    const auto& mean = table.strategy_mean.at(strat);
    const bool is_base = strat == table.baseline;
    for (int stat = 0; stat < 2; ++stat) {
      os << std::left << std::setw(12) << (stat == 0 ? strat : "") << std::setw(8) << (stat == 0 ? "best" : "avg")
         << std::right;
      for (const auto& inst : table.instances) {
        const GapRow* r = table.find(inst, strat);
        cell(r ? (stat == 0 ? r->best : r->avg) : std::numeric_limits<double>::quiet_NaN(), false);
      }
      os << '\n';
      if (is_base) {
        continue;
      }
      os << std::left << std::setw(12) << "" << std::setw(8) << "gap" << std::right;
      for (const auto& inst : table.instances) {
        const GapRow* r = table.find(inst, strat);
        cell(r ? (stat == 0 ? r->best_gap_pct : r->avg_gap_pct) : std::numeric_limits<double>::quiet_NaN(), true);
      }
      cell(stat == 0 ? mean.best_gap_pct : mean.avg_gap_pct, true);
      os << '\n';
    }
  }
  os << "mean gap over fixed strategies: best ";
  cell(table.grand_mean_best_pct, true);
  os << "  avg ";
  cell(table.grand_mean_avg_pct, true);
  os << '\n';
  os.flags(flags);
  os.precision(prec);
}

}  // namespace gvrp
