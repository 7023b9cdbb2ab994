#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gvrp {

struct Customer {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double demand = 0.0;
  double ready = 0.0;
  double due = 0.0;
  double service_time = 0.0;

  bool operator==(const Customer&) const = default;
};

// Unit mapping between raw benchmark numbers and the physical quantities the
// energy model consumes. Defaults: 1 unit = 1 km, 1 time unit = 1 minute,
// 1 demand unit = 1 kg.
struct Scales {
  double distance_km = 1.0;
  double time_minutes = 1.0;
  double demand_kg = 1.0;

  bool operator==(const Scales&) const = default;
};

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class InstanceError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Depot at index 0, customers at 1..n. Immutable once built; all derived
// per-node quantities are precomputed in physical units.
class Instance {
public:
  Instance(std::string name,
           std::vector<Customer> nodes,
           int fleet_size,
           double capacity,
           Scales scales = {});

  const std::string& name() const noexcept { return name_; }
  const std::vector<Customer>& nodes() const noexcept { return nodes_; }
  const Customer& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t customer_count() const noexcept { return nodes_.size() - 1; }
  int fleet_size() const noexcept { return fleet_size_; }
  double capacity() const noexcept { return capacity_; }
  const Scales& scales() const noexcept { return scales_; }

  // Physical quantities.
  double distance(std::size_t i, std::size_t j) const {
    return distances_[i * nodes_.size() + j];
  }
  double capacity_kg() const noexcept { return capacity_ * scales_.demand_kg; }
  double demand_kg(std::size_t i) const { return nodes_[i].demand * scales_.demand_kg; }
  double ready_minutes(std::size_t i) const { return nodes_[i].ready * scales_.time_minutes; }
  double due_minutes(std::size_t i) const { return nodes_[i].due * scales_.time_minutes; }
  double service_minutes(std::size_t i) const {
    return nodes_[i].service_time * scales_.time_minutes;
  }

  Instance with_scales(const Scales& scales) const;

private:
  std::string name_;
  std::vector<Customer> nodes_;
  int fleet_size_;
  double capacity_;
  Scales scales_;
  std::vector<double> distances_;
};

Instance parse_solomon(std::string_view text, const Scales& scales = {});
Instance load_solomon(const std::string& path, const Scales& scales = {});
std::string to_solomon(const Instance& instance);

// Depot plus the first k customers. Fleet and capacity are kept.
Instance truncate(const Instance& instance, std::size_t k);

double distance(const Instance& instance, std::size_t i, std::size_t j);

}  // namespace gvrp
