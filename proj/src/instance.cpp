#include "gvrp/instance.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace gvrp {

ParseError::ParseError(std::size_t line, const std::string& what)
  : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {
}

Instance::Instance(std::string name,
                   std::vector<Customer> nodes,
                   int fleet_size,
                   double capacity,
                   Scales scales)
  : name_(std::move(name)),
    nodes_(std::move(nodes)),
    fleet_size_(fleet_size),
    capacity_(capacity),
    scales_(scales) {
  if (nodes_.size() < 2) {
    throw InstanceError("instance needs a depot and at least one customer");
  }
  if (fleet_size_ < 1) {
    throw InstanceError("fleet size must be at least 1");
  }
  if (!(capacity_ > 0.0)) {
    throw InstanceError("capacity must be positive");
  }
  if (!(scales_.distance_km > 0.0) || !(scales_.time_minutes > 0.0) ||
      !(scales_.demand_kg > 0.0)) {
    throw InstanceError("unit scales must be positive");
  }
  const auto& depot = nodes_.front();
  if (depot.demand != 0.0 || depot.service_time != 0.0) {
    throw InstanceError("depot must have zero demand and zero service time");
  }
  std::unordered_set<int> ids;
  for (const auto& c : nodes_) {
    if (!ids.insert(c.id).second) {
      throw InstanceError("duplicate customer id " + std::to_string(c.id));
    }
    if (c.ready > c.due) {
      throw InstanceError("customer " + std::to_string(c.id) + " has ready > due");
    }
    if (c.demand < 0.0) {
      throw InstanceError("customer " + std::to_string(c.id) + " has negative demand");
    }
    if (c.demand > capacity_) {
      throw InstanceError("customer " + std::to_string(c.id) + " demand exceeds capacity");
    }
    if (c.service_time < 0.0) {
      throw InstanceError("customer " + std::to_string(c.id) + " has negative service time");
    }
  }

  const std::size_t n = nodes_.size();
  distances_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = nodes_[i].x - nodes_[j].x;
      const double dy = nodes_[i].y - nodes_[j].y;
      distances_[i * n + j] = std::hypot(dx, dy) * scales_.distance_km;
    }
  }
}

Instance Instance::with_scales(const Scales& scales) const {
  return Instance(name_, nodes_, fleet_size_, capacity_, scales);
}

double distance(const Instance& instance, std::size_t i, std::size_t j) {
  if (i >= instance.size() || j >= instance.size()) {
    throw std::out_of_range("node index out of range");
  }
  return instance.distance(i, j);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) ==
                  std::toupper(static_cast<unsigned char>(y));
         });
}

bool starts_with_word(std::string_view line, std::string_view word) {
  return line.size() >= word.size() && iequals(line.substr(0, word.size()), word);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') {
      ++i;
    }
    if (i > start) {
      out.push_back(s.substr(start, i - start));
    }
  }
  return out;
}

double to_number(std::string_view field, std::size_t line) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(line, "non-numeric field '" + std::string(field) + "'");
  }
  return value;
}

int to_integer(std::string_view field, std::size_t line) {
  const double value = to_number(field, line);
  if (value != std::floor(value)) {
    throw ParseError(line, "expected an integer, got '" + std::string(field) + "'");
  }
  return static_cast<int>(value);
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

Instance parse_solomon(std::string_view text, const Scales& scales) {
  enum class State { Name, Vehicle, VehicleHeader, VehicleRow, Customer, CustomerHeader, Rows };
  State state = State::Name;

  std::string name;
  int fleet = 0;
  double capacity = 0.0;
  std::vector<Customer> nodes;
  std::vector<std::size_t> node_lines;
  std::size_t line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) {
      eol = text.size();
    }
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) {
      continue;
    }

    switch (state) {
    case State::Name:
      name = std::string(line);
      state = State::Vehicle;
      break;
    case State::Vehicle:
      if (!iequals(line, "VEHICLE")) {
        throw ParseError(line_no, "expected VEHICLE section");
      }
      state = State::VehicleHeader;
      break;
    case State::VehicleHeader:
      if (!starts_with_word(line, "NUMBER")) {
        throw ParseError(line_no, "expected NUMBER/CAPACITY header");
      }
      state = State::VehicleRow;
      break;
    case State::VehicleRow: {
      const auto fields = split_ws(line);
      if (fields.size() != 2) {
        throw ParseError(line_no, "vehicle row needs number and capacity");
      }
      fleet = to_integer(fields[0], line_no);
      capacity = to_number(fields[1], line_no);
      if (fleet < 1 || !(capacity > 0.0)) {
        throw ParseError(line_no, "fleet size and capacity must be positive");
      }
      state = State::Customer;
      break;
    }
    case State::Customer:
      if (!iequals(line, "CUSTOMER")) {
        throw ParseError(line_no, "expected CUSTOMER section");
      }
      state = State::CustomerHeader;
      break;
    case State::CustomerHeader:
      if (!starts_with_word(line, "CUST")) {
        throw ParseError(line_no, "expected CUSTOMER column header");
      }
      state = State::Rows;
      break;
    case State::Rows: {
      const auto fields = split_ws(line);
      if (fields.size() != 7) {
        throw ParseError(line_no, "customer row needs 7 fields, got " +
                                      std::to_string(fields.size()));
      }
      Customer c;
      c.id = to_integer(fields[0], line_no);
      c.x = to_number(fields[1], line_no);
      c.y = to_number(fields[2], line_no);
      c.demand = to_number(fields[3], line_no);
      c.ready = to_number(fields[4], line_no);
      c.due = to_number(fields[5], line_no);
      c.service_time = to_number(fields[6], line_no);
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k].id == c.id) {
          throw ParseError(line_no, "duplicate customer id " + std::to_string(c.id) +
                                        " (first seen on line " +
                                        std::to_string(node_lines[k]) + ")");
        }
      }
      if (c.demand > capacity) {
        throw ParseError(line_no, "demand of customer " + std::to_string(c.id) +
                                      " exceeds vehicle capacity");
      }
      if (c.demand < 0.0) {
        throw ParseError(line_no, "negative demand");
      }
      if (c.ready > c.due) {
        throw ParseError(line_no, "ready time after due date");
      }
      if (nodes.empty() && (c.demand != 0.0 || c.service_time != 0.0)) {
        throw ParseError(line_no, "depot row must have zero demand and service time");
      }
      nodes.push_back(c);
      node_lines.push_back(line_no);
      break;
    }
    }
  }

  if (state != State::Rows) {
    throw ParseError(line_no, "truncated file: missing VEHICLE or CUSTOMER section");
  }
  if (nodes.size() < 2) {
    throw ParseError(line_no, "CUSTOMER section has no customers");
  }
  return Instance(std::move(name), std::move(nodes), fleet, capacity, scales);
}

Instance load_solomon(const std::string& path, const Scales& scales) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open instance file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_solomon(buffer.str(), scales);
}

std::string to_solomon(const Instance& instance) {
  std::ostringstream out;
  out << instance.name() << "\n\nVEHICLE\nNUMBER     CAPACITY\n"
      << "  " << instance.fleet_size() << "  " << shortest(instance.capacity()) << "\n\n"
      << "CUSTOMER\n"
      << "CUST NO.   XCOORD.   YCOORD.   DEMAND    READY TIME   DUE DATE   SERVICE TIME\n\n";
  for (const auto& c : instance.nodes()) {
    out << "  " << c.id << "  " << shortest(c.x) << "  " << shortest(c.y) << "  "
        << shortest(c.demand) << "  " << shortest(c.ready) << "  " << shortest(c.due) << "  "
        << shortest(c.service_time) << "\n";
  }
  return out.str();
}

Instance truncate(const Instance& instance, std::size_t k) {
  if (k < 1 || k > instance.customer_count()) {
    throw InstanceError("truncate: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(instance.customer_count()) + "]");
  }
  std::vector<Customer> nodes(instance.nodes().begin(),
                              instance.nodes().begin() + static_cast<std::ptrdiff_t>(k + 1));
  return Instance(instance.name(), std::move(nodes), instance.fleet_size(),
                  instance.capacity(), instance.scales());
}

}  // namespace gvrp
