#include <algorithm>

#include "doctest.h"
#include "gvrp/model.hpp"
#include "../support/test_support.hpp"

using namespace gvrp;
using namespace gvrp::testing;

namespace {

EnergyCoefficients linear_coeffs() {
  return EnergyCoefficients({{40, {0.0, 1.0, 0.0, 0.0, 0.0}, 1.0, {}},
                             {50, {0.0, 1.2, 0.0, 0.0, 0.0}, 1.0, {}},
                             {60, {0.0, 1.5, 0.0, 0.0, 0.0}, 1.0, {}}});
}

Solution one_route(std::vector<int> customers, SpeedLevel level = 0) {
  Route r{customers, std::vector<SpeedLevel>(customers.size() + 1, level)};
  return Solution{{r}, {}, 0.0, {}};
}

// Random solution over the instance, optionally corrupted.
Solution random_solution(Rng& rng, const Problem& p, bool corrupt) {
  const int n = static_cast<int>(p.instance.customer_count());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  Solution s;
  std::size_t i = 0;
  while (i < perm.size()) {
    const std::size_t len = 1 + rng.index(std::min<std::size_t>(5, perm.size() - i));
    Route r;
    r.customers.assign(perm.begin() + static_cast<std::ptrdiff_t>(i), perm.begin() + static_cast<std::ptrdiff_t>(i + len));
    for (std::size_t l = 0; l <= len; ++l) r.leg_speeds.push_back(static_cast<SpeedLevel>(rng.index(3)));
    s.routes.push_back(r);
    i += len;
  }
  if (corrupt) {
    switch (rng.index(6)) {
      case 0: s.routes.front().customers.push_back(s.routes.back().customers.front());
              s.routes.front().leg_speeds.push_back(0); break;
      case 1: s.routes.back().customers.pop_back(); s.routes.back().leg_speeds.pop_back(); break;
      case 2: s.routes.push_back({}); break;
      case 3: s.routes.front().leg_speeds.pop_back(); break;
      case 4: s.routes.front().leg_speeds.front() = 7; break;
      case 5: s.routes.front().customers.front() = 0; break;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("route loads") {
  const Instance inst("l", {node(0, 0, 0, 0, 0, 100, 0), node(1, 1, 0, 5, 0, 100, 0), node(2, 2, 0, 3, 0, 100, 0),
                            node(3, 3, 0, 50, 0, 100, 0)},
                      1, 50);
  CHECK(route_loads(Route{{1, 2}, {0, 0, 0}}, inst) == std::vector<double>{8, 3, 0});
  CHECK(route_loads(Route{}, inst).empty());
  CHECK(route_loads(Route{{3}, {0, 0}}, inst) == std::vector<double>{50, 0});
}

TEST_CASE("schedule arithmetic") {
  SUBCASE("arrival and departure") {
    const Problem p = make_problem(Instance("s", {node(0, 0, 0, 0, 0, 1000, 0), node(1, 40, 0, 5, 0, 200, 10)}, 1, 100));
    const Schedule s = schedule(one_route({1}).routes[0], p);
    REQUIRE(s.visits.size() == 2);
    CHECK(s.visits[0].arrival == doctest::Approx(60.0));
    CHECK(s.visits[0].departure == doctest::Approx(70.0));
    CHECK(s.visits[1].arrival == doctest::Approx(130.0));
  }
  SUBCASE("early arrival waits until ready minus slack") {
    const Problem p =
        make_problem(Instance("e", {node(0, 0, 0, 0, 0, 1000, 0), node(1, 30, 40, 5, 80, 200, 0)}, 1, 100), 10.0);
    const Schedule s = schedule(one_route({1}, 2).routes[0], p);
    CHECK(s.visits[0].arrival == doctest::Approx(50.0));
    CHECK(s.visits[0].service_start == doctest::Approx(70.0));
  }
  SUBCASE("late arrival is recorded with its magnitude") {
    const Problem p = make_problem(Instance("t", {node(0, 0, 0, 0, 0, 1000, 0), node(1, 40, 0, 5, 0, 45, 0)}, 1, 100));
    Solution s = one_route({1});
    evaluate(s, p);
    REQUIRE(s.violations.size() == 1);
    CHECK(s.violations[0].kind == ConstraintKind::TimeWindow);
    CHECK(s.violations[0].magnitude == doctest::Approx(15.0));
    CHECK(s.violations[0].node == 1);
  }
  SUBCASE("late depot return") {
    const Problem p = make_problem(Instance("r", {node(0, 0, 0, 0, 0, 100, 0), node(1, 40, 0, 5, 0, 100, 0)}, 1, 100));
    Solution s = one_route({1});
    evaluate(s, p);
    REQUIRE(s.violations.size() == 1);
    CHECK(s.violations[0].node == 0);
    CHECK(s.violations[0].magnitude == doctest::Approx(20.0));
  }
}

TEST_CASE("feasibility examples") {
  SUBCASE("feasible solution has an empty report") {
    const Problem p = make_problem(load_solomon(fixture_path("tiny3.txt")));
    Solution s = one_route({1, 2});
    evaluate(s, p);
    CHECK(s.feasible());
  }
  SUBCASE("capacity overage") {
    const Problem p = make_problem(Instance(
        "c", {node(0, 0, 0, 0, 0, 1000, 0), node(1, 1, 0, 55, 0, 1000, 0), node(2, 2, 0, 50, 0, 1000, 0)}, 1, 100));
    const auto v = check_feasibility(one_route({1, 2}), p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ConstraintKind::Capacity);
    CHECK(v[0].magnitude == doctest::Approx(5.0));
  }
  SUBCASE("battery shortfall") {
    const BatteryLimits b{};
    const double target = b.usable_kwh() + 0.3;
    const Problem p(Instance("b", {node(0, 0, 0, 0, 0, 1e6, 0), node(1, target / 2, 0, 5, 0, 1e6, 0)}, 1, 100),
                    linear_coeffs(), b);
    const auto v = check_feasibility(one_route({1}), p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ConstraintKind::Battery);
    CHECK(std::abs(v[0].magnitude - 0.3) <= 1e-9);
  }
  SUBCASE("structural violations") {
    const Problem p = make_problem(load_solomon(fixture_path("tiny3.txt")));
    const Route r1{{1}, {0, 0}};
    const Route r2{{2}, {0, 0}};
    const Route dup{{1, 2}, {0, 0, 0}};
    CHECK(kinds_of(check_feasibility(Solution{{r1}, {}, 0, {}}, p)) == std::set{ConstraintKind::VisitOnce});
    CHECK(kinds_of(check_feasibility(Solution{{r1, dup}, {}, 0, {}}, p)) == std::set{ConstraintKind::VisitOnce});
    CHECK(kinds_of(check_feasibility(Solution{{r1, r2, Route{}}, {}, 0, {}}, p)) ==
          std::set{ConstraintKind::EmptyRoute});
    CHECK(kinds_of(check_feasibility(Solution{{Route{{1, 2}, {0, 0}}}, {}, 0, {}}, p)) ==
          std::set{ConstraintKind::SpeedChoice});
    CHECK(kinds_of(check_feasibility(Solution{{Route{{1, 0, 2}, {0, 0, 0, 0}}}, {}, 0, {}}, p)) ==
          std::set{ConstraintKind::DepotStartEnd});
    const Problem one_vehicle = make_problem(Instance("f", p.instance.nodes(), 1, 100));
    CHECK(kinds_of(check_feasibility(Solution{{r1, r2}, {}, 0, {}}, one_vehicle)) ==
          std::set{ConstraintKind::FleetSize});
  }
}

TEST_CASE("total energy") {
  const Problem p = make_problem(Instance(
      "e", {node(0, 0, 0, 0, 0, 1e6, 0), node(1, 10, 0, 0, 0, 1e6, 0), node(2, 10, 10, 0, 0, 1e6, 0),
            node(3, 0, 10, 0, 0, 1e6, 0), node(4, 0, 10, 0, 0, 1e6, 0)},
      4, 100));
  CHECK(total_energy(Solution{}, p) == 0.0);
  const Surface& s = p.coeffs.surface(1);
  const double single = total_energy(one_route({1, 2, 3}, 1), p);
  CHECK(std::abs(single - (s(40.0, 0.0) - s(0.0, 0.0))) <= 1e-9);
  const double r3 = total_energy(one_route({3}), p);
  const Solution twin{{Route{{3}, {0, 0}}, Route{{4}, {0, 0}}}, {}, 0, {}};
  CHECK(total_energy(twin, p) == 2.0 * r3);
}

TEST_CASE("schedule invariants and differential validation") {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    RandomInstanceOptions o;
    o.fleet = 1 + static_cast<int>(rng.index(4));
    const Instance inst = random_instance(rng, 3 + rng.index(6), o);
    const double slack = rng.chance(0.3) ? 15.0 : 0.0;
    const Problem p = make_problem(inst, slack);
    Solution s = random_solution(rng, p, rng.chance(0.3));
    evaluate(s, p);

    const auto ref = reference_validate(s, p);
    CHECK(kinds_of(s.violations) == ref.kinds);
    CHECK(s.feasible() == ref.kinds.empty());
    CHECK(std::abs(s.total_energy - ref.energy) <= 1e-7);

    for (std::size_t r = 0; r < s.routes.size(); ++r) {
      const Schedule& sch = s.schedules[r];
      double prev_time = 0.0;
      double prev_battery = p.battery.capacity_kwh;
      for (std::size_t l = 0; l < sch.legs.size(); ++l) {
        CHECK(sch.visits[l].arrival >= prev_time);
        CHECK(sch.visits[l].service_start >= sch.visits[l].arrival);
        CHECK(sch.visits[l].departure >= sch.visits[l].service_start);
        prev_time = sch.visits[l].departure;
        if (l > 0) CHECK(sch.legs[l].load_kg <= sch.legs[l - 1].load_kg);
        if (sch.legs[l].distance_km > 0) CHECK(sch.legs[l].battery_after_kwh < prev_battery);
        prev_battery = sch.legs[l].battery_after_kwh;
      }
      if (!sch.legs.empty()) {
        CHECK(sch.legs.back().load_kg == 0.0);
        if (s.feasible()) CHECK(sch.legs.back().battery_after_kwh >= p.battery.reserve_kwh() - 1e-9);
        ++checked;
      }
    }

    Solution reversed = s;
    std::reverse(reversed.routes.begin(), reversed.routes.end());
    if (std::all_of(s.routes.begin(), s.routes.end(), [](const Route& r) { return !r.customers.empty(); }) &&
        s.schedules.size() == s.routes.size()) {
      evaluate(reversed, p);
      CHECK(reversed.total_energy == doctest::Approx(s.total_energy).epsilon(1e-12));
    }
  }
  CHECK(checked > 300);
}
