#include <doctest.h>

#include <random>

#include "pivrp/core.hpp"
#include "support.hpp"

using namespace pivrp;

namespace {

Instance two_customers(int q1 = 1, int q2 = 1, int cap = 5) {
  return Instance({0.0, 0.0}, {{0.0, 1.0}, {1.0, 1.0}}, {q1, q2}, 2, cap);
}

}  // namespace

TEST_CASE("instance rejects invalid data") {
  CHECK_THROWS_AS(Instance({1.5, 0.0}, {{0.1, 0.1}}, {1}, 1, 5), std::invalid_argument);
  CHECK_THROWS_AS(Instance({0.5, 0.5}, {{0.1, -0.1}}, {1}, 1, 5), std::invalid_argument);
  CHECK_THROWS_AS(Instance({0.5, 0.5}, {{0.1, 0.1}}, {0}, 1, 5), std::invalid_argument);
  CHECK_THROWS_AS(Instance({0.5, 0.5}, {{0.1, 0.1}}, {6}, 1, 5), std::invalid_argument);
  CHECK_THROWS_AS(Instance({0.5, 0.5}, {{0.1, 0.1}, {0.2, 0.2}}, {5, 5}, 1, 5),
                  std::invalid_argument);
  const Instance ok({0.5, 0.5}, {{0.1, 0.1}, {0.2, 0.2}}, {5, 5}, 2, 5);
  CHECK(ok.num_customers() == 2);
  CHECK(ok.demand(0) == 0);
  CHECK(ok.total_demand() == 10);
}

TEST_CASE("validate: minimal valid tour") {
  const auto inst = two_customers();
  const auto report = validate(inst, Plan({{0, 1, 2, 0}, {}}));
  CHECK(report.feasible);
  CHECK(report.violations.empty());
}

TEST_CASE("validate: missing customer is unserved") {
  const auto inst = two_customers();
  const auto report = validate(inst, Plan({{0, 1, 0}, {}}));
  CHECK_FALSE(report.feasible);
  CHECK(report.has(ViolationKind::unserved));
}

TEST_CASE("validate: capacity, duplicates, broken tours, fleet") {
  const auto inst = two_customers(3, 3, 5);
  CHECK(validate(inst, Plan({{0, 1, 2, 0}, {}})).has(ViolationKind::capacity));
  CHECK(validate(inst, Plan({{0, 1, 2, 0}, {0, 1, 0}})).has(ViolationKind::duplicated));
  CHECK(validate(inst, Plan({{0, 1, 0, 2, 0}, {}})).has(ViolationKind::broken_tour));
  CHECK(validate(inst, Plan({{1, 0}, {0, 2, 0}})).has(ViolationKind::broken_tour));

  const Instance one_vehicle({0.0, 0.0}, {{0.0, 1.0}, {1.0, 1.0}}, {1, 1}, 1, 5);
  const Plan two_tours({{0, 1, 0}, {0, 2, 0}});
  CHECK(validate(one_vehicle, two_tours).has(ViolationKind::fleet_exceeded));
  CHECK(validate(one_vehicle, two_tours, true).feasible);
}

TEST_CASE("validate: out-of-range vertex is a structural error") {
  const auto inst = two_customers();
  CHECK_THROWS_AS(validate(inst, Plan({{0, 7, 0}, {}})), StructuralError);
  CHECK_THROWS_AS(validate(inst, Plan({{0, -1, 0}, {}})), StructuralError);
}

TEST_CASE("validate is invariant to tour order") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto inst = testing::random_instance(rng, 6, 3, 10);
    auto plan = testing::random_plan(rng, 6, 3);
    const bool feasible = validate(inst, plan).feasible;
    auto tours = plan.tours();
    std::shuffle(tours.begin(), tours.end(), rng);
    CHECK(validate(inst, Plan(tours)).feasible == feasible);
  }
}

TEST_CASE("route_cost examples") {
  const Instance inst({0.0, 0.0}, {{0.0, 1.0}}, {1}, 2, 5);
  CHECK(route_cost(inst, Plan({{0, 1, 0}, {}})) == 2.0);
  CHECK(route_cost(inst, Plan::idle(2)) == 0.0);
  CHECK(cost_v(inst, Plan({{0, 1, 0}, {}}), 35.0) == 37.0);
  CHECK(cost_v(inst, Plan::idle(2), 35.0) == 0.0);
}

TEST_CASE("route_cost equals per-edge resummation") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto inst = testing::random_instance(rng, 6, 3, 30);
    const auto plan = testing::random_plan(rng, 6, 3);
    const auto view = plan.binary_view(inst.num_vertices());
    double oracle = 0.0;
    for (int k = 0; k < view.tours; ++k)
      for (int i = 0; i < view.vertices; ++i)
        for (int j = 0; j < view.vertices; ++j)
          if (view.at(k, i, j) && i != j) {
            const auto a = inst.coord(i), b = inst.coord(j);
            oracle += std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
          }
    CHECK(route_cost(inst, plan) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(cost_v(inst, plan, 0.0) == route_cost(inst, plan));

    // Reversing a tour leaves the cost unchanged.
    auto tours = plan.tours();
    std::reverse(tours[0].begin(), tours[0].end());
    CHECK(route_cost(inst, Plan(tours)) == doctest::Approx(route_cost(inst, plan)).epsilon(1e-15));
  }
}

TEST_CASE("binary view round trip and idle convention") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const auto plan = testing::random_plan(rng, 7, 3);
    const auto view = plan.binary_view(8);
    for (int k = 0; k < plan.num_tours(); ++k)
      CHECK((view.at(k, 0, 0) == 1) == !plan.is_used(k));
    const auto back = Plan::from_binary(view);
    CHECK(back == plan);
    CHECK(back.binary_view(8) == view);
  }
}

TEST_CASE("binary view of a broken tensor is a structural error") {
  BinaryView v{1, 3, std::vector<std::uint8_t>(9, 0)};
  v.at(0, 0, 1) = 1;  // leaves the depot but never returns
  CHECK_THROWS_AS(Plan::from_binary(v), StructuralError);
}

TEST_CASE("encode: customer, vehicle and depot rows") {
  const Instance inst({0.5, 0.5}, {{0.3, 0.7}, {0.9, 0.1}}, {6, 49}, 2, 50);
  const auto f = encode(inst);
  REQUIRE(f.customers.size() == 6);
  CHECK(f.customers[0] == 0.3);
  CHECK(f.customers[1] == 0.7);
  CHECK(f.customers[2] == doctest::Approx(6.0 / 50.0));

  const Instance q30({0.5, 0.5}, {{0.3, 0.7}, {0.1, 0.1}, {0.2, 0.2}, {0.4, 0.4}},
                     {6, 30, 10, 9}, 2, 30);
  const auto g = encode(q30);
  CHECK(g.customers[2] == doctest::Approx(0.2));
  // Vehicle k=2 row.
  CHECK(g.vehicles[4] == 0.5);
  CHECK(g.vehicles[5] == 2.0);
  CHECK(g.vehicles[6] == 30.0);
  CHECK(g.vehicles[7] == 55.0);
  // Rows differ only in the numbering entries.
  CHECK(g.vehicles[2] == g.vehicles[6]);
  CHECK(g.vehicles[3] == g.vehicles[7]);
  for (int i = 0; i < 4; ++i) {
    CHECK(g.customers[3 * i + 2] > 0.0);
    CHECK(g.customers[3 * i + 2] <= 1.0);
  }
}

TEST_CASE("depot centrality of a symmetric layout is the radius") {
  const double r = 0.3;
  std::vector<Point> cs;
  for (int i = 0; i < 6; ++i) {
    const double a = 2.0 * M_PI * i / 6.0;
    cs.push_back({0.5 + r * std::cos(a), 0.5 + r * std::sin(a)});
  }
  const Instance inst({0.5, 0.5}, cs, std::vector<int>(6, 1), 2, 10);
  CHECK(depot_centrality(inst) == doctest::Approx(r).epsilon(1e-12));
  CHECK(encode(inst).depot[2] == doctest::Approx(r).epsilon(1e-12));
}
