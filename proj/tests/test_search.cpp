#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pivrp/search.hpp"
#include "support.hpp"

using namespace pivrp;
using namespace pivrp::search;

namespace {

double dist(const Instance& inst, int a, int b) {
  const auto p = inst.coord(a), q = inst.coord(b);
  return std::hypot(p.x - q.x, p.y - q.y);
}

// Brute force shortest closed tour through `customers`.
double brute_tour(const Instance& inst, std::vector<int> customers) {
  if (customers.empty()) return 0.0;
  std::sort(customers.begin(), customers.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = dist(inst, 0, customers.front()) + dist(inst, customers.back(), 0);
    for (std::size_t i = 0; i + 1 < customers.size(); ++i) s += dist(inst, customers[i], customers[i + 1]);
    best = std::min(best, s);
  } while (std::next_permutation(customers.begin(), customers.end()));
  return best;
}

// First fit always succeeds when total demand <= M * (Q - max demand + 1).
bool packing_certified(const Instance& inst) {
  return inst.total_demand() <= inst.fleet_size() * (inst.capacity() - 8);
}

SearchConfig iterations(std::int64_t n, bool fixed_fleet = true) {
  SearchConfig c;
  c.max_iterations = n;
  c.fixed_fleet = fixed_fleet;
  return c;
}

}  // namespace

TEST_CASE("neighborhood names round trip") {
  for (auto n : {Neighborhood::two_opt, Neighborhood::or_opt, Neighborhood::relocate, Neighborhood::swap,
                 Neighborhood::cross_exchange})
    CHECK(neighborhood_from_string(to_string(n)) == n);
  CHECK_THROWS_AS(neighborhood_from_string("three-opt"), std::invalid_argument);
}

TEST_CASE("construct: feasible plans with exactly M tours") {
  std::mt19937_64 rng(1);
  int certified = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng() % 20), m = 1 + static_cast<int>(rng() % 5);
    const auto inst = testing::random_instance(rng, n, m, std::max(9, 6 * n / m + 1));
    const auto plan = construct(inst);
    if (plan) {
      CHECK(plan->num_tours() == m);
      CHECK(validate(inst, *plan).feasible);
    } else {
      CHECK_FALSE(packing_certified(inst));
    }
    certified += packing_certified(inst);
  }
  CHECK(certified >= 50);
}

TEST_CASE("construct: two far-apart clusters get one vehicle each") {
  std::vector<Point> cs;
  for (int i = 0; i < 4; ++i) cs.push_back({0.05 + 0.02 * i, 0.5});
  for (int i = 0; i < 4; ++i) cs.push_back({0.95 - 0.02 * i, 0.5});
  const Instance inst({0.5, 0.5}, cs, std::vector<int>(8, 1), 2, 4);
  const auto plan = construct(inst);
  REQUIRE(plan);
  auto sets = testing::tour_sets(*plan);
  std::sort(sets.begin(), sets.end());
  CHECK(sets == std::vector<std::vector<int>>{{1, 2, 3, 4}, {5, 6, 7, 8}});
}

TEST_CASE("construct: single customer and impossible packings") {
  const Instance one({0.5, 0.5}, {{0.5, 0.8}}, {3}, 2, 5);
  const auto p = construct(one);
  REQUIRE(p);
  CHECK(route_cost(one, *p) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(p->vehicles_used() == 1);

  // Total demand fits the fleet but no two customers share a vehicle.
  const Instance tight({0.5, 0.5}, {{0.1, 0.1}, {0.9, 0.9}, {0.1, 0.9}}, {4, 4, 4}, 2, 6);
  CHECK_FALSE(construct(tight));
}

TEST_CASE("optimal_tour matches brute force") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const auto inst = testing::random_instance(rng, 7, 1, 70);
    std::vector<int> cs(7);
    std::iota(cs.begin(), cs.end(), 1);
    const auto tour = optimal_tour(inst, cs);
    CHECK(tour.front() == 0);
    CHECK(tour.back() == 0);
    CHECK(route_cost(inst, Plan({tour})) == doctest::Approx(brute_tour(inst, cs)).epsilon(1e-12));
  }
}

TEST_CASE("exact_small: examples and limits") {
  // Four customers on a square around the depot, two per vehicle.
  const Instance sq({0.5, 0.5}, {{0.4, 0.4}, {0.6, 0.4}, {0.6, 0.6}, {0.4, 0.6}}, {1, 1, 1, 1}, 2, 2);
  const auto plan = exact_small(sq);
  CHECK(plan.num_tours() == 2);
  CHECK(validate(sq, plan).feasible);
  const double side = 0.2, half_diag = std::sqrt(0.02);
  CHECK(route_cost(sq, plan) == doctest::Approx(4 * half_diag + 2 * side).epsilon(1e-12));

  std::mt19937_64 rng(3);
  CHECK_THROWS(exact_small(testing::random_instance(rng, 9, 3, 30)));
  CHECK_THROWS(exact_small(testing::random_instance(rng, 5, 4, 30)));
}

TEST_CASE("exact_small equals brute force over partitions") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const int n = 5, m = 2;
    const auto inst = testing::random_instance(rng, n, m, 12);
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<int> a, b;
      int qa = 0, qb = 0;
      for (int c = 1; c <= n; ++c)
        if (mask >> (c - 1) & 1) {
          a.push_back(c);
          qa += inst.demand(c);
        } else {
          b.push_back(c);
          qb += inst.demand(c);
        }
      if (qa > inst.capacity() || qb > inst.capacity()) continue;
      best = std::min(best, brute_tour(inst, a) + brute_tour(inst, b));
    }
    if (best == std::numeric_limits<double>::infinity()) {
      CHECK_THROWS(exact_small(inst));
      continue;
    }
    const auto plan = exact_small(inst);
    CHECK(validate(inst, plan).feasible);
    CHECK(route_cost(inst, plan) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("improve: an optimal plan is returned at the same cost") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto inst = testing::random_instance(rng, 6, 2, 20);
    const auto opt = exact_small(inst);
    const auto out = improve(inst, opt, iterations(500));
    CHECK(validate(inst, out).feasible);
    CHECK(route_cost(inst, out) == doctest::Approx(route_cost(inst, opt)).epsilon(1e-12));
  }
}

TEST_CASE("improve: a crossing tour is uncrossed") {
  const Instance inst({0.5, 0.1}, {{0.2, 0.5}, {0.8, 0.9}, {0.8, 0.5}, {0.2, 0.9}}, {1, 1, 1, 1}, 1, 10);
  const Plan crossed({{0, 1, 2, 3, 4, 0}});
  const auto out = improve(inst, crossed, iterations(200));
  std::vector<int> cs = {1, 2, 3, 4};
  CHECK(route_cost(inst, out) == doctest::Approx(brute_tour(inst, cs)).epsilon(1e-12));
  CHECK(route_cost(inst, out) < route_cost(inst, crossed));
}

TEST_CASE("improve: monotone trajectory, never worse, exact tour count") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const int n = 10 + static_cast<int>(rng() % 15), m = 2 + static_cast<int>(rng() % 3);
    const auto inst = testing::random_instance(rng, n, m, std::max(9, 6 * n / m + 1));
    const auto start = construct(inst);
    if (!start) continue;
    SearchStats stats;
    const auto out = improve(inst, *start, iterations(400), &stats);
    CHECK(validate(inst, out).feasible);
    CHECK(out.num_tours() == m);
    CHECK(stats.final_cost <= stats.initial_cost);
    CHECK(stats.final_cost == doctest::Approx(route_cost(inst, out)).epsilon(1e-12));
    for (std::size_t i = 1; i < stats.trajectory.size(); ++i) {
      CHECK(stats.trajectory[i].first >= stats.trajectory[i - 1].first);
      CHECK(stats.trajectory[i].second < stats.trajectory[i - 1].second);
    }
  }
}

TEST_CASE("improve: iteration mode is deterministic") {
  std::mt19937_64 rng(7);
  const auto inst = testing::random_instance(rng, 20, 4, 30);
  const auto start = construct(inst);
  REQUIRE(start);
  CHECK(improve(inst, *start, iterations(300)) == improve(inst, *start, iterations(300)));
}

TEST_CASE("improve: fixed fleet keeps idle tours idle") {
  // All customers on one vehicle; a second, idle vehicle would shorten the route.
  const Instance inst({0.5, 0.5}, {{0.1, 0.1}, {0.1, 0.2}, {0.9, 0.9}, {0.9, 0.8}}, {1, 1, 1, 1}, 2, 10);
  const Plan plan({{0, 1, 2, 3, 4, 0}, {}});
  const auto fixed = improve(inst, plan, iterations(300, true));
  CHECK_FALSE(fixed.is_used(1));
  const auto free = improve(inst, plan, iterations(300, false));
  CHECK(free.num_tours() == 2);
  CHECK(route_cost(inst, free) <= route_cost(inst, fixed));
  CHECK(validate(inst, free).feasible);
}

TEST_CASE("exact_small is never worse than local search on small instances") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto inst = testing::random_instance(rng, 7, 3, 15);
    const auto start = construct(inst);
    if (!start) continue;
    const auto heuristic = improve(inst, *start, iterations(300, false));
    REQUIRE(validate(inst, heuristic).feasible);
    const auto exact = exact_small(inst);
    CHECK(route_cost(inst, exact) <= route_cost(inst, heuristic) + 1e-12);
  }
}
