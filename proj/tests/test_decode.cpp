#include <doctest.h>

#include <algorithm>
#include <random>

#include "pivrp/decode.hpp"
#include "support.hpp"

using namespace pivrp;
using namespace pivrp::decode;

namespace {

model::ProbTensor uniform_probs(int m, int vertices) {
  return model::ProbTensor{Tensor({m, vertices, vertices}, 1.0 / vertices)};
}

bool serves_everyone_once(const Instance& inst, const Plan& plan) {
  std::vector<int> seen(inst.num_vertices(), 0);
  for (int k = 0; k < plan.num_tours(); ++k)
    for (int c : plan.customers(k)) ++seen[c];
  for (int c = 1; c < inst.num_vertices(); ++c)
    if (seen[c] != 1) return false;
  return true;
}

}  // namespace

TEST_CASE("greedy_masked: one-hot prediction of a feasible plan is reproduced") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto inst = testing::random_instance(rng, 7, 3, 60);
    const auto plan = testing::random_plan(rng, 7, 3);
    REQUIRE(validate(inst, plan).feasible);
    const auto s = greedy_masked(testing::one_hot(plan, 8), inst);
    CHECK(s.plan == plan);
    CHECK(s.unassigned.empty());
    for (int k = 0; k < 3; ++k) {
      int used = 0;
      for (int c : plan.customers(k)) used += inst.demand(c);
      CHECK(s.remaining[k] == 60 - used);
    }
  }
}

TEST_CASE("greedy_masked and repair: capacity 5, demands 3 and 3") {
  const Instance inst({0.5, 0.5}, {{0.1, 0.1}, {0.9, 0.9}}, {3, 3}, 2, 5);
  const auto probs = uniform_probs(2, 3);
  const auto s = greedy_masked(probs, inst);
  // Vehicle 0 ties to the depot and stays idle; vehicle 1 takes customer 1 and
  // cannot fit customer 2 afterwards.
  CHECK(s.plan == Plan({{}, {0, 1, 0}}));
  CHECK(s.remaining == std::vector<int>{5, 2});
  CHECK(s.unassigned == std::vector<int>{2});

  const auto r = repair(probs, s, inst, false);
  REQUIRE(r.plan);
  CHECK(*r.plan == Plan({{0, 2, 0}, {0, 1, 0}}));
  CHECK(r.insertions == 1);
  CHECK(r.added_tours == 0);
  CHECK(validate(inst, *r.plan).feasible);
}

TEST_CASE("repair: empty U leaves the plan untouched") {
  const Instance inst({0.5, 0.5}, {{0.1, 0.1}, {0.9, 0.9}}, {1, 1}, 1, 5);
  DecodeState s{Plan({{0, 2, 1, 0}}), {3}, {}};
  const auto r = repair(uniform_probs(1, 3), s, inst, false);
  REQUIRE(r.plan);
  CHECK(*r.plan == s.plan);
  CHECK(r.insertions == 0);
}

TEST_CASE("repair: hand trace of vehicle choice and insertion position") {
  const Instance inst({0.5, 0.5}, {{0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3}, {0.4, 0.4}},
                      {2, 1, 1, 1}, 2, 6);
  model::ProbTensor p{Tensor({2, 5, 5}, 0.1)};
  p.at(1, 2, 3) = 0.6;
  p.at(0, 0, 4) = 0.05;
  p.at(0, 1, 4) = 0.5;
  DecodeState s{Plan({{0, 1, 0}, {0, 2, 0}}), {4, 5}, {3, 4}};
  const auto r = repair(p, s, inst, false);
  REQUIRE(r.plan);
  // Customer 3 goes to vehicle 1 (more room), after customer 2. Customer 4
  // then sees a tie (4 vs 4), takes vehicle 0, and follows customer 1.
  CHECK(r.plan->tour(0) == std::vector<int>{0, 1, 4, 0});
  CHECK(r.plan->tour(1) == std::vector<int>{0, 2, 3, 0});
  CHECK(r.insertions == 2);
}

TEST_CASE("repair: a customer that fits nowhere") {
  const Instance inst({0.5, 0.5}, {{0.1, 0.1}, {0.9, 0.9}, {0.5, 0.9}}, {4, 4, 4}, 2, 6);
  DecodeState s{Plan({{0, 1, 0}, {0, 2, 0}}), {2, 2}, {3}};
  const auto probs = uniform_probs(2, 4);

  const auto strict = repair(probs, s, inst, false);
  CHECK_FALSE(strict.plan);
  CHECK(strict.failed_customer == 3);

  const auto g = repair(probs, s, inst, true);
  REQUIRE(g.plan);
  CHECK(g.plan->num_tours() == 3);
  CHECK(g.plan->tour(2) == std::vector<int>{0, 3, 0});
  CHECK(g.added_tours == 1);
  CHECK_FALSE(validate(inst, *g.plan).feasible);
  CHECK(validate(inst, *g.plan, true).feasible);
}

TEST_CASE("solve: unsolved without guarantee, solved with it") {
  const Instance inst({0.5, 0.5}, {{0.1, 0.1}, {0.9, 0.9}, {0.5, 0.9}}, {4, 4, 4}, 2, 6);
  // Vehicle 0 idles, vehicle 1 takes customer 1; repair places 2 on vehicle 0
  // and nothing is left for 3.
  const auto probs = uniform_probs(2, 4);
  const auto a = solve_from_probs(inst, probs, {false, 0, 0});
  CHECK_FALSE(a.stats.solved);
  CHECK(a.plan.num_tours() == 0);
  const auto b = solve_from_probs(inst, probs, {true, 0, 0});
  CHECK(b.stats.solved);
  CHECK(b.stats.added_tours == 1);
  CHECK(b.stats.vehicles_used == 3);
  CHECK(validate(inst, b.plan, true).feasible);
}

TEST_CASE("solve with guarantee always returns a plan serving every customer once") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + static_cast<int>(rng() % 10), m = 1 + static_cast<int>(rng() % 4);
    // Capacity close to the expected total demand keeps the packing tight.
    const auto inst = testing::random_instance(rng, n, m, std::max(9, 5 * n / m + 1));
    const auto probs = testing::random_probs(rng, m, n + 1);
    const auto r = solve_from_probs(inst, probs, {true, 0, 0});
    REQUIRE(r.stats.solved);
    CHECK(serves_everyone_once(inst, r.plan));
    CHECK(validate(inst, r.plan, true).feasible);
    CHECK(r.plan.num_tours() == m + r.stats.added_tours);
  }
}

TEST_CASE("post-processing never increases the cost and keeps the fleet") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 60; ++t) {
    const int n = 5 + static_cast<int>(rng() % 10), m = 2 + static_cast<int>(rng() % 3);
    const auto inst = testing::random_instance(rng, n, m, 20);
    const auto probs = testing::random_probs(rng, m, n + 1);
    const auto r = solve_from_probs(inst, probs, {true, 0, 300});
    REQUIRE(r.stats.solved);
    CHECK(r.stats.cost_after <= r.stats.cost_before);
    CHECK(r.stats.cost_after == doctest::Approx(route_cost(inst, r.plan)).epsilon(1e-12));
    CHECK(r.plan.num_tours() == m + r.stats.added_tours);
    CHECK(validate(inst, r.plan, r.stats.added_tours > 0).feasible);
  }
}

TEST_CASE("solve through the model fills timing and cost statistics") {
  std::mt19937_64 rng(4);
  const model::ModelConfig cfg{8, 16, 1};
  const auto params = model::init_params(cfg, 5);
  const auto inst = testing::random_instance(rng, 10, 3, 30);
  const auto r = solve(inst, cfg, params, {true, 5, 0});
  CHECK(r.stats.solved);
  CHECK(r.stats.decode_ms >= 0.0);
  CHECK(r.stats.total_ms >= r.stats.decode_ms);
  CHECK(r.stats.vehicles_used == r.plan.vehicles_used());
  CHECK(r.stats.cost_after <= r.stats.cost_before);
}
