#ifndef PIVRP_SEARCH_HPP
#define PIVRP_SEARCH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pivrp/core.hpp"

namespace pivrp::search {

enum class Neighborhood { two_opt, or_opt, relocate, swap, cross_exchange };

std::string to_string(Neighborhood n);
Neighborhood neighborhood_from_string(const std::string& name);

struct SearchConfig {
  // Wall-clock budget. Ignored when max_iterations > 0.
  int budget_ms = 1000;
  // Deterministic mode: stop after this many search steps (applied moves and
  // penalization rounds) instead of after budget_ms.
  std::int64_t max_iterations = 0;
  // Idle tours of the input plan stay idle.
  bool fixed_fleet = true;
  // Penalty weight = penalty_factor * mean edge length of the first local optimum.
  double penalty_factor = 0.1;
  std::vector<Neighborhood> neighborhoods = {Neighborhood::two_opt, Neighborhood::or_opt,
                                             Neighborhood::relocate, Neighborhood::swap,
                                             Neighborhood::cross_exchange};
};

struct SearchStats {
  std::int64_t iterations = 0;
  int penalty_rounds = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  // (iteration, cost) each time the incumbent improved.
  std::vector<std::pair<std::int64_t, double>> trajectory;
};

/// Savings construction with a sweep fallback and a bin-packing last resort.
/// Returns a feasible plan with exactly M tours (idle ones padded), or
/// nullopt if no strategy fits the customers into M capacity-feasible tours.
std::optional<Plan> construct(const Instance& instance);

/// Guided local search from a feasible plan. The returned plan has the same
/// tour count as the input and never costs more.
Plan improve(const Instance& instance, const Plan& plan, const SearchConfig& config,
             SearchStats* stats = nullptr);

constexpr int exact_max_customers = 8;
constexpr int exact_max_fleet = 3;

/// Optimal plan by subset enumeration and Held-Karp routing. Requires
/// N <= 8 and M <= 3; the result has exactly M tours.
Plan exact_small(const Instance& instance);

// Held-Karp optimal closed tour from the depot through `customers`.
std::vector<int> optimal_tour(const Instance& instance, const std::vector<int>& customers);

}  // namespace pivrp::search

#endif  // PIVRP_SEARCH_HPP
