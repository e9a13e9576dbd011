#ifndef PIVRP_DECODE_HPP
#define PIVRP_DECODE_HPP

#include <optional>
#include <vector>

#include "pivrp/core.hpp"
#include "pivrp/model.hpp"
#include "pivrp/search.hpp"

namespace pivrp::decode {

using model::ProbTensor;

struct DecodeState {
  Plan plan;                    // tours in sequence form, one per vehicle
  std::vector<int> remaining;   // Q' per vehicle
  std::vector<int> unassigned;  // U, ascending customer ids
};

/// Strict greedy decoding: the argmax walk of the pseudo-greedy decoder with
/// customers masked whenever their demand exceeds the active vehicle's
/// remaining capacity. Customers no vehicle could take end up in U.
DecodeState greedy_masked(const ProbTensor& probs, const Instance& instance);

struct RepairResult {
  // Empty when guarantee is off and some customer fits no vehicle.
  std::optional<Plan> plan;
  int insertions = 0;
  int added_tours = 0;
  int failed_customer = 0;  // first customer that could not be placed
};

/// Inserts every customer of U, in ascending order, into the vehicle with the
/// most remaining capacity after its demand (lowest index on ties), right
/// after the tour vertex j (depot included) with the highest P[v, j, i].
/// With `guarantee`, a fresh tour of capacity Q is opened whenever no vehicle
/// fits; without it that case yields no plan.
RepairResult repair(const ProbTensor& probs, const DecodeState& state, const Instance& instance,
                    bool guarantee);

struct SolveOptions {
  bool guarantee = false;
  // 0 disables post-processing.
  int postprocess_ms = 0;
  // > 0 replaces the post-processing wall-clock budget with an iteration budget.
  std::int64_t postprocess_iterations = 0;
};

struct SolveStats {
  bool solved = false;
  double decode_ms = 0.0;       // forward + greedy + repair
  double postprocess_ms = 0.0;
  double total_ms = 0.0;
  int repair_insertions = 0;
  int added_tours = 0;
  double cost_before = 0.0;     // route cost after repair
  double cost_after = 0.0;      // route cost after post-processing
  int vehicles_used = 0;
};

struct SolveResult {
  Plan plan;  // empty when unsolved
  SolveStats stats;
};

/// forward -> greedy_masked -> repair -> optional local search on the
/// repaired plan's tours (idle tours stay idle).
SolveResult solve(const Instance& instance, const model::ModelConfig& config,
                  const numerics::ParamStore& params, const SolveOptions& options);

// The same pipeline from an already computed probability tensor.
SolveResult solve_from_probs(const Instance& instance, const ProbTensor& probs,
                             const SolveOptions& options);

}  // namespace pivrp::decode

#endif  // PIVRP_DECODE_HPP
