#include "pivrp/decode.hpp"

#include <chrono>

#include "pivrp/loss.hpp"

namespace pivrp::decode {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

DecodeState greedy_masked(const ProbTensor& probs, const Instance& instance) {
  if (probs.vertices() != instance.num_vertices())
    throw ShapeError("greedy_masked: tensor does not match instance");
  loss::GreedyRules rules;
  rules.demands = instance.demands();
  rules.capacity = instance.capacity();
  auto walk = loss::greedy_walk(probs, rules);
  return DecodeState{std::move(walk.plan), std::move(walk.remaining), std::move(walk.unassigned)};
}

RepairResult repair(const ProbTensor& probs, const DecodeState& state, const Instance& instance,
                    bool guarantee) {
  RepairResult out;
  Plan plan = state.plan;
  std::vector<int> remaining = state.remaining;
  const int model_vehicles = probs.vehicles();

  for (int customer : state.unassigned) {
    const int q = instance.demand(customer);
    int vehicle = -1;
    for (int k = 0; k < plan.num_tours(); ++k)
      if (remaining[k] - q >= 0 && (vehicle < 0 || remaining[k] > remaining[vehicle])) vehicle = k;
    if (vehicle < 0) {
      if (!guarantee) {
        out.failed_customer = customer;
        return out;
      }
      plan.add_tour({});
      remaining.push_back(instance.capacity());
      ++out.added_tours;
      vehicle = plan.num_tours() - 1;
    }

    auto& seq = plan.tour(vehicle);
    if (seq.empty()) {
      seq = {0, customer, 0};
    } else {
      // Candidate predecessors: every vertex on the tour except the closing depot.
      std::size_t before = 0;
      if (vehicle < model_vehicles) {
        for (std::size_t s = 1; s + 1 < seq.size(); ++s)
          if (probs.at(vehicle, seq[s], customer) > probs.at(vehicle, seq[before], customer))
            before = s;
      } else {
        // Tours opened by the repair have no probability slice; append.
        before = seq.size() - 2;
      }
      seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(before) + 1, customer);
    }
    remaining[vehicle] -= q;
    ++out.insertions;
  }
  out.plan = std::move(plan);
  return out;
}

SolveResult solve_from_probs(const Instance& instance, const ProbTensor& probs,
                             const SolveOptions& options) {
  const auto start = Clock::now();
  SolveResult out;
  const DecodeState state = greedy_masked(probs, instance);
  RepairResult repaired = repair(probs, state, instance, options.guarantee);
  out.stats.repair_insertions = repaired.insertions;
  out.stats.added_tours = repaired.added_tours;
  out.stats.decode_ms = elapsed_ms(start);
  if (!repaired.plan) {
    out.stats.total_ms = elapsed_ms(start);
    return out;
  }
  out.plan = std::move(*repaired.plan);
  out.stats.solved = true;
  out.stats.cost_before = route_cost(instance, out.plan);
  out.stats.cost_after = out.stats.cost_before;
  if (options.postprocess_ms > 0 || options.postprocess_iterations > 0) {
    const auto pp_start = Clock::now();
    search::SearchConfig cfg;
    cfg.budget_ms = options.postprocess_ms > 0 ? options.postprocess_ms : 1;
    cfg.max_iterations = options.postprocess_iterations;
    cfg.fixed_fleet = true;
    out.plan = search::improve(instance, out.plan, cfg);
    out.stats.cost_after = route_cost(instance, out.plan);
    out.stats.postprocess_ms = elapsed_ms(pp_start);
  }
  out.stats.vehicles_used = out.plan.vehicles_used();
  out.stats.total_ms = elapsed_ms(start);
  return out;
}

SolveResult solve(const Instance& instance, const model::ModelConfig& config,
                  const numerics::ParamStore& params, const SolveOptions& options) {
  const auto start = Clock::now();
  const ProbTensor probs = model::predict(instance, config, params);
  const double forward_ms = elapsed_ms(start);
  SolveResult out = solve_from_probs(instance, probs, options);
  out.stats.decode_ms += forward_ms;
  out.stats.total_ms = elapsed_ms(start);
  return out;
}

}  // namespace pivrp::decode
