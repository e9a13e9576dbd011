#ifndef PIVRP_LOSS_HPP
#define PIVRP_LOSS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "pivrp/core.hpp"
#include "pivrp/model.hpp"

namespace pivrp::loss {

using model::ProbTensor;

struct LossWeights {
  double over = 1.0;  // overload penalty weight
  double load = 0.1;  // |predicted load - target load| weight
};

// How predicted vehicle loads enter the penalty terms.
enum class LoadMode {
  // Loads of the decoded binary tensor. No gradient reaches the model.
  decoded,
  // sum_ij P[k,i,j] * D[k,i,j] * q_i with D the decoded tensor. Equal to the
  // decoded load when P is one-hot, differentiable otherwise.
  masked_soft,
  // sum_ij P[k,i,j] * q_i. Rows of P sum to one, so this is the same total
  // for every vehicle; kept for ablations.
  expected,
};

const char* to_string(LoadMode mode);
LoadMode load_mode_from_string(const std::string& name);

// Rules shared by the training-time and inference-time greedy decoders.
struct GreedyRules {
  // When non-empty, customers whose demand exceeds the active vehicle's
  // remaining capacity are masked.
  std::span<const int> demands;
  int capacity = 0;
};

struct GreedyResult {
  Plan plan;                   // exactly M tours
  std::vector<int> remaining;  // capacity left per vehicle (capacity mode only)
  std::vector<int> unassigned; // ascending customer ids
};

/// Row-wise argmax walk over P. Each vehicle starts from the depot row and
/// follows the most probable unmasked column until it returns to the depot;
/// visited customers are masked for all vehicles and the depot column is
/// never masked, except that the last vehicle may not return (or stay idle)
/// while an eligible customer is left. Ties go to the lowest index.
GreedyResult greedy_walk(const ProbTensor& probs, const GreedyRules& rules = {});

// Training-time decoding: capacity ignored, every customer assigned.
Plan pseudo_greedy(const ProbTensor& probs);

// sum_ij T[k,i,j] * q_i for one vehicle slice of a binary view; q_0 = 0.
double load(const BinaryView& view, int k, std::span<const int> demands);

// 0 if q <= Q, else (1 + q - Q)^2.
double overload(double q_total, double capacity);
double overload_derivative(double q_total, double capacity);

struct PairCostMatrix {
  int size = 0;
  std::vector<double> cost;       // size x size, [k * size + p]
  std::vector<std::uint8_t> reversed;  // chosen direction bit per pair
  std::vector<double> nll;        // NLL part of cost at the chosen direction
  int clamped = 0;                // log arguments raised to log_floor

  double at(int k, int p) const { return cost[static_cast<std::size_t>(k) * size + p]; }
};

constexpr double log_floor = 1e-12;

/// L[k,p] = min_b -sum_ij Y^b[p,i,j] log P[k,i,j]
///        + over * overload(pred_load[k]) + load * |pred_load[k] - target_load[p]|.
/// Each NLL is summed over the target's edges in ascending (i, j) order of
/// the predicted tensor, so reversing a target tour yields identical sums.
PairCostMatrix pair_costs(const ProbTensor& probs, const Plan& target,
                          std::span<const double> predicted_loads,
                          std::span<const double> target_loads, double capacity,
                          const LossWeights& weights);

struct Assignment {
  std::vector<int> perm;  // perm[k] = p
  double total = 0.0;     // sum_k cost[k][perm[k]], summed in k order
};

/// Exact minimum-cost perfect matching (Hungarian method, O(M^3)). Among
/// optimal permutations the lexicographically smallest is returned.
Assignment assign_min(std::span<const double> cost, int size);

struct LossResult {
  double value = 0.0;
  double nll = 0.0;
  Tensor d_logits;  // empty when the gradient was not requested
  Plan decoded;
  std::vector<double> predicted_loads;
  std::vector<double> target_loads;
  Assignment assignment;
  std::vector<std::uint8_t> reversed;  // direction bit of each matched pair
  double capacity_violation = 0.0;     // mean over vehicles of max(0, decoded load - Q)
  int clamped = 0;
  std::uint64_t signature = 0;         // fingerprint of all discrete choices
};

/// Pseudo-greedy decoding, loads, pair costs and the optimal assignment,
/// with the gradient with respect to the logits that produced `probs`.
/// Only the NLL and the chosen load path carry gradient; the decoded plan,
/// directions and permutation are held fixed.
LossResult train_loss(const ProbTensor& probs, const Plan& target, const Instance& instance,
                      const LossWeights& weights, LoadMode mode = LoadMode::masked_soft,
                      bool with_gradient = true);

}  // namespace pivrp::loss

#endif  // PIVRP_LOSS_HPP
