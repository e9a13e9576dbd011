#ifndef PIVRP_TESTS_SUPPORT_HPP
#define PIVRP_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pivrp/core.hpp"
#include "pivrp/loss.hpp"
#include "pivrp/model.hpp"
#include "pivrp/numerics.hpp"

namespace pivrp::testing {

inline Instance random_instance(std::mt19937_64& rng, int n, int m, int q, int dmax = 9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    std::vector<Point> cs(n);
    for (auto& c : cs) c = {u(rng), u(rng)};
    std::vector<int> d(n);
    std::uniform_int_distribution<int> dd(1, std::min(dmax, q));
    int total = 0;
    for (auto& x : d) total += (x = dd(rng));
    if (total <= m * q) return Instance({u(rng), u(rng)}, std::move(cs), std::move(d), m, q);
  }
}

// Random partition of customers 1..n into exactly m tours (some may be empty).
inline Plan random_plan(std::mt19937_64& rng, int n, int m) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> lists(m);
  std::uniform_int_distribution<int> pick(0, m - 1);
  for (int c : perm) lists[pick(rng)].push_back(c);
  return Plan::from_customer_lists(lists);
}

// Random row-stochastic tensor with distinct entries.
inline model::ProbTensor random_probs(std::mt19937_64& rng, int m, int vertices) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  model::ProbTensor p{Tensor({m, vertices, vertices})};
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < vertices; ++i) {
      double s = 0.0;
      for (int j = 0; j < vertices; ++j) s += (p.at(k, i, j) = u(rng));
      for (int j = 0; j < vertices; ++j) p.at(k, i, j) /= s;
    }
  return p;
}

// One-hot tensor of a plan (idle vehicle -> self loop at the depot).
inline model::ProbTensor one_hot(const Plan& plan, int vertices) {
  const auto view = plan.binary_view(vertices);
  model::ProbTensor p{Tensor({view.tours, vertices, vertices})};
  for (int k = 0; k < view.tours; ++k)
    for (int i = 0; i < vertices; ++i)
      for (int j = 0; j < vertices; ++j) p.at(k, i, j) = view.at(k, i, j);
  return p;
}

// Unordered set-of-tours signature: each tour's customer list, sorted.
inline std::vector<std::vector<int>> tour_sets(const Plan& plan) {
  std::vector<std::vector<int>> out;
  for (int k = 0; k < plan.num_tours(); ++k) {
    auto c = plan.customers(k);
    std::sort(c.begin(), c.end());
    out.push_back(c);
  }
  return out;
}

// Full model + loss as a gradient-check problem over `params`.
struct ModelLossProblem {
  Instance instance;
  Plan target;
  model::ModelConfig config;
  loss::LossWeights weights;
  loss::LoadMode mode = loss::LoadMode::masked_soft;

  numerics::GradCheckProblem bind(numerics::ParamStore& params) const {
    numerics::GradCheckProblem p;
    p.value = [this, &params] {
      const auto fwd = model::forward(encode(instance), config, params);
      return loss::train_loss(fwd.probs, target, instance, weights, mode, false).value;
    };
    p.gradient = [this, &params] {
      const auto features = encode(instance);
      const auto fwd = model::forward(features, config, params);
      const auto res = loss::train_loss(fwd.probs, target, instance, weights, mode, true);
      auto grads = params.gradient_like();
      model::backward(features, config, params, fwd, res.d_logits, grads);
      params.add_gradients(grads);
    };
    p.signature = [this, &params] {
      const auto fwd = model::forward(encode(instance), config, params);
      const auto res = loss::train_loss(fwd.probs, target, instance, weights, mode, false);
      return model::branch_signature(fwd) * 31u + res.signature;
    };
    return p;
  }
};

}  // namespace pivrp::testing

#endif  // PIVRP_TESTS_SUPPORT_HPP
