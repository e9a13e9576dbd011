#include "pivrp/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pivrp::loss {

const char* to_string(LoadMode mode) {
  switch (mode) {
    case LoadMode::decoded: return "decoded";
    case LoadMode::masked_soft: return "masked-soft";
    case LoadMode::expected: return "expected";
  }
  return "unknown";
}

LoadMode load_mode_from_string(const std::string& name) {
  for (auto m : {LoadMode::decoded, LoadMode::masked_soft, LoadMode::expected})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown load mode '" + name + "'");
}

GreedyResult greedy_walk(const ProbTensor& probs, const GreedyRules& rules) {
  const int m = probs.vehicles();
  const int n = probs.vertices();
  const bool capacitated = !rules.demands.empty();
  if (capacitated && static_cast<int>(rules.demands.size()) != n)
    throw ShapeError("greedy_walk: demand vector does not match tensor");

  std::vector<char> visited(n, 0);
  int left = n - 1;
  GreedyResult out;
  out.remaining.assign(m, rules.capacity);
  std::vector<std::vector<int>> tours(m);

  for (int k = 0; k < m; ++k) {
    const bool last = k == m - 1;
    int& cap = out.remaining[k];
    auto eligible = [&](int j) {
      return !visited[j] && (!capacitated || rules.demands[j] <= cap);
    };
    auto any_eligible = [&]() {
      for (int j = 1; j < n; ++j)
        if (eligible(j)) return true;
      return false;
    };
    auto step = [&](int from) {
      const bool depot_open = !(last && left > 0 && any_eligible());
      int best = depot_open ? 0 : -1;
      for (int j = 1; j < n; ++j) {
        if (!eligible(j)) continue;
        if (best < 0 || probs.at(k, from, j) > probs.at(k, from, best)) best = j;
      }
      return best < 0 ? 0 : best;
    };

    int current = step(0);
    if (current == 0) continue;
    auto& seq = tours[k];
    seq.push_back(0);
    while (current != 0) {
      seq.push_back(current);
      visited[current] = 1;
      --left;
      if (capacitated) cap -= rules.demands[current];
      current = step(current);
    }
    seq.push_back(0);
  }
  for (int j = 1; j < n; ++j)
    if (!visited[j]) out.unassigned.push_back(j);
  out.plan = Plan(std::move(tours));
  return out;
}

Plan pseudo_greedy(const ProbTensor& probs) { return greedy_walk(probs).plan; }

double load(const BinaryView& view, int k, std::span<const int> demands) {
  double total = 0.0;
  for (int i = 1; i < view.vertices; ++i)
    for (int j = 0; j < view.vertices; ++j)
      if (view.at(k, i, j)) total += demands[i];
  return total;
}

double overload(double q_total, double capacity) {
  if (q_total <= capacity) return 0.0;
  const double excess = 1.0 + q_total - capacity;
  return excess * excess;
}

double overload_derivative(double q_total, double capacity) {
  return q_total <= capacity ? 0.0 : 2.0 * (1.0 + q_total - capacity);
}

namespace {

// Flat (i * n + j) edge positions of target tour p, ascending. `transpose`
// gives the positions of the reversed tour.
std::vector<std::size_t> edge_positions(const Plan& target, int p, int n, bool transpose) {
  std::vector<std::size_t> pos;
  const auto& seq = target.tour(p);
  if (!target.is_used(p)) {
    pos.push_back(0);
    return pos;
  }
  for (std::size_t s = 0; s + 1 < seq.size(); ++s) {
    const int i = transpose ? seq[s + 1] : seq[s];
    const int j = transpose ? seq[s] : seq[s + 1];
    pos.push_back(static_cast<std::size_t>(i) * n + j);
  }
  std::sort(pos.begin(), pos.end());
  return pos;
}

}  // namespace

PairCostMatrix pair_costs(const ProbTensor& probs, const Plan& target,
                          std::span<const double> predicted_loads,
                          std::span<const double> target_loads, double capacity,
                          const LossWeights& weights) {
  const int m = probs.vehicles();
  const int n = probs.vertices();
  if (target.num_tours() != m)
    throw ShapeError("pair_costs: target has " + std::to_string(target.num_tours()) +
                     " tours, prediction has " + std::to_string(m));
  if (static_cast<int>(predicted_loads.size()) != m || static_cast<int>(target_loads.size()) != m)
    throw ShapeError("pair_costs: load vectors must have one entry per vehicle");

  PairCostMatrix out;
  out.size = m;
  out.cost.resize(static_cast<std::size_t>(m) * m);
  out.nll.resize(out.cost.size());
  out.reversed.resize(out.cost.size());

  std::vector<std::vector<std::size_t>> forward(m), backward(m);
  for (int p = 0; p < m; ++p) {
    forward[p] = edge_positions(target, p, n, false);
    backward[p] = edge_positions(target, p, n, true);
  }
  const double* values = probs.values.data();
  for (int k = 0; k < m; ++k) {
    const double* slice = values + static_cast<std::size_t>(k) * n * n;
    auto nll = [&](const std::vector<std::size_t>& positions) {
      double sum = 0.0;
      for (std::size_t pos : positions) {
        double v = slice[pos];
        if (v < log_floor) {
          v = log_floor;
          ++out.clamped;
        }
        sum -= std::log(v);
      }
      return sum;
    };
    const double penalty = weights.over * overload(predicted_loads[k], capacity);
    for (int p = 0; p < m; ++p) {
      const double fwd = nll(forward[p]);
      const double bwd = nll(backward[p]);
      const bool rev = bwd < fwd;
      const std::size_t idx = static_cast<std::size_t>(k) * m + p;
      out.reversed[idx] = rev ? 1 : 0;
      out.nll[idx] = rev ? bwd : fwd;
      out.cost[idx] =
          out.nll[idx] + penalty + weights.load * std::abs(predicted_loads[k] - target_loads[p]);
    }
  }
  return out;
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Hungarian method with potentials on a square matrix; returns the row -> col
// assignment.
std::vector<int> hungarian(const std::vector<double>& a, int n) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double matched_total(std::span<const double> cost, int n, const std::vector<int>& perm) {
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += cost[static_cast<std::size_t>(k) * n + perm[k]];
  return total;
}

// Optimum over permutations of the rows/cols not yet fixed.
double reduced_optimum(std::span<const double> cost, int n, const std::vector<int>& fixed_col,
                       const std::vector<char>& col_taken) {
  std::vector<int> rows, cols;
  for (int k = 0; k < n; ++k)
    if (fixed_col[k] < 0) rows.push_back(k);
  for (int p = 0; p < n; ++p)
    if (!col_taken[p]) cols.push_back(p);
  double fixed_sum = 0.0;
  for (int k = 0; k < n; ++k)
    if (fixed_col[k] >= 0) fixed_sum += cost[static_cast<std::size_t>(k) * n + fixed_col[k]];
  const int r = static_cast<int>(rows.size());
  if (r == 0) return fixed_sum;
  std::vector<double> sub(static_cast<std::size_t>(r) * r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      sub[static_cast<std::size_t>(a) * r + b] = cost[static_cast<std::size_t>(rows[a]) * n + cols[b]];
  const auto assign = hungarian(sub, r);
  double rest = 0.0;
  for (int a = 0; a < r; ++a) rest += sub[static_cast<std::size_t>(a) * r + assign[a]];
  return fixed_sum + rest;
}

}  // namespace

Assignment assign_min(std::span<const double> cost, int size) {
  if (size < 0 || cost.size() != static_cast<std::size_t>(size) * size)
    throw ShapeError("assign_min: cost matrix is not square");
  for (double c : cost)
    if (!std::isfinite(c)) throw NumericError("assign_min: non-finite cost");
  Assignment out;
  if (size == 0) return out;
  const std::vector<double> a(cost.begin(), cost.end());
  const double best = matched_total(cost, size, hungarian(a, size));
  const double tol = 1e-12 * std::max(1.0, std::abs(best));

  // Fix rows in order to the smallest column that still admits an optimum.
  std::vector<int> fixed(size, -1);
  std::vector<char> taken(size, 0);
  for (int k = 0; k < size; ++k) {
    for (int p = 0; p < size; ++p) {
      if (taken[p]) continue;
      fixed[k] = p;
      taken[p] = 1;
      if (reduced_optimum(cost, size, fixed, taken) <= best + tol) break;
      fixed[k] = -1;
      taken[p] = 0;
    }
    if (fixed[k] < 0) throw NumericError("assign_min: failed to recover an optimal permutation");
  }
  out.perm = fixed;
  out.total = matched_total(cost, size, out.perm);
  return out;
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

LossResult train_loss(const ProbTensor& probs, const Plan& target, const Instance& instance,
                      const LossWeights& weights, LoadMode mode, bool with_gradient) {
  const int m = probs.vehicles();
  const int n = probs.vertices();
  if (target.num_tours() != m)
    throw ShapeError("train_loss: target has " + std::to_string(target.num_tours()) +
                     " tours, prediction has " + std::to_string(m));
  if (n != instance.num_vertices()) throw ShapeError("train_loss: tensor does not match instance");
  const auto demands = instance.demands();
  const double cap = instance.capacity();

  LossResult out;
  out.decoded = pseudo_greedy(probs);
  const BinaryView decoded = out.decoded.binary_view(n);
  const BinaryView target_view = target.binary_view(n);

  out.predicted_loads.resize(m);
  out.target_loads.resize(m);
  double violation = 0.0;
  for (int k = 0; k < m; ++k) {
    const double hard = load(decoded, k, demands);
    violation += std::max(0.0, hard - cap);
    out.target_loads[k] = load(target_view, k, demands);
    double soft = 0.0;
    switch (mode) {
      case LoadMode::decoded: soft = hard; break;
      case LoadMode::masked_soft:
        for (int i = 1; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (decoded.at(k, i, j)) soft += probs.at(k, i, j) * demands[i];
        break;
      case LoadMode::expected:
        for (int i = 1; i < n; ++i)
          for (int j = 0; j < n; ++j) soft += probs.at(k, i, j) * demands[i];
        break;
    }
    out.predicted_loads[k] = soft;
  }
  out.capacity_violation = violation / m;

  const PairCostMatrix pc =
      pair_costs(probs, target, out.predicted_loads, out.target_loads, cap, weights);
  out.clamped = pc.clamped;
  out.assignment = assign_min(pc.cost, m);
  out.value = out.assignment.total;
  out.reversed.resize(m);
  for (int k = 0; k < m; ++k) {
    const std::size_t idx = static_cast<std::size_t>(k) * m + out.assignment.perm[k];
    out.reversed[k] = pc.reversed[idx];
    out.nll += pc.nll[idx];
  }

  std::uint64_t sig = 0;
  for (const auto& seq : out.decoded.tours())
    for (int v : seq) sig = mix(sig, static_cast<std::uint64_t>(v) + 1);
  for (int k = 0; k < m; ++k) {
    const int p = out.assignment.perm[k];
    sig = mix(sig, static_cast<std::uint64_t>(p) * 2 + out.reversed[k]);
    sig = mix(sig, out.predicted_loads[k] > cap ? 1 : 2);
    const double diff = out.predicted_loads[k] - out.target_loads[p];
    sig = mix(sig, diff > 0 ? 3 : diff < 0 ? 4 : 5);
  }
  sig = mix(sig, static_cast<std::uint64_t>(pc.clamped));
  out.signature = sig;

  if (!with_gradient) return out;

  // t = P * dL/dP per entry; the NLL part contributes -Y directly.
  Tensor t({m, n, n});
  for (int k = 0; k < m; ++k) {
    const int p = out.assignment.perm[k];
    const auto& seq = target.tour(p);
    auto add_edge = [&](int i, int j) {
      if (out.reversed[k]) std::swap(i, j);
      const std::size_t pos = (static_cast<std::size_t>(k) * n + i) * n + j;
      if (probs.values[pos] >= log_floor) t[pos] -= 1.0;
    };
    if (!target.is_used(p)) {
      add_edge(0, 0);
    } else {
      for (std::size_t s = 0; s + 1 < seq.size(); ++s) add_edge(seq[s], seq[s + 1]);
    }

    if (mode == LoadMode::decoded) continue;
    const double diff = out.predicted_loads[k] - out.target_loads[p];
    const double sign = diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0;
    const double coef =
        weights.over * overload_derivative(out.predicted_loads[k], cap) + weights.load * sign;
    if (coef == 0.0) continue;
    for (int i = 1; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (mode == LoadMode::masked_soft && !decoded.at(k, i, j)) continue;
        const std::size_t pos = (static_cast<std::size_t>(k) * n + i) * n + j;
        t[pos] += probs.values[pos] * coef * demands[i];
      }
    }
  }
  out.d_logits = Tensor({m, n, n});
  for (int r = 0; r < m * n; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * n;
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) row_sum += t[base + j];
    for (int j = 0; j < n; ++j)
      out.d_logits[base + j] = t[base + j] - probs.values[base + j] * row_sum;
  }
  return out;
}

}  // namespace pivrp::loss
