#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "pivrp/search.hpp"

namespace pivrp::search {

std::string to_string(Neighborhood n) {
  switch (n) {
    case Neighborhood::two_opt: return "two-opt";
    case Neighborhood::or_opt: return "or-opt";
    case Neighborhood::relocate: return "relocate";
    case Neighborhood::swap: return "swap";
    case Neighborhood::cross_exchange: return "cross-exchange";
  }
  return "unknown";
}

Neighborhood neighborhood_from_string(const std::string& name) {
  for (auto n : {Neighborhood::two_opt, Neighborhood::or_opt, Neighborhood::relocate,
                 Neighborhood::swap, Neighborhood::cross_exchange})
    if (to_string(n) == name) return n;
  throw std::invalid_argument("unknown neighborhood '" + name + "'");
}

namespace {

constexpr double improvement_eps = 1e-10;

using Routes = std::vector<std::vector<int>>;
using Clock = std::chrono::steady_clock;

// Moves are evaluated on the augmented objective dist + lambda * penalty.
// The incumbent is tracked on plain distance.
class GuidedLocalSearch {
 public:
  GuidedLocalSearch(const Instance& inst, const Plan& plan, const SearchConfig& config)
      : inst_(inst),
        config_(config),
        nv_(inst.num_vertices()),
        dist_(inst.distance_matrix()),
        penalty_(static_cast<std::size_t>(nv_) * nv_, 0) {
    for (int k = 0; k < plan.num_tours(); ++k) {
      routes_.push_back(plan.customers(k));
      load_.push_back(tour_load(inst, routes_.back()));
      may_receive_.push_back(!config.fixed_fleet || !routes_.back().empty());
    }
  }

  Routes run(SearchStats& stats) {
    const auto start = Clock::now();
    const auto deadline = start + std::chrono::milliseconds(config_.budget_ms);
    double current = true_cost();
    Routes best = routes_;
    double best_cost = current;
    stats.initial_cost = current;

    std::int64_t iterations = 0;
    while (true) {
      if (config_.max_iterations > 0) {
        if (iterations >= config_.max_iterations) break;
      } else if (Clock::now() >= deadline) {
        break;
      }
      ++iterations;
      bool moved = false;
      for (Neighborhood nb : config_.neighborhoods) {
        if (try_neighborhood(nb)) {
          moved = true;
          break;
        }
      }
      if (moved) {
        current = true_cost();
        if (current < best_cost - improvement_eps) {
          best = routes_;
          best_cost = current;
          stats.trajectory.emplace_back(iterations, best_cost);
        }
        continue;
      }
      if (lambda_ == 0.0) {
        const int edges = edge_count();
        lambda_ = edges > 0 ? config_.penalty_factor * current / edges : 0.0;
        if (lambda_ <= 0.0) break;
      }
      penalize();
      ++stats.penalty_rounds;
    }
    stats.iterations = iterations;
    stats.final_cost = best_cost;
    return best;
  }

 private:
  double d(int i, int j) const { return dist_[static_cast<std::size_t>(i) * nv_ + j]; }
  double a(int i, int j) const {
    const std::size_t idx = static_cast<std::size_t>(i) * nv_ + j;
    return dist_[idx] + lambda_ * penalty_[idx];
  }
  // Vertex at path position p of route r, where the path is [0, route..., 0].
  int node(int r, int p) const {
    const auto& route = routes_[r];
    return (p == 0 || p == static_cast<int>(route.size()) + 1) ? 0 : route[p - 1];
  }

  double true_cost() const {
    double total = 0.0;
    for (int r = 0; r < static_cast<int>(routes_.size()); ++r) {
      const int len = static_cast<int>(routes_[r].size());
      if (len == 0) continue;
      for (int p = 0; p <= len; ++p) total += d(node(r, p), node(r, p + 1));
    }
    return total;
  }

  int edge_count() const {
    int e = 0;
    for (const auto& r : routes_)
      if (!r.empty()) e += static_cast<int>(r.size()) + 1;
    return e;
  }

  void penalize() {
    double best_utility = -1.0;
    for (int r = 0; r < static_cast<int>(routes_.size()); ++r) {
      const int len = static_cast<int>(routes_[r].size());
      if (len == 0) continue;
      for (int p = 0; p <= len; ++p) {
        const int i = node(r, p), j = node(r, p + 1);
        best_utility = std::max(best_utility, d(i, j) / (1.0 + penalty_[i * nv_ + j]));
      }
    }
    for (int r = 0; r < static_cast<int>(routes_.size()); ++r) {
      const int len = static_cast<int>(routes_[r].size());
      if (len == 0) continue;
      for (int p = 0; p <= len; ++p) {
        const int i = node(r, p), j = node(r, p + 1);
        // Each undirected edge is penalized once per round.
        if (d(i, j) / (1.0 + penalty_[i * nv_ + j]) >= best_utility - 1e-12 &&
            !(i == 0 && j == 0)) {
          ++penalty_[i * nv_ + j];
          if (i != j) ++penalty_[j * nv_ + i];
        }
      }
    }
  }

  bool try_neighborhood(Neighborhood nb) {
    switch (nb) {
      case Neighborhood::two_opt: return two_opt();
      case Neighborhood::or_opt: return or_opt();
      case Neighborhood::relocate: return relocate();
      case Neighborhood::swap: return swap();
      case Neighborhood::cross_exchange: return cross_exchange();
    }
    return false;
  }

  bool two_opt() {
    for (int r = 0; r < static_cast<int>(routes_.size()); ++r) {
      const int m = static_cast<int>(routes_[r].size());
      for (int i = 0; i < m - 1; ++i) {
        for (int j = i + 2; j <= m; ++j) {
          const int pi = node(r, i), pi1 = node(r, i + 1);
          const int pj = node(r, j), pj1 = node(r, j + 1);
          const double delta = a(pi, pj) + a(pi1, pj1) - a(pi, pi1) - a(pj, pj1);
          if (delta < -improvement_eps) {
            std::reverse(routes_[r].begin() + i, routes_[r].begin() + j);
            return true;
          }
        }
      }
    }
    return false;
  }

  bool or_opt() {
    for (int r = 0; r < static_cast<int>(routes_.size()); ++r) {
      const int m = static_cast<int>(routes_[r].size());
      for (int len = 1; len <= 3 && len < m; ++len) {
        for (int s = 0; s + len <= m; ++s) {
          const auto& route = routes_[r];
          const int first = route[s], last = route[s + len - 1];
          const int prev = node(r, s), next = node(r, s + len + 1);
          const double removal = a(prev, first) + a(last, next) - a(prev, next);
          std::vector<int> rest;
          rest.reserve(m - len);
          rest.insert(rest.end(), route.begin(), route.begin() + s);
          rest.insert(rest.end(), route.begin() + s + len, route.end());
          const int rest_len = static_cast<int>(rest.size());
          for (int g = 0; g <= rest_len; ++g) {
            if (g == s) continue;
            const int u = g == 0 ? 0 : rest[g - 1];
            const int v = g == rest_len ? 0 : rest[g];
            const double forward = a(u, first) + a(last, v) - a(u, v);
            const double backward = a(u, last) + a(first, v) - a(u, v);
            const bool reversed = backward < forward;
            if (std::min(forward, backward) - removal < -improvement_eps) {
              std::vector<int> segment(route.begin() + s, route.begin() + s + len);
              if (reversed) std::reverse(segment.begin(), segment.end());
              rest.insert(rest.begin() + g, segment.begin(), segment.end());
              routes_[r] = std::move(rest);
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  bool relocate() {
    const int routes = static_cast<int>(routes_.size());
    for (int r1 = 0; r1 < routes; ++r1) {
      for (int i = 0; i < static_cast<int>(routes_[r1].size()); ++i) {
        const int u = routes_[r1][i];
        const int prev = node(r1, i), next = node(r1, i + 2);
        const double removal = a(prev, u) + a(u, next) - a(prev, next);
        for (int r2 = 0; r2 < routes; ++r2) {
          if (r2 == r1 || !may_receive_[r2]) continue;
          if (load_[r2] + inst_.demand(u) > inst_.capacity()) continue;
          const int len2 = static_cast<int>(routes_[r2].size());
          for (int g = 0; g <= len2; ++g) {
            const int x = node(r2, g), y = node(r2, g + 1);
            const double delta = a(x, u) + a(u, y) - a(x, y) - removal;
            if (delta < -improvement_eps) {
              routes_[r1].erase(routes_[r1].begin() + i);
              routes_[r2].insert(routes_[r2].begin() + g, u);
              load_[r1] -= inst_.demand(u);
              load_[r2] += inst_.demand(u);
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  bool swap() {
    const int routes = static_cast<int>(routes_.size());
    const int cap = inst_.capacity();
    for (int r1 = 0; r1 < routes; ++r1) {
      for (int r2 = r1 + 1; r2 < routes; ++r2) {
        for (int i = 0; i < static_cast<int>(routes_[r1].size()); ++i) {
          const int u = routes_[r1][i];
          const int p1 = node(r1, i), n1 = node(r1, i + 2);
          for (int j = 0; j < static_cast<int>(routes_[r2].size()); ++j) {
            const int v = routes_[r2][j];
            const int diff = inst_.demand(v) - inst_.demand(u);
            if (load_[r1] + diff > cap || load_[r2] - diff > cap) continue;
            const int p2 = node(r2, j), n2 = node(r2, j + 2);
            const double delta = a(p1, v) + a(v, n1) - a(p1, u) - a(u, n1) + a(p2, u) + a(u, n2) -
                                 a(p2, v) - a(v, n2);
            if (delta < -improvement_eps) {
              routes_[r1][i] = v;
              routes_[r2][j] = u;
              load_[r1] += diff;
              load_[r2] -= diff;
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  // Tail exchange between two routes (2-opt*): A1|B1, A2|B2 -> A1 B2, A2 B1.
  bool cross_exchange() {
    const int routes = static_cast<int>(routes_.size());
    const int cap = inst_.capacity();
    for (int r1 = 0; r1 < routes; ++r1) {
      for (int r2 = r1 + 1; r2 < routes; ++r2) {
        const auto& x = routes_[r1];
        const auto& y = routes_[r2];
        const int m1 = static_cast<int>(x.size()), m2 = static_cast<int>(y.size());
        if (m1 == 0 && m2 == 0) continue;
        int prefix1 = 0;
        for (int i = 0; i <= m1; ++i) {
          if (i > 0) prefix1 += inst_.demand(x[i - 1]);
          int prefix2 = 0;
          for (int j = 0; j <= m2; ++j) {
            if (j > 0) prefix2 += inst_.demand(y[j - 1]);
            if ((i == 0 && j == 0) || (i == m1 && j == m2)) continue;
            const int new1 = prefix1 + (load_[r2] - prefix2);
            const int new2 = prefix2 + (load_[r1] - prefix1);
            if (new1 > cap || new2 > cap) continue;
            // A route that was idle must not gain customers unless allowed.
            if ((m1 == 0 && new1 > 0 && !may_receive_[r1]) ||
                (m2 == 0 && new2 > 0 && !may_receive_[r2]))
              continue;
            const int a1 = node(r1, i), b1 = node(r1, i + 1);
            const int a2 = node(r2, j), b2 = node(r2, j + 1);
            const double delta = a(a1, b2) + a(a2, b1) - a(a1, b1) - a(a2, b2);
            if (delta < -improvement_eps) {
              std::vector<int> nx(x.begin(), x.begin() + i);
              nx.insert(nx.end(), y.begin() + j, y.end());
              std::vector<int> ny(y.begin(), y.begin() + j);
              ny.insert(ny.end(), x.begin() + i, x.end());
              routes_[r1] = std::move(nx);
              routes_[r2] = std::move(ny);
              load_[r1] = new1;
              load_[r2] = new2;
              return true;
            }
          }
        }
      }
    }
    return false;
  }

  const Instance& inst_;
  const SearchConfig& config_;
  int nv_;
  std::vector<double> dist_;
  std::vector<int> penalty_;
  double lambda_ = 0.0;
  Routes routes_;
  std::vector<int> load_;
  std::vector<char> may_receive_;
};

}  // namespace

Plan improve(const Instance& instance, const Plan& plan, const SearchConfig& config,
             SearchStats* stats) {
  if (config.max_iterations <= 0 && config.budget_ms <= 0)
    throw std::invalid_argument("search budget must be positive");
  GuidedLocalSearch gls(instance, plan, config);
  SearchStats local;
  Routes best = gls.run(stats ? *stats : local);
  // Customer lists keep the input's tour count and order.
  return Plan::from_customer_lists(best);
}

}  // namespace pivrp::search
