#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "pivrp/search.hpp"

namespace pivrp::search {

namespace {

using Routes = std::vector<std::vector<int>>;

std::optional<Routes> savings(const Instance& inst) {
  const int n = inst.num_customers();
  const int cap = inst.capacity();
  // route_of[c] indexes into routes; merged-away routes are cleared.
  std::vector<int> route_of(n + 1);
  Routes routes(n);
  std::vector<int> load(n);
  for (int c = 1; c <= n; ++c) {
    routes[c - 1] = {c};
    route_of[c] = c - 1;
    load[c - 1] = inst.demand(c);
  }

  struct Saving {
    double value;
    int i, j;
  };
  std::vector<Saving> list;
  list.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      list.push_back({inst.dist(0, i) + inst.dist(0, j) - inst.dist(i, j), i, j});
  std::stable_sort(list.begin(), list.end(),
                   [](const Saving& a, const Saving& b) { return a.value > b.value; });

  for (const auto& s : list) {
    const int ri = route_of[s.i];
    const int rj = route_of[s.j];
    if (ri == rj || load[ri] + load[rj] > cap) continue;
    auto& a = routes[ri];
    auto& b = routes[rj];
    const bool i_front = a.front() == s.i, i_back = a.back() == s.i;
    const bool j_front = b.front() == s.j, j_back = b.back() == s.j;
    if (!(i_front || i_back) || !(j_front || j_back)) continue;
    // Orient so that a ends with i and b starts with j.
    if (!i_back) std::reverse(a.begin(), a.end());
    if (!j_front) std::reverse(b.begin(), b.end());
    a.insert(a.end(), b.begin(), b.end());
    load[ri] += load[rj];
    load[rj] = 0;
    for (int c : b) route_of[c] = ri;
    b.clear();
  }
  Routes out;
  for (auto& r : routes)
    if (!r.empty()) out.push_back(std::move(r));
  if (static_cast<int>(out.size()) > inst.fleet_size()) return std::nullopt;
  return out;
}

std::vector<int> by_angle(const Instance& inst) {
  const int n = inst.num_customers();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 1);
  std::vector<double> angle(n + 1);
  for (int c = 1; c <= n; ++c)
    angle[c] = std::atan2(inst.coord(c).y - inst.depot().y, inst.coord(c).x - inst.depot().x);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return angle[a] < angle[b]; });
  return order;
}

double routes_cost(const Instance& inst, const Routes& routes) {
  return route_cost(inst, Plan::from_customer_lists(routes));
}

std::optional<Routes> sweep(const Instance& inst) {
  const std::vector<int> order = by_angle(inst);
  const int n = static_cast<int>(order.size());
  std::optional<Routes> best;
  double best_cost = 0.0;
  for (int start = 0; start < n; ++start) {
    Routes routes(1);
    int load = 0;
    for (int s = 0; s < n; ++s) {
      const int c = order[(start + s) % n];
      if (load + inst.demand(c) > inst.capacity()) {
        routes.emplace_back();
        load = 0;
      }
      routes.back().push_back(c);
      load += inst.demand(c);
    }
    if (static_cast<int>(routes.size()) > inst.fleet_size()) continue;
    const double cost = routes_cost(inst, routes);
    if (!best || cost < best_cost) {
      best = std::move(routes);
      best_cost = cost;
    }
  }
  return best;
}

// Best-fit decreasing on demands; each bin is then ordered by polar angle.
std::optional<Routes> bin_packing(const Instance& inst) {
  std::vector<int> order(inst.num_customers());
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return inst.demand(a) > inst.demand(b); });
  const int m = inst.fleet_size();
  Routes bins(m);
  std::vector<int> load(m, 0);
  for (int c : order) {
    int chosen = -1;
    for (int k = 0; k < m; ++k) {
      if (load[k] + inst.demand(c) > inst.capacity()) continue;
      if (chosen < 0 || load[k] > load[chosen]) chosen = k;
    }
    if (chosen < 0) return std::nullopt;
    bins[chosen].push_back(c);
    load[chosen] += inst.demand(c);
  }
  const std::vector<int> angular = by_angle(inst);
  std::vector<int> rank(inst.num_vertices());
  for (int r = 0; r < static_cast<int>(angular.size()); ++r) rank[angular[r]] = r;
  Routes out;
  for (auto& b : bins) {
    if (b.empty()) continue;
    std::sort(b.begin(), b.end(), [&](int x, int y) { return rank[x] < rank[y]; });
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

std::optional<Plan> construct(const Instance& instance) {
  std::optional<Routes> routes = savings(instance);
  if (!routes) routes = sweep(instance);
  if (!routes) routes = bin_packing(instance);
  if (!routes) return std::nullopt;
  routes->resize(instance.fleet_size());
  return Plan::from_customer_lists(*routes);
}

}  // namespace pivrp::search
