#include <algorithm>
#include <limits>
#include <stdexcept>

#include "pivrp/search.hpp"

namespace pivrp::search {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Held-Karp over `nodes` (customer vertex ids); returns the optimal closed
// tour cost for every subset mask together with the route for the full set
// when requested.
struct HeldKarp {
  std::vector<int> nodes;
  std::vector<double> best;  // [mask * k + last]
  std::vector<int> parent;

  HeldKarp(const Instance& inst, std::vector<int> customers) : nodes(std::move(customers)) {
    const int k = static_cast<int>(nodes.size());
    const std::size_t masks = std::size_t{1} << k;
    best.assign(masks * k, inf);
    parent.assign(masks * k, -1);
    for (int i = 0; i < k; ++i) best[(std::size_t{1} << i) * k + i] = inst.dist(0, nodes[i]);
    for (std::size_t mask = 1; mask < masks; ++mask) {
      for (int last = 0; last < k; ++last) {
        if (!(mask >> last & 1)) continue;
        const double here = best[mask * k + last];
        if (here == inf) continue;
        for (int next = 0; next < k; ++next) {
          if (mask >> next & 1) continue;
          const std::size_t nmask = mask | (std::size_t{1} << next);
          const double cand = here + inst.dist(nodes[last], nodes[next]);
          if (cand < best[nmask * k + next]) {
            best[nmask * k + next] = cand;
            parent[nmask * k + next] = last;
          }
        }
      }
    }
  }

  double cycle_cost(const Instance& inst, std::size_t mask, int* last_out = nullptr) const {
    if (mask == 0) return 0.0;
    const int k = static_cast<int>(nodes.size());
    double cost = inf;
    for (int last = 0; last < k; ++last) {
      if (!(mask >> last & 1)) continue;
      const double c = best[mask * k + last] + inst.dist(nodes[last], 0);
      if (c < cost) {
        cost = c;
        if (last_out) *last_out = last;
      }
    }
    return cost;
  }

  std::vector<int> route(const Instance& inst, std::size_t mask) const {
    std::vector<int> out;
    if (mask == 0) return out;
    const int k = static_cast<int>(nodes.size());
    int last = -1;
    cycle_cost(inst, mask, &last);
    while (last >= 0) {
      out.push_back(nodes[last]);
      const int prev = parent[mask * k + last];
      mask &= ~(std::size_t{1} << last);
      last = prev;
    }
    std::reverse(out.begin(), out.end());
    return out;
  }
};

}  // namespace

std::vector<int> optimal_tour(const Instance& instance, const std::vector<int>& customers) {
  if (customers.size() > 16) throw std::invalid_argument("optimal_tour supports at most 16 customers");
  if (customers.empty()) return {};
  HeldKarp hk(instance, customers);
  std::vector<int> seq = {0};
  for (int c : hk.route(instance, (std::size_t{1} << customers.size()) - 1)) seq.push_back(c);
  seq.push_back(0);
  return seq;
}

Plan exact_small(const Instance& instance) {
  const int n = instance.num_customers();
  const int m = instance.fleet_size();
  if (n > exact_max_customers || m > exact_max_fleet)
    throw std::invalid_argument("exact_small supports N <= 8 and M <= 3, got N=" +
                                std::to_string(n) + ", M=" + std::to_string(m));
  std::vector<int> customers(n);
  for (int i = 0; i < n; ++i) customers[i] = i + 1;
  HeldKarp hk(instance, customers);

  const std::size_t masks = std::size_t{1} << n;
  std::vector<double> group(masks, inf);
  for (std::size_t mask = 0; mask < masks; ++mask) {
    int load = 0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) load += instance.demand(i + 1);
    if (load <= instance.capacity()) group[mask] = hk.cycle_cost(instance, mask);
  }

  // cover[j][mask]: cheapest split of mask into at most j capacity-feasible
  // groups; the group containing the lowest customer is enumerated first.
  std::vector<std::vector<double>> cover(m + 1, std::vector<double>(masks, inf));
  std::vector<std::vector<std::size_t>> choice(m + 1, std::vector<std::size_t>(masks, 0));
  for (int j = 0; j <= m; ++j) cover[j][0] = 0.0;
  for (int j = 1; j <= m; ++j) {
    for (std::size_t mask = 1; mask < masks; ++mask) {
      const std::size_t low = mask & (~mask + 1);
      const std::size_t rest = mask ^ low;
      // Enumerate submasks of rest; the group is sub | low.
      for (std::size_t sub = rest;; sub = (sub - 1) & rest) {
        const std::size_t g = sub | low;
        if (group[g] < inf && cover[j - 1][mask ^ g] < inf) {
          const double cand = group[g] + cover[j - 1][mask ^ g];
          if (cand < cover[j][mask]) {
            cover[j][mask] = cand;
            choice[j][mask] = g;
          }
        }
        if (sub == 0) break;
      }
    }
  }
  if (cover[m][masks - 1] == inf) throw std::invalid_argument("instance has no feasible plan");

  std::vector<std::vector<int>> lists;
  std::size_t mask = masks - 1;
  for (int j = m; j >= 1 && mask != 0; --j) {
    const std::size_t g = choice[j][mask];
    lists.push_back(hk.route(instance, g));
    mask ^= g;
  }
  lists.resize(m);
  return Plan::from_customer_lists(lists);
}

}  // namespace pivrp::search
