#include "pivrp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pivrp {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

bool in_unit_square(const Point& p) {
  return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
}

}  // namespace

Instance::Instance(Point depot, std::vector<Point> customers, std::vector<int> demands,
                   int fleet_size, int capacity)
    : fleet_size_(fleet_size), capacity_(capacity) {
  if (customers.empty()) throw std::invalid_argument("instance needs at least one customer");
  if (customers.size() != demands.size())
    throw std::invalid_argument("customer and demand counts differ");
  if (fleet_size < 1) throw std::invalid_argument("fleet size must be positive");
  if (capacity < 1) throw std::invalid_argument("capacity must be positive");
  if (!in_unit_square(depot)) throw std::invalid_argument("depot outside the unit square");

  coords_.reserve(customers.size() + 1);
  coords_.push_back(depot);
  demands_.reserve(demands.size() + 1);
  demands_.push_back(0);
  long long total = 0;
  for (std::size_t i = 0; i < customers.size(); ++i) {
    if (!in_unit_square(customers[i]))
      throw std::invalid_argument("customer " + std::to_string(i + 1) + " outside the unit square");
    if (demands[i] < 1 || demands[i] > capacity)
      throw std::invalid_argument("customer " + std::to_string(i + 1) + " demand out of [1, Q]");
    coords_.push_back(customers[i]);
    demands_.push_back(demands[i]);
    total += demands[i];
  }
  if (total > static_cast<long long>(fleet_size) * capacity)
    throw std::invalid_argument("total demand exceeds M*Q");
}

int Instance::total_demand() const { return std::accumulate(demands_.begin(), demands_.end(), 0); }

std::vector<double> Instance::distance_matrix() const {
  const int n = num_vertices();
  std::vector<double> d(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d[static_cast<std::size_t>(i) * n + j] = dist(i, j);
  return d;
}

Plan Plan::idle(int fleet_size) { return Plan(std::vector<std::vector<int>>(fleet_size)); }

Plan Plan::from_customer_lists(const std::vector<std::vector<int>>& lists) {
  std::vector<std::vector<int>> tours;
  tours.reserve(lists.size());
  for (const auto& list : lists) {
    std::vector<int> seq;
    if (!list.empty()) {
      seq.reserve(list.size() + 2);
      seq.push_back(0);
      seq.insert(seq.end(), list.begin(), list.end());
      seq.push_back(0);
    }
    tours.push_back(std::move(seq));
  }
  return Plan(std::move(tours));
}

Plan Plan::from_binary(const BinaryView& view) {
  std::vector<std::vector<int>> tours(view.tours);
  for (int k = 0; k < view.tours; ++k) {
    if (view.at(k, 0, 0)) continue;
    std::vector<int>& seq = tours[k];
    seq.push_back(0);
    int current = 0;
    do {
      int next = -1;
      for (int j = 0; j < view.vertices; ++j) {
        if (view.at(k, current, j)) {
          next = j;
          break;
        }
      }
      if (next < 0 || static_cast<int>(seq.size()) > view.vertices)
        throw StructuralError("binary view of tour " + std::to_string(k) + " is not a depot cycle");
      seq.push_back(next);
      current = next;
    } while (current != 0);
    if (seq.size() == 2)
      throw StructuralError("binary view of tour " + std::to_string(k) + " has no depot exit");
  }
  return Plan(std::move(tours));
}

std::vector<int> Plan::customers(int k) const {
  std::vector<int> out;
  for (int v : tours_[k])
    if (v != 0) out.push_back(v);
  return out;
}

bool Plan::is_used(int k) const {
  return std::any_of(tours_[k].begin(), tours_[k].end(), [](int v) { return v != 0; });
}

int Plan::vehicles_used() const {
  int used = 0;
  for (int k = 0; k < num_tours(); ++k) used += is_used(k) ? 1 : 0;
  return used;
}

BinaryView Plan::binary_view(int num_vertices) const {
  BinaryView view;
  view.tours = num_tours();
  view.vertices = num_vertices;
  view.bits.assign(static_cast<std::size_t>(view.tours) * num_vertices * num_vertices, 0);
  for (int k = 0; k < view.tours; ++k) {
    const auto& seq = tours_[k];
    if (!is_used(k)) {
      view.at(k, 0, 0) = 1;
      continue;
    }
    for (std::size_t p = 0; p + 1 < seq.size(); ++p) {
      if (seq[p] < 0 || seq[p] >= num_vertices || seq[p + 1] < 0 || seq[p + 1] >= num_vertices)
        throw StructuralError("tour vertex out of range");
      view.at(k, seq[p], seq[p + 1]) = 1;
    }
  }
  return view;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::unserved: return "unserved";
    case ViolationKind::duplicated: return "duplicated";
    case ViolationKind::capacity: return "capacity";
    case ViolationKind::broken_tour: return "broken-tour";
    case ViolationKind::fleet_exceeded: return "fleet-exceeded";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate(const Instance& instance, const Plan& plan, bool allow_extra_vehicles) {
  const int n = instance.num_vertices();
  for (int k = 0; k < plan.num_tours(); ++k)
    for (int v : plan.tour(k))
      if (v < 0 || v >= n)
        throw StructuralError("tour " + std::to_string(k) + " references vertex " +
                              std::to_string(v) + " but the instance has " + std::to_string(n) +
                              " vertices");

  ValidationReport report;
  auto add = [&report](ViolationKind kind, std::string detail) {
    report.violations.push_back({kind, std::move(detail)});
  };

  std::vector<int> visits(n, 0);
  for (int k = 0; k < plan.num_tours(); ++k) {
    const auto& seq = plan.tour(k);
    if (seq.empty()) continue;
    if (seq.size() < 3 || seq.front() != 0 || seq.back() != 0) {
      add(ViolationKind::broken_tour, "tour " + std::to_string(k) + " is not anchored at the depot");
    }
    for (std::size_t p = 1; p + 1 < seq.size(); ++p) {
      if (seq[p] == 0)
        add(ViolationKind::broken_tour,
            "tour " + std::to_string(k) + " revisits the depot at position " + std::to_string(p));
    }
    for (int v : seq)
      if (v != 0) ++visits[v];
    const int load = tour_load(instance, seq);
    if (load > instance.capacity())
      add(ViolationKind::capacity, "tour " + std::to_string(k) + " carries " +
                                       std::to_string(load) + " > Q=" +
                                       std::to_string(instance.capacity()));
  }
  for (int i = 1; i < n; ++i) {
    if (visits[i] == 0)
      add(ViolationKind::unserved, "customer " + std::to_string(i));
    else if (visits[i] > 1)
      add(ViolationKind::duplicated,
          "customer " + std::to_string(i) + " visited " + std::to_string(visits[i]) + " times");
  }
  if (!allow_extra_vehicles && plan.vehicles_used() > instance.fleet_size())
    add(ViolationKind::fleet_exceeded, std::to_string(plan.vehicles_used()) + " tours for M=" +
                                           std::to_string(instance.fleet_size()));
  report.feasible = report.violations.empty();
  return report;
}

double route_cost(const Instance& instance, const Plan& plan) {
  double total = 0.0;
  const int n = instance.num_vertices();
  for (const auto& seq : plan.tours()) {
    for (std::size_t p = 0; p + 1 < seq.size(); ++p) {
      if (seq[p] < 0 || seq[p] >= n || seq[p + 1] < 0 || seq[p + 1] >= n)
        throw StructuralError("tour vertex out of range");
      total += instance.dist(seq[p], seq[p + 1]);
    }
  }
  return total;
}

double cost_v(const Instance& instance, const Plan& plan, double vehicle_cost) {
  return route_cost(instance, plan) + vehicle_cost * plan.vehicles_used();
}

int tour_load(const Instance& instance, const std::vector<int>& sequence) {
  int load = 0;
  for (int v : sequence) load += instance.demand(v);
  return load;
}

double depot_centrality(const Instance& instance) {
  std::vector<double> d;
  d.reserve(instance.num_customers());
  for (int i = 1; i <= instance.num_customers(); ++i) d.push_back(instance.dist(0, i));
  std::sort(d.begin(), d.end());
  double sum = 0.0;
  for (double x : d) sum += x;
  return sum / static_cast<double>(d.size());
}

FeatureSet encode(const Instance& instance) {
  FeatureSet f;
  f.num_customers = instance.num_customers();
  f.num_vehicles = instance.fleet_size();
  const double q_cap = instance.capacity();
  f.depot = {instance.depot().x, instance.depot().y, depot_centrality(instance)};
  f.customers.reserve(static_cast<std::size_t>(f.num_customers) * FeatureSet::customer_width);
  for (int i = 1; i <= f.num_customers; ++i) {
    f.customers.push_back(instance.coord(i).x);
    f.customers.push_back(instance.coord(i).y);
    f.customers.push_back(instance.demand(i) / q_cap);
  }
  const double total = instance.total_demand();
  f.vehicles.reserve(static_cast<std::size_t>(f.num_vehicles) * FeatureSet::vehicle_width);
  for (int k = 1; k <= f.num_vehicles; ++k) {
    f.vehicles.push_back(1.0 / k);
    f.vehicles.push_back(static_cast<double>(k));
    f.vehicles.push_back(q_cap);
    f.vehicles.push_back(total);
  }
  return f;
}

}  // namespace pivrp
