#ifndef PIVRP_CORE_HPP
#define PIVRP_CORE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pivrp {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

/// Thrown when a plan's shape does not fit the instance it is checked
/// against. Infeasibility is reported through ValidationReport instead.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One CVRP problem. Vertex 0 is the depot, vertices 1..N are customers.
// Distances are Euclidean and computed on demand from the coordinates.
class Instance {
 public:
  Instance() = default;
  Instance(Point depot, std::vector<Point> customers, std::vector<int> demands,
           int fleet_size, int capacity);

  int num_customers() const { return static_cast<int>(coords_.size()) - 1; }
  int num_vertices() const { return static_cast<int>(coords_.size()); }
  int fleet_size() const { return fleet_size_; }
  int capacity() const { return capacity_; }

  const Point& depot() const { return coords_.front(); }
  const Point& coord(int vertex) const { return coords_[vertex]; }
  // demand(0) == 0
  int demand(int vertex) const { return demands_[vertex]; }
  std::span<const Point> coords() const { return coords_; }
  std::span<const int> demands() const { return demands_; }
  int total_demand() const;

  double dist(int i, int j) const { return distance(coords_[i], coords_[j]); }
  // Dense (N+1)x(N+1) row-major distance table.
  std::vector<double> distance_matrix() const;

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  std::vector<Point> coords_;
  std::vector<int> demands_;
  int fleet_size_ = 0;
  int capacity_ = 0;
};

// Binary adjacency view of a plan: tours x (N+1) x (N+1), row-major.
struct BinaryView {
  int tours = 0;
  int vertices = 0;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(int k, int i, int j) const {
    return bits[(static_cast<std::size_t>(k) * vertices + i) * vertices + j];
  }
  std::uint8_t& at(int k, int i, int j) {
    return bits[(static_cast<std::size_t>(k) * vertices + i) * vertices + j];
  }
  friend bool operator==(const BinaryView&, const BinaryView&) = default;
};

// A tour plan. Each tour is stored in sequence form: an empty vector for an
// idle vehicle, otherwise [0, c1, ..., cm, 0].
class Plan {
 public:
  Plan() = default;
  explicit Plan(std::vector<std::vector<int>> tours) : tours_(std::move(tours)) {}

  // M idle vehicles.
  static Plan idle(int fleet_size);
  // Builds sequence form from customer-only lists (no depot entries).
  static Plan from_customer_lists(const std::vector<std::vector<int>>& lists);
  static Plan from_binary(const BinaryView& view);

  int num_tours() const { return static_cast<int>(tours_.size()); }
  const std::vector<std::vector<int>>& tours() const { return tours_; }
  const std::vector<int>& tour(int k) const { return tours_[k]; }
  std::vector<int>& tour(int k) { return tours_[k]; }
  void add_tour(std::vector<int> sequence) { tours_.push_back(std::move(sequence)); }

  // Customer-only list for tour k (depot entries stripped).
  std::vector<int> customers(int k) const;
  bool is_used(int k) const;
  int vehicles_used() const;

  BinaryView binary_view(int num_vertices) const;

  friend bool operator==(const Plan&, const Plan&) = default;

 private:
  std::vector<std::vector<int>> tours_;
};

enum class ViolationKind { unserved, duplicated, capacity, broken_tour, fleet_exceeded };

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct ValidationReport {
  bool feasible = true;
  std::vector<Violation> violations;

  bool has(ViolationKind kind) const;
};

/// Checks depot anchoring, exactly-once service, per-tour capacity and the
/// fleet bound (used tours <= M unless allow_extra_vehicles). Throws
/// StructuralError when the plan references vertices the instance does not
/// have.
ValidationReport validate(const Instance& instance, const Plan& plan,
                          bool allow_extra_vehicles = false);

// Sum of Euclidean edge lengths over all traversed edges.
double route_cost(const Instance& instance, const Plan& plan);
// route_cost plus c_v per vehicle that leaves the depot.
double cost_v(const Instance& instance, const Plan& plan, double vehicle_cost);

int tour_load(const Instance& instance, const std::vector<int>& sequence);

// Entity encodings fed to the model.
struct FeatureSet {
  static constexpr int depot_width = 3;
  static constexpr int customer_width = 3;
  static constexpr int vehicle_width = 4;

  int num_customers = 0;
  int num_vehicles = 0;
  std::vector<double> depot;      // (x, y, centrality)
  std::vector<double> customers;  // N x (x, y, q/Q)
  std::vector<double> vehicles;   // M x (1/k, k, Q, total demand)
};

// Mean depot-to-customer distance. Summed in sorted order so the value does
// not depend on customer ordering.
double depot_centrality(const Instance& instance);

FeatureSet encode(const Instance& instance);

}  // namespace pivrp

#endif  // PIVRP_CORE_HPP
