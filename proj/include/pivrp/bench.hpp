#ifndef PIVRP_BENCH_HPP
#define PIVRP_BENCH_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pivrp/data.hpp"
#include "pivrp/decode.hpp"
#include "pivrp/loss.hpp"
#include "pivrp/model.hpp"
#include "pivrp/search.hpp"

namespace pivrp::bench {

// ---------------------------------------------------------------------------
// Configuration

// Fixed cost per used vehicle, keyed by problem size.
struct VehicleCostTable {
  std::map<int, double> by_size = {{20, 35.0}, {50, 50.0}, {100, 80.0}};
  // Entry of the closest size (the smaller one on ties).
  double for_size(int n_customers) const;
};

// 30 ms at N=20, linear in N.
int default_postprocess_ms(int n_customers);

struct BenchConfig {
  model::ModelConfig model;
  loss::LossWeights weights;
  loss::LoadMode load_mode = loss::LoadMode::masked_soft;
  search::SearchConfig search;
  VehicleCostTable vehicle_costs;
  int batch_size = 32;
  int epochs = 10;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// key = value lines; '#' starts a comment. Recognised keys:
///   d_model hidden layers
///   loss.over loss.load loss.load_mode
///   search.penalty_factor search.neighborhoods (comma separated)
///   c_v.<N> (e.g. c_v.20 = 35)
///   batch_size epochs lr seed workers
/// Unknown keys and malformed values throw std::invalid_argument naming the line.
BenchConfig parse_config(const std::string& text);
BenchConfig load_config(const std::string& path);

// Worker count: PIVRP_WORKERS when set to a positive integer, else `fallback`.
int resolve_workers(int fallback);

// ---------------------------------------------------------------------------
// Training

struct TrainSpec {
  std::string dataset_path;
  std::string validation_path;  // optional
  std::string checkpoint_path;  // final and periodic checkpoints
  std::string telemetry_path;   // optional, one JSON object per epoch
  model::ModelConfig model;
  loss::LossWeights weights;
  loss::LoadMode load_mode = loss::LoadMode::masked_soft;
  int batch_size = 32;
  int epochs = 10;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  int checkpoint_every = 1;  // epochs; 0 writes only the final checkpoint
  int workers = 1;
  // Stop each epoch after this many batches (0 = full epoch).
  int max_batches_per_epoch = 0;
};

struct EpochTelemetry {
  int epoch = 0;
  std::int64_t step = 0;
  double loss = 0.0;
  double nll = 0.0;
  double capacity_violation = 0.0;  // per vehicle, pseudo-greedy loads
  std::optional<double> val_loss;
  std::optional<double> val_nll;
  std::optional<double> val_capacity_violation;
  long long clamped = 0;
  double wall_ms = 0.0;
};

std::string to_json_line(const EpochTelemetry& t);

struct TrainResult {
  std::string checkpoint_path;
  std::vector<EpochTelemetry> history;
  numerics::ParamStore params;
};

// Thrown when the loss or a gradient stops being finite. The checkpoint
// written last (if any) is left untouched.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, std::string last_checkpoint)
      : NumericError(what), last_checkpoint_(std::move(last_checkpoint)) {}
  const std::string& last_checkpoint() const { return last_checkpoint_; }

 private:
  std::string last_checkpoint_;
};

// Means over the samples of one optimizer step.
struct BatchTelemetry {
  int epoch = 0;
  std::int64_t step = 0;
  double loss = 0.0;
  double nll = 0.0;
  double capacity_violation = 0.0;
};

using EpochCallback = std::function<void(const EpochTelemetry&)>;
using BatchCallback = std::function<void(const BatchTelemetry&)>;

/// Mini-batch Adam on train_loss. Samples of a batch are split into
/// contiguous chunks, one per worker, and the chunk gradients are summed in
/// worker order, so the result depends only on the spec and worker count.
TrainResult train(const TrainSpec& spec, const EpochCallback& on_epoch = {});

// The same loop over samples already in memory.
TrainResult train(const TrainSpec& spec, const std::vector<data::LabeledSample>& samples,
                  const std::vector<data::LabeledSample>& validation,
                  const EpochCallback& on_epoch = {}, const BatchCallback& on_batch = {});

struct BatchLoss {
  double loss = 0.0;
  double nll = 0.0;
  double capacity_violation = 0.0;
  long long clamped = 0;
};

// Mean loss terms over `samples` without gradients.
BatchLoss evaluate_loss(const model::ModelConfig& config, const numerics::ParamStore& params,
                        const std::vector<data::LabeledSample>& samples,
                        const loss::LossWeights& weights, loss::LoadMode mode, int workers);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalRecord {
  int index = 0;
  bool solved = false;
  double cost = 0.0;
  double cost_v = 0.0;
  int vehicles_used = 0;
  double time_ms = 0.0;         // wall clock around the solver call
  double decode_ms = 0.0;
  double postprocess_ms = 0.0;
  double cost_before = 0.0;     // before post-processing
  double reference_cost = 0.0;  // label cost, NaN when unknown
  std::string error;

  // Field-wise equality; NaN reference costs compare equal.
  friend bool operator==(const EvalRecord& a, const EvalRecord& b);
};

struct EvalAggregates {
  int count = 0;
  int solved = 0;
  double solved_pct = 0.0;
  // Means over solved instances.
  double mean_cost = 0.0;
  double mean_cost_v = 0.0;
  double mean_vehicles = 0.0;
  double mean_cost_before = 0.0;
  double mean_gap_pct = 0.0;  // (cost / reference - 1) * 100, over solved records with a reference
  int gap_count = 0;
  // Means over all instances.
  double mean_time_ms = 0.0;
  double mean_decode_ms = 0.0;
  double mean_postprocess_ms = 0.0;
  // histogram[v] = solved instances using v vehicles.
  std::vector<int> fleet_histogram;

  friend bool operator==(const EvalAggregates&, const EvalAggregates&) = default;
};

struct EvalReport {
  double vehicle_cost = 0.0;
  std::vector<EvalRecord> records;
  EvalAggregates aggregates;
};

// Order-independent aggregation (every mean is summed in sorted order).
EvalAggregates aggregate(const std::vector<EvalRecord>& records);

struct EvalOptions {
  double vehicle_cost = 35.0;
  int workers = 1;
  // Count plans with more than M used tours as solved (guaranteed mode).
  bool allow_extra_vehicles = false;
};

using Solver = std::function<decode::SolveResult(const Instance&)>;

/// Runs `solver` on every instance, timing each call. A plan counts as solved
/// when it passes validate; solver exceptions are recorded on the instance.
EvalReport evaluate(const std::vector<Instance>& instances, const Solver& solver,
                    const EvalOptions& options,
                    const std::vector<double>& reference_costs = {});

// Difference between mean(cost_v) - mean(cost) and c_v * mean(vehicles),
// relative to max(1, |mean(cost_v)|).
double accounting_residual(const EvalReport& report);

enum class ReportFormat { table, csv, json };
ReportFormat report_format_from_string(const std::string& name);

std::string render(const EvalReport& report, ReportFormat format);
void write_report(const EvalReport& report, ReportFormat format, const std::string& path);
// Parses the csv emitted by render; aggregates are recomputed from the rows.
EvalReport parse_csv_report(const std::string& text);
EvalReport read_csv_report(const std::string& path);

// ---------------------------------------------------------------------------
// Solved plans:
//   pivrp1 P <instance fields> <tours> then per tour <count> <ids...>
//            <solved> <decode ms> <postprocess ms> <total ms> <repair insertions>
//            <added tours> <cost before> <cost after> <vehicles used>

struct PlanRecord {
  Instance instance;
  decode::SolveResult result;
};

std::string format_plan_record(const PlanRecord& record);
PlanRecord parse_plan_record(std::string_view line, std::size_t line_number);
void write_plans(const std::vector<PlanRecord>& records, const std::string& path);
std::vector<PlanRecord> read_plans(const std::string& path);

}  // namespace pivrp::bench

#endif  // PIVRP_BENCH_HPP
