#ifndef PIVRP_DATA_HPP
#define PIVRP_DATA_HPP

#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pivrp/core.hpp"

namespace pivrp::data {

struct GenSpec {
  int n_customers = 20;
  int fleet_size = 4;
  int capacity = 30;
  int demand_min = 1;
  int demand_max = 9;
  std::uint64_t seed = 1;

  // (20, 4, 30), (50, 7, 40), (100, 11, 50); other sizes scale M linearly
  // from the nearest row.
  static GenSpec defaults_for(int n_customers);
};

// Counter-based child seed of instance `index` (splitmix64 of seed + index).
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform coordinates and demands, resampled as a whole until the total
/// demand fits M*Q. Deterministic in spec.seed. Throws std::invalid_argument
/// when even minimal demands cannot fit.
Instance generate(const GenSpec& spec);

// Instance `index` of the stream seeded by spec.seed.
Instance generate_indexed(const GenSpec& spec, std::uint64_t index);

// Instances 0..count-1 of the stream; the result is independent of `workers`.
std::vector<Instance> generate_many(const GenSpec& spec, int count, int workers = 1);

struct LabeledSample {
  Instance instance;
  Plan target;  // exactly M tours
  double label_cost = 0.0;
  int label_budget_ms = 0;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// 1000 ms at N=20, linear in N.
int default_label_budget_ms(int n_customers);

struct LabelOutcome {
  std::optional<LabeledSample> sample;
  std::string failure;  // why the sample was discarded
};

/// Construction followed by guided local search within M tours. With
/// max_iterations > 0 the search budget is counted in iterations.
LabelOutcome label(const Instance& instance, int budget_ms, std::int64_t max_iterations = 0);

// Labels in parallel; discarded instances are omitted and reported via `failures`.
std::vector<LabeledSample> label_many(const std::vector<Instance>& instances, int budget_ms,
                                      int workers, std::vector<std::string>* failures = nullptr,
                                      std::int64_t max_iterations = 0);

// ---------------------------------------------------------------------------
// Line-delimited records, one per line, whitespace separated:
//
//   pivrp1 I <N> <M> <Q> <depot x> <depot y> <x_1> <y_1> ... <x_N> <y_N> <q_1> ... <q_N>
//   pivrp1 L <instance fields as above> <label cost> <budget ms> <tours>
//            then per tour: <count> <customer ids...>
//
// Reals carry 17 significant digits.

inline constexpr const char* record_version = "pivrp1";

class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A dataset entry: an instance, optionally with its label.
struct Record {
  Instance instance;
  std::optional<LabeledSample> labeled;
};

std::string format_instance_fields(const Instance& instance);
std::string format_tours(const Plan& plan);
std::string format_record(const Instance& instance);
std::string format_record(const LabeledSample& sample);

// Token cursor used by every record parser.
class TokenCursor {
 public:
  TokenCursor(std::vector<std::string_view> tokens, std::size_t line)
      : tokens_(std::move(tokens)), line_(line) {}
  std::string_view next(const char* what);
  long long integer(const char* what);
  double real(const char* what);
  bool done() const { return pos_ == tokens_.size(); }
  std::size_t line() const { return line_; }

 private:
  std::vector<std::string_view> tokens_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

Instance parse_instance_fields(TokenCursor& cursor);
Plan parse_tours(TokenCursor& cursor, const Instance& instance);
Record parse_record(std::string_view line, std::size_t line_number);

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);
  // Next record, or nullopt at end of file. Throws DatasetError on a bad line;
  // records returned before it remain valid.
  std::optional<Record> next();
  std::size_t line() const { return line_; }

 private:
  std::ifstream in_;
  std::size_t line_ = 0;
};

// Appends records; safe to call from several producer threads.
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::string& path);
  void write(const Instance& instance);
  void write(const LabeledSample& sample);
  void write_line(const std::string& line);
  void flush();

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

void write_dataset(const std::vector<LabeledSample>& samples, const std::string& path);
void write_instances(const std::vector<Instance>& instances, const std::string& path);
std::vector<Record> read_records(const std::string& path);
// Requires every record to be labeled.
std::vector<LabeledSample> read_dataset(const std::string& path);

}  // namespace pivrp::data

#endif  // PIVRP_DATA_HPP
