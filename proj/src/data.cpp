#include "pivrp/data.hpp"

#include <exception>
#include <random>

#include "pivrp/format.hpp"
#include "pivrp/search.hpp"

namespace pivrp::data {

namespace {

constexpr long long max_generation_attempts = 1'000'000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_spec(const GenSpec& spec) {
  if (spec.n_customers < 1) throw std::invalid_argument("generate: n_customers must be >= 1");
  if (spec.fleet_size < 1) throw std::invalid_argument("generate: fleet_size must be >= 1");
  if (spec.capacity < 1) throw std::invalid_argument("generate: capacity must be >= 1");
  if (spec.demand_min < 1 || spec.demand_max < spec.demand_min)
    throw std::invalid_argument("generate: demand range must satisfy 1 <= min <= max");
  if (spec.demand_max > spec.capacity)
    throw std::invalid_argument("generate: demand_max exceeds vehicle capacity");
  const long long min_total = static_cast<long long>(spec.n_customers) * spec.demand_min;
  if (min_total > static_cast<long long>(spec.fleet_size) * spec.capacity)
    throw std::invalid_argument("generate: minimum total demand " + std::to_string(min_total) +
                                " exceeds fleet capacity M*Q");
}

}  // namespace

GenSpec GenSpec::defaults_for(int n_customers) {
  GenSpec s;
  s.n_customers = n_customers;
  if (n_customers <= 20) {
    s.fleet_size = 4;
    s.capacity = 30;
  } else if (n_customers <= 50) {
    s.fleet_size = n_customers == 50 ? 7 : 4 + (n_customers - 20) * 3 / 30;
    s.capacity = n_customers == 50 ? 40 : 30 + (n_customers - 20) * 10 / 30;
  } else if (n_customers <= 100) {
    s.fleet_size = n_customers == 100 ? 11 : 7 + (n_customers - 50) * 4 / 50;
    s.capacity = n_customers == 100 ? 50 : 40 + (n_customers - 50) * 10 / 50;
  } else {
    s.fleet_size = 11 * n_customers / 100 + 1;
    s.capacity = 50;
  }
  return s;
}

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) + index);
}

Instance generate(const GenSpec& spec) {
  check_spec(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::uniform_int_distribution<int> demand(spec.demand_min, spec.demand_max);
  const long long limit = static_cast<long long>(spec.fleet_size) * spec.capacity;

  for (long long attempt = 0; attempt < max_generation_attempts; ++attempt) {
    Point depot{coord(rng), coord(rng)};
    std::vector<Point> customers(spec.n_customers);
    for (auto& c : customers) c = Point{coord(rng), coord(rng)};
    std::vector<int> demands(spec.n_customers);
    long long total = 0;
    for (auto& q : demands) {
      q = demand(rng);
      total += q;
    }
    if (total <= limit)
      return Instance(depot, std::move(customers), std::move(demands), spec.fleet_size,
                      spec.capacity);
  }
  throw std::runtime_error("generate: rejection sampling did not accept an instance");
}

Instance generate_indexed(const GenSpec& spec, std::uint64_t index) {
  GenSpec child = spec;
  child.seed = child_seed(spec.seed, index);
  return generate(child);
}

std::vector<Instance> generate_many(const GenSpec& spec, int count, int workers) {
  check_spec(spec);
  std::vector<Instance> out(static_cast<std::size_t>(std::max(count, 0)));
  std::vector<std::exception_ptr> errors(out.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(workers, 1))
  for (int i = 0; i < count; ++i) {
    try {
      out[i] = generate_indexed(spec, static_cast<std::uint64_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

int default_label_budget_ms(int n_customers) { return std::max(1, 1000 * n_customers / 20); }

LabelOutcome label(const Instance& instance, int budget_ms, std::int64_t max_iterations) {
  LabelOutcome out;
  auto start = search::construct(instance);
  if (!start) {
    out.failure = "construction found no plan within " + std::to_string(instance.fleet_size()) +
                  " vehicles";
    return out;
  }
  search::SearchConfig cfg;
  cfg.budget_ms = budget_ms;
  cfg.max_iterations = max_iterations;
  cfg.fixed_fleet = false;
  Plan target = search::improve(instance, *start, cfg);
  const auto report = validate(instance, target);
  if (!report.feasible) {
    out.failure = "search returned an infeasible plan";
    return out;
  }
  out.sample = LabeledSample{instance, std::move(target), 0.0, budget_ms};
  out.sample->label_cost = route_cost(instance, out.sample->target);
  return out;
}

std::vector<LabeledSample> label_many(const std::vector<Instance>& instances, int budget_ms,
                                      int workers, std::vector<std::string>* failures,
                                      std::int64_t max_iterations) {
  const int n = static_cast<int>(instances.size());
  std::vector<LabelOutcome> outcomes(instances.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(workers, 1))
  for (int i = 0; i < n; ++i) {
    try {
      outcomes[i] = label(instances[i], budget_ms, max_iterations);
    } catch (const std::exception& e) {
      outcomes[i].failure = e.what();
    }
  }

  std::vector<LabeledSample> out;
  out.reserve(instances.size());
  for (int i = 0; i < n; ++i) {
    if (outcomes[i].sample) {
      out.push_back(std::move(*outcomes[i].sample));
    } else if (failures) {
      failures->push_back("instance " + std::to_string(i) + ": " + outcomes[i].failure);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Records

std::string format_instance_fields(const Instance& instance) {
  std::string s;
  s += std::to_string(instance.num_customers()) + ' ' + std::to_string(instance.fleet_size()) +
       ' ' + std::to_string(instance.capacity());
  for (const Point& p : instance.coords()) {
    s += ' ' + format_real(p.x);
    s += ' ' + format_real(p.y);
  }
  for (int i = 1; i <= instance.num_customers(); ++i) s += ' ' + std::to_string(instance.demand(i));
  return s;
}

std::string format_tours(const Plan& plan) {
  std::string s = std::to_string(plan.num_tours());
  for (int k = 0; k < plan.num_tours(); ++k) {
    const auto customers = plan.customers(k);
    s += ' ' + std::to_string(customers.size());
    for (int c : customers) s += ' ' + std::to_string(c);
  }
  return s;
}

std::string format_record(const Instance& instance) {
  return std::string(record_version) + " I " + format_instance_fields(instance);
}

std::string format_record(const LabeledSample& sample) {
  return std::string(record_version) + " L " + format_instance_fields(sample.instance) + ' ' +
         format_real(sample.label_cost) + ' ' + std::to_string(sample.label_budget_ms) + ' ' +
         format_tours(sample.target);
}

std::string_view TokenCursor::next(const char* what) {
  if (pos_ >= tokens_.size())
    throw DatasetError(line_, std::string("record ends before ") + what);
  return tokens_[pos_++];
}

long long TokenCursor::integer(const char* what) {
  const auto tok = next(what);
  const auto v = parse_integer(tok);
  if (!v) throw DatasetError(line_, std::string("bad integer for ") + what + ": '" +
                                        std::string(tok) + "'");
  return *v;
}

double TokenCursor::real(const char* what) {
  const auto tok = next(what);
  const auto v = parse_real(tok);
  if (!v) throw DatasetError(line_, std::string("bad number for ") + what + ": '" +
                                        std::string(tok) + "'");
  return *v;
}

Instance parse_instance_fields(TokenCursor& cursor) {
  const long long n = cursor.integer("N");
  const long long m = cursor.integer("M");
  const long long q = cursor.integer("Q");
  if (n < 1 || n > 100000) throw DatasetError(cursor.line(), "N out of range");
  if (m < 1 || m > 100000) throw DatasetError(cursor.line(), "M out of range");
  if (q < 1 || q > 1000000000) throw DatasetError(cursor.line(), "Q out of range");
  Point depot;
  depot.x = cursor.real("depot x");
  depot.y = cursor.real("depot y");
  std::vector<Point> customers(static_cast<std::size_t>(n));
  for (auto& c : customers) {
    c.x = cursor.real("customer x");
    c.y = cursor.real("customer y");
  }
  std::vector<int> demands(static_cast<std::size_t>(n));
  for (auto& d : demands) {
    const long long v = cursor.integer("demand");
    if (v < 0 || v > q) throw DatasetError(cursor.line(), "demand out of range");
    d = static_cast<int>(v);
  }
  try {
    return Instance(depot, std::move(customers), std::move(demands), static_cast<int>(m),
                    static_cast<int>(q));
  } catch (const std::invalid_argument& e) {
    throw DatasetError(cursor.line(), e.what());
  }
}

Plan parse_tours(TokenCursor& cursor, const Instance& instance) {
  const long long tours = cursor.integer("tour count");
  if (tours < 0 || tours > 100000) throw DatasetError(cursor.line(), "tour count out of range");
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(tours));
  for (auto& list : lists) {
    const long long len = cursor.integer("tour length");
    if (len < 0 || len > instance.num_customers())
      throw DatasetError(cursor.line(), "tour length out of range");
    list.resize(static_cast<std::size_t>(len));
    for (auto& c : list) {
      const long long v = cursor.integer("customer id");
      if (v < 1 || v > instance.num_customers())
        throw DatasetError(cursor.line(), "customer id out of range");
      c = static_cast<int>(v);
    }
  }
  return Plan::from_customer_lists(lists);
}

Record parse_record(std::string_view line, std::size_t line_number) {
  TokenCursor cursor(split_tokens(line), line_number);
  const auto version = cursor.next("version tag");
  if (version != record_version)
    throw DatasetError(line_number, "unsupported record version '" + std::string(version) +
                                        "' (expected " + record_version + ")");
  const auto kind = cursor.next("record kind");
  Record rec;
  if (kind == "I") {
    rec.instance = parse_instance_fields(cursor);
  } else if (kind == "L") {
    rec.instance = parse_instance_fields(cursor);
    LabeledSample s;
    s.instance = rec.instance;
    s.label_cost = cursor.real("label cost");
    const long long budget = cursor.integer("label budget");
    if (budget < 0 || budget > 1'000'000'000) throw DatasetError(line_number, "bad label budget");
    s.label_budget_ms = static_cast<int>(budget);
    s.target = parse_tours(cursor, rec.instance);
    rec.labeled = std::move(s);
  } else {
    throw DatasetError(line_number, "unknown record kind '" + std::string(kind) + "'");
  }
  if (!cursor.done()) throw DatasetError(line_number, "trailing fields");
  return rec;
}

DatasetReader::DatasetReader(const std::string& path) : in_(path) {
  if (!in_) throw std::runtime_error("cannot open dataset '" + path + "'");
}

std::optional<Record> DatasetReader::next() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (split_tokens(text).empty()) continue;
    return parse_record(text, line_);
  }
  return std::nullopt;
}

DatasetWriter::DatasetWriter(const std::string& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot write dataset '" + path + "'");
}

void DatasetWriter::write(const Instance& instance) { write_line(format_record(instance)); }

void DatasetWriter::write(const LabeledSample& sample) { write_line(format_record(sample)); }

void DatasetWriter::write_line(const std::string& line) {
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << line << '\n';
  if (!out_) throw std::runtime_error("dataset write failed");
}

void DatasetWriter::flush() {
  std::lock_guard<std::mutex> lock(mutex_);
  out_.flush();
}

void write_dataset(const std::vector<LabeledSample>& samples, const std::string& path) {
  DatasetWriter w(path);
  for (const auto& s : samples) w.write(s);
  w.flush();
}

void write_instances(const std::vector<Instance>& instances, const std::string& path) {
  DatasetWriter w(path);
  for (const auto& inst : instances) w.write(inst);
  w.flush();
}

std::vector<Record> read_records(const std::string& path) {
  DatasetReader r(path);
  std::vector<Record> out;
  while (auto rec = r.next()) out.push_back(std::move(*rec));
  return out;
}

std::vector<LabeledSample> read_dataset(const std::string& path) {
  DatasetReader r(path);
  std::vector<LabeledSample> out;
  while (auto rec = r.next()) {
    if (!rec->labeled) throw DatasetError(r.line(), "record has no label");
    out.push_back(std::move(*rec->labeled));
  }
  return out;
}

}  // namespace pivrp::data
