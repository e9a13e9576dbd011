#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pivrp/bench.hpp"
#include "pivrp/format.hpp"

namespace pivrp::bench {

namespace {

using Clock = std::chrono::steady_clock;

double sorted_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

const char* const csv_header =
    "index,solved,cost,cost_v,vehicles_used,time_ms,decode_ms,postprocess_ms,cost_before,"
    "reference_cost,vehicle_cost,error";

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

nlohmann::json aggregates_json(const EvalReport& report) {
  const auto& a = report.aggregates;
  nlohmann::json j;
  j["count"] = a.count;
  j["solved"] = a.solved;
  j["solved_pct"] = a.solved_pct;
  j["mean_cost"] = a.mean_cost;
  j["mean_cost_v"] = a.mean_cost_v;
  j["mean_vehicles"] = a.mean_vehicles;
  j["mean_cost_before"] = a.mean_cost_before;
  j["mean_gap_pct"] = a.mean_gap_pct;
  j["gap_count"] = a.gap_count;
  j["mean_time_ms"] = a.mean_time_ms;
  j["mean_decode_ms"] = a.mean_decode_ms;
  j["mean_postprocess_ms"] = a.mean_postprocess_ms;
  j["fleet_histogram"] = a.fleet_histogram;
  j["vehicle_cost"] = report.vehicle_cost;
  return j;
}

// nlohmann prints the shortest round-trip form; NaN has no JSON spelling.
nlohmann::json json_real(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

bool operator==(const EvalRecord& a, const EvalRecord& b) {
  const bool same_ref = (std::isnan(a.reference_cost) && std::isnan(b.reference_cost)) ||
                        a.reference_cost == b.reference_cost;
  return a.index == b.index && a.solved == b.solved && a.cost == b.cost && a.cost_v == b.cost_v &&
         a.vehicles_used == b.vehicles_used && a.time_ms == b.time_ms &&
         a.decode_ms == b.decode_ms && a.postprocess_ms == b.postprocess_ms &&
         a.cost_before == b.cost_before && same_ref && a.error == b.error;
}

EvalAggregates aggregate(const std::vector<EvalRecord>& records) {
  EvalAggregates a;
  a.count = static_cast<int>(records.size());
  std::vector<double> cost, cost_v, vehicles, before, gap, time, dec, post;
  for (const auto& r : records) {
    time.push_back(r.time_ms);
    dec.push_back(r.decode_ms);
    post.push_back(r.postprocess_ms);
    if (!r.solved) continue;
    ++a.solved;
    cost.push_back(r.cost);
    cost_v.push_back(r.cost_v);
    vehicles.push_back(r.vehicles_used);
    before.push_back(r.cost_before);
    if (std::isfinite(r.reference_cost) && r.reference_cost > 0.0)
      gap.push_back((r.cost / r.reference_cost - 1.0) * 100.0);
    if (static_cast<int>(a.fleet_histogram.size()) <= r.vehicles_used)
      a.fleet_histogram.resize(r.vehicles_used + 1, 0);
    ++a.fleet_histogram[r.vehicles_used];
  }
  a.solved_pct = a.count ? 100.0 * a.solved / a.count : 0.0;
  a.mean_cost = sorted_mean(cost);
  a.mean_cost_v = sorted_mean(cost_v);
  a.mean_vehicles = sorted_mean(vehicles);
  a.mean_cost_before = sorted_mean(before);
  a.mean_gap_pct = sorted_mean(gap);
  a.gap_count = static_cast<int>(gap.size());
  a.mean_time_ms = sorted_mean(time);
  a.mean_decode_ms = sorted_mean(dec);
  a.mean_postprocess_ms = sorted_mean(post);
  return a;
}

EvalReport evaluate(const std::vector<Instance>& instances, const Solver& solver,
                    const EvalOptions& options, const std::vector<double>& reference_costs) {
  if (!reference_costs.empty() && reference_costs.size() != instances.size())
    throw std::invalid_argument("evaluate: reference costs do not match the instances");
  EvalReport report;
  report.vehicle_cost = options.vehicle_cost;
  report.records.resize(instances.size());
  const int n = static_cast<int>(instances.size());

#pragma omp parallel for schedule(dynamic) num_threads(std::max(options.workers, 1))
  for (int i = 0; i < n; ++i) {
    EvalRecord& r = report.records[i];
    r.index = i;
    r.reference_cost = reference_costs.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : reference_costs[i];
    const Instance& inst = instances[i];
    try {
      const auto start = Clock::now();
      const decode::SolveResult res = solver(inst);
      r.time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      r.decode_ms = res.stats.decode_ms;
      r.postprocess_ms = res.stats.postprocess_ms;
      if (!res.stats.solved) continue;
      const auto check = validate(inst, res.plan, options.allow_extra_vehicles);
      if (!check.feasible) {
        r.error = "infeasible plan: " + to_string(check.violations.front().kind);
        continue;
      }
      r.solved = true;
      r.cost = route_cost(inst, res.plan);
      r.cost_v = cost_v(inst, res.plan, options.vehicle_cost);
      r.vehicles_used = res.plan.vehicles_used();
      r.cost_before = res.stats.cost_before;
    } catch (const std::exception& e) {
      r.solved = false;
      r.error = e.what();
    }
  }
  report.aggregates = aggregate(report.records);
  return report;
}

double accounting_residual(const EvalReport& report) {
  const auto& a = report.aggregates;
  const double lhs = a.mean_cost_v - a.mean_cost;
  const double rhs = report.vehicle_cost * a.mean_vehicles;
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(a.mean_cost_v));
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "table") return ReportFormat::table;
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw std::invalid_argument("unknown report format '" + name + "'");
}

std::string render(const EvalReport& report, ReportFormat format) {
  const auto& a = report.aggregates;
  std::ostringstream out;
  switch (format) {
    case ReportFormat::table: {
      out << std::fixed;
      out << std::left << std::setw(10) << "Cost" << std::setw(12) << "Cost_v" << std::setw(12)
          << "t/inst(s)" << std::setw(10) << "solved%" << std::setw(10) << "vehicles"
          << "gap%\n";
      out << std::setprecision(3) << std::setw(10) << a.mean_cost << std::setw(12)
          << a.mean_cost_v << std::setprecision(4) << std::setw(12) << a.mean_time_ms / 1000.0
          << std::setprecision(1) << std::setw(10) << a.solved_pct << std::setprecision(3)
          << std::setw(10) << a.mean_vehicles;
      if (a.gap_count > 0)
        out << std::setprecision(2) << a.mean_gap_pct;
      else
        out << "-";
      out << "\n\ninstances " << a.count << ", solved " << a.solved << ", c_v "
          << std::setprecision(1) << report.vehicle_cost << "\nvehicles used histogram:\n";
      for (std::size_t v = 0; v < a.fleet_histogram.size(); ++v)
        if (a.fleet_histogram[v] > 0) out << "  " << v << ": " << a.fleet_histogram[v] << '\n';
      break;
    }
    case ReportFormat::csv: {
      out << csv_header << '\n';
      for (const auto& r : report.records) {
        out << r.index << ',' << (r.solved ? 1 : 0) << ',' << format_real(r.cost) << ','
            << format_real(r.cost_v) << ',' << r.vehicles_used << ',' << format_real(r.time_ms)
            << ',' << format_real(r.decode_ms) << ',' << format_real(r.postprocess_ms) << ','
            << format_real(r.cost_before) << ','
            << (std::isfinite(r.reference_cost) ? format_real(r.reference_cost) : "nan") << ','
            << format_real(report.vehicle_cost) << ',' << csv_escape(r.error) << '\n';
      }
      break;
    }
    case ReportFormat::json: {
      nlohmann::json j;
      j["aggregates"] = aggregates_json(report);
      j["records"] = nlohmann::json::array();
      for (const auto& r : report.records) {
        j["records"].push_back({{"index", r.index},
                                {"solved", r.solved},
                                {"cost", r.cost},
                                {"cost_v", r.cost_v},
                                {"vehicles_used", r.vehicles_used},
                                {"time_ms", r.time_ms},
                                {"decode_ms", r.decode_ms},
                                {"postprocess_ms", r.postprocess_ms},
                                {"cost_before", r.cost_before},
                                {"reference_cost", json_real(r.reference_cost)},
                                {"error", r.error}});
      }
      out << j.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

void write_report(const EvalReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report '" + path + "'");
  out << render(report, format);
  if (!out) throw std::runtime_error("writing report '" + path + "' failed");
}

EvalReport parse_csv_report(const std::string& text) {
  EvalReport report;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("report line " + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) return report;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header) fail("unexpected header");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv_fields(line);
    if (f.size() != 12) fail("expected 12 fields");
    auto real = [&](const std::string& s) {
      if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
      const auto v = parse_real(s);
      if (!v) fail("bad number '" + s + "'");
      return *v;
    };
    auto integer = [&](const std::string& s) {
      const auto v = parse_integer(s);
      if (!v) fail("bad integer '" + s + "'");
      return static_cast<int>(*v);
    };
    EvalRecord r;
    r.index = integer(f[0]);
    r.solved = integer(f[1]) != 0;
    r.cost = real(f[2]);
    r.cost_v = real(f[3]);
    r.vehicles_used = integer(f[4]);
    r.time_ms = real(f[5]);
    r.decode_ms = real(f[6]);
    r.postprocess_ms = real(f[7]);
    r.cost_before = real(f[8]);
    r.reference_cost = real(f[9]);
    report.vehicle_cost = real(f[10]);
    r.error = f[11];
    report.records.push_back(std::move(r));
  }
  report.aggregates = aggregate(report.records);
  return report;
}

EvalReport read_csv_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv_report(ss.str());
}

// ---------------------------------------------------------------------------
// Plan records

std::string format_plan_record(const PlanRecord& rec) {
  const auto& s = rec.result.stats;
  std::string line = std::string(data::record_version) + " P " +
                     data::format_instance_fields(rec.instance) + ' ' +
                     data::format_tours(rec.result.plan);
  line += ' ' + std::to_string(s.solved ? 1 : 0);
  line += ' ' + format_real(s.decode_ms);
  line += ' ' + format_real(s.postprocess_ms);
  line += ' ' + format_real(s.total_ms);
  line += ' ' + std::to_string(s.repair_insertions);
  line += ' ' + std::to_string(s.added_tours);
  line += ' ' + format_real(s.cost_before);
  line += ' ' + format_real(s.cost_after);
  line += ' ' + std::to_string(s.vehicles_used);
  return line;
}

PlanRecord parse_plan_record(std::string_view line, std::size_t line_number) {
  data::TokenCursor cursor(split_tokens(line), line_number);
  const auto version = cursor.next("version tag");
  if (version != data::record_version)
    throw data::DatasetError(line_number, "unsupported record version '" +
                                              std::string(version) + "'");
  if (cursor.next("record kind") != "P")
    throw data::DatasetError(line_number, "expected a plan record");
  PlanRecord rec;
  rec.instance = data::parse_instance_fields(cursor);
  rec.result.plan = data::parse_tours(cursor, rec.instance);
  auto& s = rec.result.stats;
  s.solved = cursor.integer("solved flag") != 0;
  s.decode_ms = cursor.real("decode ms");
  s.postprocess_ms = cursor.real("postprocess ms");
  s.total_ms = cursor.real("total ms");
  s.repair_insertions = static_cast<int>(cursor.integer("repair insertions"));
  s.added_tours = static_cast<int>(cursor.integer("added tours"));
  s.cost_before = cursor.real("cost before");
  s.cost_after = cursor.real("cost after");
  s.vehicles_used = static_cast<int>(cursor.integer("vehicles used"));
  if (!cursor.done()) throw data::DatasetError(line_number, "trailing fields");
  return rec;
}

void write_plans(const std::vector<PlanRecord>& records, const std::string& path) {
  data::DatasetWriter w(path);
  for (const auto& r : records) w.write_line(format_plan_record(r));
  w.flush();
}

std::vector<PlanRecord> read_plans(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plans '" + path + "'");
  std::vector<PlanRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (split_tokens(line).empty()) continue;
    out.push_back(parse_plan_record(line, n));
  }
  return out;
}

}  // namespace pivrp::bench
