#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pivrp/bench.hpp"
#include "pivrp/format.hpp"

namespace pivrp::bench {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(int line, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

int as_int(const std::string& v, int line, int min_value) {
  const auto parsed = parse_integer(v);
  if (!parsed || *parsed < min_value || *parsed > 1'000'000'000)
    bad(line, "expected an integer >= " + std::to_string(min_value) + ", got '" + v + "'");
  return static_cast<int>(*parsed);
}

double as_real(const std::string& v, int line) {
  const auto parsed = parse_real(v);
  if (!parsed || !std::isfinite(*parsed) || *parsed < 0.0)
    bad(line, "expected a nonnegative number, got '" + v + "'");
  return *parsed;
}

}  // namespace

double VehicleCostTable::for_size(int n_customers) const {
  if (by_size.empty()) return 0.0;
  auto best = by_size.begin();
  for (auto it = by_size.begin(); it != by_size.end(); ++it)
    if (std::abs(it->first - n_customers) < std::abs(best->first - n_customers)) best = it;
  return best->second;
}

int default_postprocess_ms(int n_customers) { return std::max(1, 30 * n_customers / 20); }

BenchConfig parse_config(const std::string& text) {
  BenchConfig cfg;
  bool costs_reset = false;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string body = trim(raw);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) bad(line, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (value.empty()) bad(line, "missing value for '" + key + "'");

    if (key == "d_model") {
      cfg.model.d_model = as_int(value, line, 1);
    } else if (key == "hidden") {
      cfg.model.hidden = as_int(value, line, 1);
    } else if (key == "layers") {
      cfg.model.layers = as_int(value, line, 0);
    } else if (key == "loss.over") {
      cfg.weights.over = as_real(value, line);
    } else if (key == "loss.load") {
      cfg.weights.load = as_real(value, line);
    } else if (key == "loss.load_mode") {
      try {
        cfg.load_mode = loss::load_mode_from_string(value);
      } catch (const std::invalid_argument& e) {
        bad(line, e.what());
      }
    } else if (key == "search.penalty_factor") {
      cfg.search.penalty_factor = as_real(value, line);
    } else if (key == "search.neighborhoods") {
      cfg.search.neighborhoods.clear();
      std::istringstream names(value);
      std::string name;
      while (std::getline(names, name, ',')) {
        try {
          cfg.search.neighborhoods.push_back(search::neighborhood_from_string(trim(name)));
        } catch (const std::invalid_argument& e) {
          bad(line, e.what());
        }
      }
      if (cfg.search.neighborhoods.empty()) bad(line, "empty neighborhood list");
    } else if (key.rfind("c_v.", 0) == 0) {
      if (!costs_reset) {
        cfg.vehicle_costs.by_size.clear();
        costs_reset = true;
      }
      cfg.vehicle_costs.by_size[as_int(key.substr(4), line, 1)] = as_real(value, line);
    } else if (key == "batch_size") {
      cfg.batch_size = as_int(value, line, 1);
    } else if (key == "epochs") {
      cfg.epochs = as_int(value, line, 0);
    } else if (key == "lr") {
      cfg.learning_rate = as_real(value, line);
    } else if (key == "seed") {
      const auto parsed = parse_integer(value);
      if (!parsed || *parsed < 0) bad(line, "bad seed '" + value + "'");
      cfg.seed = static_cast<std::uint64_t>(*parsed);
    } else if (key == "workers") {
      cfg.workers = as_int(value, line, 1);
    } else {
      bad(line, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

BenchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

int resolve_workers(int fallback) {
  if (const char* env = std::getenv("PIVRP_WORKERS")) {
    const auto parsed = parse_integer(env);
    if (parsed && *parsed > 0 && *parsed <= 4096) return static_cast<int>(*parsed);
  }
  return std::max(fallback, 1);
}

}  // namespace pivrp::bench
