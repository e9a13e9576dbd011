#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "pivrp/data.hpp"
#include "pivrp/search.hpp"
#include "support.hpp"

using namespace pivrp;
using namespace pivrp::data;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pivrp_test_" + name)).string();
}

// E[demand | total <= limit] for n iid uniform{lo..hi} demands, by exact
// convolution of the total's distribution.
double conditional_mean_demand(int n, int lo, int hi, int limit) {
  std::vector<double> dist = {1.0};
  const double p = 1.0 / (hi - lo + 1);
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(dist.size() + hi, 0.0);
    for (std::size_t s = 0; s < dist.size(); ++s)
      for (int d = lo; d <= hi; ++d) next[s + d] += dist[s] * p;
    dist = std::move(next);
  }
  double mass = 0.0, total = 0.0;
  for (int s = 0; s <= limit && s < static_cast<int>(dist.size()); ++s) {
    mass += dist[s];
    total += dist[s] * s;
  }
  return total / mass / n;
}

}  // namespace

TEST_CASE("defaults by problem size") {
  const auto a = GenSpec::defaults_for(20), b = GenSpec::defaults_for(50), c = GenSpec::defaults_for(100);
  CHECK(std::array{a.n_customers, a.fleet_size, a.capacity} == std::array{20, 4, 30});
  CHECK(std::array{b.n_customers, b.fleet_size, b.capacity} == std::array{50, 7, 40});
  CHECK(std::array{c.n_customers, c.fleet_size, c.capacity} == std::array{100, 11, 50});
  CHECK(default_label_budget_ms(20) == 1000);
  CHECK(default_label_budget_ms(50) == 2500);
}

TEST_CASE("generation is deterministic and respects the sampling ranges") {
  GenSpec spec;
  spec.seed = 42;
  CHECK(generate(spec) == generate(spec));
  auto other = spec;
  other.seed = 43;
  CHECK_FALSE(generate(spec) == generate(other));
  CHECK(child_seed(7, 0) != child_seed(7, 1));
  CHECK(child_seed(7, 3) == child_seed(7, 3));

  const auto many = generate_many(spec, 200);
  for (const auto& inst : many) {
    CHECK(inst.num_customers() == 20);
    CHECK(inst.fleet_size() == 4);
    CHECK(inst.capacity() == 30);
    CHECK(inst.total_demand() <= 4 * 30);
    for (int v = 0; v < inst.num_vertices(); ++v) {
      CHECK(inst.coord(v).x >= 0.0);
      CHECK(inst.coord(v).x <= 1.0);
      CHECK(inst.coord(v).y >= 0.0);
      CHECK(inst.coord(v).y <= 1.0);
    }
    for (int c = 1; c <= 20; ++c) {
      CHECK(inst.demand(c) >= 1);
      CHECK(inst.demand(c) <= 9);
    }
  }
}

TEST_CASE("rejection sampling matches the exact conditional mean demand") {
  // Tight fleet: about half of the raw draws are rejected.
  GenSpec spec;
  spec.n_customers = 10;
  spec.fleet_size = 1;
  spec.capacity = 50;
  spec.seed = 9;
  const int count = 4000;
  const auto many = generate_many(spec, count);
  double sum = 0.0, sq = 0.0;
  for (const auto& inst : many) {
    const double mean = static_cast<double>(inst.total_demand()) / 10;
    sum += mean;
    sq += mean * mean;
    CHECK(inst.total_demand() <= 50);
  }
  const double mc = sum / count;
  const double sd = std::sqrt(sq / count - mc * mc);
  const double exact = conditional_mean_demand(10, 1, 9, 50);
  CHECK(exact < 5.0);
  CHECK(std::abs(mc - exact) <= 4.0 * sd / std::sqrt(count));
}

TEST_CASE("unsatisfiable generation spec is rejected") {
  GenSpec spec;
  spec.n_customers = 10;
  spec.fleet_size = 1;
  spec.capacity = 9;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("parallel generation equals serial generation") {
  GenSpec spec;
  spec.seed = 5;
  const auto serial = generate_many(spec, 64, 1);
  const auto parallel = generate_many(spec, 64, 4);
  CHECK(serial == parallel);
  for (int i = 0; i < 64; i += 13) CHECK(serial[i] == generate_indexed(spec, i));
}

TEST_CASE("label: single customer") {
  const Instance inst({0.5, 0.5}, {{0.5, 0.9}}, {4}, 3, 10);
  const auto out = label(inst, 50, 100);
  REQUIRE(out.sample);
  CHECK(out.sample->target.num_tours() == 3);
  CHECK(out.sample->target.vehicles_used() == 1);
  CHECK(out.sample->label_cost == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("labels are within 5% of the exact optimum on small instances") {
  GenSpec spec;
  spec.n_customers = 8;
  spec.fleet_size = 3;
  spec.capacity = 15;
  spec.seed = 11;
  int labeled = 0;
  for (const auto& inst : generate_many(spec, 30)) {
    const auto out = label(inst, 0, 2000);
    if (!out.sample) continue;
    ++labeled;
    const double exact = route_cost(inst, search::exact_small(inst));
    CHECK(validate(inst, out.sample->target).feasible);
    CHECK(out.sample->label_cost == doctest::Approx(route_cost(inst, out.sample->target)).epsilon(1e-12));
    CHECK(out.sample->label_cost <= exact * 1.05 + 1e-12);
  }
  CHECK(labeled >= 25);
}

TEST_CASE("labeling in iteration mode is reproducible") {
  GenSpec spec;
  spec.seed = 12;
  const auto inst = generate(spec);
  const auto a = label(inst, 0, 500), b = label(inst, 0, 500);
  REQUIRE(a.sample);
  REQUIRE(b.sample);
  CHECK(*a.sample == *b.sample);

  const auto batch1 = label_many(generate_many(spec, 8), 0, 1, nullptr, 200);
  const auto batch4 = label_many(generate_many(spec, 8), 0, 4, nullptr, 200);
  CHECK(batch1 == batch4);
}

TEST_CASE("dataset round trip of 100 labeled samples") {
  GenSpec spec;
  spec.seed = 13;
  std::vector<std::string> failures;
  const auto samples = label_many(generate_many(spec, 100), 0, 1, &failures, 50);
  CHECK(samples.size() + failures.size() == 100);
  REQUIRE(samples.size() >= 95);
  const auto path = temp_path("round_trip.txt");
  write_dataset(samples, path);
  CHECK(read_dataset(path) == samples);

  const auto instances = generate_many(spec, 10);
  write_instances(instances, path);
  const auto records = read_records(path);
  REQUIRE(records.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(records[i].instance == instances[i]);
    CHECK_FALSE(records[i].labeled);
  }
  CHECK_THROWS_AS(read_dataset(path), DatasetError);
  std::filesystem::remove(path);
}

TEST_CASE("empty and truncated files") {
  const auto path = temp_path("truncated.txt");
  { std::ofstream(path) << ""; }
  CHECK(read_records(path).empty());

  GenSpec spec;
  spec.seed = 14;
  const auto instances = generate_many(spec, 3);
  std::string text;
  for (const auto& inst : instances) text += format_record(inst) + "\n";
  text.resize(text.size() - 20);
  { std::ofstream(path) << text; }
  DatasetReader reader(path);
  CHECK(reader.next()->instance == instances[0]);
  CHECK(reader.next()->instance == instances[1]);
  try {
    reader.next();
    FAIL("truncated record was accepted");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 3);
  }
  std::filesystem::remove(path);
  CHECK_THROWS(read_records(temp_path("does_not_exist.txt")));
}

TEST_CASE("record parser errors") {
  GenSpec spec;
  spec.n_customers = 3;
  spec.fleet_size = 2;
  spec.seed = 15;
  const auto line = format_record(generate(spec));
  CHECK(parse_record(line, 1).instance == generate(spec));

  auto wrong_version = line;
  wrong_version.replace(0, 6, "pivrp9");
  try {
    parse_record(wrong_version, 4);
    FAIL("version mismatch was accepted");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("pivrp9") != std::string::npos);
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_record("pivrp1 X 1 2 3", 1), DatasetError);
  CHECK_THROWS_AS(parse_record("pivrp1 I 2 1 five", 1), DatasetError);
  CHECK_THROWS_AS(parse_record(line + " 7", 1), DatasetError);
  // Out-of-range customer id in a tour.
  const Instance inst({0.5, 0.5}, {{0.1, 0.1}}, {1}, 1, 5);
  const LabeledSample bad{inst, Plan({{0, 1, 0}}), 1.0, 10};
  auto text = format_record(bad);
  text.replace(text.rfind('1'), 1, "5");
  CHECK_THROWS_AS(parse_record(text, 1), DatasetError);
}

TEST_CASE("dataset writer is safe under concurrent producers") {
  GenSpec spec;
  spec.seed = 16;
  const auto instances = generate_many(spec, 40);
  const auto path = temp_path("concurrent.txt");
  {
    DatasetWriter writer(path);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
      threads.emplace_back([&, t] {
        for (int i = t; i < 40; i += 4) writer.write(instances[i]);
      });
    for (auto& th : threads) th.join();
    writer.flush();
  }
  const auto records = read_records(path);
  REQUIRE(records.size() == 40);
  std::set<std::string> expect, got;
  for (const auto& inst : instances) expect.insert(format_record(inst));
  for (const auto& r : records) got.insert(format_record(r.instance));
  CHECK(expect == got);
  std::filesystem::remove(path);
}
