#include <chrono>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pivrp/bench.hpp"
#include "pivrp/data.hpp"
#include "pivrp/decode.hpp"
#include "pivrp/model.hpp"
#include "pivrp/search.hpp"

namespace {

using namespace pivrp;

struct Common {
  std::string config_path;
  int workers = 1;

  bench::BenchConfig config() const {
    return config_path.empty() ? bench::BenchConfig{} : bench::load_config(config_path);
  }
  int resolved_workers(const bench::BenchConfig& cfg, const CLI::App& app) const {
    const int base = app.count("--workers") ? workers : cfg.workers;
    return bench::resolve_workers(base);
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app->add_option("--workers", c.workers, "worker threads (PIVRP_WORKERS overrides)")
      ->check(CLI::PositiveNumber);
}

std::vector<Instance> instances_of(const std::vector<data::Record>& records) {
  std::vector<Instance> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.instance);
  return out;
}

int run_generate(int n, int m, int q, int count, std::uint64_t seed, int dmin, int dmax,
                 const std::string& out, int workers) {
  data::GenSpec spec = data::GenSpec::defaults_for(n);
  if (m > 0) spec.fleet_size = m;
  if (q > 0) spec.capacity = q;
  spec.demand_min = dmin;
  spec.demand_max = dmax;
  spec.seed = seed;
  const auto instances = data::generate_many(spec, count, workers);
  data::write_instances(instances, out);
  std::cerr << "wrote " << instances.size() << " instances to " << out << '\n';
  return 0;
}

int run_label(const std::string& in, const std::string& out, int budget_ms,
              std::int64_t iterations, int workers) {
  const auto instances = instances_of(data::read_records(in));
  std::vector<std::string> failures;
  const int budget =
      budget_ms > 0 ? budget_ms
                    : (instances.empty() ? 1000
                                         : data::default_label_budget_ms(
                                               instances.front().num_customers()));
  const auto samples = data::label_many(instances, budget, workers, &failures, iterations);
  data::write_dataset(samples, out);
  for (const auto& f : failures) std::cerr << "discarded " << f << '\n';
  std::cerr << "labeled " << samples.size() << " of " << instances.size() << " instances\n";
  return 0;
}

decode::SolveResult postprocess_plan(const Instance& inst, decode::SolveResult res,
                                     const search::SearchConfig& base, int budget_ms,
                                     std::int64_t iterations) {
  if (!res.stats.solved) return res;
  search::SearchConfig cfg = base;
  cfg.budget_ms = budget_ms;
  cfg.max_iterations = iterations;
  cfg.fixed_fleet = true;
  search::SearchStats st;
  const auto t0 = std::chrono::steady_clock::now();
  res.plan = search::improve(inst, res.plan, cfg, &st);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  res.stats.postprocess_ms += ms;
  res.stats.total_ms += ms;
  res.stats.cost_after = route_cost(inst, res.plan);
  res.stats.vehicles_used = res.plan.vehicles_used();
  return res;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pivrp: permutation-invariant neural solver for capacitated vehicle routing"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample random instances");
  int g_n = 20, g_m = 0, g_q = 0, g_count = 100, g_dmin = 1, g_dmax = 9;
  std::uint64_t g_seed = 1;
  std::string g_out;
  Common g_common;
  gen->add_option("--n", g_n, "customers")->check(CLI::PositiveNumber);
  gen->add_option("--m", g_m, "fleet size (default by N)");
  gen->add_option("--q", g_q, "vehicle capacity (default by N)");
  gen->add_option("--count", g_count, "number of instances")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", g_seed, "base seed");
  gen->add_option("--demand-min", g_dmin, "smallest demand");
  gen->add_option("--demand-max", g_dmax, "largest demand");
  gen->add_option("--out", g_out, "output dataset")->required();
  add_common(gen, g_common);

  // label
  auto* lab = app.add_subcommand("label", "compute target plans with the local search solver");
  std::string l_in, l_out;
  int l_budget = 0;
  std::int64_t l_iters = 0;
  Common l_common;
  lab->add_option("--in", l_in, "instances")->required()->check(CLI::ExistingFile);
  lab->add_option("--out", l_out, "labeled dataset")->required();
  lab->add_option("--budget-ms", l_budget, "search budget per instance (default 1000*N/20)");
  lab->add_option("--iterations,--deterministic-iters", l_iters, "iteration budget instead of wall clock");
  add_common(lab, l_common);

  // train
  auto* tr = app.add_subcommand("train", "train a model on a labeled dataset");
  bench::TrainSpec t_spec;
  Common t_common;
  tr->add_option("--data", t_spec.dataset_path, "labeled training set")
      ->required()
      ->check(CLI::ExistingFile);
  tr->add_option("--val", t_spec.validation_path, "labeled validation set")
      ->check(CLI::ExistingFile);
  tr->add_option("--out", t_spec.checkpoint_path, "checkpoint path")->required();
  tr->add_option("--telemetry", t_spec.telemetry_path, "per-epoch JSON lines");
  tr->add_option("--epochs", t_spec.epochs);
  tr->add_option("--batch", t_spec.batch_size);
  tr->add_option("--lr", t_spec.learning_rate);
  tr->add_option("--seed", t_spec.seed);
  tr->add_option("--d-model", t_spec.model.d_model);
  tr->add_option("--hidden", t_spec.model.hidden);
  tr->add_option("--layers", t_spec.model.layers);
  tr->add_option("--checkpoint-every", t_spec.checkpoint_every, "epochs between checkpoints");
  add_common(tr, t_common);

  // solve
  auto* sol = app.add_subcommand("solve", "decode plans with a trained model");
  std::string s_model, s_in, s_out;
  bool s_guarantee = false;
  int s_pp = 0;
  Common s_common;
  sol->add_option("--model", s_model, "checkpoint")->required()->check(CLI::ExistingFile);
  sol->add_option("--in", s_in, "instances")->required()->check(CLI::ExistingFile);
  sol->add_option("--out", s_out, "plan records")->required();
  sol->add_flag("--guarantee", s_guarantee, "open extra tours when repair cannot place a customer");
  sol->add_option("--postprocess-ms", s_pp, "local search budget per instance (0 = off)");
  add_common(sol, s_common);

  // postprocess
  auto* pp = app.add_subcommand("postprocess", "improve solved plans with local search");
  std::string p_in, p_out;
  int p_budget = 0;
  std::int64_t p_iters = 0;
  Common p_common;
  pp->add_option("--in", p_in, "plan records")->required()->check(CLI::ExistingFile);
  pp->add_option("--out", p_out, "output plan records (default: overwrite input)");
  pp->add_option("--budget-ms", p_budget, "budget per plan (default 30*N/20)");
  pp->add_option("--iterations,--deterministic-iters", p_iters, "iteration budget instead of wall clock");
  add_common(pp, p_common);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a solver on a dataset");
  std::string e_in, e_model, e_solver = "model", e_out, e_format = "table";
  double e_cv = -1.0;
  int e_pp = -1;
  bool e_guarantee = false;
  Common e_common;
  ev->add_option("--in", e_in, "instances or labeled dataset")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--model", e_model, "checkpoint (solver 'model')")->check(CLI::ExistingFile);
  ev->add_option("--solver", e_solver, "model | labels | construct")
      ->check(CLI::IsMember({"model", "labels", "construct"}));
  ev->add_option("--c-v", e_cv, "fixed cost per used vehicle (default from the c_v table)");
  ev->add_option("--postprocess-ms", e_pp, "local search budget (default 30*N/20, 0 = off)");
  ev->add_flag("--guarantee", e_guarantee);
  ev->add_option("--out", e_out, "report path (default stdout)");
  ev->add_option("--format", e_format, "table | csv | json")
      ->check(CLI::IsMember({"table", "csv", "json"}));
  add_common(ev, e_common);

  // report
  auto* rep = app.add_subcommand("report", "re-render a csv evaluation report");
  std::string r_in, r_out, r_format = "table";
  rep->add_option("--in", r_in, "csv report")->required()->check(CLI::ExistingFile);
  rep->add_option("--format", r_format, "table | csv | json")
      ->check(CLI::IsMember({"table", "csv", "json"}));
  rep->add_option("--out", r_out, "output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = g_common.config();
      return run_generate(g_n, g_m, g_q, g_count, g_seed, g_dmin, g_dmax, g_out,
                          g_common.resolved_workers(cfg, *gen));
    }
    if (lab->parsed()) {
      const auto cfg = l_common.config();
      return run_label(l_in, l_out, l_budget, l_iters, l_common.resolved_workers(cfg, *lab));
    }
    if (tr->parsed()) {
      const auto cfg = t_common.config();
      // Config values apply unless overridden on the command line.
      if (!tr->count("--epochs")) t_spec.epochs = cfg.epochs;
      if (!tr->count("--batch")) t_spec.batch_size = cfg.batch_size;
      if (!tr->count("--lr")) t_spec.learning_rate = cfg.learning_rate;
      if (!tr->count("--seed")) t_spec.seed = cfg.seed;
      if (!tr->count("--d-model")) t_spec.model.d_model = cfg.model.d_model;
      if (!tr->count("--hidden")) t_spec.model.hidden = cfg.model.hidden;
      if (!tr->count("--layers")) t_spec.model.layers = cfg.model.layers;
      t_spec.weights = cfg.weights;
      t_spec.load_mode = cfg.load_mode;
      t_spec.workers = t_common.resolved_workers(cfg, *tr);
      try {
        bench::train(t_spec, [](const bench::EpochTelemetry& t) {
          std::cerr << bench::to_json_line(t) << '\n';
        });
      } catch (const bench::TrainingAborted& e) {
        std::cerr << "training aborted: " << e.what() << "\nlast checkpoint: "
                  << (e.last_checkpoint().empty() ? "(none)" : e.last_checkpoint()) << '\n';
        return 3;
      }
      return 0;
    }
    if (sol->parsed()) {
      const auto cfg = s_common.config();
      const auto loaded = model::load(s_model);
      const auto instances = instances_of(data::read_records(s_in));
      decode::SolveOptions opts;
      opts.guarantee = s_guarantee;
      opts.postprocess_ms = s_pp;
      std::vector<bench::PlanRecord> out(instances.size());
      const int n = static_cast<int>(instances.size());
#pragma omp parallel for schedule(dynamic) num_threads(s_common.resolved_workers(cfg, *sol))
      for (int i = 0; i < n; ++i)
        out[i] = {instances[i], decode::solve(instances[i], loaded.config, loaded.params, opts)};
      bench::write_plans(out, s_out);
      int solved = 0;
      for (const auto& r : out) solved += r.result.stats.solved ? 1 : 0;
      std::cerr << "solved " << solved << " of " << out.size() << '\n';
      return 0;
    }
    if (pp->parsed()) {
      const auto cfg = p_common.config();
      auto records = bench::read_plans(p_in);
      const int n = static_cast<int>(records.size());
#pragma omp parallel for schedule(dynamic) num_threads(p_common.resolved_workers(cfg, *pp))
      for (int i = 0; i < n; ++i) {
        const int budget = p_budget > 0 ? p_budget
                                        : bench::default_postprocess_ms(
                                              records[i].instance.num_customers());
        records[i].result = postprocess_plan(records[i].instance, std::move(records[i].result),
                                             cfg.search, budget, p_iters);
      }
      bench::write_plans(records, p_out.empty() ? p_in : p_out);
      return 0;
    }
    if (ev->parsed()) {
      const auto cfg = e_common.config();
      const auto records = data::read_records(e_in);
      const auto instances = instances_of(records);
      std::vector<double> refs;
      bool all_labeled = !records.empty();
      for (const auto& r : records) all_labeled = all_labeled && r.labeled.has_value();
      if (all_labeled)
        for (const auto& r : records) refs.push_back(r.labeled->label_cost);

      const int n_customers = instances.empty() ? 20 : instances.front().num_customers();
      bench::EvalOptions opts;
      opts.vehicle_cost = e_cv >= 0.0 ? e_cv : cfg.vehicle_costs.for_size(n_customers);
      opts.workers = e_common.resolved_workers(cfg, *ev);
      opts.allow_extra_vehicles = e_guarantee;
      const int pp_ms = e_pp >= 0 ? e_pp : bench::default_postprocess_ms(n_customers);

      bench::Solver solver;
      model::LoadedModel loaded;
      if (e_solver == "model") {
        if (e_model.empty()) throw std::invalid_argument("eval: --model is required");
        loaded = model::load(e_model);
        decode::SolveOptions so;
        so.guarantee = e_guarantee;
        so.postprocess_ms = pp_ms;
        solver = [&loaded, so](const Instance& inst) {
          return decode::solve(inst, loaded.config, loaded.params, so);
        };
      } else if (e_solver == "labels") {
        if (!all_labeled) throw std::invalid_argument("eval: solver 'labels' needs a labeled dataset");
        solver = [&records](const Instance& inst) {
          for (const auto& r : records)
            if (r.instance == inst) {
              decode::SolveResult res;
              res.plan = r.labeled->target;
              res.stats.solved = true;
              res.stats.cost_before = res.stats.cost_after = route_cost(inst, res.plan);
              res.stats.vehicles_used = res.plan.vehicles_used();
              return res;
            }
          throw std::runtime_error("instance not found among labels");
        };
      } else {
        solver = [&cfg, pp_ms](const Instance& inst) {
          decode::SolveResult res;
          const auto t0 = std::chrono::steady_clock::now();
          auto plan = search::construct(inst);
          res.stats.decode_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
          if (!plan) return res;
          res.plan = std::move(*plan);
          res.stats.solved = true;
          res.stats.cost_before = res.stats.cost_after = route_cost(inst, res.plan);
          if (pp_ms > 0) res = postprocess_plan(inst, std::move(res), cfg.search, pp_ms, 0);
          return res;
        };
      }
      const auto report = bench::evaluate(instances, solver, opts, refs);
      const auto fmt = bench::report_format_from_string(e_format);
      if (e_out.empty())
        std::cout << bench::render(report, fmt);
      else
        bench::write_report(report, fmt, e_out);
      return 0;
    }
    if (rep->parsed()) {
      const auto report = bench::read_csv_report(r_in);
      const auto fmt = bench::report_format_from_string(r_format);
      if (r_out.empty())
        std::cout << bench::render(report, fmt);
      else
        bench::write_report(report, fmt, r_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
