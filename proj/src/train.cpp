#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "pivrp/bench.hpp"

namespace pivrp::bench {

namespace {

using Clock = std::chrono::steady_clock;

struct SampleLoss {
  double loss = 0.0;
  double nll = 0.0;
  double capacity_violation = 0.0;
  int clamped = 0;
};

SampleLoss sample_loss(const model::ModelConfig& config, const numerics::ParamStore& params,
                       const data::LabeledSample& sample, const loss::LossWeights& weights,
                       loss::LoadMode mode, double grad_scale, std::vector<Tensor>* grads) {
  const FeatureSet features = encode(sample.instance);
  const auto fwd = model::forward(features, config, params);
  auto res = loss::train_loss(fwd.probs, sample.target, sample.instance, weights, mode,
                              grads != nullptr);
  if (grads && std::isfinite(res.value)) {
    for (std::size_t i = 0; i < res.d_logits.size(); ++i) res.d_logits[i] *= grad_scale;
    model::backward(features, config, params, fwd, res.d_logits, *grads);
  }
  return SampleLoss{res.value, res.nll, res.capacity_violation, res.clamped};
}

// Rethrows the first exception captured inside a parallel region.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_checkpoint(const std::string& path, const model::ModelConfig& config,
                      const numerics::ParamStore& params, const TrainSpec& spec, int epoch) {
  if (path.empty()) return;
  const std::string tmp = path + ".tmp";
  model::save(tmp, config, params,
              {{"epoch", std::to_string(epoch)},
               {"step", std::to_string(params.step())},
               {"seed", std::to_string(spec.seed)},
               {"load_mode", loss::to_string(spec.load_mode)}});
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string to_json_line(const EpochTelemetry& t) {
  nlohmann::json j;
  j["epoch"] = t.epoch;
  j["step"] = t.step;
  j["loss"] = t.loss;
  j["nll"] = t.nll;
  j["capacity_violation"] = t.capacity_violation;
  if (t.val_loss) j["val_loss"] = *t.val_loss;
  if (t.val_nll) j["val_nll"] = *t.val_nll;
  if (t.val_capacity_violation) j["val_capacity_violation"] = *t.val_capacity_violation;
  j["clamped"] = t.clamped;
  j["wall_ms"] = t.wall_ms;
  return j.dump();
}

BatchLoss evaluate_loss(const model::ModelConfig& config, const numerics::ParamStore& params,
                        const std::vector<data::LabeledSample>& samples,
                        const loss::LossWeights& weights, loss::LoadMode mode, int workers) {
  BatchLoss out;
  if (samples.empty()) return out;
  const int n = static_cast<int>(samples.size());
  std::vector<SampleLoss> per(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(workers, 1))
  for (int i = 0; i < n; ++i) {
    try {
      per[i] = sample_loss(config, params, samples[i], weights, mode, 1.0, nullptr);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  rethrow_first(errors);
  for (const auto& s : per) {
    out.loss += s.loss;
    out.nll += s.nll;
    out.capacity_violation += s.capacity_violation;
    out.clamped += s.clamped;
  }
  out.loss /= n;
  out.nll /= n;
  out.capacity_violation /= n;
  return out;
}

TrainResult train(const TrainSpec& spec, const std::vector<data::LabeledSample>& samples,
                  const std::vector<data::LabeledSample>& validation,
                  const EpochCallback& on_epoch, const BatchCallback& on_batch) {
  if (spec.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (spec.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (samples.empty()) throw std::invalid_argument("train: empty training set");
  for (const auto& s : samples) {
    if (!validate(s.instance, s.target).feasible)
      throw std::invalid_argument("train: dataset contains an infeasible target");
    if (s.target.num_tours() != s.instance.fleet_size())
      throw std::invalid_argument("train: target tour count differs from the fleet size");
  }

  TrainResult result;
  result.params = model::init_params(spec.model, spec.seed);
  auto& params = result.params;
  numerics::AdamConfig adam;
  adam.lr = spec.learning_rate;

  std::ofstream telemetry;
  if (!spec.telemetry_path.empty()) {
    telemetry.open(spec.telemetry_path);
    if (!telemetry) throw std::runtime_error("cannot write telemetry '" + spec.telemetry_path + "'");
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<int> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const int chunks = std::max(spec.workers, 1);
  std::string last_checkpoint;

  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    const auto start = Clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    EpochTelemetry tel;
    tel.epoch = epoch;
    int seen = 0;
    int batches = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += spec.batch_size) {
      if (spec.max_batches_per_epoch > 0 && batches >= spec.max_batches_per_epoch) break;
      const std::size_t end = std::min(order.size(), begin + spec.batch_size);
      const int count = static_cast<int>(end - begin);
      const double scale = 1.0 / count;

      std::vector<std::vector<Tensor>> grads(chunks);
      std::vector<SampleLoss> per(count);
      std::vector<std::exception_ptr> errors(chunks);
#pragma omp parallel for schedule(static, 1) num_threads(chunks)
      for (int c = 0; c < chunks; ++c) {
        try {
          grads[c] = params.gradient_like();
          const int lo = count * c / chunks;
          const int hi = count * (c + 1) / chunks;
          for (int s = lo; s < hi; ++s)
            per[s] = sample_loss(spec.model, params, samples[order[begin + s]], spec.weights,
                                 spec.load_mode, scale, &grads[c]);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
      try {
        rethrow_first(errors);
      } catch (const NumericError& e) {
        throw TrainingAborted(std::string("train: ") + e.what() + " in epoch " +
                                  std::to_string(epoch),
                              last_checkpoint);
      }
      BatchTelemetry bt;
      bt.epoch = epoch;
      for (const auto& s : per) {
        if (!std::isfinite(s.loss))
          throw TrainingAborted("train: non-finite loss in epoch " + std::to_string(epoch),
                                last_checkpoint);
        bt.loss += s.loss;
        bt.nll += s.nll;
        bt.capacity_violation += s.capacity_violation;
        tel.clamped += s.clamped;
      }
      tel.loss += bt.loss;
      tel.nll += bt.nll;
      tel.capacity_violation += bt.capacity_violation;
      params.zero_grad();
      for (const auto& g : grads) params.add_gradients(g);
      try {
        numerics::adam_step(params, adam);
      } catch (const NumericError& e) {
        throw TrainingAborted(std::string("train: ") + e.what(), last_checkpoint);
      }
      seen += count;
      ++batches;
      if (on_batch) {
        bt.step = params.step();
        bt.loss /= count;
        bt.nll /= count;
        bt.capacity_violation /= count;
        on_batch(bt);
      }
    }

    tel.loss /= seen;
    tel.nll /= seen;
    tel.capacity_violation /= seen;
    tel.step = params.step();
    if (!validation.empty()) {
      const auto v = evaluate_loss(spec.model, params, validation, spec.weights, spec.load_mode,
                                   spec.workers);
      tel.val_loss = v.loss;
      tel.val_nll = v.nll;
      tel.val_capacity_violation = v.capacity_violation;
    }
    tel.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();

    const bool periodic = spec.checkpoint_every > 0 && epoch % spec.checkpoint_every == 0;
    if (periodic || epoch == spec.epochs) {
      write_checkpoint(spec.checkpoint_path, spec.model, params, spec, epoch);
      if (!spec.checkpoint_path.empty()) last_checkpoint = spec.checkpoint_path;
    }
    if (telemetry) telemetry << to_json_line(tel) << '\n' << std::flush;
    if (on_epoch) on_epoch(tel);
    result.history.push_back(tel);
  }
  if (spec.epochs == 0) write_checkpoint(spec.checkpoint_path, spec.model, params, spec, 0);
  result.checkpoint_path = spec.checkpoint_path;
  return result;
}

TrainResult train(const TrainSpec& spec, const EpochCallback& on_epoch) {
  const auto samples = data::read_dataset(spec.dataset_path);
  std::vector<data::LabeledSample> validation;
  if (!spec.validation_path.empty()) validation = data::read_dataset(spec.validation_path);
  return train(spec, samples, validation, on_epoch);
}

}  // namespace pivrp::bench
