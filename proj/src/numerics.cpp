#include "pivrp/numerics.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "pivrp/kernels.hpp"

namespace pivrp::numerics {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || x.cols() != w.dim(1) || b.size() != static_cast<std::size_t>(w.dim(0)))
    throw ShapeError("linear: input " + x.shape_string() + " does not fit weight " +
                     w.shape_string() + " with bias " + b.shape_string());
  const kernels::AffineDims d{x.rows(), w.dim(1), w.dim(0)};
  std::vector<int> shape = x.shape();
  if (shape.empty()) shape = {1};
  shape.back() = d.out;
  Tensor y(std::move(shape));
  kernels::parallel::affine(d, x.values(), w.values(), b.values(), y.values());
  return y;
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor& dw,
                     Tensor& db) {
  if (dy.cols() != w.dim(0) || dy.rows() != x.rows() || !dw.same_shape(w))
    throw ShapeError("linear_backward: gradient " + dy.shape_string() + " does not fit weight " +
                     w.shape_string());
  const kernels::AffineDims d{x.rows(), w.dim(1), w.dim(0)};
  std::span<double> dx_span;
  if (dx) {
    if (dx->size() != x.size()) throw ShapeError("linear_backward: dx shape mismatch");
    dx_span = dx->values();
  }
  kernels::parallel::affine_backward(d, x.values(), w.values(), dy.values(), dx_span, dw.values(),
                                     db.values());
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

void relu_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
  if (y.size() != dy.size() || dx.size() != y.size()) throw ShapeError("relu_backward: shape mismatch");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] > 0.0) dx[i] += dy[i];
}

Tensor softmax_rows(const Tensor& x) {
  if (x.cols() < 1) throw ShapeError("softmax_rows: empty last axis");
  Tensor y(x.shape());
  kernels::parallel::softmax_rows(x.rows(), x.cols(), x.values(), y.values());
  return y;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy) {
  if (!y.same_shape(dy)) throw ShapeError("softmax_rows_backward: shape mismatch");
  Tensor dx(y.shape());
  const int cols = y.cols();
  for (int r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    auto gr = dy.row(r);
    double dot = 0.0;
    for (int c = 0; c < cols; ++c) dot += yr[c] * gr[c];
    auto out = dx.row(r);
    for (int c = 0; c < cols; ++c) out[c] = yr[c] * (gr[c] - dot);
  }
  return dx;
}

PoolResult pool(const Tensor& h, PoolMode mode) {
  const int l = h.rows(), d = h.cols();
  if (l < 1 || h.size() == 0) throw ShapeError("pool: empty input");
  PoolResult out;
  // Per column: best row and the best row excluding it (lowest index on ties).
  std::vector<int> first(d, 0), second(d, -1);
  for (int c = 0; c < d; ++c) {
    for (int r = 1; r < l; ++r)
      if (h.at(r, c) > h.at(first[c], c)) first[c] = r;
    for (int r = 0; r < l; ++r) {
      if (r == first[c]) continue;
      if (second[c] < 0 || h.at(r, c) > h.at(second[c], c)) second[c] = r;
    }
  }
  if (mode == PoolMode::full) {
    out.context = Tensor({1, d});
    out.source.resize(d);
    for (int c = 0; c < d; ++c) {
      out.context.at(0, c) = h.at(first[c], c);
      out.source[c] = first[c];
    }
    return out;
  }
  out.context = Tensor({l, d});
  out.source.resize(static_cast<std::size_t>(l) * d);
  for (int r = 0; r < l; ++r) {
    for (int c = 0; c < d; ++c) {
      const int src = r == first[c] ? second[c] : first[c];
      out.source[static_cast<std::size_t>(r) * d + c] = src;
      out.context.at(r, c) = src < 0 ? 0.0 : h.at(src, c);
    }
  }
  return out;
}

void pool_backward(const PoolResult& pooled, const Tensor& d_context, Tensor& dh) {
  if (!d_context.same_shape(pooled.context)) throw ShapeError("pool_backward: shape mismatch");
  const int d = pooled.context.cols();
  for (int r = 0; r < pooled.context.rows(); ++r)
    for (int c = 0; c < d; ++c) {
      const int src = pooled.source[static_cast<std::size_t>(r) * d + c];
      if (src >= 0) dh.at(src, c) += d_context.at(r, c);
    }
}

Parameter& ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Tensor zero(shape);
  params_.push_back({name, zero, zero, zero, zero});
  index_[name] = params_.size() - 1;
  return params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return params_[it->second];
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::vector<Tensor> ParamStore::gradient_like() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.value.shape());
  return out;
}

void ParamStore::add_gradients(const std::vector<Tensor>& grads) {
  if (grads.size() != params_.size()) throw ShapeError("gradient list does not match store");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& g = params_[i].grad;
    if (!g.same_shape(grads[i])) throw ShapeError("gradient shape mismatch for " + params_[i].name);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += grads[i][j];
  }
}

void adam_step(ParamStore& store, const AdamConfig& config) {
  for (const auto& p : store.params()) p.grad.check_finite("gradient of " + p.name);
  const std::int64_t t = store.step() + 1;
  store.set_step(t);
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (auto& p : store.params()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.m[i] = config.beta1 * p.m[i] + (1.0 - config.beta1) * g;
      p.v[i] = config.beta2 * p.v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = p.m[i] / c1;
      const double v_hat = p.v[i] / c2;
      p.value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    p.grad.fill(0.0);
  }
}

GradCheckReport grad_check(ParamStore& store, const GradCheckProblem& problem,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  store.zero_grad();
  problem.gradient();
  std::vector<Tensor> analytic;
  for (const auto& p : store.params()) analytic.push_back(p.grad);
  const std::uint64_t base_sig = problem.signature ? problem.signature() : 0;

  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : store.params()) {
    offsets.push_back(total);
    total += p.value.size();
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  const int max_attempts = options.samples * options.max_attempts_factor;
  for (int attempt = 0; attempt < max_attempts && report.checked < options.samples; ++attempt) {
    const std::size_t flat = pick(rng);
    std::size_t pi = 0;
    while (pi + 1 < offsets.size() && offsets[pi + 1] <= flat) ++pi;
    const std::size_t idx = flat - offsets[pi];
    Parameter& p = store.params()[pi];
    const double saved = p.value[idx];

    p.value[idx] = saved + options.step;
    const double plus = problem.value();
    const std::uint64_t sig_plus = problem.signature ? problem.signature() : 0;
    p.value[idx] = saved - options.step;
    const double minus = problem.value();
    const std::uint64_t sig_minus = problem.signature ? problem.signature() : 0;
    p.value[idx] = saved;
    if (sig_plus != base_sig || sig_minus != base_sig) {
      ++report.resampled;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[pi][idx];
    const double raw_denom = std::max({std::abs(a), std::abs(numeric), options.floor});
    double denom = raw_denom;
    if (options.noise_floor) {
      const double noise = std::numeric_limits<double>::epsilon() *
                           std::max(std::abs(plus), std::abs(minus)) / options.step;
      denom = std::max(denom, noise / options.tolerance);
    }
    const double rel = std::abs(a - numeric) / denom;
    report.max_raw_rel_error = std::max(report.max_raw_rel_error, std::abs(a - numeric) / raw_denom);
    ++report.checked;
    if (report.worst_param.empty() || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = p.name;
      report.worst_index = idx;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  // Leave the store's values and base state consistent for the caller.
  problem.value();
  report.passed = report.checked == options.samples && report.max_rel_error <= options.tolerance;
  return report;
}

namespace {

constexpr const char* checkpoint_magic = "pivrp-checkpoint";
constexpr int checkpoint_version = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host order and must be little-endian");

}  // namespace

void save_checkpoint(const std::string& path, const std::map<std::string, std::string>& header,
                     const ParamStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << checkpoint_magic << ' ' << checkpoint_version << '\n';
  for (const auto& [key, value] : header) {
    if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos)
      throw std::invalid_argument("checkpoint header entries must be single tokens: " + key);
    out << "meta " << key << ' ' << value << '\n';
  }
  out << "step " << params.step() << '\n';
  for (const auto& p : params.params()) {
    out << "tensor " << p.name << ' ' << p.value.rank();
    for (int e : p.value.shape()) out << ' ' << e;
    out << '\n';
  }
  out << "data\n";
  for (const auto& p : params.params())
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  Checkpoint ckpt;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty checkpoint: " + path);
  {
    std::istringstream first(line);
    std::string magic;
    int version = 0;
    first >> magic >> version;
    if (magic != checkpoint_magic) throw std::runtime_error("not a checkpoint: " + path);
    if (version != checkpoint_version)
      throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  while (std::getline(in, line)) {
    if (line == "data") break;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "meta") {
      std::string key, value;
      fields >> key;
      std::getline(fields >> std::ws, value);
      ckpt.header[key] = value;
    } else if (kind == "step") {
      std::int64_t step = 0;
      fields >> step;
      ckpt.params.set_step(step);
    } else if (kind == "tensor") {
      std::string name;
      int rank = 0;
      fields >> name >> rank;
      std::vector<int> shape(rank);
      for (int& e : shape) fields >> e;
      if (!fields) throw std::runtime_error("malformed tensor header in checkpoint: " + line);
      ckpt.params.add(name, shape);
    } else {
      throw std::runtime_error("unexpected checkpoint header line: " + line);
    }
  }
  for (auto& p : ckpt.params.params()) {
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint truncated in tensor " + p.name);
  }
  return ckpt;
}

}  // namespace pivrp::numerics
