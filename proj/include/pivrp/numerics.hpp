#ifndef PIVRP_NUMERICS_HPP
#define PIVRP_NUMERICS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pivrp/tensor.hpp"

namespace pivrp::numerics {

// ---------------------------------------------------------------------------
// Affine map y = x W^T + b applied row-wise. W has shape (out, in).

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Accumulates into dw, db and (if non-null) dx.
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor& dw,
                     Tensor& db);

Tensor relu(const Tensor& x);
// dx += dy where y > 0.
void relu_backward(const Tensor& y, const Tensor& dy, Tensor& dx);

// ---------------------------------------------------------------------------
// Softmax over the last axis.

Tensor softmax_rows(const Tensor& x);
// Given y = softmax(x) and dL/dy, returns dL/dx.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy);

// ---------------------------------------------------------------------------
// Max pooling over the rows of an (l x d) matrix.

enum class PoolMode { full, leave_one_out };

struct PoolResult {
  // full: 1 x d. leave_one_out: l x d, row r pooled without row r.
  Tensor context;
  // Source row of each context entry, -1 where the context is the zero
  // vector of a singleton leave-one-out group.
  std::vector<int> source;
};

/// Element-wise max over rows. Ties resolve to the lowest row index, which is
/// also where backward routes the gradient. A leave-one-out pool of a single
/// row yields a zero context.
PoolResult pool(const Tensor& h, PoolMode mode);
// dh[source] += d_context
void pool_backward(const PoolResult& pooled, const Tensor& d_context, Tensor& dh);

// ---------------------------------------------------------------------------
// Parameters and optimizer.

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
};

class ParamStore {
 public:
  Parameter& add(const std::string& name, std::vector<int> shape);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  // Position of `name` in params().
  std::size_t index_of(const std::string& name) const;

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  std::size_t num_scalars() const;
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  void zero_grad();
  // Zeroed gradient buffers with the store's layout.
  std::vector<Tensor> gradient_like() const;
  void add_gradients(const std::vector<Tensor>& grads);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update from the stored gradients, which are zeroed
/// afterwards. A non-finite gradient throws NumericError before any
/// parameter changes.
void adam_step(ParamStore& store, const AdamConfig& config);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

struct GradCheckProblem {
  // Loss at the current parameter values.
  std::function<double()> value;
  // Fills the store's gradients at the current parameter values.
  std::function<void()> gradient;
  // Optional fingerprint of the discrete choices (pooling argmaxes, ReLU
  // patterns, decoded plans). Coordinates whose perturbation changes it are
  // skipped and resampled.
  std::function<std::uint64_t()> signature;
};

struct GradCheckOptions {
  int samples = 200;
  double step = 1e-5;
  double tolerance = 1e-5;
  // Denominator floor of the relative error.
  double floor = 1e-6;
  // Also floor the denominator at the rounding noise of the central
  // difference (eps * |f| / step) divided by the tolerance, so gradients
  // smaller than the oracle can resolve are compared in absolute terms.
  bool noise_floor = true;
  std::uint64_t seed = 1;
  int max_attempts_factor = 20;
};

struct GradCheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  // The same maximum with only the fixed floor applied.
  double max_raw_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int checked = 0;
  int resampled = 0;
};

GradCheckReport grad_check(ParamStore& store, const GradCheckProblem& problem,
                           const GradCheckOptions& options = {});

// ---------------------------------------------------------------------------
// Checkpoints: text header of key/value pairs and tensor descriptors followed
// by the raw little-endian doubles of every tensor in order.

struct Checkpoint {
  std::map<std::string, std::string> header;
  ParamStore params;
};

void save_checkpoint(const std::string& path, const std::map<std::string, std::string>& header,
                     const ParamStore& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pivrp::numerics

#endif  // PIVRP_NUMERICS_HPP
