#ifndef PIVRP_MODEL_HPP
#define PIVRP_MODEL_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pivrp/core.hpp"
#include "pivrp/numerics.hpp"

namespace pivrp::model {

struct ModelConfig {
  int d_model = 64;
  int hidden = 256;
  int layers = 3;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Row-stochastic edge probabilities, shape M x N' x N'.
struct ProbTensor {
  Tensor values;

  int vehicles() const { return values.dim(0); }
  int vertices() const { return values.dim(1); }
  double at(int k, int i, int j) const {
    return values[(static_cast<std::size_t>(k) * vertices() + i) * vertices() + j];
  }
  double& at(int k, int i, int j) {
    return values[(static_cast<std::size_t>(k) * vertices() + i) * vertices() + j];
  }
};

enum Entity { depot = 0, customers = 1, vehicles = 2 };
constexpr std::array<const char*, 3> entity_names = {"dep", "cus", "veh"};

// One embedding matrix per entity: 1 x d, N x d, M x d.
struct Embeddings {
  std::array<Tensor, 3> h;
};

/// Creates every parameter of the network, initialised uniformly in
/// +-1/sqrt(fan_in) from `seed`.
numerics::ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

// Checks that `params` holds exactly the tensors `config` calls for.
void check_params(const ModelConfig& config, const numerics::ParamStore& params);

Embeddings embed(const FeatureSet& features, const numerics::ParamStore& params);

struct PoolLayerCache {
  Embeddings input;
  // Per source entity: pooled over all rows, and leave-one-out.
  std::array<numerics::PoolResult, 3> full;
  std::array<numerics::PoolResult, 3> loo;
  std::array<Tensor, 3> concat;  // [h; c_dep; c_cus; c_veh]
  std::array<Tensor, 3> hidden;  // after ReLU
};

/// One pooling layer. Each element's context concatenates a max-pool of
/// every entity: leave-one-out over its own entity, full over the others.
/// The concatenation [h; c_dep; c_cus; c_veh] passes through a per-entity
/// two-layer map (ReLU between) back to width d_model.
Embeddings pool_layer(const Embeddings& in, const numerics::ParamStore& params, int layer,
                      PoolLayerCache* cache = nullptr);

struct DecoderCache {
  Tensor edges;     // E: N' x d
  Tensor vehicles;  // V: M x d
  Tensor act;       // M x N' x N' x d, ReLU(W_o [E_i; E_j; V_k] + b_o)
};

// Compatibility scores (pre-softmax logits), M x N' x N'.
Tensor decode_logits(const Embeddings& final, const numerics::ParamStore& params,
                     DecoderCache* cache = nullptr);
ProbTensor decode(const Embeddings& final, const numerics::ParamStore& params);

struct ForwardResult {
  Tensor logits;
  ProbTensor probs;
  std::vector<PoolLayerCache> layers;
  Embeddings final;
  DecoderCache decoder;
};

ForwardResult forward(const FeatureSet& features, const ModelConfig& config,
                      const numerics::ParamStore& params);
ProbTensor predict(const Instance& instance, const ModelConfig& config,
                   const numerics::ParamStore& params);

/// Reverse pass from dL/dlogits. Gradients are added to `grads`, which
/// follows the parameter order of `params` (see ParamStore::gradient_like).
void backward(const FeatureSet& features, const ModelConfig& config,
              const numerics::ParamStore& params, const ForwardResult& fwd,
              const Tensor& d_logits, std::vector<Tensor>& grads);

// Fingerprint of ReLU patterns and pooling argmaxes, for gradient checks.
std::uint64_t branch_signature(const ForwardResult& fwd);

void save(const std::string& path, const ModelConfig& config, const numerics::ParamStore& params,
          const std::map<std::string, std::string>& extra = {});

struct LoadedModel {
  ModelConfig config;
  numerics::ParamStore params;
  std::map<std::string, std::string> header;
};

/// Reads a checkpoint and verifies every tensor against the shapes implied
/// by the architecture recorded in its header.
LoadedModel load(const std::string& path);

}  // namespace pivrp::model

#endif  // PIVRP_MODEL_HPP
