#include "pivrp/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pivrp/kernels.hpp"

namespace pivrp::model {

using numerics::ParamStore;
using numerics::PoolMode;

namespace {

constexpr std::array<int, 3> feature_widths = {FeatureSet::depot_width,
                                               FeatureSet::customer_width,
                                               FeatureSet::vehicle_width};

std::string embed_name(int g, const char* what) {
  return std::string("embed.") + entity_names[g] + "." + what;
}

std::string layer_name(int layer, int g, const char* what) {
  return "layer" + std::to_string(layer) + "." + entity_names[g] + "." + what;
}

struct ParamSpec {
  std::string name;
  std::vector<int> shape;
  int fan_in;
};

std::vector<ParamSpec> param_specs(const ModelConfig& c) {
  if (c.d_model < 1 || c.hidden < 1 || c.layers < 0)
    throw std::invalid_argument("model widths must be positive");
  const int d = c.d_model;
  std::vector<ParamSpec> specs;
  for (int g = 0; g < 3; ++g) {
    specs.push_back({embed_name(g, "w"), {d, feature_widths[g]}, feature_widths[g]});
    specs.push_back({embed_name(g, "b"), {d}, feature_widths[g]});
  }
  for (int l = 0; l < c.layers; ++l) {
    for (int g = 0; g < 3; ++g) {
      specs.push_back({layer_name(l, g, "w1"), {c.hidden, 4 * d}, 4 * d});
      specs.push_back({layer_name(l, g, "b1"), {c.hidden}, 4 * d});
      specs.push_back({layer_name(l, g, "w2"), {d, c.hidden}, c.hidden});
      specs.push_back({layer_name(l, g, "b2"), {d}, c.hidden});
    }
  }
  // The three blocks of W_o act on [E_i; E_j; V_k].
  specs.push_back({"decoder.w_from", {d, d}, 3 * d});
  specs.push_back({"decoder.w_to", {d, d}, 3 * d});
  specs.push_back({"decoder.w_vehicle", {d, d}, 3 * d});
  specs.push_back({"decoder.bias", {d}, 3 * d});
  return specs;
}

Tensor feature_matrix(const std::vector<double>& values, int rows, int cols) {
  return Tensor({rows, cols}, values);
}

std::array<Tensor, 3> feature_tensors(const FeatureSet& f) {
  return {feature_matrix(f.depot, 1, FeatureSet::depot_width),
          feature_matrix(f.customers, f.num_customers, FeatureSet::customer_width),
          feature_matrix(f.vehicles, f.num_vehicles, FeatureSet::vehicle_width)};
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v;
  return h * 1099511628211ULL;
}

}  // namespace

ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
  ParamStore store;
  std::mt19937_64 rng(seed);
  for (const auto& spec : param_specs(config)) {
    auto& p = store.add(spec.name, spec.shape);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : p.value.values()) v = dist(rng);
  }
  return store;
}

void check_params(const ModelConfig& config, const ParamStore& params) {
  const auto specs = param_specs(config);
  if (specs.size() != params.params().size())
    throw ShapeError("checkpoint holds " + std::to_string(params.params().size()) +
                     " tensors, architecture needs " + std::to_string(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& p = params.params()[i];
    if (p.name != specs[i].name)
      throw ShapeError("expected tensor '" + specs[i].name + "', found '" + p.name + "'");
    if (p.value.shape() != specs[i].shape)
      throw ShapeError("tensor '" + p.name + "' has shape " + p.value.shape_string() +
                       ", architecture needs " + Tensor(specs[i].shape).shape_string());
  }
}

Embeddings embed(const FeatureSet& features, const ParamStore& params) {
  const auto x = feature_tensors(features);
  Embeddings out;
  for (int g = 0; g < 3; ++g)
    out.h[g] = numerics::linear(x[g], params.get(embed_name(g, "w")).value,
                                params.get(embed_name(g, "b")).value);
  return out;
}

Embeddings pool_layer(const Embeddings& in, const ParamStore& params, int layer,
                      PoolLayerCache* cache) {
  const int d = in.h[0].cols();
  std::array<numerics::PoolResult, 3> full, loo;
  for (int s = 0; s < 3; ++s) {
    full[s] = numerics::pool(in.h[s], PoolMode::full);
    loo[s] = numerics::pool(in.h[s], PoolMode::leave_one_out);
  }
  Embeddings out;
  std::array<Tensor, 3> concat, hidden;
  for (int g = 0; g < 3; ++g) {
    const int rows = in.h[g].rows();
    Tensor z({rows, 4 * d});
    for (int r = 0; r < rows; ++r) {
      auto dst = z.row(r);
      auto own = in.h[g].row(r);
      std::copy(own.begin(), own.end(), dst.begin());
      for (int s = 0; s < 3; ++s) {
        auto ctx = s == g ? loo[s].context.row(r) : full[s].context.row(0);
        std::copy(ctx.begin(), ctx.end(), dst.begin() + (1 + s) * d);
      }
    }
    Tensor u = numerics::relu(numerics::linear(z, params.get(layer_name(layer, g, "w1")).value,
                                               params.get(layer_name(layer, g, "b1")).value));
    out.h[g] = numerics::linear(u, params.get(layer_name(layer, g, "w2")).value,
                                params.get(layer_name(layer, g, "b2")).value);
    concat[g] = std::move(z);
    hidden[g] = std::move(u);
  }
  if (cache) {
    cache->input = in;
    cache->full = std::move(full);
    cache->loo = std::move(loo);
    cache->concat = std::move(concat);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Tensor decode_logits(const Embeddings& final, const ParamStore& params, DecoderCache* cache) {
  const int d = final.h[depot].cols();
  const int n = final.h[customers].rows() + 1;
  const int m = final.h[vehicles].rows();

  Tensor edges({n, d});
  std::copy(final.h[depot].values().begin(), final.h[depot].values().end(), edges.data());
  std::copy(final.h[customers].values().begin(), final.h[customers].values().end(),
            edges.data() + d);
  const Tensor& veh = final.h[vehicles];

  const Tensor zero_bias({d});
  const Tensor from = numerics::linear(edges, params.get("decoder.w_from").value, zero_bias);
  const Tensor to = numerics::linear(edges, params.get("decoder.w_to").value, zero_bias);
  const Tensor veh_proj = numerics::linear(veh, params.get("decoder.w_vehicle").value, zero_bias);

  Tensor act({m, n, n, d});
  Tensor logits({m, n, n});
  kernels::parallel::edge_scores({m, n, d}, from.values(), to.values(), veh_proj.values(),
                                 params.get("decoder.bias").value.values(), veh.values(),
                                 1.0 / std::sqrt(static_cast<double>(d)), act.values(),
                                 logits.values());
  if (cache) {
    cache->edges = std::move(edges);
    cache->vehicles = veh;
    cache->act = std::move(act);
  }
  return logits;
}

ProbTensor decode(const Embeddings& final, const ParamStore& params) {
  return ProbTensor{numerics::softmax_rows(decode_logits(final, params))};
}

ForwardResult forward(const FeatureSet& features, const ModelConfig& config,
                      const ParamStore& params) {
  ForwardResult out;
  Embeddings h = embed(features, params);
  out.layers.resize(config.layers);
  for (int l = 0; l < config.layers; ++l) h = pool_layer(h, params, l, &out.layers[l]);
  out.final = std::move(h);
  out.logits = decode_logits(out.final, params, &out.decoder);
  out.probs.values = numerics::softmax_rows(out.logits);
  return out;
}

ProbTensor predict(const Instance& instance, const ModelConfig& config, const ParamStore& params) {
  const FeatureSet f = encode(instance);
  Embeddings h = embed(f, params);
  for (int l = 0; l < config.layers; ++l) h = pool_layer(h, params, l);
  return decode(h, params);
}

void backward(const FeatureSet& features, const ModelConfig& config, const ParamStore& params,
              const ForwardResult& fwd, const Tensor& d_logits, std::vector<Tensor>& grads) {
  if (!d_logits.same_shape(fwd.logits)) throw ShapeError("backward: logit gradient shape mismatch");
  auto grad = [&](const std::string& name) -> Tensor& { return grads[params.index_of(name)]; };

  const int d = config.d_model;
  const int m = fwd.final.h[vehicles].rows();
  const int n = fwd.final.h[customers].rows() + 1;
  const DecoderCache& dc = fwd.decoder;

  // Decoder.
  Tensor d_from({n, d}), d_to({n, d}), d_veh_proj({m, d}), d_veh({m, d});
  kernels::parallel::edge_scores_backward({m, n, d}, dc.act.values(), dc.vehicles.values(),
                                          1.0 / std::sqrt(static_cast<double>(d)),
                                          d_logits.values(), d_from.values(), d_to.values(),
                                          d_veh_proj.values(), grad("decoder.bias").values(),
                                          d_veh.values());
  Tensor d_edges({n, d});
  Tensor unused_bias({d});
  numerics::linear_backward(dc.edges, params.get("decoder.w_from").value, d_from, &d_edges,
                            grad("decoder.w_from"), unused_bias);
  numerics::linear_backward(dc.edges, params.get("decoder.w_to").value, d_to, &d_edges,
                            grad("decoder.w_to"), unused_bias);
  numerics::linear_backward(dc.vehicles, params.get("decoder.w_vehicle").value, d_veh_proj, &d_veh,
                            grad("decoder.w_vehicle"), unused_bias);

  std::array<Tensor, 3> dh;
  dh[depot] = Tensor({1, d});
  dh[customers] = Tensor({n - 1, d});
  std::copy(d_edges.data(), d_edges.data() + d, dh[depot].data());
  std::copy(d_edges.data() + d, d_edges.data() + d_edges.size(), dh[customers].data());
  dh[vehicles] = std::move(d_veh);

  // Pooling layers, last to first.
  for (int l = config.layers - 1; l >= 0; --l) {
    const PoolLayerCache& c = fwd.layers[l];
    std::array<Tensor, 3> d_in, d_full, d_loo;
    for (int s = 0; s < 3; ++s) {
      d_in[s] = Tensor(c.input.h[s].shape());
      d_full[s] = Tensor(c.full[s].context.shape());
      d_loo[s] = Tensor(c.loo[s].context.shape());
    }
    for (int g = 0; g < 3; ++g) {
      const int rows = c.input.h[g].rows();
      Tensor d_hidden(c.hidden[g].shape());
      numerics::linear_backward(c.hidden[g], params.get(layer_name(l, g, "w2")).value, dh[g],
                                &d_hidden, grad(layer_name(l, g, "w2")),
                                grad(layer_name(l, g, "b2")));
      Tensor d_pre(c.hidden[g].shape());
      numerics::relu_backward(c.hidden[g], d_hidden, d_pre);
      Tensor d_concat(c.concat[g].shape());
      numerics::linear_backward(c.concat[g], params.get(layer_name(l, g, "w1")).value, d_pre,
                                &d_concat, grad(layer_name(l, g, "w1")),
                                grad(layer_name(l, g, "b1")));
      for (int r = 0; r < rows; ++r) {
        auto src = d_concat.row(r);
        auto own = d_in[g].row(r);
        for (int k = 0; k < d; ++k) own[k] += src[k];
        for (int s = 0; s < 3; ++s) {
          auto dst = s == g ? d_loo[s].row(r) : d_full[s].row(0);
          for (int k = 0; k < d; ++k) dst[k] += src[(1 + s) * d + k];
        }
      }
    }
    for (int s = 0; s < 3; ++s) {
      numerics::pool_backward(c.full[s], d_full[s], d_in[s]);
      numerics::pool_backward(c.loo[s], d_loo[s], d_in[s]);
    }
    dh = std::move(d_in);
  }

  // Embedding.
  const auto x = feature_tensors(features);
  for (int g = 0; g < 3; ++g)
    numerics::linear_backward(x[g], params.get(embed_name(g, "w")).value, dh[g], nullptr,
                              grad(embed_name(g, "w")), grad(embed_name(g, "b")));
}

std::uint64_t branch_signature(const ForwardResult& fwd) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& layer : fwd.layers) {
    for (int s = 0; s < 3; ++s) {
      for (int src : layer.full[s].source) h = fnv_mix(h, static_cast<std::uint64_t>(src + 1));
      for (int src : layer.loo[s].source) h = fnv_mix(h, static_cast<std::uint64_t>(src + 1));
      for (double v : layer.hidden[s].values()) h = fnv_mix(h, v > 0.0 ? 2 : 3);
    }
  }
  for (double v : fwd.decoder.act.values()) h = fnv_mix(h, v > 0.0 ? 5 : 7);
  return h;
}

void save(const std::string& path, const ModelConfig& config, const ParamStore& params,
          const std::map<std::string, std::string>& extra) {
  check_params(config, params);
  auto header = extra;
  header["d_model"] = std::to_string(config.d_model);
  header["hidden"] = std::to_string(config.hidden);
  header["layers"] = std::to_string(config.layers);
  numerics::save_checkpoint(path, header, params);
}

LoadedModel load(const std::string& path) {
  auto ckpt = numerics::load_checkpoint(path);
  LoadedModel out;
  auto field = [&](const char* key) {
    auto it = ckpt.header.find(key);
    if (it == ckpt.header.end())
      throw std::runtime_error(std::string("checkpoint header lacks '") + key + "'");
    return std::stoi(it->second);
  };
  out.config.d_model = field("d_model");
  out.config.hidden = field("hidden");
  out.config.layers = field("layers");
  check_params(out.config, ckpt.params);
  out.params = std::move(ckpt.params);
  out.header = std::move(ckpt.header);
  return out;
}

}  // namespace pivrp::model
