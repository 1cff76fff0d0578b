#pragma once

#include <array>
#include <string>
#include <vector>

#include "stylo/adapters.hpp"
#include "stylo/gridsoccer.hpp"
#include "stylo/param_store.hpp"

namespace stylo {

struct NetConfig {
  int input_dim = kFeatureDim;
  int width = 64;
  int blocks = 4;
  int hidden = 128;
  int actions = kNumActions;
  int rank = 4;
  int modules = 8;
  int heads = 4;

  void validate() const {
    if (blocks < 1 || rank < 1 || modules < 1 || heads < 1) {
      throw ConfigError("net config: blocks, rank, modules, heads must be >= 1");
    }
    if (width % heads != 0 || hidden % heads != 0) {
      throw ConfigError("net config: heads must divide width and hidden");
    }
  }
};

// Behavioral-cloning policy: input projection, residual blocks whose 2-layer
// MLPs are MHR linears, and an action head. One style vector conditions all
// MHR layers of a forward pass; with a zero adapter shift the output is
// independent of the style supplied.
template <typename T>
struct PolicyNetT {
  NetConfig cfg;
  int input_w = -1, input_b = -1;
  int head_w = -1, head_b = -1;
  std::vector<std::array<MhrLinearT<T>, 2>> blocks;

  PolicyNetT() = default;

  PolicyNetT(const NetConfig& config, ParamStoreT<T>& store, RngStream& rng) : cfg(config) {
    cfg.validate();
    input_w = store.add("input.W",
                        TensorT<T>::gaussian({cfg.width, cfg.input_dim}, 0.0,
                                             std::sqrt(2.0 / cfg.input_dim), rng),
                        Group::Base);
    input_b = store.add("input.bias", TensorT<T>::zeros({cfg.width}), Group::Base);
    for (int l = 0; l < cfg.blocks; ++l) {
      const std::string prefix = "block" + std::to_string(l);
      blocks.push_back(
          {MhrLinearT<T>(store, prefix + ".fc1", cfg.hidden, cfg.width, cfg.rank, cfg.modules,
                         cfg.heads, rng),
           MhrLinearT<T>(store, prefix + ".fc2", cfg.width, cfg.hidden, cfg.rank, cfg.modules,
                         cfg.heads, rng)});
    }
    head_w = store.add("head.W",
                       TensorT<T>::gaussian({cfg.actions, cfg.width}, 0.0,
                                            std::sqrt(2.0 / cfg.width), rng),
                       Group::Base);
    head_b = store.add("head.bias", TensorT<T>::zeros({cfg.actions}), Group::Base);
  }

  struct Cache {
    TensorT<T> input;                                       // [batch x input_dim]
    TensorT<T> trunk_in;                                    // after input projection
    std::vector<typename MhrLinearT<T>::Cache> fc1, fc2;    // per block
    std::vector<TensorT<T>> hidden_pre;                     // fc1 output, pre-relu
    std::vector<TensorT<T>> block_out;                      // residual stream after block l
  };

  TensorT<T> forward(const ParamStoreT<T>& store, const TensorT<T>* style, const TensorT<T>& x,
                     Cache* cache = nullptr) const {
    if (x.shape.size() != 2 || x.shape[1] != cfg.input_dim) {
      throw DimensionError("policy forward: input " + TensorT<T>::shape_str(x.shape) +
                           ", expected [batch x " + std::to_string(cfg.input_dim) + "]");
    }
    if (cache) {
      cache->input = x;
      cache->fc1.resize(static_cast<size_t>(cfg.blocks));
      cache->fc2.resize(static_cast<size_t>(cfg.blocks));
      cache->hidden_pre.resize(static_cast<size_t>(cfg.blocks));
      cache->block_out.resize(static_cast<size_t>(cfg.blocks));
    }
    TensorT<T> stream;
    linear_forward(x, store.at(input_w).value, &store.at(input_b).value, stream);
    if (cache) cache->trunk_in = stream;
    for (int l = 0; l < cfg.blocks; ++l) {
      auto& blk = blocks[static_cast<size_t>(l)];
      TensorT<T> pre = blk[0].forward(store, style, stream,
                                      cache ? &cache->fc1[static_cast<size_t>(l)] : nullptr);
      if (cache) cache->hidden_pre[static_cast<size_t>(l)] = pre;
      for (auto& v : pre.data) v = std::max(v, T(0));
      TensorT<T> delta = blk[1].forward(store, style, pre,
                                        cache ? &cache->fc2[static_cast<size_t>(l)] : nullptr);
      for (size_t i = 0; i < stream.data.size(); ++i) stream.data[i] += delta.data[i];
      if (cache) cache->block_out[static_cast<size_t>(l)] = stream;
    }
    TensorT<T> logits;
    linear_forward(stream, store.at(head_w).value, &store.at(head_b).value, logits);
    return logits;
  }

  // Accumulates parameter gradients per mode and the routing gradient into
  // *dstyle (shape [modules x heads]) when supplied.
  void backward(ParamStoreT<T>& store, const Cache& cache, const TensorT<T>& dlogits,
                GradMode mode, TensorT<T>* dstyle) const {
    const TensorT<T>& trunk_top =
        cfg.blocks > 0 ? cache.block_out.back() : cache.trunk_in;
    TensorT<T> dstream;
    {
      TensorT<T>* dw = mode == GradMode::All ? &store.at(head_w).grad : nullptr;
      TensorT<T>* db = mode == GradMode::All ? &store.at(head_b).grad : nullptr;
      linear_backward(trunk_top, store.at(head_w).value, dlogits, dw, db, &dstream);
    }
    for (int l = cfg.blocks - 1; l >= 0; --l) {
      auto& blk = blocks[static_cast<size_t>(l)];
      TensorT<T> dpre = blk[1].backward(store, cache.fc2[static_cast<size_t>(l)], dstream, mode,
                                        dstyle);
      const TensorT<T>& pre = cache.hidden_pre[static_cast<size_t>(l)];
      for (size_t i = 0; i < dpre.data.size(); ++i) {
        if (pre.data[i] <= T(0)) dpre.data[i] = T(0);
      }
      TensorT<T> dres = blk[0].backward(store, cache.fc1[static_cast<size_t>(l)], dpre, mode,
                                        dstyle);
      for (size_t i = 0; i < dstream.data.size(); ++i) dstream.data[i] += dres.data[i];
    }
    TensorT<T>* dw = mode == GradMode::All ? &store.at(input_w).grad : nullptr;
    TensorT<T>* db = mode == GradMode::All ? &store.at(input_b).grad : nullptr;
    linear_backward(cache.input, store.at(input_w).value, dstream, dw, db, nullptr);
  }

  // Loss + gradient in one pass; the usual training entry point.
  T loss_and_grad(ParamStoreT<T>& store, const TensorT<T>* style, const TensorT<T>& x,
                  const std::vector<int>& labels, GradMode mode, TensorT<T>* dstyle) const {
    Cache cache;
    const TensorT<T> logits = forward(store, style, x, &cache);
    TensorT<T> dlogits;
    const T loss = cross_entropy_loss(logits, labels, &dlogits);
    backward(store, cache, dlogits, mode, dstyle);
    return loss;
  }
};

using PolicyNet = PolicyNetT<float>;

// Fraction of rows whose argmax logit matches the recorded frame action.
template <typename T>
double move_matching_accuracy(const PolicyNetT<T>& net, const ParamStoreT<T>& store,
                              const std::type_identity_t<TensorT<T>>* style,
                              const TensorT<T>& states, const std::vector<int>& actions) {
  if (states.shape.empty() || states.shape[0] == 0) {
    throw ArgumentError("move_matching_accuracy: empty partition");
  }
  const TensorT<T> logits = net.forward(store, style, states);
  int hits = 0;
  for (int b = 0; b < logits.shape[0]; ++b) {
    if (argmax_span(logits.row(b), logits.shape[1]) == actions[static_cast<size_t>(b)]) ++hits;
  }
  return static_cast<double>(hits) / logits.shape[0];
}

// Policy distribution of the conditioned model at one state: frame-relative
// logits are softmaxed at `temperature` over the legal actions only.
inline ActionDist net_action_dist(const PolicyNetT<float>& net, const ParamStoreT<float>& store,
                                  const Tensor* style, const GameState& state,
                                  double temperature) {
  const auto features = encode_state(state, state.side_to_move);
  Tensor x({1, kFeatureDim});
  std::copy(features.begin(), features.end(), x.data.begin());
  const Tensor logits = net.forward(store, style, x);
  const auto mask = legal_mask(state);
  ActionDist dist;
  double max_logit = -1e30;
  std::array<double, kNumActions> z{};
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    const int fa = to_frame_action(static_cast<Action>(a), state.side_to_move);
    z[static_cast<size_t>(a)] = static_cast<double>(logits.data[static_cast<size_t>(fa)]);
    max_logit = std::max(max_logit, z[static_cast<size_t>(a)]);
  }
  double sum = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    const double e = std::exp((z[static_cast<size_t>(a)] - max_logit) / temperature);
    dist.p[static_cast<size_t>(a)] = e;
    sum += e;
  }
  for (auto& p : dist.p) p /= sum;
  return dist;
}

// Sampling collapses to argmax below this temperature.
constexpr double kGreedyTemperature = 1e-4;

inline Action sample_action(const PolicyNetT<float>& net, const ParamStoreT<float>& store,
                            const Tensor* style, const GameState& state, double temperature,
                            RngStream& rng) {
  if (temperature < 0.0) throw ArgumentError("sample_action: temperature must be >= 0");
  if (temperature < kGreedyTemperature) {
    return argmax_action(net_action_dist(net, store, style, state, 1.0));
  }
  return sample_from_dist(net_action_dist(net, store, style, state, temperature), rng);
}

// Match-playing policy conditioned on one style vector.
inline Policy net_policy(const PolicyNetT<float>& net, const ParamStoreT<float>& store,
                         Tensor style, double temperature) {
  return [&net, &store, style = std::move(style), temperature](const GameState& s) {
    return net_action_dist(net, store, &style, s, temperature);
  };
}

}  // namespace stylo
