#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylo/errors.hpp"
#include "stylo/tensor.hpp"

namespace stylo {

// Learning-rate groups. Every parameter belongs to exactly one.
enum class Group { Base, Adapter, Routing };

inline const char* group_name(Group g) {
  switch (g) {
    case Group::Base: return "base";
    case Group::Adapter: return "adapter";
    case Group::Routing: return "routing";
  }
  return "?";
}

template <typename T>
struct ParamT {
  std::string name;
  TensorT<T> value;
  TensorT<T> grad;  // same shape as value, densely accumulated
  Group group = Group::Base;
  bool trainable = true;
};

// Ordered registry of named parameters. Insertion order is the canonical
// iteration and serialization order.
template <typename T>
class ParamStoreT {
 public:
  int add(std::string name, TensorT<T> value, Group group, bool trainable = true) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    ParamT<T> p;
    p.name = std::move(name);
    p.grad = TensorT<T>(value.shape);
    p.value = std::move(value);
    p.group = group;
    p.trainable = trainable;
    params_.push_back(std::move(p));
    const int id = static_cast<int>(params_.size()) - 1;
    index_[params_.back().name] = id;
    return id;
  }

  ParamT<T>& at(int id) { return params_[static_cast<size_t>(id)]; }
  const ParamT<T>& at(int id) const { return params_[static_cast<size_t>(id)]; }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  ParamT<T>& by_name(const std::string& name) {
    const int id = find(name);
    if (id < 0) throw ConfigError("unknown parameter: " + name);
    return params_[static_cast<size_t>(id)];
  }

  int size() const { return static_cast<int>(params_.size()); }

  void zero_grads() {
    for (auto& p : params_) p.grad.fill(T(0));
  }

  std::vector<ParamT<T>>& params() { return params_; }
  const std::vector<ParamT<T>>& params() const { return params_; }

  // Flat snapshot of all values, in registry order. Used for bit-level
  // freeze-contract checks and determinism tests.
  std::vector<T> snapshot() const {
    std::vector<T> out;
    for (const auto& p : params_) out.insert(out.end(), p.value.data.begin(), p.value.data.end());
    return out;
  }

 private:
  std::vector<ParamT<T>> params_;
  std::unordered_map<std::string, int> index_;
};

using ParamStore = ParamStoreT<float>;

template <typename T>
struct AdamConfig {
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

// Adam with per-parameter bias correction. Frozen parameters are skipped
// regardless of their gradient; a parameter whose gradient and moments are
// all zero is left bit-identical.
template <typename T>
class AdamT {
 public:
  explicit AdamT(AdamConfig<T> cfg = {}) : cfg_(cfg) {}

  void step(ParamStoreT<T>& store, const std::map<Group, T>& lr_by_group) {
    all_ids_.resize(static_cast<size_t>(store.size()));
    for (int id = 0; id < store.size(); ++id) all_ids_[static_cast<size_t>(id)] = id;
    step(store, lr_by_group, all_ids_);
  }

  // Updates only the listed parameters; each keeps its own bias-correction
  // clock, so sparsely-updated parameters (routing rows) behave as if they
  // were optimized in isolation.
  void step(ParamStoreT<T>& store, const std::map<Group, T>& lr_by_group,
            const std::vector<int>& active_ids) {
    if (state_.size() < static_cast<size_t>(store.size())) state_.resize(store.size());
    for (const int id : active_ids) {
      auto& p = store.at(id);
      if (!p.trainable) continue;
      auto lr_it = lr_by_group.find(p.group);
      if (lr_it == lr_by_group.end()) {
        throw ConfigError(std::string("no learning rate for group '") + group_name(p.group) +
                          "' (parameter " + p.name + ")");
      }
      const T lr = lr_it->second;  // zero means "hold this group still"
      if (lr < T(0)) throw ConfigError("learning rate must not be negative");
      State& st = state_[static_cast<size_t>(id)];
      if (st.m.numel() == 0) {
        st.m = TensorT<T>(p.value.shape);
        st.v = TensorT<T>(p.value.shape);
      }
      st.t += 1;
      const T bc1 = T(1) - std::pow(cfg_.beta1, T(st.t));
      const T bc2 = T(1) - std::pow(cfg_.beta2, T(st.t));
      for (size_t i = 0; i < p.value.data.size(); ++i) {
        const T g = p.grad.data[i];
        T& m = st.m.data[i];
        T& v = st.v.data[i];
        m = cfg_.beta1 * m + (T(1) - cfg_.beta1) * g;
        v = cfg_.beta2 * v + (T(1) - cfg_.beta2) * g * g;
        const T mhat = m / bc1;
        const T vhat = v / bc2;
        const T update = lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        if (update != T(0)) p.value.data[i] -= update;
      }
    }
  }

 private:
  struct State {
    TensorT<T> m, v;
    int64_t t = 0;
  };
  AdamConfig<T> cfg_;
  std::vector<State> state_;
  std::vector<int> all_ids_;
};

using Adam = AdamT<float>;

enum class TrainingMode { FullFinetune, RoutingOnly };

// full_finetune: base frozen, adapters and routing trainable.
// routing_only: everything frozen except the designated routing parameters.
template <typename T>
void set_training_mode(ParamStoreT<T>& store, TrainingMode mode,
                       const std::vector<int>& designated_routing = {}) {
  for (int id = 0; id < store.size(); ++id) {
    auto& p = store.at(id);
    switch (p.group) {
      case Group::Base:
        p.trainable = false;
        break;
      case Group::Adapter:
        p.trainable = (mode == TrainingMode::FullFinetune);
        break;
      case Group::Routing:
        p.trainable = (mode == TrainingMode::FullFinetune);
        break;
    }
  }
  if (mode == TrainingMode::RoutingOnly) {
    for (const int id : designated_routing) {
      if (id < 0 || id >= store.size()) throw ConfigError("designated routing id out of range");
      auto& p = store.at(id);
      if (p.group != Group::Routing) {
        throw ConfigError("designated parameter " + p.name + " is not in the routing group");
      }
      p.trainable = true;
    }
  }
}

}  // namespace stylo
