#pragma once

#include <string>
#include <vector>

#include "stylo/param_store.hpp"
#include "stylo/rng.hpp"
#include "stylo/tensor.hpp"

namespace stylo {

// One low-rank adapter: the weight shift is a @ b^T, conformable with a
// wrapped base weight of shape [d_out x d_in].
template <typename T>
struct LoraPairT {
  TensorT<T> a;  // [d_out x r]
  TensorT<T> b;  // [d_in x r]

  int rank() const { return a.shape[1]; }
};

using LoraPair = LoraPairT<float>;

// Shared inventory of adapters with identical shapes.
template <typename T>
struct AdapterInventoryT {
  std::vector<LoraPairT<T>> modules;

  void validate() const {
    if (modules.empty()) throw ConfigError("adapter inventory must hold at least one module");
    const auto& first = modules.front();
    for (const auto& mod : modules) {
      if (mod.a.shape != first.a.shape || mod.b.shape != first.b.shape ||
          mod.a.shape[1] != mod.b.shape[1]) {
        throw DimensionError("adapter inventory modules must share shapes");
      }
    }
  }

  int size() const { return static_cast<int>(modules.size()); }
  int d_out() const { return modules.front().a.shape[0]; }
  int d_in() const { return modules.front().b.shape[0]; }
  int rank() const { return modules.front().rank(); }
};

using AdapterInventory = AdapterInventoryT<float>;

// A player's routing logits over [modules x heads]; one row of the routing
// tensor. Mixing weights are the per-head softmax over the module axis.
struct StyleVector {
  Tensor logits;  // [m x h]
  int player_id = -1;
};

struct RoutingTensor {
  int modules = 0;
  int heads = 0;
  std::vector<StyleVector> rows;  // row order is the canonical player index

  int size() const { return static_cast<int>(rows.size()); }
};

enum class RowInit { Zeros, Gaussian };

// Appends a new routing row and returns its index. Existing rows are never
// touched.
inline int append_task_row(RoutingTensor& routing, RowInit init, double sigma, RngStream& rng,
                           int player_id) {
  StyleVector row;
  row.player_id = player_id;
  row.logits = init == RowInit::Zeros
                   ? Tensor::zeros({routing.modules, routing.heads})
                   : Tensor::gaussian({routing.modules, routing.heads}, 0.0, sigma, rng);
  routing.rows.push_back(std::move(row));
  return routing.size() - 1;
}

// Per-head softmax over the module axis: alpha[i][k] = softmax(logits[:,k])[i].
template <typename T>
TensorT<T> mixing_weights(const TensorT<T>& logits) {
  if (logits.shape.size() != 2) throw DimensionError("routing logits must be [modules x heads]");
  const int m = logits.shape[0], h = logits.shape[1];
  TensorT<T> alpha({m, h});
  std::vector<T> col(static_cast<size_t>(m));
  for (int k = 0; k < h; ++k) {
    for (int i = 0; i < m; ++i) col[static_cast<size_t>(i)] = logits.at(i, k);
    softmax_span(col.data(), m);
    for (int i = 0; i < m; ++i) alpha.at(i, k) = col[static_cast<size_t>(i)];
  }
  return alpha;
}

// Row-block mixture: the rows of each module tensor [rows x r] are split into
// h equal blocks; block k of the output is the alpha[:,k]-weighted sum of the
// modules' block k.
template <typename T>
void mix_rows(const std::vector<const TensorT<T>*>& mods, const TensorT<T>& alpha,
              TensorT<T>& out) {
  const int m = alpha.shape[0], h = alpha.shape[1];
  const int rows = mods[0]->shape[0], r = mods[0]->shape[1];
  if (rows % h != 0) {
    throw ConfigError("head count " + std::to_string(h) + " does not divide dimension " +
                      std::to_string(rows));
  }
  out = TensorT<T>({rows, r});
  const int block = rows / h;
  for (int k = 0; k < h; ++k) {
    for (int i = 0; i < m; ++i) {
      const T w = alpha.at(i, k);
      const T* src = mods[static_cast<size_t>(i)]->row(k * block);
      T* dst = out.row(k * block);
      for (int e = 0; e < block * r; ++e) dst[e] += w * src[e];
    }
  }
}

template <typename T>
LoraPairT<T> mix_mhr(const AdapterInventoryT<T>& inventory, const TensorT<T>& logits);

// Poly mixing: a single softmax over modules applied to both a and b.
template <typename T>
LoraPairT<T> mix_poly(const AdapterInventoryT<T>& inventory, const TensorT<T>& logits) {
  inventory.validate();
  if (static_cast<int>(logits.numel()) != inventory.size()) {
    throw DimensionError("mix_poly: " + std::to_string(logits.numel()) + " logits for " +
                         std::to_string(inventory.size()) + " modules");
  }
  TensorT<T> col({inventory.size(), 1});
  col.data = logits.data;
  return mix_mhr(inventory, col);
}

// Multi-head mixing: per-head Poly on each row block, concatenated. With
// h = 1 this reduces exactly to Poly.
template <typename T>
LoraPairT<T> mix_mhr(const AdapterInventoryT<T>& inventory, const TensorT<T>& logits) {
  inventory.validate();
  if (logits.shape.size() != 2 || logits.shape[0] != inventory.size()) {
    throw DimensionError("mix_mhr: logits " + TensorT<T>::shape_str(logits.shape) +
                         " for inventory of " + std::to_string(inventory.size()));
  }
  const int h = logits.shape[1];
  if (inventory.d_out() % h != 0 || inventory.d_in() % h != 0) {
    throw ConfigError("head count " + std::to_string(h) + " must divide both adapter dims " +
                      std::to_string(inventory.d_out()) + " and " +
                      std::to_string(inventory.d_in()));
  }
  const TensorT<T> alpha = mixing_weights(logits);
  std::vector<const TensorT<T>*> a_mods, b_mods;
  for (const auto& mod : inventory.modules) {
    a_mods.push_back(&mod.a);
    b_mods.push_back(&mod.b);
  }
  LoraPairT<T> mixed;
  mix_rows(a_mods, alpha, mixed.a);
  mix_rows(b_mods, alpha, mixed.b);
  return mixed;
}

// Which gradients a backward pass materializes. Routing gradients are always
// produced when a style is attached; base/adapter gradients are skipped in
// the frozen regimes to save work.
enum class GradMode { All, AdaptersAndRouting, RoutingOnly };

// Linear layer with frozen base weights plus a routed low-rank shift:
// y = x (W0 + a_mixed b_mixed^T)^T + bias. One style vector is supplied per
// forward call and shared across all such layers of a network.
template <typename T>
struct MhrLinearT {
  int d_out = 0, d_in = 0, rank = 0, modules = 0, heads = 0;
  int w0 = -1, bias = -1;        // param ids, group base
  std::vector<int> a_ids, b_ids;  // param ids, group adapter

  MhrLinearT() = default;

  // Registers base weight, bias, and the adapter inventory. Adapter a-matrices
  // start gaussian(0, 1/rank), b-matrices start zero, so the initial shift is
  // zero and the layer reproduces its base behavior.
  MhrLinearT(ParamStoreT<T>& store, const std::string& prefix, int d_out_, int d_in_, int rank_,
             int modules_, int heads_, RngStream& rng)
      : d_out(d_out_), d_in(d_in_), rank(rank_), modules(modules_), heads(heads_) {
    if (heads <= 0 || d_out % heads != 0 || d_in % heads != 0) {
      throw ConfigError("heads " + std::to_string(heads) + " must divide layer dims " +
                        std::to_string(d_out) + "x" + std::to_string(d_in));
    }
    const double w0_std = std::sqrt(2.0 / d_in);
    w0 = store.add(prefix + ".W0", TensorT<T>::gaussian({d_out, d_in}, 0.0, w0_std, rng),
                   Group::Base);
    bias = store.add(prefix + ".bias", TensorT<T>::zeros({d_out}), Group::Base);
    for (int i = 0; i < modules; ++i) {
      a_ids.push_back(store.add(prefix + ".a" + std::to_string(i),
                                TensorT<T>::gaussian({d_out, rank}, 0.0, 1.0 / rank, rng),
                                Group::Adapter));
      b_ids.push_back(
          store.add(prefix + ".b" + std::to_string(i), TensorT<T>::zeros({d_in, rank}),
                    Group::Adapter));
    }
  }

  struct Cache {
    TensorT<T> x;
    TensorT<T> alpha;    // [m x h]
    TensorT<T> a_mixed;  // [d_out x r]
    TensorT<T> b_mixed;  // [d_in x r]
    TensorT<T> w_eff;    // W0 + a_mixed b_mixed^T
    bool styled = false;
  };

  TensorT<T> forward(const ParamStoreT<T>& store, const TensorT<T>* style, const TensorT<T>& x,
                     Cache* cache = nullptr) const {
    const TensorT<T>& base_w = store.at(w0).value;
    const TensorT<T>& base_b = store.at(bias).value;
    TensorT<T> y;
    if (!style) {
      linear_forward(x, base_w, &base_b, y);
      if (cache) {
        cache->x = x;
        cache->styled = false;
      }
      return y;
    }
    if (style->shape.size() != 2 || style->shape[0] != modules || style->shape[1] != heads) {
      throw DimensionError("style logits " + TensorT<T>::shape_str(style->shape) +
                           " for layer with " + std::to_string(modules) + " modules, " +
                           std::to_string(heads) + " heads");
    }
    Cache local;
    Cache& c = cache ? *cache : local;
    c.styled = true;
    c.x = x;
    c.alpha = mixing_weights(*style);
    std::vector<const TensorT<T>*> a_mods, b_mods;
    for (int i = 0; i < modules; ++i) {
      a_mods.push_back(&store.at(a_ids[static_cast<size_t>(i)]).value);
      b_mods.push_back(&store.at(b_ids[static_cast<size_t>(i)]).value);
    }
    mix_rows(a_mods, c.alpha, c.a_mixed);
    mix_rows(b_mods, c.alpha, c.b_mixed);
    c.w_eff = base_w;
    for (int o = 0; o < d_out; ++o) {
      T* wrow = c.w_eff.row(o);
      const T* arow = c.a_mixed.row(o);
      for (int j = 0; j < rank; ++j) {
        const T av = arow[j];
        for (int i = 0; i < d_in; ++i) wrow[i] += av * c.b_mixed.at(i, j);
      }
    }
    linear_forward(x, c.w_eff, &base_b, y);
    return y;
  }

  // Accumulates parameter gradients per `mode`, adds the routing gradient to
  // *dstyle when supplied, and returns dx.
  TensorT<T> backward(ParamStoreT<T>& store, const Cache& c, const TensorT<T>& dy, GradMode mode,
                      TensorT<T>* dstyle) const {
    TensorT<T> dx;
    if (!c.styled) {
      TensorT<T>* dw = mode == GradMode::All ? &store.at(w0).grad : nullptr;
      TensorT<T>* db = mode == GradMode::All ? &store.at(bias).grad : nullptr;
      linear_backward(c.x, store.at(w0).value, dy, dw, db, &dx);
      return dx;
    }
    const int batch = c.x.shape[0];
    if (mode == GradMode::All) {
      linear_backward(c.x, c.w_eff, dy, &store.at(w0).grad, &store.at(bias).grad, &dx);
    } else {
      linear_backward(c.x, c.w_eff, dy, nullptr, nullptr, &dx);
    }
    // Low-rank route to the mixed-adapter gradients:
    //   d a_mixed = dy^T (x b_mixed),  d b_mixed = x^T (dy a_mixed).
    TensorT<T> u({batch, rank});
    TensorT<T> v({batch, rank});
    for (int b = 0; b < batch; ++b) {
      const T* xrow = c.x.row(b);
      const T* dyrow = dy.row(b);
      T* urow = u.row(b);
      T* vrow = v.row(b);
      for (int i = 0; i < d_in; ++i) {
        const T xv = xrow[i];
        const T* brow = c.b_mixed.row(i);
        for (int j = 0; j < rank; ++j) urow[j] += xv * brow[j];
      }
      for (int o = 0; o < d_out; ++o) {
        const T g = dyrow[o];
        const T* arow = c.a_mixed.row(o);
        for (int j = 0; j < rank; ++j) vrow[j] += g * arow[j];
      }
    }
    TensorT<T> da_mixed({d_out, rank});
    TensorT<T> db_mixed({d_in, rank});
    for (int b = 0; b < batch; ++b) {
      const T* dyrow = dy.row(b);
      const T* urow = u.row(b);
      for (int o = 0; o < d_out; ++o) {
        T* darow = da_mixed.row(o);
        const T g = dyrow[o];
        for (int j = 0; j < rank; ++j) darow[j] += g * urow[j];
      }
      const T* xrow = c.x.row(b);
      const T* vrow = v.row(b);
      for (int i = 0; i < d_in; ++i) {
        T* dbrow = db_mixed.row(i);
        const T xv = xrow[i];
        for (int j = 0; j < rank; ++j) dbrow[j] += xv * vrow[j];
      }
    }
    const int ablock = d_out / heads, bblock = d_in / heads;
    TensorT<T> dalpha({modules, heads});
    for (int k = 0; k < heads; ++k) {
      for (int i = 0; i < modules; ++i) {
        const auto& a_i = store.at(a_ids[static_cast<size_t>(i)]).value;
        const auto& b_i = store.at(b_ids[static_cast<size_t>(i)]).value;
        const T w = c.alpha.at(i, k);
        T dot = T(0);
        {
          const T* src = a_i.row(k * ablock);
          const T* dmix = da_mixed.row(k * ablock);
          T* dst = mode == GradMode::RoutingOnly
                       ? nullptr
                       : store.at(a_ids[static_cast<size_t>(i)]).grad.row(k * ablock);
          for (int e = 0; e < ablock * rank; ++e) {
            dot += src[e] * dmix[e];
            if (dst) dst[e] += w * dmix[e];
          }
        }
        {
          const T* src = b_i.row(k * bblock);
          const T* dmix = db_mixed.row(k * bblock);
          T* dst = mode == GradMode::RoutingOnly
                       ? nullptr
                       : store.at(b_ids[static_cast<size_t>(i)]).grad.row(k * bblock);
          for (int e = 0; e < bblock * rank; ++e) {
            dot += src[e] * dmix[e];
            if (dst) dst[e] += w * dmix[e];
          }
        }
        dalpha.at(i, k) = dot;
      }
    }
    if (dstyle) {
      // Per-head softmax VJP: dz = alpha * (dalpha - <alpha, dalpha>).
      for (int k = 0; k < heads; ++k) {
        T inner = T(0);
        for (int i = 0; i < modules; ++i) inner += c.alpha.at(i, k) * dalpha.at(i, k);
        for (int i = 0; i < modules; ++i) {
          dstyle->at(i, k) += c.alpha.at(i, k) * (dalpha.at(i, k) - inner);
        }
      }
    }
    return dx;
  }

  // Total adapter parameter count: m * r * (d_out + d_in), independent of h.
  size_t inventory_param_count() const {
    return static_cast<size_t>(modules) * rank * (d_out + d_in);
  }
};

using MhrLinear = MhrLinearT<float>;

}  // namespace stylo
