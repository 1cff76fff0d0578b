#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "stylo/errors.hpp"
#include "stylo/rng.hpp"

namespace stylo {

// Dense row-major tensor. Float for training and inference, double for
// gradient-verification builds.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;

  explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }

  TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape)) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    }
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (const int d : s) {
      if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(s));
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  static std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
  }

  size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  T& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  T at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }

  const T* row(int i) const { return data.data() + static_cast<size_t>(i) * shape[1]; }
  T* row(int i) { return data.data() + static_cast<size_t>(i) * shape[1]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (const T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  bool same_shape(const TensorT& other) const { return shape == other.shape; }

  static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }

  static TensorT gaussian(std::vector<int> s, double mean, double stddev, RngStream& rng) {
    TensorT t(std::move(s));
    for (auto& v : t.data) v = static_cast<T>(rng.gaussian(mean, stddev));
    return t;
  }
};

using Tensor = TensorT<float>;

// c = a @ b for a [p x q], b [q x s].
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0]) {
    throw DimensionError("matmul shape mismatch: " + TensorT<T>::shape_str(a.shape) + " x " +
                         TensorT<T>::shape_str(b.shape));
  }
  const int p = a.shape[0], q = a.shape[1], s = b.shape[1];
  TensorT<T> c({p, s});
  for (int i = 0; i < p; ++i) {
    const T* arow = a.row(i);
    T* crow = c.row(i);
    for (int k = 0; k < q; ++k) {
      const T av = arow[k];
      const T* brow = b.row(k);
      for (int j = 0; j < s; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

// In-place stable softmax over a contiguous span.
template <typename T>
void softmax_span(T* x, int n) {
  T m = x[0];
  for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
  T sum = T(0);
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - m);
    sum += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= sum;
}

template <typename T>
TensorT<T> softmax(const TensorT<T>& logits) {
  if (logits.numel() == 0) throw ArgumentError("softmax: empty input");
  TensorT<T> out = logits;
  if (logits.shape.size() == 2) {
    for (int i = 0; i < logits.shape[0]; ++i) softmax_span(out.row(i), logits.shape[1]);
  } else {
    softmax_span(out.data.data(), static_cast<int>(out.numel()));
  }
  return out;
}

// Mean negative log-probability of the labeled class. If dlogits is non-null
// it receives d(loss)/d(logits), shape [batch x k].
template <typename T>
T cross_entropy_loss(const TensorT<T>& logits, const std::vector<int>& labels,
                     TensorT<T>* dlogits = nullptr) {
  if (logits.shape.size() != 2) throw DimensionError("cross_entropy_loss: logits must be 2-d");
  const int batch = logits.shape[0], k = logits.shape[1];
  if (static_cast<int>(labels.size()) != batch) {
    throw ArgumentError("cross_entropy_loss: " + std::to_string(labels.size()) +
                        " labels for batch " + std::to_string(batch));
  }
  if (dlogits) *dlogits = TensorT<T>({batch, k});
  T total = T(0);
  std::vector<T> probs(static_cast<size_t>(k));
  for (int b = 0; b < batch; ++b) {
    const int label = labels[static_cast<size_t>(b)];
    if (label < 0 || label >= k) {
      throw ArgumentError("cross_entropy_loss: label " + std::to_string(label) +
                          " out of range [0, " + std::to_string(k) + ")");
    }
    const T* lrow = logits.row(b);
    std::copy(lrow, lrow + k, probs.begin());
    T m = probs[0];
    for (int j = 1; j < k; ++j) m = std::max(m, probs[j]);
    T sum = T(0);
    for (int j = 0; j < k; ++j) {
      probs[static_cast<size_t>(j)] = std::exp(probs[static_cast<size_t>(j)] - m);
      sum += probs[static_cast<size_t>(j)];
    }
    total += -(std::log(probs[static_cast<size_t>(label)] / sum));
    if (dlogits) {
      T* drow = dlogits->row(b);
      for (int j = 0; j < k; ++j) drow[j] = probs[static_cast<size_t>(j)] / sum / T(batch);
      drow[label] -= T(1) / T(batch);
    }
  }
  return total / T(batch);
}

// y = x @ W^T + bias for x [batch x d_in], W [d_out x d_in].
template <typename T>
void linear_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>* bias,
                    TensorT<T>& y) {
  const int batch = x.shape[0], d_in = x.shape[1], d_out = w.shape[0];
  if (w.shape[1] != d_in) {
    throw DimensionError("linear: weight " + TensorT<T>::shape_str(w.shape) + " vs input " +
                         TensorT<T>::shape_str(x.shape));
  }
  y = TensorT<T>({batch, d_out});
  for (int b = 0; b < batch; ++b) {
    const T* xrow = x.row(b);
    T* yrow = y.row(b);
    for (int o = 0; o < d_out; ++o) {
      const T* wrow = w.row(o);
      T acc = bias ? bias->data[static_cast<size_t>(o)] : T(0);
      for (int i = 0; i < d_in; ++i) acc += xrow[i] * wrow[i];
      yrow[o] = acc;
    }
  }
}

// Accumulates dW += dy^T x and dbias += column sums of dy; writes dx = dy @ W.
template <typename T>
void linear_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                     std::type_identity_t<TensorT<T>>* dw, std::type_identity_t<TensorT<T>>* dbias,
                     std::type_identity_t<TensorT<T>>* dx) {
  const int batch = x.shape[0], d_in = x.shape[1], d_out = w.shape[0];
  if (dw) {
    for (int o = 0; o < d_out; ++o) {
      T* dwrow = dw->row(o);
      for (int b = 0; b < batch; ++b) {
        const T g = dy.at(b, o);
        const T* xrow = x.row(b);
        for (int i = 0; i < d_in; ++i) dwrow[i] += g * xrow[i];
      }
    }
  }
  if (dbias) {
    for (int b = 0; b < batch; ++b) {
      const T* dyrow = dy.row(b);
      for (int o = 0; o < d_out; ++o) dbias->data[static_cast<size_t>(o)] += dyrow[o];
    }
  }
  if (dx) {
    *dx = TensorT<T>({batch, d_in});
    for (int b = 0; b < batch; ++b) {
      const T* dyrow = dy.row(b);
      T* dxrow = dx->row(b);
      for (int o = 0; o < d_out; ++o) {
        const T g = dyrow[o];
        const T* wrow = w.row(o);
        for (int i = 0; i < d_in; ++i) dxrow[i] += g * wrow[i];
      }
    }
  }
}

template <typename T>
int argmax_span(const T* x, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

}  // namespace stylo
