#pragma once

#include <cmath>
#include <string>

#include "stylo/param_store.hpp"

namespace stylo {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t checked = 0;
};

// Central-difference check of every trainable parameter against the analytic
// gradients already present in the store. `loss` must be a deterministic
// function of the store values. Relative error uses a unit floor so that
// near-zero gradients are compared absolutely. Meant for T = double.
template <typename T, typename LossFn>
GradCheckReport finite_diff_check(LossFn&& loss, ParamStoreT<T>& store, T epsilon) {
  GradCheckReport report;
  for (int id = 0; id < store.size(); ++id) {
    auto& p = store.at(id);
    if (!p.trainable) continue;
    for (size_t i = 0; i < p.value.data.size(); ++i) {
      const T saved = p.value.data[i];
      const T eps = epsilon * std::max(T(1), std::abs(saved));
      p.value.data[i] = saved + eps;
      const T up = loss();
      p.value.data[i] = saved - eps;
      const T down = loss();
      p.value.data[i] = saved;
      const double numeric = static_cast<double>(up - down) / (2.0 * static_cast<double>(eps));
      const double analytic = static_cast<double>(p.grad.data[i]);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1.0});
      const double rel = std::abs(numeric - analytic) / scale;
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace stylo
