#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stylo/errors.hpp"
#include "stylo/rng.hpp"

namespace stylo {

// Average ranks (1-based), ties averaged.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("spearman: need paired samples");
  return pearson(average_ranks(x), average_ranks(y));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// One-sided Mann-Whitney p-value for H1: samples in `greater` stochastically
// exceed those in `lesser`. Normal approximation with tie correction.
inline double mann_whitney_p_greater(const std::vector<double>& greater,
                                     const std::vector<double>& lesser) {
  const size_t n1 = greater.size(), n2 = lesser.size();
  if (n1 == 0 || n2 == 0) throw ArgumentError("mann_whitney: empty sample");
  std::vector<double> pooled;
  pooled.reserve(n1 + n2);
  pooled.insert(pooled.end(), greater.begin(), greater.end());
  pooled.insert(pooled.end(), lesser.begin(), lesser.end());
  const std::vector<double> ranks = average_ranks(pooled);
  double r1 = 0;
  for (size_t i = 0; i < n1; ++i) r1 += ranks[i];
  const double u1 = r1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  const double n = static_cast<double>(n1 + n2);
  const double mean = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  // tie correction over pooled values
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                     ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) return u1 > mean ? 0.0 : 1.0;
  const double z = (u1 - mean - 0.5) / std::sqrt(var);
  return 1.0 - normal_cdf(z);
}

// Deterministic k-means with k-means++ seeding from the stream.
inline std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k,
                               RngStream rng, int max_iters = 200) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || n < k) throw ArgumentError("kmeans: need at least k points");
  const size_t dim = points[0].size();
  const auto sqdist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  };
  std::vector<std::vector<double>> centers;
  centers.push_back(points[static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(n)))]);
  std::vector<double> d2(static_cast<size_t>(n));
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      double best = 1e300;
      for (const auto& c : centers) best = std::min(best, sqdist(points[static_cast<size_t>(i)], c));
      d2[static_cast<size_t>(i)] = best;
      total += best;
    }
    double u = rng.uniform() * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      u -= d2[static_cast<size_t>(i)];
      if (u <= 0) {
        pick = i;
        break;
      }
    }
    centers.push_back(points[static_cast<size_t>(pick)]);
  }
  std::vector<int> labels(static_cast<size_t>(n), 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = 1e300;
      for (int c = 0; c < k; ++c) {
        const double d = sqdist(points[static_cast<size_t>(i)], centers[static_cast<size_t>(c)]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (labels[static_cast<size_t>(i)] != best) {
        labels[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    for (int c = 0; c < k; ++c) {
      std::vector<double> mean(dim, 0.0);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[static_cast<size_t>(i)] != c) continue;
        for (size_t d = 0; d < dim; ++d) mean[d] += points[static_cast<size_t>(i)][d];
        ++count;
      }
      if (count > 0) {
        for (auto& v : mean) v /= count;
        centers[static_cast<size_t>(c)] = mean;
      }
    }
  }
  return labels;
}

inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) throw ArgumentError("ari: label vectors must align");
  const auto relabel = [](const std::vector<int>& labels) {
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> out(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      out[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), labels[i]) -
                                sorted.begin());
    }
    return std::pair{out, static_cast<int>(sorted.size())};
  };
  const auto [la, ka] = relabel(a);
  const auto [lb, kb] = relabel(b);
  std::vector<std::vector<long>> table(static_cast<size_t>(ka),
                                       std::vector<long>(static_cast<size_t>(kb), 0));
  for (size_t i = 0; i < la.size(); ++i) ++table[static_cast<size_t>(la[i])][static_cast<size_t>(lb[i])];
  const auto choose2 = [](long x) { return static_cast<double>(x) * (x - 1) / 2.0; };
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  std::vector<long> row_sum(static_cast<size_t>(ka), 0), col_sum(static_cast<size_t>(kb), 0);
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) {
      sum_ij += choose2(table[static_cast<size_t>(i)][static_cast<size_t>(j)]);
      row_sum[static_cast<size_t>(i)] += table[static_cast<size_t>(i)][static_cast<size_t>(j)];
      col_sum[static_cast<size_t>(j)] += table[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
  }
  for (int i = 0; i < ka; ++i) sum_a += choose2(row_sum[static_cast<size_t>(i)]);
  for (int j = 0; j < kb; ++j) sum_b += choose2(col_sum[static_cast<size_t>(j)]);
  const double total = choose2(static_cast<long>(la.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return 0.0;
  return (sum_ij - expected) / (max_index - expected);
}

}  // namespace stylo
