#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace stylo {

// Counter-based splittable generator. A stream is identified by a 64-bit key
// derived from (parent key, name); draws come from splitmix64 over an
// incrementing counter. Identical (seed, path of names) always yields the
// identical sequence, independently of any other stream.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : key_(mix(seed ^ kDomain)) {}

  // Derived stream; does not advance or share state with the parent.
  RngStream stream(std::string_view name) const {
    return RngStream(mix(key_ ^ fnv1a(name)), 0);
  }

  RngStream stream(std::string_view name, uint64_t index) const {
    return RngStream(mix(mix(key_ ^ fnv1a(name)) ^ (index * 0x9E3779B97F4A7C15ULL)), 0);
  }

  uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1.
  uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

  double gaussian(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(theta);
  }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  uint64_t key() const { return key_; }

 private:
  RngStream(uint64_t key, uint64_t counter) : key_(key), counter_(counter) {}

  static constexpr uint64_t kDomain = 0x5354594C4F524E47ULL;  // "STYLORNG"

  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stylo
