#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tricortex {

/// Deterministic random source. The engine (mt19937_64) is bit-exact per
/// the standard; distributions are hand-rolled here because the standard
/// library's are not, and byte-identical metrics depend on them.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();   // N(0, 1), Box-Muller
  double normal(double mean, double stddev);
  int64_t uniform_int(int64_t n);  // [0, n), unbiased

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)],
                v[static_cast<size_t>(uniform_int(i + 1))]);
    }
  }

  /// Child stream for an independent consumer; the same (seed, tag) pair
  /// always yields the same stream.
  Rng fork(std::string_view tag) const;

  static uint64_t mix(uint64_t a, uint64_t b);

 private:
  std::mt19937_64 engine_;
  uint64_t seed_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace tricortex
