#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tbps {

/// Seeded generator with portable distributions. The standard library
/// distributions are implementation-defined, which would make seeded corpora
/// and checkpoints differ between toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  /// Normal(0, std) resampled until within two standard deviations.
  double truncated_normal(double std);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }
  /// k distinct indices from [0, n), in increasing order.
  std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

/// Deterministic sub-seed derivation (splitmix64 over the pair).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace tbps
