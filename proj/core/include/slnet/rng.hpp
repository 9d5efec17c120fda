#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace slnet {

/// Name recorded in run metadata so results can be regenerated elsewhere.
inline constexpr const char* kRngAlgorithm = "mt19937_64 seeded via splitmix64; polar Box-Muller normals";

/// One round of the SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Mixes a master seed with a list of integer keys into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept;

// Portable random source. The standard distributions are implementation
// defined, so everything here is built directly on the engine's raw output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal deviate.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace slnet
