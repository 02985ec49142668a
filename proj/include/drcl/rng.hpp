#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace drcl {

// Deterministic random source. The raw engine is std::mt19937_64, whose
// output sequence is fixed by the standard; every distribution on top of it
// is implemented here so draws do not depend on the standard library vendor.
class SeededRng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();
  // Uniform integer in [0, n), n >= 1, unbiased by rejection.
  std::uint64_t below(std::uint64_t n);
  // Uniformly random permutation of [0, n) (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent child seed from (seed, stream, index) with the
// splitmix64 finalizer. Used so per-modality tasks get fixed seeds
// regardless of the order they run in.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

namespace stream {
inline constexpr std::uint64_t kPriorInit = 1;
inline constexpr std::uint64_t kSplEncoder = 2;
inline constexpr std::uint64_t kSplBatches = 3;
inline constexpr std::uint64_t kRscEncoder = 4;
inline constexpr std::uint64_t kRscBatches = 5;
inline constexpr std::uint64_t kRscMixing = 6;
inline constexpr std::uint64_t kSynthCenters = 10;
inline constexpr std::uint64_t kSynthMaps = 11;
inline constexpr std::uint64_t kSynthNoise = 12;
inline constexpr std::uint64_t kSynthSplit = 13;
}  // namespace stream

}  // namespace drcl
