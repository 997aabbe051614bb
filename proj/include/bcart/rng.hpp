#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace bcart {

// SplitMix64 finalizer. Used to turn (seed, iteration, stream) triples into
// well-separated 64-bit keys so that every worker draws from its own stream
// regardless of thread scheduling.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t iteration,
                                   std::uint64_t stream) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ iteration);
  k = mix64(k ^ (stream * 0xd1342543de82ef95ULL));
  return k;
}

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard; the uniform mappings below avoid std distributions, whose
// sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : gen_(key) {}

  static Rng for_step(std::uint64_t seed, std::uint64_t iteration,
                      std::uint64_t stream) {
    return Rng(derive_key(seed, iteration, stream));
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in {0, ..., n-1} via rejection, bias-free.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    if (v.empty()) throw std::invalid_argument("pick: empty vector");
    return v[uniform_index(v.size())];
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace bcart
