#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace modalcur {

// SplitMix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded generator with portable helpers (the std distributions are
// implementation-defined, so draws are built on the raw 64-bit stream).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n) by rejection.
  int index(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::index requires n > 0");
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % un);
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return static_cast<int>(r % un);
  }

  // Draw from a discrete distribution given non-negative weights.
  int categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double u = uniform() * total;
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last_positive = static_cast<int>(i);
      if (u < acc) return static_cast<int>(i);
    }
    if (last_positive < 0) throw std::invalid_argument("categorical over all-zero weights");
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace modalcur
