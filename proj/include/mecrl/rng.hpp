#pragma once

#include <cstdint>
#include <vector>

namespace mecrl {

// SplitMix64 (Steele, Lea & Flood 2014). Chosen over <random> engines because
// its output sequence is fully pinned by the algorithm, so generated data is
// byte-identical across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) via 64x64->128 multiply-shift; slight
  // modulo-free bias (< 2^-32 for the bounds used here) is acceptable and
  // deterministic.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (master, tag, index). Records and
// simulation repetitions each get their own stream, so results do not depend
// on generation order or worker count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index) {
  std::uint64_t s = mix64(master + 0x9e3779b97f4a7c15ull);
  s = mix64(s ^ (tag * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull));
  s = mix64(s ^ (index * 0x9e3779b97f4a7c15ull + 0x6a09e667f3bcc909ull));
  return s;
}

// Stream tags used by the generator and the simulation driver.
inline constexpr std::uint64_t kStreamPopulation = 1;
inline constexpr std::uint64_t kStreamSampleA = 2;
inline constexpr std::uint64_t kStreamSampleB = 3;
inline constexpr std::uint64_t kStreamPerturbA = 4;
inline constexpr std::uint64_t kStreamPerturbB = 5;
inline constexpr std::uint64_t kStreamRepetition = 6;

// Inverse-CDF draw from a categorical distribution given cumulative weights
// (cum.back() == total mass). Returns 1-based category index.
inline std::uint16_t sample_categorical(const std::vector<double>& cum,
                                        double unit) {
  const double x = unit * cum.back();
  std::size_t lo = 0, hi = cum.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cum[mid] <= x) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo >= cum.size()) lo = cum.size() - 1;
  return static_cast<std::uint16_t>(lo + 1);
}

}  // namespace mecrl
