#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace sacheck {

/// FNV-1a hash used to turn stream names into substream keys.
constexpr std::uint64_t stream_key(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// xoshiro256** generator with counter-style substream derivation.
///
/// Every random quantity in the library is drawn from an Rng that was derived
/// from a root seed and a list of keys, so results never depend on call order
/// across threads. Uniform and integer draws are implemented here rather than
/// through <random> distributions so that streams are identical on every
/// standard library.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  /// Independent stream keyed by (seed, keys...).
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

  /// Child stream of this generator's seed; does not advance *this.
  Rng derive(std::initializer_list<std::uint64_t> keys) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal via inversion.
  double normal() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

/// Fisher-Yates shuffle driven by Rng::below.
template <typename T>
void shuffle(std::span<T> values, Rng& rng) noexcept {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

/// Uniformly random permutation of {0, ..., n-1}.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace sacheck
