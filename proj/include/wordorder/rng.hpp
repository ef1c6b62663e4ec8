#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace wordorder {

/// SplitMix64 (Steele, Lea, Flood). Every random choice in the project is drawn
/// from this generator so results are reproducible across platforms and
/// standard libraries.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Index in [0, n) by plain modulo reduction; n must be positive.
  constexpr std::uint64_t below(std::uint64_t n) { return (*this)() % n; }

  /// Double in [0, 1) built from the top 53 bits.
  constexpr double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// Generator for a named stream: seeded with `seed ^ fnv1a64(stream_id)`.
constexpr SplitMix64 stream_rng(std::uint64_t seed, std::string_view stream_id) {
  return SplitMix64(seed ^ fnv1a64(stream_id));
}

/// Fisher-Yates from the back: for i = n-1 .. 1, swap(items[i], items[below(i+1)]).
template <typename T>
constexpr void fisher_yates(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace wordorder
