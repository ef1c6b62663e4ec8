#include <algorithm>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "wordorder/rng.hpp"

using namespace wordorder;

TEST_CASE("splitmix64 reference outputs") {
  SplitMix64 rng(0);
  CHECK(rng() == 0xe220a8397b1dcdafULL);
  CHECK(rng() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng() == 0x06c45d188009454fULL);
}

TEST_CASE("fnv1a64 reference hashes") {
  static_assert(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("stream generators differ by id and repeat by seed") {
  auto a = stream_rng(42, "s1");
  auto b = stream_rng(42, "s1");
  auto c = stream_rng(42, "s2");
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
}

TEST_CASE("fisher-yates matches the reference shuffle") {
  std::vector<int> v(10);
  std::iota(v.begin(), v.end(), 0);
  auto rng = stream_rng(42, "s1");
  fisher_yates(std::span<int>(v), rng);
  CHECK(v == std::vector<int>{4, 9, 6, 0, 7, 8, 2, 1, 3, 5});
}

TEST_CASE("fisher-yates always yields a permutation") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = rng.below(30);
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    fisher_yates(std::span<std::size_t>(v), rng);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("below and unit stay in range") {
  SplitMix64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.below(7) < 7);
    const double u = rng.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
