#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "si/rng.hpp"
#include "si/stats.hpp"

using si::rng::Philox;

TEST_CASE("philox is deterministic and counter-addressable") {
  Philox g{42, 7};
  const auto a = g.block(123456);
  const auto b = g.block(123456);
  REQUIRE(a == b);
  REQUIRE(g.block(123457) != a);
  REQUIRE(Philox{42, 8}.block(123456) != a);
  REQUIRE(Philox{43, 7}.block(123456) != a);
}

TEST_CASE("normal_fill is independent of chunking") {
  Philox g{99, 3};
  std::vector<double> all(10);
  si::rng::normal_fill(g, 0, all);
  // same counters, drawn in two pieces
  std::vector<double> head(4), tail(6);
  si::rng::normal_fill(g, 0, head);
  si::rng::normal_fill(g, 2, tail);
  for (int i = 0; i < 4; ++i) REQUIRE(all[i] == head[i]);
  for (int i = 0; i < 6; ++i) REQUIRE(all[4 + i] == tail[i]);
}

TEST_CASE("normals have standard moments") {
  Philox g{2024, 0};
  const std::size_t n = 200000;
  std::vector<double> z(n);
  si::rng::normal_fill(g, 0, z);
  const double m = si::mean(z);
  const double v = si::variance(z);
  REQUIRE(std::abs(m) < 4.0 / std::sqrt((double)n));
  REQUIRE(std::abs(v - 1.0) < 6.0 / std::sqrt((double)n));
  // third moment ~ 0
  std::vector<double> c3(n);
  for (std::size_t i = 0; i < n; ++i) c3[i] = z[i] * z[i] * z[i];
  REQUIRE(std::abs(si::mean(c3)) < 8.0 / std::sqrt((double)n));
}

TEST_CASE("uniforms cover (0,1] evenly") {
  Philox g{5, 1};
  const int n = 100000;
  int buckets[10] = {0};
  for (int i = 0; i < n; ++i) {
    const double u = si::rng::uniform(g, i);
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
    ++buckets[std::min(9, (int)(u * 10))];
  }
  for (int b : buckets) REQUIRE(std::abs(b - n / 10) < 5 * std::sqrt(n / 10.0));
}

TEST_CASE("uniform_index stays in range and spreads") {
  Philox g{5, 2};
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto k = si::rng::uniform_index(g, i, 17);
    REQUIRE(k < 17);
    seen.insert(k);
  }
  REQUIRE(seen.size() == 17);
}
