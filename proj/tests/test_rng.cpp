#include <doctest.h>

#include <cmath>
#include <set>

#include "ntkes/rng.hpp"

using ntkes::Stream;

TEST_CASE("splitmix64 reference outputs") {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  const Stream s(0);
  CHECK(s.bits(0) == 0xe220a8397b1dcdafULL);
  CHECK(s.bits(1) == 0x6e789e6aa1b965f4ULL);
  CHECK(s.bits(2) == 0x06c45d188009454fULL);
}

TEST_CASE("streams are pure functions of key and counter") {
  const Stream a = Stream::root(7).child("init");
  const Stream b = Stream::root(7).child("init");
  for (std::uint64_t i = 0; i < 100; ++i) CHECK(a.normal(i) == b.normal(i));
  CHECK(Stream::root(7).child("init").key() != Stream::root(7).child("noise").key());
  CHECK(Stream::root(7).child(std::uint64_t{1}).key() != Stream::root(7).child(std::uint64_t{2}).key());
  CHECK(Stream::root(7).key() != Stream::root(8).key());
}

TEST_CASE("uniform lies in the open unit interval and has the right moments") {
  const Stream s = Stream::root(3);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform(static_cast<std::uint64_t>(i));
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sq / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("normal draws have zero mean and unit variance") {
  const Stream s = Stream::root(11).child("normal");
  const int n = 200000;
  double sum = 0, sq = 0, q = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal(static_cast<std::uint64_t>(i));
    sum += z;
    sq += z * z;
    q += z * z * z * z;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  CHECK(std::abs(q / n - 3.0) < 0.1);
}

TEST_CASE("normal quantile matches known values") {
  CHECK(ntkes::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ntkes::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(2e-9));
  CHECK(ntkes::normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(2e-9));
  CHECK(ntkes::normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(2e-9));
  CHECK(ntkes::normal_quantile(0.8) == doctest::Approx(0.8416212335729143).epsilon(2e-9));
}

TEST_CASE("signs are balanced") {
  const Stream s = Stream::root(5);
  int plus = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = s.sign(static_cast<std::uint64_t>(i));
    REQUIRE((v == 1.0 || v == -1.0));
    plus += v > 0 ? 1 : 0;
  }
  CHECK(std::abs(plus - n / 2) < 4 * std::sqrt(n / 4.0));
}
