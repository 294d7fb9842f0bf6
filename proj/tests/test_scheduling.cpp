#include "doctest.h"

#include "dapes/scheduling.hpp"

#include <map>

using namespace dapes;

TEST_SUITE("scheduling")
{
  TEST_CASE("linear bitmap timer")
  {
    CHECK(bitmapTimerLinear(0.020, 1.0) == doctest::Approx(0.0002));
    CHECK(bitmapTimerLinear(0.020, 0.5) == doctest::Approx(0.0004));
    CHECK(bitmapTimerLinear(0.020, 0.3) == bitmapTimerLinear(0.020, 0.3));
    CHECK_THROWS_AS(bitmapTimerLinear(0.020, 0.0), DomainError);
    CHECK_THROWS_AS(bitmapTimerLinear(0.020, 1.5), DomainError);
    double prev = 0;
    for (int pct = 100; pct >= 1; --pct) {
      double t = bitmapTimerLinear(0.020, pct / 100.0);
      CHECK(t > prev);
      prev = t;
    }
  }

  TEST_CASE("PEBA state doubles slots from two")
  {
    PebaState st;
    CHECK(st.slots() == 1);
    st.onCollision();
    CHECK(st.slots() == 2);
    st.onCollision();
    CHECK(st.slots() == 4);
    st.reset();
    CHECK(st.slots() == 1);
  }

  TEST_CASE("PEBA replay: C, B and D answer A")
  {
    // 6 packets missing from A's bitmap: C holds 3, B holds 2, D holds 1
    PebaState st;
    st.groups = 2;
    st.onCollision(); // first collision: two slots, one per group
    REQUIRE(st.slots() == 2);
    Rng rng(1);
    unsigned c = pebaAssignSlot(st, 3, 6, rng);
    unsigned b = pebaAssignSlot(st, 2, 6, rng);
    unsigned d = pebaAssignSlot(st, 1, 6, rng);
    CHECK(pebaGroup(2, 3, 6) == 0);
    CHECK(pebaGroup(2, 2, 6) == 1);
    CHECK(pebaGroup(2, 1, 6) == 1);
    CHECK(c == 0);
    CHECK(b == 1);
    CHECK(d == 1); // B and D collide

    // C's bitmap got through; 3 packets still missing, four slots now
    st.onCollision();
    REQUIRE(st.slots() == 4);
    CHECK(pebaGroup(2, 2, 3) == 0);
    CHECK(pebaGroup(2, 1, 3) == 1);
    for (int i = 0; i < 200; ++i) {
      unsigned b2 = pebaAssignSlot(st, 2, 3, rng);
      unsigned d2 = pebaAssignSlot(st, 1, 3, rng);
      REQUIRE((b2 == 0 || b2 == 1));
      REQUIRE((d2 == 2 || d2 == 3));
    }
  }

  TEST_CASE("single group is plain exponential backoff")
  {
    PebaState st;
    st.groups = 1;
    st.onCollision();
    st.onCollision();
    st.onCollision();
    Rng rng(2);
    std::map<unsigned, int> seen;
    for (int i = 0; i < 4000; ++i)
      ++seen[pebaAssignSlot(st, static_cast<std::uint64_t>(i % 7), 6, rng)];
    CHECK(seen.size() == 8);
    for (auto [slot, n] : seen)
      CHECK(n > 350);
  }

  TEST_CASE("PEBA rejects L < k")
  {
    PebaState st;
    st.groups = 4;
    st.onCollision();
    Rng rng(3);
    CHECK_THROWS_AS(pebaAssignSlot(st, 1, 2, rng), DomainError);
    st.groups = 0;
    CHECK_THROWS_AS(pebaAssignSlot(st, 1, 2, rng), DomainError);
  }

  TEST_CASE("property: group monotonicity and disjoint ordered slot ranges")
  {
    Rng rng(4);
    for (int trial = 0; trial < 2000; ++trial) {
      unsigned k = static_cast<unsigned>(rng.uniformInt(1, 6));
      std::uint64_t ref = rng.uniformInt(1, 500);
      std::uint64_t lo = rng.uniformInt(0, ref);
      std::uint64_t hi = rng.uniformInt(lo, ref);
      REQUIRE(pebaGroup(k, hi, ref) <= pebaGroup(k, lo, ref));

      PebaState st;
      st.groups = k;
      while (st.slots() < k)
        st.onCollision();
      if (rng.bernoulli(0.5))
        st.onCollision();
      unsigned n = st.slots() / k;
      unsigned slot = pebaAssignSlot(st, lo, ref, rng);
      unsigned j = pebaGroup(k, lo, ref);
      REQUIRE(slot >= j * n);
      REQUIRE(slot < (j + 1) * n);
    }
  }

  TEST_CASE("expected transmit delay")
  {
    CHECK(expectedTransmitDelay(16, 2, 0.001) == doctest::Approx(0.00125));
    CHECK(expectedTransmitDelay(4, 4, 0.001) == 0.0);
    CHECK(expectedTransmitDelay(16, 2, 0.0) == 0.0);
    CHECK_THROWS_AS(expectedTransmitDelay(2, 4, 0.001), DomainError);
    CHECK_THROWS_AS(expectedTransmitDelay(2, 0, 0.001), DomainError);
  }

  TEST_CASE("data fetch time")
  {
    CHECK(dataFetchTime(10, 0.5, 0.5, 4, ExchangeMode::BitmapsFirst) == doctest::Approx(6));
    CHECK(dataFetchTime(3, 0.5, 0.5, 4, ExchangeMode::BitmapsFirst) == 0.0);
    CHECK(dataFetchTime(3, 0.5, 0.5, 3, ExchangeMode::Interleaved) == doctest::Approx(0.0));
    CHECK(dataFetchTime(7, 0.5, 0.5, 0, ExchangeMode::BitmapsFirst) == 7);
    CHECK(dataFetchTime(7, 0.5, 0.5, 0, ExchangeMode::Interleaved) == 7);
    CHECK_THROWS_AS(dataFetchTime(3, 0.5, 0.5, 4, ExchangeMode::Interleaved), DomainError);
    CHECK_THROWS_AS(dataFetchTime(-1, 0.5, 0.5, 1, ExchangeMode::BitmapsFirst), DomainError);

    for (auto mode : {ExchangeMode::BitmapsFirst, ExchangeMode::Interleaved}) {
      for (double dt = 1; dt <= 20; dt += 1) {
        double prev = 1e9;
        for (std::uint64_t b = 0; b <= static_cast<std::uint64_t>(dt / 0.75); ++b) {
          double t = dataFetchTime(dt, 0.25, 0.5, b, mode);
          CHECK(t <= prev);
          CHECK(t <= dataFetchTime(dt + 1, 0.25, 0.5, b, mode));
          prev = t;
        }
      }
    }
  }
}
