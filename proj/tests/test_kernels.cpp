#include "doctest.h"

#include "dapes/common.hpp"
#include "dapes/kernels.hpp"

#include <atomic>

using namespace dapes;

TEST_SUITE("kernels")
{
  TEST_CASE("parallel rarity count equals the serial reference")
  {
    Rng rng(8);
    for (int trial = 0; trial < 40; ++trial) {
      std::size_t bits = rng.uniformInt(1, 5000);
      std::size_t words = (bits + 63) / 64;
      std::size_t nMaps = rng.uniformInt(0, 30);
      std::vector<std::vector<std::uint64_t>> storage(nMaps, std::vector<std::uint64_t>(words));
      std::vector<const std::uint64_t*> maps;
      for (auto& m : storage) {
        for (auto& w : m)
          w = rng.next();
        maps.push_back(m.data());
      }
      std::vector<std::uint32_t> a(bits), b(bits), c(bits);
      kernels::rarityCountSerial(maps, bits, a.data());
      kernels::rarityCountParallel(maps, bits, b.data());
      kernels::rarityCount(maps, bits, c.data());
      REQUIRE(a == b);
      REQUIRE(a == c);
      // direct count
      for (std::size_t g = 0; g < bits; g += 37) {
        std::uint32_t expect = 0;
        for (auto& m : storage)
          expect += ((m[g / 64] >> (g % 64)) & 1U) ? 0 : 1;
        REQUIRE(a[g] == expect);
      }
    }
  }

  TEST_CASE("parallel contention equals the serial reference")
  {
    kernels::ContentionSetup setup;
    setup.slots = 16;
    setup.groups = 4;
    setup.slotDuration = 0.001;
    setup.peerGroups = {0, 1, 1, 3, 2};
    auto s = kernels::contentionSerial(setup, 20000, 99);
    auto p = kernels::contentionParallel(setup, 20000, 99);
    CHECK(s.trials == p.trials);
    CHECK(s.collisions == p.collisions);
    CHECK(s.slotSum == p.slotSum);
    CHECK(s.successes == p.successes);
    for (std::size_t i = 0; i < setup.peerGroups.size(); ++i) {
      unsigned j = setup.peerGroups[i];
      // n = 4 slots per group
      CHECK(s.meanDelay(i) == doctest::Approx((j * 4 + 1.5) * 0.001).epsilon(0.05));
    }
  }

  TEST_CASE("batch runner visits every index once")
  {
    std::vector<std::atomic<int>> hits(257);
    kernels::runBatch(hits.size(), 0, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits)
      CHECK(h.load() == 1);
    CHECK(kernels::maxThreads() >= 1);
  }
}
