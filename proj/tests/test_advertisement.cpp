#include "doctest.h"
#include "golden.hpp"

#include "dapes/advertisement.hpp"
#include "dapes/tlv.hpp"

#include <cmath>
#include <sstream>

using namespace dapes;

namespace {

Bitmap
randomBitmap(Rng& rng, std::size_t n, double density)
{
  Bitmap b(n);
  for (std::size_t g = 0; g < n; ++g) {
    if (rng.bernoulli(density))
      b.set(g);
  }
  return b;
}

std::vector<std::size_t>
parseIndices(const std::string& field)
{
  std::vector<std::size_t> out;
  if (field == "-")
    return out;
  std::istringstream ss(field);
  for (std::string tok; std::getline(ss, tok, ',');)
    out.push_back(std::stoul(tok));
  return out;
}

} // namespace

TEST_SUITE("advertisement")
{
  TEST_CASE("bitmap basics")
  {
    Bitmap b(70);
    CHECK(b.haveCount() == 0);
    CHECK(b.set(69));
    CHECK_FALSE(b.set(69));
    CHECK(b.test(69));
    CHECK(b.haveCount() == 1);
    CHECK(b.reset(69));
    CHECK_FALSE(b.test(69));
    CHECK_THROWS_AS(b.set(70), IndexOutOfRange);
    b.setAll();
    CHECK(b.full());
    CHECK(b.haveCount() == 70);

    Bitmap a(70), c(70);
    a.set(1);
    a.set(2);
    c.set(2);
    c.set(3);
    CHECK(a.countNotIn(c) == 1);
    a.unite(c);
    CHECK(a.haveCount() == 3);
    CHECK_THROWS_AS(a.unite(Bitmap(71)), LengthMismatch);
  }

  TEST_CASE("bitmap golden encodings")
  {
    auto rows = test::goldenRows("bitmap.txt");
    REQUIRE(rows.size() >= 5);
    for (const auto& row : rows) {
      Bitmap b(std::stoul(row[0]));
      for (auto g : parseIndices(row[1]))
        b.set(g);
      CAPTURE(row[0]);
      CHECK(toHex(b.encode()) == row[2]);
      CHECK(Bitmap::decode(fromHex(row[2])) == b);
    }
  }

  TEST_CASE("bitmap round trip and padding check")
  {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
      auto b = randomBitmap(rng, rng.uniformInt(0, 700), 0.4);
      auto back = Bitmap::decode(b.encode());
      REQUIRE(back == b);
      REQUIRE(back.haveCount() == b.haveCount());
    }
    Bytes bad = Bitmap(13).encode();
    bad.back() |= 0x01;
    CHECK_THROWS_AS(Bitmap::decode(bad), tlv::CodecError);
    Bytes shortBits = fromHex("91010d9001ff");
    CHECK_THROWS_AS(Bitmap::decode(shortBits), tlv::CodecError);
  }

  TEST_CASE("local rarity against a brute-force count")
  {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      std::size_t n = rng.uniformInt(1, 300);
      Bitmap own = randomBitmap(rng, n, 0.3);
      std::vector<Bitmap> nb;
      for (std::size_t i = 0, k = rng.uniformInt(0, 8); i < k; ++i)
        nb.push_back(randomBitmap(rng, n, 0.5));
      auto r = rarityLocal(own, nb);
      for (std::size_t g = 0; g < n; ++g) {
        std::uint32_t expect = own.test(g) ? 0 : 1;
        for (const auto& b : nb)
          expect += b.test(g) ? 0 : 1;
        REQUIRE(r[g] == expect);
      }
    }
    CHECK_THROWS_AS(rarityLocal(Bitmap(5), std::vector<Bitmap>{Bitmap(6)}), LengthMismatch);
  }

  TEST_CASE("encounter history keeps one entry per peer and evicts the oldest")
  {
    EncounterHistory h(3);
    for (std::uint64_t p = 1; p <= 5; ++p)
      h.record(p, Bitmap(4), static_cast<double>(p));
    CHECK(h.size() == 3);
    CHECK(h.entries().front().peerId == 3);
    Bitmap b(4);
    b.set(0);
    h.record(4, b, 9);
    CHECK(h.size() == 3);
    CHECK(h.entries().back().peerId == 4);
    CHECK(h.entries().back().bitmap.test(0));
    auto r = rarityEncounter(Bitmap(4), h);
    CHECK(r[0] == 3); // own + peers 3 and 5 miss it
    CHECK(r[1] == 4);
    CHECK_THROWS_AS(EncounterHistory(0), std::invalid_argument);
  }

  TEST_CASE("next request picks the rarest missing packet")
  {
    Rng rng(1);
    Bitmap own(6);
    own.set(0);
    RarityVector r{9, 1, 4, 4, 2, 4};
    Bitmap none(6);
    CHECK(nextRequest(own, r, none, rng, false) == 2u);
    Bitmap ex(6);
    ex.set(2);
    CHECK(nextRequest(own, r, ex, rng, false) == 3u);
    CHECK(nextRequest(own, r, std::set<std::uint64_t>{2, 3, 5}, rng, false) == 4u);
    own.setAll();
    CHECK_FALSE(nextRequest(own, r, none, rng, false));
    CHECK_THROWS_AS(nextRequest(Bitmap(5), r, none, rng, false), LengthMismatch);
  }

  TEST_CASE("random start spreads ties and only draws when tied")
  {
    Bitmap own(64);
    RarityVector flat(64, 1);
    Bitmap none(64);
    std::set<std::uint64_t> picks;
    Rng rng(3);
    for (int i = 0; i < 400; ++i)
      picks.insert(*nextRequest(own, flat, none, rng, true));
    CHECK(picks.size() > 40);

    RarityVector peak(64, 1);
    peak[17] = 5;
    Rng a(9), b(9);
    CHECK(nextRequest(own, peak, none, a, true) == 17u);
    CHECK(a.next() == b.next()); // no draw consumed
  }

  TEST_CASE("property: the pick is missing, not excluded and of maximal rarity")
  {
    Rng rng(21);
    for (int trial = 0; trial < 300; ++trial) {
      std::size_t n = rng.uniformInt(1, 200);
      Bitmap own = randomBitmap(rng, n, 0.5);
      Bitmap ex = randomBitmap(rng, n, 0.2);
      RarityVector r(n);
      for (auto& x : r)
        x = static_cast<std::uint32_t>(rng.uniformInt(0, 5));
      auto pick = nextRequest(own, r, ex, rng, rng.bernoulli(0.5));
      std::optional<std::uint32_t> best;
      for (std::size_t g = 0; g < n; ++g) {
        if (!own.test(g) && !ex.test(g))
          best = std::max(best.value_or(0), r[g]);
      }
      REQUIRE(pick.has_value() == best.has_value());
      if (pick) {
        REQUIRE_FALSE(own.test(*pick));
        REQUIRE_FALSE(ex.test(*pick));
        REQUIRE(r[*pick] == *best);
      }
    }
  }

  TEST_CASE("RPF effectiveness")
  {
    CHECK(rpfEffectiveness(5000, 0) == 0.0);
    CHECK(rpfEffectiveness(5000, 1) >= 0.99);
    CHECK(rpfEffectiveness(5000, 1) == doctest::Approx(1.0 - std::log(5000.0) / 5000.0));
    for (std::uint64_t n : {2, 10, 100, 5000, 100000}) {
      double prev = -1;
      for (std::uint64_t k = 0; k <= 40; ++k) {
        double e = rpfEffectiveness(n, k);
        CHECK(e >= prev);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
        prev = e;
      }
    }
    CHECK_THROWS_AS(rpfEffectiveness(1, 1), DomainError);
  }
}
