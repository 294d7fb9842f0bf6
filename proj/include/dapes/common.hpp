#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace dapes {

/// Argument outside the domain of an analytical formula.
class DomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Bitmaps or rarity vectors of different lengths were combined.
class LengthMismatch : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// splitmix64 step; also used to derive independent stream seeds.
constexpr std::uint64_t
splitmix64(std::uint64_t x) noexcept
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t
deriveSeed(std::uint64_t seed, std::uint64_t stream) noexcept
{
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Seeded generator with distribution helpers written out explicitly, so
/// draws are identical across standard libraries.  Every helper consumes
/// exactly one engine output except uniformInt, which may reject.
class Rng
{
public:
  explicit Rng(std::uint64_t seed = 0)
    : m_engine(seed)
  {
  }

  std::uint64_t
  next()
  {
    return m_engine();
  }

  /// [0, 1) with 53 bits of precision.
  double
  uniform01()
  {
    return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
  }

  double
  uniform(double lo, double hi)
  {
    return lo + (hi - lo) * uniform01();
  }

  /// Uniform integer in [lo, hi], rejection sampled.
  std::uint64_t
  uniformInt(std::uint64_t lo, std::uint64_t hi)
  {
    std::uint64_t span = hi - lo;
    if (span == ~0ULL)
      return m_engine();
    std::uint64_t n = span + 1;
    std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t x;
    do {
      x = m_engine();
    } while (x >= limit);
    return lo + x % n;
  }

  bool
  bernoulli(double p)
  {
    return uniform01() < p;
  }

private:
  std::mt19937_64 m_engine;
};

} // namespace dapes
