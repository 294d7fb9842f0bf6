#pragma once

#include <cstdint>
#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dapes {

using Bytes = std::vector<std::uint8_t>;

class MalformedName : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Hierarchical name: an ordered list of non-empty components.
///
/// Textual form is `/c0/c1/...`; the empty name renders as `/`.  Components
/// containing `/` are rejected rather than escaped.
class Name
{
public:
  using Component = std::string;

  Name() = default;
  explicit Name(std::vector<Component> components);

  static Name
  parse(std::string_view text);

  std::string
  toUri() const;

  std::size_t
  size() const noexcept
  {
    return m_components.size();
  }

  bool
  empty() const noexcept
  {
    return m_components.empty();
  }

  const Component&
  operator[](std::size_t i) const
  {
    return m_components[i];
  }

  const Component&
  back() const
  {
    return m_components.back();
  }

  const std::vector<Component>&
  components() const noexcept
  {
    return m_components;
  }

  Name&
  append(Component component);

  Name&
  append(std::uint64_t number)
  {
    return append(std::to_string(number));
  }

  Name&
  append(const Name& suffix);

  /// First `n` components (all of them when n >= size()).
  Name
  getPrefix(std::size_t n) const;

  bool
  isPrefixOf(const Name& other) const noexcept;

  friend bool
  operator==(const Name&, const Name&) = default;

  friend std::strong_ordering
  operator<=>(const Name& a, const Name& b) = default;

private:
  std::vector<Component> m_components;
};

/// Component-wise prefix relation; the empty name is a prefix of every name.
inline bool
isPrefixOf(const Name& a, const Name& b) noexcept
{
  return a.isPrefixOf(b);
}

/// Parses a decimal sequence-number component.
std::uint64_t
toNumber(const Name::Component& component);

struct NameHash
{
  std::size_t
  operator()(const Name& name) const noexcept;
};

} // namespace dapes
