#include "dapes/name.hpp"

#include <charconv>

namespace dapes {

Name::Name(std::vector<Component> components)
  : m_components(std::move(components))
{
  for (const auto& c : m_components) {
    if (c.empty())
      throw MalformedName("empty name component");
    if (c.find('/') != std::string::npos)
      throw MalformedName("name component contains '/': " + c);
  }
}

Name
Name::parse(std::string_view text)
{
  if (text.empty() || text.front() != '/')
    throw MalformedName("name must begin with '/': '" + std::string(text) + "'");

  std::vector<Component> components;
  if (text.size() == 1)
    return Name(std::move(components));

  std::size_t pos = 1;
  while (true) {
    auto slash = text.find('/', pos);
    auto piece = text.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
    if (piece.empty())
      throw MalformedName("empty component in '" + std::string(text) + "'");
    components.emplace_back(piece);
    if (slash == std::string_view::npos)
      break;
    pos = slash + 1;
  }
  return Name(std::move(components));
}

std::string
Name::toUri() const
{
  if (m_components.empty())
    return "/";
  std::string out;
  for (const auto& c : m_components) {
    out += '/';
    out += c;
  }
  return out;
}

Name&
Name::append(Component component)
{
  if (component.empty())
    throw MalformedName("empty name component");
  if (component.find('/') != std::string::npos)
    throw MalformedName("name component contains '/': " + component);
  m_components.push_back(std::move(component));
  return *this;
}

Name&
Name::append(const Name& suffix)
{
  m_components.insert(m_components.end(), suffix.m_components.begin(), suffix.m_components.end());
  return *this;
}

Name
Name::getPrefix(std::size_t n) const
{
  Name prefix;
  n = std::min(n, m_components.size());
  prefix.m_components.assign(m_components.begin(), m_components.begin() + static_cast<std::ptrdiff_t>(n));
  return prefix;
}

bool
Name::isPrefixOf(const Name& other) const noexcept
{
  if (m_components.size() > other.m_components.size())
    return false;
  for (std::size_t i = 0; i < m_components.size(); ++i) {
    if (m_components[i] != other.m_components[i])
      return false;
  }
  return true;
}

std::uint64_t
toNumber(const Name::Component& component)
{
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(component.data(), component.data() + component.size(), value);
  if (ec != std::errc{} || ptr != component.data() + component.size())
    throw MalformedName("component is not a number: " + component);
  return value;
}

std::size_t
NameHash::operator()(const Name& name) const noexcept
{
  std::size_t h = 0xcbf29ce484222325ULL;
  for (const auto& c : name.components()) {
    h ^= std::hash<std::string>{}(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

} // namespace dapes
