#include "dapes/tlv.hpp"

namespace dapes::tlv {

CodecError::CodecError(std::size_t offset, const std::string& reason)
  : std::runtime_error("TLV error at offset " + std::to_string(offset) + ": " + reason)
  , m_offset(offset)
  , m_reason(reason)
{
}

std::size_t
varNumberSize(std::uint64_t value) noexcept
{
  if (value < 253)
    return 1;
  if (value <= 0xFFFF)
    return 3;
  return 5;
}

void
appendVarNumber(Bytes& out, std::uint64_t value)
{
  if (value < 253) {
    out.push_back(static_cast<std::uint8_t>(value));
  }
  else if (value <= 0xFFFF) {
    out.push_back(253);
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value));
  }
  else {
    if (value > 0xFFFFFFFFULL)
      throw std::length_error("TLV number exceeds 32 bits");
    out.push_back(254);
    for (int shift = 24; shift >= 0; shift -= 8)
      out.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

std::size_t
elementSize(std::uint32_t type, std::size_t valueLength) noexcept
{
  return varNumberSize(type) + varNumberSize(valueLength) + valueLength;
}

void
appendElement(Bytes& out, std::uint32_t type, std::span<const std::uint8_t> value)
{
  appendVarNumber(out, type);
  appendVarNumber(out, value.size());
  out.insert(out.end(), value.begin(), value.end());
}

void
appendElement(Bytes& out, std::uint32_t type, std::string_view value)
{
  appendVarNumber(out, type);
  appendVarNumber(out, value.size());
  out.insert(out.end(), value.begin(), value.end());
}

namespace {

std::size_t
integerWidth(std::uint64_t value) noexcept
{
  if (value <= 0xFF)
    return 1;
  if (value <= 0xFFFF)
    return 2;
  if (value <= 0xFFFFFFFFULL)
    return 4;
  return 8;
}

} // namespace

void
appendNonNegativeInteger(Bytes& out, std::uint32_t type, std::uint64_t value)
{
  auto width = integerWidth(value);
  appendVarNumber(out, type);
  appendVarNumber(out, width);
  for (auto i = width; i-- > 0;)
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t
readNonNegativeInteger(std::span<const std::uint8_t> value, std::size_t offset)
{
  auto n = value.size();
  if (n != 1 && n != 2 && n != 4 && n != 8)
    throw CodecError(offset, "invalid non-negative integer width " + std::to_string(n));
  std::uint64_t result = 0;
  for (auto b : value)
    result = (result << 8) | b;
  return result;
}

Bytes
encode(const Element& element)
{
  Bytes out;
  out.reserve(elementSize(element.type, element.value.size()));
  appendElement(out, element.type, element.value);
  return out;
}

std::uint64_t
Reader::readVarNumber()
{
  if (m_pos >= m_buf.size())
    throw CodecError(offset(), "truncated: expected number");
  std::uint8_t first = m_buf[m_pos];
  std::size_t extra = 0;
  if (first < 253)
    extra = 0;
  else if (first == 253)
    extra = 2;
  else if (first == 254)
    extra = 4;
  else
    throw CodecError(offset(), "unsupported 8-byte number");

  if (m_pos + 1 + extra > m_buf.size())
    throw CodecError(offset(), "truncated: number");
  ++m_pos;
  if (extra == 0)
    return first;
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < extra; ++i)
    value = (value << 8) | m_buf[m_pos++];
  return value;
}

Reader::View
Reader::next()
{
  auto start = offset();
  auto type = readVarNumber();
  auto length = readVarNumber();
  if (length > m_buf.size() - m_pos)
    throw CodecError(start, "truncated: element value shorter than declared length");
  View view{static_cast<std::uint32_t>(type), m_buf.subspan(m_pos, length), offset()};
  m_pos += length;
  return view;
}

std::uint32_t
Reader::peekType()
{
  auto saved = m_pos;
  auto type = readVarNumber();
  m_pos = saved;
  return static_cast<std::uint32_t>(type);
}

Reader::View
Reader::expect(std::uint32_t type)
{
  auto start = offset();
  auto view = next();
  if (view.type != type)
    throw CodecError(start, "expected type " + std::to_string(type) + ", got " + std::to_string(view.type));
  return view;
}

Element
decode(std::span<const std::uint8_t> buffer)
{
  Reader reader(buffer);
  auto view = reader.next();
  if (!reader.atEnd())
    throw CodecError(reader.offset(), "trailing bytes after element");
  return Element{view.type, Bytes(view.value.begin(), view.value.end())};
}

std::size_t
nameSize(const Name& name) noexcept
{
  std::size_t inner = 0;
  for (const auto& c : name.components())
    inner += elementSize(NameComponent, c.size());
  return elementSize(NameType, inner);
}

void
appendName(Bytes& out, const Name& name)
{
  std::size_t inner = 0;
  for (const auto& c : name.components())
    inner += elementSize(NameComponent, c.size());
  appendVarNumber(out, NameType);
  appendVarNumber(out, inner);
  for (const auto& c : name.components())
    appendElement(out, NameComponent, c);
}

Name
readName(const Reader::View& view)
{
  if (view.type != NameType)
    throw CodecError(view.valueOffset, "expected Name");
  Reader inner(view.value, view.valueOffset);
  std::vector<Name::Component> components;
  while (!inner.atEnd()) {
    auto c = inner.expect(NameComponent);
    if (c.value.empty())
      throw CodecError(c.valueOffset, "empty name component");
    std::string text(c.value.begin(), c.value.end());
    if (text.find('/') != std::string::npos)
      throw CodecError(c.valueOffset, "name component contains '/'");
    components.push_back(std::move(text));
  }
  return Name(std::move(components));
}

} // namespace dapes::tlv
