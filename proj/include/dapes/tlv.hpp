#pragma once

#include "dapes/name.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace dapes::tlv {

// Private type numbering; see docs/tlv-types.md.
enum : std::uint32_t {
  Interest = 0x05,
  Data = 0x06,
  NameType = 0x07,
  NameComponent = 0x08,
  Nonce = 0x0A,
  Content = 0x15,
  SignatureInfo = 0x16,
  SignatureValue = 0x17,
  SignatureType = 0x1B,
  KeyId = 0x1D,
  HopLimit = 0x22,
  ApplicationParameters = 0x24,

  // metadata content
  MetadataFormat = 0x80,
  DigestAlgorithm = 0x81,
  FileEntry = 0x82,
  FileName = 0x83,
  PacketCount = 0x84,
  PacketIndex = 0x85,
  MerkleRoot = 0x86,
  CollectionName = 0x87,
  MetadataLength = 0x88,
  SubnameDigest = 0x89,
  // 3-byte type number: makes a subname's framing exactly 8 bytes
  Subname = 0x0100,

  // application payloads
  Bitmap = 0x90,
  BitmapLength = 0x91,
  PeerId = 0x92,
  MetadataNameList = 0x93,
};

class CodecError : public std::runtime_error
{
public:
  CodecError(std::size_t offset, const std::string& reason);

  std::size_t
  offset() const noexcept
  {
    return m_offset;
  }

  const std::string&
  reason() const noexcept
  {
    return m_reason;
  }

private:
  std::size_t m_offset;
  std::string m_reason;
};

/// 1 byte below 253, else a marker byte followed by a 2- or 4-byte big-endian value.
std::size_t
varNumberSize(std::uint64_t value) noexcept;

void
appendVarNumber(Bytes& out, std::uint64_t value);

struct Element
{
  std::uint32_t type = 0;
  Bytes value;

  friend bool
  operator==(const Element&, const Element&) = default;
};

std::size_t
elementSize(std::uint32_t type, std::size_t valueLength) noexcept;

void
appendElement(Bytes& out, std::uint32_t type, std::span<const std::uint8_t> value);

void
appendElement(Bytes& out, std::uint32_t type, std::string_view value);

/// Shortest big-endian encoding of a non-negative integer (1, 2, 4 or 8 bytes).
void
appendNonNegativeInteger(Bytes& out, std::uint32_t type, std::uint64_t value);

std::uint64_t
readNonNegativeInteger(std::span<const std::uint8_t> value, std::size_t offset);

Bytes
encode(const Element& element);

/// Sequential reader over a run of TLV elements.  All errors carry the
/// absolute offset of the failing byte relative to `base`.
class Reader
{
public:
  explicit Reader(std::span<const std::uint8_t> buffer, std::size_t base = 0)
    : m_buf(buffer)
    , m_base(base)
  {
  }

  bool
  atEnd() const noexcept
  {
    return m_pos == m_buf.size();
  }

  std::size_t
  offset() const noexcept
  {
    return m_base + m_pos;
  }

  struct View
  {
    std::uint32_t type;
    std::span<const std::uint8_t> value;
    std::size_t valueOffset; // absolute
  };

  View
  next();

  /// Type of the next element without consuming it.
  std::uint32_t
  peekType();

  View
  expect(std::uint32_t type);

private:
  std::uint64_t
  readVarNumber();

  std::span<const std::uint8_t> m_buf;
  std::size_t m_base;
  std::size_t m_pos = 0;
};

Element
decode(std::span<const std::uint8_t> buffer);

void
appendName(Bytes& out, const Name& name);

std::size_t
nameSize(const Name& name) noexcept;

Name
readName(const Reader::View& view);

} // namespace dapes::tlv
