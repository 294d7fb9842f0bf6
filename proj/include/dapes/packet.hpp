#pragma once

#include "dapes/name.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>

namespace dapes {

enum class PacketKind : std::uint8_t { Interest, Data };

enum class SignatureScheme : std::uint8_t {
  KeyedHashSha256 = 1,
  Ed25519 = 2,
};

struct SignatureInfo
{
  Bytes keyId;
  SignatureScheme scheme = SignatureScheme::KeyedHashSha256;

  friend bool
  operator==(const SignatureInfo&, const SignatureInfo&) = default;
};

/// Interest or Data.  Interests carry a nonce and an optional hop limit;
/// Data carries neither.  `payload` is Data content or Interest
/// application parameters.
struct Packet
{
  PacketKind kind = PacketKind::Interest;
  Name name;
  std::uint32_t nonce = 0;
  std::optional<std::uint8_t> hopLimit;
  Bytes payload;
  std::optional<SignatureInfo> sigInfo;
  std::optional<Bytes> sigValue;

  bool
  isInterest() const noexcept
  {
    return kind == PacketKind::Interest;
  }

  bool
  isData() const noexcept
  {
    return kind == PacketKind::Data;
  }

  friend bool
  operator==(const Packet&, const Packet&) = default;
};

using PacketPtr = std::shared_ptr<const Packet>;

Packet
makeInterest(Name name, std::uint32_t nonce, Bytes appParameters = {});

Packet
makeData(Name name, Bytes content);

/// Wire encoding; throws std::invalid_argument for packets violating the
/// Interest/Data field rules.
Bytes
encodePacket(const Packet& packet);

/// Exact byte length of encodePacket(packet) without materializing it.
std::size_t
encodedSize(const Packet& packet);

/// Throws tlv::CodecError on truncation, unknown outer type, or trailing bytes.
Packet
decodePacket(std::span<const std::uint8_t> wire);

/// Bytes covered by a Data signature: encoded Name, Content and
/// SignatureInfo elements, in that order.
Bytes
signedPortion(const Packet& data);

namespace tlv {

void
appendSignatureInfo(Bytes& out, const dapes::SignatureInfo& info);

std::size_t
signatureInfoSize(const dapes::SignatureInfo& info) noexcept;

/// Parses the value of a SignatureInfo element.
dapes::SignatureInfo
readSignatureInfo(std::span<const std::uint8_t> value, std::size_t valueOffset);

} // namespace tlv
} // namespace dapes
