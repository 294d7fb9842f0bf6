#include "dapes/packet.hpp"
#include "dapes/tlv.hpp"

#include <stdexcept>

namespace dapes {

Packet
makeInterest(Name name, std::uint32_t nonce, Bytes appParameters)
{
  Packet p;
  p.kind = PacketKind::Interest;
  p.name = std::move(name);
  p.nonce = nonce;
  p.payload = std::move(appParameters);
  return p;
}

Packet
makeData(Name name, Bytes content)
{
  Packet p;
  p.kind = PacketKind::Data;
  p.name = std::move(name);
  p.payload = std::move(content);
  return p;
}

namespace {

void
validate(const Packet& p)
{
  if (p.isData() && (p.nonce != 0 || p.hopLimit))
    throw std::invalid_argument("Data packets carry no nonce or hop limit");
  if (p.isInterest() && (p.sigInfo || p.sigValue))
    throw std::invalid_argument("Interest signatures are not supported");
  if (p.sigValue && !p.sigInfo)
    throw std::invalid_argument("SignatureValue without SignatureInfo");
}

std::size_t
sigInfoInnerSize(const SignatureInfo& info)
{
  return tlv::elementSize(tlv::SignatureType, 1) + tlv::elementSize(tlv::KeyId, info.keyId.size());
}

void
appendSigInfo(Bytes& out, const SignatureInfo& info)
{
  tlv::appendSignatureInfo(out, info);
}

std::size_t
innerSize(const Packet& p)
{
  std::size_t n = tlv::nameSize(p.name);
  if (p.isInterest()) {
    n += tlv::elementSize(tlv::Nonce, 4);
    if (p.hopLimit)
      n += tlv::elementSize(tlv::HopLimit, 1);
    if (!p.payload.empty())
      n += tlv::elementSize(tlv::ApplicationParameters, p.payload.size());
  }
  else {
    n += tlv::elementSize(tlv::Content, p.payload.size());
    if (p.sigInfo)
      n += tlv::elementSize(tlv::SignatureInfo, sigInfoInnerSize(*p.sigInfo));
    if (p.sigValue)
      n += tlv::elementSize(tlv::SignatureValue, p.sigValue->size());
  }
  return n;
}

} // namespace

std::size_t
encodedSize(const Packet& packet)
{
  validate(packet);
  return tlv::elementSize(packet.isInterest() ? tlv::Interest : tlv::Data, innerSize(packet));
}

Bytes
encodePacket(const Packet& p)
{
  validate(p);
  auto inner = innerSize(p);
  Bytes out;
  out.reserve(tlv::elementSize(tlv::Data, inner));
  tlv::appendVarNumber(out, p.isInterest() ? tlv::Interest : tlv::Data);
  tlv::appendVarNumber(out, inner);
  tlv::appendName(out, p.name);
  if (p.isInterest()) {
    std::uint8_t nonce[4] = {static_cast<std::uint8_t>(p.nonce >> 24), static_cast<std::uint8_t>(p.nonce >> 16),
                             static_cast<std::uint8_t>(p.nonce >> 8), static_cast<std::uint8_t>(p.nonce)};
    tlv::appendElement(out, tlv::Nonce, std::span<const std::uint8_t>(nonce, 4));
    if (p.hopLimit) {
      std::uint8_t hop = *p.hopLimit;
      tlv::appendElement(out, tlv::HopLimit, std::span<const std::uint8_t>(&hop, 1));
    }
    if (!p.payload.empty())
      tlv::appendElement(out, tlv::ApplicationParameters, p.payload);
  }
  else {
    tlv::appendElement(out, tlv::Content, p.payload);
    if (p.sigInfo)
      appendSigInfo(out, *p.sigInfo);
    if (p.sigValue)
      tlv::appendElement(out, tlv::SignatureValue, *p.sigValue);
  }
  return out;
}

Packet
decodePacket(std::span<const std::uint8_t> wire)
{
  if (wire.empty())
    throw tlv::CodecError(0, "empty input");
  tlv::Reader outer(wire);
  auto top = outer.next();
  if (!outer.atEnd())
    throw tlv::CodecError(outer.offset(), "trailing bytes after packet");

  Packet p;
  if (top.type == tlv::Interest)
    p.kind = PacketKind::Interest;
  else if (top.type == tlv::Data)
    p.kind = PacketKind::Data;
  else
    throw tlv::CodecError(0, "unknown packet type " + std::to_string(top.type));

  tlv::Reader r(top.value, top.valueOffset);
  p.name = tlv::readName(r.expect(tlv::NameType));

  if (p.isInterest()) {
    auto nonce = r.expect(tlv::Nonce);
    if (nonce.value.size() != 4)
      throw tlv::CodecError(nonce.valueOffset, "nonce must be 4 bytes");
    p.nonce = (std::uint32_t{nonce.value[0]} << 24) | (std::uint32_t{nonce.value[1]} << 16) |
              (std::uint32_t{nonce.value[2]} << 8) | std::uint32_t{nonce.value[3]};
    if (!r.atEnd() && r.peekType() == tlv::HopLimit) {
      auto hop = r.next();
      if (hop.value.size() != 1)
        throw tlv::CodecError(hop.valueOffset, "hop limit must be 1 byte");
      p.hopLimit = hop.value[0];
    }
    if (!r.atEnd()) {
      auto params = r.expect(tlv::ApplicationParameters);
      if (params.value.empty())
        throw tlv::CodecError(params.valueOffset, "empty application parameters");
      p.payload.assign(params.value.begin(), params.value.end());
    }
  }
  else {
    auto content = r.expect(tlv::Content);
    p.payload.assign(content.value.begin(), content.value.end());
    if (!r.atEnd() && r.peekType() == tlv::SignatureInfo) {
      auto si = r.next();
      p.sigInfo = tlv::readSignatureInfo(si.value, si.valueOffset);
    }
    if (!r.atEnd()) {
      auto sv = r.expect(tlv::SignatureValue);
      if (!p.sigInfo)
        throw tlv::CodecError(sv.valueOffset, "SignatureValue without SignatureInfo");
      p.sigValue = Bytes(sv.value.begin(), sv.value.end());
    }
  }
  if (!r.atEnd())
    throw tlv::CodecError(r.offset(), "unexpected trailing element");
  return p;
}

Bytes
signedPortion(const Packet& data)
{
  Bytes out;
  tlv::appendName(out, data.name);
  tlv::appendElement(out, tlv::Content, data.payload);
  if (data.sigInfo)
    appendSigInfo(out, *data.sigInfo);
  return out;
}

namespace tlv {

std::size_t
signatureInfoSize(const dapes::SignatureInfo& info) noexcept
{
  return elementSize(SignatureInfo, sigInfoInnerSize(info));
}

void
appendSignatureInfo(Bytes& out, const dapes::SignatureInfo& info)
{
  appendVarNumber(out, SignatureInfo);
  appendVarNumber(out, sigInfoInnerSize(info));
  appendNonNegativeInteger(out, SignatureType, static_cast<std::uint8_t>(info.scheme));
  appendElement(out, KeyId, info.keyId);
}

dapes::SignatureInfo
readSignatureInfo(std::span<const std::uint8_t> value, std::size_t valueOffset)
{
  Reader sr(value, valueOffset);
  auto type = sr.expect(SignatureType);
  auto scheme = readNonNegativeInteger(type.value, type.valueOffset);
  if (scheme != 1 && scheme != 2)
    throw CodecError(type.valueOffset, "unknown signature type");
  auto key = sr.expect(KeyId);
  if (!sr.atEnd())
    throw CodecError(sr.offset(), "trailing bytes in SignatureInfo");
  return {Bytes(key.value.begin(), key.value.end()), static_cast<SignatureScheme>(scheme)};
}

} // namespace tlv
} // namespace dapes
