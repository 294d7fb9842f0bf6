#pragma once

#include "dapes/packet.hpp"

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace dapes {

enum class DigestAlgorithm : std::uint8_t {
  Sha256 = 1,
  Sha1 = 2,
  /// 24-byte output, standing in for a Tiger-sized digest.
  Truncated24 = 3,
};

std::size_t
digestLength(DigestAlgorithm algo) noexcept;

Bytes
computeDigest(DigestAlgorithm algo, std::span<const std::uint8_t> input);

class UnknownKey : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class Signer
{
public:
  virtual ~Signer() = default;

  virtual SignatureInfo
  info() const = 0;

  virtual Bytes
  sign(std::span<const std::uint8_t> message) const = 0;
};

class Verifier
{
public:
  virtual ~Verifier() = default;

  virtual SignatureScheme
  scheme() const noexcept = 0;

  virtual bool
  verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const = 0;
};

/// HMAC-SHA256 over a shared secret.  Deterministic; meant for tests and
/// simulation where real key pairs add nothing.
class KeyedHashSigner final : public Signer, public Verifier
{
public:
  KeyedHashSigner(std::string keyId, Bytes secret);

  SignatureInfo
  info() const override;

  Bytes
  sign(std::span<const std::uint8_t> message) const override;

  SignatureScheme
  scheme() const noexcept override
  {
    return SignatureScheme::KeyedHashSha256;
  }

  bool
  verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const override;

private:
  std::string m_keyId;
  Bytes m_secret;
};

/// Ed25519 through OpenSSL.  Key pair generated deterministically from a
/// 32-byte seed so scenarios stay reproducible.
class Ed25519Signer final : public Signer
{
public:
  Ed25519Signer(std::string keyId, std::span<const std::uint8_t> seed32);
  ~Ed25519Signer() override;

  Ed25519Signer(const Ed25519Signer&) = delete;
  Ed25519Signer&
  operator=(const Ed25519Signer&) = delete;

  SignatureInfo
  info() const override;

  Bytes
  sign(std::span<const std::uint8_t> message) const override;

  Bytes
  publicKey() const;

private:
  struct Impl;
  std::string m_keyId;
  std::unique_ptr<Impl> m_impl;
};

class Ed25519Verifier final : public Verifier
{
public:
  explicit Ed25519Verifier(Bytes publicKey);

  SignatureScheme
  scheme() const noexcept override
  {
    return SignatureScheme::Ed25519;
  }

  bool
  verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const override;

private:
  Bytes m_publicKey;
};

/// Static trust-anchor list keyed by key id.
class TrustStore
{
public:
  void
  add(const Bytes& keyId, std::shared_ptr<const Verifier> verifier);

  bool
  contains(const Bytes& keyId) const
  {
    return m_anchors.count(keyId) > 0;
  }

  /// Throws UnknownKey when no anchor has this key id.
  bool
  verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature,
         const Bytes& keyId) const;

private:
  std::map<Bytes, std::shared_ptr<const Verifier>> m_anchors;
};

Bytes
toBytes(std::string_view s);

std::string
toHex(std::span<const std::uint8_t> bytes);

Bytes
fromHex(std::string_view hex);

/// Fills sigInfo/sigValue of a Data packet.
void
signData(Packet& data, const Signer& signer);

/// False for unsigned packets or signature mismatch; UnknownKey propagates.
bool
verifyData(const Packet& data, const TrustStore& trust);

} // namespace dapes
