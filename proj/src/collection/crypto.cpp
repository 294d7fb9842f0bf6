#include "dapes/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/crypto.h>

namespace dapes {

std::size_t
digestLength(DigestAlgorithm algo) noexcept
{
  switch (algo) {
  case DigestAlgorithm::Sha256:
    return 32;
  case DigestAlgorithm::Sha1:
    return 20;
  case DigestAlgorithm::Truncated24:
    return 24;
  }
  return 0;
}

Bytes
computeDigest(DigestAlgorithm algo, std::span<const std::uint8_t> input)
{
  const EVP_MD* md = algo == DigestAlgorithm::Sha1 ? EVP_sha1() : EVP_sha256();
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (EVP_Digest(input.data(), input.size(), out.data(), &len, md, nullptr) != 1)
    throw std::runtime_error("EVP_Digest failed");
  out.resize(digestLength(algo));
  return out;
}

KeyedHashSigner::KeyedHashSigner(std::string keyId, Bytes secret)
  : m_keyId(std::move(keyId))
  , m_secret(std::move(secret))
{
}

SignatureInfo
KeyedHashSigner::info() const
{
  return {toBytes(m_keyId), SignatureScheme::KeyedHashSha256};
}

Bytes
KeyedHashSigner::sign(std::span<const std::uint8_t> message) const
{
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), m_secret.data(), static_cast<int>(m_secret.size()), message.data(), message.size(),
            out.data(), &len))
    throw std::runtime_error("HMAC failed");
  out.resize(len);
  return out;
}

bool
KeyedHashSigner::verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const
{
  auto expected = sign(message);
  return expected.size() == signature.size() &&
         CRYPTO_memcmp(expected.data(), signature.data(), expected.size()) == 0;
}

struct Ed25519Signer::Impl
{
  EVP_PKEY* key = nullptr;
};

Ed25519Signer::Ed25519Signer(std::string keyId, std::span<const std::uint8_t> seed32)
  : m_keyId(std::move(keyId))
  , m_impl(std::make_unique<Impl>())
{
  if (seed32.size() != 32)
    throw std::invalid_argument("Ed25519 seed must be 32 bytes");
  m_impl->key = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed32.data(), seed32.size());
  if (!m_impl->key)
    throw std::runtime_error("cannot create Ed25519 key");
}

Ed25519Signer::~Ed25519Signer()
{
  EVP_PKEY_free(m_impl->key);
}

SignatureInfo
Ed25519Signer::info() const
{
  return {toBytes(m_keyId), SignatureScheme::Ed25519};
}

Bytes
Ed25519Signer::sign(std::span<const std::uint8_t> message) const
{
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Bytes sig(64);
  std::size_t len = sig.size();
  bool ok = EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, m_impl->key) == 1 &&
            EVP_DigestSign(ctx, sig.data(), &len, message.data(), message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok)
    throw std::runtime_error("Ed25519 signing failed");
  sig.resize(len);
  return sig;
}

Bytes
Ed25519Signer::publicKey() const
{
  Bytes pub(32);
  std::size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(m_impl->key, pub.data(), &len) != 1)
    throw std::runtime_error("cannot export Ed25519 public key");
  pub.resize(len);
  return pub;
}

Ed25519Verifier::Ed25519Verifier(Bytes publicKey)
  : m_publicKey(std::move(publicKey))
{
}

bool
Ed25519Verifier::verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const
{
  EVP_PKEY* key = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, m_publicKey.data(), m_publicKey.size());
  if (!key)
    return false;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  bool ok = EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, key) == 1 &&
            EVP_DigestVerify(ctx, signature.data(), signature.size(), message.data(), message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  EVP_PKEY_free(key);
  return ok;
}

void
TrustStore::add(const Bytes& keyId, std::shared_ptr<const Verifier> verifier)
{
  m_anchors[keyId] = std::move(verifier);
}

bool
TrustStore::verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature,
                   const Bytes& keyId) const
{
  auto it = m_anchors.find(keyId);
  if (it == m_anchors.end())
    throw UnknownKey("no trust anchor for key '" + std::string(keyId.begin(), keyId.end()) + "'");
  return it->second->verify(message, signature);
}

Bytes
toBytes(std::string_view s)
{
  return Bytes(s.begin(), s.end());
}

std::string
toHex(std::span<const std::uint8_t> bytes)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

Bytes
fromHex(std::string_view hex)
{
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9')
      return c - '0';
    if (c >= 'a' && c <= 'f')
      return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
      return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  int hi = -1;
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t')
      continue;
    int v = nibble(c);
    if (v < 0)
      throw std::invalid_argument("invalid hex digit");
    if (hi < 0) {
      hi = v;
    }
    else {
      out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
      hi = -1;
    }
  }
  if (hi >= 0)
    throw std::invalid_argument("odd number of hex digits");
  return out;
}

void
signData(Packet& data, const Signer& signer)
{
  data.sigInfo = signer.info();
  data.sigValue = signer.sign(signedPortion(data));
}

bool
verifyData(const Packet& data, const TrustStore& trust)
{
  if (!data.isData() || !data.sigInfo || !data.sigValue)
    return false;
  if (!trust.contains(data.sigInfo->keyId))
    throw UnknownKey("no trust anchor for data signer");
  return trust.verify(signedPortion(data), *data.sigValue, data.sigInfo->keyId);
}

} // namespace dapes
