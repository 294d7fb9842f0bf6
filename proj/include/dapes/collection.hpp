#pragma once

#include "dapes/crypto.hpp"
#include "dapes/packet.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapes {

class DuplicateFileName : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class UnknownFile : public std::out_of_range
{
public:
  using std::out_of_range::out_of_range;
};

class IndexOutOfRange : public std::out_of_range
{
public:
  using std::out_of_range::out_of_range;
};

struct FileSpec
{
  std::string name; ///< a single name component
  Bytes content;
};

struct CollectionFile
{
  std::string name;
  std::size_t contentLength = 0;
  std::vector<PacketPtr> packets;
};

/// A named set of files, each segmented into signed Data packets named
/// `<collection>/<file>/<seq>` with seq starting at 0.
class Collection
{
public:
  Collection(Name name, std::size_t packetSize, std::vector<CollectionFile> files);

  const Name&
  name() const noexcept
  {
    return m_name;
  }

  std::size_t
  packetSize() const noexcept
  {
    return m_packetSize;
  }

  const std::vector<CollectionFile>&
  files() const noexcept
  {
    return m_files;
  }

  std::size_t
  totalPackets() const noexcept
  {
    return m_total;
  }

  /// Packet by canonical global index (files in order, packets in order).
  const PacketPtr&
  packet(std::size_t globalIndex) const;

  /// Concatenated payloads of one file.
  Bytes
  reassemble(std::size_t fileIndex) const;

private:
  Name m_name;
  std::size_t m_packetSize;
  std::vector<CollectionFile> m_files;
  std::vector<std::size_t> m_offsets;
  std::size_t m_total = 0;
};

Collection
buildCollection(const Name& name, const std::vector<FileSpec>& files, std::size_t packetSize, const Signer& signer);

/// Name of a collection packet.
Name
packetName(const Name& collection, const std::string& file, std::uint64_t seq);

// ---------------------------------------------------------------------------
// Global packet ordering

/// Maps between global bitmap indices and (file, local index) pairs.  File i
/// occupies [offset_i, offset_i + count_i).
class GlobalOrdering
{
public:
  GlobalOrdering() = default;
  explicit GlobalOrdering(std::vector<std::uint64_t> packetCounts);

  std::uint64_t
  total() const noexcept
  {
    return m_total;
  }

  std::size_t
  fileCount() const noexcept
  {
    return m_counts.size();
  }

  std::uint64_t
  offset(std::size_t file) const
  {
    return m_offsets.at(file);
  }

  std::uint64_t
  count(std::size_t file) const
  {
    return m_counts.at(file);
  }

  struct Position
  {
    std::size_t file;
    std::uint64_t index;
  };

  /// Throws IndexOutOfRange when g >= total().
  Position
  locate(std::uint64_t g) const;

  std::uint64_t
  globalIndex(std::size_t file, std::uint64_t index) const;

private:
  std::vector<std::uint64_t> m_counts;
  std::vector<std::uint64_t> m_offsets;
  std::uint64_t m_total = 0;
};

// ---------------------------------------------------------------------------
// Merkle tree

/// Binary hash tree over packet digests.  parent = H(left || right); an
/// unpaired node is promoted to the next level unchanged.
class MerkleTree
{
public:
  MerkleTree(DigestAlgorithm algo, std::vector<Bytes> leaves);

  const Bytes&
  root() const noexcept
  {
    return m_levels.back().front();
  }

  std::size_t
  leafCount() const noexcept
  {
    return m_levels.front().size();
  }

  std::size_t
  depth() const noexcept
  {
    return m_levels.size();
  }

  static Bytes
  computeRoot(DigestAlgorithm algo, const std::vector<Bytes>& leaves);

private:
  std::vector<std::vector<Bytes>> m_levels;
};

// ---------------------------------------------------------------------------
// Metadata

enum class MetadataFormat : std::uint8_t {
  DigestList = 1,
  MerkleRoots = 2,
};

struct FileMetadata
{
  std::string fileName;
  std::uint64_t packetCount = 0;
  std::vector<Bytes> perPacketDigests; ///< DigestList only
  std::optional<Bytes> merkleRoot;     ///< MerkleRoots only

  friend bool
  operator==(const FileMetadata&, const FileMetadata&) = default;
};

struct CollectionMetadata
{
  Name collectionName;
  MetadataFormat format = MetadataFormat::DigestList;
  DigestAlgorithm digestAlgo = DigestAlgorithm::Sha256;
  std::vector<FileMetadata> files;
  SignatureInfo signer;
  Bytes signature;

  std::uint64_t
  totalPackets() const;

  GlobalOrdering
  ordering() const;

  /// `<collection>/metadata`
  Name
  metadataPrefix() const;

  /// Index of a file by name; throws UnknownFile.
  std::size_t
  fileIndex(const std::string& fileName) const;

  friend bool
  operator==(const CollectionMetadata&, const CollectionMetadata&) = default;
};

/// Wire layout constants of one DigestList subname: a 3-byte type, a 1-byte
/// length, then a 4-byte packet index element and a digest element, each
/// with 1-byte type and length.
inline constexpr std::size_t kSubnameIndexBytes = 4;
inline constexpr std::size_t kSubnameFramingBytes = 8;

/// nSubnames * (indexBytes + digestBytes + tlvFramingBytes)
std::uint64_t
metadataSubnamesBytes(std::uint64_t nSubnames, std::uint64_t indexBytes, std::uint64_t digestBytes,
                      std::uint64_t tlvFramingBytes);

struct SerializedMetadata
{
  Bytes blob;                       ///< full signed encoding
  std::size_t subnameSectionBytes;  ///< bytes occupied by all subname elements
};

/// Canonical encoding (files in order, subnames in index order), including
/// the trailing signature.  Deterministic.
SerializedMetadata
serializeMetadata(const CollectionMetadata& md);

/// Bytes the signature covers.
Bytes
metadataSignedPortion(const CollectionMetadata& md);

/// Throws tlv::CodecError on malformed input.
CollectionMetadata
parseMetadata(std::span<const std::uint8_t> blob);

/// Builds, signs, and segments metadata into Data packets named
/// `<collection>/metadata/<seq>`, each at most `segmentSize` payload bytes.
std::pair<CollectionMetadata, std::vector<PacketPtr>>
buildMetadata(const Collection& collection, MetadataFormat format, DigestAlgorithm algo, const Signer& signer,
              std::size_t segmentSize = 0);

/// Segment payloads concatenate to the blob; the first segment's payload
/// starts with a MetadataLength element giving the blob size, which lets a
/// fetcher compute the segment count from segment 0 alone.
std::uint64_t
metadataSegmentCount(std::span<const std::uint8_t> firstSegmentPayload, std::size_t segmentSize);

/// Joins segment payloads and parses; throws tlv::CodecError.
CollectionMetadata
reassembleMetadata(const std::vector<Bytes>& segmentPayloads);

bool
verifyMetadataSignature(const CollectionMetadata& md, const TrustStore& trust);

/// Throws IndexOutOfRange for g >= totalPackets.
Name
packetNameFromGlobalIndex(const CollectionMetadata& md, std::uint64_t g);

/// Inverse of packetNameFromGlobalIndex; nullopt if the name is not a packet
/// of this collection.
std::optional<std::uint64_t>
globalIndexFromName(const CollectionMetadata& md, const GlobalOrdering& order, const Name& name);

// ---------------------------------------------------------------------------
// Integrity verification

enum class VerifyStatus { Accepted, Rejected, Deferred };

struct VerifyResult
{
  VerifyStatus status = VerifyStatus::Deferred;
  std::string reason;
  /// Global indices whose status became final in this call (Merkle completion
  /// settles a whole file at once).
  std::vector<std::uint64_t> settled;
};

/// Per-receiver state for Merkle verification: packet digests collected per file.
class VerifyContext
{
public:
  void
  reset(std::size_t file)
  {
    m_pending.erase(file);
  }

  std::size_t
  pendingCount(std::size_t file) const
  {
    auto it = m_pending.find(file);
    return it == m_pending.end() ? 0 : it->second.size();
  }

private:
  friend VerifyResult
  verifyPacket(const CollectionMetadata&, const Packet&, VerifyContext&);

  std::map<std::size_t, std::map<std::uint64_t, Bytes>> m_pending;
};

/// DigestList: immediate Accepted/Rejected.  MerkleRoots: Deferred until all
/// leaves of the file are present, then Accepted/Rejected for the whole file.
/// Throws UnknownFile or IndexOutOfRange.
VerifyResult
verifyPacket(const CollectionMetadata& md, const Packet& packet, VerifyContext& context);

} // namespace dapes
