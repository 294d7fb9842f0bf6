#include "dapes/collection.hpp"
#include "dapes/tlv.hpp"

#include <set>

namespace dapes {

Name
packetName(const Name& collection, const std::string& file, std::uint64_t seq)
{
  Name n = collection;
  n.append(file);
  n.append(seq);
  return n;
}

Collection::Collection(Name name, std::size_t packetSize, std::vector<CollectionFile> files)
  : m_name(std::move(name))
  , m_packetSize(packetSize)
  , m_files(std::move(files))
{
  for (const auto& f : m_files) {
    m_offsets.push_back(m_total);
    m_total += f.packets.size();
  }
}

const PacketPtr&
Collection::packet(std::size_t globalIndex) const
{
  if (globalIndex >= m_total)
    throw IndexOutOfRange("packet index " + std::to_string(globalIndex) + " out of range");
  auto it = std::upper_bound(m_offsets.begin(), m_offsets.end(), globalIndex);
  auto file = static_cast<std::size_t>(std::distance(m_offsets.begin(), it) - 1);
  return m_files[file].packets[globalIndex - m_offsets[file]];
}

Bytes
Collection::reassemble(std::size_t fileIndex) const
{
  Bytes out;
  for (const auto& p : m_files.at(fileIndex).packets)
    out.insert(out.end(), p->payload.begin(), p->payload.end());
  return out;
}

Collection
buildCollection(const Name& name, const std::vector<FileSpec>& files, std::size_t packetSize, const Signer& signer)
{
  if (packetSize < 1)
    throw std::invalid_argument("packet size must be at least 1 byte");

  std::set<std::string> seen;
  std::vector<CollectionFile> out;
  for (const auto& spec : files) {
    if (!seen.insert(spec.name).second)
      throw DuplicateFileName("duplicate file name '" + spec.name + "'");
    // these components name protocol messages under the collection prefix
    if (spec.name == "metadata" || spec.name == "bitmap")
      throw std::invalid_argument("file name '" + spec.name + "' is reserved");
    if (spec.content.empty())
      throw std::invalid_argument("file '" + spec.name + "' is empty");

    CollectionFile file;
    file.name = spec.name;
    file.contentLength = spec.content.size();
    std::size_t count = (spec.content.size() + packetSize - 1) / packetSize;
    file.packets.reserve(count);
    for (std::size_t seq = 0; seq < count; ++seq) {
      auto begin = spec.content.begin() + static_cast<std::ptrdiff_t>(seq * packetSize);
      auto end = spec.content.begin() + static_cast<std::ptrdiff_t>(std::min(spec.content.size(), (seq + 1) * packetSize));
      Packet data = makeData(packetName(name, spec.name, seq), Bytes(begin, end));
      signData(data, signer);
      file.packets.push_back(std::make_shared<const Packet>(std::move(data)));
    }
    out.push_back(std::move(file));
  }
  return Collection(name, packetSize, std::move(out));
}

GlobalOrdering::GlobalOrdering(std::vector<std::uint64_t> packetCounts)
  : m_counts(std::move(packetCounts))
{
  m_offsets.reserve(m_counts.size());
  for (auto c : m_counts) {
    m_offsets.push_back(m_total);
    m_total += c;
  }
}

GlobalOrdering::Position
GlobalOrdering::locate(std::uint64_t g) const
{
  if (g >= m_total)
    throw IndexOutOfRange("global index " + std::to_string(g) + " >= " + std::to_string(m_total));
  auto it = std::upper_bound(m_offsets.begin(), m_offsets.end(), g);
  auto file = static_cast<std::size_t>(std::distance(m_offsets.begin(), it) - 1);
  // skip zero-length files sharing the same offset
  while (m_counts[file] == 0)
    ++file;
  return {file, g - m_offsets[file]};
}

std::uint64_t
GlobalOrdering::globalIndex(std::size_t file, std::uint64_t index) const
{
  if (file >= m_counts.size())
    throw UnknownFile("file index " + std::to_string(file));
  if (index >= m_counts[file])
    throw IndexOutOfRange("packet index " + std::to_string(index) + " >= " + std::to_string(m_counts[file]));
  return m_offsets[file] + index;
}

MerkleTree::MerkleTree(DigestAlgorithm algo, std::vector<Bytes> leaves)
{
  if (leaves.empty())
    throw std::invalid_argument("Merkle tree needs at least one leaf");
  m_levels.push_back(std::move(leaves));
  while (m_levels.back().size() > 1) {
    const auto& below = m_levels.back();
    std::vector<Bytes> level;
    level.reserve((below.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < below.size(); i += 2) {
      Bytes joined = below[i];
      joined.insert(joined.end(), below[i + 1].begin(), below[i + 1].end());
      level.push_back(computeDigest(algo, joined));
    }
    if (below.size() % 2 == 1)
      level.push_back(below.back());
    m_levels.push_back(std::move(level));
  }
}

Bytes
MerkleTree::computeRoot(DigestAlgorithm algo, const std::vector<Bytes>& leaves)
{
  return MerkleTree(algo, leaves).root();
}

// ---------------------------------------------------------------------------

std::uint64_t
metadataSubnamesBytes(std::uint64_t nSubnames, std::uint64_t indexBytes, std::uint64_t digestBytes,
                      std::uint64_t tlvFramingBytes)
{
  return nSubnames * (indexBytes + digestBytes + tlvFramingBytes);
}

std::uint64_t
CollectionMetadata::totalPackets() const
{
  std::uint64_t total = 0;
  for (const auto& f : files)
    total += f.packetCount;
  return total;
}

GlobalOrdering
CollectionMetadata::ordering() const
{
  std::vector<std::uint64_t> counts;
  counts.reserve(files.size());
  for (const auto& f : files)
    counts.push_back(f.packetCount);
  return GlobalOrdering(std::move(counts));
}

Name
CollectionMetadata::metadataPrefix() const
{
  Name n = collectionName;
  n.append("metadata");
  return n;
}

std::size_t
CollectionMetadata::fileIndex(const std::string& fileName) const
{
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (files[i].fileName == fileName)
      return i;
  }
  throw UnknownFile("unknown file '" + fileName + "'");
}

namespace {

struct UnsignedEncoding
{
  Bytes bytes;
  std::size_t subnameBytes = 0;
};

UnsignedEncoding
encodeUnsigned(const CollectionMetadata& md)
{
  UnsignedEncoding enc;
  Bytes& out = enc.bytes;

  Bytes nameTlv;
  tlv::appendName(nameTlv, md.collectionName);
  tlv::appendElement(out, tlv::CollectionName, nameTlv);
  tlv::appendNonNegativeInteger(out, tlv::MetadataFormat, static_cast<std::uint8_t>(md.format));
  tlv::appendNonNegativeInteger(out, tlv::DigestAlgorithm, static_cast<std::uint8_t>(md.digestAlgo));

  for (const auto& f : md.files) {
    Bytes entry;
    tlv::appendElement(entry, tlv::FileName, f.fileName);
    tlv::appendNonNegativeInteger(entry, tlv::PacketCount, f.packetCount);
    if (md.format == MetadataFormat::DigestList) {
      if (f.perPacketDigests.size() != f.packetCount || f.merkleRoot)
        throw std::invalid_argument("digest-list metadata needs one digest per packet and no root");
      for (std::uint64_t i = 0; i < f.packetCount; ++i) {
        Bytes sub;
        std::uint8_t idx[kSubnameIndexBytes] = {static_cast<std::uint8_t>(i >> 24), static_cast<std::uint8_t>(i >> 16),
                                                static_cast<std::uint8_t>(i >> 8), static_cast<std::uint8_t>(i)};
        tlv::appendElement(sub, tlv::PacketIndex, std::span<const std::uint8_t>(idx, kSubnameIndexBytes));
        tlv::appendElement(sub, tlv::SubnameDigest, f.perPacketDigests[i]);
        auto before = entry.size();
        tlv::appendElement(entry, tlv::Subname, sub);
        enc.subnameBytes += entry.size() - before;
      }
    }
    else {
      if (!f.merkleRoot || !f.perPacketDigests.empty())
        throw std::invalid_argument("Merkle metadata needs a root and no digest list");
      tlv::appendElement(entry, tlv::MerkleRoot, *f.merkleRoot);
    }
    tlv::appendElement(out, tlv::FileEntry, entry);
  }

  Bytes sigInfo;
  tlv::appendSignatureInfo(sigInfo, md.signer);
  out.insert(out.end(), sigInfo.begin(), sigInfo.end());
  return enc;
}

} // namespace

Bytes
metadataSignedPortion(const CollectionMetadata& md)
{
  return encodeUnsigned(md).bytes;
}

SerializedMetadata
serializeMetadata(const CollectionMetadata& md)
{
  auto enc = encodeUnsigned(md);
  Bytes body = std::move(enc.bytes);
  tlv::appendElement(body, tlv::SignatureValue, md.signature);

  SerializedMetadata out;
  tlv::appendNonNegativeInteger(out.blob, tlv::MetadataLength, body.size());
  out.blob.insert(out.blob.end(), body.begin(), body.end());
  out.subnameSectionBytes = enc.subnameBytes;
  return out;
}

CollectionMetadata
parseMetadata(std::span<const std::uint8_t> blob)
{
  tlv::Reader r(blob);
  auto lenView = r.expect(tlv::MetadataLength);
  auto declared = tlv::readNonNegativeInteger(lenView.value, lenView.valueOffset);
  if (declared != blob.size() - r.offset())
    throw tlv::CodecError(lenView.valueOffset, "metadata length mismatch");

  CollectionMetadata md;
  auto nameView = r.expect(tlv::CollectionName);
  tlv::Reader nameReader(nameView.value, nameView.valueOffset);
  md.collectionName = tlv::readName(nameReader.expect(tlv::NameType));

  auto fmt = r.expect(tlv::MetadataFormat);
  auto fmtValue = tlv::readNonNegativeInteger(fmt.value, fmt.valueOffset);
  if (fmtValue != 1 && fmtValue != 2)
    throw tlv::CodecError(fmt.valueOffset, "unknown metadata format");
  md.format = static_cast<MetadataFormat>(fmtValue);

  auto algo = r.expect(tlv::DigestAlgorithm);
  auto algoValue = tlv::readNonNegativeInteger(algo.value, algo.valueOffset);
  if (algoValue < 1 || algoValue > 3)
    throw tlv::CodecError(algo.valueOffset, "unknown digest algorithm");
  md.digestAlgo = static_cast<DigestAlgorithm>(algoValue);
  auto dlen = digestLength(md.digestAlgo);

  while (r.peekType() == tlv::FileEntry) {
    auto entry = r.next();
    tlv::Reader er(entry.value, entry.valueOffset);
    FileMetadata f;
    auto fn = er.expect(tlv::FileName);
    f.fileName.assign(fn.value.begin(), fn.value.end());
    auto pc = er.expect(tlv::PacketCount);
    f.packetCount = tlv::readNonNegativeInteger(pc.value, pc.valueOffset);
    if (md.format == MetadataFormat::DigestList) {
      for (std::uint64_t i = 0; i < f.packetCount; ++i) {
        auto sub = er.expect(tlv::Subname);
        tlv::Reader sr(sub.value, sub.valueOffset);
        auto idx = sr.expect(tlv::PacketIndex);
        if (idx.value.size() != kSubnameIndexBytes)
          throw tlv::CodecError(idx.valueOffset, "packet index must be 4 bytes");
        std::uint64_t index = 0;
        for (auto b : idx.value)
          index = (index << 8) | b;
        if (index != i)
          throw tlv::CodecError(idx.valueOffset, "subnames out of order");
        auto dig = sr.expect(tlv::SubnameDigest);
        if (dig.value.size() != dlen)
          throw tlv::CodecError(dig.valueOffset, "digest length mismatch");
        if (!sr.atEnd())
          throw tlv::CodecError(sr.offset(), "trailing bytes in subname");
        f.perPacketDigests.emplace_back(dig.value.begin(), dig.value.end());
      }
    }
    else {
      auto root = er.expect(tlv::MerkleRoot);
      if (root.value.size() != dlen)
        throw tlv::CodecError(root.valueOffset, "root length mismatch");
      f.merkleRoot = Bytes(root.value.begin(), root.value.end());
    }
    if (!er.atEnd())
      throw tlv::CodecError(er.offset(), "trailing bytes in file entry");
    md.files.push_back(std::move(f));
  }

  auto si = r.expect(tlv::SignatureInfo);
  md.signer = tlv::readSignatureInfo(si.value, si.valueOffset);
  auto sv = r.expect(tlv::SignatureValue);
  md.signature.assign(sv.value.begin(), sv.value.end());
  if (!r.atEnd())
    throw tlv::CodecError(r.offset(), "trailing bytes after metadata");
  return md;
}

std::pair<CollectionMetadata, std::vector<PacketPtr>>
buildMetadata(const Collection& collection, MetadataFormat format, DigestAlgorithm algo, const Signer& signer,
              std::size_t segmentSize)
{
  if (segmentSize == 0)
    segmentSize = collection.packetSize();

  CollectionMetadata md;
  md.collectionName = collection.name();
  md.format = format;
  md.digestAlgo = algo;
  md.signer = signer.info();
  for (const auto& file : collection.files()) {
    FileMetadata f;
    f.fileName = file.name;
    f.packetCount = file.packets.size();
    std::vector<Bytes> digests;
    digests.reserve(file.packets.size());
    for (const auto& p : file.packets)
      digests.push_back(computeDigest(algo, p->payload));
    if (format == MetadataFormat::DigestList)
      f.perPacketDigests = std::move(digests);
    else
      f.merkleRoot = MerkleTree::computeRoot(algo, digests);
    md.files.push_back(std::move(f));
  }
  md.signature = signer.sign(metadataSignedPortion(md));

  auto blob = serializeMetadata(md).blob;
  std::vector<PacketPtr> segments;
  for (std::size_t off = 0, seq = 0; off < blob.size(); off += segmentSize, ++seq) {
    auto end = std::min(blob.size(), off + segmentSize);
    Name segName = md.metadataPrefix();
    segName.append(seq);
    Packet data = makeData(std::move(segName), Bytes(blob.begin() + static_cast<std::ptrdiff_t>(off),
                                                     blob.begin() + static_cast<std::ptrdiff_t>(end)));
    signData(data, signer);
    segments.push_back(std::make_shared<const Packet>(std::move(data)));
  }
  return {std::move(md), std::move(segments)};
}

std::uint64_t
metadataSegmentCount(std::span<const std::uint8_t> firstSegmentPayload, std::size_t segmentSize)
{
  tlv::Reader r(firstSegmentPayload);
  auto lenView = r.expect(tlv::MetadataLength);
  auto body = tlv::readNonNegativeInteger(lenView.value, lenView.valueOffset);
  auto total = r.offset() + body;
  return (total + segmentSize - 1) / segmentSize;
}

CollectionMetadata
reassembleMetadata(const std::vector<Bytes>& segmentPayloads)
{
  Bytes blob;
  for (const auto& s : segmentPayloads)
    blob.insert(blob.end(), s.begin(), s.end());
  return parseMetadata(blob);
}

bool
verifyMetadataSignature(const CollectionMetadata& md, const TrustStore& trust)
{
  return trust.verify(metadataSignedPortion(md), md.signature, md.signer.keyId);
}

Name
packetNameFromGlobalIndex(const CollectionMetadata& md, std::uint64_t g)
{
  auto pos = md.ordering().locate(g);
  return packetName(md.collectionName, md.files[pos.file].fileName, pos.index);
}

std::optional<std::uint64_t>
globalIndexFromName(const CollectionMetadata& md, const GlobalOrdering& order, const Name& name)
{
  const auto& prefix = md.collectionName;
  if (name.size() != prefix.size() + 2 || !prefix.isPrefixOf(name))
    return std::nullopt;
  const auto& file = name[prefix.size()];
  std::uint64_t index = 0;
  try {
    index = toNumber(name[prefix.size() + 1]);
  }
  catch (const MalformedName&) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < md.files.size(); ++i) {
    if (md.files[i].fileName == file) {
      if (index >= md.files[i].packetCount)
        return std::nullopt;
      return order.offset(i) + index;
    }
  }
  return std::nullopt;
}

VerifyResult
verifyPacket(const CollectionMetadata& md, const Packet& packet, VerifyContext& context)
{
  const auto& prefix = md.collectionName;
  if (packet.name.size() != prefix.size() + 2 || !prefix.isPrefixOf(packet.name))
    throw UnknownFile("'" + packet.name.toUri() + "' is not a packet of " + prefix.toUri());
  auto file = md.fileIndex(packet.name[prefix.size()]);
  std::uint64_t index = 0;
  try {
    index = toNumber(packet.name[prefix.size() + 1]);
  }
  catch (const MalformedName&) {
    throw IndexOutOfRange("non-numeric packet index in " + packet.name.toUri());
  }
  const auto& fm = md.files[file];
  if (index >= fm.packetCount)
    throw IndexOutOfRange("packet index " + std::to_string(index) + " >= " + std::to_string(fm.packetCount));

  auto order = md.ordering();
  auto digest = computeDigest(md.digestAlgo, packet.payload);
  VerifyResult result;

  if (md.format == MetadataFormat::DigestList) {
    result.settled.push_back(order.offset(file) + index);
    if (digest == fm.perPacketDigests[index]) {
      result.status = VerifyStatus::Accepted;
    }
    else {
      result.status = VerifyStatus::Rejected;
      result.reason = "digest mismatch";
    }
    return result;
  }

  auto& pending = context.m_pending[file];
  pending[index] = std::move(digest);
  if (pending.size() < fm.packetCount) {
    result.status = VerifyStatus::Deferred;
    return result;
  }

  std::vector<Bytes> leaves;
  leaves.reserve(pending.size());
  for (auto& [i, d] : pending)
    leaves.push_back(std::move(d));
  context.m_pending.erase(file);

  for (std::uint64_t i = 0; i < fm.packetCount; ++i)
    result.settled.push_back(order.offset(file) + i);
  if (MerkleTree::computeRoot(md.digestAlgo, leaves) == *fm.merkleRoot) {
    result.status = VerifyStatus::Accepted;
  }
  else {
    result.status = VerifyStatus::Rejected;
    result.reason = "Merkle root mismatch";
  }
  return result;
}

} // namespace dapes
