#!/usr/bin/env python3
"""Writes the wire golden vectors under testdata/.

Standalone encoder: shares no code with the C++ library, so the vectors
catch regressions on both sides.
"""
import hashlib
import hmac
import pathlib
import sys

T_INTEREST, T_DATA, T_NAME, T_COMP = 0x05, 0x06, 0x07, 0x08
T_NONCE, T_CONTENT, T_SIGINFO, T_SIGVALUE = 0x0A, 0x15, 0x16, 0x17
T_SIGTYPE, T_KEYID, T_HOP, T_PARAMS = 0x1B, 0x1D, 0x22, 0x24
T_FORMAT, T_ALGO, T_FILE, T_FILENAME = 0x80, 0x81, 0x82, 0x83
T_COUNT, T_INDEX, T_ROOT, T_COLNAME = 0x84, 0x85, 0x86, 0x87
T_MDLEN, T_SUBDIGEST, T_SUBNAME = 0x88, 0x89, 0x0100
T_BITMAP, T_BITMAPLEN = 0x90, 0x91


def varnum(n):
    if n < 253:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + n.to_bytes(2, "big")
    return b"\xfe" + n.to_bytes(4, "big")


def tlv(t, value):
    return varnum(t) + varnum(len(value)) + value


def nni(t, n):
    for width in (1, 2, 4, 8):
        if n < 1 << (8 * width):
            return tlv(t, n.to_bytes(width, "big"))
    raise ValueError(n)


def name(uri):
    comps = [c for c in uri.split("/") if c]
    return tlv(T_NAME, b"".join(tlv(T_COMP, c.encode()) for c in comps))


def interest(uri, nonce, hop=None, params=b""):
    body = name(uri) + tlv(T_NONCE, nonce.to_bytes(4, "big"))
    if hop is not None:
        body += tlv(T_HOP, bytes([hop]))
    if params:
        body += tlv(T_PARAMS, params)
    return tlv(T_INTEREST, body)


def siginfo(key_id):
    return tlv(T_SIGINFO, nni(T_SIGTYPE, 1) + tlv(T_KEYID, key_id.encode()))


def data(uri, content, key=None):
    body = name(uri) + tlv(T_CONTENT, content)
    if key is not None:
        key_id, secret = key
        body += siginfo(key_id)
        body += tlv(T_SIGVALUE, hmac.new(secret, body, hashlib.sha256).digest())
    return tlv(T_DATA, body)


def digest(algo, payload):
    if algo == 2:
        return hashlib.sha1(payload).digest()
    d = hashlib.sha256(payload).digest()
    return d[:24] if algo == 3 else d


def merkle_root(algo, leaves):
    level = list(leaves)
    while len(level) > 1:
        nxt = [digest(algo, level[i] + level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def metadata(collection, files, packet_size, fmt, algo, key):
    key_id, secret = key
    out = tlv(T_COLNAME, name(collection)) + nni(T_FORMAT, fmt) + nni(T_ALGO, algo)
    for fname, content in files:
        chunks = [content[i:i + packet_size] for i in range(0, len(content), packet_size)]
        digests = [digest(algo, c) for c in chunks]
        entry = tlv(T_FILENAME, fname.encode()) + nni(T_COUNT, len(chunks))
        if fmt == 1:
            for i, d in enumerate(digests):
                entry += tlv(T_SUBNAME, tlv(T_INDEX, i.to_bytes(4, "big")) + tlv(T_SUBDIGEST, d))
        else:
            entry += tlv(T_ROOT, merkle_root(algo, digests))
        out += tlv(T_FILE, entry)
    out += siginfo(key_id)
    body = out + tlv(T_SIGVALUE, hmac.new(secret, out, hashlib.sha256).digest())
    return nni(T_MDLEN, len(body)) + body


def bitmap(n, ones):
    bits = bytearray((n + 7) // 8)
    for g in ones:
        bits[g // 8] |= 0x80 >> (g % 8)
    return nni(T_BITMAPLEN, n) + tlv(T_BITMAP, bytes(bits))


KEY = ("repo", b"golden-secret")


def golden_files():
    return [("f0", bytes(i % 251 for i in range(2500))), ("f1", b"tiny")]


def main(outdir):
    out = pathlib.Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    packets = [
        ("interest_plain", interest("/a/b", 0x01020304)),
        ("interest_hop_params", interest("/dapes/discovery", 0xDEADBEEF, hop=1, params=b"hello")),
        ("interest_long_component", interest("/long/" + "x" * 300, 7)),
        ("data_unsigned", data("/c/f/0", b"payload")),
        ("data_empty", data("/x", b"")),
        ("data_signed", data("/share/c/file0/3", bytes(range(100)), KEY)),
    ]
    with open(out / "packets.txt", "w") as f:
        f.write("# label hex\n")
        for label, wire in packets:
            f.write(f"{label} {wire.hex()}\n")

    blobs = [
        ("digest_list_sha256", metadata("/golden/col", golden_files(), 1024, 1, 1, KEY)),
        ("digest_list_truncated24", metadata("/golden/col", golden_files(), 1024, 1, 3, KEY)),
        ("merkle_sha1", metadata("/golden/col", golden_files(), 1024, 2, 2, KEY)),
        ("merkle_sha256", metadata("/golden/col", golden_files(), 1024, 2, 1, KEY)),
    ]
    with open(out / "metadata.txt", "w") as f:
        f.write("# label hex; collection /golden/col, files f0 (2500 bytes, i%251) and f1 ('tiny'),\n")
        f.write("# packet size 1024, HMAC-SHA256 key 'repo' / 'golden-secret'\n")
        for label, blob in blobs:
            f.write(f"{label} {blob.hex()}\n")

    maps = [(0, []), (1, [0]), (13, [0, 3, 12]), (64, list(range(64))), (100, [99]), (300, [7, 255, 299])]
    with open(out / "bitmap.txt", "w") as f:
        f.write("# bits set-indices hex\n")
        for n, ones in maps:
            idx = ",".join(map(str, ones)) or "-"
            f.write(f"{n} {idx} {bitmap(n, ones).hex()}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "testdata")
