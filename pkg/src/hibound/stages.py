"""Invertible lossless stages and the two fixed pipelines.

Each stage emits a self-describing record:

    common prefix   stage_id u8 | width u8 | orig_len u64le
    huffman         + payload_bits u64le + 256-byte code-length table + bitstream
    rre / rze       + bitmap_encoded u8 + bitmap_len u64le + bitmap + kept symbols
    tcms / bit      + transformed words

Words are little-endian; inputs are zero-padded up to the width (or, for the
bit shuffle, the transpose tile) and orig_len recovers the true length.
Bitmaps pack MSB-first. A bitmap may itself be wrapped in up to three
nested width-1 RRE records when that shrinks it; the flag byte says whether
the bitmap section is raw or one such record.

Pipelines:

    cr   huffman -> rre(4) -> tcms(8) -> rze(1)   ratio-preferred
    tp   tcms(1) -> bit(1) -> rre(1)              throughput-preferred
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass

import numpy as np

from .errors import StageError

STAGE_HUFFMAN = 1
STAGE_RRE = 2
STAGE_RZE = 3
STAGE_TCMS = 4
STAGE_BITSHUFFLE = 5

STAGE_NAMES = {
    STAGE_HUFFMAN: "huffman",
    STAGE_RRE: "rre",
    STAGE_RZE: "rze",
    STAGE_TCMS: "tcms",
    STAGE_BITSHUFFLE: "bit",
}

WIDTHS = (1, 2, 4, 8)
MAX_BITMAP_DEPTH = 3

_COMMON = struct.Struct("<BBQ")
_BM_EXTRA = struct.Struct("<BQ")
_HF_EXTRA = struct.Struct("<Q")

_UMAX = {1: 0xFF, 2: 0xFFFF, 4: 0xFFFFFFFF, 8: 0xFFFFFFFFFFFFFFFF}


@dataclass(frozen=True)
class StageHeader:
    stage_id: int
    width: int
    orig_len: int
    header_len: int


def peek_header(blob: bytes) -> StageHeader:
    """Parse the common prefix of a stage record without decoding it."""
    if len(blob) < _COMMON.size:
        raise StageError("truncated stage header")
    stage, width, orig = _COMMON.unpack_from(blob, 0)
    if stage not in STAGE_NAMES:
        raise StageError(f"unknown stage id {stage}")
    hlen = _COMMON.size
    if stage == STAGE_HUFFMAN:
        hlen += _HF_EXTRA.size + 256
    elif stage in (STAGE_RRE, STAGE_RZE):
        hlen += _BM_EXTRA.size
    return StageHeader(stage, width, orig, hlen)


def _check_width(width: int):
    if width not in WIDTHS:
        raise StageError(f"symbol width must be one of {WIDTHS}, got {width}")


def _parse_common(blob: bytes, expect: int) -> tuple[int, int, int]:
    if len(blob) < _COMMON.size:
        raise StageError("truncated stage header")
    stage, width, orig = _COMMON.unpack_from(blob, 0)
    if stage != expect:
        raise StageError(f"expected {STAGE_NAMES[expect]} record, found stage id {stage}")
    _check_width(width)
    return width, orig, _COMMON.size


def _padded_words(data: bytes, width: int) -> np.ndarray:
    pad = (-len(data)) % width
    if pad:
        data = data + b"\x00" * pad
    return np.frombuffer(data, dtype=np.uint8).view(f"<u{width}")


# -- TCMS: two's complement to magnitude-sign --------------------------------

def tcms_encode(data: bytes, width: int) -> bytes:
    _check_width(width)
    u = _padded_words(data, width)
    sign = u >> (8 * width - 1)
    enc = (u << 1) ^ (0 - sign)  # 0 or all-ones, by unsigned wraparound
    return _COMMON.pack(STAGE_TCMS, width, len(data)) + enc.tobytes()


def tcms_decode(blob: bytes) -> bytes:
    width, orig, off = _parse_common(blob, STAGE_TCMS)
    body = blob[off:]
    if len(body) % width or len(body) < orig:
        raise StageError("tcms record length mismatch")
    u = np.frombuffer(body, np.uint8).view(f"<u{width}")
    dec = (u >> 1) ^ (0 - (u & 1))
    return dec.tobytes()[:orig]


# -- BIT: bit-plane transposition ---------------------------------------------

_BIT_CHUNK_BYTES = 1 << 22  # per-slab working set cap for the transposes


def bit_shuffle(data: bytes, width: int) -> bytes:
    _check_width(width)
    orig = len(data)
    tile_bytes = 8 * width * width
    pad = (-orig) % tile_bytes
    padded = data + b"\x00" * pad if pad else data
    nbits = 8 * width
    words = np.frombuffer(padded, np.uint8).view(f"<u{width}").reshape(-1, nbits)
    shifts = np.arange(nbits - 1, -1, -1, dtype=np.uint64)
    step = max(1, _BIT_CHUNK_BYTES // tile_bytes)
    out = [_COMMON.pack(STAGE_BITSHUFFLE, width, orig)]
    for t0 in range(0, words.shape[0], step):
        chunk = words[t0:t0 + step]
        bits = ((chunk[:, None, :].astype(np.uint64) >> shifts[None, :, None]) & 1).astype(np.uint8)
        out.append(np.packbits(bits, axis=-1).tobytes())
    return b"".join(out)


def bit_unshuffle(blob: bytes) -> bytes:
    width, orig, off = _parse_common(blob, STAGE_BITSHUFFLE)
    body = blob[off:]
    tile_bytes = 8 * width * width
    if len(body) % tile_bytes or len(body) < orig:
        raise StageError("bit-shuffle record length mismatch")
    nbits = 8 * width
    planes = np.frombuffer(body, np.uint8).reshape(-1, nbits, width)
    shifts = np.arange(nbits - 1, -1, -1, dtype=np.uint64)
    weights = np.uint64(1) << shifts
    step = max(1, _BIT_CHUNK_BYTES // tile_bytes)
    out = []
    for t0 in range(0, planes.shape[0], step):
        bits = np.unpackbits(planes[t0:t0 + step], axis=-1)
        vals = (bits.astype(np.uint64) * weights[None, :, None]).sum(axis=1)
        out.append(vals.astype(f"<u{width}").tobytes())
    return b"".join(out)[:orig]


# -- RRE / RZE: bitmap reducers ------------------------------------------------

def _bitmap_encode(stage: int, data: bytes, width: int, depth_left: int) -> bytes:
    orig = len(data)
    words = _padded_words(data, width)
    n = words.size
    if stage == STAGE_RRE:
        keep = np.ones(n, dtype=bool)
        if n > 1:
            keep[1:] = words[1:] != words[:-1]
    else:
        keep = words != 0
    bitmap = np.packbits(keep).tobytes() if n else b""
    payload = words[keep].tobytes()
    flag = 0
    if depth_left > 0 and len(bitmap) > _COMMON.size + _BM_EXTRA.size:
        nested = _bitmap_encode(STAGE_RRE, bitmap, 1, depth_left - 1)
        if len(nested) < len(bitmap):
            bitmap, flag = nested, 1
    return (_COMMON.pack(stage, width, orig)
            + _BM_EXTRA.pack(flag, len(bitmap))
            + bitmap + payload)


def _bitmap_decode(stage: int, blob: bytes, depth_left: int) -> bytes:
    width, orig, off = _parse_common(blob, stage)
    if len(blob) < off + _BM_EXTRA.size:
        raise StageError("truncated bitmap record")
    flag, bm_len = _BM_EXTRA.unpack_from(blob, off)
    off += _BM_EXTRA.size
    if flag not in (0, 1):
        raise StageError(f"invalid bitmap flag {flag}")
    if off + bm_len > len(blob):
        raise StageError("bitmap section overruns record")
    bitmap = blob[off:off + bm_len]
    off += bm_len
    if flag:
        if depth_left <= 0:
            raise StageError("bitmap recursion exceeds maximum depth")
        bitmap = _bitmap_decode(STAGE_RRE, bitmap, depth_left - 1)
    n = (orig + ((-orig) % width)) // width
    if len(bitmap) != (n + 7) // 8:
        raise StageError("bitmap length does not match symbol count")
    bits = (np.unpackbits(np.frombuffer(bitmap, np.uint8), count=n).astype(bool)
            if n else np.zeros(0, bool))
    payload = blob[off:]
    if len(payload) % width:
        raise StageError("payload is not a whole number of symbols")
    kept = np.frombuffer(payload, np.uint8).view(f"<u{width}")
    if kept.size != int(bits.sum()):
        raise StageError("payload symbol count does not match bitmap")
    if stage == STAGE_RRE:
        if n and not bits[0]:
            raise StageError("first-symbol bit must be set")
        words = kept[np.cumsum(bits) - 1] if n else kept
    else:
        words = np.zeros(n, kept.dtype)
        words[bits] = kept
    return words.tobytes()[:orig]


def rre_encode(data: bytes, width: int) -> bytes:
    """Drop symbols equal to their predecessor, keeping a (reduced) bitmap."""
    _check_width(width)
    return _bitmap_encode(STAGE_RRE, data, width, MAX_BITMAP_DEPTH)


def rre_decode(blob: bytes) -> bytes:
    return _bitmap_decode(STAGE_RRE, blob, MAX_BITMAP_DEPTH)


def rze_encode(data: bytes, width: int) -> bytes:
    """Drop zero symbols, keeping a (reduced) bitmap."""
    _check_width(width)
    return _bitmap_encode(STAGE_RZE, data, width, MAX_BITMAP_DEPTH)


def rze_decode(blob: bytes) -> bytes:
    return _bitmap_decode(STAGE_RZE, blob, MAX_BITMAP_DEPTH)


# -- canonical Huffman over the byte alphabet ----------------------------------

def _huffman_lengths(hist: np.ndarray) -> np.ndarray:
    lengths = np.zeros(256, np.uint8)
    alive = [(int(f), s, s) for s, f in enumerate(hist) if f > 0]
    if not alive:
        return lengths
    if len(alive) == 1:
        lengths[alive[0][1]] = 1
        return lengths
    heapq.heapify(alive)
    children: dict[int, tuple[int, int]] = {}
    nxt = 256
    while len(alive) > 1:
        f1, _, n1 = heapq.heappop(alive)
        f2, _, n2 = heapq.heappop(alive)
        children[nxt] = (n1, n2)
        heapq.heappush(alive, (f1 + f2, nxt, nxt))
        nxt += 1
    stack = [(alive[0][2], 0)]
    while stack:
        node, depth = stack.pop()
        if node < 256:
            lengths[node] = depth
        else:
            a, b = children[node]
            stack.append((a, depth + 1))
            stack.append((b, depth + 1))
    return lengths


def _canonical_codes(lengths) -> tuple[np.ndarray, list[int]]:
    """Codes per symbol plus the (length, symbol)-sorted symbol list."""
    syms = sorted((s for s in range(256) if lengths[s]), key=lambda s: (lengths[s], s))
    codes = np.zeros(256, np.int64)
    next_code = 0
    prev = 0
    for s in syms:
        length = int(lengths[s])
        next_code <<= length - prev
        codes[s] = next_code
        next_code += 1
        prev = length
    return codes, syms


_HF_CHUNK_SYMBOLS = 1 << 19  # bounds the per-bit expansion arrays


def _pack_symbol_bits(symbols, codes, lens64):
    """MSB-first bit expansion of a run of symbols, as one uint8 per bit."""
    lens = lens64[symbols]
    total = int(lens.sum())
    starts = np.zeros(symbols.size, np.int64)
    np.cumsum(lens[:-1], out=starts[1:])
    within = np.arange(total, dtype=np.int64) - np.repeat(starts, lens)
    crep = np.repeat(codes[symbols], lens)
    lrep = np.repeat(lens, lens)
    return ((crep >> (lrep - 1 - within)) & 1).astype(np.uint8)


def huffman_encode(data: bytes) -> bytes:
    """Canonical Huffman over bytes; the header carries the 256 code lengths."""
    a = np.frombuffer(data, np.uint8)
    n = a.size
    hist = np.bincount(a, minlength=256)
    lengths = _huffman_lengths(hist)
    codes, _ = _canonical_codes(lengths)
    header = _COMMON.pack(STAGE_HUFFMAN, 1, n)
    if n == 0:
        return header + _HF_EXTRA.pack(0) + lengths.tobytes()
    lens64 = lengths.astype(np.int64)
    total = int(lens64[a].sum())
    chunks = []
    pending = np.zeros(0, np.uint8)  # bit remainder carried between slabs
    for s0 in range(0, n, _HF_CHUNK_SYMBOLS):
        bits = _pack_symbol_bits(a[s0:s0 + _HF_CHUNK_SYMBOLS], codes, lens64)
        if pending.size:
            bits = np.concatenate([pending, bits])
        usable = bits.size - (bits.size % 8)
        chunks.append(np.packbits(bits[:usable]).tobytes())
        pending = bits[usable:]
    if pending.size:
        chunks.append(np.packbits(pending).tobytes())
    payload = b"".join(chunks)
    return header + _HF_EXTRA.pack(total) + lengths.tobytes() + payload


def huffman_decode(blob: bytes) -> bytes:
    width, n, off = _parse_common(blob, STAGE_HUFFMAN)
    if width != 1:
        raise StageError("huffman records use width 1")
    if len(blob) < off + _HF_EXTRA.size + 256:
        raise StageError("truncated huffman header")
    (nbits,) = _HF_EXTRA.unpack_from(blob, off)
    off += _HF_EXTRA.size
    lengths = np.frombuffer(blob[off:off + 256], np.uint8)
    off += 256
    payload = blob[off:]
    if n == 0:
        if nbits or payload:
            raise StageError("nonempty payload for an empty huffman record")
        return b""
    if len(payload) != (nbits + 7) // 8:
        raise StageError("huffman payload length mismatch")
    codes, syms = _canonical_codes(lengths)
    if not syms:
        raise StageError("huffman record with an empty code table")
    max_len = int(lengths[syms[-1]])
    kraft = sum(1 << (max_len - int(lengths[s])) for s in syms)
    if kraft > (1 << max_len):
        raise StageError("code-length table violates the prefix bound")

    first_code: dict[int, int] = {}
    first_rank: dict[int, int] = {}
    count: dict[int, int] = {}
    for i, s in enumerate(syms):
        length = int(lengths[s])
        if length not in first_code:
            first_code[length] = int(codes[s])
            first_rank[length] = i
            count[length] = 0
        count[length] += 1

    k = min(max_len, 15)
    lut = [0] * (1 << k)
    for s in syms:
        length = int(lengths[s])
        if length <= k:
            lo = int(codes[s]) << (k - length)
            lut[lo:lo + (1 << (k - length))] = [(s << 8) | length] * (1 << (k - length))

    out = bytearray(n)
    acc = 0
    nb = 0
    p = 0
    plen = len(payload)
    consumed = 0
    mask_k = (1 << k) - 1
    for i in range(n):
        while nb < k and p < plen:
            acc = (acc << 8) | payload[p]
            p += 1
            nb += 8
        key = (acc >> (nb - k)) & mask_k if nb >= k else (acc << (k - nb)) & mask_k
        entry = lut[key]
        if entry:
            length = entry & 0xFF
            sym = entry >> 8
        else:
            while nb < max_len and p < plen:
                acc = (acc << 8) | payload[p]
                p += 1
                nb += 8
            sym = -1
            for length in range(k + 1, max_len + 1):
                if length not in first_code or consumed + length > nbits:
                    continue
                c = (acc >> (nb - length)) if nb >= length else (acc << (length - nb))
                d = c - first_code[length]
                if 0 <= d < count[length]:
                    sym = syms[first_rank[length] + d]
                    break
            if sym < 0:
                raise StageError("invalid huffman code in bitstream")
        consumed += length
        if consumed > nbits or length > nb:
            raise StageError("huffman bitstream overrun")
        nb -= length
        acc &= (1 << nb) - 1
        out[i] = sym
    if consumed != nbits:
        raise StageError("huffman bit count mismatch")
    return bytes(out)


# -- fixed pipelines -----------------------------------------------------------

def pipeline_cr_encode(data: bytes) -> bytes:
    return rze_encode(tcms_encode(rre_encode(huffman_encode(data), 4), 8), 1)


def pipeline_cr_decode(blob: bytes) -> bytes:
    return huffman_decode(rre_decode(tcms_decode(rze_decode(blob))))


def pipeline_tp_encode(data: bytes) -> bytes:
    return rre_encode(bit_shuffle(tcms_encode(data, 1), 1), 1)


def pipeline_tp_decode(blob: bytes) -> bytes:
    return tcms_decode(bit_unshuffle(rre_decode(blob)))
