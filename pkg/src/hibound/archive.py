"""End-to-end compression and the self-describing archive container.

Layout, all integers little-endian:

    magic "CSZH" | version u8 | mode u8 | precision u8 | ndim u8
    anchor_stride u8 | raw_escape u8 | interp config (4 bytes)
    dims 3 x u64 | absolute eb f64
    anchor count u64, anchor values (count x precision)
    outlier count u64, (index u64, value precision) pairs sorted by index
    stream length u64, encoded (or raw, when escaped) code sequence

The stream holds the level-grouped code sequence after the mode's lossless
pipeline; if the pipeline would expand past the raw code array, the codes
are stored raw and the escape flag is set.
"""

from __future__ import annotations

import struct

import numpy as np

from . import stages
from .errors import ArchiveError
from .field import ErrorBoundSpec, Field, resolve_error_bound
from .ordering import LevelMap, inverse_reorder, reorder
from .predictor import AnchorGrid, InterpConfig, QuantizedField, decompose, reconstruct
from .tuning import tune

MAGIC = b"CSZH"
VERSION = 1
MODE_CR = "cr"
MODE_TP = "tp"
_MODE_BYTE = {MODE_CR: 0, MODE_TP: 1}
_MODE_NAME = {0: MODE_CR, 1: MODE_TP}

_FIXED = struct.Struct("<4sBBBBBB4sQQQd")
_U64 = struct.Struct("<Q")


def compress(field: Field, spec: ErrorBoundSpec, mode: str = MODE_CR) -> bytes:
    """Compress a field under the given error bound; returns archive bytes."""
    if mode not in _MODE_BYTE:
        raise ValueError(f"mode must be {MODE_CR!r} or {MODE_TP!r}, got {mode!r}")
    eb = resolve_error_bound(spec, field)
    config = tune(field, eb)
    qf = decompose(field, eb, config)
    lmap = LevelMap(field.dims, qf.anchors.stride)
    seq = reorder(qf.codes, lmap)
    raw = seq.tobytes()
    if mode == MODE_CR:
        encoded = stages.pipeline_cr_encode(raw)
    else:
        encoded = stages.pipeline_tp_encode(raw)
    escape = len(encoded) > len(raw)
    stream = raw if escape else encoded

    le = field.dtype.newbyteorder("<")
    parts = [
        _FIXED.pack(MAGIC, VERSION, _MODE_BYTE[mode], field.dtype.itemsize, field.ndim,
                    qf.anchors.stride, int(escape), config.to_bytes(),
                    field.dims[0], field.dims[1], field.dims[2], eb),
        _U64.pack(qf.anchors.values.size),
        qf.anchors.values.astype(le, copy=False).tobytes(),
        _U64.pack(qf.outlier_indices.size),
    ]
    if qf.outlier_indices.size:
        pairs = np.zeros(qf.outlier_indices.size, dtype=[("i", "<u8"), ("v", le)])
        pairs["i"] = qf.outlier_indices
        pairs["v"] = qf.outlier_values
        parts.append(pairs.tobytes())
    parts.append(_U64.pack(len(stream)))
    parts.append(stream)
    return b"".join(parts)


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if n < 0 or self.off + n > len(self.blob):
            raise ArchiveError(f"archive truncated in {what}")
        out = self.blob[self.off:self.off + n]
        self.off += n
        return out

    def u64(self, what: str) -> int:
        return _U64.unpack(self.take(8, what))[0]


def _parse_header(cur: _Cursor):
    raw = cur.take(_FIXED.size, "header")
    magic, version, mode_b, precision, ndim, stride, escape, cfg_raw, dx, dy, dz, eb = _FIXED.unpack(raw)
    if magic != MAGIC:
        raise ArchiveError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ArchiveError(f"unsupported archive version {version}")
    if mode_b not in _MODE_NAME:
        raise ArchiveError(f"unknown mode byte {mode_b}")
    if precision not in (4, 8):
        raise ArchiveError(f"unsupported precision {precision}")
    if ndim not in (2, 3):
        raise ArchiveError(f"unsupported ndim {ndim}")
    if stride < 1 or stride > 16 or stride & (stride - 1):
        raise ArchiveError(f"invalid anchor stride {stride}")
    if escape not in (0, 1):
        raise ArchiveError(f"invalid escape flag {escape}")
    dims = (dx, dy, dz)
    if any(d < 1 for d in dims):
        raise ArchiveError(f"invalid dims {dims}")
    if ndim == 2 and dz != 1:
        raise ArchiveError("2D archive must carry a trailing dimension of 1")
    if not (np.isfinite(eb) and eb > 0):
        raise ArchiveError(f"invalid error bound {eb}")
    config = InterpConfig.from_bytes(cfg_raw)
    return _MODE_NAME[mode_b], precision, ndim, stride, bool(escape), config, dims, eb


def decompress(blob: bytes) -> Field:
    """Decode an archive back into a field."""
    cur = _Cursor(blob)
    mode, precision, ndim, stride, escape, config, dims, eb = _parse_header(cur)
    n = dims[0] * dims[1] * dims[2]
    le = np.dtype(np.float32 if precision == 4 else np.float64).newbyteorder("<")

    anchor_shape = tuple(-(-d // stride) for d in dims)
    anchor_count = cur.u64("anchor count")
    expected = anchor_shape[0] * anchor_shape[1] * anchor_shape[2]
    if anchor_count != expected:
        raise ArchiveError(f"anchor count {anchor_count} does not match dims (expected {expected})")
    anchors = np.frombuffer(cur.take(anchor_count * precision, "anchor values"), le)
    anchors = anchors.astype(le.newbyteorder("=")).reshape(anchor_shape)

    outlier_count = cur.u64("outlier count")
    if outlier_count > n:
        raise ArchiveError(f"outlier count {outlier_count} exceeds point count {n}")
    if outlier_count:
        pairs = np.frombuffer(cur.take(outlier_count * (8 + precision), "outlier section"),
                              dtype=[("i", "<u8"), ("v", le)])
        oidx = pairs["i"].astype(np.uint64)
        oval = pairs["v"].astype(le.newbyteorder("="))
        if (oidx >= n).any():
            raise ArchiveError("outlier index out of range")
        if oidx.size > 1 and (oidx[1:] <= oidx[:-1]).any():
            raise ArchiveError("outlier indices not strictly ascending")
    else:
        oidx = np.zeros(0, np.uint64)
        oval = np.zeros(0, le.newbyteorder("="))

    stream_len = cur.u64("stream length")
    stream = cur.take(stream_len, "code stream")
    if cur.off != len(blob):
        raise ArchiveError(f"{len(blob) - cur.off} trailing bytes after code stream")

    if escape:
        raw = stream
    elif mode == MODE_CR:
        raw = stages.pipeline_cr_decode(stream)
    else:
        raw = stages.pipeline_tp_decode(stream)
    if len(raw) != n:
        raise ArchiveError(f"decoded code sequence has {len(raw)} bytes, expected {n}")

    lmap = LevelMap(dims, stride)
    codes = inverse_reorder(np.frombuffer(raw, np.uint8), lmap)
    if int((codes == 0).sum()) != outlier_count:
        raise ArchiveError("outlier markers do not match the outlier section")
    qf = QuantizedField(codes, oidx, oval, AnchorGrid(stride, anchors))
    return reconstruct(qf, eb, config, dims=dims, ndim=ndim)


def section_sizes(blob: bytes) -> dict:
    """Byte-level breakdown of an archive, without decoding the stream."""
    cur = _Cursor(blob)
    mode, precision, ndim, stride, escape, config, dims, eb = _parse_header(cur)
    anchor_count = cur.u64("anchor count")
    cur.take(anchor_count * precision, "anchor values")
    outlier_count = cur.u64("outlier count")
    cur.take(outlier_count * (8 + precision), "outlier section")
    stream_len = cur.u64("stream length")
    cur.take(stream_len, "code stream")
    return {
        "mode": mode,
        "precision": precision,
        "ndim": ndim,
        "dims": dims,
        "abs_eb": eb,
        "anchor_stride": stride,
        "raw_escape": escape,
        "header_bytes": _FIXED.size + 3 * 8,
        "anchor_count": anchor_count,
        "anchor_bytes": anchor_count * precision,
        "outlier_count": outlier_count,
        "outlier_bytes": outlier_count * (8 + precision),
        "stream_bytes": stream_len,
        "total_bytes": len(blob),
        "huffman_table_bytes": 0 if (escape or mode != MODE_CR) else 256,
    }
