"""Hierarchical spline-interpolation prediction with error-bounded quantization.

Compression seeds a sparse anchor lattice (stride 16, clamped down for small
grids) and then fills the grid level by level: level l predicts every point
whose coordinates first appear on the stride 2^(l-1) lattice, reading only
anchors and points finished by earlier levels or sub-steps. Each predicted
value is quantized against the original in units of 2*eb into a one-byte
code; codes that do not fit are demoted to outliers carrying the exact
value. The working grid always holds reconstructed data, so decompression
replays the identical arithmetic and lands on the same bits.

Two per-level schemes are supported:

  seq1d     sequential 1D passes, one axis at a time (largest axis first),
            each pass predicting the points odd along that axis;
  multidim  three sub-steps predicting points with one, two, then three odd
            coordinates; a k-odd point averages the 1D interpolations along
            its odd axes, restricted to the axes that achieve the highest
            spline order there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ArchiveError, DegenerateBoundError, FieldError
from .field import Field

ANCHOR_STRIDE = 16
OUTLIER_CODE = 0
CODE_ZERO = 128  # code for a quantized error of 0
MAX_Q = 127

CUBIC = "cubic"
LINEAR = "linear"
SEQ1D = "seq1d"
MULTIDIM = "multidim"

SPLINES = (CUBIC, LINEAR)
SCHEMES = (MULTIDIM, SEQ1D)

# (offsets in units of the target stride, weights, achieved order)
_ST_CUBIC = ((-3, -1, 1, 3), (-0.0625, 0.5625, 0.5625, -0.0625), 4)
_ST_QUAD_LO = ((-1, 1, 3), (0.375, 0.75, -0.125), 3)
_ST_QUAD_HI = ((-3, -1, 1), (-0.125, 0.75, 0.375), 3)
_ST_MID = ((-1, 1), (0.5, 0.5), 2)
_ST_TRAIL = ((-3, -1), (-0.5, 1.5), 2)
_ST_COPY = ((-1,), (1.0,), 1)


@dataclass(frozen=True)
class InterpConfig:
    """Per-level (spline, scheme) selection; index 0 holds level 1."""

    levels: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if len(self.levels) != 4:
            raise FieldError("interpolation config must cover 4 levels")
        for spline, scheme in self.levels:
            if spline not in SPLINES or scheme not in SCHEMES:
                raise FieldError(f"bad interpolation config entry ({spline}, {scheme})")

    @classmethod
    def default(cls) -> "InterpConfig":
        return cls(tuple((CUBIC, MULTIDIM) for _ in range(4)))

    def level(self, l: int) -> tuple[str, str]:
        return self.levels[l - 1]

    def replace_level(self, l: int, spline: str, scheme: str) -> "InterpConfig":
        levels = list(self.levels)
        levels[l - 1] = (spline, scheme)
        return InterpConfig(tuple(levels))

    def to_bytes(self) -> bytes:
        out = bytearray()
        for spline, scheme in self.levels:
            out.append((SPLINES.index(spline)) | (SCHEMES.index(scheme) << 1))
        return bytes(out)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "InterpConfig":
        if len(raw) != 4:
            raise ArchiveError("interpolation config must be 4 bytes")
        levels = []
        for b in raw:
            if b & ~0x03:
                raise ArchiveError(f"invalid interpolation config byte 0x{b:02x}")
            levels.append((SPLINES[b & 1], SCHEMES[(b >> 1) & 1]))
        return cls(tuple(levels))


@dataclass(frozen=True)
class AnchorGrid:
    """Losslessly kept values at coordinates divisible by the stride."""

    stride: int
    values: np.ndarray  # anchor subgrid, shape ceil(dims / stride)


@dataclass(frozen=True)
class QuantizedField:
    codes: np.ndarray  # uint8 per grid point; 0 marks an outlier
    outlier_indices: np.ndarray  # uint64 linear indices, ascending
    outlier_values: np.ndarray  # exact originals, field dtype
    anchors: AnchorGrid


def effective_anchor_stride(dims) -> int:
    """Anchor stride for these dims: 16, clamped to a power of two that fits.

    Axes of size 1 do not constrain the stride; they carry no hierarchy.
    """
    nondeg = [d for d in dims if d > 1]
    limit = min(nondeg) if nondeg else 1
    a = 1
    while a * 2 <= min(limit, ANCHOR_STRIDE):
        a *= 2
    return a


def extract_anchors(field: Field, stride: int | None = None) -> AnchorGrid:
    """Copy every point whose coordinates are all divisible by the stride."""
    a = effective_anchor_stride(field.dims) if stride is None else int(stride)
    return AnchorGrid(a, np.ascontiguousarray(field.values[::a, ::a, ::a]))


def quantize(err: float, eb: float) -> tuple[int, bool]:
    """Map one prediction error to a code byte; the flag marks an outlier.

    Codes count the error in units of 2*eb, rounded half away from zero,
    biased by 128. Quantization that would not reconstruct within eb is
    demoted to an outlier.
    """
    if not math.isfinite(err):
        raise ValueError(f"non-finite prediction error {err!r}")
    if not (math.isfinite(eb) and eb > 0):
        raise DegenerateBoundError(f"error bound must be positive and finite, got {eb}")
    q = math.floor(abs(err) / (2.0 * eb) + 0.5)
    if err < 0:
        q = -q
    if q < -MAX_Q or q > MAX_Q or abs(err - 2.0 * eb * q) > eb:
        return OUTLIER_CODE, True
    return q + CODE_ZERO, False


def interpolate_1d(samples, spline: str) -> tuple[float, int]:
    """Predict the value at offset 0 from (offset, value) pairs.

    Offsets are in half-steps of the known lattice: a full symmetric cubic
    stencil sits at (-3, -1, +1, +3). Returns (value, achieved order) where
    the order is the number of stencil samples used (cubic 4, quadratic 3,
    linear 2, copy 1). Missing samples fall back to the widest rule that the
    remaining offsets support; any 2-point rule is exact on affine inputs.
    """
    if spline not in SPLINES:
        raise ValueError(f"unknown spline {spline!r}")
    have = dict(samples)
    if not have:
        raise ValueError("at least one sample is required")
    if spline == CUBIC:
        for offs, wts, order in (_ST_CUBIC, _ST_QUAD_LO, _ST_QUAD_HI):
            if all(o in have for o in offs):
                return sum(w * have[o] for o, w in zip(offs, wts)), order
    near = sorted(have, key=lambda o: (abs(o), o))
    if len(near) >= 2:
        a, b = sorted(near[:2])
        return (b * have[a] - a * have[b]) / (b - a), 2
    return have[near[0]], 1


def _axis_order(dims) -> tuple[int, ...]:
    return tuple(sorted(range(3), key=lambda a: (-dims[a], a)))


def _classify(pos: np.ndarray, d: int, s: int, spline: str):
    """Split target positions along one axis into stencil classes."""
    p1 = pos + s < d
    m3 = pos >= 3 * s
    if spline == LINEAR:
        groups = (
            (_ST_MID, p1),
            (_ST_TRAIL, ~p1 & m3),
            (_ST_COPY, ~p1 & ~m3),
        )
    else:
        p3 = pos + 3 * s < d
        groups = (
            (_ST_CUBIC, m3 & p3),
            (_ST_QUAD_LO, ~m3 & p3),
            (_ST_QUAD_HI, m3 & p1 & ~p3),
            (_ST_MID, ~m3 & p1 & ~p3),
            (_ST_TRAIL, m3 & ~p1),
            (_ST_COPY, ~m3 & ~p1),
        )
    out = []
    for stencil, mask in groups:
        sel = np.flatnonzero(mask)
        if sel.size:
            out.append((sel, stencil))
    return out


def _interp_axis(grid, pos, axis: int, spline: str, s: int, d: int):
    """1D interpolation along one axis for a block of targets.

    Returns the prediction block plus the achieved order per position
    along the interpolation axis.
    """
    shape = tuple(len(p) for p in pos)
    pred = np.empty(shape, np.float64)
    order = np.empty(shape[axis], np.int8)
    base = pos[axis]
    for sel, (offs, wts, o) in _classify(base, d, s, spline):
        tgt = base[sel]
        acc = None
        for off, w in zip(offs, wts):
            idx = [pos[0], pos[1], pos[2]]
            idx[axis] = tgt + off * s
            g = grid[np.ix_(*idx)]
            acc = g * w if acc is None else acc + g * w
        sl = [slice(None)] * 3
        sl[axis] = sel
        pred[tuple(sl)] = acc
        order[sel] = o
    return pred, order


def _predict(grid, pos, interp_axes, spline: str, s: int, dims):
    if len(interp_axes) == 1:
        a = interp_axes[0]
        pred, _ = _interp_axis(grid, pos, a, spline, s, dims[a])
        return pred
    preds = []
    orders = []
    for a in interp_axes:
        p, o = _interp_axis(grid, pos, a, spline, s, dims[a])
        preds.append(p)
        shape = [1, 1, 1]
        shape[a] = o.size
        orders.append(o.reshape(shape))
    best = orders[0]
    for o in orders[1:]:
        best = np.maximum(best, o)
    num = np.zeros(preds[0].shape, np.float64)
    den = np.zeros(preds[0].shape, np.float64)
    for p, o in zip(preds, orders):
        m = o == best
        num += np.where(m, p, 0.0)
        den += m
    return num / den


_ODD_SETS = {1: tuple(combinations(range(3), 1)),
             2: tuple(combinations(range(3), 2)),
             3: tuple(combinations(range(3), 3))}


def _level_steps(dims, level: int, scheme: str):
    """Yield (positions per axis, interpolation axes) for each sub-step."""
    s = 1 << (level - 1)
    if scheme == SEQ1D:
        order = _axis_order(dims)
        for k, a in enumerate(order):
            pos = []
            for j in range(3):
                if j == a:
                    pj = np.arange(s, dims[j], 2 * s, dtype=np.int64)
                elif j in order[:k]:
                    pj = np.arange(0, dims[j], s, dtype=np.int64)
                else:
                    pj = np.arange(0, dims[j], 2 * s, dtype=np.int64)
                pos.append(pj)
            if pos[a].size:
                yield tuple(pos), (a,)
    else:
        for k in (1, 2, 3):
            for odd in _ODD_SETS[k]:
                pos = []
                empty = False
                for j in range(3):
                    if j in odd:
                        pj = np.arange(s, dims[j], 2 * s, dtype=np.int64)
                        if pj.size == 0:
                            empty = True
                            break
                    else:
                        pj = np.arange(0, dims[j], 2 * s, dtype=np.int64)
                    pos.append(pj)
                if not empty:
                    yield tuple(pos), odd


def _run_level(grid, dims, level: int, spline: str, scheme: str, visit):
    """Predict one level's points; visit maps predictions to stored values."""
    s = 1 << (level - 1)
    for pos, axes in _level_steps(dims, level, scheme):
        pred = _predict(grid, pos, axes, spline, s, dims)
        grid[np.ix_(*pos)] = visit(pos, pred)


def _linear_indices(pos, dims):
    return (pos[0][:, None, None] * (dims[1] * dims[2])
            + pos[1][None, :, None] * dims[2]
            + pos[2][None, None, :])


def _quantize_block(orig_block, pred, eb: float, cast32: bool):
    """Vectorized quantization of one block of predictions.

    Returns (reconstructed values, code bytes, in-bound mask). Reconstruction
    is checked against the bound at the field's own precision; failures keep
    the exact original and code 0.
    """
    two_eb = 2.0 * eb
    err = orig_block - pred
    q = np.copysign(np.floor(np.fabs(err) / two_eb + 0.5), err)
    small = np.fabs(q) <= float(MAX_Q)
    recon = pred + two_eb * q
    stored = recon.astype(np.float32).astype(np.float64) if cast32 else recon
    ok = small & (np.fabs(orig_block - stored) <= eb)
    recon = np.where(ok, recon, orig_block)
    codes = np.where(ok, q + float(CODE_ZERO), float(OUTLIER_CODE)).astype(np.uint8)
    return recon, codes, ok


def _decompose(field: Field, eb: float, config: InterpConfig):
    if not (math.isfinite(eb) and eb > 0):
        raise DegenerateBoundError(f"error bound must be positive and finite, got {eb}")
    dims = field.dims
    cast32 = field.dtype == np.float32
    a = effective_anchor_stride(dims)
    top = a.bit_length() - 1
    orig = field.values.astype(np.float64)
    grid = orig.copy()
    codes = np.full(dims, CODE_ZERO, dtype=np.uint8)
    out_idx: list[np.ndarray] = []
    out_val: list[np.ndarray] = []

    def visit(pos, pred):
        ob = orig[np.ix_(*pos)]
        recon, cb, ok = _quantize_block(ob, pred, eb, cast32)
        codes[np.ix_(*pos)] = cb
        if not ok.all():
            bad = ~ok
            lin = _linear_indices(pos, dims)
            out_idx.append(lin[bad].astype(np.uint64))
            out_val.append(ob[bad])
        return recon

    for level in range(top, 0, -1):
        spline, scheme = config.level(level)
        _run_level(grid, dims, level, spline, scheme, visit)

    anchors = AnchorGrid(a, np.ascontiguousarray(field.values[::a, ::a, ::a]))
    if out_idx:
        idx = np.concatenate(out_idx)
        val = np.concatenate(out_val).astype(field.dtype)
        srt = np.argsort(idx, kind="stable")
        idx, val = idx[srt], val[srt]
    else:
        idx = np.zeros(0, np.uint64)
        val = np.zeros(0, field.dtype)
    return QuantizedField(codes, idx, val, anchors), grid


def decompose(field: Field, eb: float, config: InterpConfig) -> QuantizedField:
    """Predict, quantize, and collect anchors/outliers for the whole grid."""
    qf, _ = _decompose(field, eb, config)
    return qf


def reconstruct(quantized: QuantizedField, eb: float, config: InterpConfig,
                dims=None, ndim: int | None = None) -> Field:
    """Replay the prediction hierarchy from codes, anchors, and outliers."""
    if not (math.isfinite(eb) and eb > 0):
        raise DegenerateBoundError(f"error bound must be positive and finite, got {eb}")
    codes = quantized.codes
    if dims is not None and tuple(dims) != codes.shape:
        raise FieldError(f"code array shape {codes.shape} does not match dims {tuple(dims)}")
    dims = codes.shape
    a = quantized.anchors.stride
    top = a.bit_length() - 1
    dtype = quantized.anchors.values.dtype
    oidx = np.asarray(quantized.outlier_indices, np.uint64)
    oval = np.asarray(quantized.outlier_values, np.float64)

    grid = np.zeros(dims, np.float64)
    grid[::a, ::a, ::a] = quantized.anchors.values
    two_eb = 2.0 * eb

    def visit(pos, pred):
        cb = codes[np.ix_(*pos)]
        recon = pred + two_eb * (cb.astype(np.float64) - float(CODE_ZERO))
        zero = cb == OUTLIER_CODE
        if zero.any():
            lin = _linear_indices(pos, dims)[zero].astype(np.uint64)
            j = np.searchsorted(oidx, lin)
            if oidx.size == 0 or (j >= oidx.size).any() or not (oidx[np.minimum(j, oidx.size - 1)] == lin).all():
                raise ArchiveError("outlier marker without a matching outlier entry")
            recon[zero] = oval[j]
        return recon

    for level in range(top, 0, -1):
        spline, scheme = config.level(level)
        _run_level(grid, dims, level, spline, scheme, visit)

    values = grid.astype(dtype)
    if ndim is None:
        ndim = 2 if dims[2] == 1 else 3
    return Field(values, ndim=ndim)
