"""Grid data model, error-bound resolution, and quality/size metrics.

A Field is an immutable 2D or 3D scalar grid. Dimensions are listed
slowest-varying first and the values are row-major, so the last listed
dimension is the fastest one. 2D data rides along as (d0, d1, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBoundError, FieldError

ABS = "abs"
REL = "rel"

_DTYPES = {"f32": np.float32, "f64": np.float64}


def _as_dims3(dims) -> tuple[int, int, int]:
    dims = tuple(int(d) for d in dims)
    if len(dims) == 2:
        dims = dims + (1,)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise FieldError(f"dimensions must be 2 or 3 positive integers, got {dims}")
    return dims


@dataclass(frozen=True)
class Field:
    """An immutable floating-point grid with explicit dimensions."""

    values: np.ndarray
    ndim: int = 3

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 3:
            raise FieldError("values must be a 3-axis ndarray (trailing axes of size 1 are fine)")
        if v.dtype not in (np.float32, np.float64):
            raise FieldError(f"unsupported precision {v.dtype}; expected float32 or float64")
        if self.ndim not in (2, 3):
            raise FieldError(f"ndim must be 2 or 3, got {self.ndim}")
        if self.ndim == 2 and v.shape[2] != 1:
            raise FieldError("a 2D field must carry a trailing axis of size 1")
        if any(d < 1 for d in v.shape):
            raise FieldError(f"empty dimension in {v.shape}")
        if not np.isfinite(v).all():
            raise FieldError("field contains NaN or Inf values")
        v.flags.writeable = False

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def element_bits(self) -> int:
        return self.values.dtype.itemsize * 8

    @property
    def count(self) -> int:
        return self.values.size

    @classmethod
    def from_array(cls, arr, dims=None, ndim=None) -> "Field":
        a = np.asarray(arr)
        if dims is None:
            dims = a.shape
        dims3 = _as_dims3(dims)
        if ndim is None:
            ndim = len(tuple(dims)) if dims is not None else 3
            ndim = 2 if ndim == 2 else 3
        if a.size != dims3[0] * dims3[1] * dims3[2]:
            raise FieldError(f"value count {a.size} does not match dims {dims3}")
        return cls(np.ascontiguousarray(a.reshape(dims3)), ndim=ndim)

    @classmethod
    def from_bytes(cls, data: bytes, dims, dtype) -> "Field":
        """Parse a raw little-endian binary dump (dims slowest-first)."""
        if isinstance(dtype, str):
            if dtype not in _DTYPES:
                raise FieldError(f"unknown element type {dtype!r}; expected f32 or f64")
            dtype = _DTYPES[dtype]
        dt = np.dtype(dtype).newbyteorder("<")
        dims3 = _as_dims3(dims)
        n = dims3[0] * dims3[1] * dims3[2]
        if len(data) != n * dt.itemsize:
            raise FieldError(
                f"raw size {len(data)} B does not match dims {dims3} at {dt.itemsize} B/elem"
            )
        arr = np.frombuffer(data, dtype=dt).astype(dt.newbyteorder("=")).reshape(dims3)
        return cls(arr, ndim=2 if len(tuple(dims)) == 2 else 3)

    def to_bytes(self) -> bytes:
        le = self.values.dtype.newbyteorder("<")
        return self.values.astype(le, copy=False).tobytes()


@dataclass(frozen=True)
class ErrorBoundSpec:
    """User-facing error bound: absolute, or relative to the value range."""

    mode: str
    magnitude: float

    def __post_init__(self):
        if self.mode not in (ABS, REL):
            raise DegenerateBoundError(f"error-bound mode must be {ABS!r} or {REL!r}")
        if not (math.isfinite(self.magnitude) and self.magnitude > 0):
            raise DegenerateBoundError(f"error-bound magnitude must be positive, got {self.magnitude}")


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    max_abs_error: float
    mse: float
    compression_ratio: float
    bitrate: float


def value_range(field: Field) -> float:
    """max - min over all values; 0 for a constant field."""
    v = field.values
    return float(v.max() - v.min())


def resolve_error_bound(spec: ErrorBoundSpec, field: Field) -> float:
    """Turn an error-bound spec into the uniform absolute bound for this field."""
    if spec.mode == ABS:
        return float(spec.magnitude)
    rng = value_range(field)
    if rng == 0.0:
        raise DegenerateBoundError("relative error bound on a constant field (value range 0)")
    return float(spec.magnitude) * rng


def mse(original: Field, reconstructed: Field) -> float:
    if original.dims != reconstructed.dims or original.dtype != reconstructed.dtype:
        raise FieldError("fields differ in dimensions or precision")
    d = original.values.astype(np.float64) - reconstructed.values.astype(np.float64)
    return float(np.mean(d * d))


def max_abs_error(original: Field, reconstructed: Field) -> float:
    if original.dims != reconstructed.dims or original.dtype != reconstructed.dtype:
        raise FieldError("fields differ in dimensions or precision")
    d = original.values.astype(np.float64) - reconstructed.values.astype(np.float64)
    return float(np.max(np.abs(d))) if d.size else 0.0


def psnr(original: Field, reconstructed: Field) -> float:
    """20*log10(range of the original) - 10*log10(MSE); +inf for identical inputs."""
    e = mse(original, reconstructed)
    if e == 0.0:
        return math.inf
    rng = value_range(original)
    if rng == 0.0:
        return -math.inf
    return 20.0 * math.log10(rng) - 10.0 * math.log10(e)


def size_metrics(original_bytes: int, compressed_bytes: int, element_bits: int) -> tuple[float, float]:
    """(compression ratio, bitrate in bits per element)."""
    if original_bytes <= 0 or compressed_bytes <= 0:
        raise ValueError("byte counts must be positive")
    cr = original_bytes / compressed_bytes
    return cr, element_bits / cr


def quality_report(original: Field, reconstructed: Field, compressed_bytes: int) -> QualityReport:
    original_bytes = original.count * original.dtype.itemsize
    cr, bitrate = size_metrics(original_bytes, compressed_bytes, original.element_bits)
    return QualityReport(
        psnr=psnr(original, reconstructed),
        max_abs_error=max_abs_error(original, reconstructed),
        mse=mse(original, reconstructed),
        compression_ratio=cr,
        bitrate=bitrate,
    )
