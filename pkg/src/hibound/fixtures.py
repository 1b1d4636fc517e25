"""Reproducible synthetic fields for benchmarking and tests."""

from __future__ import annotations

import numpy as np

from .errors import FieldError
from .field import Field, _as_dims3

KINDS = ("constant", "affine", "gaussian-mix", "turbulence-like-spectral", "uniform-noise")


def generate(kind: str, dims, seed: int = 0, dtype="f32") -> Field:
    """Build a synthetic field; identical (kind, dims, seed) gives identical bytes."""
    if kind not in KINDS:
        raise FieldError(f"unknown fixture kind {kind!r}; choose from {KINDS}")
    ndim = 2 if len(tuple(dims)) == 2 else 3
    dims3 = _as_dims3(dims)
    dt = np.float32 if str(dtype) in ("f32", "float32") else np.float64
    rng = np.random.default_rng(seed)
    dx, dy, dz = dims3
    x = np.arange(dx, dtype=np.float64)[:, None, None]
    y = np.arange(dy, dtype=np.float64)[None, :, None]
    z = np.arange(dz, dtype=np.float64)[None, None, :]

    if kind == "constant":
        vals = np.full(dims3, 1.0)
    elif kind == "affine":
        c = rng.uniform(-2.0, 2.0, 4)
        vals = c[0] + c[1] * x + c[2] * y + c[3] * z
        vals = np.broadcast_to(vals, dims3).copy()
    elif kind == "gaussian-mix":
        k = 6
        centers = rng.uniform(0.0, 1.0, (k, 3)) * np.array(dims3, np.float64)
        sigmas = rng.uniform(0.08, 0.35, (k, 3)) * np.maximum(np.array(dims3, np.float64), 2.0)
        amps = rng.uniform(0.2, 1.0, k)
        vals = np.zeros(dims3)
        for i in range(k):
            vals += amps[i] * np.exp(
                -0.5 * (((x - centers[i, 0]) / sigmas[i, 0]) ** 2
                        + ((y - centers[i, 1]) / sigmas[i, 1]) ** 2
                        + ((z - centers[i, 2]) / sigmas[i, 2]) ** 2))
    elif kind == "turbulence-like-spectral":
        noise = rng.standard_normal(dims3)
        spec = np.fft.rfftn(noise)
        kx = np.fft.fftfreq(dx)[:, None, None]
        ky = np.fft.fftfreq(dy)[None, :, None]
        kz = np.fft.rfftfreq(dz)[None, None, :]
        k2 = kx * kx + ky * ky + kz * kz
        spec *= 1.0 / (1.0 + k2 / 0.005)
        vals = np.fft.irfftn(spec, s=dims3, axes=(0, 1, 2))
        rng_v = vals.max() - vals.min()
        if rng_v > 0:
            vals = (vals - vals.min()) / rng_v
    else:  # uniform-noise
        vals = rng.random(dims3)

    return Field(np.ascontiguousarray(vals.astype(dt)), ndim=ndim)
