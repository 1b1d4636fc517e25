"""Per-level interpolation configuration search on sampled blocks.

The tuner pulls uniformly spaced, non-overlapping 17^3 blocks (about 0.2%
of the grid; a single whole-field block when the grid is too small), then
walks the level hierarchy top-down. At each level every (spline, scheme)
candidate runs a real quantize-and-reconstruct trial on each block, the
absolute prediction errors are summed in fixed block order, and the argmin
wins; ties fall to cubic before linear and multidim before seq1d. Winning
levels stay applied while lower levels are tested, so trials see the same
reconstructed stencils the compressor will.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .field import Field
from .predictor import (CUBIC, LINEAR, MULTIDIM, SEQ1D, InterpConfig,
                        _quantize_block, _run_level, effective_anchor_stride)

BLOCK_EDGE = 17
SAMPLE_FRACTION = 0.002

CONFIG_CHOICES = ((CUBIC, MULTIDIM), (CUBIC, SEQ1D), (LINEAR, MULTIDIM), (LINEAR, SEQ1D))


def worker_count() -> int:
    """Worker cap from HIBOUND_THREADS; defaults to 1."""
    env = os.environ.get("HIBOUND_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TuneReport:
    anchor_stride: int
    block_origins: tuple[tuple[int, int, int], ...]
    block_shape: tuple[int, int, int]
    level_errors: dict[int, dict[tuple[str, str], float]]
    chosen: InterpConfig

    def to_json(self) -> str:
        levels = {}
        for level in sorted(self.level_errors, reverse=True):
            errs = self.level_errors[level]
            levels[str(level)] = {
                "errors": {f"{sp}-{sc}": e for (sp, sc), e in errs.items()},
                "chosen": "-".join(self.chosen.level(level)),
            }
        doc = {
            "anchor_stride": self.anchor_stride,
            "block_shape": list(self.block_shape),
            "block_origins": [list(o) for o in self.block_origins],
            "levels": levels,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def plan_blocks(dims) -> tuple[list[tuple[int, int, int]], tuple[int, int, int]]:
    """Deterministic sample-block origins and the common block shape.

    Origins sit on the 16-stride lattice, evenly spaced, and never overlap;
    the block count targets SAMPLE_FRACTION of the grid volume.
    """
    dims = tuple(int(d) for d in dims)
    nondeg = [d for d in dims if d > 1]
    if not nondeg or min(nondeg) < BLOCK_EDGE:
        return [(0, 0, 0)], dims
    shape = tuple(BLOCK_EDGE if d > 1 else 1 for d in dims)
    per_axis = []
    for d, b in zip(dims, shape):
        if d == 1:
            per_axis.append([0])
        else:
            per_axis.append(list(range(0, d - b + 1, 16)))
    candidates = [(x, y, z) for x in per_axis[0] for y in per_axis[1] for z in per_axis[2]]
    m = len(candidates)
    total = dims[0] * dims[1] * dims[2]
    block_points = shape[0] * shape[1] * shape[2]
    want = min(m, _ceil_blocks(total, block_points))
    if want == 1:
        picked = [candidates[m // 2]]
    else:
        idx = sorted({(i * (m - 1)) // (want - 1) for i in range(want)})
        picked = [candidates[i] for i in idx]
    kept: list[tuple[int, int, int]] = []
    for o in picked:
        if all(any(abs(o[a] - p[a]) >= shape[a] for a in range(3)) for p in kept):
            kept.append(o)
    return kept, shape


def _ceil_blocks(total_points: int, block_points: int) -> int:
    # exact ceil(0.002 * total / block_points) in integers
    return max(1, -(-(total_points * 2) // (block_points * 1000)))


def tune_report(field: Field, eb: float) -> TuneReport:
    dims = field.dims
    origins, shape = plan_blocks(dims)
    cast32 = field.dtype == np.float32
    origs = []
    for o in origins:
        sl = tuple(slice(o[a], o[a] + shape[a]) for a in range(3))
        origs.append(np.ascontiguousarray(field.values[sl]).astype(np.float64))
    stride = effective_anchor_stride(shape)
    top = stride.bit_length() - 1
    states = [b.copy() for b in origs]
    chosen = InterpConfig.default()
    level_errors: dict[int, dict[tuple[str, str], float]] = {}

    workers = worker_count()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 and len(origs) > 1 else None
    try:
        for level in range(top, 0, -1):
            errs = []
            grids = []
            for spline, scheme in CONFIG_CHOICES:
                trial_grids = [g.copy() for g in states]

                def run(bi, _spline=spline, _scheme=scheme, _grids=trial_grids):
                    return _trial_level(_grids[bi], origs[bi], level, _spline, _scheme, eb, cast32)

                if pool is not None:
                    block_errs = list(pool.map(run, range(len(origs))))
                else:
                    block_errs = [run(bi) for bi in range(len(origs))]
                errs.append(float(sum(block_errs)))
                grids.append(trial_grids)
            best = min(range(len(CONFIG_CHOICES)), key=lambda i: (errs[i], i))
            level_errors[level] = {cfg: errs[i] for i, cfg in enumerate(CONFIG_CHOICES)}
            chosen = chosen.replace_level(level, *CONFIG_CHOICES[best])
            states = grids[best]
    finally:
        if pool is not None:
            pool.shutdown()
    return TuneReport(
        anchor_stride=stride,
        block_origins=tuple(origins),
        block_shape=shape,
        level_errors=level_errors,
        chosen=chosen,
    )


def _trial_level(grid, orig, level, spline, scheme, eb, cast32) -> float:
    """Run one level on one block, returning the summed |prediction error|."""
    total = 0.0

    def visit(pos, pred):
        nonlocal total
        ob = orig[np.ix_(*pos)]
        total += float(np.fabs(ob - pred).sum())
        recon, _, _ = _quantize_block(ob, pred, eb, cast32)
        return recon

    _run_level(grid, orig.shape, level, spline, scheme, visit)
    return total


def tune(field: Field, eb: float) -> InterpConfig:
    """Pick the per-level interpolation configuration for this field."""
    return tune_report(field, eb).chosen
