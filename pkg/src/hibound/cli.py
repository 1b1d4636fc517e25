"""Command-line front end: compress, decompress, analyze, sweep, gen.

Raw inputs are flat little-endian float arrays. The -d flag lists
dimensions slowest-varying first (SDRBench convention): a file produced by
iterating z fastest over a 512x512x512 grid is "-d 512 512 512", and for
2D CESM-style slices "-d 1800 3600". Exit codes: 0 ok, 2 usage, 3 bad
input data, 4 degenerate error bound, 5 corrupt archive, 6 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import archive, fixtures
from .errors import ArchiveError, DegenerateBoundError, FieldError
from .field import ErrorBoundSpec, Field, quality_report

SCHEMA_VERSION = 1

RUN_RECORD_COLUMNS = [
    "schema", "dataset", "dx", "dy", "dz", "precision", "eb_mode", "eb_magnitude",
    "abs_eb", "mode", "original_bytes", "compressed_bytes", "cr", "bitrate",
    "psnr_db", "max_abs_error", "mse", "compress_s", "decompress_s",
    "header_bytes", "anchor_bytes", "outlier_bytes", "stream_bytes",
    "huffman_table_bytes",
]

# convenience presets for well-known raw files; no downloading is done here
DATASET_PRESETS = {
    "nyx-temperature": ("f32", (512, 512, 512)),
    "nyx": ("f32", (512, 512, 512)),
    "miranda": ("f64", (256, 384, 384)),
    "jhtdb": ("f32", (512, 512, 512)),
    "cesm-atm": ("f32", (1800, 3600)),
}


@dataclass
class RunRecord:
    schema: int
    dataset: str
    dx: int
    dy: int
    dz: int
    precision: str
    eb_mode: str
    eb_magnitude: float
    abs_eb: float
    mode: str
    original_bytes: int
    compressed_bytes: int
    cr: float
    bitrate: float
    psnr_db: float
    max_abs_error: float
    mse: float
    compress_s: float | None
    decompress_s: float | None
    header_bytes: int
    anchor_bytes: int
    outlier_bytes: int
    stream_bytes: int
    huffman_table_bytes: int

    def csv_row(self) -> str:
        vals = asdict(self)
        out = []
        for col in RUN_RECORD_COLUMNS:
            v = vals[col]
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(_fmt_float(v))
            else:
                out.append(str(v))
        return ",".join(out)

    def json_line(self) -> str:
        vals = asdict(self)
        for k, v in vals.items():
            if isinstance(v, float) and math.isinf(v):
                vals[k] = "inf" if v > 0 else "-inf"
        return json.dumps(vals, sort_keys=True)


def _fmt_float(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".10g")


def _parse_dims(values):
    if values is None or len(values) not in (2, 3):
        return None
    return tuple(values)


def _load_raw(path: str, dtype: str, dims) -> Field:
    with open(path, "rb") as fh:
        data = fh.read()
    return Field.from_bytes(data, dims, dtype)


def _input_spec(args, parser):
    dtype = args.type
    dims = _parse_dims(args.dims)
    if args.dataset:
        preset = DATASET_PRESETS.get(args.dataset)
        if preset is None:
            parser.error(f"unknown dataset preset {args.dataset!r}")
        dtype = dtype or preset[0]
        dims = dims or preset[1]
    if dtype is None:
        parser.error("element type required: -t f32|f64")
    if dims is None:
        parser.error("dimensions required: -d D1 D2 [D3] (slowest first)")
    return dtype, dims


def _record_from_run(dataset, field, spec, abs_eb, mode, blob, recon,
                     compress_s, decompress_s) -> RunRecord:
    q = quality_report(field, recon, len(blob))
    sec = archive.section_sizes(blob)
    return RunRecord(
        schema=SCHEMA_VERSION,
        dataset=dataset,
        dx=field.dims[0], dy=field.dims[1], dz=field.dims[2],
        precision="f32" if field.dtype == np.float32 else "f64",
        eb_mode=spec.mode, eb_magnitude=spec.magnitude, abs_eb=abs_eb,
        mode=mode,
        original_bytes=field.count * field.dtype.itemsize,
        compressed_bytes=len(blob),
        cr=q.compression_ratio, bitrate=q.bitrate,
        psnr_db=q.psnr, max_abs_error=q.max_abs_error, mse=q.mse,
        compress_s=compress_s, decompress_s=decompress_s,
        header_bytes=sec["header_bytes"], anchor_bytes=sec["anchor_bytes"],
        outlier_bytes=sec["outlier_bytes"], stream_bytes=sec["stream_bytes"],
        huffman_table_bytes=sec["huffman_table_bytes"],
    )


# -- commands -----------------------------------------------------------------

def _cmd_compress(args, parser) -> int:
    dtype, dims = _input_spec(args, parser)
    field = _load_raw(args.input, dtype, dims)
    spec = ErrorBoundSpec(args.error_mode, args.error_bound)
    t0 = time.perf_counter()
    blob = archive.compress(field, spec, args.mode)
    dt = time.perf_counter() - t0
    with open(args.output, "wb") as fh:
        fh.write(blob)
    raw_bytes = field.count * field.dtype.itemsize
    print(f"{args.output}: {raw_bytes} -> {len(blob)} bytes "
          f"(CR {raw_bytes / len(blob):.3f}, {dt:.3f} s)")
    return 0


def _cmd_decompress(args, parser) -> int:
    with open(args.input, "rb") as fh:
        blob = fh.read()
    t0 = time.perf_counter()
    field = archive.decompress(blob)
    dt = time.perf_counter() - t0
    with open(args.output, "wb") as fh:
        fh.write(field.to_bytes())
    print(f"{args.output}: dims {field.dims} {field.dtype.name} ({dt:.3f} s)")
    return 0


def _cmd_analyze(args, parser) -> int:
    with open(args.archive, "rb") as fh:
        blob = fh.read()
    sec = archive.section_sizes(blob)
    dtype = "f32" if sec["precision"] == 4 else "f64"
    dims = sec["dims"] if sec["ndim"] == 3 else sec["dims"][:2]
    field = _load_raw(args.input, dtype, dims)
    t0 = time.perf_counter()
    recon = archive.decompress(blob)
    dt = time.perf_counter() - t0
    spec = ErrorBoundSpec("abs", sec["abs_eb"])
    rec = _record_from_run(args.input, field, spec, sec["abs_eb"], sec["mode"],
                           blob, recon, None, dt)
    if args.format == "json":
        print(rec.json_line())
    else:
        print(",".join(RUN_RECORD_COLUMNS))
        print(rec.csv_row())
    return 0


def _cmd_sweep(args, parser) -> int:
    dtype, dims = _input_spec(args, parser)
    if not args.error_bounds:
        parser.error("at least one error bound is required")
    field = _load_raw(args.input, dtype, dims)
    records = []
    for eb_mag in args.error_bounds:
        for mode in args.modes:
            spec = ErrorBoundSpec(args.error_mode, eb_mag)
            t0 = time.perf_counter()
            blob = archive.compress(field, spec, mode)
            t1 = time.perf_counter()
            recon = archive.decompress(blob)
            t2 = time.perf_counter()
            sec = archive.section_sizes(blob)
            rec = _record_from_run(args.input, field, spec, sec["abs_eb"], mode,
                                   blob, recon, t1 - t0, t2 - t1)
            records.append(rec)
            print(f"eb={eb_mag:g} mode={mode}: CR {rec.cr:.3f} "
                  f"bitrate {rec.bitrate:.4f} PSNR {_fmt_float(rec.psnr_db)}")
    with open(args.csv, "w") as fh:
        fh.write(",".join(RUN_RECORD_COLUMNS) + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
    if args.svg:
        series = {}
        for rec in records:
            series.setdefault(rec.mode, []).append((rec.bitrate, rec.psnr_db))
        with open(args.svg, "w") as fh:
            fh.write(rate_distortion_svg(series))
    return 0


def _cmd_gen(args, parser) -> int:
    dims = _parse_dims(args.dims)
    if dims is None:
        parser.error("dimensions required: -d D1 D2 [D3]")
    field = fixtures.generate(args.kind, dims, seed=args.seed, dtype=args.type)
    with open(args.output, "wb") as fh:
        fh.write(field.to_bytes())
    print(f"{args.output}: {args.kind} {dims} {args.type} seed {args.seed}")
    return 0


# -- SVG rate-distortion chart --------------------------------------------------

_SERIES_COLORS = {"cr": "#1f77b4", "tp": "#d62728"}


def rate_distortion_svg(series: dict[str, list[tuple[float, float]]],
                        width: int = 640, height: int = 480) -> str:
    """Minimal deterministic SVG 1.1 line chart of PSNR over bitrate."""
    pts = [(x, y) for vals in series.values() for x, y in vals if math.isfinite(y)]
    ml, mr, mt, mb = 60, 20, 20, 45
    if pts:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (width - ml - mr)

    def sy(y):
        return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>',
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{height - mb + 16}" font-size="11" '
                   f'text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{ml - 6}" y="{sy(yv):.1f}" font-size="11" '
                   f'text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{(ml + width - mr) / 2:.1f}" y="{height - 8}" font-size="13" '
               f'text-anchor="middle">bitrate (bits/element)</text>')
    out.append(f'<text x="14" y="{(mt + height - mb) / 2:.1f}" font-size="13" '
               f'text-anchor="middle" transform="rotate(-90 14 {(mt + height - mb) / 2:.1f})">'
               f'PSNR (dB)</text>')
    for name in sorted(series):
        finite = [(x, y) for x, y in series[name] if math.isfinite(y)]
        if not finite:
            continue
        finite.sort()
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in finite)
        color = _SERIES_COLORS.get(name, "#2ca02c")
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in finite:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hibound",
        description="Error-bounded lossy compression for 2D/3D scientific grids.",
        epilog="Dimensions are listed slowest-varying first, e.g. -d 512 512 512 "
               "for a z-fastest 512^3 volume.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_input_flags(sp, need_eb=True):
        sp.add_argument("-i", "--input", required=True, help="input raw file")
        sp.add_argument("-t", "--type", choices=("f32", "f64"), help="element type")
        sp.add_argument("-d", "--dims", type=int, nargs="+", metavar="D",
                        help="dimensions, slowest first (2 or 3 values)")
        sp.add_argument("--dataset", help="named preset supplying -t/-d defaults")
        if need_eb:
            sp.add_argument("-m", "--error-mode", choices=("abs", "rel"), required=True,
                            help="absolute or value-range-relative bound")

    c = sub.add_parser("compress", help="compress a raw field into an archive")
    add_input_flags(c)
    c.add_argument("-e", "--error-bound", type=float, required=True)
    c.add_argument("--mode", choices=("cr", "tp"), default="cr",
                   help="lossless pipeline: ratio- or throughput-preferred")
    c.add_argument("-o", "--output", required=True)

    d = sub.add_parser("decompress", help="decode an archive back to raw bytes")
    d.add_argument("-i", "--input", required=True)
    d.add_argument("-o", "--output", required=True)

    a = sub.add_parser("analyze", help="metrics for an archive against its original")
    a.add_argument("-i", "--input", required=True, help="original raw file")
    a.add_argument("-a", "--archive", required=True)
    a.add_argument("--format", choices=("csv", "json"), default="csv")

    s = sub.add_parser("sweep", help="rate-distortion sweep over error bounds")
    add_input_flags(s)
    s.add_argument("-e", "--error-bounds", type=float, nargs="+", metavar="EB")
    s.add_argument("--modes", nargs="+", choices=("cr", "tp"), default=["cr", "tp"])
    s.add_argument("--csv", required=True)
    s.add_argument("--svg")

    g = sub.add_parser("gen", help="write a synthetic fixture")
    g.add_argument("--kind", choices=fixtures.KINDS, required=True)
    g.add_argument("-d", "--dims", type=int, nargs="+", metavar="D", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-t", "--type", choices=("f32", "f64"), default="f32")
    g.add_argument("-o", "--output", required=True)

    return p


_COMMANDS = {
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "analyze": _cmd_analyze,
    "sweep": _cmd_sweep,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except DegenerateBoundError as exc:
        print(f"error: degenerate error bound: {exc}", file=sys.stderr)
        return 4
    except ArchiveError as exc:
        print(f"error: corrupt archive: {exc}", file=sys.stderr)
        return 5
    except FieldError as exc:
        print(f"error: bad input data: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
