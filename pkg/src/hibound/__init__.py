"""Error-bounded lossy compression for 2D/3D scientific floating-point grids."""

from .archive import MODE_CR, MODE_TP, compress, decompress, section_sizes
from .errors import (ArchiveError, DegenerateBoundError, FieldError,
                     HiboundError, StageError)
from .field import (ErrorBoundSpec, Field, QualityReport, max_abs_error, mse,
                    psnr, quality_report, resolve_error_bound, size_metrics,
                    value_range)
from .fixtures import generate
from .ordering import LevelMap, inverse_reorder, level_of, reorder
from .predictor import (AnchorGrid, InterpConfig, QuantizedField, decompose,
                        effective_anchor_stride, extract_anchors,
                        interpolate_1d, quantize, reconstruct)
from .tuning import TuneReport, plan_blocks, tune, tune_report

__version__ = "0.1.0"

__all__ = [
    "AnchorGrid", "ArchiveError", "DegenerateBoundError", "ErrorBoundSpec",
    "Field", "FieldError", "HiboundError", "InterpConfig", "LevelMap",
    "MODE_CR", "MODE_TP", "QualityReport", "QuantizedField", "StageError",
    "TuneReport", "compress", "decompose", "decompress",
    "effective_anchor_stride", "extract_anchors", "generate",
    "interpolate_1d", "inverse_reorder", "level_of", "max_abs_error", "mse",
    "plan_blocks", "psnr", "quality_report", "quantize", "reconstruct",
    "reorder", "resolve_error_bound", "section_sizes", "size_metrics",
    "tune", "tune_report", "value_range",
]
