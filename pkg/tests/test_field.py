import math

import numpy as np
import pytest

from hibound import (DegenerateBoundError, ErrorBoundSpec, Field, FieldError,
                     psnr, quality_report, resolve_error_bound, size_metrics,
                     value_range)

from conftest import make_field


def const_field(v, dims=(4, 4, 4)):
    return make_field(np.full(dims, float(v)))


class TestField:
    def test_rejects_nan(self):
        vals = np.ones((2, 2, 2))
        vals[0, 0, 0] = np.nan
        with pytest.raises(FieldError):
            Field(vals)

    def test_rejects_inf(self):
        vals = np.ones((2, 2, 2))
        vals[1, 1, 1] = np.inf
        with pytest.raises(FieldError):
            Field(vals)

    def test_rejects_bad_precision(self):
        with pytest.raises(FieldError):
            Field(np.ones((2, 2, 2), np.int32))

    def test_2d_needs_trailing_one(self):
        with pytest.raises(FieldError):
            Field(np.ones((2, 2, 2)), ndim=2)
        f = Field(np.ones((2, 3, 1)), ndim=2)
        assert f.dims == (2, 3, 1)

    def test_from_bytes_round_trip(self):
        rng = np.random.default_rng(0)
        vals = rng.random((3, 5, 7)).astype(np.float32)
        f = Field(vals.copy())
        g = Field.from_bytes(f.to_bytes(), (3, 5, 7), "f32")
        assert np.array_equal(f.values, g.values)

    def test_from_bytes_size_mismatch(self):
        with pytest.raises(FieldError):
            Field.from_bytes(b"\x00" * 11, (1, 1, 2), "f32")

    def test_immutable(self):
        f = const_field(1.0)
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 2.0


class TestValueRange:
    def test_constant(self):
        assert value_range(const_field(7.0)) == 0.0

    def test_simple(self):
        assert value_range(make_field(np.array([0.0, 1.0, 2.0]).reshape(3, 1, 1))) == 2.0

    def test_negative_span(self):
        # max - min by inspection
        assert value_range(make_field(np.array([-1.5, 3.5]).reshape(2, 1, 1))) == 5.0


class TestResolveErrorBound:
    def test_absolute_passthrough(self):
        assert resolve_error_bound(ErrorBoundSpec("abs", 0.5), const_field(3.0)) == 0.5

    def test_relative_scales_by_range(self):
        f = make_field(np.array([0.0, 100.0]).reshape(2, 1, 1))
        assert resolve_error_bound(ErrorBoundSpec("rel", 1e-2), f) == pytest.approx(1.0, rel=1e-15)

    def test_relative_on_constant_is_degenerate(self):
        with pytest.raises(DegenerateBoundError):
            resolve_error_bound(ErrorBoundSpec("rel", 1e-3), const_field(2.0))

    def test_zero_magnitude_rejected(self):
        with pytest.raises(DegenerateBoundError):
            ErrorBoundSpec("abs", 0.0)

    def test_negative_magnitude_rejected(self):
        with pytest.raises(DegenerateBoundError):
            ErrorBoundSpec("rel", -1.0)


class TestPsnr:
    def test_identical_is_infinite(self):
        f = const_field(4.0)
        assert psnr(f, f) == math.inf

    def test_known_mse_60db(self):
        # range 1, every point off by 1e-3 -> MSE 1e-6 -> 60 dB
        a = make_field(np.array([0.0, 1.0]).reshape(2, 1, 1))
        b = make_field(np.array([1e-3, 1.0 + 1e-3]).reshape(2, 1, 1))
        assert psnr(a, b) == pytest.approx(60.0, abs=1e-9)

    def test_known_mse_46db(self):
        # range 2, MSE 1e-4 -> 20*log10(2) + 40
        a = make_field(np.array([0.0, 2.0]).reshape(2, 1, 1))
        b = make_field(np.array([1e-2, 2.0 + 1e-2]).reshape(2, 1, 1))
        assert psnr(a, b) == pytest.approx(46.0205999132, abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(FieldError):
            psnr(const_field(1.0, (2, 2, 2)), const_field(1.0, (2, 2, 3)))

    def test_swap_changes_only_range_term(self):
        rng = np.random.default_rng(1)
        a = make_field(rng.random((4, 4, 4)) * 3.0)
        b = make_field(rng.random((4, 4, 4)))
        delta = psnr(a, b) - psnr(b, a)
        expected = 20.0 * (math.log10(value_range(a)) - math.log10(value_range(b)))
        assert delta == pytest.approx(expected, abs=1e-12)


class TestSizeMetrics:
    def test_cr_32_gives_bitrate_1(self):
        cr, bitrate = size_metrics(32 * 1000, 1000, 32)
        assert cr == 32.0
        assert bitrate == 1.0

    def test_equal_sizes(self):
        cr, bitrate = size_metrics(4096, 4096, 32)
        assert cr == 1.0 and bitrate == 32.0

    def test_division(self):
        cr, bitrate = size_metrics(4096, 64, 32)
        assert cr == 64.0 and bitrate == 0.5

    def test_zero_compressed(self):
        with pytest.raises(ValueError):
            size_metrics(100, 0, 32)

    def test_bitrate_cr_product(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            o = int(rng.integers(1, 1 << 40))
            c = int(rng.integers(1, 1 << 40))
            bits = int(rng.choice([32, 64]))
            cr, bitrate = size_metrics(o, c, bits)
            assert abs(bitrate * cr - bits) <= 1e-12 * bits


def test_quality_report_consistency():
    a = make_field(np.linspace(0.0, 1.0, 64).reshape(4, 4, 4))
    b = make_field(np.linspace(0.0, 1.0, 64).reshape(4, 4, 4) + 1e-4)
    q = quality_report(a, b, 128)
    assert q.max_abs_error == pytest.approx(1e-4, rel=1e-9)
    assert q.compression_ratio == 64 * 8 / 128
    assert q.bitrate * q.compression_ratio == pytest.approx(64.0, rel=1e-12)
