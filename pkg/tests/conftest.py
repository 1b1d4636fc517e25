import numpy as np
import pytest

from hibound import Field, fixtures


@pytest.fixture(scope="session")
def gauss64():
    return fixtures.generate("gaussian-mix", (64, 64, 64), seed=7, dtype="f32")


@pytest.fixture(scope="session")
def gauss32_f64():
    return fixtures.generate("gaussian-mix", (32, 32, 32), seed=21, dtype="f64")


@pytest.fixture(scope="session")
def affine64():
    return fixtures.generate("affine", (64, 64, 64), seed=11, dtype="f32")


def make_field(values, ndim=3):
    return Field(np.ascontiguousarray(np.asarray(values, np.float64)), ndim=ndim)
