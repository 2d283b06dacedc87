from pathlib import Path

import numpy as np
import pytest

from fovkit.core_types import ComplexImage, GridDims, SupportMask
from fovkit.phantom import quadrant_removed_mask


def write_rc(tmp_path: Path, rc_contents: str, monkeypatch) -> None:
    rc_dir = tmp_path / "fovkit"
    rc_dir.mkdir()
    with open(rc_dir / "fovkitrc", "w") as rc_f:
        rc_f.write(rc_contents)

    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path))


def random_support(rng: np.random.Generator, dims: GridDims) -> SupportMask:
    """Union of a few randomly placed ellipses and rectangles, clipped to the
    grid.

    """
    rows, cols = np.indices(dims.shape)
    data = np.zeros(dims.shape, dtype=np.bool_)
    for _ in range(rng.integers(1, 4)):
        r0 = rng.uniform(0, dims.n_rows)
        c0 = rng.uniform(0, dims.n_cols)
        a = rng.uniform(1, dims.n_rows / 2)
        b = rng.uniform(1, dims.n_cols / 2)
        if rng.random() < 0.5:
            data |= ((rows - r0) / a) ** 2 + ((cols - c0) / b) ** 2 <= 1
        else:
            data |= (np.abs(rows - r0) <= a) & (np.abs(cols - c0) <= b)
        data[int(r0), int(c0)] = True
    return SupportMask(data)


def random_image(rng: np.random.Generator, S: SupportMask) -> ComplexImage:
    """Complex white noise inside ``S`` and zero everywhere else."""
    values = rng.standard_normal(S.dims.shape) + 1j * rng.standard_normal(
        S.dims.shape
    )
    return ComplexImage(np.where(S.data, values, 0))


def loop_dft(arr: np.ndarray) -> np.ndarray:
    """The unnormalized 2D DFT by direct summation over all pixels."""
    n_rows, n_cols = arr.shape
    res = np.zeros(arr.shape, dtype=np.complex128)
    for k_r in range(n_rows):
        for k_c in range(n_cols):
            for r in range(n_rows):
                for c in range(n_cols):
                    res[k_r, k_c] += arr[r, c] * np.exp(
                        -2j * np.pi * (k_r * r / n_rows + k_c * c / n_cols)
                    )
    return res


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(b, a))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def quadrant_8() -> SupportMask:
    return quadrant_removed_mask(GridDims(8, 8))


@pytest.fixture
def quadrant_32() -> SupportMask:
    return quadrant_removed_mask(GridDims(32, 32))


@pytest.fixture
def quadrant_64() -> SupportMask:
    return quadrant_removed_mask(GridDims(64, 64))
