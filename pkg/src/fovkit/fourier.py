"""Discrete Fourier transforms on the Cartesian grid.

The forward transform is unnormalized, the inverse carries the factor
``1 / (n_rows * n_cols)``. The fast transforms use :py:mod:`scipy.fft`, the
number of workers is controlled with :py:func:`scipy.fft.set_workers`.

Besides the uniform transforms this module offers a brute force non-uniform
DFT pair (forward and adjoint) on an explicit list of frequencies and the
exact evaluation of a spectrum on a vertically decimated subgrid.

"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.fft

from fovkit.core_types import ComplexImage, GridDims, SamplingPattern
from fovkit.errors import LengthMismatch, NonDivisorFactor, OutOfRangeFrequency


def fft2(img: ComplexImage) -> ComplexImage:
    return ComplexImage(scipy.fft.fft2(img.data))


def ifft2(spec: ComplexImage) -> ComplexImage:
    return ComplexImage(scipy.fft.ifft2(spec.data))


def centered(img: ComplexImage) -> ComplexImage:
    """Move the DC entry of a spectrum to the center of the grid for
    display.

    """
    return ComplexImage(np.fft.fftshift(img.data))


@dataclass(frozen=True, eq=False)
class FreqList:
    """Ordered list of on-grid frequency indices ``(k_row, k_col)``."""

    k_rows: np.ndarray
    k_cols: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.k_rows, dtype=np.int64).ravel()
        cols = np.asarray(self.k_cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise LengthMismatch(rows.size, cols.size)
        if len(set(zip(rows.tolist(), cols.tolist()))) != rows.size:
            raise OutOfRangeFrequency("Frequency list contains duplicates")
        rows.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "k_rows", rows)
        object.__setattr__(self, "k_cols", cols)

    def __len__(self) -> int:
        return int(self.k_rows.size)

    def check(self, dims: GridDims) -> None:
        if len(self) == 0:
            return
        if (
            self.k_rows.min() < 0
            or self.k_rows.max() >= dims.n_rows
            or self.k_cols.min() < 0
            or self.k_cols.max() >= dims.n_cols
        ):
            raise OutOfRangeFrequency(
                f"Frequency indices exceed the {dims.n_rows}x{dims.n_cols} grid"
            )

    @staticmethod
    def from_pattern(pattern: SamplingPattern) -> "FreqList":
        """The marked frequencies of ``pattern`` in row major order."""
        rows, cols = np.nonzero(pattern.data)
        return FreqList(rows, cols)

    @staticmethod
    def full(dims: GridDims) -> "FreqList":
        rows, cols = np.indices(dims.shape)
        return FreqList(rows, cols)


def _kernels(freqs: FreqList, dims: GridDims) -> tuple[np.ndarray, np.ndarray]:
    rows = np.arange(dims.n_rows)
    cols = np.arange(dims.n_cols)
    e_row = np.exp(-2j * np.pi * np.outer(freqs.k_rows, rows) / dims.n_rows)
    e_col = np.exp(-2j * np.pi * np.outer(freqs.k_cols, cols) / dims.n_cols)
    return e_row, e_col


def nudft_forward(img: ComplexImage, freqs: FreqList) -> np.ndarray:
    """Evaluate the DFT of ``img`` at every frequency of ``freqs`` by direct
    summation.

    """
    freqs.check(img.dims)
    e_row, e_col = _kernels(freqs, img.dims)
    return np.einsum("tr,rc,tc->t", e_row, img.data, e_col)


def nudft_adjoint(
    samples: npt.ArrayLike, freqs: FreqList, dims: GridDims
) -> ComplexImage:
    """Conjugate transpose of :py:func:`nudft_forward`."""
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    if samples.size != len(freqs):
        raise LengthMismatch(len(freqs), samples.size)
    freqs.check(dims)
    e_row, e_col = _kernels(freqs, dims)
    return ComplexImage(
        np.einsum("t,tr,tc->rc", samples, e_row.conj(), e_col.conj())
    )


def fold_rows(data: np.ndarray, m: int) -> np.ndarray:
    """Sum the row blocks of height ``n_rows / m`` of the trailing two axes."""
    n_rows = data.shape[-2]
    if m < 1 or n_rows % m:
        raise NonDivisorFactor(f"{m} does not divide the row count {n_rows}")
    return data.reshape(*data.shape[:-2], m, n_rows // m, data.shape[-1]).sum(
        axis=-3
    )


def spectrum_on_inner_grid(img: ComplexImage, m: int) -> ComplexImage:
    """The exact spectrum of ``img`` at the rows ``0, m, 2m, ...`` of the
    full grid.

    Sampling every m-th row of the spectrum aliases the image vertically with
    the period ``n_rows / m``, hence the spectrum equals the DFT of the folded
    image.

    """
    return ComplexImage(scipy.fft.fft2(fold_rows(img.data, m)))
