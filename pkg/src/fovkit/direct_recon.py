"""Direct (non-iterative) reconstruction from the reduced sampling pattern.

All acquired frequencies lie on the full Cartesian grid and the odd columns
are sampled on every m-th row with m dividing the row count. Gridding and
inverse gridding therefore reduce to row selection and vertical folding and
the reconstruction is exact up to rounding.

"""

import dataclasses

import numpy as np
import scipy.fft

from fovkit.coils import roemer_combine
from fovkit.core_types import ComplexImage, CoilSet, KSpaceData
from fovkit.decomposition import Decomposition
from fovkit.errors import (
    CoilCountMismatch,
    DimMismatch,
    MultiCoilNotAllowed,
    PatternMismatch,
)
from fovkit.fourier import spectrum_on_inner_grid
from fovkit.logger import LOGGER
from fovkit.pattern import reduced_pattern


def _outer_from_spectrum(spectrum: np.ndarray, dec: Decomposition) -> np.ndarray:
    even_only = spectrum.copy()
    even_only[:, 1::2] = 0
    # zero filling every other column halves the amplitude
    return 2 * np.where(dec.S_outer.data, scipy.fft.ifft2(even_only), 0)


def _direct_from_spectrum(
    spectrum: np.ndarray, dec: Decomposition, m: int
) -> np.ndarray:
    outer = _outer_from_spectrum(spectrum, dec)
    if dec.H_inner == 0:
        return outer

    n_rows = dec.S.dims.n_rows
    inner_rows = n_rows // m

    # the rows 0, m, 2m, ... are acquired in the even and the odd columns
    outer_on_inner_grid = spectrum_on_inner_grid(ComplexImage(outer), m)
    inner_spectrum = spectrum[0::m, :] - outer_on_inner_grid.data
    folded = scipy.fft.ifft2(inner_spectrum)

    inner = np.zeros_like(outer)
    rows = dec.inner_interval.rows(n_rows)
    inner[rows, :] = folded[rows % inner_rows, :]

    return np.where(dec.S.data, outer + inner, 0)


def _single_coil_spectrum(data: KSpaceData, dec: Decomposition) -> np.ndarray:
    if data.coils != 1:
        raise MultiCoilNotAllowed(
            f"Got data of {data.coils} coils, use recon_direct_parallel instead"
        )
    if data.dims != dec.S.dims:
        raise DimMismatch(dec.S.dims.shape, data.dims.shape)
    return data.to_grid()[0]


def recon_outer(data: KSpaceData, dec: Decomposition) -> ComplexImage:
    """Reconstruct the outer region from the even columns."""
    spectrum = _single_coil_spectrum(data, dec)
    if not np.all(data.pattern.data[:, 0::2]):
        raise PatternMismatch("The even columns of the pattern are incomplete")
    return ComplexImage(_outer_from_spectrum(spectrum, dec))


def recon_direct(data: KSpaceData, dec: Decomposition) -> ComplexImage:
    """Reconstruct the image inside ``dec.S`` from data acquired with (at
    least) the reduced pattern of ``dec``.

    The outer region is recovered from the even columns. Its spectrum on the
    decimated grid of the inner region is subtracted from the acquired samples
    there, which leaves the spectrum of the inner region alone. The inverse
    DFT on that grid yields the inner region folded with the period
    ``n_rows / m``, which is unfolded into the rows of the inner band.

    """
    spectrum = _single_coil_spectrum(data, dec)
    if not data.pattern.covers(reduced_pattern(dec)):
        raise PatternMismatch(
            f"The pattern does not contain the reduced pattern with m={dec.m}"
        )
    return ComplexImage(_direct_from_spectrum(spectrum, dec, dec.m))


def recon_direct_parallel(
    data: KSpaceData, decs: list[Decomposition], coils: CoilSet
) -> ComplexImage:
    """Reconstruct every coil image with its own field of view from the
    shared pattern and combine them.

    """
    if len(decs) != data.coils:
        raise CoilCountMismatch(data.coils, len(decs))
    if coils.C != data.coils:
        raise CoilCountMismatch(data.coils, coils.C)
    if coils.dims != data.dims:
        raise DimMismatch(data.dims.shape, coils.dims.shape)

    m = data.pattern.subsample_factor_m
    n_rows = data.dims.n_rows
    spectra = data.to_grid()

    coil_images = []
    for j, dec in enumerate(decs):
        if dec.S.dims != data.dims:
            raise DimMismatch(data.dims.shape, dec.S.dims.shape)
        if n_rows % m or dec.H_inner > n_rows // m:
            raise PatternMismatch(
                f"Coil {j} needs {dec.H_inner} inner rows, but the pattern only "
                f"resolves {n_rows // m} rows"
            )
        shared = dataclasses.replace(dec, m=m)
        if not data.pattern.covers(reduced_pattern(shared)):
            raise PatternMismatch(f"The pattern does not cover the needs of coil {j}")

        img = _direct_from_spectrum(spectra[j], shared, m)
        coil_images.append(ComplexImage(np.where(coils.supports[j], img, 0)))
        LOGGER.debug("Reconstructed coil %d (inner height %d)", j, dec.H_inner)

    return roemer_combine(coil_images, coils)
