"""Coil sensitivities, per-coil fields of view and coil combination."""

import numpy as np
import scipy.ndimage

from fovkit.core_types import ComplexImage, CoilSet, SupportMask
from fovkit.errors import AllZeroImage, CoilCountMismatch, DimMismatch, EmptyInput
from fovkit.logger import LOGGER

#: relative floor of the denominators of the normalizations
EPS = 1e-12


def _stack(images: list[ComplexImage]) -> np.ndarray:
    if not images:
        raise EmptyInput("At least one coil image is required")
    for img in images[1:]:
        if img.dims != images[0].dims:
            raise DimMismatch(images[0].dims.shape, img.dims.shape)
    return np.stack([img.data for img in images])


def _box_filter(data: np.ndarray, width: int) -> np.ndarray:
    size = (1, width, width)
    return scipy.ndimage.uniform_filter(
        data.real, size=size, mode="nearest"
    ) + 1j * scipy.ndimage.uniform_filter(data.imag, size=size, mode="nearest")


def coil_support(coil_image: ComplexImage, theta: float = 0.05) -> SupportMask:
    """Pixels whose magnitude reaches ``theta`` times the maximum magnitude."""
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    magnitude = np.abs(coil_image.data)
    if (peak := magnitude.max()) == 0:
        raise AllZeroImage("Cannot determine the support of an all zero image")
    return SupportMask(magnitude >= theta * peak)


def estimate_sensitivities(
    coil_images: list[ComplexImage], width: int = 5, theta: float = 0.05
) -> CoilSet:
    """Estimate the sensitivities from fully sampled coil images.

    Every coil image is smoothed with a box filter of ``width`` pixels (edges
    are clamped) and divided by the root sum of squares of all smoothed coil
    images. The supports are obtained by thresholding each coil image with
    :py:func:`coil_support`.

    """
    stacked = _stack(coil_images)
    smoothed = _box_filter(stacked, width)
    rss = np.sqrt(np.sum(np.abs(smoothed) ** 2, axis=0))
    if (peak := rss.max()) == 0:
        raise AllZeroImage("All coil images are zero")

    floor = EPS * peak
    if n_floored := int(np.count_nonzero(rss < floor)):
        LOGGER.warning(
            "%d pixels have no coil signal, their sensitivities are floored",
            n_floored,
        )
    sensitivities = smoothed / np.maximum(rss, floor)

    supports = np.stack([coil_support(img, theta).data for img in coil_images])
    LOGGER.debug(
        "Estimated sensitivities of %d coils, support sizes %s",
        len(coil_images),
        supports.sum(axis=(1, 2)).tolist(),
    )
    return CoilSet(sensitivities=sensitivities, supports=supports)


def roemer_combine(coil_images: list[ComplexImage], coils: CoilSet) -> ComplexImage:
    """Combine coil images with their sensitivities assuming uncorrelated
    noise of equal variance in all coils.

    """
    if len(coil_images) != coils.C:
        raise CoilCountMismatch(coils.C, len(coil_images))
    stacked = _stack(coil_images)
    if stacked.shape[1:] != coils.dims.shape:
        raise DimMismatch(coils.dims.shape, stacked.shape[1:])

    sens = coils.sensitivities
    numerator = np.sum(sens.conj() * stacked, axis=0)
    energy = np.sum(np.abs(sens) ** 2, axis=0)
    denominator = np.maximum(energy, EPS * energy.max())
    combined = np.divide(
        numerator,
        denominator,
        out=np.zeros_like(numerator),
        where=denominator > 0,
    )
    return ComplexImage(combined)
