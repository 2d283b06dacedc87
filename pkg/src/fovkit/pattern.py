from enum import StrEnum, auto, unique
from fractions import Fraction
import math

import numpy as np

from fovkit.core_types import GridDims, SamplingPattern, SupportMask
from fovkit.decomposition import Decomposition, decompose
from fovkit.errors import DimMismatch, EmptyInput
from fovkit.logger import LOGGER


@unique
class ColumnParity(StrEnum):
    """Parity of a column index in DFT-natural order."""

    #: the columns 0, 2, 4, ..., including the DC column
    EVEN = auto()

    #: the columns 1, 3, 5, ...
    ODD = auto()

    @property
    def first_column(self) -> int:
        return 0 if self == ColumnParity.EVEN else 1


def full_pattern(dims: GridDims) -> SamplingPattern:
    """The fully sampled Cartesian grid."""
    return SamplingPattern(np.ones(dims.shape, dtype=np.bool_), subsample_factor_m=1)


def reduced_pattern(dec: Decomposition) -> SamplingPattern:
    """Sampling pattern for the field of view of ``dec``: all even columns
    and every m-th row (starting at the DC row) of the odd columns.

    """
    data = np.zeros(dec.S.dims.shape, dtype=np.bool_)
    data[:, 0::2] = True
    if dec.H_inner > 0:
        data[0 :: dec.m, 1::2] = True
    return SamplingPattern(data, subsample_factor_m=dec.m)


def burden(p: SamplingPattern) -> Fraction:
    """Number of samples relative to the fully sampled grid."""
    return Fraction(p.popcount, p.dims.size)


def _check_shared_dims(dims: list[GridDims]) -> None:
    if not dims:
        raise EmptyInput("At least one field of view is required")
    for d in dims[1:]:
        if d != dims[0]:
            raise DimMismatch(dims[0].shape, d.shape)


def pattern_for_coils(decs: list[Decomposition]) -> SamplingPattern:
    """Pick the densest of the per-coil reduced patterns, so that every
    coil's field of view is sampled sufficiently.

    """
    _check_shared_dims([dec.S.dims for dec in decs])

    patterns = [reduced_pattern(dec) for dec in decs]
    for i, p in enumerate(patterns):
        LOGGER.debug("Coil %d: m=%d, burden %s", i, p.subsample_factor_m, burden(p))

    # max() returns the first maximal element => ties go to the lowest index
    return max(patterns, key=lambda p: p.popcount)


def pattern_for_union(supports: list[SupportMask]) -> SamplingPattern:
    """Reduced pattern of the union of all coil fields of view."""
    _check_shared_dims([s.dims for s in supports])
    union = supports[0]
    for s in supports[1:]:
        union = union | s
    return reduced_pattern(decompose(union))


def infer_subsample_factor(data: np.ndarray) -> int:
    """Vertical decimation factor of the odd columns of a pattern given as a
    binary grid.

    """
    n_rows = data.shape[0]
    rows = np.flatnonzero(np.any(data[:, 1::2], axis=1))
    return math.gcd(n_rows, *rows.tolist())


def thin_pattern(p: SamplingPattern, columns: ColumnParity) -> SamplingPattern:
    """Drop every second marked row in all columns of the given parity."""
    data = p.data.copy()
    for col in range(columns.first_column, p.dims.n_cols, 2):
        marked = np.flatnonzero(data[:, col])
        data[marked[1::2], col] = False

    m = (
        infer_subsample_factor(data)
        if columns == ColumnParity.ODD
        else p.subsample_factor_m
    )
    res = SamplingPattern(data, subsample_factor_m=m)
    LOGGER.info(
        "Thinned the %s columns, burden %s -> %s", columns, burden(p), burden(res)
    )
    return res
