"""Split a field of view into the region that overlaps with its alias and the
remaining alias-free region.

Dropping every odd column of the spectrum superimposes the image with a copy
of itself that is circularly shifted by half the grid width. Rows in which
the field of view hits its shifted copy form the *inner* region, all other
rows of the field of view the *outer* region. The outer region can be
recovered from the even columns alone, the inner region additionally needs
the odd columns, but only as densely as its height requires.

"""

from dataclasses import dataclass

import numpy as np

from fovkit.core_types import SupportMask, circular_shift_u
from fovkit.errors import EmptyInput
from fovkit.logger import LOGGER


@dataclass(frozen=True)
class RowInterval:
    """A band of ``height`` consecutive rows starting at ``start_row`` that
    wraps around from the bottom of the grid to the top.

    """

    start_row: int
    height: int

    def rows(self, n_rows: int) -> np.ndarray:
        return (self.start_row + np.arange(self.height)) % n_rows

    def row_mask(self, n_rows: int) -> np.ndarray:
        mask = np.zeros(n_rows, dtype=np.bool_)
        mask[self.rows(n_rows)] = True
        return mask


@dataclass(frozen=True, eq=False)
class Decomposition:
    S: SupportMask
    S_inner: SupportMask
    S_outer: SupportMask
    inner_interval: RowInterval

    #: vertical decimation factor of the odd columns
    m: int

    @property
    def H_inner(self) -> int:
        return self.inner_interval.height

    @property
    def inner_rows(self) -> int:
        """Height of the folded grid on which the inner region is
        reconstructed.

        """
        return self.S.dims.n_rows // self.m


def overlap_rows(S: SupportMask) -> np.ndarray:
    """Indices of the rows in which ``S`` overlaps with itself shifted by half
    the grid width.

    """
    shifted = circular_shift_u(S, S.dims.n_cols // 2)
    return np.flatnonzero(np.any(S.data & shifted.data, axis=1))


def minimal_circular_interval(rows: np.ndarray, n_rows: int) -> RowInterval:
    """The shortest circular band of rows covering all ``rows``.

    The band is the complement of the largest circular gap between
    consecutive rows; equally short bands are resolved in favor of the
    smallest start row.

    """
    if rows.size == 0:
        return RowInterval(start_row=0, height=0)

    rows = np.unique(rows)
    nxt = np.roll(rows, -1)
    nxt[-1] += n_rows
    # a band starting right after a gap ends right before it
    heights = n_rows - (nxt - rows - 1)
    starts = nxt % n_rows
    best = min(zip(heights.tolist(), starts.tolist()))
    return RowInterval(start_row=best[1], height=best[0])


def decimation_factor(n_rows: int, H_inner: int) -> int:
    """Largest divisor ``m`` of ``n_rows`` whose folded grid of ``n_rows / m``
    rows still holds ``H_inner`` rows.

    """
    need = max(H_inner, 1)
    for m in range(n_rows, 0, -1):
        if n_rows % m == 0 and n_rows // m >= need:
            return m
    raise AssertionError("m = 1 always satisfies the height constraint")


def decompose(S: SupportMask) -> Decomposition:
    S.dims.require_fov()
    if S.popcount == 0:
        raise EmptyInput("The field of view must contain at least one pixel")

    n_rows = S.dims.n_rows
    interval = minimal_circular_interval(overlap_rows(S), n_rows)
    in_band = interval.row_mask(n_rows)[:, np.newaxis]

    dec = Decomposition(
        S=S,
        S_inner=SupportMask(S.data & in_band),
        S_outer=SupportMask(S.data & ~in_band),
        inner_interval=interval,
        m=decimation_factor(n_rows, interval.height),
    )

    if interval.height == 0:
        LOGGER.warning(
            "The field of view does not overlap with its alias, "
            "the odd columns are not needed"
        )
        return dec

    LOGGER.info(
        "Inner region: rows %d..%d (height %d), decimation factor m=%d",
        interval.start_row,
        (interval.start_row + interval.height - 1) % n_rows,
        interval.height,
        dec.m,
    )
    return dec
