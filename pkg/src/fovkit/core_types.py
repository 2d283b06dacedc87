"""Grid conventions, the value types shared by all modules and the mask
algebra.

Images and spectra are stored as two dimensional ``complex128`` arrays in row
major order. Spectra use the DFT-natural index order, i.e. the DC value is
located at ``(0, 0)``; the centered order only exists when exporting images
for display. All arrays held by the types of this module are read-only, so
instances can be shared freely.

"""

import dataclasses
from dataclasses import dataclass
import typing

import numpy as np
import numpy.typing as npt

from fovkit.errors import (
    CoilCountMismatch,
    DimMismatch,
    InvalidCoilSet,
    InvalidGrid,
    InvalidMask,
    LengthMismatch,
    NonFiniteValues,
)


def _frozen(arr: npt.ArrayLike, dtype: npt.DTypeLike) -> np.ndarray:
    res = np.array(arr, dtype=dtype, order="C", copy=True)
    res.setflags(write=False)
    return res


@dataclass(frozen=True)
class GridDims:
    """Size of the discrete field of view in pixels."""

    #: vertical pixel count
    n_rows: int

    #: horizontal pixel count, must be even
    n_cols: int

    def __post_init__(self) -> None:
        # a single row is permitted for the folded grid of the inner region,
        # every field of view is checked with require_fov() as well
        if self.n_rows < 1 or self.n_cols < 2:
            raise InvalidGrid(f"Invalid grid size {self.n_rows}x{self.n_cols}")
        if self.n_cols % 2:
            raise InvalidGrid(
                f"The number of columns must be even, got {self.n_cols}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def size(self) -> int:
        return self.n_rows * self.n_cols

    def require_fov(self) -> None:
        """Raise :py:class:`InvalidGrid` unless this grid can hold a field of
        view (at least two rows).

        """
        if self.n_rows < 2:
            raise InvalidGrid(
                f"A field of view needs at least 2 rows, got {self.n_rows}"
            )

    @staticmethod
    def of(arr: np.ndarray) -> "GridDims":
        if arr.ndim != 2:
            raise InvalidGrid(f"Expected a 2D array, got {arr.ndim} dimensions")
        return GridDims(*arr.shape)


@dataclass(frozen=True, eq=False)
class ComplexImage:
    """A complex valued image or spectrum on a :py:class:`GridDims` grid."""

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _frozen(self.data, np.complex128))
        GridDims.of(self.data)
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteValues("Image contains NaN or infinite values")

    @property
    def dims(self) -> GridDims:
        return GridDims(*self.data.shape)

    @staticmethod
    def zeros(dims: GridDims) -> "ComplexImage":
        return ComplexImage(np.zeros(dims.shape, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class SupportMask:
    """Binary mask marking the pixels inside a field of view."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.dtype != np.bool_ and not np.all((arr == 0) | (arr == 1)):
            raise InvalidMask("Mask entries must be 0 or 1")
        object.__setattr__(self, "data", _frozen(arr, np.bool_))
        GridDims.of(self.data)

    @property
    def dims(self) -> GridDims:
        return GridDims(*self.data.shape)

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.data))

    @staticmethod
    def ones(dims: GridDims) -> "SupportMask":
        return SupportMask(np.ones(dims.shape, dtype=np.bool_))

    @staticmethod
    def zeros(dims: GridDims) -> "SupportMask":
        return SupportMask(np.zeros(dims.shape, dtype=np.bool_))

    def __or__(self, other: "SupportMask") -> "SupportMask":
        _check_dims(self.dims, other.dims)
        return SupportMask(self.data | other.data)

    def __and__(self, other: "SupportMask") -> "SupportMask":
        _check_dims(self.dims, other.dims)
        return SupportMask(self.data & other.data)


@dataclass(frozen=True)
class SamplingPattern:
    """Binary mask over the full Cartesian k-space grid marking the acquired
    frequencies.

    """

    data: np.ndarray

    #: vertical decimation of the odd columns
    subsample_factor_m: int = 1

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.dtype != np.bool_ and not np.all((arr == 0) | (arr == 1)):
            raise InvalidMask("Pattern entries must be 0 or 1")
        object.__setattr__(self, "data", _frozen(arr, np.bool_))
        GridDims.of(self.data)
        if self.subsample_factor_m < 1:
            raise InvalidMask(
                "subsample_factor_m must be positive, "
                f"got {self.subsample_factor_m}"
            )
        if not self.data.any():
            raise InvalidMask("A sampling pattern must mark at least one sample")

    @property
    def dims(self) -> GridDims:
        return GridDims(*self.data.shape)

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.data))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SamplingPattern):
            return NotImplemented
        return self.subsample_factor_m == other.subsample_factor_m and bool(
            np.array_equal(self.data, other.data)
        )

    def __hash__(self) -> int:
        return hash((self.data.tobytes(), self.data.shape, self.subsample_factor_m))

    def covers(self, other: "SamplingPattern") -> bool:
        """Whether every sample of ``other`` is also part of this pattern."""
        _check_dims(self.dims, other.dims)
        return bool(np.all(self.data[other.data]))


@dataclass(frozen=True, eq=False)
class KSpaceData:
    """Acquired samples of one or more coils.

    ``samples`` has the shape ``(coils, pattern.popcount)``; the samples of
    every coil are ordered like the marked entries of the pattern in row major
    order.

    """

    pattern: SamplingPattern
    samples: np.ndarray

    #: factor by which the spectra were multiplied during simulation
    normalization: float = 1.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise InvalidMask(f"Invalid sample array of shape {arr.shape}")
        if arr.shape[1] != self.pattern.popcount:
            raise LengthMismatch(self.pattern.popcount, arr.shape[1])
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValues("k-space samples contain NaN or infinite values")
        object.__setattr__(self, "samples", _frozen(arr, np.complex128))

    @property
    def coils(self) -> int:
        return int(self.samples.shape[0])

    @property
    def dims(self) -> GridDims:
        return self.pattern.dims

    def to_grid(self) -> np.ndarray:
        """Zero filled full grid spectra of shape ``(coils, n_rows, n_cols)``."""
        grid = np.zeros((self.coils, *self.dims.shape), dtype=np.complex128)
        grid[:, self.pattern.data] = self.samples
        return grid

    @staticmethod
    def from_grid(
        pattern: SamplingPattern, grid: np.ndarray, normalization: float = 1.0
    ) -> "KSpaceData":
        """Pick the pattern marked entries out of full grid spectra; entries
        outside of the pattern are ignored.

        """
        grid = np.asarray(grid)
        if grid.ndim == 2:
            grid = grid[np.newaxis]
        if grid.shape[1:] != pattern.dims.shape:
            raise DimMismatch(pattern.dims.shape, grid.shape[1:])
        return KSpaceData(
            pattern=pattern,
            samples=grid[:, pattern.data],
            normalization=normalization,
        )


@dataclass(frozen=True, eq=False)
class CoilSet:
    """Sensitivity maps and per-coil fields of view of a receive array.

    Both arrays have the shape ``(coils, n_rows, n_cols)``.

    """

    sensitivities: np.ndarray
    supports: np.ndarray

    def __post_init__(self) -> None:
        sens = np.asarray(self.sensitivities, dtype=np.complex128)
        sup = np.asarray(self.supports)
        if sens.ndim != 3 or sens.shape[0] < 1:
            raise InvalidCoilSet(f"Invalid sensitivity array of shape {sens.shape}")
        GridDims.of(sens[0])
        if sup.shape[0] != sens.shape[0]:
            raise CoilCountMismatch(sens.shape[0], sup.shape[0])
        if sup.shape[1:] != sens.shape[1:]:
            raise DimMismatch(sens.shape[1:], sup.shape[1:])
        if sup.dtype != np.bool_ and not np.all((sup == 0) | (sup == 1)):
            raise InvalidCoilSet("Support entries must be 0 or 1")
        if not np.all(np.isfinite(sens)):
            raise NonFiniteValues("Sensitivities contain NaN or infinite values")
        union = np.any(sup, axis=0)
        if not np.any(sens[:, union]):
            raise InvalidCoilSet(
                "At least one coil must be sensitive inside the union of the "
                "coil supports"
            )
        object.__setattr__(self, "sensitivities", _frozen(sens, np.complex128))
        object.__setattr__(self, "supports", _frozen(sup, np.bool_))

    @property
    def C(self) -> int:
        return int(self.sensitivities.shape[0])

    @property
    def dims(self) -> GridDims:
        return GridDims(*self.sensitivities.shape[1:])

    def support(self, coil: int) -> SupportMask:
        return SupportMask(self.supports[coil])

    @staticmethod
    def uniform(support: SupportMask) -> "CoilSet":
        """A single coil with unit sensitivity everywhere."""
        return CoilSet(
            sensitivities=np.ones((1, *support.dims.shape), dtype=np.complex128),
            supports=support.data[np.newaxis],
        )


def _check_dims(expected: GridDims, got: GridDims) -> None:
    if expected != got:
        raise DimMismatch(expected.shape, got.shape)


MaskOrImage = typing.TypeVar("MaskOrImage", ComplexImage, SupportMask)


def circular_shift_u(img_or_mask: MaskOrImage, shift: int) -> MaskOrImage:
    """Circularly shift the columns: ``out(r, c) = in(r, (c - shift) mod
    n_cols)``.

    """
    shift %= img_or_mask.dims.n_cols
    return dataclasses.replace(
        img_or_mask, data=np.roll(img_or_mask.data, shift, axis=1)
    )


def mask_complement(S: SupportMask) -> SupportMask:
    return SupportMask(~S.data)


def hadamard(a: ComplexImage, b: ComplexImage | SupportMask) -> ComplexImage:
    """Point-wise product of two images or of an image with a mask."""
    _check_dims(a.dims, b.dims)
    if isinstance(b, SupportMask):
        return ComplexImage(np.where(b.data, a.data, 0))
    # real arithmetic, so the result does not depend on how the platform
    # vectorizes complex multiplication
    ar, ai = a.data.real, a.data.imag
    br, bi = b.data.real, b.data.imag
    prod = np.empty(a.dims.shape, dtype=np.complex128)
    prod.real = ar * br - ai * bi
    prod.imag = ar * bi + ai * br
    return ComplexImage(prod)


def gather(S: SupportMask, img: ComplexImage) -> np.ndarray:
    """The pixels of ``img`` inside ``S`` in row major order."""
    _check_dims(S.dims, img.dims)
    return img.data[S.data].copy()


def scatter(S: SupportMask, vec: npt.ArrayLike) -> ComplexImage:
    """Inverse of :py:func:`gather`: place ``vec`` on the pixels of ``S`` and
    zero everywhere else.

    """
    vec = np.asarray(vec, dtype=np.complex128)
    if vec.ndim != 1 or vec.shape[0] != S.popcount:
        raise LengthMismatch(S.popcount, vec.size)
    out = np.zeros(S.dims.shape, dtype=np.complex128)
    out[S.data] = vec
    return ComplexImage(out)
