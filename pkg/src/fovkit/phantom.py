"""Synthetic objects, simulated acquisitions and error metrics."""

from dataclasses import dataclass
from enum import StrEnum, auto, unique
import math

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator
import scipy.fft
import scipy.ndimage

from fovkit.core_types import (
    ComplexImage,
    CoilSet,
    GridDims,
    KSpaceData,
    SamplingPattern,
    SupportMask,
)
from fovkit.errors import DimMismatch, ShapeOutOfBounds
from fovkit.logger import LOGGER


@unique
class ShapeKind(StrEnum):
    ELLIPSE = auto()
    RECTANGLE = auto()


class Shape(BaseModel):
    """A shape of constant complex amplitude; coordinates are in pixels with
    the origin in the center of the top left pixel.

    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ShapeKind

    #: (row, col) of the center
    center: tuple[float, float]

    #: semi-axes of an ellipse or half side lengths of a rectangle, as
    #: (row, col)
    extents: tuple[float, float]

    #: (real, imaginary) part, a plain number is a real amplitude
    amplitude: tuple[float, float] = (1.0, 0.0)

    #: counter-clockwise rotation of an ellipse in degrees
    angle: float = 0.0

    @field_validator("amplitude", mode="before")
    @classmethod
    def _real_amplitude(cls, value: object) -> object:
        if isinstance(value, (int, float)):
            return (float(value), 0.0)
        return value

    @field_validator("extents")
    @classmethod
    def _positive_extents(cls, value: tuple[float, float]) -> tuple[float, float]:
        if min(value) <= 0:
            raise ValueError(f"extents must be positive, got {value}")
        return value

    @property
    def complex_amplitude(self) -> complex:
        return complex(*self.amplitude)

    def half_widths(self) -> tuple[float, float]:
        """Half height and half width of the axis aligned bounding box."""
        if self.kind == ShapeKind.RECTANGLE:
            return self.extents
        a_row, a_col = self.extents
        cos, sin = math.cos(math.radians(self.angle)), math.sin(
            math.radians(self.angle)
        )
        return (
            math.hypot(a_col * sin, a_row * cos),
            math.hypot(a_col * cos, a_row * sin),
        )

    def raster(self, dims: GridDims) -> np.ndarray:
        """Mask of the pixels whose centers lie inside this shape."""
        rows, cols = np.indices(dims.shape, dtype=np.float64)
        d_row = rows - self.center[0]
        d_col = cols - self.center[1]
        if self.kind == ShapeKind.RECTANGLE:
            return (np.abs(d_row) <= self.extents[0]) & (
                np.abs(d_col) <= self.extents[1]
            )

        phi = math.radians(self.angle)
        # rows point downwards, hence the rotation of the row offset flips
        along_col = d_col * math.cos(phi) - d_row * math.sin(phi)
        along_row = -d_col * math.sin(phi) - d_row * math.cos(phi)
        return (along_row / self.extents[0]) ** 2 + (
            along_col / self.extents[1]
        ) ** 2 <= 1


class PhantomSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_rows: int = Field(ge=2)
    n_cols: int = Field(ge=2)
    shapes: list[Shape] = Field(default_factory=list)

    #: dilation in pixels of the union of the shapes to obtain the support
    support_margin: int = Field(default=0, ge=0)

    @property
    def dims(self) -> GridDims:
        return GridDims(self.n_rows, self.n_cols)


_BOUNDS_SLACK = 1e-9


def render_phantom(spec: PhantomSpec) -> tuple[ComplexImage, SupportMask]:
    """Rasterize the shapes (their amplitudes add up where they overlap) and
    derive the support from the union of the shapes.

    """
    dims = spec.dims
    img = np.zeros(dims.shape, dtype=np.complex128)
    union = np.zeros(dims.shape, dtype=np.bool_)

    for i, shape in enumerate(spec.shapes):
        half_rows, half_cols = shape.half_widths()
        row, col = shape.center
        if (
            row - half_rows < -0.5 - _BOUNDS_SLACK
            or row + half_rows > dims.n_rows - 0.5 + _BOUNDS_SLACK
            or col - half_cols < -0.5 - _BOUNDS_SLACK
            or col + half_cols > dims.n_cols - 0.5 + _BOUNDS_SLACK
        ):
            raise ShapeOutOfBounds(
                f"Shape {i} ({shape.kind}) exceeds the {dims.n_rows}x{dims.n_cols} "
                "grid"
            )
        raster = shape.raster(dims)
        img[raster] += shape.complex_amplitude
        union |= raster

    if spec.support_margin and union.any():
        union = scipy.ndimage.binary_dilation(
            union,
            structure=np.ones((3, 3), dtype=np.bool_),
            iterations=spec.support_margin,
        )

    LOGGER.debug(
        "Rendered %d shapes, support of %d pixels", len(spec.shapes), union.sum()
    )
    return ComplexImage(img), SupportMask(union)


# (amplitude, x semi-axis, y semi-axis, x center, y center, angle) on [-1, 1]²
# with the y axis pointing upwards
_SHEPP_LOGAN = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def shepp_logan_spec(dims: GridDims, margin: int = 1) -> PhantomSpec:
    """The modified Shepp-Logan head phantom scaled to the grid."""
    shapes = [
        Shape(
            kind=ShapeKind.ELLIPSE,
            center=(
                (1 - y0) / 2 * dims.n_rows - 0.5,
                (1 + x0) / 2 * dims.n_cols - 0.5,
            ),
            extents=(b * dims.n_rows / 2, a * dims.n_cols / 2),
            amplitude=amp,
            angle=angle,
        )
        for amp, a, b, x0, y0, angle in _SHEPP_LOGAN
    ]
    return PhantomSpec(
        n_rows=dims.n_rows, n_cols=dims.n_cols, shapes=shapes, support_margin=margin
    )


def quadrant_removed_mask(dims: GridDims) -> SupportMask:
    """Field of view without the upper right quadrant."""
    data = np.ones(dims.shape, dtype=np.bool_)
    data[: dims.n_rows // 2, dims.n_cols // 2 :] = False
    return SupportMask(data)


def simulate_kspace(
    img: ComplexImage,
    pattern: SamplingPattern,
    coils: CoilSet | None = None,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> KSpaceData:
    """Simulate the acquisition of ``img`` with ``pattern``.

    The spectra of all coils are scaled jointly so that their largest
    magnitude is 1, then complex white Gaussian noise with the standard
    deviation ``noise_sigma`` per real and imaginary part is added. The noise
    is drawn from a Philox generator seeded with ``seed``.

    """
    if img.dims != pattern.dims:
        raise DimMismatch(pattern.dims.shape, img.dims.shape)
    if coils is not None and coils.dims != img.dims:
        raise DimMismatch(img.dims.shape, coils.dims.shape)
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must not be negative, got {noise_sigma}")

    if coils is None:
        weighted = img.data[np.newaxis]
    else:
        weighted = coils.sensitivities * img.data
    spectra = scipy.fft.fft2(weighted, axes=(-2, -1))

    peak = float(np.abs(spectra).max())
    normalization = 1.0 / peak if peak > 0 else 1.0
    samples = spectra[:, pattern.data] * normalization

    if noise_sigma > 0:
        rng = np.random.Generator(np.random.Philox(seed))
        noise = rng.standard_normal((*samples.shape, 2)) * noise_sigma
        samples = samples + noise[..., 0] + 1j * noise[..., 1]

    LOGGER.debug(
        "Simulated %d samples for %d coils, normalization %.6e",
        samples.shape[1],
        samples.shape[0],
        normalization,
    )
    return KSpaceData(pattern=pattern, samples=samples, normalization=normalization)


@dataclass(frozen=True)
class Metrics:
    mse: float
    max_abs_diff: float
    rel_l2: float


def metrics(
    a: ComplexImage, b: ComplexImage, mask: SupportMask | None = None
) -> Metrics:
    """Compare ``a`` against the reference ``b`` on the pixels of ``mask``
    (the whole grid if omitted).

    """
    if a.dims != b.dims:
        raise DimMismatch(b.dims.shape, a.dims.shape)
    if mask is not None and mask.dims != b.dims:
        raise DimMismatch(b.dims.shape, mask.dims.shape)

    select: npt.NDArray[np.bool_] | slice = slice(None) if mask is None else mask.data
    diff = (a.data - b.data)[select]
    ref = b.data[select]
    if diff.size == 0:
        return Metrics(mse=0.0, max_abs_diff=0.0, rel_l2=0.0)

    diff_norm = float(np.linalg.norm(diff))
    ref_norm = float(np.linalg.norm(ref))
    if ref_norm > 0:
        rel_l2 = diff_norm / ref_norm
    else:
        rel_l2 = 0.0 if diff_norm == 0 else math.inf

    return Metrics(
        mse=float(np.mean(np.abs(diff) ** 2)),
        max_abs_diff=float(np.abs(diff).max()),
        rel_l2=rel_l2,
    )
