import math

import numpy as np
import pydantic
import pytest

from fovkit.core_types import ComplexImage, GridDims, SupportMask
from fovkit.errors import DimMismatch, ShapeOutOfBounds
from fovkit.pattern import full_pattern
from fovkit.phantom import (
    PhantomSpec,
    Shape,
    ShapeKind,
    metrics,
    quadrant_removed_mask,
    render_phantom,
    shepp_logan_spec,
    simulate_kspace,
)


def _spec(n_rows: int, n_cols: int, *shapes: Shape, margin: int = 0) -> PhantomSpec:
    return PhantomSpec(
        n_rows=n_rows, n_cols=n_cols, shapes=list(shapes), support_margin=margin
    )


def test_rectangle() -> None:
    rect = Shape(
        kind=ShapeKind.RECTANGLE, center=(3, 4), extents=(1, 2), amplitude=(2, -1)
    )
    img, mask = render_phantom(_spec(8, 10, rect))

    expected = np.zeros((8, 10), dtype=bool)
    expected[2:5, 2:7] = True
    np.testing.assert_array_equal(mask.data, expected)
    np.testing.assert_array_equal(img.data, np.where(expected, 2 - 1j, 0))


def test_amplitudes_add_up() -> None:
    big = Shape(kind=ShapeKind.ELLIPSE, center=(7.5, 7.5), extents=(6, 6))
    small = Shape(
        kind=ShapeKind.ELLIPSE, center=(7.5, 7.5), extents=(2, 2), amplitude=-0.5
    )
    img, mask = render_phantom(_spec(16, 16, big, small))

    assert img.data[7, 7] == 0.5
    assert img.data[7, 2] == 1
    assert img.data[0, 0] == 0
    assert mask.popcount == np.count_nonzero(img.data)


def test_rotated_ellipse() -> None:
    rotated = Shape(
        kind=ShapeKind.ELLIPSE, center=(8, 8), extents=(1.5, 3.5), angle=90
    )
    upright = Shape(kind=ShapeKind.ELLIPSE, center=(8, 8), extents=(3.5, 1.5))
    _, rotated_mask = render_phantom(_spec(16, 16, rotated))
    _, upright_mask = render_phantom(_spec(16, 16, upright))
    np.testing.assert_array_equal(rotated_mask.data, upright_mask.data)

    half_rows, half_cols = rotated.half_widths()
    assert half_rows == pytest.approx(3.5)
    assert half_cols == pytest.approx(1.5)


@pytest.mark.parametrize(
    "shape",
    [
        Shape(kind=ShapeKind.RECTANGLE, center=(1, 4), extents=(2, 1)),
        Shape(kind=ShapeKind.RECTANGLE, center=(4, 7), extents=(1, 1)),
        Shape(kind=ShapeKind.ELLIPSE, center=(4, 4), extents=(5, 1)),
        Shape(kind=ShapeKind.ELLIPSE, center=(4, 4), extents=(1, 4.6), angle=30),
    ],
)
def test_shape_out_of_bounds(shape: Shape) -> None:
    with pytest.raises(ShapeOutOfBounds):
        render_phantom(_spec(8, 8, shape))


def test_shape_touching_the_border() -> None:
    # the pixel edges of the grid lie at -0.5 and n - 0.5
    rect = Shape(kind=ShapeKind.RECTANGLE, center=(3.5, 3.5), extents=(4, 4))
    img, mask = render_phantom(_spec(8, 8, rect))
    assert mask.popcount == 64


def test_support_margin() -> None:
    dot = Shape(kind=ShapeKind.RECTANGLE, center=(4, 4), extents=(0.4, 0.4))
    img, mask = render_phantom(_spec(10, 10, dot, margin=2))
    assert np.count_nonzero(img.data) == 1
    assert mask.popcount == 25
    assert mask.data[2:7, 2:7].all()


def test_empty_phantom() -> None:
    img, mask = render_phantom(_spec(4, 4))
    assert not img.data.any()
    assert mask.popcount == 0


def test_spec_from_json() -> None:
    spec = PhantomSpec.model_validate_json(
        """{
  "n_rows": 16,
  "n_cols": 16,
  "support_margin": 1,
  "shapes": [
    {"kind": "ellipse", "center": [8, 8], "extents": [4, 3], "amplitude": 0.5},
    {"kind": "rectangle", "center": [3, 3], "extents": [1, 1],
     "amplitude": [0, 1]}
  ]
}"""
    )
    assert spec.dims == GridDims(16, 16)
    assert spec.shapes[0].complex_amplitude == 0.5
    assert spec.shapes[1].complex_amplitude == 1j


@pytest.mark.parametrize(
    "json",
    [
        '{"n_rows": 1, "n_cols": 4}',
        '{"n_rows": 4, "n_cols": 4, "colour": "red"}',
        '{"n_rows": 4, "n_cols": 4, "shapes": [{"kind": "star", "center": [1, 1],'
        ' "extents": [1, 1]}]}',
        '{"n_rows": 4, "n_cols": 4, "shapes": [{"kind": "ellipse", "center": [1, 1],'
        ' "extents": [0, 1]}]}',
        '{"n_rows": 4, "n_cols": 4, "support_margin": -1}',
    ],
)
def test_invalid_spec(json: str) -> None:
    with pytest.raises(pydantic.ValidationError):
        PhantomSpec.model_validate_json(json)


def test_shepp_logan() -> None:
    img, mask = render_phantom(shepp_logan_spec(GridDims(64, 64)))
    assert np.all(img.data.imag == 0)
    assert img.data.real.max() == pytest.approx(1.0)
    # the skull is the brightest part, the brain is 0.2 or above
    assert img.data[32, 32].real == pytest.approx(0.2)
    assert mask.popcount > np.count_nonzero(img.data)
    assert not mask.data[0, 0]


@pytest.mark.parametrize("n_rows,n_cols", [(8, 8), (6, 10), (64, 64)])
def test_quadrant_removed_mask(n_rows: int, n_cols: int) -> None:
    mask = quadrant_removed_mask(GridDims(n_rows, n_cols))
    assert mask.popcount == n_rows * n_cols - (n_rows // 2) * (n_cols // 2)
    assert not mask.data[0, n_cols - 1]
    assert mask.data[0, 0] and mask.data[n_rows - 1, n_cols - 1]


def test_simulation_is_normalized(rng: np.random.Generator) -> None:
    img = ComplexImage(rng.standard_normal((8, 8)))
    data = simulate_kspace(img, full_pattern(img.dims))
    assert np.abs(data.samples).max() == pytest.approx(1.0)
    np.testing.assert_allclose(
        data.samples[0], np.fft.fft2(img.data).ravel() * data.normalization
    )


def test_zero_image_simulation() -> None:
    dims = GridDims(4, 4)
    data = simulate_kspace(ComplexImage.zeros(dims), full_pattern(dims))
    assert data.normalization == 1.0
    assert not data.samples.any()


def test_seeded_noise(rng: np.random.Generator) -> None:
    img = ComplexImage(rng.standard_normal((32, 32)))
    pattern = full_pattern(img.dims)
    clean = simulate_kspace(img, pattern)

    first = simulate_kspace(img, pattern, noise_sigma=0.01, seed=7)
    second = simulate_kspace(img, pattern, noise_sigma=0.01, seed=7)
    other = simulate_kspace(img, pattern, noise_sigma=0.01, seed=8)

    np.testing.assert_array_equal(first.samples, second.samples)
    assert not np.array_equal(first.samples, other.samples)

    noise = first.samples - clean.samples
    assert np.std(noise.real) == pytest.approx(0.01, rel=0.1)
    assert np.std(noise.imag) == pytest.approx(0.01, rel=0.1)


@pytest.mark.parametrize("sigma", [1e-3, 0.05, 2.0])
@pytest.mark.parametrize("seed", [0, 1, 12345])
def test_noise_standard_deviation(sigma: float, seed: int) -> None:
    img = ComplexImage(np.ones((100, 100)))
    pattern = full_pattern(img.dims)
    clean = simulate_kspace(img, pattern)
    noisy = simulate_kspace(img, pattern, noise_sigma=sigma, seed=seed)

    noise = noisy.samples - clean.samples
    assert noise.size == 10_000
    assert np.std(noise.real) == pytest.approx(sigma, rel=0.05)
    assert np.std(noise.imag) == pytest.approx(sigma, rel=0.05)


def test_negative_noise() -> None:
    img = ComplexImage(np.ones((4, 4)))
    with pytest.raises(ValueError):
        simulate_kspace(img, full_pattern(img.dims), noise_sigma=-1)


def test_simulation_dimension_mismatch() -> None:
    with pytest.raises(DimMismatch):
        simulate_kspace(ComplexImage(np.ones((4, 4))), full_pattern(GridDims(4, 6)))


def test_metrics() -> None:
    b = ComplexImage(np.ones((2, 2)))
    a = ComplexImage(np.array([[2, 1], [1, 1]]))

    res = metrics(a, b)
    assert res.mse == 0.25
    assert res.max_abs_diff == 1
    assert res.rel_l2 == 0.5

    mask = SupportMask(np.array([[0, 1], [1, 1]]))
    assert metrics(a, b, mask).max_abs_diff == 0

    identical = metrics(b, b)
    assert (identical.mse, identical.max_abs_diff, identical.rel_l2) == (0, 0, 0)


def test_metrics_against_zero() -> None:
    zero = ComplexImage.zeros(GridDims(2, 2))
    assert metrics(zero, zero).rel_l2 == 0
    assert math.isinf(metrics(ComplexImage(np.ones((2, 2))), zero).rel_l2)
