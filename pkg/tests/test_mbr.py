import logging

import numpy as np
import pytest

from fovkit.core_types import (
    ComplexImage,
    CoilSet,
    GridDims,
    SamplingPattern,
    SupportMask,
    gather,
    scatter,
)
from fovkit.decomposition import decompose
from fovkit.errors import LengthMismatch, MultiCoilNotAllowed, ProblemTooLarge
from fovkit.fourier import ifft2
from fovkit.mbr import (
    ForwardModel,
    StopReason,
    adjoint,
    forward,
    solve_lsqr,
    solve_parallel,
    solve_pinv,
    solve_pocs,
)
from fovkit.pattern import (
    ColumnParity,
    burden,
    full_pattern,
    reduced_pattern,
    thin_pattern,
)
from fovkit.phantom import metrics, simulate_kspace
from tests.conftest import inner, random_image, random_support


def _rel_err(x: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(x - ref) / np.linalg.norm(ref))


def _random_coils(rng: np.random.Generator, dims: GridDims, count: int) -> CoilSet:
    shape = (count, *dims.shape)
    return CoilSet(
        sensitivities=rng.standard_normal(shape) + 1j * rng.standard_normal(shape),
        supports=np.ones(shape, dtype=bool),
    )


def test_forward_of_delta() -> None:
    dims = GridDims(4, 6)
    model = ForwardModel(SupportMask.ones(dims), full_pattern(dims))
    x = np.zeros(24)
    x[0] = 1
    np.testing.assert_allclose(forward(model, x), np.ones(24))


@pytest.mark.parametrize("coil_count", [None, 1, 2])
def test_adjoint_dot_product(
    coil_count: int | None, quadrant_8: SupportMask, rng: np.random.Generator
) -> None:
    # 37 unknowns
    data = quadrant_8.data.copy()
    data[0:2, :] = False
    data[2, 0:3] = False
    S = SupportMask(data)
    assert S.popcount == 37

    pattern = reduced_pattern(decompose(quadrant_8))
    assert burden(pattern) == 0.75
    coils = None if coil_count is None else _random_coils(rng, S.dims, coil_count)
    model = ForwardModel(S, pattern, coils)

    x = rng.standard_normal(37) + 1j * rng.standard_normal(37)
    y = rng.standard_normal(model.n_samples) + 1j * rng.standard_normal(
        model.n_samples
    )
    ax = forward(model, x)
    lhs = inner(ax, y)
    rhs = inner(x, adjoint(model, y))
    assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(ax) * np.linalg.norm(y)


def test_dense_matrix(rng: np.random.Generator) -> None:
    dims = GridDims(4, 4)
    S = SupportMask(rng.random(dims.shape) < 0.6)
    pattern = SamplingPattern(rng.random(dims.shape) < 0.7)
    model = ForwardModel(S, pattern)
    mat = model.to_dense()

    # the DFT kernel evaluated at every acquired frequency and pixel
    k_rows, k_cols = np.nonzero(pattern.data)
    rows, cols = np.nonzero(S.data)
    expected = np.exp(
        -2j
        * np.pi
        * (
            np.outer(k_rows, rows) / dims.n_rows
            + np.outer(k_cols, cols) / dims.n_cols
        )
    )
    np.testing.assert_allclose(mat, expected, atol=1e-12)

    x = rng.standard_normal(S.popcount) + 1j * rng.standard_normal(S.popcount)
    np.testing.assert_allclose(model.forward(x), mat @ x, atol=1e-12)


def test_dense_matrix_size_limit() -> None:
    dims = GridDims(128, 64)
    model = ForwardModel(SupportMask.ones(dims), full_pattern(dims))
    with pytest.raises(ProblemTooLarge):
        model.to_dense()


def test_length_mismatch(quadrant_8: SupportMask) -> None:
    model = ForwardModel(quadrant_8, reduced_pattern(decompose(quadrant_8)))
    with pytest.raises(LengthMismatch):
        model.forward(np.ones(3))
    with pytest.raises(LengthMismatch):
        model.adjoint(np.ones(3))
    with pytest.raises(LengthMismatch):
        solve_lsqr(model, np.ones(3))


def test_lsqr_on_the_full_grid(rng: np.random.Generator) -> None:
    dims = GridDims(8, 6)
    S = SupportMask.ones(dims)
    b = rng.standard_normal(dims.size) + 1j * rng.standard_normal(dims.size)

    x, report = solve_lsqr(ForwardModel(S, full_pattern(dims)), b)

    expected = ifft2(ComplexImage(b.reshape(dims.shape))).data.ravel()
    np.testing.assert_allclose(x, expected, atol=1e-10)
    assert report.stop_reason == StopReason.TOLERANCE


@pytest.mark.parametrize("seed", range(20))
def test_lsqr_matches_the_pseudo_inverse(seed: int) -> None:
    rng = np.random.default_rng(seed)
    dims = [GridDims(4, 4), GridDims(6, 4), GridDims(8, 8), GridDims(8, 6)][seed % 4]
    S = random_support(rng, dims)
    model = ForwardModel(S, reduced_pattern(decompose(S)))

    x0 = gather(S, random_image(rng, S))
    consistent = model.forward(x0)
    noise = rng.standard_normal(model.n_samples) + 1j * rng.standard_normal(
        model.n_samples
    )

    x_pinv = solve_pinv(model, consistent)
    assert _rel_err(x_pinv, x0) <= 1e-8

    x_lsqr, _ = solve_lsqr(model, consistent, tol=1e-12)
    assert _rel_err(x_lsqr, x0) <= 1e-8

    # inconsistent data
    b = consistent + 0.1 * noise
    x_lsqr, _ = solve_lsqr(model, b, tol=1e-12)
    assert _rel_err(x_lsqr, solve_pinv(model, b)) <= 1e-8


def test_lsqr_iteration_limit(
    quadrant_32: SupportMask, rng: np.random.Generator
) -> None:
    model = ForwardModel(quadrant_32, reduced_pattern(decompose(quadrant_32)))
    b = model.forward(gather(quadrant_32, random_image(rng, quadrant_32)))

    _, report = solve_lsqr(model, b, max_iters=1)
    assert report.iterations == 1
    assert report.stop_reason == StopReason.MAX_ITERS

    _, report = solve_lsqr(model, b, tol=1e-10)
    assert report.stop_reason == StopReason.TOLERANCE
    assert report.residual_history[0] == pytest.approx(np.linalg.norm(b))
    assert all(
        later <= earlier
        for earlier, later in zip(report.residual_history, report.residual_history[1:])
    )
    assert report.residual_history[-1] <= 1e-10 * np.linalg.norm(b)


def test_lsqr_with_zero_data(
    quadrant_8: SupportMask, caplog: pytest.LogCaptureFixture
) -> None:
    model = ForwardModel(quadrant_8, reduced_pattern(decompose(quadrant_8)))
    with caplog.at_level(logging.WARNING, logger="fovkit"):
        x, report = solve_lsqr(model, np.zeros(model.n_samples))

    assert not x.any()
    assert report.iterations == 0
    assert report.stop_reason == StopReason.TOLERANCE
    assert "zero" in caplog.text


@pytest.mark.parametrize("tol,max_iters", [(0, 10), (-1e-8, 10), (1e-8, 0)])
def test_invalid_solver_parameters(
    tol: float, max_iters: int, quadrant_8: SupportMask
) -> None:
    model = ForwardModel(quadrant_8, reduced_pattern(decompose(quadrant_8)))
    with pytest.raises(ValueError):
        solve_lsqr(model, np.ones(model.n_samples), tol=tol, max_iters=max_iters)


def test_pocs_on_the_full_grid(
    quadrant_8: SupportMask, rng: np.random.Generator
) -> None:
    img = random_image(rng, quadrant_8)
    data = simulate_kspace(img, full_pattern(quadrant_8.dims))

    recon, report = solve_pocs(quadrant_8, data.pattern, data.samples[0])
    assert report.iterations == 1
    assert report.stop_reason == StopReason.TOLERANCE
    np.testing.assert_allclose(recon.data, data.normalization * img.data, atol=1e-12)


def _iterations_to_reach(residual_history: list[float], target: float) -> int | None:
    return next((k for k, res in enumerate(residual_history) if res <= target), None)


def test_pocs_is_slower_than_lsqr(
    quadrant_32: SupportMask, rng: np.random.Generator
) -> None:
    img = random_image(rng, quadrant_32)
    pattern = reduced_pattern(decompose(quadrant_32))
    data = simulate_kspace(img, pattern)
    b = data.samples[0]
    truth = ComplexImage(data.normalization * img.data)

    x, lsqr_report = solve_lsqr(
        ForwardModel(quadrant_32, pattern), b, tol=1e-10, max_iters=500
    )
    pocs_img, pocs_report = solve_pocs(
        quadrant_32, pattern, b, tol=1e-10, max_iters=500
    )

    assert lsqr_report.stop_reason == StopReason.TOLERANCE
    assert pocs_report.stop_reason == StopReason.TOLERANCE
    assert len(lsqr_report.residual_history) == lsqr_report.iterations + 1
    assert len(pocs_report.change_history) == pocs_report.iterations
    assert len(pocs_report.residual_history) == pocs_report.iterations + 1

    target = 1e-6 * float(np.linalg.norm(b))
    lsqr_iters = _iterations_to_reach(lsqr_report.residual_history, target)
    pocs_iters = _iterations_to_reach(pocs_report.residual_history, target)
    assert lsqr_iters is not None
    assert pocs_iters is not None
    assert lsqr_iters < pocs_iters

    assert metrics(scatter(quadrant_32, x), truth).rel_l2 <= 1e-5
    assert metrics(pocs_img, truth).rel_l2 <= 1e-4


def test_pocs_iteration_limit(
    quadrant_32: SupportMask, rng: np.random.Generator
) -> None:
    pattern = reduced_pattern(decompose(quadrant_32))
    data = simulate_kspace(random_image(rng, quadrant_32), pattern)

    _, report = solve_pocs(quadrant_32, pattern, data.samples[0], max_iters=3)
    assert report.iterations == 3
    assert report.stop_reason == StopReason.MAX_ITERS


def test_pocs_with_zero_data(quadrant_8: SupportMask) -> None:
    pattern = reduced_pattern(decompose(quadrant_8))
    img, report = solve_pocs(quadrant_8, pattern, np.zeros(pattern.popcount))
    assert not img.data.any()
    assert report.iterations == 0


def _sub_nyquist_coils(dims: GridDims) -> CoilSet:
    rows, cols = np.indices(dims.shape)
    sens = np.stack(
        [
            np.exp(1j * np.pi * cols / dims.n_cols) * (1 + 0.3 * rows / dims.n_rows),
            (1.2 - 0.3 * rows / dims.n_rows) * np.ones(dims.shape),
        ]
    )
    return CoilSet(sensitivities=sens, supports=np.ones(sens.shape, dtype=bool))


def test_parallel_recovery_below_the_single_coil_rate(
    quadrant_32: SupportMask, rng: np.random.Generator
) -> None:
    single_coil_pattern = reduced_pattern(decompose(quadrant_32))
    pattern = thin_pattern(single_coil_pattern, ColumnParity.ODD)
    assert burden(pattern) < burden(single_coil_pattern)

    img = random_image(rng, quadrant_32)
    coils = _sub_nyquist_coils(quadrant_32.dims)
    data = simulate_kspace(img, pattern, coils)
    truth = ComplexImage(data.normalization * img.data)

    x, report = solve_parallel(
        ForwardModel(quadrant_32, pattern, coils),
        data.samples.ravel(),
        tol=1e-12,
        max_iters=1000,
    )
    assert report.stop_reason == StopReason.TOLERANCE
    assert metrics(scatter(quadrant_32, x), truth).rel_l2 <= 1e-6

    single = simulate_kspace(img, pattern)
    x_single, _ = solve_lsqr(
        ForwardModel(quadrant_32, pattern), single.samples[0], tol=1e-12
    )
    expected = ComplexImage(single.normalization * img.data)
    assert metrics(scatter(quadrant_32, x_single), expected).rel_l2 > 1e-2


def test_parallel_with_a_uniform_coil(
    quadrant_8: SupportMask, rng: np.random.Generator
) -> None:
    pattern = reduced_pattern(decompose(quadrant_8))
    b = simulate_kspace(random_image(rng, quadrant_8), pattern).samples[0]

    x_lsqr, _ = solve_lsqr(ForwardModel(quadrant_8, pattern), b)
    x_par, _ = solve_parallel(
        ForwardModel(quadrant_8, pattern, CoilSet.uniform(quadrant_8)), b
    )
    np.testing.assert_allclose(x_par, x_lsqr, atol=1e-12)


def test_solver_coil_requirements(
    quadrant_8: SupportMask, rng: np.random.Generator
) -> None:
    pattern = reduced_pattern(decompose(quadrant_8))
    multi = ForwardModel(quadrant_8, pattern, _random_coils(rng, quadrant_8.dims, 2))
    with pytest.raises(MultiCoilNotAllowed):
        solve_lsqr(multi, np.ones(multi.n_samples))

    with pytest.raises(ValueError):
        solve_parallel(ForwardModel(quadrant_8, pattern), np.ones(pattern.popcount))
