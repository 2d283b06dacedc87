"""Model-based reconstruction.

The unknowns are only the pixels inside the field of view; the forward model
scatters them onto the grid, weights them with the coil sensitivities, applies
the DFT and keeps the acquired frequencies. The least-squares problem is
solved with LSQR, POCS is provided as the classic alternative that iterates
on the full grid.

"""

from dataclasses import dataclass, field
from enum import StrEnum, auto, unique
import typing

import numpy as np
import numpy.typing as npt
import scipy.fft

from fovkit.core_types import (
    ComplexImage,
    CoilSet,
    SamplingPattern,
    SupportMask,
)
from fovkit.errors import (
    DimMismatch,
    LengthMismatch,
    MultiCoilNotAllowed,
    ProblemTooLarge,
)
from fovkit.logger import LOGGER

#: largest number of unknowns for which the dense pseudo-inverse is computed
MAX_DENSE_UNKNOWNS = 4096


@dataclass(frozen=True, eq=False)
class ForwardModel:
    """The linear map from the pixels inside ``S`` to the acquired samples
    of all coils.

    """

    S: SupportMask
    pattern: SamplingPattern

    #: sensitivities of the receive coils, a single unit coil if omitted
    coils: CoilSet | None = None

    def __post_init__(self) -> None:
        if self.S.dims != self.pattern.dims:
            raise DimMismatch(self.S.dims.shape, self.pattern.dims.shape)
        if self.coils is not None and self.coils.dims != self.S.dims:
            raise DimMismatch(self.S.dims.shape, self.coils.dims.shape)

    @property
    def C(self) -> int:
        return 1 if self.coils is None else self.coils.C

    @property
    def n_unknowns(self) -> int:
        return self.S.popcount

    @property
    def n_samples(self) -> int:
        return self.C * self.pattern.popcount

    def _sensitivities(self) -> np.ndarray:
        if self.coils is None:
            return np.ones((1, *self.S.dims.shape), dtype=np.complex128)
        return self.coils.sensitivities

    def forward(self, x: npt.ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.n_unknowns,):
            raise LengthMismatch(self.n_unknowns, x.size)
        img = np.zeros(self.S.dims.shape, dtype=np.complex128)
        img[self.S.data] = x
        spectra = scipy.fft.fft2(self._sensitivities() * img, axes=(-2, -1))
        return spectra[:, self.pattern.data].ravel()

    def adjoint(self, y: npt.ArrayLike) -> np.ndarray:
        y = np.asarray(y, dtype=np.complex128)
        if y.shape != (self.n_samples,):
            raise LengthMismatch(self.n_samples, y.size)
        spectra = np.zeros((self.C, *self.S.dims.shape), dtype=np.complex128)
        spectra[:, self.pattern.data] = y.reshape(self.C, -1)
        # the adjoint of the unnormalized DFT is the unnormalized inverse DFT
        imgs = scipy.fft.ifft2(spectra, axes=(-2, -1), norm="forward")
        img = np.sum(self._sensitivities().conj() * imgs, axis=0)
        return img[self.S.data]

    def to_dense(self) -> np.ndarray:
        """Materialize the model as a matrix by applying it to unit vectors."""
        if self.n_unknowns > MAX_DENSE_UNKNOWNS:
            raise ProblemTooLarge(
                f"{self.n_unknowns} unknowns exceed the limit of "
                f"{MAX_DENSE_UNKNOWNS} for dense matrices"
            )
        mat = np.empty((self.n_samples, self.n_unknowns), dtype=np.complex128)
        for i, unit in enumerate(np.eye(self.n_unknowns, dtype=np.complex128)):
            mat[:, i] = self.forward(unit)
        return mat


def forward(model: ForwardModel, x: npt.ArrayLike) -> np.ndarray:
    return model.forward(x)


def adjoint(model: ForwardModel, y: npt.ArrayLike) -> np.ndarray:
    return model.adjoint(y)


@unique
class StopReason(StrEnum):
    #: the residual (or the normal equation residual) fell below the tolerance
    TOLERANCE = auto()

    #: the iteration limit was reached first
    MAX_ITERS = auto()


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    stop_reason: StopReason

    #: norm of the data residual, starting with the initial iterate
    residual_history: list[float] = field(default_factory=list)

    #: norm of the change of the iterate (POCS only)
    change_history: list[float] = field(default_factory=list)


def lsqr(
    matvec: typing.Callable[[np.ndarray], np.ndarray],
    rmatvec: typing.Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    n: int,
    tol: float,
    max_iters: int,
) -> tuple[np.ndarray, SolveReport]:
    """Solve ``min ||A x - b||_2`` with the Golub-Kahan bidiagonalization of
    Paige and Saunders, starting at ``x = 0``.

    The iteration stops as soon as either ``||A x - b|| <= tol * ||b||`` or
    ``||A^H (A x - b)|| <= tol * ||A|| * ||A x - b||``, the latter being the
    criterion for inconsistent systems. ``||A||`` is the Frobenius norm
    estimate accumulated from the bidiagonalization.

    """
    x = np.zeros(n, dtype=np.complex128)
    beta = float(np.linalg.norm(b))
    if beta == 0:
        LOGGER.warning("The right-hand side is zero, returning the zero solution")
        return x, SolveReport(
            iterations=0, stop_reason=StopReason.TOLERANCE, residual_history=[0.0]
        )

    u = b / beta
    v = rmatvec(u)
    alpha = float(np.linalg.norm(v))
    if alpha == 0:
        # b is orthogonal to the range of A, x = 0 is a least-squares solution
        return x, SolveReport(
            iterations=0, stop_reason=StopReason.TOLERANCE, residual_history=[beta]
        )
    v = v / alpha
    w = v.copy()

    b_norm = beta
    a_norm = 0.0
    phibar = beta
    rhobar = alpha
    history = [phibar]
    stop_reason = StopReason.MAX_ITERS
    itn = 0

    while itn < max_iters:
        itn += 1

        # continue the bidiagonalization
        u = matvec(v) - alpha * u
        beta = float(np.linalg.norm(u))
        if beta > 0:
            u = u / beta
            a_norm = float(np.linalg.norm([a_norm, alpha, beta]))
            v = rmatvec(u) - beta * v
            alpha = float(np.linalg.norm(v))
            if alpha > 0:
                v = v / alpha

        # plane rotation eliminating the subdiagonal element beta
        rho = float(np.hypot(rhobar, beta))
        cs = rhobar / rho
        sn = beta / rho
        theta = sn * alpha
        rhobar = -cs * alpha
        phi = cs * phibar
        phibar = sn * phibar

        x = x + (phi / rho) * w
        w = v - (theta / rho) * w

        history.append(phibar)
        normal_residual = phibar * alpha * abs(cs)
        LOGGER.debug("LSQR iteration %d: residual %.3e", itn, phibar)

        if phibar <= tol * b_norm or normal_residual <= tol * a_norm * phibar:
            stop_reason = StopReason.TOLERANCE
            break
        if alpha == 0 or beta == 0:
            # the Krylov space is exhausted, x is the exact solution
            stop_reason = StopReason.TOLERANCE
            break

    return x, SolveReport(
        iterations=itn, stop_reason=stop_reason, residual_history=history
    )


def _solve(
    model: ForwardModel, b: npt.ArrayLike, tol: float, max_iters: int
) -> tuple[np.ndarray, SolveReport]:
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")
    b = np.asarray(b, dtype=np.complex128).ravel()
    if b.size != model.n_samples:
        raise LengthMismatch(model.n_samples, b.size)

    x, report = lsqr(
        model.forward, model.adjoint, b, model.n_unknowns, tol, max_iters
    )
    log = LOGGER.info if report.stop_reason == StopReason.TOLERANCE else LOGGER.warning
    log(
        "LSQR stopped after %d iterations (%s), residual %.3e",
        report.iterations,
        report.stop_reason,
        report.residual_history[-1],
    )
    return x, report


def solve_lsqr(
    model: ForwardModel, b: npt.ArrayLike, tol: float = 1e-8, max_iters: int = 500
) -> tuple[np.ndarray, SolveReport]:
    """Least-squares estimate of the pixels inside the field of view."""
    if model.C != 1:
        raise MultiCoilNotAllowed(
            f"The model has {model.C} coils, use solve_parallel instead"
        )
    return _solve(model, b, tol, max_iters)


def solve_parallel(
    model: ForwardModel, b: npt.ArrayLike, tol: float = 1e-8, max_iters: int = 500
) -> tuple[np.ndarray, SolveReport]:
    """Least-squares estimate from the stacked data of all coils, ordered
    coil by coil.

    """
    if model.coils is None:
        raise ValueError("solve_parallel requires a model with coil sensitivities")
    return _solve(model, b, tol, max_iters)


def solve_pinv(model: ForwardModel, b: npt.ArrayLike) -> np.ndarray:
    """Minimum norm least-squares solution from the dense matrix."""
    b = np.asarray(b, dtype=np.complex128).ravel()
    if b.size != model.n_samples:
        raise LengthMismatch(model.n_samples, b.size)
    x, _, rank, _ = np.linalg.lstsq(model.to_dense(), b, rcond=None)
    if rank < model.n_unknowns:
        LOGGER.warning(
            "The model is rank deficient (rank %d of %d unknowns)",
            rank,
            model.n_unknowns,
        )
    return x


def solve_pocs(
    S: SupportMask,
    pattern: SamplingPattern,
    b: npt.ArrayLike,
    tol: float = 1e-8,
    max_iters: int = 500,
) -> tuple[ComplexImage, SolveReport]:
    """Alternate between enforcing the acquired samples and zeroing the
    pixels outside the field of view, starting with the zero image.

    Stops when the data residual drops below ``tol * ||b||`` or the change of
    the iterate drops below ``tol * ||x||``.

    """
    if S.dims != pattern.dims:
        raise DimMismatch(S.dims.shape, pattern.dims.shape)
    b = np.asarray(b, dtype=np.complex128).ravel()
    if b.size != pattern.popcount:
        raise LengthMismatch(pattern.popcount, b.size)

    b_norm = float(np.linalg.norm(b))
    x = np.zeros(S.dims.shape, dtype=np.complex128)
    spectrum = np.zeros_like(x)
    residuals = [b_norm]
    changes: list[float] = []
    stop_reason = StopReason.MAX_ITERS

    if b_norm == 0:
        LOGGER.warning("The data is zero, returning the zero image")
        return ComplexImage(x), SolveReport(
            iterations=0, stop_reason=StopReason.TOLERANCE, residual_history=[0.0]
        )

    itn = 0
    while itn < max_iters:
        itn += 1
        spectrum[pattern.data] = b
        x_new = np.where(S.data, scipy.fft.ifft2(spectrum), 0)
        spectrum = scipy.fft.fft2(x_new)

        residuals.append(float(np.linalg.norm(spectrum[pattern.data] - b)))
        changes.append(float(np.linalg.norm(x_new - x)))
        x = x_new
        LOGGER.debug(
            "POCS iteration %d: residual %.3e, change %.3e",
            itn,
            residuals[-1],
            changes[-1],
        )

        if residuals[-1] <= tol * b_norm or changes[-1] <= tol * float(
            np.linalg.norm(x)
        ):
            stop_reason = StopReason.TOLERANCE
            break

    log = LOGGER.info if stop_reason == StopReason.TOLERANCE else LOGGER.warning
    log("POCS stopped after %d iterations (%s)", itn, stop_reason)
    return ComplexImage(x), SolveReport(
        iterations=itn,
        stop_reason=stop_reason,
        residual_history=residuals,
        change_history=changes,
    )
