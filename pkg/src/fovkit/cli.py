"""The ``fovkit`` command line.

Every subcommand reads its inputs from files, writes its results to files and
exits. The exit code is 0 on success, 2 for usage errors and invalid
arguments, 3 for unreadable or malformed files and 4 for numerical failures.
Running out of iterations is not a failure, it is recorded in the report.

"""

import argparse
import dataclasses
from enum import StrEnum, auto, unique
import functools
import math
import operator
import typing

import numpy as np
from pydantic import BaseModel, ValidationError
import scipy.fft

from fovkit.coils import coil_support, estimate_sensitivities, roemer_combine
from fovkit.config import Settings
from fovkit.core_types import (
    ComplexImage,
    CoilSet,
    GridDims,
    SamplingPattern,
    SupportMask,
    scatter,
)
from fovkit.decomposition import decompose
from fovkit.direct_recon import recon_direct, recon_direct_parallel
from fovkit.errors import (
    CoilCountMismatch,
    DimMismatch,
    FormatError,
    FovkitError,
    MultiCoilNotAllowed,
    NumericalError,
)
from fovkit.formats import (
    magnitude_to_gray,
    read_cfov,
    read_images,
    read_kspace,
    read_mask,
    read_pattern,
    write_cfov,
    write_images,
    write_kspace,
    write_mask,
    write_pattern,
    write_pgm,
)
from fovkit.fourier import centered
from fovkit.logger import LOGGER, set_verbosity
from fovkit.mbr import (
    ForwardModel,
    SolveReport,
    StopReason,
    solve_lsqr,
    solve_parallel,
    solve_pinv,
    solve_pocs,
)
from fovkit.pattern import (
    ColumnParity,
    burden,
    pattern_for_coils,
    pattern_for_union,
    reduced_pattern,
    thin_pattern,
)
from fovkit.phantom import (
    PhantomSpec,
    metrics,
    render_phantom,
    shepp_logan_spec,
    simulate_kspace,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_NUMERICAL = 4


@unique
class ReconMethod(StrEnum):
    DIRECT = auto()
    LSQR = auto()
    POCS = auto()
    PINV = auto()


class PatternReport(BaseModel):
    H_inner: int
    m: int
    burden: float

    #: number of coils, only present when sensitivities were given
    coils: int | None = None

    #: decimation factor of every coil's own field of view
    coil_m: list[int] | None = None


class ReconReport(BaseModel):
    method: ReconMethod
    iterations: int = 0
    stop_reason: StopReason | None = None
    residual_history: list[float] | None = None
    change_history: list[float] | None = None

    @staticmethod
    def from_solve_report(method: ReconMethod, report: SolveReport) -> "ReconReport":
        return ReconReport(
            method=method,
            iterations=report.iterations,
            stop_reason=report.stop_reason,
            residual_history=report.residual_history,
            change_history=report.change_history or None,
        )


class MetricsReport(BaseModel):
    mse: float
    max_abs_diff: float

    #: null if the reference is zero but the compared image is not
    rel_l2: float | None


def _write_json(path: str, report: BaseModel, exclude_none: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as json_f:
        json_f.write(
            report.model_dump_json(indent=2, exclude_none=exclude_none) + "\n"
        )


def _read_single_image(path: str) -> ComplexImage:
    images = read_images(path)
    if len(images) != 1:
        raise FormatError(f"{path} contains {len(images)} images, expected one")
    return images[0]


def _read_sensitivities(path: str) -> np.ndarray:
    raster = read_cfov(path)
    if raster.is_kspace:
        raise FormatError(f"{path} contains k-space data, expected sensitivities")
    return raster.data


def _load_coils(path: str, mask: SupportMask, theta: float) -> CoilSet:
    """Read the sensitivities and restrict every coil's field of view to the
    pixels of ``mask`` where the coil is sensitive.

    """
    sens = _read_sensitivities(path)
    if sens.shape[1:] != mask.dims.shape:
        raise DimMismatch(mask.dims.shape, sens.shape[1:])
    supports = [(coil_support(ComplexImage(s), theta) & mask).data for s in sens]
    return CoilSet(sensitivities=sens, supports=np.stack(supports))


def _grid_dims(value: str) -> GridDims:
    rows, _, cols = value.lower().partition("x")
    return GridDims(int(rows), int(cols))


def _cmd_phantom(args: argparse.Namespace, settings: Settings) -> None:
    if args.shepp_logan is not None:
        spec = shepp_logan_spec(args.shepp_logan)
    else:
        with open(args.spec, "r", encoding="utf-8") as spec_f:
            content = spec_f.read()
        try:
            spec = PhantomSpec.model_validate_json(content)
        except ValidationError as err:
            raise FormatError(f"Invalid phantom description {args.spec}: {err}")

    img, mask = render_phantom(spec)
    write_images(args.out_img, [img])
    write_mask(args.out_mask, mask)


def _cmd_pattern(args: argparse.Namespace, settings: Settings) -> None:
    mask = read_mask(args.mask)
    report: dict[str, typing.Any] = {}

    pattern: SamplingPattern
    if args.coils is None:
        dec = decompose(mask)
        pattern = reduced_pattern(dec)
        report["H_inner"] = dec.H_inner
    else:
        coils = _load_coils(args.coils, mask, settings.support_threshold)
        supports = [coils.support(j) for j in range(coils.C)]
        decs = [decompose(s) for s in supports]
        if args.union:
            pattern = pattern_for_union(supports)
            union = functools.reduce(operator.or_, supports)
            report["H_inner"] = decompose(union).H_inner
        else:
            pattern = pattern_for_coils(decs)
            report["H_inner"] = max(dec.H_inner for dec in decs)
        report["coils"] = coils.C
        report["coil_m"] = [dec.m for dec in decs]

    for parity in args.thin or []:
        pattern = thin_pattern(pattern, parity)

    LOGGER.info(
        "Pattern with m=%d, burden %s", pattern.subsample_factor_m, burden(pattern)
    )
    write_pattern(args.out, pattern)
    if args.report:
        _write_json(
            args.report,
            PatternReport(
                m=pattern.subsample_factor_m, burden=float(burden(pattern)), **report
            ),
        )


def _cmd_simulate(args: argparse.Namespace, settings: Settings) -> None:
    img = _read_single_image(args.img)
    pattern = read_pattern(args.pattern)

    coils = None
    if args.coils is not None:
        sens = _read_sensitivities(args.coils)
        coils = CoilSet(sensitivities=sens, supports=np.ones(sens.shape, dtype=bool))

    data = simulate_kspace(
        img, pattern, coils=coils, noise_sigma=args.noise, seed=settings.seed
    )
    write_kspace(args.out, data)
    if args.out_ref:
        # the image on the scale of the simulated data
        write_images(args.out_ref, [ComplexImage(img.data * data.normalization)])


def _cmd_recon(args: argparse.Namespace, settings: Settings) -> None:
    pattern = read_pattern(args.pattern)
    mask = read_mask(args.mask)
    data = read_kspace(args.data, pattern)
    if mask.dims != pattern.dims:
        raise DimMismatch(pattern.dims.shape, mask.dims.shape)

    coils = None
    if args.coils is not None:
        coils = _load_coils(args.coils, mask, settings.support_threshold)
        if coils.C != data.coils:
            raise CoilCountMismatch(data.coils, coils.C)
    elif data.coils != 1:
        raise MultiCoilNotAllowed(
            f"{args.data} holds {data.coils} coils, pass their sensitivities "
            "with --coils"
        )

    method = args.method
    report = ReconReport(method=method)
    if method == ReconMethod.DIRECT:
        if coils is None:
            img = recon_direct(data, decompose(mask))
        else:
            decs = [decompose(coils.support(j)) for j in range(coils.C)]
            img = recon_direct_parallel(data, decs, coils)
    elif method == ReconMethod.POCS:
        if coils is not None:
            raise MultiCoilNotAllowed("POCS only supports single coil data")
        img, solve_report = solve_pocs(
            mask, pattern, data.samples[0], settings.tol, settings.max_iters
        )
        report = ReconReport.from_solve_report(method, solve_report)
    else:
        model = ForwardModel(mask, pattern, coils)
        b = data.samples.ravel()
        if method == ReconMethod.PINV:
            x = solve_pinv(model, b)
        else:
            solve = solve_lsqr if coils is None else solve_parallel
            x, solve_report = solve(model, b, settings.tol, settings.max_iters)
            report = ReconReport.from_solve_report(method, solve_report)
        img = scatter(mask, x)

    write_images(args.out, [img])
    if args.report:
        _write_json(args.report, report)


def _cmd_combine(args: argparse.Namespace, settings: Settings) -> None:
    images = read_images(args.imgs)
    sens = _read_sensitivities(args.sens)
    coils = CoilSet(sensitivities=sens, supports=np.ones(sens.shape, dtype=bool))
    write_images(args.out, [roemer_combine(images, coils)])


def _cmd_compare(args: argparse.Namespace, settings: Settings) -> None:
    a = _read_single_image(args.a)
    b = _read_single_image(args.b)
    mask = read_mask(args.mask) if args.mask else None
    res = metrics(a, b, mask)
    LOGGER.info(
        "mse %.3e, max abs diff %.3e, rel l2 %.3e",
        res.mse,
        res.max_abs_diff,
        res.rel_l2,
    )
    report = MetricsReport(
        mse=res.mse,
        max_abs_diff=res.max_abs_diff,
        rel_l2=None if math.isinf(res.rel_l2) else res.rel_l2,
    )
    _write_json(args.out, report, exclude_none=False)


def _cmd_estimate(args: argparse.Namespace, settings: Settings) -> None:
    coils = estimate_sensitivities(
        read_images(args.imgs),
        width=settings.smoothing_width,
        theta=settings.support_threshold,
    )
    write_cfov(args.out, coils.sensitivities)


def _cmd_export(args: argparse.Namespace, settings: Settings) -> None:
    img = _read_single_image(args.img)
    if args.minus is not None:
        other = _read_single_image(args.minus)
        if other.dims != img.dims:
            raise DimMismatch(img.dims.shape, other.dims.shape)
        img = ComplexImage(img.data - other.data)
    if args.centered:
        img = centered(img)
    write_pgm(args.out, magnitude_to_gray(img, args.scale))


def _add_settings_flags(parser: argparse.ArgumentParser, *names: str) -> None:
    if "tol" in names:
        parser.add_argument(
            "--tol", type=float, help="relative residual at which to stop"
        )
    if "max_iters" in names:
        parser.add_argument("--max-iters", type=int, help="iteration limit")
    if "threshold" in names:
        parser.add_argument(
            "--threshold",
            type=float,
            help="fraction of the peak sensitivity defining a coil's support",
        )
    if "width" in names:
        parser.add_argument("--width", type=int, help="box filter width in pixels")
    if "seed" in names:
        parser.add_argument("--seed", type=int, help="seed of the noise generator")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fovkit",
        description=(
            "Reduced Fourier sampling patterns and reconstructions for "
            "non-rectangular fields of view"
        ),
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    parser.add_argument("--threads", type=int, help="workers of the FFTs")
    parser.add_argument("--config", help="path to the fovkitrc file")

    subparsers = parser.add_subparsers(dest="command", required=True)

    phantom = subparsers.add_parser("phantom", help="render a phantom")
    source = phantom.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="JSON description of the shapes")
    source.add_argument(
        "--shepp-logan",
        type=_grid_dims,
        metavar="ROWSxCOLS",
        help="render the Shepp-Logan phantom",
    )
    phantom.add_argument("--out-img", required=True)
    phantom.add_argument("--out-mask", required=True)
    phantom.set_defaults(func=_cmd_phantom)

    pattern = subparsers.add_parser("pattern", help="design a sampling pattern")
    pattern.add_argument("--mask", required=True)
    pattern.add_argument("--out", required=True)
    pattern.add_argument("--report")
    pattern.add_argument("--coils", help="coil sensitivities")
    pattern.add_argument(
        "--union",
        action="store_true",
        help="sample the union of the coil fields of view",
    )
    pattern.add_argument(
        "--thin",
        nargs="+",
        type=ColumnParity,
        choices=list(ColumnParity),
        help="drop every other sample of the even or odd columns",
    )
    _add_settings_flags(pattern, "threshold")
    pattern.set_defaults(func=_cmd_pattern)

    simulate = subparsers.add_parser("simulate", help="simulate an acquisition")
    simulate.add_argument("--img", required=True)
    simulate.add_argument("--pattern", required=True)
    simulate.add_argument("--coils", help="coil sensitivities")
    simulate.add_argument("--noise", type=float, default=0.0)
    simulate.add_argument("--out", required=True)
    simulate.add_argument(
        "--out-ref", help="write the image on the scale of the simulated data"
    )
    _add_settings_flags(simulate, "seed")
    simulate.set_defaults(func=_cmd_simulate)

    recon = subparsers.add_parser("recon", help="reconstruct an image")
    recon.add_argument("method", type=ReconMethod, choices=list(ReconMethod))
    recon.add_argument("--data", required=True)
    recon.add_argument("--pattern", required=True)
    recon.add_argument("--mask", required=True)
    recon.add_argument("--coils", help="coil sensitivities")
    recon.add_argument("--out", required=True)
    recon.add_argument("--report")
    _add_settings_flags(recon, "tol", "max_iters", "threshold")
    recon.set_defaults(func=_cmd_recon)

    combine = subparsers.add_parser("combine", help="combine coil images")
    combine.add_argument("--imgs", required=True)
    combine.add_argument("--sens", required=True)
    combine.add_argument("--out", required=True)
    combine.set_defaults(func=_cmd_combine)

    compare = subparsers.add_parser("compare", help="compare two images")
    compare.add_argument("--a", required=True)
    compare.add_argument("--b", required=True, help="the reference")
    compare.add_argument("--mask")
    compare.add_argument("--out", required=True)
    compare.set_defaults(func=_cmd_compare)

    estimate = subparsers.add_parser(
        "estimate", help="estimate coil sensitivities"
    )
    estimate.add_argument("--imgs", required=True)
    estimate.add_argument("--out", required=True)
    _add_settings_flags(estimate, "width", "threshold")
    estimate.set_defaults(func=_cmd_estimate)

    export = subparsers.add_parser("export", help="write a magnitude image")
    export.add_argument("--img", required=True)
    export.add_argument("--out", required=True)
    export.add_argument("--scale", type=float)
    export.add_argument("--centered", action="store_true")
    export.add_argument("--minus", help="subtract this image first")
    export.set_defaults(func=_cmd_export)

    return parser


#: command line flags overriding the fields of :py:class:`Settings`
_SETTINGS_FLAGS = {
    "threads": "threads",
    "tol": "tol",
    "max_iters": "max_iters",
    "support_threshold": "threshold",
    "smoothing_width": "width",
    "seed": "seed",
}


def _settings(args: argparse.Namespace) -> Settings:
    overrides = {
        field: val
        for field, flag in _SETTINGS_FLAGS.items()
        if (val := getattr(args, flag, None)) is not None
    }
    return dataclasses.replace(Settings.from_rc(args.config).from_env(), **overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_USAGE

    set_verbosity(args.verbose, args.quiet)

    try:
        settings = _settings(args)
        LOGGER.debug("Running %s with %s", args.command, settings)
        with scipy.fft.set_workers(settings.threads):
            args.func(args, settings)
    except (FormatError, OSError, ValidationError) as err:
        LOGGER.error("%s", err)
        return EXIT_FORMAT
    except NumericalError as err:
        LOGGER.error("%s", err)
        return EXIT_NUMERICAL
    except (FovkitError, ValueError) as err:
        LOGGER.error("%s", err)
        return EXIT_USAGE

    return EXIT_OK
