import configparser
import dataclasses
import os
import os.path
import typing

from fovkit.logger import LOGGER


def _default_rc_path() -> str:
    return os.path.join(
        os.getenv("XDG_CONFIG_HOME", os.path.expanduser("~/.config")),
        "fovkit",
        "fovkitrc",
    )


@dataclasses.dataclass(frozen=True)
class Settings:
    """Defaults for the command line, overridable via the rc file, the
    environment and finally the command line flags.

    """

    #: number of workers used by :py:mod:`scipy.fft`
    threads: int = 1

    #: relative residual at which the iterative solvers stop
    tol: float = 1e-8

    #: upper bound on the iterations of the iterative solvers
    max_iters: int = 500

    #: fraction of the maximum magnitude above which a pixel belongs to a
    #: coil's support
    support_threshold: float = 0.05

    #: width in pixels of the box filter used for sensitivity estimation
    smoothing_width: int = 5

    #: seed of the noise generator
    seed: int = 0

    #: environment variables read by :py:meth:`Settings.from_env`
    _ENV_VARS: typing.ClassVar[dict[str, str]] = {
        "threads": "FOVKIT_THREADS",
        "tol": "FOVKIT_TOL",
        "max_iters": "FOVKIT_MAX_ITERS",
    }

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if not 0 < self.support_threshold < 1:
            raise ValueError(
                "support_threshold must lie in (0, 1), "
                f"got {self.support_threshold}"
            )
        if self.smoothing_width < 1 or self.smoothing_width % 2 == 0:
            raise ValueError(
                f"smoothing_width must be a positive odd number, "
                f"got {self.smoothing_width}"
            )

    @staticmethod
    def from_rc(path: str | None = None) -> "Settings":
        """Create the settings from the ``[general]`` section of the fovkitrc
        file. A missing file yields the built-in defaults.

        """
        path = path or _default_rc_path()
        if not os.path.isfile(path):
            LOGGER.debug("No config file at %s, using defaults", path)
            return Settings()

        with open(path, "r", encoding="utf-8") as rc_f:
            rc = configparser.ConfigParser()
            rc.read_file(rc_f)

        if "general" not in rc:
            raise ValueError(f"{path} is missing the general section")

        sect = rc["general"]
        kwargs: dict[str, int | float] = {}
        try:
            for field in dataclasses.fields(Settings):
                if field.name in sect:
                    kwargs[field.name] = _convert(field.type, sect[field.name])
        except ValueError as err:
            raise ValueError(f"Invalid value in {path}: {err}") from err

        return Settings(**kwargs)  # type: ignore[arg-type]

    def from_env(self) -> "Settings":
        """Overlay the ``FOVKIT_*`` environment variables onto these
        settings.

        """
        overrides: dict[str, int | float] = {}
        for name, env_var in self._ENV_VARS.items():
            if (val := os.getenv(env_var)) is None or not val.strip():
                continue
            field_type = {f.name: f.type for f in dataclasses.fields(self)}[name]
            try:
                overrides[name] = _convert(field_type, val)
            except ValueError:
                raise ValueError(
                    f"environment variable {env_var} has an invalid value '{val}'"
                )

        return dataclasses.replace(self, **overrides)  # type: ignore[arg-type]


def _convert(tp: object, value: str) -> int | float:
    if tp in (int, "int"):
        return int(value)
    return float(value)
