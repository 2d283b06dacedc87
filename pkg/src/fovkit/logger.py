"""The package wide logger; the command line adjusts its level."""

import logging

handler = logging.StreamHandler()
handler.setFormatter(logging.Formatter(fmt="%(levelname)s: %(message)s"))

LOGGER = logging.getLogger("fovkit")
LOGGER.setLevel(logging.INFO)
LOGGER.addHandler(handler)


def set_verbosity(verbose: bool = False, quiet: bool = False) -> None:
    """Log everything with ``verbose``, only warnings and errors with
    ``quiet`` and informational messages otherwise.

    """
    if verbose and quiet:
        raise ValueError("verbose and quiet are mutually exclusive")
    if verbose:
        LOGGER.setLevel(logging.DEBUG)
    elif quiet:
        LOGGER.setLevel(logging.WARNING)
    else:
        LOGGER.setLevel(logging.INFO)
