"""File formats.

CFOV1
    Complex rasters: the 8 byte magic ``CFOV\\x01\\x00\\x00\\x00``, followed
    by the little endian ``u32`` values ``n_rows``, ``n_cols``, ``n_coils``
    and ``flags`` (bit 0 set for k-space data) and then the rasters of all
    coils in row major order as interleaved little endian ``float64`` real
    and imaginary parts.

PBM (P1)
    Masks and sampling patterns as plain text bitmaps, 1 marks a pixel inside
    the field of view or an acquired sample. Patterns carry the comment
    ``# subsample_factor_m=<m>``.

PGM (P5)
    16 bit big endian magnitude images for display.

K-space data is stored as a CFOV1 raster of the full grid accompanied by a
PBM pattern; entries outside of the pattern are written as 0 and ignored
when reading.

"""

from dataclasses import dataclass
import re

import numpy as np
import numpy.typing as npt

from fovkit.core_types import ComplexImage, KSpaceData, SamplingPattern, SupportMask
from fovkit.errors import FormatError, FovkitError
from fovkit.logger import LOGGER
from fovkit.pattern import infer_subsample_factor

CFOV_MAGIC = b"CFOV\x01\x00\x00\x00"

_FLAG_KSPACE = 0x1

_HEADER_DTYPE = np.dtype("<u4")
_PAYLOAD_DTYPE = np.dtype("<c16")
_HEADER_SIZE = len(CFOV_MAGIC) + 4 * _HEADER_DTYPE.itemsize

_PGM_MAX = 65535

_M_COMMENT = re.compile(r"subsample_factor_m\s*=\s*(\d+)")


@dataclass(frozen=True, eq=False)
class Raster:
    """Contents of a CFOV1 file."""

    #: array of the shape ``(coils, n_rows, n_cols)``
    data: np.ndarray

    is_kspace: bool = False

    @property
    def coils(self) -> int:
        return int(self.data.shape[0])


def write_cfov(path: str, data: npt.ArrayLike, is_kspace: bool = False) -> None:
    arr = np.asarray(data, dtype=np.complex128)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise FovkitError(f"Cannot store an array of shape {arr.shape} as CFOV1")

    header = np.array(
        [arr.shape[1], arr.shape[2], arr.shape[0], _FLAG_KSPACE if is_kspace else 0],
        dtype=_HEADER_DTYPE,
    )
    with open(path, "wb") as cfov_f:
        cfov_f.write(CFOV_MAGIC)
        cfov_f.write(header.tobytes())
        cfov_f.write(np.ascontiguousarray(arr, dtype=_PAYLOAD_DTYPE).tobytes())
    LOGGER.debug("Wrote %d raster(s) of %s to %s", arr.shape[0], arr.shape[1:], path)


def read_cfov(path: str) -> Raster:
    with open(path, "rb") as cfov_f:
        content = cfov_f.read()

    if len(content) < _HEADER_SIZE or not content.startswith(CFOV_MAGIC):
        raise FormatError(f"{path} is not a CFOV1 file")

    n_rows, n_cols, n_coils, flags = np.frombuffer(
        content, dtype=_HEADER_DTYPE, count=4, offset=len(CFOV_MAGIC)
    ).tolist()
    if flags & ~_FLAG_KSPACE:
        raise FormatError(f"{path} has unknown flags set: {flags:#x}")
    if min(n_rows, n_cols, n_coils) == 0:
        raise FormatError(f"{path} has an empty raster")

    expected = n_rows * n_cols * n_coils * _PAYLOAD_DTYPE.itemsize
    if len(content) - _HEADER_SIZE != expected:
        raise FormatError(
            f"{path} should contain {expected} bytes of data, "
            f"but has {len(content) - _HEADER_SIZE}"
        )

    data = np.frombuffer(content, dtype=_PAYLOAD_DTYPE, offset=_HEADER_SIZE)
    return Raster(
        data=data.reshape(n_coils, n_rows, n_cols).astype(np.complex128),
        is_kspace=bool(flags & _FLAG_KSPACE),
    )


def write_images(path: str, images: list[ComplexImage]) -> None:
    write_cfov(path, np.stack([img.data for img in images]))


def read_images(path: str) -> list[ComplexImage]:
    raster = read_cfov(path)
    if raster.is_kspace:
        raise FormatError(f"{path} contains k-space data, expected images")
    return [ComplexImage(d) for d in raster.data]


def write_kspace(path: str, data: KSpaceData) -> None:
    write_cfov(path, data.to_grid(), is_kspace=True)


def read_kspace(path: str, pattern: SamplingPattern) -> KSpaceData:
    raster = read_cfov(path)
    if not raster.is_kspace:
        raise FormatError(f"{path} does not contain k-space data")
    if raster.data.shape[1:] != pattern.dims.shape:
        raise FormatError(
            f"{path} has the grid {raster.data.shape[1:]}, but the pattern "
            f"{pattern.dims.shape}"
        )
    return KSpaceData.from_grid(pattern, raster.data)


def _write_pbm(path: str, data: np.ndarray, comments: list[str]) -> None:
    lines = ["P1", *(f"# {c}" for c in comments), f"{data.shape[1]} {data.shape[0]}"]
    lines.extend(" ".join("1" if v else "0" for v in row) for row in data)
    with open(path, "w", encoding="ascii") as pbm_f:
        pbm_f.write("\n".join(lines) + "\n")


def _read_pbm(path: str) -> tuple[np.ndarray, list[str]]:
    with open(path, "r", encoding="ascii") as pbm_f:
        text = pbm_f.read()

    comments = []
    tokens = []
    for line in text.splitlines():
        content, _, comment = line.partition("#")
        if _:
            comments.append(comment.strip())
        tokens.extend(content.split())

    if len(tokens) < 3 or tokens[0] != "P1":
        raise FormatError(f"{path} is not a plain PBM (P1) file")
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except ValueError:
        raise FormatError(f"{path} has an invalid size: {tokens[1:3]}")

    # P1 allows omitting the whitespace between pixels
    pixels = "".join(tokens[3:])
    if len(pixels) != width * height or set(pixels) - {"0", "1"}:
        raise FormatError(
            f"{path} should contain {width * height} pixels of 0 or 1, "
            f"but got {len(pixels)} characters"
        )
    data = np.frombuffer(pixels.encode("ascii"), dtype=np.uint8) == ord("1")
    return data.reshape(height, width), comments


def write_mask(path: str, mask: SupportMask) -> None:
    _write_pbm(path, mask.data, [])


def read_mask(path: str) -> SupportMask:
    data, _ = _read_pbm(path)
    return SupportMask(data)


def write_pattern(path: str, pattern: SamplingPattern) -> None:
    _write_pbm(
        path, pattern.data, [f"subsample_factor_m={pattern.subsample_factor_m}"]
    )


def read_pattern(path: str) -> SamplingPattern:
    data, comments = _read_pbm(path)
    for comment in comments:
        if match := _M_COMMENT.search(comment):
            m = int(match.group(1))
            break
    else:
        m = infer_subsample_factor(data)
        LOGGER.debug("%s carries no decimation factor, inferred m=%d", path, m)
    return SamplingPattern(data, subsample_factor_m=m)


def magnitude_to_gray(img: ComplexImage, scale: float | None = None) -> np.ndarray:
    """Map the magnitude of ``img`` to 16 bit gray values.

    Without ``scale`` the magnitude is min-max scaled, otherwise it is
    multiplied by ``scale`` and clipped to [0, 1].

    """
    magnitude = np.abs(img.data)
    if scale is None:
        low, high = magnitude.min(), magnitude.max()
        normalized = (
            (magnitude - low) / (high - low)
            if high > low
            else np.zeros_like(magnitude)
        )
    else:
        normalized = np.clip(magnitude * scale, 0, 1)
    return np.rint(normalized * _PGM_MAX).astype(np.uint16)


def write_pgm(path: str, gray: np.ndarray) -> None:
    if gray.ndim != 2:
        raise FovkitError(f"Cannot store an array of shape {gray.shape} as PGM")
    with open(path, "wb") as pgm_f:
        pgm_f.write(f"P5\n{gray.shape[1]} {gray.shape[0]}\n{_PGM_MAX}\n".encode())
        pgm_f.write(np.ascontiguousarray(gray, dtype=">u2").tobytes())


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as pgm_f:
        content = pgm_f.read()

    # the header consists of 4 whitespace separated fields followed by a
    # single whitespace character
    match = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", content)
    if not match:
        raise FormatError(f"{path} is not a binary PGM (P5) file")
    width, height, max_val = (int(g) for g in match.groups())
    dtype = np.dtype(">u2") if max_val > 255 else np.dtype("u1")
    payload = content[match.end() :]
    if len(payload) != width * height * dtype.itemsize:
        raise FormatError(f"{path} has a truncated or oversized payload")
    return np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.uint16)
