"""File formats and raster resampling.

Cube format is deliberately narrow: ENVI-style text header plus raw
BSQ little-endian float32 data in a sibling file. Scalar maps persist
as 16-bit binary PGM (P5, maxval 65535). Point annotations are JSON.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import FormatError, MissingInputError, ValidationError
from .types import BG, FG, UNKNOWN, HyperCube, PointSet, RGBImage, SaliencyMap, TriMask

PGM_MAXVAL = 65535

_RAW_SUFFIXES = (".raw", ".dat", ".img", ".bsq", "")


# ---------------------------------------------------------------------------
# ENVI-style cubes


def _parse_envi_header(text: str) -> dict[str, str]:
    """Parse `key = value` lines; `{...}` blocks may span lines."""
    # Collapse brace blocks onto one line so a simple line parser works.
    text = re.sub(r"\{[^}]*\}", lambda m: m.group(0).replace("\n", " "), text)
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.upper() == "ENVI" or "=" not in line:
            continue
        key, _, value = line.partition("=")
        fields[key.strip().lower()] = value.strip()
    return fields


def _raw_path_for(header_path: Path) -> Path:
    stem = header_path.with_suffix("")
    for suffix in _RAW_SUFFIXES:
        candidate = stem.with_suffix(suffix) if suffix else stem
        if candidate.exists() and candidate != header_path:
            return candidate
    raise MissingInputError(f"no raw data file found next to {header_path}")


def read_cube(path: str | Path) -> HyperCube:
    """Read a cube from an ENVI-style header file (BSQ float32 only)."""
    header_path = Path(path)
    if not header_path.exists():
        raise MissingInputError(f"header file not found: {header_path}")
    fields = _parse_envi_header(header_path.read_text())

    try:
        width = int(fields["samples"])
        height = int(fields["lines"])
        bands = int(fields["bands"])
    except KeyError as exc:
        raise FormatError(f"header missing required field {exc}") from exc

    dtype_code = fields.get("data type", "4").strip()
    if dtype_code != "4":
        raise FormatError(
            f"unsupported data type {dtype_code!r} (only 4 = float32)",
            kind="unsupported-dtype",
        )
    interleave = fields.get("interleave", "bsq").strip().lower()
    if interleave != "bsq":
        raise FormatError(
            f"unsupported interleave {interleave!r} (only bsq)",
            kind="unsupported-interleave",
        )
    byte_order = fields.get("byte order", "0").strip()
    if byte_order != "0":
        raise FormatError(f"unsupported byte order {byte_order!r} (only 0)")

    wavelengths = None
    if "wavelength" in fields:
        inner = fields["wavelength"].strip().lstrip("{").rstrip("}")
        parts = [p for p in re.split(r"[,\s]+", inner) if p]
        wavelengths = tuple(float(p) for p in parts)

    raw = np.fromfile(_raw_path_for(header_path), dtype="<f4")
    expected = height * width * bands
    if raw.size != expected:
        raise FormatError(
            f"raw file holds {raw.size} values, header declares {expected}",
            kind="size-mismatch",
        )
    if not np.all(np.isfinite(raw)):
        raise FormatError("raw data contains non-finite values", kind="non-finite")
    # BSQ on disk: band-major (D, H, W); in memory we keep (H, W, D).
    data = raw.reshape(bands, height, width).transpose(1, 2, 0)
    return HyperCube(data=data.astype(np.float64), wavelengths=wavelengths)


def write_cube(cube: HyperCube, header_path: str | Path) -> None:
    """Write a cube as `<stem>.hdr` + `<stem>.raw` (BSQ float32)."""
    header_path = Path(header_path)
    raw_path = header_path.with_suffix(".raw")
    lines = [
        "ENVI",
        f"samples = {cube.width}",
        f"lines = {cube.height}",
        f"bands = {cube.bands}",
        "data type = 4",
        "interleave = bsq",
        "byte order = 0",
    ]
    if cube.wavelengths is not None:
        lines.append("wavelength = {" + ", ".join(repr(w) for w in cube.wavelengths) + "}")
    header_path.write_text("\n".join(lines) + "\n")
    cube.data.transpose(2, 0, 1).astype("<f4").tofile(raw_path)


# ---------------------------------------------------------------------------
# False color and resampling


def _minmax_normalize(arr: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; a constant array maps to all zeros."""
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        return np.zeros_like(arr, dtype=np.float64)
    return (arr - lo) / (hi - lo)


def false_color(cube: HyperCube, band_triple: tuple[int, int, int]) -> RGBImage:
    """Render three bands as an RGB preview, each channel normalized independently."""
    for b in band_triple:
        if not (0 <= int(b) < cube.bands):
            raise ValidationError(
                f"band index {b} out of range for {cube.bands}-band cube",
                kind="out-of-bounds",
            )
    channels = [_minmax_normalize(cube.data[:, :, int(b)]) for b in band_triple]
    return RGBImage(data=np.stack(channels, axis=2))


def default_band_triple(bands: int) -> tuple[int, int, int]:
    """Spread three preview bands across the spectrum (long, mid, short)."""
    return (bands - 1, bands // 2, 0)


def _bilinear_array(data: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resampling of a (H, W) or (H, W, C) array."""
    if out_h < 1 or out_w < 1:
        raise ValidationError("target dimensions must be at least 1")
    in_h, in_w = data.shape[:2]
    if (out_h, out_w) == (in_h, in_w):
        return data.copy()

    def src_coords(n_out: int, n_in: int) -> np.ndarray:
        if n_out == 1 or n_in == 1:
            return np.zeros(n_out, dtype=np.float64)
        return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)

    sr = src_coords(out_h, in_h)
    sc = src_coords(out_w, in_w)
    r0 = np.floor(sr).astype(np.intp)
    c0 = np.floor(sc).astype(np.intp)
    r1 = np.minimum(r0 + 1, in_h - 1)
    c1 = np.minimum(c0 + 1, in_w - 1)
    fr = (sr - r0).reshape(-1, 1)
    fc = (sc - c0).reshape(1, -1)
    if data.ndim == 3:
        fr = fr[..., None]
        fc = fc[..., None]

    v00 = data[np.ix_(r0, c0)]
    v01 = data[np.ix_(r0, c1)]
    v10 = data[np.ix_(r1, c0)]
    v11 = data[np.ix_(r1, c1)]
    # Lerp form keeps constants exactly constant.
    top = v00 + fc * (v01 - v00)
    bot = v10 + fc * (v11 - v10)
    out = top + fr * (bot - top)
    # Rounding can stray an ulp past the input hull; clamp so the
    # min/max-preservation guarantee is exact.
    return np.clip(out, data.min(), data.max())


def resize_bilinear(image, out_h: int, out_w: int):
    """Resize a SaliencyMap or RGBImage with corner-aligned bilinear sampling."""
    if isinstance(image, SaliencyMap):
        return SaliencyMap(data=_bilinear_array(image.data, out_h, out_w))
    if isinstance(image, RGBImage):
        return RGBImage(data=_bilinear_array(image.data, out_h, out_w))
    raise ValidationError(f"cannot resize value of type {type(image).__name__}")


def resize_cube_bilinear(cube: HyperCube, out_h: int, out_w: int) -> HyperCube:
    """Per-band bilinear resampling of a cube."""
    return HyperCube(
        data=_bilinear_array(cube.data, out_h, out_w), wavelengths=cube.wavelengths
    )


def resize_nearest_labels(mask: TriMask, out_h: int, out_w: int) -> TriMask:
    """Nearest-neighbor resampling for categorical labels (pixel-center rule)."""
    if out_h < 1 or out_w < 1:
        raise ValidationError("target dimensions must be at least 1")
    in_h, in_w = mask.data.shape
    rows = np.minimum(((np.arange(out_h) + 0.5) * in_h / out_h).astype(np.intp), in_h - 1)
    cols = np.minimum(((np.arange(out_w) + 0.5) * in_w / out_w).astype(np.intp), in_w - 1)
    return TriMask(data=mask.data[np.ix_(rows, cols)])


# ---------------------------------------------------------------------------
# 16-bit PGM maps


def quantize_unit(data: np.ndarray) -> np.ndarray:
    """Snap [0, 1] values onto the 16-bit PGM grid (what a write/read
    round trip would produce)."""
    return np.floor(data * PGM_MAXVAL + 0.5) / PGM_MAXVAL


def map_pgm_bytes(sal_map: SaliencyMap) -> bytes:
    """Encode a [0, 1] map as binary PGM: value v -> round(v * 65535)."""
    data = sal_map.data
    if data.min() < 0.0 or data.max() > 1.0:
        raise ValidationError("map values must lie in [0, 1]", kind="out-of-range")
    quantized = np.floor(data * PGM_MAXVAL + 0.5).astype(">u2")
    header = f"P5\n{sal_map.width} {sal_map.height}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + quantized.tobytes()


def write_map_pgm(sal_map: SaliencyMap, path: str | Path) -> None:
    Path(path).write_bytes(map_pgm_bytes(sal_map))


def _read_pgm_raw(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"PGM file not found: {path}")
    blob = path.read_bytes()
    # Header tokens: magic, width, height, maxval; separated by whitespace,
    # comments (# ... newline) allowed.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(blob):
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if pos > start:
            tokens.append(blob[start:pos])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise FormatError(f"not a binary PGM file: {path}")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"malformed PGM header in {path}") from exc
    if maxval != PGM_MAXVAL:
        raise FormatError(f"expected 16-bit PGM (maxval {PGM_MAXVAL}), got {maxval}")
    pos += 1  # single whitespace byte after maxval
    samples = np.frombuffer(blob, dtype=">u2", offset=pos)
    if samples.size != width * height:
        raise FormatError(
            f"PGM payload holds {samples.size} samples, header declares {width * height}",
            kind="size-mismatch",
        )
    return samples.reshape(height, width)


def read_map_pgm(path: str | Path) -> SaliencyMap:
    raw = _read_pgm_raw(path)
    return SaliencyMap(data=raw.astype(np.float64) / PGM_MAXVAL)


_TRIMASK_LEVELS = {BG: 0, UNKNOWN: 32768, FG: PGM_MAXVAL}
_TRIMASK_FROM_LEVEL = {v: k for k, v in _TRIMASK_LEVELS.items()}


def trimask_pgm_bytes(mask: TriMask) -> bytes:
    """Encode a TriMask as PGM levels {0 = BG, 32768 = UNKNOWN, 65535 = FG}."""
    levels = np.zeros(mask.data.shape, dtype=">u2")
    for state, level in _TRIMASK_LEVELS.items():
        levels[mask.data == state] = level
    header = f"P5\n{mask.width} {mask.height}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + levels.tobytes()


def write_trimask_pgm(mask: TriMask, path: str | Path) -> None:
    Path(path).write_bytes(trimask_pgm_bytes(mask))


def read_trimask_pgm(path: str | Path) -> TriMask:
    raw = _read_pgm_raw(path)
    states = np.zeros(raw.shape, dtype=np.uint8)
    known = np.zeros(raw.shape, dtype=bool)
    for level, state in _TRIMASK_FROM_LEVEL.items():
        hit = raw == level
        states[hit] = state
        known |= hit
    if not known.all():
        bad = int(raw[~known].flat[0])
        raise FormatError(f"unexpected tri-mask level {bad} in {path}")
    return TriMask(data=states)


# ---------------------------------------------------------------------------
# Point annotations


def points_to_dict(points: PointSet) -> dict:
    return {
        "frame": [points.frame[0], points.frame[1]],
        "salient": [[r, c] for r, c in points.salient],
        "background": [points.background[0], points.background[1]],
    }


def points_from_dict(obj: dict) -> PointSet:
    try:
        frame = obj["frame"]
        salient = obj["salient"]
        background = obj["background"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"points JSON missing field: {exc}") from exc
    return PointSet(
        salient=tuple((r, c) for r, c in salient),
        background=(background[0], background[1]),
        frame=(frame[0], frame[1]),
    )


def read_points(path: str | Path) -> PointSet:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"points file not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"points file is not valid JSON: {path}") from exc
    return points_from_dict(obj)


def write_points(points: PointSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(points_to_dict(points)) + "\n")
