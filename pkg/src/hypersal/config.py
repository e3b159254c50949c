"""Pipeline configuration: every tunable with its default, serializable to
a flat `key = value` text file. Flags override the file; the file wins over
built-in defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import FormatError, MissingInputError, ValidationError


@dataclass(frozen=True)
class PipelineConfig:
    levels: int = 9
    scale: float = 0.5
    tau: float = 0.5
    bands: tuple[int, int, int] | None = None  # None = spread across spectrum
    sigma_i: float = 0.03
    sigma_p: float = 5.0
    sigma_i2: float = 3.0
    sigma_p2: float = 0.003
    k: int = 5
    crf_iterations: int = 5
    crf_w_bilateral: float = 4.0
    crf_w_spatial: float = 3.0
    crf_theta_alpha: float = 30.0
    crf_theta_beta: float = 0.05
    crf_theta_gamma: float = 3.0
    crf_window_radius: int = 15
    bin_tau: float = 0.5
    f_measure: str = "adaptive"

    def __post_init__(self):
        if self.levels < 1:
            raise ValidationError("levels must be >= 1")
        if self.scale <= 0:
            raise ValidationError("scale must be positive")
        if self.tau < 0:
            raise ValidationError("tau must be non-negative")
        if self.k < 1 or self.k % 2 == 0:
            raise ValidationError("k must be odd and >= 1")
        if self.f_measure not in ("adaptive", "max"):
            raise ValidationError("f_measure must be 'adaptive' or 'max'")


def format_config(config: PipelineConfig) -> str:
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None:
            text = "auto"
        elif isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def _parse_value(name: str, text: str, py_type: str):
    text = text.strip()
    if name == "bands":
        if text in ("auto", "none", ""):
            return None
        parts = [p for p in text.replace(",", " ").split() if p]
        if len(parts) != 3:
            raise FormatError(f"bands needs three indices, got {text!r}")
        return tuple(int(p) for p in parts)
    if py_type == "int":
        return int(text)
    if py_type == "float":
        return float(text)
    return text


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    base = base or PipelineConfig()
    known = {f.name: f for f in fields(PipelineConfig)}
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"config line {lineno} is not `key = value`: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise FormatError(f"unknown config key {key!r} (line {lineno})")
        type_name = {
            "levels": "int", "k": "int", "crf_iterations": "int",
            "crf_window_radius": "int",
        }.get(key, "float" if key not in ("bands", "f_measure") else "str")
        overrides[key] = _parse_value(key, value, type_name)
    return replace(base, **overrides)


def load_config(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"config file not found: {path}")
    return parse_config(path.read_text(), base=base)
