"""Engine configuration: a flat key=value UTF-8 file, unknown keys rejected."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .acoustic import EirSpec
from .core import ArrayGeometry, SosGrid
from .solver import MbConfig


class ConfigError(ValueError):
    """Malformed engine config file or unknown key."""


@dataclass(frozen=True)
class EngineConfig:
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    sos_grid: SosGrid = field(default_factory=SosGrid)
    eir: EirSpec = field(default_factory=EirSpec)
    mb: MbConfig = field(default_factory=MbConfig)
    dataset_root: Path = Path("datasets")
    image_size: int = 416
    fov_m: tuple[float, float] = (0.0416, 0.0416)


_GEOMETRY_KEYS = {
    "n_detectors": int,
    "concavity_radius_m": float,
    "angular_coverage_deg": float,
    "center_x_m": float,
    "center_y_m": float,
    "sampling_rate_hz": float,
    "n_time_samples": int,
    "t0_offset_samples": int,
}
_GRID_KEYS = {"sos_min_mps": float, "sos_max_mps": float, "sos_step_mps": float}
_EIR_KEYS = {
    "eir_center_frequency_hz": float,
    "eir_fractional_bandwidth": float,
    "eir_filter_length_samples": int,
}
_MB_KEYS = {
    "mb_lambda": str,
    "mb_max_iters": int,
    "mb_rel_obj_tol": float,
    "mb_monotone": str,
}
_TOP_KEYS = {"dataset_root": str, "image_size": int, "fov_m": float}

_ALL_KEYS = {**_GEOMETRY_KEYS, **_GRID_KEYS, **_EIR_KEYS, **_MB_KEYS, **_TOP_KEYS}


def parse_engine_config(text: str) -> EngineConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _ALL_KEYS[key](val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {val!r}") from None

    def take(keys: dict, defaults) -> dict:
        out = {}
        for k in keys:
            if k in values:
                out[k] = values[k]
        return out

    geo_kwargs = take(_GEOMETRY_KEYS, None)
    center = (
        geo_kwargs.pop("center_x_m", 0.0),
        geo_kwargs.pop("center_y_m", 0.0),
    )
    geometry = ArrayGeometry(center_of_curvature_m=center, **geo_kwargs)

    grid = SosGrid(
        min_mps=values.get("sos_min_mps", 1475.0),
        max_mps=values.get("sos_max_mps", 1525.0),
        step_mps=values.get("sos_step_mps", 5.0),
    )
    eir = EirSpec(
        center_frequency_hz=values.get("eir_center_frequency_hz", 4e6),
        fractional_bandwidth=values.get("eir_fractional_bandwidth", 1.53),
        filter_length_samples=values.get("eir_filter_length_samples", 129),
    )
    lam_raw = values.get("mb_lambda", "auto")
    lam: float | str = "auto" if lam_raw == "auto" else _parse_float(lam_raw, "mb_lambda")
    monotone_raw = str(values.get("mb_monotone", "true")).lower()
    if monotone_raw not in ("true", "false", "1", "0"):
        raise ConfigError(f"mb_monotone must be a boolean, got {monotone_raw!r}")
    mb = MbConfig(
        lambda_reg=lam,
        max_iters=values.get("mb_max_iters", 200),
        rel_obj_tol=values.get("mb_rel_obj_tol", 1e-6),
        monotone=monotone_raw in ("true", "1"),
    )
    fov = values.get("fov_m", 0.0416)
    return EngineConfig(
        geometry=geometry,
        sos_grid=grid,
        eir=eir,
        mb=mb,
        dataset_root=Path(values.get("dataset_root", "datasets")),
        image_size=values.get("image_size", 416),
        fov_m=(fov, fov),
    )


def _parse_float(raw, key) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def load_engine_config(path) -> EngineConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} not found")
    try:
        return parse_engine_config(path.read_text(encoding="utf-8"))
    except (ValueError, TypeError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
