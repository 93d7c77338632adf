"""Synthetic dataset generation and the training-time preprocessing pair.

Real-world rasters become initial-pressure images (grayscale, resized,
normalized); sinograms are simulated with the acoustic forward model at
a speed of sound drawn from the tuning grid and scaled by a random
amplitude factor. Phantom generators provide a deterministic test
corpus.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PilImage
from PIL import UnidentifiedImageError

from . import io as oio
from .acoustic import (
    EirSpec,
    ForwardOperator,
    bandpass_filter,
    crop_leading_samples,
)
from .core import ArrayGeometry, Image, Sinogram, SosGrid

PREPROCESS_SCALE = 1.0 / 450.0  # the paper's K

LUMINOSITY_WEIGHTS = (0.2126, 0.7152, 0.0722)


@dataclass(frozen=True)
class SynthesisConfig:
    image_size: int = 416
    fov_m: tuple[float, float] = (0.0416, 0.0416)
    sos_grid: SosGrid = field(default_factory=SosGrid)
    amplitude_scale_range: tuple[float, float] = (0.0, 450.0)
    rng_seed: int = 0
    noise_std: float | None = None
    apply_acquisition_filters: bool = True
    acquisition_band_hz: tuple[float, float] = (100e3, 12e6)
    crop_samples: int = 110
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    eir: EirSpec | None = field(default_factory=EirSpec)

    def __post_init__(self):
        lo, hi = self.amplitude_scale_range
        if lo < 0 or hi < lo:
            raise ValueError("amplitude_scale_range must be non-negative and ordered")
        if self.image_size < 8:
            raise ValueError("image_size too small")


def image_to_initial_pressure(path, image_size: int = 416,
                              fov_m: tuple[float, float] = (0.0416, 0.0416)) -> Image:
    """Load a raster as a normalized grayscale initial-pressure image.

    Luminosity grayscale conversion, bilinear resize to a square grid,
    values in [0, 1].
    """
    try:
        with PilImage.open(path) as img:
            img.load()
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError) as e:
        raise ValueError(f"unreadable raster {path}: {e}") from None
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    if arr.size == 0:
        raise ValueError(f"empty raster {path}")
    wr, wg, wb = LUMINOSITY_WEIGHTS
    gray = wr * arr[..., 0] + wg * arr[..., 1] + wb * arr[..., 2]
    resized = PilImage.fromarray(gray.astype(np.float32), mode="F").resize(
        (image_size, image_size), PilImage.BILINEAR
    )
    pixels = np.clip(np.asarray(resized, dtype=np.float64), 0.0, 1.0)
    return Image(pixels, fov_m=fov_m)


def synthesize_sinogram(
    p: Image, cfg: SynthesisConfig, rng: np.random.Generator
) -> tuple[Sinogram, float, float]:
    """Forward-simulate one image; returns (sinogram, sos_used, scale_used)."""
    sos = float(rng.choice(cfg.sos_grid.values()))
    lo, hi = cfg.amplitude_scale_range
    scale = float(rng.uniform(lo, hi))
    op = ForwardOperator(
        geometry=cfg.geometry,
        sos_mps=sos,
        image_shape=p.pixels.shape,
        fov_m=p.fov_m,
        origin=p.origin,
        eir=cfg.eir,
    )
    s = op.apply(p)
    samples = scale * s.samples.astype(np.float64)
    if cfg.noise_std is not None and cfg.noise_std > 0:
        samples = samples + rng.normal(0.0, cfg.noise_std, samples.shape)
    s = Sinogram(samples, cfg.geometry)
    if cfg.apply_acquisition_filters:
        s = bandpass_filter(s, *cfg.acquisition_band_hz)
        if cfg.crop_samples > 0:
            s = crop_leading_samples(s, min(cfg.crop_samples, s.n_time - 1))
    return s, sos, scale


def preprocess_pair(s: Sinogram, target: Image) -> tuple[Sinogram, Image]:
    """Scale the sinogram by K and square-root-transform the target."""
    if np.any(target.pixels < 0):
        raise ValueError("target image must be non-negative")
    s_scaled = s.with_samples(s.samples.astype(np.float64) * PREPROCESS_SCALE)
    t = np.sqrt(target.pixels.astype(np.float64) * PREPROCESS_SCALE)
    return s_scaled, target.with_pixels(t)


def postprocess_image(x: Image) -> Image:
    """Invert the target transform: square, then divide by K."""
    p = x.pixels.astype(np.float64)
    return x.with_pixels(p * p / PREPROCESS_SCALE)


def make_phantom(
    kind: str,
    size: int,
    rng: np.random.Generator,
    n_features: int | None = None,
    fov_m: tuple[float, float] = (0.0416, 0.0416),
) -> Image:
    """Deterministic (under a seeded rng) non-negative test phantoms.

    kinds:
      disks   - n_features (default 3) disks, random center/radius in the
                central 60% of the grid, random amplitude in [0.3, 1].
      points  - n_features (default 3) isolated unit pixels.
      cartoon - one large disk (amplitude 1) on a flat 0.2 background.
    """
    if size < 32:
        raise ValueError("phantom size must be >= 32")
    yy, xx = np.mgrid[0:size, 0:size]
    pixels = np.zeros((size, size), dtype=np.float64)
    if kind == "disks":
        n = 3 if n_features is None else n_features
        for _ in range(n):
            cy, cx = rng.uniform(0.2 * size, 0.8 * size, size=2)
            radius = rng.uniform(0.03 * size, 0.10 * size)
            amp = rng.uniform(0.3, 1.0)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
            pixels[mask] = amp
    elif kind == "points":
        n = 3 if n_features is None else n_features
        for _ in range(n):
            cy = int(rng.integers(int(0.2 * size), int(0.8 * size)))
            cx = int(rng.integers(int(0.2 * size), int(0.8 * size)))
            pixels[cy, cx] = 1.0
    elif kind == "cartoon":
        cy = 0.5 * size + rng.uniform(-0.05 * size, 0.05 * size)
        cx = 0.5 * size + rng.uniform(-0.05 * size, 0.05 * size)
        radius = rng.uniform(0.15 * size, 0.25 * size)
        pixels[:] = 0.2
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
        pixels[mask] = 1.0
    else:
        raise ValueError(f"unsupported phantom kind {kind!r}")
    return Image(pixels, fov_m=fov_m)


def item_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-item stream so parallel output equals sequential."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def generate_dataset(
    sources: list,
    cfg: SynthesisConfig,
    out_dir,
) -> Path:
    """Synthesize sinograms for a list of sources and write a manifest.

    `sources` entries are either raster paths or "phantom:<kind>"
    strings. Returns the manifest path; manifest columns are
    item, source, sos_mps, scale, sinogram_file, image_file, sha256.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, src in enumerate(sources):
        rng = item_rng(cfg.rng_seed, i)
        if isinstance(src, str) and src.startswith("phantom:"):
            image = make_phantom(src.split(":", 1)[1], cfg.image_size, rng, fov_m=cfg.fov_m)
        else:
            image = image_to_initial_pressure(src, cfg.image_size, cfg.fov_m)
        s, sos, scale = synthesize_sinogram(image, cfg, rng)
        sino_name = f"frame_{i:05d}.oasg"
        img_name = f"frame_{i:05d}.oaim"
        oio.write_sinogram(s, out_dir / sino_name)
        oio.write_image(image, out_dir / img_name)
        digest = hashlib.sha256((out_dir / sino_name).read_bytes()).hexdigest()
        rows.append([i, str(src), repr(sos), repr(scale), sino_name, img_name, digest])
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["item", "source", "sos_mps", "scale", "sinogram_file", "image_file", "sha256"])
        w.writerows(rows)
    return manifest


def manifest_hash(manifest_path) -> str:
    return hashlib.sha256(Path(manifest_path).read_bytes()).hexdigest()
