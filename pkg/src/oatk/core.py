"""Core domain types: detector geometry, sinograms, images, spectra.

All types are immutable value objects; arrays are defensively set to
read-only float32 so instances can be shared across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


def _frozen_f32(a) -> np.ndarray:
    out = np.asarray(a, dtype=np.float32)
    out = np.ascontiguousarray(out)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ArrayGeometry:
    """Concave detector arc plus the sampling clock of the acquisition."""

    n_detectors: int = 256
    concavity_radius_m: float = 0.04
    angular_coverage_deg: float = 125.0
    center_of_curvature_m: tuple[float, float] = (0.0, 0.0)
    sampling_rate_hz: float = 40e6
    n_time_samples: int = 2030
    t0_offset_samples: int = 0

    def __post_init__(self):
        if self.n_detectors < 2:
            raise ValueError(f"n_detectors must be >= 2, got {self.n_detectors}")
        if self.concavity_radius_m <= 0:
            raise ValueError("concavity_radius_m must be positive")
        if not (0 < self.angular_coverage_deg <= 360):
            raise ValueError("angular_coverage_deg must be in (0, 360]")
        if self.sampling_rate_hz <= 0:
            raise ValueError("sampling_rate_hz must be positive")
        if self.n_time_samples < 1:
            raise ValueError("n_time_samples must be positive")
        if self.t0_offset_samples < 0:
            raise ValueError("t0_offset_samples must be >= 0")

    @property
    def dt_s(self) -> float:
        return 1.0 / self.sampling_rate_hz

    def detector_positions(self) -> np.ndarray:
        """(n_detectors, 2) x/y positions in meters.

        Detectors lie on the arc of radius R around the center of
        curvature, uniformly spaced in angle and symmetric about the
        upward vertical axis; the arc opens downward over the image.
        """
        half = math.radians(self.angular_coverage_deg) / 2.0
        theta = np.linspace(-half, half, self.n_detectors)
        xc, yc = self.center_of_curvature_m
        x = xc + self.concavity_radius_m * np.sin(theta)
        y = yc + self.concavity_radius_m * np.cos(theta)
        return np.stack([x, y], axis=1)

    def cropped(self, n: int) -> "ArrayGeometry":
        if not (0 <= n < self.n_time_samples):
            raise ValueError(f"crop count {n} out of range [0, {self.n_time_samples})")
        return replace(
            self,
            n_time_samples=self.n_time_samples - n,
            t0_offset_samples=self.t0_offset_samples + n,
        )


@dataclass(frozen=True)
class Sinogram:
    """Time x detector pressure-signal matrix with its geometry."""

    samples: np.ndarray  # [n_time, n_detectors] float32
    geometry: ArrayGeometry
    wavelength_nm: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_f32(self.samples))
        if self.samples.ndim != 2:
            raise ValueError("sinogram samples must be 2-D [time, detector]")
        nt, nd = self.samples.shape
        if (nt, nd) != (self.geometry.n_time_samples, self.geometry.n_detectors):
            raise ValueError(
                f"sinogram shape {(nt, nd)} does not match geometry "
                f"{(self.geometry.n_time_samples, self.geometry.n_detectors)}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("sinogram contains non-finite values")

    @property
    def n_time(self) -> int:
        return self.samples.shape[0]

    @property
    def n_detectors(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples) -> "Sinogram":
        return Sinogram(samples, self.geometry, self.wavelength_nm)


@dataclass(frozen=True)
class Image:
    """Square raster of initial pressure over a physical field of view."""

    pixels: np.ndarray  # [ny, nx] float32
    fov_m: tuple[float, float] = (0.0416, 0.0416)
    origin: tuple[float, float] = (0.0, 0.0)  # grid center relative to center_of_curvature

    def __post_init__(self):
        object.__setattr__(self, "pixels", _frozen_f32(self.pixels))
        if self.pixels.ndim != 2:
            raise ValueError("image pixels must be 2-D [ny, nx]")
        if min(self.pixels.shape) < 1:
            raise ValueError("image must be non-empty")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("image contains non-finite values")
        if self.fov_m[0] <= 0 or self.fov_m[1] <= 0:
            raise ValueError("fov_m must be positive")

    @property
    def ny(self) -> int:
        return self.pixels.shape[0]

    @property
    def nx(self) -> int:
        return self.pixels.shape[1]

    @property
    def pitch_m(self) -> tuple[float, float]:
        return (self.fov_m[0] / self.nx, self.fov_m[1] / self.ny)

    def pixel_positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened x and y coordinates (meters) of all pixel centers.

        Row 0 is the top of the image (largest y); x grows with column.
        """
        fx, fy = self.fov_m
        px, py = self.pitch_m
        ox, oy = self.origin
        x = ox - fx / 2 + (np.arange(self.nx) + 0.5) * px
        y = oy + fy / 2 - (np.arange(self.ny) + 0.5) * py
        xx, yy = np.meshgrid(x, y)
        return xx.ravel(), yy.ravel()

    def with_pixels(self, pixels) -> "Image":
        return Image(pixels, self.fov_m, self.origin)


@dataclass(frozen=True)
class SosGrid:
    """Discrete speed-of-sound grid used for tuning and synthesis."""

    min_mps: float = 1475.0
    max_mps: float = 1525.0
    step_mps: float = 5.0

    def __post_init__(self):
        if self.step_mps <= 0:
            raise ValueError("step_mps must be positive")
        if self.max_mps < self.min_mps:
            raise ValueError("max_mps must be >= min_mps")
        n = (self.max_mps - self.min_mps) / self.step_mps
        if abs(n - round(n)) > 1e-9:
            raise ValueError("(max - min) must be divisible by step")

    def __len__(self) -> int:
        return int(round((self.max_mps - self.min_mps) / self.step_mps)) + 1

    def values(self) -> np.ndarray:
        return self.min_mps + self.step_mps * np.arange(len(self))

    def index_of(self, sos_mps: float) -> int:
        k = (sos_mps - self.min_mps) / self.step_mps
        ki = int(round(k))
        if not (0 <= ki < len(self)) or abs(k - ki) > 1e-6:
            raise ValueError(f"sos {sos_mps} m/s is not on the grid {self}")
        return ki

    def contains(self, sos_mps: float) -> bool:
        try:
            self.index_of(sos_mps)
            return True
        except ValueError:
            return False


@dataclass(frozen=True)
class MultispectralStack:
    """Ordered per-wavelength images of one multispectral acquisition."""

    images: tuple[Image, ...]
    wavelengths_nm: tuple[float, ...] = field(
        default_factory=lambda: tuple(float(w) for w in range(700, 990, 10))
    )

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "wavelengths_nm", tuple(float(w) for w in self.wavelengths_nm))
        if len(self.images) != len(self.wavelengths_nm):
            raise ValueError("images and wavelengths_nm must have equal length")
        if len(self.images) == 0:
            raise ValueError("stack must contain at least one image")
        shape = self.images[0].pixels.shape
        if any(im.pixels.shape != shape for im in self.images):
            raise ValueError("all images in a stack must share dimensions")
        w = np.asarray(self.wavelengths_nm)
        if np.any(np.diff(w) <= 0):
            raise ValueError("wavelengths must be strictly increasing")

    @property
    def n_pixels(self) -> int:
        return int(np.prod(self.images[0].pixels.shape))

    def as_matrix(self) -> np.ndarray:
        """[n_pixels, n_wavelengths] float64 matrix (the paper's pixel stack)."""
        return np.stack([im.pixels.ravel().astype(np.float64) for im in self.images], axis=1)


DEFAULT_CHROMOPHORES = ("water", "fat", "oxyhemoglobin", "deoxyhemoglobin")


@dataclass(frozen=True)
class SpectraMatrix:
    """Reference absorption spectra, one row per chromophore."""

    absorption: np.ndarray  # [n_chromophores, n_wavelengths]
    chromophores: tuple[str, ...] = DEFAULT_CHROMOPHORES
    wavelengths_nm: tuple[float, ...] | None = None

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.absorption, dtype=np.float64))
        a.flags.writeable = False
        object.__setattr__(self, "absorption", a)
        object.__setattr__(self, "chromophores", tuple(self.chromophores))
        if a.ndim != 2 or a.shape[0] != len(self.chromophores):
            raise ValueError("absorption must be [n_chromophores, n_wavelengths]")
        if np.any(a < 0):
            raise ValueError("absorption entries must be non-negative")
        if np.any(np.all(a == 0, axis=1)):
            raise ValueError("spectra matrix contains an all-zero row")
        if self.wavelengths_nm is not None:
            w = tuple(float(x) for x in self.wavelengths_nm)
            object.__setattr__(self, "wavelengths_nm", w)
            if len(w) != a.shape[1]:
                raise ValueError("wavelength count does not match spectra columns")

    @property
    def n_chromophores(self) -> int:
        return self.absorption.shape[0]

    @property
    def n_wavelengths(self) -> int:
        return self.absorption.shape[1]


@dataclass(frozen=True)
class UnmixResult:
    """Non-negative per-pixel chromophore components."""

    components: np.ndarray  # [n_pixels, n_chromophores]
    chromophores: tuple[str, ...]
    image_shape: tuple[int, int]

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.components, dtype=np.float64))
        c.flags.writeable = False
        object.__setattr__(self, "components", c)
        object.__setattr__(self, "chromophores", tuple(self.chromophores))
        if c.ndim != 2 or c.shape[1] != len(self.chromophores):
            raise ValueError("components must be [n_pixels, n_chromophores]")
        if c.shape[0] != self.image_shape[0] * self.image_shape[1]:
            raise ValueError("n_pixels does not match image_shape")
        if np.any(c < -1e-12):
            raise ValueError("components must be non-negative")

    def component_image(self, name: str) -> np.ndarray:
        j = self.chromophores.index(name)
        return self.components[:, j].reshape(self.image_shape)
