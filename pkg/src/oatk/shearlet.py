"""Band-limited cone-adapted shearlet frame assembled in the FFT domain.

Meyer-type radial bands (in the sup-norm radius, so square annuli tile
the whole frequency square including its corners) are multiplied by
smooth angular shear windows on the horizontal and vertical frequency
cones. The windows form an exact squared partition of unity; a final
pointwise division by the square root of the frame sum removes roundoff
so the system is a Parseval frame to machine precision.

All filters are real and even in frequency, hence coefficients of real
images are real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _meyer_step(x: np.ndarray) -> np.ndarray:
    """Smooth 0->1 step (Meyer auxiliary polynomial), clipped outside [0,1]."""
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


def _rise(u: np.ndarray) -> np.ndarray:
    return np.sin(0.5 * np.pi * _meyer_step(u))


def _fall(u: np.ndarray) -> np.ndarray:
    return np.cos(0.5 * np.pi * _meyer_step(u))


def _radial_windows(rho: np.ndarray, n_scales: int) -> list[np.ndarray]:
    """Low-pass plus n_scales band windows; squares sum to 1 on rho<=1."""
    cuts = [2.0 ** (i - n_scales) for i in range(n_scales + 1)]  # cuts[-1] == 1
    windows = []
    # low-pass: 1 below cuts[0], cosine fall over [cuts[0], cuts[1]]
    if n_scales == 0:
        windows.append(np.ones_like(rho))
        return windows
    lp = np.where(
        rho <= cuts[0],
        1.0,
        _fall((rho - cuts[0]) / (cuts[1] - cuts[0])),
    )
    windows.append(lp)
    for j in range(1, n_scales + 1):
        a, b = cuts[j - 1], cuts[j]
        w = _rise((rho - a) / (b - a))
        if j < n_scales:
            c = cuts[j + 1]
            w = np.where(rho > b, _fall((rho - b) / (c - b)), w)
        windows.append(w)
    return windows


def _angular_windows(u: np.ndarray, n_shears_half: int) -> list[np.ndarray]:
    """Shear windows over u in [-1, 1]; squares sum to 1 there.

    Returns 2*n_shears_half + 1 windows centered at u = k / n_shears_half.
    """
    k_max = n_shears_half
    centers = np.arange(-k_max, k_max + 1) / k_max
    step = 1.0 / k_max
    windows = []
    for c in centers:
        w = np.zeros_like(u)
        left = (u >= c - step) & (u < c)
        right = (u >= c) & (u <= c + step)
        w[left] = _rise((u[left] - (c - step)) / step)
        w[right] = _fall((u[right] - c) / step)
        if c <= -1.0 + 1e-12:
            w[u <= c] = 1.0
        if c >= 1.0 - 1e-12:
            w[u >= c] = 1.0
        windows.append(w)
    return windows


def default_scale_count(image_size: tuple[int, int]) -> int:
    """4 scales at full size (416), fewer on small test grids."""
    return max(1, min(4, int(math.floor(math.log2(min(image_size)))) - 4))


def shears_per_scale(scale_index: int) -> int:
    """Shear count per cone at a 0-based scale index: 2*ceil(2^(j/2)) + 1."""
    return 2 * math.ceil(2.0 ** (scale_index / 2.0)) + 1


@dataclass(frozen=True)
class ShearletSystem:
    """Precomputed frequency-domain Parseval shearlet filters."""

    image_size: tuple[int, int]
    n_scales: int
    filters: np.ndarray  # [n_filters, ny, nx] real
    labels: tuple[tuple, ...]  # ("low",) or ("band", scale, cone, shear)

    @property
    def n_filters(self) -> int:
        return self.filters.shape[0]

    def describe(self) -> dict:
        per_scale = [
            sum(1 for lab in self.labels if lab[0] == "band" and lab[1] == j)
            for j in range(self.n_scales)
        ]
        return {
            "image_size": self.image_size,
            "n_scales": self.n_scales,
            "n_filters": self.n_filters,
            "filters_per_scale": per_scale,
        }


def build_shearlet_system(
    image_size: tuple[int, int], n_scales: int | None = None
) -> ShearletSystem:
    ny, nx = image_size
    if min(ny, nx) < 16:
        raise ValueError("shearlet system requires image size >= 16")
    if n_scales is None:
        n_scales = default_scale_count(image_size)
    if n_scales < 1:
        raise ValueError("n_scales must be >= 1")

    xi_x = np.fft.fftfreq(nx)[None, :] / 0.5  # normalized to [-1, 1)
    xi_y = np.fft.fftfreq(ny)[:, None] / 0.5
    ax = np.broadcast_to(np.abs(xi_x), (ny, nx))
    ay = np.broadcast_to(np.abs(xi_y), (ny, nx))
    rho = np.maximum(ax, ay)

    horiz = ax >= ay  # ties belong to the horizontal cone
    vert = ~horiz
    with np.errstate(divide="ignore", invalid="ignore"):
        u_h = np.where(ax > 0, xi_y / np.where(ax > 0, xi_x, 1.0), 0.0)
        u_v = np.where(ay > 0, xi_x / np.where(ay > 0, xi_y, 1.0), 0.0)

    radial = _radial_windows(rho, n_scales)
    filters = [radial[0]]
    labels: list[tuple] = [("low",)]
    for j in range(n_scales):
        band = radial[j + 1]
        k_half = (shears_per_scale(j) - 1) // 2
        for cone, u, mask in (("h", u_h, horiz), ("v", u_v, vert)):
            ang = _angular_windows(u, k_half)
            for k, w in enumerate(ang):
                filt = band * w * mask
                filters.append(filt)
                labels.append(("band", j, cone, k - k_half))

    stack = np.stack(filters)
    # even-symmetrize in frequency (Nyquist lines of even grids have no
    # mirror partner) so coefficients of real images are exactly real
    flipped = np.roll(stack[:, ::-1, ::-1], shift=(1, 1), axis=(1, 2))
    stack = 0.5 * (stack + flipped)
    frame = np.sum(stack**2, axis=0)
    if frame.min() <= 0:
        raise AssertionError("shearlet frame sum has a hole; construction bug")
    stack /= np.sqrt(frame)[None, :, :]
    stack.flags.writeable = False
    return ShearletSystem((ny, nx), n_scales, stack, tuple(labels))


def shearlet_analysis(sys: ShearletSystem, pixels: np.ndarray) -> np.ndarray:
    """[n_filters, ny, nx] real coefficient stack of a real image."""
    if pixels.shape != sys.image_size:
        raise ValueError(f"image shape {pixels.shape} does not match system {sys.image_size}")
    spectrum = np.fft.fft2(pixels.astype(np.float64))
    return np.real(np.fft.ifft2(spectrum[None, :, :] * sys.filters, axes=(-2, -1)))


def shearlet_synthesis(sys: ShearletSystem, coeffs: np.ndarray) -> np.ndarray:
    """Adjoint of analysis; inverts analysis exactly (Parseval frame)."""
    if coeffs.shape != (sys.n_filters, *sys.image_size):
        raise ValueError("coefficient stack does not match system")
    spectra = np.fft.fft2(coeffs.astype(np.float64), axes=(-2, -1))
    return np.real(np.fft.ifft2(np.sum(spectra * sys.filters, axis=0)))


def soft_threshold(coeffs: np.ndarray, theta: float) -> np.ndarray:
    """Entrywise prox of the l1 norm: sign(c) * max(|c| - theta, 0)."""
    if theta < 0:
        raise ValueError("threshold must be non-negative")
    return np.sign(coeffs) * np.maximum(np.abs(coeffs) - theta, 0.0)
