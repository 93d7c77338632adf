"""Non-iterative reconstruction baselines: backprojection and DMAS-CF."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acoustic import _interp_channel
from .core import Image, Sinogram


@dataclass(frozen=True)
class DirectReconConfig:
    method: str = "bp"  # "bp" | "dmas"
    sos_mps: float = 1500.0
    clamp_negatives: bool = False

    def __post_init__(self):
        if self.method not in ("bp", "dmas"):
            raise ValueError(f"unknown direct method {self.method!r}")


def _delayed_bins(s: Sinogram, sos_mps, px, py, det_xy):
    g = s.geometry
    d = np.hypot(px - det_xy[0], py - det_xy[1])
    return d / (sos_mps * g.dt_s) - g.t0_offset_samples


def backproject(
    s: Sinogram,
    sos_mps: float,
    image_shape: tuple[int, int] = (416, 416),
    fov_m: tuple[float, float] = (0.0416, 0.0416),
    origin: tuple[float, float] = (0.0, 0.0),
) -> Image:
    """Universal backprojection with uniform detector weights.

    Each channel is turned into the backprojection term
    b(t) = 2 p(t) - 2 t dp/dt and interpolated at every pixel's travel
    time; pixels whose delay falls outside the recorded window get zero.
    The raw output may contain negative values.
    """
    g = s.geometry
    data = s.samples.astype(np.float64)
    dt = g.dt_s
    t_abs = (np.arange(g.n_time_samples) + g.t0_offset_samples) * dt
    dp = np.gradient(data, dt, axis=0)
    b = 2.0 * data - 2.0 * t_abs[:, None] * dp
    template = Image(np.zeros(image_shape, dtype=np.float32), fov_m, origin)
    px, py = template.pixel_positions()
    acc = np.zeros(px.size, dtype=np.float64)
    for k, det_xy in enumerate(g.detector_positions()):
        tau = _delayed_bins(s, sos_mps, px, py, det_xy)
        acc += _interp_channel(b[:, k], tau, g.n_time_samples)
    return Image(acc.reshape(image_shape), fov_m, origin)


def dmas_cf(
    s: Sinogram,
    sos_mps: float,
    image_shape: tuple[int, int] = (416, 416),
    fov_m: tuple[float, float] = (0.0416, 0.0416),
    origin: tuple[float, float] = (0.0, 0.0),
) -> Image:
    """Delay-multiply-and-sum weighted by the coherence factor.

    Per pixel, with delayed samples s_i over the N detectors:
      DMAS = sum_{i<j} sign(s_i s_j) sqrt(|s_i s_j|)
      CF   = (sum_i s_i)^2 / (N sum_i s_i^2), with 0/0 -> 0.
    The pairwise sum is accumulated via the identity
    2 DMAS = (sum_i u_i)^2 - sum_i |s_i| with u_i = sign(s_i) sqrt(|s_i|),
    which keeps memory linear in the pixel count.
    """
    g = s.geometry
    data = s.samples.astype(np.float64)
    template = Image(np.zeros(image_shape, dtype=np.float32), fov_m, origin)
    px, py = template.pixel_positions()
    n = g.n_detectors
    sum_u = np.zeros(px.size)
    sum_abs = np.zeros(px.size)
    sum_s = np.zeros(px.size)
    sum_s2 = np.zeros(px.size)
    for k, det_xy in enumerate(g.detector_positions()):
        tau = _delayed_bins(s, sos_mps, px, py, det_xy)
        si = _interp_channel(data[:, k], tau, g.n_time_samples)
        sum_u += np.sign(si) * np.sqrt(np.abs(si))
        sum_abs += np.abs(si)
        sum_s += si
        sum_s2 += si * si
    dmas = 0.5 * (sum_u**2 - sum_abs)
    with np.errstate(divide="ignore", invalid="ignore"):
        cf = np.where(sum_s2 > 0, sum_s**2 / (n * sum_s2), 0.0)
    return Image((dmas * cf).reshape(image_shape), fov_m, origin)


def direct_reconstruct(s: Sinogram, cfg: DirectReconConfig, **grid_kwargs) -> Image:
    if cfg.method == "bp":
        im = backproject(s, cfg.sos_mps, **grid_kwargs)
    else:
        im = dmas_cf(s, cfg.sos_mps, **grid_kwargs)
    if cfg.clamp_negatives:
        im = im.with_pixels(np.maximum(im.pixels, 0.0))
    return im
