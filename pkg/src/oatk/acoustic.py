"""Matrix-free acoustic forward model and its exact adjoint.

The forward operator maps an initial-pressure image to a sinogram in
three stages, each with a cleanly transposable discretization:

  1. scatter: every pixel is a point absorber whose signal arrives at
     detector d after tau = |r_d - r_j| / c; the amplitude-weighted
     value is linearly interpolated onto the two neighbouring time bins.
  2. a discrete time-derivative filter (central differences),
  3. convolution with a zero-phase electrical impulse response (EIR).

The adjoint runs the same stages transposed in reverse order: EIR
correlation (= convolution, the kernel is symmetric), negated
derivative, and interpolation gather.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal

from .core import ArrayGeometry, Image, Sinogram, SosGrid

SOS_PLAUSIBLE_MPS = (1300.0, 1700.0)

# Guard for per-channel delay stacks (256 x 416 x 416 floats ~ 177 MB).
MAX_PER_CHANNEL_PIXELS = 64 * 1024 * 1024


@dataclass(frozen=True)
class EirSpec:
    """Zero-phase FIR stand-in for the detector's electrical impulse response.

    A Gaussian-windowed cosine at the transducer center frequency whose
    spectral FWHM equals `fractional_bandwidth * center_frequency`,
    normalized to unit peak passband gain.
    """

    center_frequency_hz: float = 4e6
    fractional_bandwidth: float = 1.53
    filter_length_samples: int = 129

    def __post_init__(self):
        if self.center_frequency_hz <= 0:
            raise ValueError("center_frequency_hz must be positive")
        if self.fractional_bandwidth <= 0:
            raise ValueError("fractional_bandwidth must be positive")
        if self.filter_length_samples < 3 or self.filter_length_samples % 2 == 0:
            raise ValueError("filter_length_samples must be odd and >= 3")

    def kernel(self, sampling_rate_hz: float) -> np.ndarray:
        return _eir_kernel(
            self.center_frequency_hz,
            self.fractional_bandwidth,
            self.filter_length_samples,
            sampling_rate_hz,
        )


@lru_cache(maxsize=32)
def _eir_kernel(f0: float, fbw: float, length: int, fs: float) -> np.ndarray:
    half = (length - 1) // 2
    n = np.arange(-half, half + 1, dtype=np.float64)
    dt = 1.0 / fs
    sigma_f = fbw * f0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))  # FWHM -> std
    sigma_t = 1.0 / (2.0 * math.pi * sigma_f)
    envelope = np.exp(-0.5 * (n * dt / sigma_t) ** 2)
    carrier = np.cos(2.0 * math.pi * f0 * n * dt)
    # remove the DC leakage of the Gabor atom (exact zero gain at 0 Hz)
    h = (carrier - np.sum(carrier * envelope) / np.sum(envelope)) * envelope
    # unit peak passband gain
    spectrum = np.abs(np.fft.rfft(h, 8192))
    h = h / spectrum.max()
    h.flags.writeable = False
    return h


def _derivative(x: np.ndarray) -> np.ndarray:
    """Central-difference time derivative (zero boundary), along axis 0."""
    y = np.zeros_like(x)
    y[1:-1] = 0.5 * (x[2:] - x[:-2])
    y[0] = 0.5 * x[1]
    y[-1] = -0.5 * x[-2]
    return y


def _derivative_adjoint(x: np.ndarray) -> np.ndarray:
    # the central-difference matrix is antisymmetric
    return -_derivative(x)


def _convolve_channels(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return signal.fftconvolve(x, kernel[:, None], mode="same", axes=0)


@dataclass(frozen=True)
class ForwardOperator:
    """SoS-parametrized linear map from an image grid to a sinogram."""

    geometry: ArrayGeometry
    sos_mps: float
    image_shape: tuple[int, int] = (416, 416)
    fov_m: tuple[float, float] = (0.0416, 0.0416)
    origin: tuple[float, float] = (0.0, 0.0)
    eir: EirSpec | None = EirSpec()
    apply_derivative: bool = True

    def __post_init__(self):
        lo, hi = SOS_PLAUSIBLE_MPS
        if not (lo <= self.sos_mps <= hi):
            raise ValueError(f"sos {self.sos_mps} m/s outside plausible range {lo}-{hi}")

    # -- geometry helpers ------------------------------------------------

    def image_template(self) -> Image:
        return Image(np.zeros(self.image_shape, dtype=np.float32), self.fov_m, self.origin)

    def _pixel_xy(self) -> tuple[np.ndarray, np.ndarray]:
        return self.image_template().pixel_positions()

    def _min_pitch(self) -> float:
        return min(self.fov_m[0] / self.image_shape[1], self.fov_m[1] / self.image_shape[0])

    def _delay_bins(self, det_xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Fractional arrival bins and distances for one detector."""
        px, py = self._pixel_xy()
        d = np.hypot(px - det_xy[0], py - det_xy[1])
        g = self.geometry
        tau_bins = d / (self.sos_mps * g.dt_s) - g.t0_offset_samples
        return tau_bins, d

    # -- operator application --------------------------------------------

    def apply(self, image: Image) -> Sinogram:
        if image.pixels.shape != self.image_shape:
            raise ValueError(
                f"image shape {image.pixels.shape} does not match operator {self.image_shape}"
            )
        g = self.geometry
        nt = g.n_time_samples
        p = image.pixels.ravel().astype(np.float64)
        pitch = self._min_pitch()
        out = np.empty((nt, g.n_detectors), dtype=np.float64)
        for k, det_xy in enumerate(g.detector_positions()):
            tau_bins, d = self._delay_bins(det_xy)
            amp = 1.0 / np.maximum(d, pitch)
            val = p * amp
            i0 = np.floor(tau_bins).astype(np.int64)
            w = tau_bins - i0
            ch = np.zeros(nt, dtype=np.float64)
            m0 = (i0 >= 0) & (i0 < nt)
            m1 = (i0 >= -1) & (i0 < nt - 1)
            if m0.any():
                ch += np.bincount(i0[m0], weights=(val * (1.0 - w))[m0], minlength=nt)[:nt]
            if m1.any():
                ch += np.bincount(i0[m1] + 1, weights=(val * w)[m1], minlength=nt)[:nt]
            out[:, k] = ch
        if self.apply_derivative:
            out = _derivative(out)
        if self.eir is not None:
            out = _convolve_channels(out, self.eir.kernel(g.sampling_rate_hz))
        return Sinogram(out, g)

    def adjoint(self, s: Sinogram) -> Image:
        g = self.geometry
        if s.samples.shape != (g.n_time_samples, g.n_detectors):
            raise ValueError("sinogram does not match operator geometry")
        y = s.samples.astype(np.float64)
        if self.eir is not None:
            y = _convolve_channels(y, self.eir.kernel(g.sampling_rate_hz))
        if self.apply_derivative:
            y = _derivative_adjoint(y)
        nt = g.n_time_samples
        pitch = self._min_pitch()
        acc = np.zeros(self.image_shape[0] * self.image_shape[1], dtype=np.float64)
        for k, det_xy in enumerate(g.detector_positions()):
            tau_bins, d = self._delay_bins(det_xy)
            amp = 1.0 / np.maximum(d, pitch)
            i0 = np.floor(tau_bins).astype(np.int64)
            w = tau_bins - i0
            ch = y[:, k]
            m0 = (i0 >= 0) & (i0 < nt)
            m1 = (i0 >= -1) & (i0 < nt - 1)
            contrib = np.zeros_like(acc)
            contrib[m0] += (1.0 - w)[m0] * ch[i0[m0]]
            contrib[m1] += w[m1] * ch[i0[m1] + 1]
            acc += amp * contrib
        return Image(acc.reshape(self.image_shape), self.fov_m, self.origin)


def forward_apply(op: ForwardOperator, p: Image) -> Sinogram:
    return op.apply(p)


def adjoint_apply(op: ForwardOperator, s: Sinogram) -> Image:
    return op.adjoint(s)


def eir_filter(x: Sinogram, spec: EirSpec) -> Sinogram:
    """Per-channel zero-phase EIR convolution."""
    out = _convolve_channels(
        x.samples.astype(np.float64), spec.kernel(x.geometry.sampling_rate_hz)
    )
    return x.with_samples(out)


def bandpass_filter(x: Sinogram, lo_hz: float, hi_hz: float, order: int = 4) -> Sinogram:
    """Per-channel zero-phase Butterworth band-pass."""
    fs = x.geometry.sampling_rate_hz
    if not (0 < lo_hz < hi_hz < fs / 2):
        raise ValueError(f"band edges must satisfy 0 < lo < hi < fs/2, got {lo_hz}, {hi_hz}")
    sos = signal.butter(order, [lo_hz, hi_hz], btype="bandpass", fs=fs, output="sos")
    out = signal.sosfiltfilt(sos, x.samples.astype(np.float64), axis=0)
    return x.with_samples(out)


def crop_leading_samples(s: Sinogram, n: int) -> Sinogram:
    """Drop the first n time samples, keeping absolute travel times valid."""
    if not (0 <= n < s.n_time):
        raise ValueError(f"crop count {n} out of range [0, {s.n_time})")
    return Sinogram(s.samples[n:], s.geometry.cropped(n), s.wavelength_nm)


def reach_mask(op: ForwardOperator) -> np.ndarray:
    """Boolean [n_time, n_detectors] mask of bins the operator can populate.

    Per detector, marks bins whose time maps to a pixel-to-detector
    distance within [min, max] of the grid, padded by one interpolation
    bin and by the extent of the derivative/EIR filters when enabled.
    """
    g = op.geometry
    nt = g.n_time_samples
    pad = 0
    if op.apply_derivative:
        pad += 1
    if op.eir is not None:
        pad += (op.eir.filter_length_samples - 1) // 2
    px, py = op._pixel_xy()
    mask = np.zeros((nt, g.n_detectors), dtype=bool)
    for k, det_xy in enumerate(g.detector_positions()):
        d = np.hypot(px - det_xy[0], py - det_xy[1])
        scale = op.sos_mps * g.dt_s
        lo = math.floor(d.min() / scale - g.t0_offset_samples) - pad
        hi = math.ceil(d.max() / scale - g.t0_offset_samples) + pad
        lo = max(lo, 0)
        hi = min(hi, nt - 1)
        if lo <= hi:
            mask[lo : hi + 1, k] = True
    return mask


def delay_transform(
    s: Sinogram,
    sos_mps: float,
    image_shape: tuple[int, int] = (416, 416),
    fov_m: tuple[float, float] = (0.0416, 0.0416),
    origin: tuple[float, float] = (0.0, 0.0),
    mode: str = "summed",
):
    """Map sinogram samples into image space along travel-time arcs.

    In "per-channel" mode, returns an [n_detectors, ny, nx] stack where
    slice d holds s_d evaluated at each pixel's arrival time; "summed"
    mode returns the channel sum as an Image.
    """
    if mode not in ("summed", "per-channel"):
        raise ValueError(f"unknown delay_transform mode {mode!r}")
    g = s.geometry
    n_pix = image_shape[0] * image_shape[1]
    if mode == "per-channel" and g.n_detectors * n_pix > MAX_PER_CHANNEL_PIXELS:
        raise ValueError(
            "per-channel delay stack too large; reduce image size or use summed mode"
        )
    template = Image(np.zeros(image_shape, dtype=np.float32), fov_m, origin)
    px, py = template.pixel_positions()
    data = s.samples.astype(np.float64)
    nt = g.n_time_samples
    if mode == "per-channel":
        stack = np.empty((g.n_detectors, *image_shape), dtype=np.float64)
    summed = np.zeros(n_pix, dtype=np.float64)
    for k, det_xy in enumerate(g.detector_positions()):
        d = np.hypot(px - det_xy[0], py - det_xy[1])
        tau_bins = d / (sos_mps * g.dt_s) - g.t0_offset_samples
        vals = _interp_channel(data[:, k], tau_bins, nt)
        if mode == "per-channel":
            stack[k] = vals.reshape(image_shape)
        else:
            summed += vals
    if mode == "per-channel":
        return stack
    return Image(summed.reshape(image_shape), fov_m, origin)


def _interp_channel(ch: np.ndarray, tau_bins: np.ndarray, nt: int) -> np.ndarray:
    """Linear interpolation of one channel at fractional bins, 0 outside."""
    i0 = np.floor(tau_bins).astype(np.int64)
    w = tau_bins - i0
    out = np.zeros_like(tau_bins)
    m0 = (i0 >= 0) & (i0 < nt)
    m1 = (i0 >= -1) & (i0 < nt - 1)
    out[m0] += (1.0 - w[m0]) * ch[i0[m0]]
    out[m1] += w[m1] * ch[i0[m1] + 1]
    return out


def one_hot_sos(sos_mps: float, grid: SosGrid) -> np.ndarray:
    """Indicator vector of the SoS position on the grid."""
    v = np.zeros(len(grid), dtype=np.float64)
    v[grid.index_of(sos_mps)] = 1.0
    return v
