"""Evaluation mathematics: data residual norm, image metrics, unmixing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acoustic import ForwardOperator, reach_mask
from .core import Image, MultispectralStack, Sinogram, SpectraMatrix, UnmixResult


@dataclass(frozen=True)
class MetricReport:
    mae: float
    mae_rel: float
    mse: float
    mse_rel: float
    ssim: float
    r: float | None = None


def optimal_scale(op: ForwardOperator, p: Image, s: Sinogram) -> float:
    """Closed-form scalar minimizing ||alpha * M p - s||_2^2."""
    mp = op.apply(p).samples.astype(np.float64)
    denom = float(np.sum(mp * mp))
    if denom == 0:
        raise ValueError("M p is zero; optimal scale undefined")
    return float(np.sum(mp * s.samples.astype(np.float64))) / denom


def residual_norm(
    op: ForwardOperator,
    p0: Image,
    s: Sinogram,
    clamp_negatives: bool = False,
    apply_optimal_scale: bool = False,
) -> float:
    """Data residual norm R = ||M p0 - s||^2 / ||s||^2 on reach-masked bins.

    Sinogram bins outside the reach of the forward model are zeroed
    before the ratio. With `clamp_negatives`, negative pixels are zeroed
    first; with `apply_optimal_scale`, the image is rescaled by the
    closed-form optimal factor (skipped when M p0 = 0, where the scale
    is undefined and R = 1 regardless).
    """
    mask = reach_mask(op)
    s_m = np.where(mask, s.samples.astype(np.float64), 0.0)
    s_norm = float(np.sum(s_m * s_m))
    if s_norm == 0:
        raise ValueError("sinogram is zero on all reachable bins")
    p = p0.pixels.astype(np.float64)
    if clamp_negatives:
        p = np.maximum(p, 0.0)
    mp = op.apply(p0.with_pixels(p)).samples.astype(np.float64)
    if apply_optimal_scale:
        denom = float(np.sum(mp * mp))
        if denom > 0:
            mp = mp * (float(np.sum(mp * s_m)) / denom)
    diff = mp - s_m
    return float(np.sum(diff * diff)) / s_norm


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values)
    v = values[order]
    w = weights[order]
    cw = np.cumsum(w)
    return float(v[np.searchsorted(cw, 0.5 * cw[-1])])


def _mae_optimal_scale(rec: np.ndarray, ref: np.ndarray) -> float:
    """argmin_a ||a*rec - ref||_1, the |rec|-weighted median of ref/rec."""
    nz = rec != 0
    if not nz.any():
        return 1.0
    return _weighted_median(ref[nz] / rec[nz], np.abs(rec[nz]))


def _uniform_ssim(rec: np.ndarray, ref: np.ndarray, window: int = 21) -> float:
    """Mean SSIM over valid uniform windows; c1, c2 from the reference max."""
    win = min(window, min(ref.shape))
    if win % 2 == 0:
        win -= 1
    if win < 2:
        raise ValueError("image too small for SSIM windowing")
    ref_max = float(ref.max())
    c1 = (0.01 * ref_max) ** 2
    c2 = (0.03 * ref_max) ** 2

    def windowed_mean(x):
        c = np.cumsum(np.cumsum(np.pad(x, ((1, 0), (1, 0))), axis=0), axis=1)
        s = (
            c[win:, win:]
            - c[:-win, win:]
            - c[win:, :-win]
            + c[:-win, :-win]
        )
        return s / (win * win)

    mu_r = windowed_mean(rec)
    mu_m = windowed_mean(ref)
    var_r = windowed_mean(rec * rec) - mu_r**2
    var_m = windowed_mean(ref * ref) - mu_m**2
    cov = windowed_mean(rec * ref) - mu_r * mu_m
    num = (2 * mu_r * mu_m + c1) * (2 * cov + c2)
    den = (mu_r**2 + mu_m**2 + c1) * (var_r + var_m + c2)
    return float(np.mean(num / den))


def image_metrics(
    i_rec: Image, i_mb: Image, scale_per_metric: bool = False, ssim_window: int = 21
) -> MetricReport:
    """MAE/MSE (absolute and relative), SSIM against a reference image.

    Absolute errors are normalized by the pixel count; relative variants
    are norm ratios. With `scale_per_metric`, the reconstructed image is
    rescaled per metric to minimize that metric (closed form for MSE,
    weighted-median form for MAE; SSIM inputs stay unscaled).
    """
    if i_rec.pixels.shape != i_mb.pixels.shape:
        raise ValueError("image dimensions differ")
    rec = i_rec.pixels.astype(np.float64).ravel()
    ref = i_mb.pixels.astype(np.float64).ravel()
    ref_l1 = float(np.sum(np.abs(ref)))
    ref_l2sq = float(np.sum(ref * ref))
    if ref_l1 == 0:
        raise ValueError("all-zero reference image; relative metrics undefined")
    n = ref.size

    rec_mae = rec
    rec_mse = rec
    if scale_per_metric:
        rec_mae = rec * _mae_optimal_scale(rec, ref)
        denom = float(np.sum(rec * rec))
        if denom > 0:
            rec_mse = rec * (float(np.sum(rec * ref)) / denom)

    l1 = float(np.sum(np.abs(rec_mae - ref)))
    l2sq = float(np.sum((rec_mse - ref) ** 2))
    ssim = _uniform_ssim(
        i_rec.pixels.astype(np.float64), i_mb.pixels.astype(np.float64), ssim_window
    )
    return MetricReport(
        mae=l1 / n,
        mae_rel=l1 / ref_l1,
        mse=l2sq / n,
        mse_rel=l2sq / ref_l2sq,
        ssim=ssim,
    )


def nnls(AtA: np.ndarray, Atb: np.ndarray, tol: float = 1e-10, max_iters: int | None = None):
    """Lawson-Hanson active-set NNLS on the normal equations.

    Solves min ||A x - b||_2 s.t. x >= 0 given A^T A and A^T b; suited
    to the small, well-conditioned per-pixel unmixing systems.
    """
    n = AtA.shape[0]
    if max_iters is None:
        max_iters = 3 * n
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    for _ in range(max_iters):
        grad = Atb - AtA @ x
        candidates = ~passive
        if not candidates.any() or np.max(grad[candidates]) <= tol:
            break
        passive[np.argmax(np.where(candidates, grad, -np.inf))] = True
        while True:
            idx = np.flatnonzero(passive)
            z = np.linalg.solve(AtA[np.ix_(idx, idx)], Atb[idx])
            if np.all(z > tol):
                x[:] = 0.0
                x[idx] = z
                break
            bad = z <= tol
            xp = x[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(bad, xp / (xp - z), np.inf)
            alpha = float(np.min(ratios))
            x[idx] = xp + alpha * (z - xp)
            passive[x <= tol] = False
            x[~passive] = 0.0
    return x


def unmix_nnls(
    stack: MultispectralStack, spectra: SpectraMatrix, clamp_negatives: bool = False
) -> UnmixResult:
    """Per-pixel non-negative unmixing of a multispectral stack.

    Minimizes ||S - W H||_F^2 over W >= 0 where rows of S are per-pixel
    spectra and H holds the chromophore absorption spectra.
    """
    h = spectra.absorption
    if h.shape[1] != len(stack.wavelengths_nm):
        raise ValueError(
            f"spectra have {h.shape[1]} wavelengths, stack has {len(stack.wavelengths_nm)}"
        )
    if np.linalg.matrix_rank(h) < h.shape[0]:
        raise ValueError("spectra matrix is rank-deficient")
    s_mat = stack.as_matrix()  # [n_pixels, n_wavelengths]
    if clamp_negatives:
        s_mat = np.maximum(s_mat, 0.0)
    a = h.T  # [n_wavelengths, n_chromophores]
    ata = a.T @ a
    atb_all = s_mat @ a  # [n_pixels, n_chromophores]
    w = np.zeros((s_mat.shape[0], h.shape[0]))
    for i in range(s_mat.shape[0]):
        if atb_all[i].max(initial=0.0) <= 0 and not s_mat[i].any():
            continue
        w[i] = nnls(ata, atb_all[i])
    shape = stack.images[0].pixels.shape
    return UnmixResult(np.maximum(w, 0.0), spectra.chromophores, shape)
