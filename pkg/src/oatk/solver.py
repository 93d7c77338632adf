"""Non-negative Shearlet-L1 model-based reconstruction.

Minimizes  ||M p - s||_2^2 + lambda * ||SH(p)||_1  over p >= 0 with a
SpaRSA-style proximal gradient scheme: safeguarded Barzilai-Borwein
steps, frame thresholding of the shearlet coefficients as the (inexact)
prox, projection onto the non-negative orthant, and an optional
monotone safeguard that doubles the step curvature until the objective
decreases.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis
from .acoustic import ForwardOperator
from .core import Image, Sinogram
from .direct import backproject
from .shearlet import (
    ShearletSystem,
    build_shearlet_system,
    shearlet_analysis,
    shearlet_synthesis,
    soft_threshold,
)


@dataclass(frozen=True)
class MbConfig:
    lambda_reg: float | str = "auto"  # numeric weight or "auto" (L-curve)
    max_iters: int = 200
    rel_obj_tol: float = 1e-6
    bb_bounds: tuple[float, float] = (1e-8, 1e8)
    monotone: bool = True
    backtrack_factor: float = 2.0
    n_scales: int | None = None

    def __post_init__(self):
        if isinstance(self.lambda_reg, str):
            if self.lambda_reg != "auto":
                raise ValueError(f"lambda_reg must be numeric or 'auto', got {self.lambda_reg!r}")
        elif self.lambda_reg < 0:
            raise ValueError("lambda_reg must be >= 0")
        if self.rel_obj_tol <= 0:
            raise ValueError("rel_obj_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class SolveReport:
    objective_trace: tuple[float, ...]
    iterations_run: int
    converged: bool
    residual_norm_R: float
    lambda_used: float
    cancelled: bool = False


@dataclass(frozen=True)
class LCurveResult:
    lambda_selected: float
    lambdas: tuple[float, ...]
    residual_norms: tuple[float, ...]
    regularizer_norms: tuple[float, ...]
    degenerate: bool = False


def _objective(op: ForwardOperator, sys: ShearletSystem, p: np.ndarray, s: np.ndarray,
               lam: float, template: Image) -> tuple[float, np.ndarray]:
    r = op.apply(template.with_pixels(p)).samples.astype(np.float64) - s
    data_term = float(np.sum(r * r))
    reg_term = lam * float(np.sum(np.abs(shearlet_analysis(sys, p))))
    return data_term + reg_term, r


def sparsa_reconstruct(
    op: ForwardOperator,
    s: Sinogram,
    cfg: MbConfig,
    sys: ShearletSystem | None = None,
    initializer: Image | None = None,
    should_cancel: Callable[[], bool] | None = None,
) -> tuple[Image, SolveReport]:
    """Solve the non-negative Shearlet-L1 problem for one sinogram."""
    g = op.geometry
    if s.samples.shape != (g.n_time_samples, g.n_detectors):
        raise ValueError("sinogram does not match operator geometry")
    if isinstance(cfg.lambda_reg, str):
        lam = l_curve_select(op, s, cfg=cfg).lambda_selected
    else:
        lam = float(cfg.lambda_reg)
    if sys is None:
        sys = build_shearlet_system(op.image_shape, cfg.n_scales)

    template = op.image_template()
    s_arr = s.samples.astype(np.float64)

    if initializer is not None:
        p = np.maximum(initializer.pixels.astype(np.float64), 0.0)
    else:
        p = _scaled_clamped_bp(op, s)

    f, r = _objective(op, sys, p, s_arr, lam, template)
    if not math.isfinite(f):
        raise FloatingPointError("non-finite objective at initialization")
    trace = [f]
    alpha = _initial_curvature(op, template, r)
    lo, hi = cfg.bb_bounds
    prev_p = None
    prev_g = None
    converged = False
    cancelled = False
    flat_count = 0
    iters = 0

    for it in range(cfg.max_iters):
        if should_cancel is not None and should_cancel():
            cancelled = True
            break
        grad = 2.0 * op.adjoint(s.with_samples(r)).pixels.astype(np.float64)
        if prev_p is not None:
            dp = p - prev_p
            dg = grad - prev_g
            denom = float(np.sum(dp * dp))
            if denom > 0:
                alpha = float(np.sum(dp * dg)) / denom
        alpha = min(max(alpha, lo), hi)

        accepted = False
        p_new, f_new, r_new = None, None, None
        while True:
            cand = _prox_step(sys, p, grad, alpha, lam)
            f_cand, r_cand = _objective(op, sys, cand, s_arr, lam, template)
            if not math.isfinite(f_cand):
                raise FloatingPointError("non-finite objective during solve")
            if not cfg.monotone or f_cand <= f:
                p_new, f_new, r_new = cand, f_cand, r_cand
                accepted = True
                break
            if alpha >= hi:
                break
            alpha = min(alpha * cfg.backtrack_factor, hi)
        iters = it + 1
        if not accepted:
            # step curvature exhausted without descent: already at a fixed point
            converged = True
            break
        prev_p, prev_g = p, grad
        p, r = p_new, r_new
        rel_change = abs(f - f_new) / max(abs(f), 1e-300)
        f = f_new
        trace.append(f)
        flat_count = flat_count + 1 if rel_change < cfg.rel_obj_tol else 0
        if flat_count >= 3 or f == 0.0:
            converged = True
            break

    image = template.with_pixels(np.maximum(p, 0.0))
    try:
        residual = analysis.residual_norm(op, image, s)
    except ValueError:  # all-zero sinogram: R is undefined
        residual = float("nan")
    report = SolveReport(
        objective_trace=tuple(trace),
        iterations_run=iters,
        converged=converged,
        residual_norm_R=residual,
        lambda_used=lam,
        cancelled=cancelled,
    )
    return image, report


def _prox_step(sys, p, grad, alpha, lam) -> np.ndarray:
    z = p - grad / alpha
    coeffs = soft_threshold(shearlet_analysis(sys, z), lam / alpha)
    return np.maximum(shearlet_synthesis(sys, coeffs), 0.0)


def _initial_curvature(op: ForwardOperator, template: Image, r: np.ndarray) -> float:
    """Estimate of 2 lambda_max(M^T M) along the initial residual direction."""
    d = op.adjoint(Sinogram(r, op.geometry)).pixels.astype(np.float64)
    nd = float(np.sum(d * d))
    if nd == 0:
        return 1.0
    md = op.apply(template.with_pixels(d)).samples.astype(np.float64)
    return max(2.0 * float(np.sum(md * md)) / nd, 1e-8)


def _scaled_clamped_bp(op: ForwardOperator, s: Sinogram) -> np.ndarray:
    """Clamped backprojection scaled by the closed-form optimal factor."""
    bp = backproject(s, op.sos_mps, op.image_shape, op.fov_m, op.origin)
    p = np.maximum(bp.pixels.astype(np.float64), 0.0)
    if not p.any():
        return p
    mp = op.apply(op.image_template().with_pixels(p)).samples.astype(np.float64)
    denom = float(np.sum(mp * mp))
    if denom == 0:
        return np.zeros_like(p)
    alpha = float(np.sum(mp * s.samples.astype(np.float64))) / denom
    return np.maximum(alpha * p, 0.0)


DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-4, 4, 9))


def l_curve_select(
    op: ForwardOperator,
    s: Sinogram,
    grid=DEFAULT_LAMBDA_GRID,
    cfg: MbConfig | None = None,
    reduced_max_iters: int = 40,
) -> LCurveResult:
    """Pick the regularization weight at the L-curve corner.

    Solves the problem per grid value with a reduced iteration budget,
    forms (log residual norm, log regularizer norm) points, and returns
    the weight of maximum Menger curvature. A degenerate (collinear)
    curve falls back to the geometric median weight with a flag set.
    """
    lams = sorted(float(v) for v in grid)
    if len(lams) < 5:
        raise ValueError("l_curve_select requires a grid of >= 5 lambda values")
    if len(set(lams)) != len(lams):
        raise ValueError("degenerate lambda grid: duplicate values")
    base = cfg if cfg is not None else MbConfig(lambda_reg=lams[0])
    sys = build_shearlet_system(op.image_shape, base.n_scales)
    residuals = []
    regs = []
    for lam in lams:
        solve_cfg = MbConfig(
            lambda_reg=lam,
            max_iters=min(reduced_max_iters, base.max_iters),
            rel_obj_tol=base.rel_obj_tol,
            bb_bounds=base.bb_bounds,
            monotone=base.monotone,
            backtrack_factor=base.backtrack_factor,
            n_scales=base.n_scales,
        )
        image, _ = sparsa_reconstruct(op, s, solve_cfg, sys=sys)
        r = op.apply(image).samples.astype(np.float64) - s.samples.astype(np.float64)
        residuals.append(float(np.sum(r * r)))
        regs.append(float(np.sum(np.abs(shearlet_analysis(sys, image.pixels.astype(np.float64))))))
    res = np.asarray(residuals)
    if np.any(np.diff(res) < -1e-3 * res.max()):
        raise AssertionError("residual norm must be non-decreasing in lambda at optima")

    tiny = 1e-300
    x = np.log10(np.maximum(res, tiny))
    y = np.log10(np.maximum(np.asarray(regs), tiny))
    curvatures = np.zeros(len(lams))
    for i in range(1, len(lams) - 1):
        curvatures[i] = _menger(
            (x[i - 1], y[i - 1]), (x[i], y[i]), (x[i + 1], y[i + 1])
        )
    if np.max(curvatures) < 1e-9:
        warnings.warn("L-curve is degenerate (collinear); using median lambda")
        return LCurveResult(
            lambda_selected=lams[len(lams) // 2],
            lambdas=tuple(lams),
            residual_norms=tuple(residuals),
            regularizer_norms=tuple(regs),
            degenerate=True,
        )
    best = int(np.argmax(curvatures))
    return LCurveResult(
        lambda_selected=lams[best],
        lambdas=tuple(lams),
        residual_norms=tuple(residuals),
        regularizer_norms=tuple(regs),
    )


def _menger(a, b, c) -> float:
    """Menger curvature of three points: 4*area / (|ab| |bc| |ca|)."""
    area2 = abs(
        (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    )
    ab = math.hypot(b[0] - a[0], b[1] - a[1])
    bc = math.hypot(c[0] - b[0], c[1] - b[1])
    ca = math.hypot(a[0] - c[0], a[1] - c[1])
    denom = ab * bc * ca
    if denom == 0:
        return 0.0
    return 2.0 * area2 / denom
