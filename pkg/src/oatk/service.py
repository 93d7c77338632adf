"""HTTP reconstruction service powering the interactive SoS-tuning UI.

Handlers are stateless over the immutable dataset directory. Direct
reconstructions run inline; model-based solves go through a bounded
worker pool with cooperative cancellation when a newer request from the
same UI session supersedes an in-flight one.
"""

from __future__ import annotations

import base64
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import io as oio
from .config import EngineConfig
from .core import Sinogram
from .pipeline import METHODS, run_reconstruction
from .preview import render_png

MB_QUEUE_DEPTH = 4


class ReconRequest(BaseModel):
    dataset_id: str
    frame_index: int
    method: str
    sos_mps: float
    lambda_reg: float | None = None
    session_id: str | None = None
    seq: int | None = None


class ReconResponse(BaseModel):
    image_b64: str
    png_b64: str
    residual_norm: float | None
    elapsed_ms: float
    sos_used: float
    method: str
    nx: int
    ny: int


@dataclass
class _Dataset:
    id: str
    frames: list[Path]
    wavelengths: list[float]


def _discover_datasets(root: Path) -> dict[str, _Dataset]:
    datasets = {}
    if not root.is_dir():
        return datasets
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        frames = sorted(d.glob("*.oasg"))
        if not frames:
            continue
        wavelengths = []
        manifest = d / "manifest.csv"
        if manifest.exists():
            import csv

            with open(manifest, encoding="utf-8", newline="") as f:
                reader = csv.DictReader(f)
                if reader.fieldnames and "wavelength_nm" in reader.fieldnames:
                    wavelengths = sorted(
                        {float(r["wavelength_nm"]) for r in reader if r["wavelength_nm"]}
                    )
        datasets[d.name] = _Dataset(d.name, frames, wavelengths)
    return datasets


def _image_to_oaim_b64(image) -> str:
    # the wire payload reuses the on-disk OAIM layout
    return base64.b64encode(oio.image_to_bytes(image)).decode("ascii")


def create_app(cfg: EngineConfig, static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="oatk reconstruction service")
    datasets = _discover_datasets(Path(cfg.dataset_root))

    workers = os.cpu_count() or 1
    mb_pool = ThreadPoolExecutor(max_workers=workers)
    mb_slots = threading.Semaphore(workers + MB_QUEUE_DEPTH)
    session_lock = threading.Lock()
    session_seq: dict[str, int] = {}

    @lru_cache(maxsize=64)
    def load_frame(dataset_id: str, frame_index: int) -> Sinogram:
        ds = datasets[dataset_id]
        return oio.read_sinogram(ds.frames[frame_index], geometry=cfg.geometry)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/api/datasets")
    def list_datasets():
        return [
            {"id": ds.id, "n_frames": len(ds.frames), "wavelengths": ds.wavelengths}
            for ds in datasets.values()
        ]

    @app.get("/api/datasets/{dataset_id}/frames/{frame_index}/meta")
    def frame_meta(dataset_id: str, frame_index: int):
        ds = datasets.get(dataset_id)
        if ds is None:
            raise HTTPException(404, f"unknown dataset {dataset_id!r}")
        if not (0 <= frame_index < len(ds.frames)):
            raise HTTPException(404, f"frame {frame_index} out of range")
        s = load_frame(dataset_id, frame_index)
        return {
            "dataset_id": dataset_id,
            "frame_index": frame_index,
            "n_time": s.n_time,
            "n_detectors": s.n_detectors,
            "sampling_rate_hz": s.geometry.sampling_rate_hz,
            "t0_offset_samples": s.geometry.t0_offset_samples,
            "file": ds.frames[frame_index].name,
        }

    @app.get("/api/sos-grid")
    def sos_grid():
        return {
            "min_mps": cfg.sos_grid.min_mps,
            "max_mps": cfg.sos_grid.max_mps,
            "step_mps": cfg.sos_grid.step_mps,
            "values": [float(v) for v in cfg.sos_grid.values()],
        }

    @app.post("/api/recon", response_model=ReconResponse)
    def recon(req: ReconRequest):
        if req.method not in METHODS:
            raise HTTPException(400, f"unknown method {req.method!r}")
        if not cfg.sos_grid.contains(req.sos_mps):
            raise HTTPException(
                400,
                f"sos {req.sos_mps} m/s is off the grid "
                f"{cfg.sos_grid.min_mps}-{cfg.sos_grid.max_mps} step {cfg.sos_grid.step_mps}",
            )
        ds = datasets.get(req.dataset_id)
        if ds is None:
            raise HTTPException(404, f"unknown dataset {req.dataset_id!r}")
        if not (0 <= req.frame_index < len(ds.frames)):
            raise HTTPException(404, f"frame {req.frame_index} out of range")
        s = load_frame(req.dataset_id, req.frame_index)

        should_cancel = None
        if req.session_id is not None and req.seq is not None:
            sid, seq = req.session_id, req.seq
            with session_lock:
                session_seq[sid] = max(session_seq.get(sid, seq), seq)

            def should_cancel() -> bool:
                with session_lock:
                    return session_seq.get(sid, seq) > seq

        if req.method == "mb":
            if not mb_slots.acquire(blocking=False):
                raise HTTPException(409, "model-based worker queue is full")
            try:
                future = mb_pool.submit(
                    run_reconstruction,
                    req.method,
                    s,
                    req.sos_mps,
                    cfg,
                    req.lambda_reg,
                    should_cancel,
                )
                result = future.result()
            finally:
                mb_slots.release()
        else:
            result = run_reconstruction(req.method, s, req.sos_mps, cfg, req.lambda_reg)

        r = result.residual_norm
        return ReconResponse(
            image_b64=_image_to_oaim_b64(result.image),
            png_b64=base64.b64encode(render_png(result.image)).decode("ascii"),
            residual_norm=None if np.isnan(r) else float(r),
            elapsed_ms=result.elapsed_ms,
            sos_used=result.sos_used,
            method=result.method,
            nx=result.image.nx,
            ny=result.image.ny,
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
