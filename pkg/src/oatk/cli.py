"""Command line interface: simulate, recon, metrics, unmix, bench, serve.

Exit codes: 0 success, 2 usage, 3 missing file, 4 config error,
5 file-format error, 6 validation/data error, 1 unexpected failure.
Failures print a single machine-parsable "error code=N message" line.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, io as oio
from .config import ConfigError, EngineConfig, load_engine_config
from .core import MultispectralStack
from .pipeline import bench_stream, run_reconstruction
from .preview import render_png
from .synthesis import SynthesisConfig, generate_dataset, manifest_hash

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_CONFIG = 4
EXIT_FORMAT = 5
EXIT_VALIDATION = 6

RASTER_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif"}


def _load_config(path: str | None) -> EngineConfig:
    if path is None:
        path = os.environ.get("OATK_CONFIG")
    if path is None:
        return EngineConfig()
    return load_engine_config(path)


def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="engine config file (default: $OATK_CONFIG or built-ins)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oatk")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize sinograms from rasters or phantoms")
    p.add_argument("--input", action="append", required=True,
                   help="raster file/dir or phantom:<disks|points|cartoon>; repeatable")
    p.add_argument("--count", type=int, default=1,
                   help="replication count for phantom inputs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=None, help="image grid size override")
    p.add_argument("--noise-std", type=float, default=None)
    p.add_argument("--no-acquisition-filters", action="store_true")
    _add_config_flag(p)

    p = sub.add_parser("recon", help="reconstruct one sinogram file")
    p.add_argument("--method", choices=["bp", "dmas", "mb", "delay"], required=True)
    p.add_argument("--sos", type=float, required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lambda_reg", default=None,
                   help="MB regularization weight or 'auto'")
    p.add_argument("--png", help="also write a PNG preview here")
    _add_config_flag(p)

    p = sub.add_parser("metrics", help="image metrics against a reference")
    p.add_argument("--rec", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--sino", help="sinogram for the data residual norm")
    p.add_argument("--sos", type=float, default=1500.0)
    p.add_argument("--scale-per-metric", action="store_true")
    _add_config_flag(p)

    p = sub.add_parser("unmix", help="spectrally unmix a stack of images")
    p.add_argument("--stack", required=True, help="directory of .oaim files, wavelength order")
    p.add_argument("--spectra", required=True, help="absorption spectra CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--clamp-negatives", action="store_true")
    _add_config_flag(p)

    p = sub.add_parser("bench", help="streaming reconstruction benchmark")
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--method", choices=["bp", "dmas", "mb", "delay"], default="bp")
    p.add_argument("--dataset", help="dataset id under dataset_root; default zero frames")
    p.add_argument("--sos", type=float, default=1500.0)
    p.add_argument("--unpaced", action="store_true", help="skip the 25 Hz pacing")
    _add_config_flag(p)

    p = sub.add_parser("serve", help="run the interactive reconstruction service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", default=None, help="static UI assets directory")
    _add_config_flag(p)

    return parser


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    sources: list[str] = []
    for item in args.input:
        if item.startswith("phantom:"):
            sources.extend([item] * args.count)
        else:
            path = Path(item)
            if path.is_dir():
                sources.extend(
                    str(p) for p in sorted(path.iterdir())
                    if p.suffix.lower() in RASTER_SUFFIXES
                )
            elif path.exists():
                sources.append(str(path))
            else:
                raise FileNotFoundError(f"input {item} not found")
    if not sources:
        raise ValueError("no input images resolved")
    syn_cfg = SynthesisConfig(
        image_size=args.size if args.size is not None else cfg.image_size,
        fov_m=cfg.fov_m,
        sos_grid=cfg.sos_grid,
        rng_seed=args.seed,
        noise_std=args.noise_std,
        apply_acquisition_filters=not args.no_acquisition_filters,
        geometry=cfg.geometry,
        eir=cfg.eir,
    )
    manifest = generate_dataset(sources, syn_cfg, args.out)
    print(f"items={len(sources)} manifest={manifest} sha256={manifest_hash(manifest)}")
    return EXIT_OK


def _cmd_recon(args) -> int:
    cfg = _load_config(args.config)
    s = oio.read_sinogram(args.input, geometry=cfg.geometry)
    lam = None
    if args.lambda_reg is not None:
        lam = args.lambda_reg if args.lambda_reg == "auto" else float(args.lambda_reg)
    result = run_reconstruction(args.method, s, args.sos, cfg, lambda_reg=lam)
    oio.write_image(result.image, args.out)
    if args.png:
        Path(args.png).write_bytes(render_png(result.image))
    print(f"R={result.residual_norm:.6f} elapsed_ms={result.elapsed_ms:.1f}")
    if result.solve_report is not None:
        rep = result.solve_report
        sidecar = Path(args.out).with_suffix(".report.txt")
        sidecar.write_text(
            "\n".join(
                [
                    f"method=mb",
                    f"lambda={rep.lambda_used!r}",
                    f"iterations={rep.iterations_run}",
                    f"converged={rep.converged}",
                    f"residual_norm_R={rep.residual_norm_R!r}",
                    f"objective_final={rep.objective_trace[-1]!r}",
                ]
            )
            + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def _cmd_metrics(args) -> int:
    cfg = _load_config(args.config)
    rec = oio.read_image(args.rec)
    ref = oio.read_image(args.ref)
    report = analysis.image_metrics(rec, ref, scale_per_metric=args.scale_per_metric)
    r = None
    if args.sino:
        from .pipeline import make_operator

        s = oio.read_sinogram(args.sino, geometry=cfg.geometry)
        op = make_operator(cfg, args.sos, geometry=s.geometry)
        r = analysis.residual_norm(op, rec, s, apply_optimal_scale=True)
    print(f"MAE={report.mae:.6e}")
    print(f"MAE_rel={report.mae_rel:.6f}")
    print(f"MSE={report.mse:.6e}")
    print(f"MSE_rel={report.mse_rel:.6f}")
    print(f"SSIM={report.ssim:.6f}")
    if r is not None:
        print(f"R={r:.6f}")
    return EXIT_OK


def _cmd_unmix(args) -> int:
    spectra = oio.read_spectra(args.spectra)
    stack_dir = Path(args.stack)
    if not stack_dir.is_dir():
        raise FileNotFoundError(f"stack directory {stack_dir} not found")
    files = sorted(stack_dir.glob("*.oaim"))
    if not files:
        raise ValueError(f"no .oaim files in {stack_dir}")
    if spectra.wavelengths_nm is None or len(files) != len(spectra.wavelengths_nm):
        raise ValueError(
            f"stack has {len(files)} images but spectra define "
            f"{0 if spectra.wavelengths_nm is None else len(spectra.wavelengths_nm)} wavelengths"
        )
    images = tuple(oio.read_image(f) for f in files)
    stack = MultispectralStack(images, spectra.wavelengths_nm)
    result = analysis.unmix_nnls(stack, spectra, clamp_negatives=args.clamp_negatives)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in result.chromophores:
        comp = images[0].with_pixels(result.component_image(name))
        oio.write_image(comp, out_dir / f"{name}.oaim")
    print(f"components={','.join(result.chromophores)} out={out_dir}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    if args.dataset:
        ds_dir = Path(cfg.dataset_root) / args.dataset
        files = sorted(ds_dir.glob("*.oasg"))
        if not files:
            raise FileNotFoundError(f"no sinograms in dataset {args.dataset!r}")
        frames = [
            oio.read_sinogram(files[i % len(files)], geometry=cfg.geometry)
            for i in range(args.frames)
        ]
    else:
        from .core import Sinogram

        zero = np.zeros((cfg.geometry.n_time_samples, cfg.geometry.n_detectors), np.float32)
        frames = [Sinogram(zero, cfg.geometry)] * args.frames
    report = bench_stream(cfg, args.method, frames, sos_mps=args.sos, paced=not args.unpaced)
    for line in report.format_lines():
        print(line)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = _load_config(args.config)
    static_dir = Path(args.ui_dir) if args.ui_dir else _default_ui_dir()
    app = create_app(cfg, static_dir=static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _default_ui_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


_COMMANDS = {
    "simulate": _cmd_simulate,
    "recon": _cmd_recon,
    "metrics": _cmd_metrics,
    "unmix": _cmd_unmix,
    "bench": _cmd_bench,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as e:
        print(f"error code={EXIT_MISSING_FILE} {e}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigError as e:
        print(f"error code={EXIT_CONFIG} {e}", file=sys.stderr)
        return EXIT_CONFIG
    except oio.FormatError as e:
        print(f"error code={EXIT_FORMAT} {e}", file=sys.stderr)
        return EXIT_FORMAT
    except (ValueError, AssertionError) as e:
        print(f"error code={EXIT_VALIDATION} {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # pragma: no cover - unexpected
        print(f"error code=1 {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
