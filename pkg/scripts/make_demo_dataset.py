#!/usr/bin/env python3
"""Generate a desk-scale demo dataset for the interactive service.

Writes phantom sinogram/image pairs plus a manifest under
<dataset-root>/<name>, ready for `oatk serve` and `oatk bench`.
"""

import argparse
from pathlib import Path

from oatk import SynthesisConfig, generate_dataset, manifest_hash
from oatk.core import ArrayGeometry


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dataset-root", default="datasets")
    ap.add_argument("--name", default="demo")
    ap.add_argument("--items", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", type=int, default=128, help="image grid size")
    ap.add_argument("--detectors", type=int, default=64)
    ap.add_argument("--full-scale", action="store_true",
                    help="use the 256-detector, 416px production geometry")
    args = ap.parse_args()

    if args.full_scale:
        geometry = ArrayGeometry()
        size = 416
    else:
        geometry = ArrayGeometry(
            n_detectors=args.detectors, n_time_samples=1700, t0_offset_samples=250
        )
        size = args.size

    kinds = ["phantom:disks", "phantom:points", "phantom:cartoon"]
    sources = [kinds[i % len(kinds)] for i in range(args.items)]
    cfg = SynthesisConfig(image_size=size, geometry=geometry, rng_seed=args.seed)
    out = Path(args.dataset_root) / args.name
    manifest = generate_dataset(sources, cfg, out)
    print(f"wrote {args.items} frames to {out}")
    print(f"manifest={manifest} sha256={manifest_hash(manifest)}")
    print(f"serve with: OATK_CONFIG=<cfg with matching geometry> oatk serve")


if __name__ == "__main__":
    main()
