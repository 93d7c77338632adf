"""Server-side 8-bit PNG previews with a fixed colormap and window/level.

The same function renders CLI and service previews so they match
pixel-for-pixel.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image as PilImage

from .core import Image

# Compact viridis approximation: anchor colors interpolated to a 256-entry LUT.
_VIRIDIS_ANCHORS = np.array(
    [
        (68, 1, 84),
        (71, 44, 122),
        (59, 81, 139),
        (44, 113, 142),
        (33, 144, 141),
        (39, 173, 129),
        (92, 200, 99),
        (170, 220, 50),
        (253, 231, 37),
    ],
    dtype=np.float64,
)


def _viridis_lut() -> np.ndarray:
    x = np.linspace(0, 1, 256)
    xp = np.linspace(0, 1, len(_VIRIDIS_ANCHORS))
    lut = np.stack(
        [np.interp(x, xp, _VIRIDIS_ANCHORS[:, c]) for c in range(3)], axis=1
    )
    return np.round(lut).astype(np.uint8)


_LUT = _viridis_lut()


def render_png(image: Image) -> bytes:
    """Render an image to PNG bytes; window is [min(0, min), max]."""
    p = image.pixels.astype(np.float64)
    vmin = min(0.0, float(p.min()))
    vmax = float(p.max())
    if vmax <= vmin:
        idx = np.zeros(p.shape, dtype=np.uint8)
    else:
        idx = np.clip((p - vmin) / (vmax - vmin) * 255.0, 0, 255).astype(np.uint8)
    rgb = _LUT[idx]
    buf = io.BytesIO()
    PilImage.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
