"""Bit-exact file formats for sinograms, images, and spectra.

Binary layouts (little-endian throughout):

  Sinogram (.oasg): magic "OASG", u32 version=1, u32 n_time, u32 n_det,
      f32 t0_offset_s, f32 sampling_rate_hz, then n_time*n_det f32,
      time-major.
  Image (.oaim): magic "OAIM", u32 version=1, u32 nx, u32 ny,
      f32 fov_x_m, f32 fov_y_m, then ny*nx f32.
  Spectra: UTF-8 CSV with header "wavelength_nm,<names...>", one row
      per wavelength.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import ArrayGeometry, Image, Sinogram, SpectraMatrix

SINOGRAM_MAGIC = b"OASG"
IMAGE_MAGIC = b"OAIM"


class FormatError(ValueError):
    """File does not conform to the expected binary/CSV layout."""


class BadMagicError(FormatError):
    pass


class DimensionError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise TruncatedPayloadError(f"expected {n} bytes for {what}, got {len(buf)}")
    return buf


def write_sinogram(s: Sinogram, path) -> None:
    g = s.geometry
    t0_s = g.t0_offset_samples * g.dt_s
    header = SINOGRAM_MAGIC + struct.pack(
        "<IIIff", 1, s.n_time, s.n_detectors, t0_s, g.sampling_rate_hz
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(s.samples, dtype="<f4").tobytes())


def read_sinogram(path, geometry: ArrayGeometry | None = None) -> Sinogram:
    """Read a .oasg file.

    If `geometry` is given, its detector layout is kept and only the
    sampling fields are overridden from the header; otherwise a default
    arc geometry with the file's dimensions is used.
    """
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != SINOGRAM_MAGIC:
            raise BadMagicError(f"bad sinogram magic {magic!r} in {path}")
        version, n_time, n_det, t0_s, fs = struct.unpack(
            "<IIIff", _read_exact(f, 20, "header")
        )
        if version != 1:
            raise FormatError(f"unsupported sinogram version {version}")
        if n_time < 1 or n_det < 2:
            raise DimensionError(f"implausible sinogram dims {n_time}x{n_det}")
        payload = _read_exact(f, 4 * n_time * n_det, "sample payload")
        extra = f.read(1)
    if extra:
        raise FormatError(f"trailing bytes after sinogram payload in {path}")
    samples = np.frombuffer(payload, dtype="<f4").reshape(n_time, n_det)
    t0_samples = int(round(t0_s * fs))
    if geometry is None:
        geometry = ArrayGeometry(
            n_detectors=n_det,
            sampling_rate_hz=fs,
            n_time_samples=n_time,
            t0_offset_samples=t0_samples,
        )
    else:
        geometry = replace(
            geometry,
            n_detectors=n_det,
            sampling_rate_hz=fs,
            n_time_samples=n_time,
            t0_offset_samples=t0_samples,
        )
    return Sinogram(samples, geometry)


def image_to_bytes(im: Image) -> bytes:
    header = IMAGE_MAGIC + struct.pack("<IIIff", 1, im.nx, im.ny, im.fov_m[0], im.fov_m[1])
    return header + np.ascontiguousarray(im.pixels, dtype="<f4").tobytes()


def write_image(im: Image, path) -> None:
    with open(path, "wb") as f:
        f.write(image_to_bytes(im))


def read_image(path) -> Image:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != IMAGE_MAGIC:
            raise BadMagicError(f"bad image magic {magic!r} in {path}")
        version, nx, ny, fov_x, fov_y = struct.unpack("<IIIff", _read_exact(f, 20, "header"))
        if version != 1:
            raise FormatError(f"unsupported image version {version}")
        if nx < 1 or ny < 1:
            raise DimensionError(f"implausible image dims {ny}x{nx}")
        payload = _read_exact(f, 4 * nx * ny, "pixel payload")
        extra = f.read(1)
    if extra:
        raise FormatError(f"trailing bytes after image payload in {path}")
    pixels = np.frombuffer(payload, dtype="<f4").reshape(ny, nx)
    return Image(pixels, fov_m=(float(fov_x), float(fov_y)))


def read_spectra(path) -> SpectraMatrix:
    """Read an absorption-spectra CSV into a SpectraMatrix."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows or len(rows[0]) < 2 or rows[0][0].strip() != "wavelength_nm":
        raise FormatError(f"spectra CSV {path} must start with 'wavelength_nm,<names...>'")
    names = tuple(c.strip() for c in rows[0][1:])
    wavelengths = []
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(names) + 1:
            raise DimensionError(f"spectra CSV {path} line {i}: expected {len(names) + 1} columns")
        try:
            wavelengths.append(float(row[0]))
            values.append([float(c) for c in row[1:]])
        except ValueError as e:
            raise FormatError(f"spectra CSV {path} line {i}: {e}") from None
    if not values:
        raise FormatError(f"spectra CSV {path} contains no data rows")
    absorption = np.asarray(values, dtype=np.float64).T  # [n_chromophores, n_wavelengths]
    return SpectraMatrix(absorption, chromophores=names, wavelengths_nm=tuple(wavelengths))


def write_spectra(spectra: SpectraMatrix, path) -> None:
    if spectra.wavelengths_nm is None:
        raise ValueError("spectra without wavelengths cannot be written to CSV")
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["wavelength_nm", *spectra.chromophores])
        for j, wl in enumerate(spectra.wavelengths_nm):
            w.writerow([repr(float(wl)), *[repr(float(v)) for v in spectra.absorption[:, j]]])
