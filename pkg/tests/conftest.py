import numpy as np
import pytest

from oatk import ArrayGeometry, ForwardOperator, Image, make_phantom

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def small_geometry(n_detectors=64, n_time=1700, t0=250, fs=40e6):
    """Desk-scale geometry whose time window covers the full 4.16 cm FOV reach."""
    return ArrayGeometry(
        n_detectors=n_detectors,
        n_time_samples=n_time,
        t0_offset_samples=t0,
        sampling_rate_hz=fs,
    )


def small_operator(sos_mps=1500.0, image_size=64, eir="default", apply_derivative=True,
                   **geo_kwargs):
    geometry = small_geometry(**geo_kwargs)
    kwargs = {}
    if eir != "default":
        kwargs["eir"] = eir
    return ForwardOperator(
        geometry,
        sos_mps,
        image_shape=(image_size, image_size),
        apply_derivative=apply_derivative,
        **kwargs,
    )


@pytest.fixture(scope="session")
def op64():
    return small_operator()


@pytest.fixture(scope="session")
def phantom_corpus():
    """20 seeded noiseless test phantoms on a 64x64 grid."""
    out = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        kind = ("disks", "points", "cartoon")[seed % 3]
        out.append(make_phantom(kind, 64, rng))
    return out


def random_image(rng, size=64) -> Image:
    return Image(rng.normal(size=(size, size)), fov_m=(0.0416, 0.0416))
