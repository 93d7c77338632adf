import numpy as np
import pytest

from oatk import (
    EirSpec,
    ForwardOperator,
    Image,
    Sinogram,
    SosGrid,
    bandpass_filter,
    crop_leading_samples,
    delay_transform,
    eir_filter,
    one_hot_sos,
    reach_mask,
)
from oatk.core import ArrayGeometry

from conftest import small_geometry, small_operator


def dot(a, b):
    return float(np.sum(np.asarray(a, np.float64) * np.asarray(b, np.float64)))


class TestForwardAdjoint:
    def test_zero_image_maps_to_zero(self, op64):
        s = op64.apply(op64.image_template())
        assert not s.samples.any()

    def test_point_target_travel_time_1500(self):
        # unit pixel at the center of curvature; pure delay operator
        op = small_operator(1500.0, image_size=65, eir=None, apply_derivative=False,
                           n_time=1200, t0=0)
        px = np.zeros((65, 65))
        px[32, 32] = 1.0
        s = op.apply(Image(px, op.fov_m))
        expected = 0.04 / 1500.0 / 25e-9  # 1066.7
        peaks = np.argmax(s.samples, axis=0)
        assert np.all(np.abs(peaks - expected) <= 1.0)

    def test_point_target_travel_time_1475(self):
        op = small_operator(1475.0, image_size=65, eir=None, apply_derivative=False,
                           n_time=1200, t0=0)
        px = np.zeros((65, 65))
        px[32, 32] = 1.0
        s = op.apply(Image(px, op.fov_m))
        expected = 0.04 / 1475.0 / 25e-9  # 1084.7
        peaks = np.argmax(s.samples, axis=0)
        assert np.all(np.abs(peaks - expected) <= 1.0)

    def test_linearity(self, op64):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(64, 64))
        z = rng.normal(size=(64, 64))
        a, b = 2.5, -1.25
        lhs = op64.apply(Image(a * x + b * z, op64.fov_m)).samples
        rhs = a * op64.apply(Image(x, op64.fov_m)).samples + b * op64.apply(
            Image(z, op64.fov_m)
        ).samples
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-6 * np.abs(rhs).max())

    def test_adjoint_identity_random_pairs(self, op64):
        rng = np.random.default_rng(6)
        g = op64.geometry
        for _ in range(20):
            x = Image(rng.normal(size=(64, 64)), op64.fov_m)
            y = rng.normal(size=(g.n_time_samples, g.n_detectors))
            mx = op64.apply(x).samples
            mty = op64.adjoint(Sinogram(y, g)).pixels
            lhs = dot(mx, y)
            rhs = dot(x.pixels, mty)
            bound = 1e-5 * np.linalg.norm(mx) * np.linalg.norm(y)
            assert abs(lhs - rhs) <= bound

    def test_adjoint_zero(self, op64):
        g = op64.geometry
        im = op64.adjoint(Sinogram(np.zeros((g.n_time_samples, g.n_detectors)), g))
        assert not im.pixels.any()

    def test_adjoint_of_point_forward_peaks_at_target(self):
        op = small_operator(image_size=64)
        px = np.zeros((64, 64))
        px[40, 25] = 1.0
        s = op.apply(Image(px, op.fov_m))
        back = op.adjoint(s)
        assert np.unravel_index(np.argmax(back.pixels), (64, 64)) == (40, 25)

    def test_implausible_sos_rejected(self):
        with pytest.raises(ValueError):
            small_operator(sos_mps=1200.0)

    def test_shape_mismatch_rejected(self, op64):
        with pytest.raises(ValueError):
            op64.apply(Image(np.zeros((32, 32)), op64.fov_m))

    def test_shift_consistency(self):
        # cropping k samples and bumping t0 leaves overlapping bins equal
        rng = np.random.default_rng(7)
        px = rng.random((64, 64))
        k = 100
        op_a = small_operator(n_time=1700, t0=250)
        op_b = small_operator(n_time=1700 - k, t0=250 + k)
        sa = op_a.apply(Image(px, op_a.fov_m)).samples
        sb = op_b.apply(Image(px, op_b.fov_m)).samples
        guard = 70  # EIR half-length + derivative reach at the window edges
        np.testing.assert_allclose(
            sa[k + guard : -guard],
            sb[guard:-guard],
            atol=1e-5 * np.abs(sa).max(),
        )


class TestFilters:
    def test_eir_kernel_zero_phase_and_unit_peak(self):
        spec = EirSpec()
        h = spec.kernel(40e6)
        np.testing.assert_allclose(h, h[::-1], atol=1e-12)  # symmetric
        gain = np.abs(np.fft.rfft(h, 8192)).max()
        assert abs(gain - 1.0) <= 0.05

    def test_eir_dc_suppression(self):
        g = small_geometry(n_detectors=4, n_time=1024, t0=0)
        s = Sinogram(np.ones((1024, 4), np.float32), g)
        out = eir_filter(s, EirSpec()).samples
        interior = out[80:-80]
        assert np.abs(interior).max() <= 1e-3

    def test_bandpass_passes_4mhz(self):
        g = small_geometry(n_detectors=2, n_time=4096, t0=0)
        t = np.arange(4096) / 40e6
        sig = np.sin(2 * np.pi * 4e6 * t)
        s = Sinogram(np.tile(sig[:, None], (1, 2)), g)
        out = bandpass_filter(s, 100e3, 12e6).samples
        mid = slice(1024, 3072)
        ratio = np.abs(out[mid, 0]).max() / np.abs(sig[mid]).max()
        assert ratio >= 0.9

    def test_bandpass_kills_dc(self):
        g = small_geometry(n_detectors=2, n_time=2048, t0=0)
        s = Sinogram(np.ones((2048, 2), np.float32), g)
        out = bandpass_filter(s, 100e3, 12e6).samples
        assert np.abs(out[256:-256]).max() <= 1e-3

    def test_bandpass_zero_input(self):
        g = small_geometry(n_detectors=2, n_time=512, t0=0)
        s = Sinogram(np.zeros((512, 2), np.float32), g)
        assert not bandpass_filter(s, 100e3, 12e6).samples.any()

    def test_bad_band_edges_rejected(self):
        g = small_geometry(n_detectors=2, n_time=512, t0=0)
        s = Sinogram(np.zeros((512, 2), np.float32), g)
        with pytest.raises(ValueError):
            bandpass_filter(s, 12e6, 100e3)
        with pytest.raises(ValueError):
            bandpass_filter(s, 100e3, 30e6)

    def test_filters_linear(self):
        rng = np.random.default_rng(8)
        g = small_geometry(n_detectors=4, n_time=1024, t0=0)
        a = rng.normal(size=(1024, 4))
        b = rng.normal(size=(1024, 4))
        fa = bandpass_filter(Sinogram(a, g), 100e3, 12e6).samples
        fb = bandpass_filter(Sinogram(b, g), 100e3, 12e6).samples
        fab = bandpass_filter(Sinogram(a + 2 * b, g), 100e3, 12e6).samples
        np.testing.assert_allclose(fab, fa + 2 * fb, atol=1e-6 * np.abs(fab).max())


class TestCrop:
    def test_crop_110(self):
        g = ArrayGeometry()
        s = Sinogram(np.zeros((2030, 256), np.float32), g)
        out = crop_leading_samples(s, 110)
        assert out.samples.shape == (1920, 256)
        assert out.geometry.t0_offset_samples == 110

    def test_crop_zero_is_identity(self):
        g = small_geometry(n_detectors=4, n_time=64, t0=0)
        s = Sinogram(np.arange(256, dtype=np.float32).reshape(64, 4), g)
        out = crop_leading_samples(s, 0)
        np.testing.assert_array_equal(out.samples, s.samples)

    def test_crop_all_rejected(self):
        g = small_geometry(n_detectors=4, n_time=64, t0=0)
        s = Sinogram(np.zeros((64, 4), np.float32), g)
        with pytest.raises(ValueError):
            crop_leading_samples(s, 64)


class TestReachMask:
    def test_forward_support_within_mask(self):
        op = small_operator(image_size=32)
        ones = Image(np.ones((32, 32)), op.fov_m)
        s = op.apply(ones)
        mask = reach_mask(op)
        # fftconvolve leaves ~1e-15 numerical dust outside the true support
        assert np.abs(s.samples[~mask]).max() <= 1e-9 * np.abs(s.samples).max()

    def test_mask_start_bin_matches_geometry(self):
        op = small_operator(image_size=64, eir=None, apply_derivative=False, t0=0)
        mask = reach_mask(op)
        g = op.geometry
        mid = g.n_detectors // 2
        det = g.detector_positions()[mid]
        px, py = op.image_template().pixel_positions()
        d_min = np.hypot(px - det[0], py - det[1]).min()
        start = int(np.floor(d_min / (op.sos_mps * g.dt_s)))
        assert np.flatnonzero(mask[:, mid])[0] == start

    def test_higher_sos_shifts_support_earlier(self):
        op_lo = small_operator(sos_mps=1475.0, eir=None, apply_derivative=False, t0=0)
        op_hi = small_operator(sos_mps=1525.0, eir=None, apply_derivative=False, t0=0)
        lo_start = np.flatnonzero(reach_mask(op_lo)[:, 32])[0]
        hi_start = np.flatnonzero(reach_mask(op_hi)[:, 32])[0]
        assert hi_start < lo_start


class TestDelayTransform:
    def test_zero_sinogram(self):
        g = small_geometry(n_detectors=8, n_time=512, t0=400)
        s = Sinogram(np.zeros((512, 8), np.float32), g)
        out = delay_transform(s, 1500.0, image_shape=(32, 32))
        assert not out.pixels.any()

    def test_point_source_focuses_at_source(self):
        op = small_operator(image_size=64, eir=None, apply_derivative=False)
        px = np.zeros((64, 64))
        px[20, 44] = 1.0
        s = op.apply(Image(px, op.fov_m))
        out = delay_transform(s, 1500.0, image_shape=(64, 64))
        assert np.unravel_index(np.argmax(out.pixels), (64, 64)) == (20, 44)

    def test_per_channel_stack_shape(self):
        g = small_geometry(n_detectors=16, n_time=512, t0=400)
        s = Sinogram(np.zeros((512, 16), np.float32), g)
        stack = delay_transform(s, 1500.0, image_shape=(32, 32), mode="per-channel")
        assert stack.shape == (16, 32, 32)

    def test_per_channel_guard(self):
        g = ArrayGeometry()  # 256 detectors
        s = Sinogram(np.zeros((2030, 256), np.float32), g)
        with pytest.raises(ValueError):
            delay_transform(s, 1500.0, image_shape=(1024, 1024), mode="per-channel")

    def test_summed_is_channel_sum(self):
        rng = np.random.default_rng(9)
        g = small_geometry(n_detectors=8, n_time=1700, t0=250)
        s = Sinogram(rng.normal(size=(1700, 8)), g)
        stack = delay_transform(s, 1500.0, image_shape=(32, 32), mode="per-channel")
        summed = delay_transform(s, 1500.0, image_shape=(32, 32))
        np.testing.assert_allclose(summed.pixels, stack.sum(axis=0), rtol=1e-5)


class TestOneHot:
    @pytest.mark.parametrize("sos,idx", [(1475.0, 0), (1525.0, 10), (1500.0, 5)])
    def test_positions(self, sos, idx):
        v = one_hot_sos(sos, SosGrid())
        assert v.shape == (11,)
        assert v[idx] == 1.0
        assert v.sum() == 1.0

    def test_off_grid_rejected(self):
        with pytest.raises(ValueError):
            one_hot_sos(1503.0, SosGrid())
