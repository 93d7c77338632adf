import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oatk import (
    build_shearlet_system,
    default_scale_count,
    shearlet_analysis,
    shearlet_synthesis,
    shears_per_scale,
    soft_threshold,
)


@pytest.fixture(scope="module")
def sys64():
    return build_shearlet_system((64, 64))


class TestSystemShape:
    @pytest.mark.parametrize(
        "size,expected",
        [((64, 64), 2), ((128, 128), 3), ((416, 416), 4), ((32, 32), 1)],
    )
    def test_default_scale_count(self, size, expected):
        assert default_scale_count(size) == expected

    def test_scale_count_floor_is_one(self):
        assert default_scale_count((33, 33)) == 1

    def test_shears_per_scale(self):
        # 2 * (2 ceil(2^(j/2)) + 1) directions across the two cones
        assert shears_per_scale(0) == 3
        assert shears_per_scale(1) == 5
        assert shears_per_scale(2) == 5
        assert shears_per_scale(3) == 7

    def test_filter_count(self, sys64):
        expected = 1 + sum(2 * shears_per_scale(j) for j in range(2))
        assert sys64.n_filters == expected
        assert sys64.filters.shape == (expected, 64, 64)

    def test_describe(self, sys64):
        d = sys64.describe()
        assert d["n_scales"] == 2
        assert d["n_filters"] == sys64.n_filters
        assert d["filters_per_scale"] == [6, 10]  # both cones per scale

    def test_filters_real_and_nonnegative(self, sys64):
        assert np.isrealobj(sys64.filters)
        assert sys64.filters.min() >= 0.0

    def test_invalid_scale_count(self):
        with pytest.raises(ValueError):
            build_shearlet_system((64, 64), n_scales=0)


class TestParseval:
    @pytest.mark.parametrize("size", [(32, 32), (64, 64), (63, 65)])
    def test_frame_sums_to_one(self, size):
        sys = build_shearlet_system(size)
        frame = np.sum(sys.filters**2, axis=0)
        np.testing.assert_allclose(frame, 1.0, atol=1e-10)

    def test_round_trip(self, sys64):
        rng = np.random.default_rng(21)
        p = rng.normal(size=(64, 64))
        rec = shearlet_synthesis(sys64, shearlet_analysis(sys64, p))
        np.testing.assert_allclose(rec, p, atol=1e-10)

    def test_energy_preserved(self, sys64):
        rng = np.random.default_rng(22)
        p = rng.normal(size=(64, 64))
        c = shearlet_analysis(sys64, p)
        assert abs(np.sum(c**2) / np.sum(p**2) - 1.0) <= 1e-10

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_round_trip_property(self, sys64, seed):
        rng = np.random.default_rng(seed)
        p = rng.normal(size=(64, 64)) * rng.uniform(0.01, 100.0)
        rec = shearlet_synthesis(sys64, shearlet_analysis(sys64, p))
        assert np.abs(rec - p).max() <= 1e-9 * max(1.0, np.abs(p).max())

    def test_coefficients_real(self, sys64):
        rng = np.random.default_rng(23)
        c = shearlet_analysis(sys64, rng.normal(size=(64, 64)))
        assert np.isrealobj(c)

    def test_analysis_linear(self, sys64):
        rng = np.random.default_rng(24)
        a = rng.normal(size=(64, 64))
        b = rng.normal(size=(64, 64))
        lhs = shearlet_analysis(sys64, a - 4 * b)
        rhs = shearlet_analysis(sys64, a) - 4 * shearlet_analysis(sys64, b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_constant_image_lives_in_lowpass(self, sys64):
        c = shearlet_analysis(sys64, np.ones((64, 64)))
        energy = np.sum(c**2, axis=(1, 2))
        assert energy[0] / energy.sum() >= 1.0 - 1e-10


class TestSoftThreshold:
    def test_known_values(self):
        x = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
        np.testing.assert_allclose(
            soft_threshold(x, 1.0), [-2.0, 0.0, 0.0, 0.0, 2.0]
        )

    def test_zero_threshold_is_identity(self):
        rng = np.random.default_rng(25)
        x = rng.normal(size=(5, 8, 8))
        np.testing.assert_array_equal(soft_threshold(x, 0.0), x)

    def test_shrinks_toward_zero(self):
        rng = np.random.default_rng(26)
        x = rng.normal(size=100)
        y = soft_threshold(x, 0.3)
        assert np.all(np.abs(y) <= np.abs(x))
        assert np.all(y * x >= 0.0)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(np.zeros(3), -0.1)

    def test_threshold_then_synthesis_reduces_energy(self, sys64):
        rng = np.random.default_rng(27)
        p = rng.normal(size=(64, 64))
        c = shearlet_analysis(sys64, p)
        rec = shearlet_synthesis(sys64, soft_threshold(c, 0.5))
        assert np.sum(rec**2) < np.sum(p**2)
