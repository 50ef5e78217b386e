import numpy as np
import pytest

from patomo.phantom import (
    DEFAULT_DOSE,
    NoiseModel,
    acquisition_preset,
    add_poisson_noise,
    make_ring_phantom,
    peak_snr_db,
)

from conftest import make_op


@pytest.fixture(scope="module")
def phantom():
    return make_ring_phantom(256)


class TestRingPhantom:
    def test_binary(self, phantom):
        assert set(np.unique(phantom.image)) == {0.0, 1.0}

    def test_labels_cover_rings(self, phantom):
        assert not np.any((phantom.image == 1) & (phantom.labels == 0))
        assert sorted(np.unique(phantom.labels)) == list(range(7))

    def test_group_six_finest(self, phantom):
        thick = [g.thickness for g in phantom.groups]
        assert thick[5] < thick[0]
        assert thick[5] == 2.0 and thick[0] == 8.0
        assert thick == sorted(thick, reverse=True)

    def test_groups_disjoint_and_visible(self, phantom):
        gs = phantom.groups
        for a in range(6):
            ca = np.array(gs[a].center)
            # every ring lies in the disk that all detector bins see
            assert np.linalg.norm(ca) + gs[a].outer_radius < 128
            for b in range(a + 1, 6):
                d = np.linalg.norm(ca - np.array(gs[b].center))
                assert d > gs[a].outer_radius + gs[b].outer_radius

    def test_label_disk_is_bounding_disk(self, phantom):
        c = np.arange(256) - 127.5
        for g in phantom.groups:
            r = np.hypot(c[None, :] - g.center[0], -c[:, None] - g.center[1])
            np.testing.assert_array_equal(phantom.labels == g.group_id, r < g.outer_radius)

    def test_deterministic(self, phantom):
        again = make_ring_phantom(256)
        assert np.array_equal(again.image, phantom.image)
        assert np.array_equal(again.labels, phantom.labels)

    def test_small_grid(self):
        p = make_ring_phantom(128)
        assert p.image.shape == (128, 128)
        assert sorted(np.unique(p.labels)) == list(range(7))
        for g in p.groups:
            assert p.image[p.labels == g.group_id].sum() > 0

    @pytest.mark.parametrize("n", [64, 127, 100.5])
    def test_too_small(self, n):
        with pytest.raises(ValueError):
            make_ring_phantom(n)


class TestPresets:
    @pytest.mark.parametrize("name, count, first, last", [
        ("missing_wedge", 53, -65.0, 65.0),
        ("limited_data", 18, -90.0, 80.0),
        ("bn_preset", 73, -72.0, 72.0),
    ])
    def test_counts(self, name, count, first, last):
        g = acquisition_preset(name)
        assert g.n_angles == count
        assert g.angles[0] == first
        assert g.angles[-1] == pytest.approx(last)

    def test_steps(self):
        assert np.allclose(np.diff(acquisition_preset("missing_wedge").angles), 2.5)
        assert np.allclose(np.diff(acquisition_preset("limited_data").angles), 10.0)
        assert np.allclose(np.diff(acquisition_preset("bn_preset").angles), 2.0)

    def test_unknown(self):
        with pytest.raises(ValueError):
            acquisition_preset("helical")


class TestNoise:
    def test_zero(self):
        assert not np.any(add_poisson_noise(np.zeros((4, 3)), NoiseModel(5.0, 1)))

    def test_high_dose_limit(self, rng):
        b = rng.uniform(1, 50, size=(64, 10))
        out = add_poisson_noise(b, NoiseModel(1e6, 3))
        np.testing.assert_allclose(out, b, rtol=1e-2)

    def test_mean(self):
        b = np.full(100_000, 10.0)
        out = add_poisson_noise(b, NoiseModel(1.0, 11))
        assert abs(out.mean() - 10.0) < 0.1

    def test_reproducible(self, rng):
        b = rng.uniform(0, 5, size=(32, 8))
        m = NoiseModel(2.0, 42)
        a, c = add_poisson_noise(b, m), add_poisson_noise(b, m)
        assert np.array_equal(a, c)
        assert a.shape == b.shape and np.all(a >= 0)
        assert not np.array_equal(a, add_poisson_noise(b, NoiseModel(2.0, 43)))

    def test_infinite_dose(self, rng):
        b = rng.random((5, 5))
        assert np.array_equal(add_poisson_noise(b, NoiseModel(np.inf)), b)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            add_poisson_noise(np.array([1.0, -0.1]), NoiseModel())

    def test_bad_dose(self):
        with pytest.raises(ValueError):
            NoiseModel(0.0)

    @pytest.mark.parametrize("preset", ["missing_wedge", "limited_data"])
    def test_default_dose_snr(self, phantom, preset):
        op = make_op(256, acquisition_preset(preset).angles)
        clean = op.apply(phantom.image)
        snr = peak_snr_db(clean, add_poisson_noise(clean, NoiseModel(DEFAULT_DOSE, 0)))
        assert 28.0 < snr < 32.0
