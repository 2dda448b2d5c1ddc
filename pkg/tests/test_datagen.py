import numpy as np
import pytest

from lrpr.core import make_rng
from lrpr.datagen import InvalidRank, MeasurementSet, SignalMatrix, gen_lowrank, gen_measurements


def test_lowrank_100_by_100_has_rank_five():
    x = gen_lowrank(make_rng(1), 100, 100, 5)
    assert x.x.shape == (100, 100) and x.rank_hint == 5
    s = np.linalg.svd(x.x, compute_uv=False)
    assert np.all(s[5:] <= 1e-10 * s[0])


def test_lowrank_full_rank_case():
    x = gen_lowrank(make_rng(2), 5, 7, 5)
    s = np.linalg.svd(x.x, compute_uv=False)
    assert s[-1] > 1e-6 * s[0]


def test_lowrank_matches_svd_truncation():
    x = gen_lowrank(make_rng(3), 6, 6, 2).x
    u, s, vh = np.linalg.svd(x)
    truncated = (u[:, :2] * s[:2]) @ vh[:2]
    assert np.linalg.norm(x - truncated) <= 1e-10


@pytest.mark.parametrize("r", [0, 7])
def test_lowrank_invalid_rank(r):
    with pytest.raises(InvalidRank):
        gen_lowrank(make_rng(0), 6, 6, r)


def test_zero_signal_gives_zero_magnitudes():
    ms = gen_measurements(make_rng(4), SignalMatrix(np.zeros((3, 2))), 5)
    assert ms.y.shape == (5, 2)
    assert np.all(ms.y == 0)


def test_noiseless_magnitudes_are_recomputable():
    rng = make_rng(5)
    x = gen_lowrank(rng, 8, 4, 2)
    ms = gen_measurements(rng, x, 12)
    assert ms.a.shape == (4, 12, 8)
    assert ms.beta_true is None
    for k in range(4):
        direct = np.abs(ms.a[k] @ x.x[:, k])
        np.testing.assert_allclose(ms.y[:, k], direct, rtol=1e-14)
    np.testing.assert_array_equal(ms.y, np.abs(ms.project(x.x)))


def test_noise_power_matches_precision():
    ms = gen_measurements(make_rng(6), SignalMatrix(np.zeros((1, 1))), 100_000, beta_true=100.0)
    assert 0.0095 <= np.mean(ms.y ** 2) <= 0.0105


@pytest.mark.parametrize("c", [2.0, -0.5, 4j])
def test_noiseless_scale_covariance(c):
    x = gen_lowrank(make_rng(7), 5, 3, 2)
    y1 = gen_measurements(make_rng(8), x, 9).y
    y2 = gen_measurements(make_rng(8), SignalMatrix(c * x.x), 9).y
    np.testing.assert_array_equal(y2, abs(c) * y1)


def test_generic_scale_is_close():
    x = gen_lowrank(make_rng(7), 5, 3, 2)
    c = 0.3 - 1.7j
    y1 = gen_measurements(make_rng(8), x, 9).y
    y2 = gen_measurements(make_rng(8), SignalMatrix(c * x.x), 9).y
    np.testing.assert_allclose(y2, abs(c) * y1, rtol=1e-13)


def test_same_seed_same_measurements():
    x = gen_lowrank(make_rng(9), 4, 4, 1)
    a = gen_measurements(make_rng(10), x, 6, beta_true=10.0)
    b = gen_measurements(make_rng(10), x, 6, beta_true=10.0)
    np.testing.assert_array_equal(a.a, b.a)
    np.testing.assert_array_equal(a.y, b.y)


def test_measurement_set_validation():
    with pytest.raises(ValueError):
        MeasurementSet(np.zeros((2, 3, 4)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        MeasurementSet(np.zeros((2, 3, 4)), -np.ones((3, 2)))
