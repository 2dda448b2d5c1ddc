import numpy as np

from lrpr.core import make_rng, sample_cnormal
from lrpr.datagen import MeasurementSet, gen_lowrank, gen_measurements
from lrpr.vem import PosteriorState


def random_hpd(rng, n, floor=0.5):
    b = sample_cnormal(rng, n, n)
    return b @ b.conj().T + floor * np.eye(n)


def instance(seed, n, m, r, p, beta_true=None):
    rng = make_rng(seed)
    x = gen_lowrank(rng, n, m, r)
    return gen_measurements(rng, x, p, beta_true), x


def random_measurements(rng, n, m, p):
    a = sample_cnormal(rng, m, p, n)
    y = np.abs(sample_cnormal(rng, p, m))
    return MeasurementSet(a, y)


def random_state(rng, n, m, p, nu_hat=None):
    return PosteriorState(
        mu=sample_cnormal(rng, n, m),
        q=np.stack([random_hpd(rng, n, 0.1) * 0.2 for _ in range(m)]),
        w_hat=random_hpd(rng, n) * 0.3,
        nu_hat=float(m + n) if nu_hat is None else nu_hat,
        a_hat=float(p * m) + 0.5,
        b_hat=float(rng.uniform(0.5, 5.0)) * p * m,
        theta=rng.uniform(0, 2 * np.pi, size=(p, m)),
    )


def ridge_oracle(a, yt, beta, sigma):
    """argmin_x beta |yt - a x|^2 + x^H sigma x via a stacked least-squares solve."""
    n = a.shape[1]
    chol = np.linalg.cholesky(sigma)
    lhs = np.vstack([np.sqrt(beta) * a, chol.conj().T])
    rhs = np.concatenate([np.sqrt(beta) * yt, np.zeros(n)])
    return np.linalg.lstsq(lhs, rhs, rcond=None)[0]


def expected_phase_residual(theta, y, z, spread, beta):
    """beta * <|y e^{j theta} - a^H x|^2> with z = a^H mu and spread = a^H Q a."""
    return beta * (y ** 2 - 2 * y * np.real(np.exp(1j * theta) * np.conj(z)) + np.abs(z) ** 2 + spread)


def circular_distance(a, b):
    d = np.mod(a - b, 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)
