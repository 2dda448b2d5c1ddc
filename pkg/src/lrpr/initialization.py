"""Starting points for the solvers: joint spectral or random."""

import warnings

import numpy as np

from .core import hermitian_part, sample_cnormal, top_eigpairs
from .datagen import InvalidRank, SignalMatrix


class DegenerateDataWarning(UserWarning):
    """All magnitudes are zero, so the spectral estimate is the zero matrix."""


def weighted_covariances(ms):
    """Per-column ``(1/p) sum_p y^2 a a^H``, shape ``(m, n, n)``."""
    w = ms.y.T[:, None, :] ** 2  # (m, 1, p)
    c = ((ms.adjoint() * w) @ ms.a) / ms.p
    return hermitian_part(c)


def spectral_init(ms, r):
    """Spectral estimate of rank at most ``r``.

    The shared column space comes from the top-``r`` eigenvectors of the
    intensity-weighted covariance pooled over all columns. Each column's
    coefficient vector is the leading eigenvector of its own covariance
    compressed onto that subspace, scaled to the empirical norm
    ``sqrt(mean(y^2))`` (``E|a^H x|^2 = |x|^2`` for CN(0, I) sensing).
    """
    if not 1 <= r <= ms.n:
        raise InvalidRank(f"rank {r} outside [1, {ms.n}]")
    if not np.any(ms.y):
        warnings.warn("all magnitudes are zero", DegenerateDataWarning, stacklevel=2)
        return SignalMatrix(np.zeros((ms.n, ms.m), dtype=complex), rank_hint=r)

    cols = weighted_covariances(ms)
    _, u = top_eigpairs(cols.mean(axis=0), r)
    x0 = np.empty((ms.n, ms.m), dtype=complex)
    scale = np.sqrt(np.maximum(0.0, np.mean(ms.y ** 2, axis=0)))
    for k in range(ms.m):
        t = hermitian_part(u.conj().T @ cols[k] @ u)
        _, g = top_eigpairs(t, 1)
        x0[:, k] = scale[k] * (u @ g[:, 0])
    return SignalMatrix(x0, rank_hint=r)


def random_init(rng, n, m):
    return SignalMatrix(sample_cnormal(rng, n, m))
