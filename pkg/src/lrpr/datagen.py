"""Synthetic low-rank signals and phaseless measurement sets."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import LrprError, hermitian_part, sample_cnormal


class InvalidRank(LrprError, ValueError):
    pass


@dataclass
class SignalMatrix:
    """A complex ``n x m`` matrix, optionally tagged with its known rank."""

    x: np.ndarray
    rank_hint: Optional[int] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        if self.x.ndim != 2:
            raise ValueError(f"signal must be 2-D, got shape {self.x.shape}")

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.x.shape[1]


@dataclass
class MeasurementSet:
    """Sensing matrices and magnitudes for all columns.

    ``a`` has shape ``(m, p, n)``: ``a[k]`` is the ``p x n`` matrix whose rows
    are the conjugated sensing vectors of column ``k``. ``y`` is the real
    ``p x m`` matrix of magnitudes.
    """

    a: np.ndarray
    y: np.ndarray
    beta_true: Optional[float] = None
    _gram: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)
    _adjoint: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.y = np.asarray(self.y, dtype=float)
        if self.a.ndim != 3:
            raise ValueError(f"a must have shape (m, p, n), got {self.a.shape}")
        m, p, _ = self.a.shape
        if self.y.shape != (p, m):
            raise ValueError(f"y must have shape {(p, m)}, got {self.y.shape}")
        if not np.all(np.isfinite(self.y)) or np.any(self.y < 0):
            raise ValueError("magnitudes must be finite and nonnegative")

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def p(self):
        return self.a.shape[1]

    @property
    def n(self):
        return self.a.shape[2]

    def adjoint(self):
        """Stack of ``A_k^H``, shape ``(m, n, p)``; computed once."""
        if self._adjoint is None:
            self._adjoint = np.ascontiguousarray(np.conj(np.swapaxes(self.a, 1, 2)))
        return self._adjoint

    def gram(self):
        """Stack of ``A_k^H A_k``, shape ``(m, n, n)``; computed once."""
        if self._gram is None:
            self._gram = hermitian_part(self.adjoint() @ self.a)
        return self._gram

    def project(self, x):
        """Noiseless linear measurements ``A_k x_k`` for every column, shape ``(p, m)``."""
        return (self.a @ np.asarray(x).T[:, :, None])[:, :, 0].T

    def back_project(self, z):
        """``A_k^H z_k`` for every column of the ``(p, m)`` array ``z``, shape ``(n, m)``."""
        return (self.adjoint() @ np.asarray(z).T[:, :, None])[:, :, 0].T


def gen_lowrank(rng, n, m, r):
    """Rank-``r`` matrix ``E @ F`` with CN(0, 1) factors."""
    if not 1 <= r <= min(n, m):
        raise InvalidRank(f"rank {r} outside [1, {min(n, m)}]")
    e = sample_cnormal(rng, n, r)
    f = sample_cnormal(rng, r, m)
    return SignalMatrix(e @ f, rank_hint=r)


def gen_measurements(rng, x, p, beta_true=None):
    """Draw per-column CN(0, 1) sensing matrices and record ``|A x + w|``.

    The noise ``w ~ CN(0, 1/beta_true)`` enters inside the modulus. Without
    ``beta_true`` the measurements are noiseless.
    """
    if p < 1:
        raise ValueError("p must be positive")
    xm = x.x if isinstance(x, SignalMatrix) else np.asarray(x, dtype=complex)
    n, m = xm.shape
    a = sample_cnormal(rng, m, p, n)
    z = (a @ xm.T[:, :, None])[:, :, 0].T
    if beta_true is not None:
        if beta_true <= 0:
            raise ValueError("beta_true must be positive")
        z = z + sample_cnormal(rng, p, m) / np.sqrt(beta_true)
    return MeasurementSet(a, np.abs(z), beta_true)
