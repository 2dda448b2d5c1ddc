"""Alternating-minimization baseline for low-rank phase retrieval.

The estimate is kept in factored form ``X = U B`` with orthonormal ``U``
(``n x r``). Each iteration minimizes the phase-augmented least-squares
objective ``sum_k ||e^{j theta_k} * y_k - A_k U b_k||^2`` exactly over the
phases, then over ``B`` column by column, then over ``U``.
"""

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse.linalg

from .core import LrprError, hpd_solve
from .datagen import SignalMatrix
from .vem import TWO_PI, column_change, phased

# Above this many unknowns in U the normal equations are solved by CG.
DENSE_U_LIMIT = 128 * 8


class RankDeficientWarning(UserWarning):
    pass


class FactorPair(NamedTuple):
    u: np.ndarray
    bmat: np.ndarray

    @property
    def x(self):
        return self.u @ self.bmat


@dataclass
class AmOptions:
    max_iter: int = 300
    tol: float = 1e-6

    def __post_init__(self):
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("max_iter must be >= 1 and tol > 0")


@dataclass
class AmTrace:
    change: list = field(default_factory=list)
    # objective before the iteration, then after the phase, B and U steps
    objective: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    rank_deficient: bool = False


def objective(ms, theta, x):
    return float(np.sum(np.abs(phased(ms, theta) - ms.project(x)) ** 2))


def am_phase_update(ms, factors):
    z = ms.project(factors.x)
    theta = np.mod(np.angle(z), TWO_PI)
    theta[theta >= TWO_PI] = 0.0
    theta[z == 0] = 0.0
    return theta


def am_b_update(ms, theta, u):
    """Least-squares coefficients per column; warns and returns min-norm when rank drops."""
    yt = phased(ms, theta)
    r = u.shape[1]
    bmat = np.empty((r, ms.m), dtype=complex)
    for k in range(ms.m):
        sol, _, rank, _ = np.linalg.lstsq(ms.a[k] @ u, yt[:, k], rcond=None)
        if rank < r:
            warnings.warn(f"A_k U has rank {rank} < {r} in column {k}", RankDeficientWarning, stacklevel=2)
        bmat[:, k] = sol
    return bmat


def _normal_equations(ms, yt, bmat):
    n, r = ms.n, bmat.shape[0]
    g = ms.gram()
    # vec(U) is column-major: index n_idx + n * r_idx
    bb = (bmat.conj()[:, None, :] * bmat[None, :, :]).reshape(r * r, ms.m)
    lhs = (bb @ g.reshape(ms.m, n * n)).reshape(r, r, n, n)
    lhs = lhs.transpose(0, 2, 1, 3).reshape(n * r, n * r)
    rhs_mat = ms.back_project(yt) @ bmat.conj().T  # (n, r)
    return lhs, rhs_mat.T.reshape(n * r)


def am_u_update(ms, theta, bmat):
    """Least-squares ``U`` for fixed phases and ``B``, before re-orthonormalization."""
    n, r = ms.n, bmat.shape[0]
    yt = phased(ms, theta)
    if n * r <= DENSE_U_LIMIT:
        lhs, rhs = _normal_equations(ms, yt, bmat)
        vec = hpd_solve(lhs, rhs)
    else:
        vec = _u_update_cg(ms, yt, bmat)
    return vec.reshape(r, n).T


def _u_update_cg(ms, yt, bmat):
    n, r = ms.n, bmat.shape[0]
    g = ms.gram()
    bb = np.einsum("im,jm->mij", bmat, bmat.conj())  # b b^H per column

    def matvec(v):
        u = v.reshape(r, n).T
        out = np.einsum("mnk,kr,mrs->ns", g, u, bb)
        return out.T.reshape(-1)

    rhs = (ms.back_project(yt) @ bmat.conj().T).T.reshape(-1)
    op = scipy.sparse.linalg.LinearOperator((n * r, n * r), matvec=matvec, dtype=complex)
    vec, info = scipy.sparse.linalg.cg(op, rhs, rtol=1e-10, maxiter=10 * n * r)
    if info != 0:
        raise LrprError(f"CG for the U update did not reach tolerance (info={info})")
    return vec


def orthonormalize(u, bmat):
    """QR of ``U`` with the triangular factor absorbed into ``B``; ``U B`` is unchanged."""
    qmat, rmat = np.linalg.qr(u)
    return FactorPair(qmat, rmat @ bmat)


def factors_from(x0, r):
    """Top-``r`` left singular vectors of ``x0`` and the matching coefficients."""
    xm = x0.x if isinstance(x0, SignalMatrix) else np.asarray(x0, dtype=complex)
    u = np.linalg.svd(xm, full_matrices=False)[0][:, :r]
    return FactorPair(u, u.conj().T @ xm)


def run_am(ms, r, x0, opts=None):
    """Alternate phase, ``B`` and ``U`` least-squares steps until ``U B`` settles."""
    opts = opts or AmOptions()
    if not 1 <= r <= ms.n:
        raise ValueError(f"rank {r} outside [1, {ms.n}]")
    fac = factors_from(x0, r)
    theta = am_phase_update(ms, fac)
    trace = AmTrace()
    for _ in range(opts.max_iter):
        prev = fac.x
        obj = [objective(ms, theta, prev)]
        theta = am_phase_update(ms, fac)
        obj.append(objective(ms, theta, prev))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RankDeficientWarning)
            bmat = am_b_update(ms, theta, fac.u)
        if caught:
            trace.rank_deficient = True
        obj.append(objective(ms, theta, fac.u @ bmat))
        fac = orthonormalize(am_u_update(ms, theta, bmat), bmat)
        obj.append(objective(ms, theta, fac.x))
        trace.objective.append(obj)
        change = column_change(fac.x, prev)
        trace.change.append(change)
        trace.iterations += 1
        if change < opts.tol:
            trace.converged = True
            break
    return SignalMatrix(fac.x, rank_hint=r), trace
