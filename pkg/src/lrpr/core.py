"""Dense complex linear algebra and seeded sampling shared by the solvers.

Matrices are plain numpy arrays. Functions that take a Hermitian matrix also
accept a stack of them with shape ``(..., n, n)``.
"""

import numpy as np
import scipy.linalg
import scipy.linalg.lapack


class LrprError(Exception):
    """Base class for errors raised by this package."""


class NotPositiveDefinite(LrprError):
    pass


class ConvergenceFailure(LrprError):
    pass


# relative size of the first diagonal jitter, growth factor, number of escalations
JITTER_START = 1e-12
JITTER_GROWTH = 100.0
JITTER_STEPS = 3

HERMITIAN_RTOL = 1e-12


def make_rng(seed, *keys):
    """Return a counter-based generator for the stream ``(seed, *keys)``.

    Streams with different keys are statistically independent, so per-trial
    generators can be derived from a master seed without coordination.
    """
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return np.random.Generator(np.random.Philox(ss))


def sample_cnormal(rng, *shape):
    """Draw i.i.d. CN(0, 1) entries: real and imaginary parts each N(0, 1/2)."""
    if not shape or any(int(s) < 1 for s in shape):
        raise ValueError(f"shape must be nonempty with positive sizes, got {shape}")
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def hermitian_part(h):
    return 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))


def check_hermitian(h, rtol=HERMITIAN_RTOL):
    h = np.asarray(h)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {h.shape}")
    scale = np.max(np.abs(h)) if h.size else 0.0
    skew = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))) if h.size else 0.0
    if skew > rtol * scale:
        raise ValueError(f"matrix is not Hermitian (skew {skew:.3e}, scale {scale:.3e})")


def _factor(h):
    """Lower Cholesky factor of one matrix as LAPACK leaves it (upper part junk).

    On failure the diagonal is loaded with ``1e-12 * trace/n``, escalated by
    a factor 100 up to three times, before giving up.
    """
    potrf = scipy.linalg.lapack.get_lapack_funcs("potrf", (h,))
    c, info = potrf(h, lower=1, clean=0)
    if info == 0:
        return c
    if info < 0:
        raise ValueError(f"potrf: illegal argument {-info}")
    n = h.shape[-1]
    base = abs(np.real(np.trace(h))) / n
    eps = JITTER_START
    for _ in range(JITTER_STEPS + 1):
        c, info = potrf(h + eps * base * np.eye(n), lower=1, clean=0)
        if info == 0:
            return c
        eps *= JITTER_GROWTH
    raise NotPositiveDefinite(
        f"Cholesky failed after jitter escalation to {eps / JITTER_GROWTH:.1e} * trace/n"
    )


def _per_matrix(h, fn):
    h = np.asarray(h)
    if h.ndim == 2:
        return fn(h)
    flat = h.reshape(-1, *h.shape[-2:])
    return np.stack([fn(b) for b in flat]).reshape(h.shape)


def hpd_cholesky(h):
    """Lower Cholesky factor of a Hermitian positive definite matrix (or stack)."""
    check_hermitian(h)
    return np.tril(_per_matrix(h, _factor))


def _inverse_lower(h):
    # lower triangle of the inverse; the upper part is left unspecified
    c = _factor(h)
    potri = scipy.linalg.lapack.get_lapack_funcs("potri", (c,))
    inv, info = potri(c, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"potri failed (info={info})")
    return inv


def hpd_inverse(h):
    """Inverse of a Hermitian positive definite matrix (or stack), exactly Hermitian."""
    check_hermitian(h)
    inv = _per_matrix(h, _inverse_lower)
    n = inv.shape[-1]
    low = np.tril(np.ones((n, n), dtype=bool))
    strict = np.tril(np.ones((n, n), dtype=bool), -1)
    return np.where(low, inv, 0) + np.conj(np.swapaxes(np.where(strict, inv, 0), -1, -2))


def hpd_solve(h, rhs):
    chol = hpd_cholesky(h)
    return scipy.linalg.cho_solve((chol, True), rhs)


def hpd_logdet(h):
    chol = hpd_cholesky(h)
    return 2.0 * np.sum(np.log(np.real(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)


def top_eigpairs(h, k):
    """Largest ``k`` eigenpairs of a Hermitian matrix.

    Returns eigenvalues in descending order and the matching unit-norm
    eigenvectors as the columns of an ``(n, k)`` array.
    """
    h = np.asarray(h)
    check_hermitian(h)
    n = h.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    h = hermitian_part(h)
    try:
        w, v = _partial_eigh(h, k)
    except ConvergenceFailure:
        w, v = np.linalg.eigh(h)
        w, v = w[n - k:], v[:, n - k:]
    return w[::-1].copy(), v[:, ::-1].copy()


def _partial_eigh(h, k):
    n = h.shape[0]
    try:
        return scipy.linalg.eigh(h, subset_by_index=[n - k, n - 1], driver="evr")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
