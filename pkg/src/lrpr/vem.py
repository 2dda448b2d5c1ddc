"""Variational EM for low-rank phase retrieval.

The model: each column ``x_k ~ CN(0, inv(Sigma))``, the precision ``Sigma``
has a complex Wishart prior with ``nu`` degrees of freedom and scale ``W``,
and the noise precision ``beta`` has a Gamma(a, b) prior. The measurement
phases ``theta`` are deterministic parameters. The E-step updates the
factors ``q(X) q(Sigma) q(beta)`` in that order; the M-step re-estimates
``theta`` from the posterior means.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import digamma, gammaln

from .core import LrprError, hermitian_part, hpd_inverse, hpd_logdet
from .datagen import SignalMatrix

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class NumericalOverflow(LrprError, ArithmeticError):
    """The ELBO could not be evaluated to a finite number."""


@dataclass
class Hyperparameters:
    """Gamma prior ``(a, b)`` on the noise precision; Wishart ``(nu, W)`` on ``Sigma``.

    ``w_scale`` is either a Hermitian positive definite matrix or a scalar
    ``c`` standing for ``c * I``. The defaults are noninformative.
    """

    a: float = 1e-10
    b: float = 1e-10
    nu: float = 1e-10
    w_scale: object = 1e10

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.nu > 0):
            raise ValueError("a, b and nu must be positive")
        if np.ndim(self.w_scale) == 0:
            if not float(self.w_scale) > 0:
                raise ValueError("scalar w_scale must be positive")
        else:
            hpd_logdet(np.asarray(self.w_scale, dtype=complex))

    def w_inverse(self, n):
        if np.ndim(self.w_scale) == 0:
            return np.eye(n) / float(self.w_scale)
        return hpd_inverse(np.asarray(self.w_scale, dtype=complex))

    def w_logdet(self, n):
        if np.ndim(self.w_scale) == 0:
            return n * np.log(float(self.w_scale))
        return hpd_logdet(np.asarray(self.w_scale, dtype=complex))


class ColumnPosterior(NamedTuple):
    mu: np.ndarray
    q: np.ndarray


class WishartPosterior(NamedTuple):
    w_hat: np.ndarray
    nu_hat: float


class GammaPosterior(NamedTuple):
    a_hat: float
    b_hat: float


class Moments(NamedTuple):
    beta_mean: float
    sigma_mean: np.ndarray
    xx_mean: np.ndarray


@dataclass
class PosteriorState:
    """All variational factors plus the phase estimate.

    ``mu`` is ``(n, m)`` with the posterior means as columns and ``q`` is the
    ``(m, n, n)`` stack of column covariances. ``theta`` is ``(p, m)``.
    """

    mu: np.ndarray
    q: np.ndarray
    w_hat: np.ndarray
    nu_hat: float
    a_hat: float
    b_hat: float
    theta: np.ndarray
    iteration: int = 0

    def column(self, k):
        return ColumnPosterior(self.mu[:, k], self.q[k])

    @property
    def sigma(self):
        return WishartPosterior(self.w_hat, self.nu_hat)

    @property
    def beta(self):
        return GammaPosterior(self.a_hat, self.b_hat)


@dataclass
class VemOptions:
    max_iter: int = 300
    tol: float = 1e-6
    compute_elbo: bool = False

    def __post_init__(self):
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("max_iter must be >= 1 and tol > 0")


@dataclass
class VemTrace:
    change: list = field(default_factory=list)
    elbo: list = field(default_factory=list)
    beta_mean: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def phased(ms, theta):
    """``D^{-1} y``: the magnitudes with the phases restored, shape ``(p, m)``."""
    return ms.y * np.cos(theta) + 1j * (ms.y * np.sin(theta))


def moments(state):
    beta_mean = state.a_hat / state.b_hat
    sigma_mean = state.nu_hat * state.w_hat
    xx = state.mu @ state.mu.conj().T + state.q.sum(axis=0)
    return Moments(beta_mean, sigma_mean, hermitian_part(xx))


def expected_residuals(ms, state):
    """Per-column ``<||D^{-1} y - A x||^2>`` under the current ``q(X)``."""
    r = phased(ms, state.theta) - ms.project(state.mu)
    fit = np.sum(np.abs(r) ** 2, axis=0)
    # tr(Q G) with both Hermitian
    spread = np.real(np.sum(state.q * ms.gram().conj(), axis=(1, 2)))
    return fit + spread


def update_qx(ms, state):
    """Gaussian column posteriors given the current ``<beta>``, ``<Sigma>`` and ``theta``."""
    beta = state.a_hat / state.b_hat
    sigma = state.nu_hat * state.w_hat
    q = hpd_inverse(beta * ms.gram() + sigma[None, :, :])
    rhs = ms.back_project(phased(ms, state.theta))
    mu = beta * (q @ rhs.T[:, :, None])[:, :, 0].T
    return mu, q


def update_qsigma(hyper, state):
    n, m = state.mu.shape
    xx = moments(state).xx_mean
    w_hat = hpd_inverse(hermitian_part(hyper.w_inverse(n)) + xx)
    return WishartPosterior(w_hat, hyper.nu + m)


def update_qbeta(hyper, ms, state):
    a_hat = ms.p * ms.m + hyper.a
    b_hat = float(np.sum(expected_residuals(ms, state))) + hyper.b
    return GammaPosterior(a_hat, b_hat)


def update_theta(ms, state):
    """Phase M-step: ``theta = arg(a^H mu)``, folded into ``[0, 2 pi)``.

    Of the two stationary points of the expected residual this is the
    minimizer; the other (shifted by pi) is the maximizer. Entries with a
    zero magnitude or a zero prediction get ``theta = 0``.
    """
    z = ms.project(state.mu)
    theta = np.mod(np.angle(z), TWO_PI)
    theta[theta >= TWO_PI] = 0.0
    theta[(ms.y == 0) | (z == 0)] = 0.0
    return theta


def log_mvgamma_complex(nu, n):
    """``log|Gamma~_n(nu)|`` of the complex multivariate Gamma function."""
    return 0.5 * n * (n - 1) * np.log(np.pi) + np.sum(gammaln(nu - np.arange(n)))


def wishart_expected_logdet(nu, w_logdet, n):
    """``<ln|Sigma|>`` under the complex Wishart with ``nu`` dof and ``ln|W| = w_logdet``."""
    return np.sum(digamma(nu - np.arange(n))) + w_logdet


def wishart_entropy(nu, w_logdet, n):
    e_logdet = wishart_expected_logdet(nu, w_logdet, n)
    return -(nu - n) * e_logdet + nu * n + log_mvgamma_complex(nu, n) + nu * w_logdet


def wishart_expected_logpdf(nu, w_inv, w_logdet, e_sigma, e_logdet_sigma):
    """``<ln CW(Sigma; nu, W)>`` given the first moments of ``Sigma`` under ``q``."""
    n = e_sigma.shape[0]
    return (
        (nu - n) * e_logdet_sigma
        - np.real(np.trace(w_inv @ e_sigma))
        - log_mvgamma_complex(nu, n)
        - nu * w_logdet
    )


def gamma_entropy(a, b):
    return a - np.log(b) + gammaln(a) + (1.0 - a) * digamma(a)


def gamma_expected_logpdf(a, b, e_beta, e_logbeta):
    return a * np.log(b) - gammaln(a) + (a - 1.0) * e_logbeta - b * e_beta


def gaussian_entropy(q):
    """Total entropy of complex Gaussians with covariances ``q`` (one or a stack)."""
    n = q.shape[-1]
    _, logdet = np.linalg.slogdet(q)
    return float(np.sum(n * np.log(np.pi * np.e) + logdet))


def expected_loglik(ms, state, e_beta, e_logbeta):
    """``<ln p(Y | X, beta; theta)>`` for the complex Gaussian noise model."""
    return (
        ms.p * ms.m * (e_logbeta - np.log(np.pi))
        - e_beta * float(np.sum(expected_residuals(ms, state)))
    )


def expected_x_logprior(state, e_sigma, e_logdet_sigma):
    n, m = state.mu.shape
    xx = moments(state).xx_mean
    return m * e_logdet_sigma - m * n * np.log(np.pi) - np.real(np.trace(e_sigma @ xx))


def elbo_terms(hyper, ms, state):
    """The ELBO split into expected log-densities and entropies (a dict)."""
    n = ms.n
    a_hat, b_hat, nu_hat = state.a_hat, state.b_hat, state.nu_hat
    if nu_hat <= n - 1:
        raise NumericalOverflow(f"posterior Wishart improper: nu_hat={nu_hat} <= n-1={n - 1}")
    e_beta = a_hat / b_hat
    e_logbeta = digamma(a_hat) - np.log(b_hat)
    w_hat_logdet = hpd_logdet(state.w_hat)
    e_sigma = nu_hat * state.w_hat
    e_logdet_sigma = wishart_expected_logdet(nu_hat, w_hat_logdet, n)
    return {
        "loglik": expected_loglik(ms, state, e_beta, e_logbeta),
        "x_prior": expected_x_logprior(state, e_sigma, e_logdet_sigma),
        "sigma_prior": wishart_expected_logpdf(
            hyper.nu, hyper.w_inverse(n), hyper.w_logdet(n), e_sigma, e_logdet_sigma
        ),
        "beta_prior": gamma_expected_logpdf(hyper.a, hyper.b, e_beta, e_logbeta),
        "x_entropy": gaussian_entropy(state.q),
        "sigma_entropy": wishart_entropy(nu_hat, w_hat_logdet, n),
        "beta_entropy": gamma_entropy(a_hat, b_hat),
    }


def elbo(hyper, ms, state):
    """Evidence lower bound ``<ln p(Y, X, Sigma, beta; theta)> + H[q]``.

    The prior normalizer of an improper Wishart (``nu <= n - 1``) is kept in
    its formal form; it is a constant. The posterior Wishart must be proper.
    """
    value = float(sum(elbo_terms(hyper, ms, state).values()))
    if not np.isfinite(value):
        raise NumericalOverflow("ELBO is not finite")
    return value


def warm_start(ms, hyper, x0):
    """State seeded from the point estimate ``x0``.

    ``theta`` follows ``x0``. ``<beta>`` is the Gamma update with ``X`` fixed
    at ``x0``. ``<Sigma>`` is the Wishart update with ``x0 x0^H`` replaced by
    its isotropic average ``(|x0|_F^2 / n) I``: a rank-deficient ``x0``
    would otherwise put near-infinite precision on every direction outside
    its column space and pin the iterates there.
    """
    xm = x0.x if isinstance(x0, SignalMatrix) else np.asarray(x0, dtype=complex)
    n, m = xm.shape
    if (n, m) != (ms.n, ms.m):
        raise ValueError(f"x0 has shape {(n, m)}, measurements expect {(ms.n, ms.m)}")
    theta = update_theta(ms, _point_state(xm, ms.p))
    energy = float(np.sum(np.abs(xm) ** 2)) / n
    w_hat = hpd_inverse(hermitian_part(hyper.w_inverse(n)) + energy * np.eye(n))
    resid = np.sum(np.abs(phased(ms, theta) - ms.project(xm)) ** 2)
    return PosteriorState(
        mu=xm.copy(),
        q=np.zeros((m, n, n), dtype=complex),
        w_hat=w_hat,
        nu_hat=hyper.nu + m,
        a_hat=ms.p * m + hyper.a,
        b_hat=float(resid) + hyper.b,
        theta=theta,
    )


def _point_state(x, p):
    n, m = x.shape
    return PosteriorState(x, np.zeros((m, n, n)), np.eye(n), 1.0, 1.0, 1.0, np.zeros((p, m)))


def column_change(new, old):
    """Largest relative change of any column, the stopping statistic."""
    num = np.linalg.norm(new - old, axis=0)
    den = np.maximum(np.linalg.norm(old, axis=0), 1e-12)
    return float(np.max(num / den))


def vem_iteration(hyper, ms, state):
    """One full pass: q(X), q(Sigma), q(beta), then theta. Mutates ``state``."""
    state.mu, state.q = update_qx(ms, state)
    state.w_hat, state.nu_hat = update_qsigma(hyper, state)
    state.a_hat, state.b_hat = update_qbeta(hyper, ms, state)
    state.theta = update_theta(ms, state)
    state.iteration += 1
    return state


def run_vem(ms, hyper=None, x0=None, opts=None, state=None):
    """Iterate the variational EM updates until the posterior means settle.

    Returns the estimate (the posterior means), the final state and the
    per-iteration trace. Either ``x0`` or an existing ``state`` seeds the run.
    """
    hyper = hyper or Hyperparameters()
    opts = opts or VemOptions()
    if state is None:
        if x0 is None:
            raise ValueError("run_vem needs x0 or state")
        state = warm_start(ms, hyper, x0)
    trace = VemTrace()
    for _ in range(opts.max_iter):
        prev = state.mu
        vem_iteration(hyper, ms, state)
        change = column_change(state.mu, prev)
        trace.change.append(change)
        trace.beta_mean.append(state.a_hat / state.b_hat)
        if opts.compute_elbo:
            trace.elbo.append(_safe_elbo(hyper, ms, state))
        trace.iterations += 1
        if change < opts.tol:
            trace.converged = True
            break
    return SignalMatrix(state.mu.copy()), state, trace


def _safe_elbo(hyper, ms, state) -> Optional[float]:
    try:
        return elbo(hyper, ms, state)
    except NumericalOverflow as exc:
        log.warning("skipping ELBO: %s", exc)
        return None
