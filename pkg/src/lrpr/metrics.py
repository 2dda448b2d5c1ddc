"""Recovery error modulo the per-column global phase."""

from dataclasses import dataclass

import numpy as np

from .core import LrprError
from .datagen import SignalMatrix

SUCCESS_THRESHOLD = 0.1


class ZeroTruth(LrprError, ValueError):
    pass


def _as_array(x):
    return x.x if isinstance(x, SignalMatrix) else np.asarray(x, dtype=complex)


def phase_aligned_sqerror(x, xhat):
    """``min_phi ||x - e^{j phi} xhat||^2``, which equals ``|x|^2 + |xhat|^2 - 2|x^H xhat|``."""
    x = np.asarray(x, dtype=complex)
    xhat = np.asarray(xhat, dtype=complex)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {xhat.shape}")
    val = np.vdot(x, x).real + np.vdot(xhat, xhat).real - 2.0 * abs(np.vdot(x, xhat))
    return max(float(val), 0.0)


def column_sqerrors(x, xhat):
    x, xhat = _as_array(x), _as_array(xhat)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {xhat.shape}")
    val = (
        np.sum(np.abs(x) ** 2, axis=0)
        + np.sum(np.abs(xhat) ** 2, axis=0)
        - 2.0 * np.abs(np.sum(x.conj() * xhat, axis=0))
    )
    return np.maximum(val, 0.0)


def relative_error(x, xhat):
    """Sum of per-column phase-aligned squared errors over ``||X||_F^2``."""
    x, xhat = _as_array(x), _as_array(xhat)
    total = float(np.sum(np.abs(x) ** 2))
    if total == 0.0:
        raise ZeroTruth("relative error undefined for a zero ground truth")
    return float(np.sum(column_sqerrors(x, xhat))) / total


def is_success(re, threshold=SUCCESS_THRESHOLD):
    if re < 0:
        raise ValueError("relative error must be nonnegative")
    return bool(re < threshold)


@dataclass
class TrialRecord:
    """Outcome of one solver run on one synthetic instance.

    ``re`` is ``inf`` for a run that aborted; such trials count as failures.
    """

    algo: str
    init: str
    seed: int
    n: int
    m: int
    p: int
    r: int
    iterations: int
    converged: bool
    re: float
    success: bool
    runtime_ms: float
    trial: int = 0
    threshold: float = SUCCESS_THRESHOLD
    message: str = ""
