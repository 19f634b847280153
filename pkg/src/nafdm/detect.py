"""Receivers: linear MMSE, hard iterative cancellation and soft iterative detection.

The soft detector starts from the MMSE output ``x_bar = C x + w``, repeatedly
subtracts the interference predicted from the previous decisions, and turns
the cleaned samples into bit LLRs and symbol posteriors.  The least reliable
symbols (largest posterior variance after the last iteration) are then
re-decided one at a time by minimising ``||y - H_eff x||^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import InvalidDimension, InvalidParameter, NumericalError
from .modem import SUPPORTED_ORDERS, WaveformConfig, constellation, demodulate, qam_slice_index


@dataclass(frozen=True)
class DetectorConfig:
    """Soft detector settings.

    ``span`` and ``redetect_size`` default to ``N - 1`` and ``ceil(N / 4)``; call
    :meth:`resolved` to fill them in for a given ``N``.
    """

    sigma2: float
    iterations: int = 10
    span: int | None = None
    redetect_size: int | None = None
    mod_order: int = 4

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise InvalidParameter(f"sigma2 must be positive and finite, got {self.sigma2!r}")
        if self.iterations < 0:
            raise InvalidParameter("iteration count must be non-negative")
        if self.mod_order not in SUPPORTED_ORDERS:
            raise InvalidParameter(f"unsupported modulation order {self.mod_order}")
        if self.span is not None and self.span < 0:
            raise InvalidParameter("ICI span must be non-negative")
        if self.redetect_size is not None and self.redetect_size < 0:
            raise InvalidParameter("redetection set size must be non-negative")

    def resolved(self, n: int) -> DetectorConfig:
        span = n - 1 if self.span is None else self.span
        size = math.ceil(n / 4) if self.redetect_size is None else self.redetect_size
        if span > n - 1:
            raise InvalidParameter(f"ICI span {span} exceeds N-1={n - 1}")
        if size > n:
            raise InvalidParameter(f"redetection set size {size} exceeds N={n}")
        return replace(self, span=span, redetect_size=size)


@dataclass(frozen=True)
class SoftState:
    """Per-iteration quantities of the soft detector."""

    zbar: np.ndarray
    z: np.ndarray
    llrs: np.ndarray
    post: np.ndarray
    zsoft: np.ndarray
    xhat: np.ndarray
    var: np.ndarray
    decisions: np.ndarray
    """Constellation index of every entry of ``xhat``."""


def _finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalError("non-finite input to detector")


# ------------------------------------------------------------------------ MMSE


def mmse_time(r, H: np.ndarray, sigma2: float) -> np.ndarray:
    """Regularised least squares ``(H^H H + sigma2 I)^{-1} H^H r`` via Cholesky."""
    r = np.asarray(r, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or r.shape != (H.shape[0],):
        raise InvalidDimension("mmse_time needs a square H and a matching vector")
    if not sigma2 > 0:
        raise InvalidParameter("sigma2 must be positive")
    _finite(r, H)
    gram = H.conj().T @ H + sigma2 * np.eye(H.shape[1])
    rhs = H.conj().T @ r
    try:
        return scipy.linalg.solve(gram, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(str(exc)) from exc


def mmse_affine(s_hat, cfg: WaveformConfig) -> np.ndarray:
    """Move the MMSE estimate into the affine domain (``A s_hat``)."""
    return demodulate(s_hat, cfg)


def mmse_detect(x_bar, order: int = 4) -> np.ndarray:
    const = constellation(order)
    return const.points[qam_slice_index(x_bar, order)]


# ---------------------------------------------------------------- hard ID


def hard_id(x_bar, C, iterations: int, order: int = 4) -> np.ndarray:
    """Cancel-then-slice iterations seeded with the sliced MMSE output."""
    if iterations < 1:
        raise InvalidParameter("hard ID needs at least one iteration")
    x_bar = np.asarray(x_bar, dtype=complex)
    _finite(x_bar)
    points = constellation(order).points
    interference = np.asarray(C) - np.eye(x_bar.size)
    xhat = points[qam_slice_index(x_bar, order)]
    for _ in range(iterations):
        z = x_bar - interference @ xhat
        xhat = points[qam_slice_index(z, order)]
    return xhat


# ---------------------------------------------------------------- soft ID


def clip_to_constellation(z, order: int = 4) -> np.ndarray:
    const = constellation(order)
    lo_r, hi_r = const.real_bounds
    lo_i, hi_i = const.imag_bounds
    z = np.asarray(z, dtype=complex)
    return np.clip(z.real, lo_r, hi_r) + 1j * np.clip(z.imag, lo_i, hi_i)


def _logsumexp(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Max-shifted ``log sum exp`` over the last axis restricted to ``mask``."""
    masked = np.where(mask, values, -np.inf)
    peak = masked.max(axis=-1)
    return peak + np.log(np.exp(masked - peak[..., None]).sum(axis=-1))


def bit_llrs(z, sigma2: float, order: int = 4) -> np.ndarray:
    """Bit LLRs ``log P(b=0) / P(b=1)``, shape ``(N, log2 M)``."""
    const = constellation(order)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    diff = z[:, None] - const.points[None, :]
    metric = -(diff.real**2 + diff.imag**2) / (2 * sigma2)
    zero = (const.labels.T == 0)[None, :, :]  # (1, bits, M)
    metric = metric[:, None, :]
    return _logsumexp(metric, zero) - _logsumexp(metric, ~zero)


def symbol_posteriors(llrs: np.ndarray, order: int = 4) -> np.ndarray:
    """Products of bit probabilities for every constellation label, shape ``(N, M)``."""
    labels = constellation(order).labels
    # log P(b=0) = -log(1 + exp(-L)), log P(b=1) = -log(1 + exp(L))
    log_p0 = -np.logaddexp(0.0, -llrs)
    log_p1 = -np.logaddexp(0.0, llrs)
    logpost = np.where(labels[None, :, :] == 0, log_p0[:, None, :], log_p1[:, None, :]).sum(axis=2)
    return np.exp(logpost)


def soft_step(x_bar: np.ndarray, prev: np.ndarray, interference: np.ndarray, sigma2: float, order: int) -> SoftState:
    """One cancellation + soft demapping pass."""
    const = constellation(order)
    zbar = x_bar - interference @ prev
    z = clip_to_constellation(zbar, order)
    llrs = bit_llrs(z, sigma2, order)
    post = symbol_posteriors(llrs, order)
    zsoft = post @ const.points
    decisions = np.argmax(post, axis=1)
    xhat = const.points[decisions]
    var = np.sum(np.abs(const.points[None, :] - zsoft[:, None]) ** 2 * post, axis=1)
    if not (np.all(np.isfinite(post)) and np.all(np.isfinite(zsoft))):
        raise NumericalError("soft demapper produced non-finite values")
    return SoftState(zbar, z, llrs, post, zsoft, xhat, var, decisions)


def soft_iterations(x_bar, C_D, det: DetectorConfig) -> list[SoftState]:
    """Run the cancellation loop and return the state after every iteration."""
    x_bar = np.asarray(x_bar, dtype=complex)
    _finite(x_bar)
    n = x_bar.size
    C = np.asarray(C_D)
    if C.shape != (n, n):
        raise InvalidDimension("correlation matrix does not match the symbol vector")
    interference = C - np.eye(n)
    prev = x_bar
    states = []
    for k in range(det.iterations):
        if k >= 2 and np.array_equal(states[-1].decisions, states[-2].decisions):
            # decisions reached a fixed point: every later pass is identical
            states.extend([states[-1]] * (det.iterations - k))
            break
        state = soft_step(x_bar, prev, interference, det.sigma2, det.mod_order)
        states.append(state)
        prev = state.xhat
    return states


def redetect(
    xhat,
    var,
    post,
    y,
    H_eff,
    size: int,
    order: int = 4,
    trace: list | None = None,
) -> np.ndarray:
    """Re-decide the ``size`` least reliable symbols by residual minimisation.

    Symbols are visited from largest to smallest variance (lower index first on
    ties).  For each one every constellation point is tried, in order of
    decreasing posterior, and the one giving the smallest ``||y - H x||^2`` is
    kept; the updated residual carries over to the next symbol.  Committed
    ``(index, residual)`` pairs are appended to ``trace`` when given.
    """
    xhat = np.array(xhat, dtype=complex)
    var = np.asarray(var, dtype=float)
    post = np.asarray(post, dtype=float)
    y = np.asarray(y, dtype=complex)
    H_eff = np.asarray(H_eff, dtype=complex)
    n = xhat.size
    if not 0 <= size <= n:
        raise InvalidParameter(f"redetection set size must be in [0, {n}]")
    if size == 0:
        return xhat
    points = constellation(order).points
    # rounding keys so values equal up to float noise count as ties
    order_idx = np.argsort(-np.round(var, 12), kind="stable")[:size]
    residual = y - H_eff @ xhat
    for idx in order_idx:
        column = H_eff[:, idx]
        candidates = np.argsort(-np.round(post[idx], 12), kind="stable")
        trials = residual[None, :] - np.outer(points[candidates] - xhat[idx], column)
        cost = np.sum(np.abs(trials) ** 2, axis=1)
        best = int(np.argmin(cost))
        xhat[idx] = points[candidates[best]]
        residual = trials[best]
        if trace is not None:
            trace.append((int(idx), residual.copy()))
    return xhat


def soft_id(x_bar, y, H_eff, C_D, det: DetectorConfig) -> np.ndarray:
    """Soft iterative detection followed by variance-ranked redetection.

    Args:
        x_bar: MMSE output in the affine domain.
        y: received affine-domain samples used by redetection.
        H_eff: effective channel ``A H_T A^H``.
        C_D: (possibly truncated) correlation matrix.
        det: detector settings; unresolved defaults are filled from ``len(x_bar)``.
    """
    x_bar = np.asarray(x_bar, dtype=complex)
    det = det.resolved(x_bar.size)
    states = soft_iterations(x_bar, C_D, det)
    if not states:
        return mmse_detect(x_bar, det.mod_order)
    last = states[-1]
    return redetect(last.xhat, last.var, last.post, y, H_eff, det.redetect_size, det.mod_order)
