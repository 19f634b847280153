"""Inter-carrier interference of compressed chirp subcarriers.

The Gram matrix ``C = A A^H`` of the demodulation matrix has unit diagonal and
off-diagonal magnitude ``|sin(N theta) / (N sin theta)|`` with
``theta = pi alpha (m1 - m2) / N``.  Pairs with ``alpha (m1 - m2)`` integral are
orthogonal even when ``alpha < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InvalidParameter
from .modem import WaveformConfig


@dataclass(frozen=True)
class CorrelationMatrix:
    n: int
    alpha: Fraction
    c2: float
    entries: np.ndarray = field(repr=False)
    span: int | None = None
    """ICI span the matrix was truncated to, ``None`` when complete."""

    def __post_init__(self):
        self.entries.setflags(write=False)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    @property
    def interference(self) -> np.ndarray:
        """Off-diagonal part ``C - I``."""
        return self.entries - np.eye(self.n)


def _pair_sum(n: int, alpha: float, delta: np.ndarray) -> np.ndarray:
    """``sum_k exp(-2j pi alpha delta k / N)`` in ratio form, direct sum where singular."""
    ratio = np.exp(-2j * np.pi * np.mod(alpha * delta / n, 1.0))
    denom = 1 - ratio
    singular = np.abs(denom) < 1e-9
    numer = 1 - np.exp(-2j * np.pi * np.mod(alpha * delta, 1.0))
    out = numer / np.where(singular, 1.0, denom)
    if np.any(singular):
        k = np.arange(n)
        direct = (ratio[..., None] ** k).sum(axis=-1)
        out = np.where(singular, direct, out)
    return out


def correlation_matrix(cfg: WaveformConfig) -> CorrelationMatrix:
    """Closed-form ``A A^H`` for ``cfg``."""
    n = cfg.n
    m = np.arange(n)
    m1, m2 = np.meshgrid(m, m, indexing="ij")
    delta = (m1 - m2).astype(float)
    alpha = float(cfg.alpha)
    chirp = np.exp(-2j * np.pi * np.mod(cfg.c2 * (m1.astype(float) ** 2 - m2.astype(float) ** 2), 1.0))
    C = chirp * _pair_sum(n, alpha, delta) / n
    # pairs where alpha*(m1-m2) is an exact integer are orthogonal
    diff = cfg.alpha * (m1 - m2)
    exact_zero = np.vectorize(lambda d: d.denominator == 1)(diff) & (m1 != m2)
    C[exact_zero] = 0.0
    np.fill_diagonal(C, 1.0)
    return CorrelationMatrix(n, cfg.alpha, cfg.c2, C)


def correlation_magnitude(cfg: WaveformConfig, m1, m2) -> np.ndarray:
    """``|C(m1, m2)| = |sin(N theta) / (N sin theta)|``."""
    m1 = np.asarray(m1)
    m2 = np.asarray(m2)
    n = cfg.n
    theta = np.pi * float(cfg.alpha) * (m1 - m2) / n
    s = np.sin(theta)
    on_peak = np.abs(s) < 1e-12
    val = np.abs(np.sin(n * theta) / (n * np.where(on_peak, 1.0, s)))
    return np.where(on_peak, 1.0, np.minimum(val, 1.0))


def zero_ici_offsets(cfg: WaveformConfig) -> list[int]:
    """Subcarrier separations ``d`` in ``1..N-1`` with ``alpha d`` an integer."""
    return [d for d in range(1, cfg.n) if (cfg.alpha * d).denominator == 1]


def truncate_correlation(C: CorrelationMatrix, span: int) -> CorrelationMatrix:
    """Keep the diagonal and the ``span`` largest off-diagonal magnitudes per row.

    Ties go to the lower column index.
    """
    n = C.n
    if int(span) != span or not 0 <= span <= n - 1:
        raise InvalidParameter(f"ICI span must be in [0, {n - 1}], got {span!r}")
    span = int(span)
    full = np.asarray(C.entries)
    out = np.zeros_like(full)
    np.fill_diagonal(out, np.diag(full))
    # mirrored offsets have equal magnitude up to float noise; round so they tie
    mag = np.round(np.abs(full), 12)
    cols = np.arange(n)
    for i in range(n):
        others = cols[cols != i]
        # stable sort on -|C| keeps lower column first among equals
        order = others[np.argsort(-mag[i, others], kind="stable")]
        keep = order[:span]
        out[i, keep] = full[i, keep]
    return CorrelationMatrix(n, C.alpha, C.c2, out, span=span)


def dump_magnitudes(matrix, path: str | Path, precision: int = 12) -> None:
    """Write ``|matrix|`` as rows of space-separated decimals."""
    mag = np.abs(np.asarray(matrix))
    fmt = f"%.{precision}g"
    np.savetxt(path, mag, fmt=fmt, delimiter=" ")
