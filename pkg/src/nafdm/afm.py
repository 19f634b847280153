"""Discrete affine Fourier transform building blocks.

Everything here is dense numpy. Vectors are 1-D ``complex128`` arrays and
matrices are 2-D ``complex128`` arrays; nothing is mutated in place.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

from .errors import InvalidDimension, InvalidParameter

Direction = Literal["forward", "inverse"]


def _check_count(n: int, what: str = "N") -> int:
    if int(n) != n or n < 1:
        raise InvalidDimension(f"{what} must be a positive integer, got {n!r}")
    return int(n)


def chirp_phase(c: float, n: int) -> np.ndarray:
    """Diagonal of the chirp matrix, ``exp(-2j*pi*c*k**2)`` for ``k < n``."""
    n = _check_count(n)
    k = np.arange(n, dtype=float)
    # reduce c*k^2 mod 1 before the exponential to keep phases accurate for large k
    return np.exp(-2j * np.pi * np.mod(c * k * k, 1.0))


def chirp_diag(c: float, n: int) -> np.ndarray:
    """Chirp matrix ``diag(exp(-2j*pi*c*k**2))`` of size ``n x n``."""
    return np.diag(chirp_phase(c, n))


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0) or not np.isfinite(alpha):
        raise InvalidParameter(f"compression factor must lie in (0, 1], got {alpha!r}")
    return alpha


def scaled_dft_matrix(n: int, alpha: float) -> np.ndarray:
    """Compressed DFT matrix with entries ``exp(-2j*pi*alpha*m*k/n) / sqrt(n)``.

    ``alpha = 1`` gives the unitary DFT matrix; ``alpha < 1`` packs the rows
    closer together in frequency and the matrix stops being unitary.
    """
    n = _check_count(n)
    alpha = _check_alpha(alpha)
    k = np.arange(n)
    mk = np.outer(k, k).astype(float)
    return np.exp(-2j * np.pi * np.mod(alpha * mk / n, 1.0)) / np.sqrt(n)


def modulation_matrix(n: int, alpha: float, c1: float, c2: float) -> np.ndarray:
    """Demodulation matrix ``Lambda_c2 @ F_alpha @ Lambda_c1``.

    Its conjugate transpose maps affine-domain symbols to time samples.
    """
    lam1 = chirp_phase(c1, n)
    lam2 = chirp_phase(c2, n)
    return lam2[:, None] * scaled_dft_matrix(n, alpha) * lam1[None, :]


def transform(vec: np.ndarray, length: int | None = None, direction: Direction = "forward") -> np.ndarray:
    """Orthonormal DFT / IDFT of arbitrary length.

    Args:
        vec: input samples.
        length: expected length; checked against ``vec`` when given.
        direction: ``"forward"`` computes ``sum x[k] exp(-2j*pi*m*k/L) / sqrt(L)``,
            ``"inverse"`` the conjugate kernel.

    Returns:
        The transformed vector (a new array).
    """
    vec = np.asarray(vec, dtype=complex)
    if vec.ndim != 1:
        raise InvalidDimension("transform expects a 1-D vector")
    if length is None:
        length = vec.size
    length = _check_count(length, "length")
    if vec.size != length:
        raise InvalidDimension(f"vector has {vec.size} samples, expected {length}")
    if direction == "forward":
        return np.fft.fft(vec, norm="ortho")
    if direction == "inverse":
        return np.fft.ifft(vec, norm="ortho")
    raise InvalidParameter(f"unknown direction {direction!r}")
