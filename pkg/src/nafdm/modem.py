"""nAFDM transmitter and receiver front end.

The compression factor is kept as an exact :class:`fractions.Fraction`.
When ``N / alpha`` is an integer ``N'`` the waveform can be produced with a
zero-padded length-``N'`` IDFT; otherwise only the matrix path is available.

QAM labelling
-------------
Square M-QAM with the first ``log2(M)/2`` label bits on the in-phase axis and
the rest on the quadrature axis, most significant bit first.  On each axis the
amplitude levels ``L-1, L-3, ..., -(L-1)`` are labelled with the Gray code of
their rank, so the leading bit is the sign bit (0 = positive).  For QPSK this
gives ``00 -> (1+1j)/sqrt(2)``, ``01 -> (1-1j)/sqrt(2)``, ``10 -> (-1+1j)/sqrt(2)``
and ``11 -> (-1-1j)/sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np

from .afm import chirp_phase, modulation_matrix, transform
from .errors import FastPathUnavailable, InvalidDimension, InvalidParameter

SUPPORTED_ORDERS = (4, 16, 64)


class Preset(str, Enum):
    OFDM = "OFDM"
    OCDM = "OCDM"
    AFDM = "AFDM"
    SEFDM = "SEFDM"
    NAFDM = "nAFDM"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, kind: str | Preset) -> Preset:
        if isinstance(kind, cls):
            return kind
        for member in cls:
            if member.value.lower() == str(kind).lower():
                return member
        raise InvalidParameter(f"unknown waveform preset {kind!r}")


def as_fraction(alpha) -> Fraction:
    """Convert ``alpha`` to an exact fraction.

    Floats go through their shortest decimal repr, so ``0.85`` becomes 17/20
    rather than the nearest binary fraction.
    """
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, (int, Rational)):
        return Fraction(alpha)
    if isinstance(alpha, float):
        if not math.isfinite(alpha):
            raise InvalidParameter(f"compression factor must be finite, got {alpha!r}")
        return Fraction(repr(alpha))
    try:
        return Fraction(str(alpha).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameter(f"cannot interpret {alpha!r} as a compression factor") from exc


# --------------------------------------------------------------------------- QAM


@dataclass(frozen=True)
class Constellation:
    """Unit-energy Gray-labelled square QAM alphabet.

    ``points[m]`` carries the label whose big-endian integer value is ``m``;
    ``labels[m]`` holds the same label as a row of bits.
    """

    order: int
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    @property
    def real_bounds(self) -> tuple[float, float]:
        return float(self.points.real.min()), float(self.points.real.max())

    @property
    def imag_bounds(self) -> tuple[float, float]:
        return float(self.points.imag.min()), float(self.points.imag.max())


def _gray_axis(levels: int) -> np.ndarray:
    """Amplitude for every axis label value (index = label)."""
    amp = np.empty(levels)
    for rank in range(levels):
        amp[rank ^ (rank >> 1)] = levels - 1 - 2 * rank
    return amp


@lru_cache(maxsize=None)
def constellation(order: int) -> Constellation:
    if order not in SUPPORTED_ORDERS:
        raise InvalidParameter(f"unsupported modulation order {order}; use one of {SUPPORTED_ORDERS}")
    k = int(math.log2(order))
    half = k // 2
    levels = 1 << half
    axis = _gray_axis(levels)
    idx = np.arange(order)
    pts = axis[idx >> half] + 1j * axis[idx & (levels - 1)]
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    labels = ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.int8)
    pts.setflags(write=False)
    labels.setflags(write=False)
    return Constellation(order, pts, labels)


def qam_map(bits, order: int = 4) -> np.ndarray:
    """Map a flat bit sequence onto QAM symbols."""
    const = constellation(order)
    k = const.bits_per_symbol
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % k:
        raise InvalidDimension(f"{bits.size} bits is not a multiple of {k} bits per symbol")
    if np.any((bits != 0) & (bits != 1)):
        raise InvalidParameter("bits must be 0 or 1")
    ints = bits.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    return const.points[ints]


def qam_slice(sym, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Nearest constellation point and its bits for every input sample.

    Returns:
        ``(points, bits)`` where ``bits`` is flat, ``log2(order)`` bits per symbol.
    """
    const = constellation(order)
    sym = np.atleast_1d(np.asarray(sym, dtype=complex))
    idx = np.argmin(np.abs(sym[:, None] - const.points[None, :]) ** 2, axis=1)
    return const.points[idx], const.labels[idx].ravel()


def qam_slice_index(sym, order: int = 4) -> np.ndarray:
    const = constellation(order)
    sym = np.atleast_1d(np.asarray(sym, dtype=complex))
    return np.argmin(np.abs(sym[:, None] - const.points[None, :]) ** 2, axis=1)


# --------------------------------------------------------------- configuration


@dataclass(frozen=True)
class WaveformConfig:
    """Waveform parameters.

    ``alpha`` is the bandwidth compression factor ``N / N'``; pass ``n_prime``
    instead to set it from the extended transform length.
    """

    n: int
    alpha: Fraction = Fraction(1)
    c1: float = 0.0
    c2: float = 0.0
    cp_len: int = 0
    mod_order: int = 4
    preset: Preset = Preset.CUSTOM

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidDimension(f"N must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        alpha = as_fraction(self.alpha)
        if not (0 < alpha <= 1):
            raise InvalidParameter(f"compression factor must lie in (0, 1], got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        for name in ("c1", "c2"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise InvalidParameter(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if int(self.cp_len) != self.cp_len or self.cp_len < 0:
            raise InvalidParameter(f"cp_len must be a non-negative integer, got {self.cp_len!r}")
        if self.cp_len > self.n:
            raise InvalidParameter(f"cp_len={self.cp_len} exceeds N={self.n}")
        object.__setattr__(self, "cp_len", int(self.cp_len))
        if self.mod_order not in SUPPORTED_ORDERS:
            raise InvalidParameter(f"unsupported modulation order {self.mod_order}")
        preset = Preset.parse(self.preset)
        object.__setattr__(self, "preset", preset)
        _check_preset(preset, self.n, alpha, self.c1, self.c2)

    @classmethod
    def from_lengths(cls, n: int, n_prime: int, **kwargs) -> WaveformConfig:
        if int(n_prime) != n_prime or n_prime < n:
            raise InvalidParameter(f"N'={n_prime!r} must be an integer >= N={n}")
        return cls(n=n, alpha=Fraction(int(n), int(n_prime)), **kwargs)

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)

    @property
    def n_prime(self) -> int | None:
        """Extended transform length, or ``None`` if ``N / alpha`` is not integral."""
        q = self.n / self.alpha
        return int(q) if q.denominator == 1 else None

    @property
    def fast_path_available(self) -> bool:
        return self.n_prime is not None

    @property
    def bits_per_frame(self) -> int:
        return self.n * int(math.log2(self.mod_order))


def _check_preset(preset: Preset, n: int, alpha: Fraction, c1: float, c2: float) -> None:
    def fail(msg):
        raise InvalidParameter(f"{preset.value}: {msg}")

    if preset in (Preset.OFDM, Preset.OCDM, Preset.AFDM) and alpha != 1:
        fail("orthogonal presets need alpha = 1")
    if preset in (Preset.SEFDM, Preset.NAFDM) and alpha == 1:
        fail("compressed presets need alpha < 1")
    if preset in (Preset.OFDM, Preset.SEFDM) and (c1 != 0 or c2 != 0):
        fail("Fourier presets have c1 = c2 = 0")
    if preset is Preset.OCDM and not (math.isclose(c1, 1 / (2 * n)) and math.isclose(c2, 1 / (2 * n))):
        fail("OCDM uses c1 = c2 = 1/(2N)")
    if preset in (Preset.AFDM, Preset.NAFDM) and c1 == 0:
        fail("chirped presets need c1 != 0")


def afdm_chirp_rate(n: int, nu_max: float, xi_nu: float = 1) -> float:
    """AFDM rule ``c1 = (2 (nu_max + xi_nu) + 1) / (2N)``."""
    return (2 * (nu_max + xi_nu) + 1) / (2 * n)


def preset(
    kind: str | Preset,
    n: int,
    n_prime: int | None = None,
    nu_max: float = 0.0,
    l_max: int = 0,
    xi_nu: float = 1,
    *,
    alpha=None,
    c2: float | None = None,
    cp_len: int | None = None,
    mod_order: int = 4,
) -> WaveformConfig:
    """Build a validated config for one of the named waveforms.

    Compressed kinds (SEFDM, nAFDM) take either ``n_prime`` or ``alpha``.
    Chirped kinds default to ``c2 = c1``.  ``cp_len`` defaults to ``l_max`` and
    may not be shorter than it.
    """
    kind = Preset.parse(kind)
    if kind is Preset.CUSTOM:
        raise InvalidParameter("use WaveformConfig directly for custom waveforms")
    if alpha is None:
        alpha = Fraction(1) if n_prime is None else Fraction(int(n), int(n_prime))
    elif n_prime is not None and as_fraction(alpha) != Fraction(int(n), int(n_prime)):
        raise InvalidParameter("alpha and n_prime disagree")
    alpha = as_fraction(alpha)
    if kind in (Preset.SEFDM, Preset.NAFDM) and alpha >= 1:
        raise InvalidParameter(f"{kind.value} needs N' > N (alpha < 1)")
    if kind in (Preset.OFDM, Preset.OCDM, Preset.AFDM) and alpha != 1:
        raise InvalidParameter(f"{kind.value} is orthogonal; alpha must be 1")
    if cp_len is None:
        cp_len = l_max
    if cp_len < l_max:
        raise InvalidParameter(f"cp_len={cp_len} is shorter than l_max={l_max}")

    if kind in (Preset.OFDM, Preset.SEFDM):
        c1 = 0.0
        c2_val = 0.0
    elif kind is Preset.OCDM:
        c1 = c2_val = 1 / (2 * n)
    else:
        c1 = afdm_chirp_rate(n, nu_max, xi_nu)
        c2_val = c1 if c2 is None else float(c2)
    if c2 is not None and kind not in (Preset.AFDM, Preset.NAFDM):
        raise InvalidParameter(f"{kind.value} fixes c2; override not allowed")
    return WaveformConfig(n=n, alpha=alpha, c1=c1, c2=c2_val, cp_len=cp_len, mod_order=mod_order, preset=kind)


# ----------------------------------------------------------------- modulation


@lru_cache(maxsize=64)
def _cached_matrix(n: int, alpha: Fraction, c1: float, c2: float) -> np.ndarray:
    mat = modulation_matrix(n, float(alpha), c1, c2)
    mat.setflags(write=False)
    return mat


def config_matrix(cfg: WaveformConfig) -> np.ndarray:
    """Demodulation matrix ``A`` for ``cfg`` (read-only, cached)."""
    return _cached_matrix(cfg.n, cfg.alpha, cfg.c1, cfg.c2)


def _check_len(vec, n: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    if vec.ndim != 1 or vec.size != n:
        raise InvalidDimension(f"expected a length-{n} vector, got shape {vec.shape}")
    return vec


def modulate_direct(x, cfg: WaveformConfig) -> np.ndarray:
    """Time samples ``A^H x``."""
    x = _check_len(x, cfg.n)
    return config_matrix(cfg).conj().T @ x


def waveform_samples(x, cfg: WaveformConfig, times) -> np.ndarray:
    """Evaluate the chirp-subcarrier sum at arbitrary (possibly out-of-frame) time indices."""
    x = _check_len(x, cfg.n)
    t = np.asarray(times, dtype=float)
    m = np.arange(cfg.n, dtype=float)
    alpha = float(cfg.alpha)
    phase = cfg.c1 * t[:, None] ** 2 + cfg.c2 * m[None, :] ** 2 + alpha * np.outer(t, m) / cfg.n
    return np.exp(2j * np.pi * np.mod(phase, 1.0)) @ x / np.sqrt(cfg.n)


def modulate_fast(x, cfg: WaveformConfig) -> np.ndarray:
    """Time samples via zero padding and a length-``N'`` IDFT.

    Raises:
        FastPathUnavailable: when ``N / alpha`` is not an integer.
    """
    x = _check_len(x, cfg.n)
    n_prime = cfg.n_prime
    if n_prime is None:
        raise FastPathUnavailable(f"N/alpha = {cfg.n / cfg.alpha} is not an integer")
    padded = np.zeros(n_prime, dtype=complex)
    padded[: cfg.n] = x * np.conj(chirp_phase(cfg.c2, cfg.n))
    s_ext = transform(padded, n_prime, "inverse")
    return np.conj(chirp_phase(cfg.c1, cfg.n)) * s_ext[: cfg.n] / np.sqrt(float(cfg.alpha))


def modulate(x, cfg: WaveformConfig) -> np.ndarray:
    """Fast path when available, matrix path otherwise."""
    if cfg.fast_path_available:
        return modulate_fast(x, cfg)
    return modulate_direct(x, cfg)


def demodulate(r, cfg: WaveformConfig) -> np.ndarray:
    """Affine-domain samples ``A r``."""
    r = _check_len(r, cfg.n)
    return config_matrix(cfg) @ r


def demodulate_fast(r, cfg: WaveformConfig) -> np.ndarray:
    """``A r`` through a length-``N'`` DFT of the zero-padded dechirped input."""
    r = _check_len(r, cfg.n)
    n_prime = cfg.n_prime
    if n_prime is None:
        raise FastPathUnavailable(f"N/alpha = {cfg.n / cfg.alpha} is not an integer")
    padded = np.zeros(n_prime, dtype=complex)
    padded[: cfg.n] = chirp_phase(cfg.c1, cfg.n) * r
    spec = transform(padded, n_prime, "forward")[: cfg.n]
    # ortho DFT carries 1/sqrt(N'); the matrix carries 1/sqrt(N)
    return chirp_phase(cfg.c2, cfg.n) * spec / np.sqrt(float(cfg.alpha))


def add_cp(s, cfg: WaveformConfig) -> np.ndarray:
    s = _check_len(s, cfg.n)
    if cfg.cp_len == 0:
        return s.copy()
    return np.concatenate([s[-cfg.cp_len :], s])


def remove_cp(r, cfg: WaveformConfig) -> np.ndarray:
    r = np.asarray(r, dtype=complex)
    if r.ndim != 1 or r.size != cfg.n + cfg.cp_len:
        raise InvalidDimension(f"expected {cfg.n + cfg.cp_len} samples, got shape {r.shape}")
    return r[cfg.cp_len :].copy()
