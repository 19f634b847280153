"""Doubly selective multipath channel.

Each path has a complex gain, an integer delay in samples and a Doppler shift
normalised to the subcarrier spacing.  Doppler phase is referenced to the first
sample after the cyclic prefix, so the sample-level channel and the matrix
``H_T`` agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientCP, InvalidDimension, InvalidParameter
from .modem import WaveformConfig, config_matrix


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    def __post_init__(self):
        gains = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        delays = np.atleast_1d(np.asarray(self.delays))
        dopplers = np.atleast_1d(np.asarray(self.dopplers, dtype=float))
        if gains.ndim != 1 or gains.size < 1:
            raise InvalidDimension("a channel needs at least one path")
        if delays.shape != gains.shape or dopplers.shape != gains.shape:
            raise InvalidDimension("gains, delays and dopplers must have the same length")
        if np.any(delays < 0) or np.any(delays != np.round(delays)):
            raise InvalidParameter("delays must be non-negative integers")
        if not (np.all(np.isfinite(gains)) and np.all(np.isfinite(dopplers))):
            raise InvalidParameter("channel parameters must be finite")
        for name, arr in (("gains", gains), ("delays", delays.astype(np.int64)), ("dopplers", dopplers)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def single(cls, gain: complex = 1.0, delay: int = 0, doppler: float = 0.0) -> ChannelRealization:
        return cls(np.array([gain]), np.array([delay]), np.array([doppler]))

    @property
    def num_paths(self) -> int:
        return self.gains.size

    @property
    def l_max(self) -> int:
        return int(self.delays.max())

    @property
    def nu_max(self) -> float:
        return float(np.abs(self.dopplers).max())

    @property
    def doppler_integer(self) -> np.ndarray:
        """Integer parts ``a_i`` such that ``nu_i - a_i`` lies in (-1/2, 1/2]."""
        return np.ceil(self.dopplers - 0.5).astype(np.int64)

    @property
    def doppler_fraction(self) -> np.ndarray:
        return self.dopplers - self.doppler_integer

    def paths(self):
        for h, l, nu in zip(self.gains, self.delays, self.dopplers):
            yield complex(h), int(l), float(nu)


def sample_channel(
    num_paths: int,
    l_max: int,
    nu_max: float,
    rng: np.random.Generator,
    gain_model: str = "rayleigh",
) -> ChannelRealization:
    """Draw a channel with Jakes Doppler ``nu_max * cos(theta)``.

    Delays sit on the fixed grid ``min(i, l_max)``.  With ``gain_model="rayleigh"``
    the gains are i.i.d. CN(0, 1/P); ``"equal"`` keeps magnitude ``1/sqrt(P)``
    with a uniform random phase.
    """
    if num_paths < 1:
        raise InvalidParameter("need at least one path")
    if l_max < 0:
        raise InvalidParameter("l_max must be non-negative")
    delays = np.minimum(np.arange(num_paths), l_max)
    if gain_model == "rayleigh":
        gains = (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths)) * math.sqrt(0.5 / num_paths)
    elif gain_model == "equal":
        gains = np.exp(2j * np.pi * rng.random(num_paths)) / math.sqrt(num_paths)
    else:
        raise InvalidParameter(f"unknown gain model {gain_model!r}")
    theta = rng.uniform(-np.pi, np.pi, num_paths)
    dopplers = nu_max * np.cos(theta)
    return ChannelRealization(gains, delays, dopplers)


def time_channel_matrix(ch: ChannelRealization, n: int) -> np.ndarray:
    """``H_T = sum_i h_i Delta_{f_i} Pi^{l_i}`` as a dense ``n x n`` matrix."""
    if n <= ch.l_max:
        raise InvalidDimension(f"N={n} must exceed the maximum delay {ch.l_max}")
    rows = np.arange(n)
    H = np.zeros((n, n), dtype=complex)
    for h, l, nu in ch.paths():
        H[rows, (rows - l) % n] += h * np.exp(-2j * np.pi * nu * rows / n)
    return H


def awgn(shape, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise with variance ``sigma2`` per sample."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(sigma2 / 2)


def apply_channel(
    s_cp,
    ch: ChannelRealization,
    sigma2: float,
    cfg: WaveformConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Pass a CP-prefixed block through the channel and add noise.

    Returns the full received block (same length as ``s_cp``).  Samples that
    would reach back before the block start are taken as zero; with
    ``cp_len >= l_max`` none of them land in the payload.

    Raises:
        InsufficientCP: when the prefix is shorter than the largest delay.
    """
    s_cp = np.asarray(s_cp, dtype=complex)
    total = cfg.n + cfg.cp_len
    if s_cp.ndim != 1 or s_cp.size != total:
        raise InvalidDimension(f"expected {total} samples, got shape {s_cp.shape}")
    if cfg.cp_len < ch.l_max:
        raise InsufficientCP(f"cp_len={cfg.cp_len} < maximum delay {ch.l_max}")
    if sigma2 < 0 or not math.isfinite(sigma2):
        raise InvalidParameter("noise variance must be finite and non-negative")
    t = np.arange(total) - cfg.cp_len
    out = np.zeros(total, dtype=complex)
    for h, l, nu in ch.paths():
        delayed = np.zeros(total, dtype=complex)
        delayed[l:] = s_cp[: total - l]
        out += h * np.exp(-2j * np.pi * nu * t / cfg.n) * delayed
    if sigma2 > 0:
        if rng is None:
            raise InvalidParameter("an rng is required when sigma2 > 0")
        out += awgn(total, sigma2, rng)
    return out


def effective_channel(ch: ChannelRealization, cfg: WaveformConfig) -> np.ndarray:
    """Affine-domain channel ``A H_T A^H``."""
    A = config_matrix(cfg)
    return A @ time_channel_matrix(ch, cfg.n) @ A.conj().T


def _geom(ratio: np.ndarray, start: int, stop: int) -> np.ndarray:
    """``sum_{n=start}^{stop-1} ratio**n`` elementwise, exact at ``ratio == 1``."""
    count = stop - start
    if count <= 0:
        return np.zeros_like(ratio)
    denom = 1 - ratio
    near_one = np.abs(denom) < 1e-9
    safe = np.where(near_one, 1.0, denom)
    closed = (ratio**start - ratio**stop) / safe
    if np.any(near_one):
        # direct sum where the ratio form is indeterminate
        n = np.arange(start, stop)
        direct = (ratio[..., None] ** n).sum(axis=-1)
        closed = np.where(near_one, direct, closed)
    return closed


def subchannel_phase(cfg: WaveformConfig, delay: int, p, q) -> np.ndarray:
    """Unit-modulus factor of the per-path subchannel entry."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    alpha = float(cfg.alpha)
    n = cfg.n
    arg = n * cfg.c1 * delay**2 - alpha * q * delay + n * cfg.c2 * (q**2 - p**2)
    return np.exp(2j * np.pi * np.mod(arg / n, 1.0))


def subchannel_gain(cfg: WaveformConfig, delay: int, doppler: float, p, q) -> np.ndarray:
    """Amplitude-bearing factor of the per-path subchannel entry.

    With ``phi = alpha (p - q) + nu + 2 N c1 l`` this is the sum of two geometric
    series: samples ``l..N-1`` and the ``l`` samples that wrap around the
    cyclic shift.  The wrapped part carries an extra chirp phase that equals 1
    whenever ``2 N c1`` and ``c1 N^2`` are integers (all AFDM-style chirp
    rates with even N); it is kept so the result is exact for any ``c1``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p, q = np.broadcast_arrays(p, q)
    n = cfg.n
    alpha = float(cfg.alpha)
    c1 = cfg.c1
    phi = alpha * (p - q) + doppler + 2 * n * c1 * delay
    ratio = np.exp(-2j * np.pi * np.mod(phi / n, 1.0))
    main = _geom(ratio, delay, n)
    if delay == 0:
        return main
    wrap_phase = np.exp(2j * np.pi * np.mod(c1 * (n * n - 2 * n * delay), 1.0))
    ratio_wrap = ratio * np.exp(2j * np.pi * np.mod(2 * n * c1, 1.0))
    wrapped = _geom(ratio_wrap, 0, delay)
    return main + np.exp(2j * np.pi * np.mod(alpha * q, 1.0)) * wrap_phase * wrapped


def subchannel_closed_form(delay: int, doppler: float, cfg: WaveformConfig, p=None, q=None) -> np.ndarray:
    """Entries of the unit-gain subchannel ``A Delta Pi^l A^H`` in closed form.

    ``p`` and ``q`` broadcast against each other; omit both for the full matrix.
    """
    if p is None and q is None:
        p, q = np.meshgrid(np.arange(cfg.n), np.arange(cfg.n), indexing="ij")
    elif p is None or q is None:
        raise InvalidParameter("give both p and q, or neither")
    p_arr = np.asarray(p)
    q_arr = np.asarray(q)
    if np.any((p_arr < 0) | (p_arr >= cfg.n)) or np.any((q_arr < 0) | (q_arr >= cfg.n)):
        raise InvalidDimension("indices must lie in [0, N)")
    return subchannel_phase(cfg, delay, p_arr, q_arr) * subchannel_gain(cfg, delay, doppler, p_arr, q_arr) / cfg.n


def effective_channel_closed_form(ch: ChannelRealization, cfg: WaveformConfig) -> np.ndarray:
    """``sum_i h_i H_i`` with every subchannel from the closed form."""
    total = np.zeros((cfg.n, cfg.n), dtype=complex)
    for h, l, nu in ch.paths():
        total += h * subchannel_closed_form(l, nu, cfg)
    return total


def predicted_peak(delay: int, doppler: float, cfg: WaveformConfig, p: int) -> float:
    """Ideal (generally fractional) peak column ``q*`` of subchannel row ``p``."""
    alpha = float(cfg.alpha)
    period = cfg.n / alpha
    shift = np.mod((doppler + 2 * cfg.n * cfg.c1 * delay) / alpha, period)
    return float(np.mod(p + shift, period))


def predicted_peak_column(delay: int, doppler: float, cfg: WaveformConfig, p: int) -> int | None:
    """Integer column nearest ``q*``, or ``None`` when that column is outside ``[0, N)``.

    ``None`` marks the rows that hold only small values.
    """
    col = int(np.floor(predicted_peak(delay, doppler, cfg, p) + 0.5))
    if cfg.alpha == 1:
        col %= cfg.n
    return col if 0 <= col < cfg.n else None


def peak_column(delay: int, doppler: float, cfg: WaveformConfig, p: int) -> int:
    """Column holding the largest subchannel magnitude in row ``p``."""
    if not 0 <= p < cfg.n:
        raise InvalidDimension(f"row {p} outside [0, {cfg.n})")
    row = np.abs(subchannel_closed_form(delay, doppler, cfg, p, np.arange(cfg.n)))
    return int(np.argmax(row))
