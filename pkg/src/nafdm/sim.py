"""Monte-Carlo BER / spectral-efficiency harness.

Random streams
--------------
Frame ``k`` of run ``run_id`` draws everything (bits, channel, noise) from
``numpy.random.default_rng(SeedSequence([base_seed, run_key, k]))`` where
``run_key`` is the first 8 bytes of ``sha256(run_id)``.  The stream does not
depend on the SNR point, so every SNR point sees the same bits, channels and
unit-variance noise draws (common random numbers), and it does not depend on
how frames are split across workers.

Frames are evaluated in chunks and merged in frame order; a point stops at the
first frame whose cumulative bit-error count reaches ``min_bit_errors``, or
after ``frames`` frames.  Chunks past the stopping frame are discarded, so the
counters are identical for any worker count or chunk size.
"""

from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .channel import apply_channel, sample_channel, time_channel_matrix
from .detect import DetectorConfig, hard_id, mmse_affine, mmse_detect, mmse_time, soft_id
from .errors import ConfigError
from .ici import correlation_matrix, truncate_correlation
from .modem import WaveformConfig, add_cp, config_matrix, constellation, demodulate, modulate, qam_map, qam_slice_index, remove_cp

CHUNK = 64


class Detector(str, Enum):
    MMSE = "MMSE"
    ID = "ID"
    SOFT_ID = "SoftID"

    @classmethod
    def parse(cls, name: str | Detector) -> Detector:
        if isinstance(name, cls):
            return name
        key = str(name).replace("-", "").replace("_", "").replace(" ", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ConfigError(f"unknown detector {name!r}; expected one of MMSE, ID, SoftID")


@dataclass(frozen=True)
class ChannelSpec:
    num_paths: int = 4
    l_max: int = 3
    nu_max: float = 2.0
    gain_model: str = "rayleigh"


@dataclass(frozen=True)
class RunSpec:
    run_id: str
    waveform: WaveformConfig
    channel: ChannelSpec = ChannelSpec()
    detector: Detector = Detector.SOFT_ID
    iterations: int = 10
    span: int | None = None
    redetect_size: int | None = None
    snr_db: tuple[float, ...] = (20.0,)
    frames: int = 100_000
    min_bit_errors: int = 500
    code_rate: float = 1.0
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "detector", Detector.parse(self.detector))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if not self.run_id:
            raise ConfigError("run id must be non-empty")
        if self.frames < 1:
            raise ConfigError(f"{self.run_id}: frames must be >= 1")
        if self.min_bit_errors < 0:
            raise ConfigError(f"{self.run_id}: min_bit_errors must be >= 0")
        if not all(math.isfinite(s) for s in self.snr_db):
            raise ConfigError(f"{self.run_id}: SNR values must be finite")
        if not 0 < self.code_rate <= 1:
            raise ConfigError(f"{self.run_id}: code rate must lie in (0, 1]")
        if self.channel.l_max > self.waveform.cp_len:
            raise ConfigError(f"{self.run_id}: cp_len={self.waveform.cp_len} is shorter than l_max={self.channel.l_max}")
        if self.channel.num_paths < 1 or self.channel.l_max < 0 or self.channel.nu_max < 0:
            raise ConfigError(f"{self.run_id}: invalid channel parameters")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError(f"{self.run_id}: seed must be an unsigned 64-bit integer")
        n = self.waveform.n
        if self.span is not None and not 0 <= self.span <= n - 1:
            raise ConfigError(f"{self.run_id}: span must lie in [0, {n - 1}]")
        if self.redetect_size is not None and not 0 <= self.redetect_size <= n:
            raise ConfigError(f"{self.run_id}: redetect_size must lie in [0, {n}]")
        if self.iterations < (1 if self.detector is Detector.ID else 0):
            raise ConfigError(f"{self.run_id}: iteration count too small for {self.detector.value}")

    @property
    def resolved_span(self) -> int:
        if self.detector is Detector.MMSE:
            return 0
        return self.waveform.n - 1 if self.span is None else self.span

    @property
    def resolved_redetect(self) -> int:
        if self.detector is not Detector.SOFT_ID:
            return 0
        return math.ceil(self.waveform.n / 4) if self.redetect_size is None else self.redetect_size

    @property
    def resolved_iterations(self) -> int:
        return 0 if self.detector is Detector.MMSE else self.iterations


@dataclass
class SimResult:
    run_id: str
    snr_db: float
    frames: int = 0
    bits: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    se_max: float = 0.0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def se_eff(self) -> float:
        return effective_se(self.se_max, self.fer)


def se_max(code_rate: float, order: int, alpha, cp_len: int, n: int) -> float:
    """Maximum spectral efficiency ``r_c log2(M) / (alpha (1 + cp_len / N))`` in bit/s/Hz."""
    return code_rate * math.log2(order) / (float(alpha) * (1 + cp_len / n))


def effective_se(se: float, fer: float) -> float:
    """Goodput convention: maximum SE scaled by the frame success rate."""
    if not 0 <= fer <= 1:
        raise ValueError(f"frame error rate must lie in [0, 1], got {fer}")
    return se * (1 - fer)


def snr_to_sigma2(snr_db: float) -> float:
    """Noise variance for unit transmit power."""
    return 10 ** (-snr_db / 10)


@lru_cache(maxsize=256)
def run_key(run_id: str) -> int:
    return int.from_bytes(hashlib.sha256(run_id.encode("utf-8")).digest()[:8], "big")


def frame_rng(base_seed: int, run_id: str, frame_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([base_seed, run_key(run_id), frame_idx]))


# ----------------------------------------------------------------- frame loop


@dataclass(frozen=True)
class _Context:
    spec: RunSpec
    A: np.ndarray
    C_D: np.ndarray
    labels: np.ndarray
    points: np.ndarray


@lru_cache(maxsize=16)
def _context(spec: RunSpec) -> _Context:
    cfg = spec.waveform
    C = correlation_matrix(cfg)
    if spec.detector is not Detector.MMSE:
        C = truncate_correlation(C, spec.resolved_span)
    const = constellation(cfg.mod_order)
    return _Context(spec, config_matrix(cfg), np.asarray(C), const.labels, const.points)


def simulate_frame(spec: RunSpec, snr_db: float, frame_idx: int) -> int:
    """Bit errors of one frame."""
    ctx = _context(spec)
    cfg = spec.waveform
    sigma2 = snr_to_sigma2(snr_db)
    rng = frame_rng(spec.base_seed, spec.run_id, frame_idx)

    bits = rng.integers(0, 2, cfg.bits_per_frame, dtype=np.int8)
    x = qam_map(bits, cfg.mod_order)
    s_cp = add_cp(modulate(x, cfg), cfg)
    ch = sample_channel(spec.channel.num_paths, spec.channel.l_max, spec.channel.nu_max, rng, spec.channel.gain_model)
    r = remove_cp(apply_channel(s_cp, ch, sigma2, cfg, rng), cfg)

    H_T = time_channel_matrix(ch, cfg.n)
    x_bar = mmse_affine(mmse_time(r, H_T, sigma2), cfg)
    if spec.detector is Detector.MMSE:
        xhat = mmse_detect(x_bar, cfg.mod_order)
    elif spec.detector is Detector.ID:
        xhat = hard_id(x_bar, ctx.C_D, spec.iterations, cfg.mod_order)
    else:
        y = demodulate(r, cfg)
        H_eff = ctx.A @ H_T @ ctx.A.conj().T
        det = DetectorConfig(
            sigma2=sigma2,
            iterations=spec.iterations,
            span=spec.resolved_span,
            redetect_size=spec.resolved_redetect,
            mod_order=cfg.mod_order,
        )
        xhat = soft_id(x_bar, y, H_eff, ctx.C_D, det)
    bits_hat = ctx.labels[qam_slice_index(xhat, cfg.mod_order)].ravel()
    return int(np.count_nonzero(bits_hat != bits))


def _simulate_chunk(spec: RunSpec, snr_db: float, start: int, stop: int) -> list[int]:
    return [simulate_frame(spec, snr_db, k) for k in range(start, stop)]


def run_point(spec: RunSpec, snr_db: float, executor=None, chunk: int = CHUNK, in_flight: int = 1) -> SimResult:
    """Simulate one SNR point until the frame budget or the error target is reached.

    With an ``executor``, ``in_flight`` chunks are submitted at a time.
    """
    t0 = time.perf_counter()
    cfg = spec.waveform
    result = SimResult(spec.run_id, float(snr_db), se_max=se_max(spec.code_rate, cfg.mod_order, cfg.alpha, cfg.cp_len, cfg.n))
    if executor is None:
        in_flight = 1
    next_start = 0
    done = False
    while not done and next_start < spec.frames:
        ranges = []
        for _ in range(in_flight):
            if next_start >= spec.frames:
                break
            stop = min(next_start + chunk, spec.frames)
            ranges.append((next_start, stop))
            next_start = stop
        if executor is None:
            batches = [_simulate_chunk(spec, snr_db, a, b) for a, b in ranges]
        else:
            futures = [executor.submit(_simulate_chunk, spec, snr_db, a, b) for a, b in ranges]
            batches = [f.result() for f in futures]
        for batch in batches:
            for errors in batch:
                result.frames += 1
                result.bits += cfg.bits_per_frame
                result.bit_errors += errors
                result.frame_errors += errors > 0
                if spec.min_bit_errors and result.bit_errors >= spec.min_bit_errors:
                    done = True
                    break
            if done:
                break
    result.wall_time = time.perf_counter() - t0
    return result


def run_suite(specs, workers: int = 1, chunk: int = CHUNK) -> list[tuple[RunSpec, SimResult]]:
    """Run every SNR point of every spec; rows come back in spec then SNR order."""
    rows = []
    if workers <= 1:
        for spec in specs:
            for snr in spec.snr_db:
                rows.append((spec, run_point(spec, snr, None, chunk)))
        return rows
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for spec in specs:
            for snr in spec.snr_db:
                rows.append((spec, run_point(spec, snr, pool, chunk, in_flight=2 * workers)))
    return rows
