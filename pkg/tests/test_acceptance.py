"""Acceptance criteria, one or more tests per criterion.

Each check prints a single ``criterion N: PASS|FAIL ...`` line (also repeated in
the terminal summary).  Monte-Carlo checks are marked ``slow``.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from nafdm.channel import subchannel_closed_form
from nafdm.config import format_csv, parse_config_text
from nafdm.detect import DetectorConfig, soft_id
from nafdm.ici import correlation_magnitude, correlation_matrix
from nafdm.modem import WaveformConfig, add_cp, config_matrix, modulate, modulate_direct, modulate_fast, preset, remove_cp
from nafdm.channel import ChannelRealization, apply_channel
from nafdm.sim import ChannelSpec, RunSpec, run_point, run_suite, se_max, snr_to_sigma2

from conftest import ACCEPTANCE_LINES, random_qpsk

Z95 = 1.6448536269514722  # one-sided 95% normal quantile
LINK = dict(nu_max=2.0, l_max=3, xi_nu=1, cp_len=8)
CHANNEL = ChannelSpec(4, 3, 2.0)


def report(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def lower_ber(a, b):
    """One-sided two-proportion z statistic for ``ber(a) < ber(b)``."""
    pooled = (a.bit_errors + b.bit_errors) / (a.bits + b.bits)
    se = math.sqrt(pooled * (1 - pooled) * (1 / a.bits + 1 / b.bits))
    return (b.ber - a.ber) / se if se > 0 else math.inf


def snr_at(results, target):
    """SNR where BER crosses ``target``, interpolated linearly in log10(BER)."""
    pts = sorted((r.snr_db, r.ber) for r in results)
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 >= target > b1 and b1 > 0:
            f = (math.log10(b0) - math.log10(target)) / (math.log10(b0) - math.log10(b1))
            return s0 + f * (s1 - s0)
    return math.inf if pts[-1][1] >= target else -math.inf


def mc(run_id, kind, detector, snr, frames, n=32, alpha=1, seed=2024, min_bit_errors=0, **kw):
    wf = preset(kind, n, alpha=alpha, **LINK)
    spec = RunSpec(run_id, wf, CHANNEL, detector=detector, snr_db=(snr,), frames=frames, min_bit_errors=min_bit_errors, base_seed=seed, **kw)
    return run_point(spec, snr)


# ------------------------------------------------------------------------ 1


def test_c1_fast_generation():
    rng = np.random.default_rng(1)
    worst = 0.0
    for n, n_prime in [(16, 20), (32, 40), (8, 10)]:
        cfg = WaveformConfig.from_lengths(n, n_prime, c1=3 / (2 * n), c2=3 / (2 * n))
        for x in random_qpsk(rng, n, 100):
            worst = max(worst, np.abs(modulate_fast(x, cfg) - modulate_direct(x, cfg)).max())
    # alpha = 1: plain inverse DAFT, written out as a sum
    n, c = 16, 3 / 32
    afdm = WaveformConfig(n=n, c1=c, c2=c)
    k = np.arange(n)
    kernel = np.exp(2j * np.pi * (c * k[:, None] ** 2 + c * k[None, :] ** 2 + np.outer(k, k) / n)) / np.sqrt(n)
    x = random_qpsk(rng, n)
    idaft = np.abs(modulate_fast(x, afdm) - kernel @ x).max()
    report(1, worst < 1e-9 and idaft < 1e-12, f"max|fast-direct|={worst:.2e} (<1e-9), alpha=1 vs IDAFT {idaft:.2e}")


# ------------------------------------------------------------------------ 2


def test_c2_closed_form_channel():
    n, c = 16, 3 / 32
    worst = 0.0
    for alpha in (Fraction(4, 5), Fraction(9, 10), Fraction(1)):
        cfg = WaveformConfig(n=n, alpha=alpha, c1=c, c2=c)
        A = config_matrix(cfg)
        for delay in range(4):
            for nu in (0.0, 0.4, 1.0):
                brute = A @ np.diag(np.exp(-2j * np.pi * nu * np.arange(n) / n)) @ np.roll(np.eye(n), delay, axis=0) @ A.conj().T
                worst = max(worst, np.abs(subchannel_closed_form(delay, nu, cfg) - brute).max())
    orth = WaveformConfig(n=n, c1=c, c2=c)
    single = all(
        np.all(np.sum(np.abs(subchannel_closed_form(delay, nu, orth)) > 1e-9, axis=1) == 1)
        for delay in range(4)
        for nu in (0.0, 1.0)
    )
    report(2, worst < 1e-9 and single, f"max error {worst:.2e} (<1e-9), one entry per row at alpha=1: {single}")


# ------------------------------------------------------------------------ 3


@pytest.mark.parametrize("alpha,expected", [(Fraction(4, 5), {5, 10, 15}), (Fraction(9, 10), {10})])
def test_c3_zero_ici(alpha, expected):
    C = correlation_matrix(WaveformConfig(n=16, alpha=alpha, c1=3 / 32, c2=3 / 32)).entries
    i, j = np.nonzero(np.abs(C) < 1e-10)
    found = set(np.abs(i - j).tolist())
    # every pair at an expected offset must vanish, and no other pair may
    complete = all(abs(C[a, b]) < 1e-10 for a in range(16) for b in range(16) if abs(a - b) in expected)
    report(3, found == expected and complete, f"alpha={alpha}: zero offsets {sorted(found)}, expected {sorted(expected)}")


# ------------------------------------------------------------------------ 4


def test_c4_gram_identity():
    gram_err = law_err = 0.0
    for n in (8, 16, 20, 32):
        for alpha in (Fraction(4, 5), Fraction(5, 6), Fraction(17, 20), Fraction(9, 10), Fraction(29, 32), Fraction(1)):
            for c2 in (0.0, 3 / (2 * n), 0.37):
                cfg = WaveformConfig(n=n, alpha=alpha, c1=0.05, c2=c2)
                A = config_matrix(cfg)
                C = correlation_matrix(cfg).entries
                gram_err = max(gram_err, np.abs(C - A @ A.conj().T).max())
                m1, m2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
                law_err = max(law_err, np.abs(np.abs(C) - correlation_magnitude(cfg, m1, m2)).max())
    report(4, gram_err < 1e-10 and law_err < 1e-12, f"max|C - AA^H|={gram_err:.2e} (<1e-10), sin-ratio law {law_err:.2e} (<1e-12)")


# ------------------------------------------------------------------------ 5


def test_c5_power_and_snr():
    rng = np.random.default_rng(5)
    cfg = preset("nAFDM", 32, 40, **LINK)
    power = sig = noise = 0.0
    frames = 4000
    target = 20.0
    for x in random_qpsk(rng, 32, frames):
        s = modulate(x, cfg)
        power += np.sum(np.abs(s) ** 2)
        s_cp = add_cp(s, cfg)
        noisy = remove_cp(apply_channel(s_cp, ChannelRealization.single(), snr_to_sigma2(target), cfg, rng), cfg)
        sig += np.sum(np.abs(s) ** 2)
        noise += np.sum(np.abs(noisy - s) ** 2)
    power /= frames * 32
    snr = 10 * math.log10(sig / noise)
    report(5, abs(power - 1) < 0.01 and abs(snr - target) < 0.1, f"power {power:.4f} (1 +- 1%), measured SNR {snr:.3f} dB vs {target} dB (+-0.1)")


# ------------------------------------------------------------------------ 6


@pytest.mark.parametrize("n", [16, 32])
@pytest.mark.parametrize("alpha", [Fraction(7, 8), Fraction(29, 32), Fraction(4, 5)])
def test_c6_noiseless_recovery(n, alpha):
    rng = np.random.default_rng(6)
    C = correlation_matrix(WaveformConfig(n=n, alpha=alpha)).entries
    det = DetectorConfig(sigma2=1e-6, iterations=10, span=n - 1)
    ok = 0
    for x in random_qpsk(rng, n, 1000):
        x_bar = C @ x
        ok += np.array_equal(soft_id(x_bar, x_bar, C, C, det), x)
    report(6, ok == 1000, f"N={n} alpha={alpha}: {ok}/1000 frames recovered")


# ------------------------------------------------------------------------ 7


@pytest.mark.slow
def test_c7_detector_ordering():
    snr = 20.0
    mmse = mc("c7-mmse", "nAFDM", "MMSE", snr, 2000, alpha="9/10")
    hard = mc("c7-id", "nAFDM", "ID", snr, 4000, alpha="9/10")
    soft = mc("c7-softid", "nAFDM", "SoftID", snr, 8000, alpha="9/10")
    z_soft, z_hard = lower_ber(soft, hard), lower_ber(hard, mmse)
    report(
        7,
        z_soft > Z95 and z_hard > Z95,
        f"BER at {snr} dB: SoftID {soft.ber:.3e} < ID {hard.ber:.3e} (z={z_soft:.1f}) < MMSE {mmse.ber:.3e} (z={z_hard:.1f})",
    )


@pytest.mark.slow
def test_c7_gap_at_1e3():
    grid = (14.0, 16.0, 18.0, 20.0, 22.0, 24.0)
    curves = {}
    for det in ("ID", "SoftID"):
        curves[det] = [mc(f"c7-gap-{det}", "nAFDM", det, s, 20_000, alpha="9/10", min_bit_errors=400) for s in grid]
    gap = snr_at(curves["ID"], 1e-3) - snr_at(curves["SoftID"], 1e-3)
    report(7, gap >= 1.0, f"SoftID vs ID gap at BER 1e-3: {gap:.2f} dB (>= 2 dB with 1 dB tolerance)")


# ------------------------------------------------------------------------ 8


@pytest.mark.slow
def test_c8_nafdm_vs_afdm():
    snr = 20.0
    nafdm = mc("c8-nafdm", "nAFDM", "SoftID", snr, 8000, alpha="9/10")
    afdm = mc("c8-afdm", "AFDM", "MMSE", snr, 8000)
    ratio = se_max(1, 4, Fraction(9, 10), 8, 32) / se_max(1, 4, 1, 8, 32)
    ok = nafdm.ber <= 1.5 * afdm.ber and nafdm.se_max > afdm.se_max and math.isclose(ratio, 10 / 9)
    report(8, ok, f"BER nAFDM+SoftID {nafdm.ber:.3e} vs 1.5 x AFDM+MMSE {1.5 * afdm.ber:.3e}; SE ratio {ratio:.4f} (1/alpha)")


# ------------------------------------------------------------------------ 9


@pytest.mark.slow
def test_c9_pruning():
    # N=20, N'=24 keeps an exact fast path near alpha = 0.85
    snr = 20.0
    n = 20
    runs = {d: mc(f"c9-D{d}", "nAFDM", "SoftID", snr, 6000, n=n, alpha=Fraction(5, 6), span=d) for d in (n - 1, math.ceil(3 * n / 4), 0)}
    full, pruned, none = runs[n - 1], runs[15], runs[0]
    near = pruned.ber <= 1.5 * full.ber
    report(9, near, f"BER D=15 {pruned.ber:.3e} <= 1.5 x BER D=19 {1.5 * full.ber:.3e}")
    factor = none.ber / full.ber
    report(9, factor >= 5, f"BER D=0 {none.ber:.3e} is {factor:.2f}x BER D=19 {full.ber:.3e} (need >= 5x)")


# ------------------------------------------------------------------------ 10


def test_c10_se_gains():
    base = se_max(1, 4, 1, 8, 32)
    g825 = se_max(1, 4, Fraction(33, 40), 8, 32) / base - 1
    g85 = se_max(1, 4, Fraction(17, 20), 8, 32) / base - 1
    ok = round(g825 * 100, 1) == 21.2 and round(g85 * 100, 1) == 17.6 and math.isclose(base, 1.6)
    report(10, ok, f"gains {100 * g825:.1f}% (alpha=0.825), {100 * g85:.1f}% (alpha=0.85); base SE {base:.3f}")


# ------------------------------------------------------------------------ 11


@pytest.mark.slow
def test_c11_nafdm_vs_sefdm():
    snr = 20.0
    nafdm = mc("c11-nafdm", "nAFDM", "MMSE", snr, 20_000, alpha="17/20")
    sefdm = mc("c11-sefdm", "SEFDM", "MMSE", snr, 20_000, alpha="17/20")
    z = lower_ber(nafdm, sefdm)
    report(11, z > Z95, f"MMSE BER at {snr} dB: nAFDM {nafdm.ber:.4e} < SEFDM {sefdm.ber:.4e}, z={z:.2f} (> {Z95:.3f})")


# ------------------------------------------------------------------------ 12


SUITE = """
seed = 77

[[run]]
id = "det-nafdm"
waveform = "nAFDM"
n = 16
n_prime = 20
cp_len = 4
detector = "SoftID"
snr_db = [5.0, 15.0]
frames = 200
min_bit_errors = 60

[[run]]
id = "det-sefdm"
waveform = "SEFDM"
n = 16
alpha = "9/10"
cp_len = 4
detector = "ID"
snr_db = [10.0]
frames = 150
"""


@pytest.mark.slow
def test_c12_determinism():
    runs = parse_config_text(SUITE).runs
    one = format_csv(run_suite(runs, workers=1))
    again = format_csv(run_suite(runs, workers=1))
    two = format_csv(run_suite(runs, workers=2, chunk=8))
    same = one.encode() == again.encode() == two.encode()
    report(12, same, f"CSV bytes identical across repeats and 1 vs 2 workers ({len(one.splitlines()) - 1} rows)")
