"""Run-suite configuration (TOML) and CSV results.

A suite file has an optional top-level ``seed`` and one ``[[run]]`` table per
run::

    seed = 1

    [[run]]
    id = "nafdm-0.9-softid"
    waveform = "nAFDM"        # OFDM | OCDM | AFDM | SEFDM | nAFDM | custom
    n = 32
    alpha = "9/10"            # or n_prime = 40
    cp_len = 8
    mod_order = 4
    nu_max = 2.0              # also drives the AFDM chirp rate
    xi_nu = 1
    paths = 4
    l_max = 3
    detector = "SoftID"       # MMSE | ID | SoftID
    iterations = 10
    snr_db = [10.0, 15.0, 20.0]
    frames = 100000
    min_bit_errors = 500
    code_rate = 1.0

``c1``/``c2`` override the preset chirp rates (``c2`` only for chirped kinds;
both are required for ``custom``).  ``span`` and ``redetect_size`` default to
``N - 1`` and ``ceil(N / 4)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import tomli
import tomli_w

from .errors import ConfigError, NafdmError
from .modem import Preset, WaveformConfig, as_fraction, preset
from .sim import ChannelSpec, Detector, RunSpec, SimResult

CSV_COLUMNS = (
    "run_id", "waveform", "alpha_num", "alpha_den", "c1", "c2", "N", "cp_len", "M",
    "detector", "K", "D", "U", "snr_db", "frames", "bits", "bit_errors", "frame_errors",
    "ber", "fer", "se_max", "se_eff", "seed",
)  # fmt: skip

RUN_KEYS = {
    "id", "waveform", "n", "alpha", "n_prime", "c1", "c2", "xi_nu", "cp_len", "mod_order",
    "paths", "l_max", "nu_max", "gain_model", "detector", "iterations", "span",
    "redetect_size", "snr_db", "frames", "min_bit_errors", "code_rate",
}  # fmt: skip


@dataclass(frozen=True)
class Suite:
    seed: int = 0
    runs: tuple[RunSpec, ...] = field(default_factory=tuple)


def _fail(where: str, msg: str):
    raise ConfigError(f"{where}: {msg}")


def _get(table: dict, key: str, kind, where: str, default=None, required: bool = False):
    if key not in table:
        if required:
            _fail(where, f"missing required field '{key}'")
        return default
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is not None and (not isinstance(val, kind) or isinstance(val, bool) and kind is not bool):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        _fail(where, f"field '{key}' must be {names}, got {val!r}")
    return val


def _run_from_table(table: dict, seed: int, where: str) -> RunSpec:
    unknown = set(table) - RUN_KEYS
    if unknown:
        _fail(where, f"unknown field(s) {', '.join(sorted(unknown))}")
    run_id = _get(table, "id", str, where, required=True)
    where = f"{where} ('{run_id}')"
    try:
        kind = Preset.parse(_get(table, "waveform", str, where, "nAFDM"))
        n = _get(table, "n", int, where, required=True)
        alpha = _get(table, "alpha", (str, int, float), where)
        n_prime = _get(table, "n_prime", int, where)
        if alpha is not None and n_prime is not None and as_fraction(alpha) != Fraction(n, n_prime):
            _fail(where, "'alpha' and 'n_prime' disagree")
        if alpha is None:
            alpha = Fraction(n, n_prime) if n_prime is not None else Fraction(1)
        c1 = _get(table, "c1", float, where)
        c2 = _get(table, "c2", float, where)
        cp_len = _get(table, "cp_len", int, where, 0)
        order = _get(table, "mod_order", int, where, 4)
        l_max = _get(table, "l_max", int, where, 3)
        nu_max = _get(table, "nu_max", float, where, 2.0)
        xi_nu = _get(table, "xi_nu", (int, float), where, 1)
        if kind is Preset.CUSTOM:
            if c1 is None or c2 is None:
                _fail(where, "custom waveforms need both 'c1' and 'c2'")
        else:
            base = preset(kind, n, nu_max=nu_max, xi_nu=xi_nu, alpha=alpha, cp_len=cp_len, mod_order=order)
            chirped = kind in (Preset.AFDM, Preset.NAFDM)
            c1 = base.c1 if c1 is None else c1
            c2 = (c1 if chirped else base.c2) if c2 is None else c2
        wf = WaveformConfig(n=n, alpha=alpha, c1=c1, c2=c2, cp_len=cp_len, mod_order=order, preset=kind)
        snr = _get(table, "snr_db", list, where, [20.0])
        if not all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in snr):
            _fail(where, "'snr_db' must be a list of numbers")
        return RunSpec(
            run_id=run_id,
            waveform=wf,
            channel=ChannelSpec(
                num_paths=_get(table, "paths", int, where, 4),
                l_max=l_max,
                nu_max=nu_max,
                gain_model=_get(table, "gain_model", str, where, "rayleigh"),
            ),
            detector=Detector.parse(_get(table, "detector", str, where, "SoftID")),
            iterations=_get(table, "iterations", int, where, 10),
            span=_get(table, "span", int, where),
            redetect_size=_get(table, "redetect_size", int, where),
            snr_db=tuple(float(s) for s in snr),
            frames=_get(table, "frames", int, where, 100_000),
            min_bit_errors=_get(table, "min_bit_errors", int, where, 500),
            code_rate=_get(table, "code_rate", float, where, 1.0),
            base_seed=seed,
        )
    except ConfigError as exc:
        if str(exc).startswith(where):
            raise
        raise ConfigError(f"{where}: {exc}") from exc
    except NafdmError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config_text(text: str, source: str = "<config>") -> Suite:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    unknown = set(doc) - {"seed", "run"}
    if unknown:
        _fail(source, f"unknown top-level key(s) {', '.join(sorted(unknown))}")
    seed = _get(doc, "seed", int, source, 0)
    if not 0 <= seed < 2**64:
        _fail(source, "'seed' must be an unsigned 64-bit integer")
    tables = doc.get("run", [])
    if not isinstance(tables, list):
        _fail(source, "'run' must be an array of tables ([[run]])")
    runs = tuple(_run_from_table(t, seed, f"{source}: run #{i + 1}") for i, t in enumerate(tables))
    ids = [r.run_id for r in runs]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        _fail(source, f"duplicate run id(s) {', '.join(dupes)}")
    return Suite(seed, runs)


def parse_config(path: str | Path) -> Suite:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    return parse_config_text(text, str(path))


def _alpha_text(alpha: Fraction) -> str:
    return str(alpha.numerator) if alpha.denominator == 1 else f"{alpha.numerator}/{alpha.denominator}"


def run_to_table(spec: RunSpec) -> dict:
    wf = spec.waveform
    table = {
        "id": spec.run_id,
        "waveform": wf.preset.value,
        "n": wf.n,
        "alpha": _alpha_text(wf.alpha),
        "c1": wf.c1,
        "c2": wf.c2,
        "cp_len": wf.cp_len,
        "mod_order": wf.mod_order,
        "paths": spec.channel.num_paths,
        "l_max": spec.channel.l_max,
        "nu_max": float(spec.channel.nu_max),
        "gain_model": spec.channel.gain_model,
        "detector": spec.detector.value,
        "iterations": spec.iterations,
        "snr_db": list(spec.snr_db),
        "frames": spec.frames,
        "min_bit_errors": spec.min_bit_errors,
        "code_rate": float(spec.code_rate),
    }
    if spec.span is not None:
        table["span"] = spec.span
    if spec.redetect_size is not None:
        table["redetect_size"] = spec.redetect_size
    return table


def emit_config(suite: Suite) -> str:
    return tomli_w.dumps({"seed": suite.seed, "run": [run_to_table(r) for r in suite.runs]})


def default_suite(seed: int = 1) -> Suite:
    """Uncoded comparison at N=32, QPSK, CP 8, P=4, l_max=3, nu_max=2."""
    snr = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)

    def run(run_id, kind, detector, alpha=1, **kw):
        wf = preset(kind, 32, nu_max=2.0, l_max=3, xi_nu=1, alpha=alpha, cp_len=8)
        return RunSpec(run_id, wf, ChannelSpec(4, 3, 2.0), detector=detector, snr_db=snr, base_seed=seed, **kw)

    runs = (
        run("afdm-mmse", "AFDM", "MMSE"),
        run("ofdm-mmse", "OFDM", "MMSE"),
        run("ocdm-mmse", "OCDM", "MMSE"),
        run("sefdm-0.85-mmse", "SEFDM", "MMSE", "17/20"),
        run("nafdm-0.85-mmse", "nAFDM", "MMSE", "17/20"),
        run("nafdm-0.9-mmse", "nAFDM", "MMSE", "9/10"),
        run("nafdm-0.9-id", "nAFDM", "ID", "9/10"),
        run("nafdm-0.9-softid", "nAFDM", "SoftID", "9/10"),
        run("nafdm-0.85-softid", "nAFDM", "SoftID", "17/20"),
    )
    return Suite(seed, runs)


def emit_default(seed: int = 1) -> str:
    return emit_config(default_suite(seed))


def with_seed(suite: Suite, seed: int) -> Suite:
    return Suite(seed, tuple(replace(r, base_seed=seed) for r in suite.runs))


# ------------------------------------------------------------------------ CSV


def _num(value: float) -> str:
    return format(float(value), ".12g")


def result_row(spec: RunSpec, res: SimResult) -> dict:
    wf = spec.waveform
    return {
        "run_id": spec.run_id,
        "waveform": wf.preset.value,
        "alpha_num": wf.alpha.numerator,
        "alpha_den": wf.alpha.denominator,
        "c1": _num(wf.c1),
        "c2": _num(wf.c2),
        "N": wf.n,
        "cp_len": wf.cp_len,
        "M": wf.mod_order,
        "detector": spec.detector.value,
        "K": spec.resolved_iterations,
        "D": spec.resolved_span,
        "U": spec.resolved_redetect,
        "snr_db": _num(res.snr_db),
        "frames": res.frames,
        "bits": res.bits,
        "bit_errors": res.bit_errors,
        "frame_errors": res.frame_errors,
        "ber": _num(res.ber),
        "fer": _num(res.fer),
        "se_max": _num(res.se_max),
        "se_eff": _num(res.se_eff),
        "seed": spec.base_seed,
    }


def format_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for spec, res in rows:
        writer.writerow(result_row(spec, res))
    return buf.getvalue()


def emit_csv(rows, path: str | Path) -> None:
    Path(path).write_text(format_csv(rows), encoding="utf-8")
