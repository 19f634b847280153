"""Command-line front end: ``nafdm simulate | dump-ici | dump-channel | default-config``."""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from .channel import subchannel_closed_form
from .config import emit_csv, emit_default, parse_config, with_seed
from .errors import NafdmError
from .ici import correlation_matrix, dump_magnitudes
from .modem import WaveformConfig
from .sim import run_suite

log = logging.getLogger("nafdm")


def _alpha(args) -> Fraction:
    if args.alpha_den <= 0 or args.alpha_num <= 0:
        raise NafdmError("--alpha-num and --alpha-den must be positive")
    return Fraction(args.alpha_num, args.alpha_den)


def cmd_simulate(args) -> int:
    suite = parse_config(args.config)
    if args.seed is not None:
        suite = with_seed(suite, args.seed)
    runs = suite.runs
    if args.runs:
        wanted = {r.strip() for r in args.runs.split(",") if r.strip()}
        missing = wanted - {r.run_id for r in runs}
        if missing:
            raise NafdmError(f"no run(s) named {', '.join(sorted(missing))} in {args.config}")
        runs = tuple(r for r in runs if r.run_id in wanted)
    rows = run_suite(runs, workers=args.workers)
    for spec, res in rows:
        log.info("%s snr=%g dB frames=%d ber=%.3e fer=%.3e (%.1fs)", spec.run_id, res.snr_db, res.frames, res.ber, res.fer, res.wall_time)
    emit_csv(rows, args.out)
    return 0


def cmd_dump_ici(args) -> int:
    cfg = WaveformConfig(n=args.n, alpha=_alpha(args), c2=args.c2)
    dump_magnitudes(correlation_matrix(cfg).entries, args.out)
    return 0


def cmd_dump_channel(args) -> int:
    c2 = args.c1 if args.c2 is None else args.c2
    cfg = WaveformConfig(n=args.n, alpha=_alpha(args), c1=args.c1, c2=c2)
    dump_magnitudes(subchannel_closed_form(args.delay, args.doppler, cfg), args.out)
    return 0


def cmd_default_config(args) -> int:
    text = emit_default(args.seed)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nafdm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-point progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a BER/SE suite and write CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="override the suite seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--runs", help="comma-separated run ids to execute")
    p.set_defaults(func=cmd_simulate)

    def alpha_args(q):
        q.add_argument("--n", type=int, required=True)
        q.add_argument("--alpha-num", type=int, default=1)
        q.add_argument("--alpha-den", type=int, default=1)
        q.add_argument("--out", required=True)

    p = sub.add_parser("dump-ici", help="write |C_alpha| as a text grid")
    alpha_args(p)
    p.add_argument("--c2", type=float, default=0.0)
    p.set_defaults(func=cmd_dump_ici)

    p = sub.add_parser("dump-channel", help="write |H_i| of one path as a text grid")
    alpha_args(p)
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--c2", type=float, help="defaults to c1")
    p.add_argument("--delay", type=int, default=0)
    p.add_argument("--doppler", type=float, default=0.0)
    p.set_defaults(func=cmd_dump_channel)

    p = sub.add_parser("default-config", help="print the default suite as TOML")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except (NafdmError, OSError) as exc:
        print(f"nafdm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
