"""Command-line entry point: ``dpbeam {design,pattern,rate,cdf,verify}``."""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import replace
from typing import Optional

from .design import with_criterion
from .config import ConfigError, RunConfig, check_seed, load_config
from .sim import (build_design, empirical_cdf, nominal_pol, reference_gain_grid, run_trials, summarize)
from .tables import fmt, label, table_text, write_codebooks
from .verify import format_report, run_verify

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("dpbeam")


def _snr_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("SNR list is empty")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--out", metavar="PATH", help="output CSV (default: stdout)")
    common.add_argument("--trials", type=int, metavar="N")
    common.add_argument("--snr-db", type=_snr_list, metavar="LIST", help="comma-separated SNRs in dB")
    common.add_argument("--criterion", choices=("se", "mip", "baseline"))
    common.add_argument("--pilot-j", type=int, metavar="N")
    common.add_argument("--threads", type=int, metavar="N")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="dpbeam", description="Dual-polarized hybrid beamforming codebooks.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common], help="write Tx and Rx codebook CSV")
    sub.add_parser("pattern", parents=[common], help="write a reference gain grid CSV")
    sub.add_parser("rate", parents=[common], help="write the mean-rate curve CSV")
    sub.add_parser("cdf", parents=[common], help="write the empirical rate CDF CSV")
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    return ap


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = check_seed(args.seed)
    for name in ("trials", "pilot_j", "threads"):
        v = getattr(args, name)
        if v is not None:
            if v < 1:
                raise ConfigError(f"--{name.replace('_', '-')} must be >= 1, got {v}")
            over[name] = v
    if args.snr_db is not None:
        over["snr_db"] = args.snr_db
    if args.criterion is not None:
        over["criterion"] = args.criterion
    try:
        exp = replace(cfg.experiment, **over)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return replace(cfg, experiment=exp, out=args.out or cfg.out)


@contextlib.contextmanager
def _sink(path: Optional[str]):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def cmd_design(cfg: RunConfig) -> int:
    d = build_design(cfg.experiment)
    with _sink(cfg.out) as fh:
        write_codebooks(fh, [with_criterion(d.align_tx, d.criterion), with_criterion(d.align_rx, d.criterion)])
    return EXIT_OK


def cmd_pattern(cfg: RunConfig) -> int:
    exp = cfg.experiment
    d = build_design(exp)
    spec = cfg.pattern
    cb = d.align_tx if spec.end == "tx" else d.align_rx
    grid = reference_gain_grid(cb[spec.region].weights, nominal_pol(exp), cb.geom, spec.az_points,
                               spec.el_points, cb.part, spec.end)
    rows = zip(grid.theta_az.ravel(), grid.theta_el.ravel(), grid.gain.ravel(), grid.gain_db.ravel(),
               grid.gain_normalized.ravel())
    with _sink(cfg.out) as fh:
        fh.write(table_text(("theta_az", "theta_el", "gain", "gain_db", "gain_normalized"), rows))
    return EXIT_OK


def cmd_rate(cfg: RunConfig) -> int:
    exp = cfg.experiment
    d = build_design(exp)
    rows = []
    for s in exp.snr_db:
        m, e = summarize([t.rate for t in run_trials(d, s, exp.trials, exp.seed, exp.threads)])
        rows.append((s, m, e, exp.trials))
    text = table_text(("snr_db", "mean_rate", "stderr", "trials"), rows)
    with _sink(cfg.out) as fh:
        fh.write(text)
    if cfg.out is not None:
        print(f"{'label':>14} {'snr_db':>8} {'mean_rate':>12} {'stderr':>12}")
        name = label(d.criterion)
        for s, m, e, _ in rows:
            print(f"{name:>14} {fmt(s):>8} {fmt(m):>12} {fmt(e):>12}")
    return EXIT_OK


def cmd_cdf(cfg: RunConfig) -> int:
    exp = cfg.experiment
    d = build_design(exp)
    snr = cfg.cdf_snr_db
    r, c = empirical_cdf([t.rate for t in run_trials(d, snr, exp.trials, exp.seed, exp.threads)])
    with _sink(cfg.out) as fh:
        fh.write(table_text(("rate", "cdf"), zip(r, c)))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = run_verify(cfg.experiment)
    report = format_report(results)
    with _sink(cfg.out) as fh:
        fh.write(report)
    if cfg.out is not None:
        sys.stdout.write(report)
    return EXIT_OK if all(r.ok for r in results) else EXIT_INVARIANT


COMMANDS = {"design": cmd_design, "pattern": cmd_pattern, "rate": cmd_rate, "cdf": cmd_cdf,
            "verify": cmd_verify}


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--snr-db -5,0`` into ``--snr-db=-5,0`` so argparse accepts it."""
    out = []
    it = iter(argv)
    for a in it:
        if a == "--snr-db":
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_negative_values(argv))
    except SystemExit as e:
        # argparse exits 2 on usage errors, which matches the config-error code
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[args.command](cfg)
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, IndexError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
