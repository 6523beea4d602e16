"""Command line entry point: simulate, gain-report, verify, presets."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cli_harness import (PRESETS, ConfigError, emit_plot_data, format_gain_report, load_config,
                          preset, run_fer_experiment, run_gain_report)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _snr_list(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from exc


def _resolve(target: str, args):
    overrides = dict(seed=args.seed, frames_per_point=args.frames, snr_grid=args.snr,
                     max_frame_errors=args.max_errors)
    if target in PRESETS:
        return preset(target, **overrides)
    cfg = load_config(target)
    kw = {k: v for k, v in overrides.items() if v is not None}
    if kw:
        from dataclasses import replace
        cfg = replace(cfg, **kw)
    return cfg


def cmd_simulate(args) -> int:
    records, configs = {}, {}
    for target in args.config:
        cfg = _resolve(target, args)
        out = Path(args.out or cfg.out or "results")
        out.mkdir(parents=True, exist_ok=True)

        def progress(snr, frames, errors, name=cfg.name):
            if not args.quiet:
                print(f"\r{name} {snr:g} dB: {frames} frames, {errors} errors", end="",
                      file=sys.stderr, flush=True)

        recs = run_fer_experiment(cfg, threads=args.threads,
                                  results_file=str(out / f"{cfg.name}.records.csv"), progress=progress)
        if not args.quiet:
            print(file=sys.stderr)
        records[cfg.name] = recs
        configs[cfg.name] = cfg
        for r in recs:
            print(f"{cfg.name},{r.snr_db:g},{r.frames_run},{r.frame_errors},{r.fer:.6g},{r.cer:.6g}")
    files = emit_plot_data(records, out, configs, figure=not args.no_figure)
    print(f"wrote {', '.join(str(p) for p in files['csv'].values())}, {files['manifest']}", file=sys.stderr)
    return EXIT_OK


def cmd_gain_report(args) -> int:
    rows = run_gain_report(args.out, figure=not args.no_figure)
    print(format_gain_report(rows))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_checks
    failed = 0
    for res in run_checks(include_fer=args.fer):
        print(res.line())
        failed += not res.passed
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


def cmd_presets(args) -> int:
    for name, (scheme, grid, frame_len) in PRESETS.items():
        desc = ", ".join(f"{k}={v}" for k, v in scheme.items() if k not in ("name",))
        print(f"{name:24s} L={frame_len:<4d} snr={','.join(f'{s:g}' for s in grid):22s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsttcm", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="run FER/CER Monte-Carlo for presets or config files")
    s.add_argument("config", nargs="+", help="preset name or INI config path")
    s.add_argument("--seed", type=int)
    s.add_argument("--frames", type=int, help="frame cap per SNR point")
    s.add_argument("--max-errors", type=int, help="early stop after this many frame errors")
    s.add_argument("--snr", type=_snr_list, help="comma separated SNR grid in dB")
    s.add_argument("--out", help="output directory")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--no-figure", action="store_true")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gain-report", help="recompute the example parameter and gain table")
    g.add_argument("--out", help="directory for gain_report.csv/.txt/.png")
    g.add_argument("--no-figure", action="store_true")
    g.set_defaults(func=cmd_gain_report)

    v = sub.add_parser("verify", help="run the invariant and oracle checks")
    v.add_argument("--fer", action="store_true", help="include the long Monte-Carlo gain checks")
    v.set_defaults(func=cmd_verify)

    sub.add_parser("presets", help="list built-in experiment presets").set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
