"""Experiment configuration, Monte-Carlo FER/CER runs, result files and reports."""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import math
import os
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import table_rows
from .channel_sim import (STREAM_CHANNEL, STREAM_NOISE, STREAM_PAYLOAD, NoiseModel, draw_channel,
                          draw_noise, ebn0_db, frame_rng, sigma2_from_snr, transmit)
from .lattice_partition import PartitionConfig
from .schemes import Scheme, SubcodeScheme, TcmScheme, UncodedScheme
from .sphere_decoder import DecodeError
from .trellis_codec import GstTcmConfig, build_trellis, format_poly, parse_poly


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    scheme: dict
    snr_grid: tuple
    frames_per_point: int = 2000
    max_frame_errors: int = 100
    frame_len: int = 130
    seed: int = 1
    out: str | None = None
    sigma2_override: float | None = None

    def __post_init__(self):
        if self.frames_per_point < 1:
            raise ConfigError("frames_per_point must be at least 1")
        if self.max_frame_errors < 1:
            raise ConfigError("max_frame_errors must be at least 1")
        grid = tuple(float(s) for s in self.snr_grid)
        if not grid:
            raise ConfigError("empty SNR grid")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("SNR grid must be strictly increasing")
        object.__setattr__(self, "snr_grid", grid)

    def build_scheme(self) -> Scheme:
        return build_scheme(self.scheme, self.frame_len)

    def hash(self) -> str:
        d = asdict(self)
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def build_scheme(spec: dict, frame_len: int) -> Scheme:
    kind = spec.get("kind")
    try:
        if kind == "uncoded":
            return UncodedScheme(int(spec["bpcu"]), frame_len)
        if kind == "subcode":
            return SubcodeScheme(int(spec["level"]), int(spec["eta"]), frame_len)
        if kind == "gst_tcm":
            part = PartitionConfig(int(spec["ell0"]), int(spec["ell"]), int(spec["eta"]))
            polys = [parse_poly(p) if isinstance(p, str) else tuple(p) for p in spec["polynomials"]]
            cfg = GstTcmConfig(part, build_trellis(polys), frame_len)
            return TcmScheme(cfg, spec.get("name", "gst-tcm"))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"incomplete scheme description {spec!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown scheme kind {kind!r}")


def _tcm(name, ell0, ell, eta, polys):
    return {"kind": "gst_tcm", "name": name, "ell0": ell0, "ell": ell, "eta": eta,
            "polynomials": list(polys)}


# name -> (scheme, default SNR grid, frame length)
PRESETS = {
    "example1-4state": (_tcm("example1-4state", 2, 2, 4, ["1", "D"]), (10, 11, 12, 13, 14), 130),
    "example1-16state": (_tcm("example1-16state", 2, 2, 4, ["D", "1+D^2"]), (10, 11, 12, 13, 14), 130),
    "example2-4state": (_tcm("example2-4state", 0, 2, 4, ["1", "D"]), (12, 13, 14, 15, 16), 130),
    "example2-16state": (_tcm("example2-16state", 0, 2, 4, ["D", "1+D^2"]), (12, 13, 14, 15, 16), 130),
    "example3-16state": (_tcm("example3-16state", 0, 3, 4, ["D", "D^2", "1+D^2"]), (10, 11, 12, 13, 14), 130),
    "example3-64state": (_tcm("example3-64state", 0, 3, 4, ["D", "D^2", "1+D^3"]), (10, 11, 12, 13, 14), 130),
    "example4-16state": (_tcm("example4-16state", 0, 3, 6, ["D", "D^2", "1+D^2"]), (18, 19, 20, 21, 22), 130),
    "example4-64state": (_tcm("example4-64state", 0, 3, 6, ["D", "D^2", "1+D^3"]), (18, 19, 20, 21, 22), 130),
    "uncoded-5bpcu": ({"kind": "uncoded", "bpcu": 5}, (12, 13, 14, 15, 16, 17, 18), 130),
    "uncoded-6bpcu": ({"kind": "uncoded", "bpcu": 6}, (14, 15, 16, 17, 18, 19, 20), 130),
    "uncoded-7bpcu": ({"kind": "uncoded", "bpcu": 7}, (15, 16, 17, 18, 19, 20, 21), 130),
    "uncoded-10bpcu": ({"kind": "uncoded", "bpcu": 10}, (21, 22, 23, 24, 25, 26, 27), 130),
    "uncoded-6bpcu-cer": ({"kind": "uncoded", "bpcu": 6}, (14, 16, 18, 20, 22), 1),
    "uncoded-12bpcu-cer": ({"kind": "uncoded", "bpcu": 12}, (20, 22, 24, 26, 28), 1),
    "subcode-g2-16qam-cer": ({"kind": "subcode", "level": 2, "eta": 4}, (14, 16, 18, 20, 22), 1),
    "subcode-g2-128qam-cer": ({"kind": "subcode", "level": 2, "eta": 7}, (20, 22, 24, 26, 28), 1),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; see 'presets'")
    scheme, grid, frame_len = PRESETS[name]
    kw = dict(name=name, scheme=dict(scheme), snr_grid=grid, frame_len=frame_len)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(",", " ").split())


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read an INI experiment file (see README for the schema)."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    ex = cp["experiment"]
    try:
        overrides = {}
        if "snr_db" in ex:
            overrides["snr_grid"] = _floats(ex["snr_db"])
        for key, conv, dest in (("frames", int, "frames_per_point"),
                                ("max_frame_errors", int, "max_frame_errors"),
                                ("frame_len", int, "frame_len"), ("seed", int, "seed"),
                                ("out", str, "out")):
            if key in ex:
                overrides[dest] = conv(ex[key])
        if "preset" in ex:
            return preset(ex["preset"], **overrides)
        kind = ex.get("scheme")
        if kind == "gst_tcm":
            if "partition" not in cp or "trellis" not in cp:
                raise ConfigError("gst_tcm needs [partition] and [trellis] sections")
            pt, tr = cp["partition"], cp["trellis"]
            scheme = {"kind": "gst_tcm", "name": ex.get("name", "gst-tcm"),
                      "ell0": int(pt["ell0"]), "ell": int(pt["ell"]), "eta": int(pt.get("eta", 4)),
                      "polynomials": [p.strip() for p in tr["polynomials"].split(",")]}
        elif kind == "uncoded":
            scheme = {"kind": "uncoded", "bpcu": int(ex["bpcu"])}
        elif kind == "subcode":
            scheme = {"kind": "subcode", "level": int(ex["level"]), "eta": int(ex["eta"])}
        else:
            raise ConfigError(f"unknown scheme {kind!r}")
        if "snr_grid" not in overrides:
            raise ConfigError("snr_db is required without a preset")
        cfg = ExperimentConfig(name=ex.get("name", kind), scheme=scheme, **overrides)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    build_scheme(cfg.scheme, cfg.frame_len)
    return cfg


@dataclass
class SimRecord:
    scheme: str
    snr_db: float
    ebn0_db: float
    frames_run: int
    frame_errors: int
    fer: float
    codewords_run: int
    codeword_errors: int
    cer: float
    bit_errors: int
    bits_run: int
    wall_time: float
    decoder_node_visits: int
    decoder_aborts: int
    out_of_region_rate: float
    config_hash: str
    seed: int

    @property
    def fer_halfwidth(self) -> float:
        return binomial_halfwidth(self.fer, self.frames_run)

    @property
    def cer_halfwidth(self) -> float:
        return binomial_halfwidth(self.cer, self.codewords_run)


def binomial_halfwidth(p: float, n: int) -> float:
    """Normal-approximation 95% half-width 1.96 sqrt(p (1 - p) / n)."""
    return 1.96 * math.sqrt(p * (1.0 - p) / n) if n else math.nan


@dataclass
class FrameOutcome:
    slot_errors: int
    bit_errors: int
    nodes: int
    out_of_region: int
    aborted: bool


def simulate_frame(scheme: Scheme, seed: int, frame: int, sigma2: float) -> FrameOutcome:
    """One frame with its own channel, payload and noise substreams."""
    H = draw_channel(frame_rng(seed, frame, STREAM_CHANNEL), (seed, frame)).H
    bits = frame_rng(seed, frame, STREAM_PAYLOAD).integers(0, 2, scheme.frame_bits)
    X = scheme.encode(bits)
    z = draw_noise(frame_rng(seed, frame, STREAM_NOISE), X.shape, 1.0)
    Y = transmit(X, H, NoiseModel(sigma2), z=z)
    try:
        st = scheme.decode(Y, H)
    except DecodeError:
        return FrameOutcome(scheme.frame_len, scheme.frame_bits, 0, 0, True)
    wrong = st.bits != bits
    slot_err = int(wrong.reshape(scheme.frame_len, -1).any(axis=1).sum())
    return FrameOutcome(slot_err, int(wrong.sum()), st.nodes, st.out_of_region, False)


def run_point(scheme: Scheme, cfg: ExperimentConfig, snr_db: float, threads: int = 1,
              batch: int = 32, progress=None) -> SimRecord:
    if cfg.sigma2_override is not None:
        sigma2 = float(cfg.sigma2_override)
    else:
        sigma2 = sigma2_from_snr(snr_db, scheme.energy / scheme.bits_per_symbol)
    t0 = time.perf_counter()
    outcomes: list[FrameOutcome] = []
    errors = 0
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        frame = 0
        while frame < cfg.frames_per_point and errors < cfg.max_frame_errors:
            ids = range(frame, min(frame + batch, cfg.frames_per_point))
            if pool:
                res = list(pool.map(lambda f: simulate_frame(scheme, cfg.seed, f, sigma2), ids))
            else:
                res = [simulate_frame(scheme, cfg.seed, f, sigma2) for f in ids]
            # stop at exactly the frame that reaches the error budget, whatever the batching
            for r in res:
                outcomes.append(r)
                errors += r.slot_errors > 0
                if errors >= cfg.max_frame_errors:
                    break
            frame = len(outcomes)
            if progress:
                progress(snr_db, frame, errors)
    finally:
        if pool:
            pool.shutdown()
    n = len(outcomes)
    fe = sum(o.slot_errors > 0 for o in outcomes)
    ce = sum(o.slot_errors for o in outcomes)
    return SimRecord(
        scheme=cfg.name, snr_db=float(snr_db), ebn0_db=ebn0_db(snr_db), frames_run=n,
        frame_errors=fe, fer=fe / n, codewords_run=n * scheme.frame_len, codeword_errors=ce,
        cer=ce / (n * scheme.frame_len), bit_errors=sum(o.bit_errors for o in outcomes),
        bits_run=n * scheme.frame_bits, wall_time=time.perf_counter() - t0,
        decoder_node_visits=sum(o.nodes for o in outcomes),
        decoder_aborts=sum(o.aborted for o in outcomes),
        out_of_region_rate=sum(o.out_of_region for o in outcomes) / (n * scheme.frame_len),
        config_hash=cfg.hash(), seed=cfg.seed)


RECORD_FIELDS = [f for f in SimRecord.__dataclass_fields__]


def run_fer_experiment(cfg: ExperimentConfig, threads: int = 1, results_file: str | None = None,
                       progress=None, stop_below: float | None = None) -> list[SimRecord]:
    """Simulate every SNR point of cfg; records are appended to results_file if given.

    With ``stop_below`` the sweep ends after the first point whose FER drops below it.
    """
    scheme = cfg.build_scheme()
    records = []
    for snr in cfg.snr_grid:
        rec = run_point(scheme, cfg, snr, threads=threads, progress=progress)
        records.append(rec)
        if results_file:
            append_records(results_file, [rec])
        if stop_below is not None and rec.fer < stop_below:
            break
    return records


def append_records(path, records) -> None:
    path = Path(path)
    new = not path.exists()
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(RECORD_FIELDS + ["fer_halfwidth", "cer_halfwidth"])
        for r in records:
            d = asdict(r)
            w.writerow([_fmt(d[k]) for k in RECORD_FIELDS] + [_fmt(r.fer_halfwidth), _fmt(r.cer_halfwidth)])


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 12)) if math.isfinite(v) else str(v)
    return v


def snr_at_error_rate(records, target: float, rate: str = "fer") -> float:
    """SNR where the error rate crosses target, linear in log(rate) between bracketing points."""
    pts = sorted((r.snr_db, getattr(r, rate)) for r in records)
    for (s0, p0), (s1, p1) in zip(pts, pts[1:]):
        if p0 >= target > p1:
            if p1 <= 0:
                # no errors at the upper point: interpolate towards one error
                n = next(r for r in records if r.snr_db == s1)
                runs = n.frames_run if rate == "fer" else n.codewords_run
                p1 = 0.5 / runs
            if p0 <= 0 or p1 >= p0:
                return s0
            f = (math.log(p0) - math.log(target)) / (math.log(p0) - math.log(p1))
            return s0 + f * (s1 - s0)
    return math.nan


def _git_revision() -> str | None:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def emit_plot_data(records_by_scheme: dict, out_dir, configs: dict | None = None,
                   figure: bool = True) -> dict:
    """Write one CSV per scheme, a comparison manifest, a gnuplot stub and (optionally) a PNG."""
    if not records_by_scheme or not any(records_by_scheme.values()):
        raise ValueError("no records to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, recs in records_by_scheme.items():
        if not recs:
            raise ValueError(f"scheme {name!r} has no records")
        p = out / f"{name}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["snr_db", "ebn0_db", "fer", "cer", "fer_halfwidth", "cer_halfwidth",
                        "frames", "frame_errors", "codewords", "codeword_errors"])
            for r in sorted(recs, key=lambda r: r.snr_db):
                w.writerow([_fmt(r.snr_db), _fmt(r.ebn0_db), _fmt(r.fer), _fmt(r.cer),
                            _fmt(r.fer_halfwidth), _fmt(r.cer_halfwidth), r.frames_run,
                            r.frame_errors, r.codewords_run, r.codeword_errors])
        files[name] = p
    gp = out / "comparison.gp"
    plots = ", ".join(f"'{files[n].name}' using 1:3 with linespoints title '{n}'" for n in files)
    gp.write_text("set logscale y\nset xlabel 'SNR (dB)'\nset ylabel 'FER'\nset grid\n"
                  f"set datafile separator ','\nplot {plots}\n")
    manifest = {
        "version": __version__,
        "git_revision": _git_revision(),
        "schemes": {n: str(p.name) for n, p in files.items()},
        "configs": {n: asdict(c) for n, c in (configs or {}).items()},
        "records": {n: [asdict(r) for r in recs] for n, recs in records_by_scheme.items()},
    }
    mpath = out / "comparison.manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=list))
    result = {"csv": files, "gnuplot": gp, "manifest": mpath}
    if figure:
        from .plotting import plot_error_rates
        result["figure"] = plot_error_rates(records_by_scheme, out / "comparison.png")
    return result


def run_gain_report(out_dir=None, figure: bool = True) -> list[dict]:
    """Recompute the per-example parameter and gain table; optionally write CSV/text/PNG."""
    rows = table_rows()
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "gain_report.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        (out / "gain_report.txt").write_text(format_gain_report(rows) + "\n")
        if figure:
            from .plotting import plot_gain_report
            plot_gain_report(rows, out / "gain_report.png")
    return rows


def format_gain_report(rows) -> str:
    head = (f"{'ex':>2} {'lattice':>7} {'sub':>4} {'l0':>2} {'l':>2} {'q1':>2} {'q2':>2} {'q3':>2} "
            f"{'bpcu':>4} {'Q':>3} {'states':>6} {'polynomials':<18} {'Dp':>4} {'Ds':>4} "
            f"{'g(Dp)':>6} {'g(Ds)':>6}")
    lines = [head]
    for r in rows:
        lines.append(
            f"{r['example']:>2} {r['lattice']:>7} {r['sublattice']:>4} {r['ell0']:>2} {r['ell']:>2} "
            f"{r['q1']:>2} {r['q2']:>2} {r['q3']:>2} {r['bpcu']:>4g} {r['Q']:>3} {r['states']:>6} "
            f"{r['polynomials']:<18} {r['delta_p_units']:>4.0f} {r['delta_s_units']:>4.0f} "
            f"{r['gamma_p_db']:>6.2f} {r['gamma_s_db']:>6.2f}")
    return "\n".join(lines)
