"""Acceptance checks with pinned tolerances, shared by ``gsttcm verify`` and the test suite."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import golden_code as gc
from .analysis import (DELTA_MIN, TABLE_ROWS, asymptotic_gain_db, delta_p, delta_s, gain_report,
                       min_det_subcode, search_polynomials, verify_e8_equivalence)
from .channel_sim import real_channel_matrix, sigma2_from_snr, snr_from_sigma2
from .constellation import carve_qam, label_constellation
from .lattice_partition import (N, PartitionConfig, all_coset_leaders, code_at_level,
                                membership_mask, bits_to_int)
from .sphere_decoder import closest_point
from .trellis_codec import (GstTcmConfig, build_trellis, enumerate_simple_error_events,
                            gst_tcm_encode, viterbi_decode)

MIN_DET_TOL = 1e-9
MIN_DET_EXPECTED = (0.2, 0.4, 0.8, 1.6, 3.2)
MIN_DET_BUDGET_S = 60.0
E8_BUDGET_S = 120.0
GAIN_TOL_DB = 0.05
GAIN_BUDGET_S = 10.0
SEARCH_BUDGET_S = 600.0
PROPERTY_BUDGET_S = 300.0
ORACLE_DIM4 = 1000
ORACLE_DIM8 = 100
ROUND_TRIP_FRAMES = 100
ROUND_TRIP_LEN = 130

FER_TARGET = 1e-2
FER_MIN_FRAMES = 2000
FER_MAX_FRAMES = 10000
FER_MAX_ERRORS = 100
EX1_MIN_GAIN_DB = 1.5
EX3_MIN_GAIN_DB = 3.0
CER12_TARGET = 1e-2
CER12_MAX_GAP_DB = 0.4

TRELLIS_FIGURES = (
    (((1,), (0, 1)), 2, ("10", "01")),
    (((0, 1), (1, 0, 1)), 3, ("01", "10", "01")),
    (((0, 1), (0, 0, 1), (1, 0, 1)), 3, ("001", "100", "011")),
    (((0, 1), (0, 0, 1), (1, 0, 0, 1)), 4, ("001", "100", "010", "001")),
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(name, fn) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


# ------------------------------------------------------------------ criteria

def check_min_determinants():
    t0 = time.perf_counter()
    got = [min_det_subcode(k, radius=2) for k in range(5)]
    dt = time.perf_counter() - t0
    ok = all(abs(g - e) <= MIN_DET_TOL for g, e in zip(got, MIN_DET_EXPECTED)) and dt < MIN_DET_BUDGET_S
    return ok, "min det " + ", ".join(f"{g:.12g}" for g in got) + f" in {dt:.1f} s"


def check_e8():
    t0 = time.perf_counter()
    r = verify_e8_equivalence()
    dt = time.perf_counter() - t0
    ok = r.d2_min == 4 and r.abs_det == 16 and r.certified and dt < E8_BUDGET_S
    return ok, (f"d2_min={r.d2_min}, |det|={r.abs_det}, radius {r.search_radius} "
                f"certified={r.certified}, {r.shortest_vectors} minimal vectors")


def check_table_gains():
    t0 = time.perf_counter()
    worst, parts = 0.0, []
    for row in TABLE_ROWS:
        rep = gain_report(build_trellis(row.polys), row.partition)
        e = max(abs(rep.gamma_p_db - row.reference_gamma_p), abs(rep.gamma_s_db - row.reference_gamma_s))
        worst = max(worst, e)
        parts.append(f"{rep.gamma_p_db:.2f}/{rep.gamma_s_db:.2f}")
    dt = time.perf_counter() - t0
    return worst <= GAIN_TOL_DB and dt < GAIN_BUDGET_S, f"pairs {' '.join(parts)}; worst error {worst:.3f} dB"


def check_trellis_figures():
    parts, ok = [], True
    for polys, length, labels in TRELLIS_FIGURES:
        tr = build_trellis(polys)
        events = enumerate_simple_error_events(tr, tr.memory + 3)
        shortest = events[0].length
        have = {tuple(e.label_strings()) for e in events if e.length == shortest}
        good = shortest == length and tuple(labels) in have
        ok &= good
        parts.append(f"{tr.describe()} L'={shortest} {','.join(labels)}{'' if good else ' MISSING'}")
    return ok, "; ".join(parts)


def _certified(m, y, u, metric, lo, hi) -> bool:
    """True when every integer point with metric <= the found one lies inside [lo, hi]^n."""
    inv = np.linalg.inv(m)
    ls = inv @ y
    r = np.linalg.norm(inv, axis=1) * math.sqrt(metric) + 1e-9
    return bool(np.all(ls + r < hi + 1) and np.all(ls - r > lo - 1))


def _oracle_instances(rng, n, count, lo, hi, spread):
    box = np.array(list(itertools.product(range(lo, hi + 1), repeat=n)), dtype=np.int64)
    mismatches = tries = 0
    done = 0
    while done < count:
        tries += 1
        m = rng.standard_normal((n, n))
        y = m @ rng.uniform(-spread, spread, n)
        d = ((y[None, :] - box @ m.T) ** 2).sum(axis=1)
        k = int(np.argmin(d))
        if not _certified(m, y, box[k], d[k], lo, hi):
            continue
        done += 1
        res = closest_point(y, m)
        if not np.array_equal(res.point, box[k]):
            mismatches += 1
    return mismatches, tries


def check_sphere_oracle(seed: int = 7):
    rng = np.random.default_rng(seed)
    m4, t4 = _oracle_instances(rng, 4, ORACLE_DIM4, -3, 3, 2.0)
    m8, t8 = _oracle_instances(rng, 8, ORACLE_DIM8, -1, 1, 0.7)
    return m4 == 0 and m8 == 0, (f"dim 4: {m4} mismatches / {ORACLE_DIM4} ({t4} draws); "
                                 f"dim 8: {m8} mismatches / {ORACLE_DIM8} ({t8} draws)")


def check_round_trip(seed: int = 11):
    rng = np.random.default_rng(seed)
    parts, ok = [], True
    for row in TABLE_ROWS:
        cfg = GstTcmConfig(row.partition, build_trellis(row.polys), ROUND_TRIP_LEN)
        good = 0
        for _ in range(ROUND_TRIP_FRAMES):
            bits = rng.integers(0, 2, cfg.frame_bits)
            h = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
            y = np.einsum("ij,tjk->tik", h, gst_tcm_encode(bits, cfg).codewords)
            good += bool(np.array_equal(viterbi_decode(y, h, cfg).bits, bits))
        ok &= good == ROUND_TRIP_FRAMES
        parts.append(f"example {row.example} {cfg.trellis.states} states {good}/{ROUND_TRIP_FRAMES}")
    return ok, "; ".join(parts)


def check_polynomial_search():
    t0 = time.perf_counter()
    parts, ok = [], True
    for states, cfg, polys in ((16, PartitionConfig(2, 2), ((0, 1), (1, 0, 1))),
                               (64, PartitionConfig(0, 3), ((0, 1), (0, 0, 1), (1, 0, 0, 1)))):
        res = search_polynomials(states, cfg.ell, cfg)
        rank = res.rank_of(polys)
        ok &= rank == 0
        parts.append(f"{states} states: best {res.best_delta_s / DELTA_MIN:.0f} delta_min, "
                     f"{build_trellis(polys).describe()} rank {rank}")
    dt = time.perf_counter() - t0
    return ok and dt < SEARCH_BUDGET_S, "; ".join(parts)


# ------------------------------------------------------------------ property suite

def _prop_nesting():
    return all(membership_mask(k)[bits_to_int(c)] for k in range(4)
               for c in code_at_level(k + 1).codewords)


def _prop_duality():
    c1, c2, c3 = (code_at_level(k).codewords for k in (1, 2, 3))
    g2 = code_at_level(2).generator
    words = np.array(list(itertools.product((0, 1), repeat=8)))
    dual2 = {bits_to_int(w) for w in words if not ((w @ g2.T) % 2).any()}
    return (dual2 == set(code_at_level(2).codeword_set)
            and not ((c1 @ c3.T) % 2).any() and code_at_level(1).k + code_at_level(3).k == 8)


def _prop_transversal():
    for l0 in range(4):
        for l in range(1, 5 - l0):
            mask = membership_mask(l0 + l)
            keys = [bits_to_int(c) for c in all_coset_leaders(l0, l)]
            if len({frozenset(k ^ m for m in np.nonzero(mask)[0]) for k in keys}) != 4 ** l:
                return False
    return True


def _prop_rotation():
    r = gc.rotation_matrix()
    return np.abs(r.T @ r - np.eye(8)).max() <= 1e-12


def _prop_b_identities():
    det_ok = abs(np.linalg.det(gc.B_MATRIX) - (1 + 1j)) <= 1e-12
    b4_ok = np.abs(gc.B_POWERS[4] - 2 * np.eye(2)).max() <= 1e-12
    return det_ok and b4_ok


def _prop_labeling(seed=3):
    lc = label_constellation(PartitionConfig(2, 2, 4))
    pts = set()
    for bits in itertools.product((0, 1), repeat=lc.bits_per_point):
        b = np.array(bits)
        x = lc.encode(b[:lc.n1], b[lc.n1:lc.n1 + lc.q2], b[lc.n1 + lc.q2:])
        pts.add(tuple(x))
    return len(pts) == 2 ** lc.bits_per_point


def _prop_channel(seed=5):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        if np.abs(gc.vectorize(h @ x) - real_channel_matrix(h) @ gc.vectorize(x)).max() > 1e-12:
            return False
    return True


def _prop_snr():
    return all(abs(sigma2_from_snr(snr_from_sigma2(s2, 1.0), 1.0) - s2) <= 1e-12 * s2
               for s2 in (1e-3, 0.1, 1.0, 7.5))


def _prop_det_inequality(seed=9):
    rng = np.random.default_rng(seed)
    cfg = GstTcmConfig(PartitionConfig(2, 2, 4), build_trellis(((1,), (0, 1))), 4)
    for _ in range(200):
        x = gst_tcm_encode(rng.integers(0, 2, cfg.frame_bits), cfg).codewords
        a = np.einsum("tij,tkj->tik", x, x.conj())
        if np.linalg.det(a.sum(axis=0)).real < np.linalg.det(a).real.sum() - 1e-9:
            return False
    return True


PROPERTIES = (
    ("lattice nesting", _prop_nesting),
    ("code duality", _prop_duality),
    ("coset transversals", _prop_transversal),
    ("R orthogonality", _prop_rotation),
    ("B identities (det B = 1+i, B^4 = 2I)", _prop_b_identities),
    ("labeling bijectivity", _prop_labeling),
    ("real channel matrix identity", _prop_channel),
    ("SNR round trip", _prop_snr),
    ("determinant inequality", _prop_det_inequality),
)


def check_properties():
    t0 = time.perf_counter()
    failed = [name for name, fn in PROPERTIES if not fn()]
    dt = time.perf_counter() - t0
    ok = not failed and dt < PROPERTY_BUDGET_S
    return ok, (f"{len(PROPERTIES) - len(failed)}/{len(PROPERTIES)} hold"
                + (f"; failing: {', '.join(failed)}" if failed else ""))


# ------------------------------------------------------------------ Monte-Carlo criteria

def measure_crossing(name: str, target: float, rate: str, start: float, step: float = 1.0,
                     max_points: int = 14, seed: int = 1, progress=None):
    """Sweep a preset upward in SNR until the error rate falls below target; return (snr, records)."""
    from .cli_harness import preset, run_point, snr_at_error_rate
    cfg = preset(name, snr_grid=(start,), frames_per_point=FER_MAX_FRAMES,
                 max_frame_errors=FER_MAX_ERRORS, seed=seed)
    scheme = cfg.build_scheme()
    records = []
    snr = start
    for _ in range(max_points):
        rec = run_point(scheme, cfg, snr)
        records.append(rec)
        if progress:
            progress(name, rec)
        if getattr(rec, rate) < target:
            break
        snr += step
    return snr_at_error_rate(records, target, rate), records


def check_fer_gains(progress=None):
    pairs = (("example1-4state", "uncoded-5bpcu", EX1_MIN_GAIN_DB, 16.0, 18.0),
             ("example3-16state", "uncoded-6bpcu", EX3_MIN_GAIN_DB, 17.0, 19.0))
    ok, parts = True, []
    for coded, ref, need, s_coded, s_ref in pairs:
        a, _ = measure_crossing(coded, FER_TARGET, "fer", s_coded, progress=progress)
        b, _ = measure_crossing(ref, FER_TARGET, "fer", s_ref, progress=progress)
        gain = b - a
        good = math.isfinite(gain) and gain >= need
        ok &= good
        parts.append(f"{coded} vs {ref}: {a:.2f} / {b:.2f} dB at FER 1e-2, gain {gain:.2f} dB (need >= {need})")
    return ok, "; ".join(parts)


def check_cer_12bpcu(progress=None):
    a, _ = measure_crossing("subcode-g2-128qam-cer", CER12_TARGET, "cer", 20.0, progress=progress)
    b, _ = measure_crossing("uncoded-12bpcu-cer", CER12_TARGET, "cer", 20.0, progress=progress)
    gap = abs(a - b)
    return math.isfinite(gap) and gap <= CER12_MAX_GAP_DB, (
        f"G2/128-QAM {a:.2f} dB, uncoded 64-QAM {b:.2f} dB at CER 1e-2; gap {gap:.2f} dB "
        f"(need <= {CER12_MAX_GAP_DB})")


CHECKS = (
    ("minimum determinants", check_min_determinants),
    ("E8 equivalence", check_e8),
    ("gain table", check_table_gains),
    ("trellis error events", check_trellis_figures),
    ("sphere decoder oracle", check_sphere_oracle),
    ("noiseless round trip", check_round_trip),
    ("polynomial search", check_polynomial_search),
    ("property suites", check_properties),
)
MC_CHECKS = (
    ("FER gains at 1e-2", check_fer_gains),
    ("12 bpcu CER coincidence", check_cer_12bpcu),
)


def run_checks(include_fer: bool = False, progress=None):
    for name, fn in CHECKS:
        yield _timed(name, fn)
    if include_fer:
        for name, fn in MC_CHECKS:
            yield _timed(name, lambda: fn(progress=progress))
