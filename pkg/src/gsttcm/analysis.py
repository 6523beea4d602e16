"""Determinant analysis: subcode minimum determinants, Delta_p / Delta_s, coding gains,
generator polynomial search and the E8 check of the level-2 subcode lattice.

Determinants are reported in absolute units (delta_min = 1/5) unless a name says
otherwise; "units" below means multiples of delta_min.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import golden_code as gc
from .constellation import carve_qam, uncoded_profile
from .lattice_partition import (PartitionConfig, bits_to_int, membership_mask, word_depth)
from .trellis_codec import (TrellisSpec, _normalize_poly, alpha_bits, build_trellis,
                            enumerate_simple_error_events, format_poly)

DELTA_MIN = 0.2


class AnalysisError(ValueError):
    pass


def _box(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1, dtype=np.int64)
    grids = np.meshgrid(*([r] * 8), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def min_det_subcode(k: int, radius: int = 2) -> float:
    """Minimum det_metric(encode(a, b, c, d) B^k) over nonzero symbols in a box.

    The box search gives an upper bound on the true minimum; for radius >= 2
    it already meets the algebraic value 2^k / 5.
    """
    if not 0 <= k <= 4:
        raise AnalysisError("k must be in 0..4")
    if radius < 2:
        raise AnalysisError("radius must be at least 2")
    u = _box(radius)
    u = u[np.any(u != 0, axis=1)]
    best = np.inf
    bk = gc.B_POWERS[k]
    for chunk in np.array_split(u, max(1, len(u) // 200_000)):
        x = gc.encode_many(gc.real_to_symbols(chunk)) @ bk
        best = min(best, float(gc.det_metric(x).min()))
    return best


@lru_cache(maxsize=None)
def residue_min_numerators(radius: int = 2) -> np.ndarray:
    """For each code-frame residue word m (0..255): min of 5 |det X|^2 over nonzero
    lattice points in the symbol-frame box [-radius, radius]^8 with x mod 2 = m."""
    s = _box(radius)
    s = s[np.any(s != 0, axis=1)]
    num = gc.det_numerator(s)
    x = gc.lattice_from_symbols(s) % 2
    keys = (x << np.arange(8)).sum(axis=1)
    out = np.full(256, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(out, keys, num)
    out.setflags(write=False)
    return out


def coset_min_det(word, level: int, radius: int = 2) -> float:
    """Minimum determinant over nonzero points of (word + Lambda_level) in the box."""
    table = residue_min_numerators(radius)
    key = bits_to_int(np.asarray(word) % 2)
    members = np.nonzero(membership_mask(level))[0]
    return float(table[members ^ key].min()) / 5.0


def lattice_min_det(level: int, radius: int = 2) -> float:
    """Minimum determinant of the Construction-A lattice Lambda_level (box search)."""
    return coset_min_det(np.zeros(8, dtype=np.int64), level, radius)


def delta_p(cfg: PartitionConfig) -> float:
    return 2 ** (cfg.ell0 + cfg.ell) * DELTA_MIN


def branch_depth(alpha, ell0: int) -> int:
    """Absolute partition depth of a nonzero label: ell0 + index of its first nonzero digit."""
    alpha = tuple(int(a) % 4 for a in alpha)
    for i, a in enumerate(alpha):
        if a:
            return ell0 + i
    return ell0 + len(alpha)


def branch_weight(alpha, cfg: PartitionConfig) -> float:
    """Per-branch minimum determinant of a label difference; a zero difference costs nothing."""
    if not any(int(a) % 4 for a in alpha):
        return 0.0
    return 2 ** branch_depth(alpha, cfg.ell0) * DELTA_MIN


def branch_weight_brute(alpha, cfg: PartitionConfig, radius: int = 2) -> float:
    """Box brute force over the coset of Lambda_ell0+ell selected by the label difference."""
    if not any(int(a) % 4 for a in alpha):
        return 0.0
    word = (alpha_bits(np.asarray(alpha)) @ cfg.h_c1) % 2
    return coset_min_det(word, cfg.level, radius)


def label_weight_table(trellis: TrellisSpec, cfg: PartitionConfig, mode: str = "formula",
                       radius: int = 2) -> np.ndarray:
    """Weight of every branch (state, input) of the zero-referenced trellis."""
    fn = branch_weight if mode == "formula" else (lambda a, c: branch_weight_brute(a, c, radius))
    cache = {}
    w = np.zeros((trellis.states, 4))
    for s in range(trellis.states):
        for b in range(4):
            lab = tuple(int(a) for a in trellis.outputs[s, b])
            if lab not in cache:
                cache[lab] = fn(lab, cfg)
            w[s, b] = cache[lab]
    return w


def shortest_event_weight(trellis: TrellisSpec, weights: np.ndarray, max_len: int = 16):
    """(L', min weight over simple error events of length L') by exact min-plus recursion."""
    if trellis.memory == 0:
        return None, math.inf
    S = trellis.states
    nxt = trellis.next_state
    cur = np.full(S, np.inf)
    for b in range(1, 4):
        ns = nxt[0, b]
        cur[ns] = min(cur[ns], weights[0, b])
    for length in range(1, max_len + 1):
        if np.isfinite(cur[0]):
            return length, float(cur[0])
        if length == max_len:
            break
        new = np.full(S, np.inf)
        src = cur[:, None] + weights
        src[0] = np.inf
        np.minimum.at(new, nxt.reshape(-1), src.reshape(-1))
        cur = new
    return None, math.inf


@dataclass(frozen=True)
class DeltaS:
    value: float
    length: int
    event_labels: tuple
    truncated: bool = False


def delta_s(trellis: TrellisSpec, cfg: PartitionConfig, max_event_len: int | None = None,
            mode: str = "formula", radius: int = 2) -> DeltaS:
    """Minimum summed per-branch determinant over the shortest simple error events.

    mode "formula" uses the partition-depth weights 2^depth delta_min; mode
    "brute" uses box minima over the actual coset points of each branch.
    """
    if max_event_len is None:
        max_event_len = trellis.memory + 3
    w = label_weight_table(trellis, cfg, mode, radius)
    events = enumerate_simple_error_events(trellis, max_event_len)
    if not events:
        return DeltaS(math.inf, 0, (), truncated=trellis.memory > 0)
    shortest = events[0].length
    best, best_ev = math.inf, None
    for ev in events:
        if ev.length != shortest:
            break
        tot = sum(w[s, b] for s, b in zip(ev.states[:-1], ev.inputs))
        if tot < best:
            best, best_ev = tot, ev
    return DeltaS(float(best), shortest, tuple(best_ev.label_strings()),
                  truncated=shortest >= max_event_len)


def asymptotic_gain_db(delta1: float, es1: float, delta2: float, es2: float) -> float:
    """10 log10((sqrt(delta1) / E_s1) / (sqrt(delta2) / E_s2)) for two receive antennas."""
    if min(delta1, es1, delta2, es2) <= 0:
        raise AnalysisError("determinants and energies must be positive")
    return 10.0 * math.log10((math.sqrt(delta1) / es1) / (math.sqrt(delta2) / es2))


@dataclass(frozen=True)
class GainReport:
    delta_p: float
    delta_s: float
    gamma_p_db: float
    gamma_s_db: float

    @property
    def delta_prime_min(self) -> float:
        return min(self.delta_p, self.delta_s)

    @property
    def gamma_prime_db(self) -> float:
        return min(self.gamma_p_db, self.gamma_s_db)


def gain_report(trellis: TrellisSpec, cfg: PartitionConfig, reference_bpcu: int | None = None) -> GainReport:
    """Gains against the uncoded Golden code at the same rate."""
    ref = uncoded_profile(int(reference_bpcu or cfg.bpcu))
    es1 = carve_qam(cfg.eta).energy
    dp = delta_p(cfg)
    ds = delta_s(trellis, cfg).value
    return GainReport(delta_p=dp, delta_s=ds,
                      gamma_p_db=asymptotic_gain_db(dp, es1, DELTA_MIN, ref.energy),
                      gamma_s_db=asymptotic_gain_db(ds, es1, DELTA_MIN, ref.energy))


# ---------------------------------------------------------------- polynomial search

def _candidate_polys(nu: int, zero_ends: bool, unit_ends: bool):
    units = (1, 3)
    for coeffs in itertools.product(range(4), repeat=nu + 1):
        if not any(coeffs):
            continue
        if zero_ends and (coeffs[0] != 0 or coeffs[nu] != 0):
            continue
        if unit_ends and (coeffs[0] not in units or coeffs[nu] not in units):
            continue
        yield coeffs


def _canonical(polys) -> tuple:
    """Representative of a tuple under independent Z4 unit scaling of each polynomial."""
    return tuple(min(_normalize_poly(p), _normalize_poly([3 * c for c in p])) for p in polys)


def _is_surjective(trellis: TrellisSpec) -> bool:
    return np.unique(trellis.label_index).size == 4 ** trellis.ell


@dataclass
class PolynomialClass:
    representative: tuple
    members: list = field(default_factory=list)
    delta_s: float = 0.0
    length: int = 0

    def describe(self) -> str:
        return "(" + ", ".join(format_poly(p) for p in self.representative) + ")"


@dataclass
class SearchResult:
    states: int
    ell: int
    classes: list  # sorted, best first
    criterion_applied: bool
    candidates: int

    @property
    def best_delta_s(self) -> float:
        return self.classes[0].delta_s if self.classes else math.nan

    def top_class(self) -> list:
        """All classes attaining the largest Delta_s."""
        best = self.best_delta_s
        return [c for c in self.classes if abs(c.delta_s - best) < 1e-12]

    def rank_of(self, polys) -> int:
        """0-based rank of the Delta_s value attained by ``polys`` (0 = top)."""
        key = _canonical(tuple(tuple(p) for p in polys))
        values = sorted({round(c.delta_s, 12) for c in self.classes}, reverse=True)
        for c in self.classes:
            if c.representative == key:
                return values.index(round(c.delta_s, 12))
        raise KeyError(polys)


def search_polynomials(states: int, ell: int, cfg: PartitionConfig) -> SearchResult:
    """Exhaustive search over generator tuples of exact memory log4(states), degree < 4.

    Tuples violating the design criterion (outgoing labels differing only in the
    last digit, incoming labels likewise) are dropped when any tuple satisfies
    it.  Zero polynomials and tuples whose labels do not reach every coset are
    always dropped.  Tuples equal up to unit scaling share one class.
    """
    nu = {4: 1, 16: 2, 64: 3}.get(states)
    if nu is None:
        raise AnalysisError("states must be 4, 16 or 64")
    if not 1 <= ell <= 3 or cfg.ell != ell:
        raise AnalysisError("ell must match the partition and lie in 1..3")

    def candidates(criterion: bool):
        if criterion:
            heads = [list(_candidate_polys(nu, True, False))] * (ell - 1)
            tail = list(_candidate_polys(nu, False, True))
            pools = heads + [tail]
        else:
            pools = [list(_candidate_polys(nu, False, False))] * ell
        for combo in itertools.product(*pools):
            if max(max((d for d, c in enumerate(p) if c), default=0) for p in combo) != nu:
                continue
            yield combo

    def collect(criterion: bool) -> dict:
        classes: dict[tuple, PolynomialClass] = {}
        rejected = set()
        for combo in candidates(criterion):
            key = _canonical(combo)
            if key in classes:
                classes[key].members.append(combo)
                continue
            if key in rejected:
                continue
            tr = build_trellis(combo)
            if not _is_surjective(tr):
                rejected.add(key)
                continue
            w = label_weight_table(tr, cfg)
            length, value = shortest_event_weight(tr, w)
            classes[key] = PolynomialClass(representative=key, members=[combo], delta_s=value,
                                           length=length or 0)
        return classes

    criterion = True
    classes = collect(True)
    if not classes:
        criterion = False
        classes = collect(False)
    ranked = sorted(classes.values(), key=lambda c: (-c.delta_s, c.representative))
    return SearchResult(states=states, ell=ell, classes=ranked, criterion_applied=criterion,
                        candidates=sum(len(c.members) for c in ranked))


# ---------------------------------------------------------------- E8 check

M_TILDE = np.array([
    [-2, 1, 1, 0, 0, 0, -1, 0],
    [-1, -2, 0, 1, 0, 0, 0, -1],
    [1, 0, -1, 1, -1, 0, -1, 0],
    [0, 1, -1, -1, 0, -1, 0, -1],
    [0, -1, 0, 1, -1, 1, -1, 0],
    [1, 0, -1, 0, -1, -1, 0, -1],
    [0, 1, 0, 0, -1, 0, -2, 1],
    [-1, 0, 0, 0, 0, -1, -1, -2],
], dtype=np.int64)


def subcode_generator(k: int) -> np.ndarray:
    """Integer matrix whose columns are R^T vec(e_j-codeword B^k), unnormalized."""
    r = gc.rotation_matrix()
    cols = []
    for j in range(8):
        x = gc.encode(*gc.real_to_symbols(np.eye(8)[j])).entries / gc.SCALE @ gc.B_POWERS[k]
        cols.append(r.T @ gc.vectorize(x) * gc.SCALE)
    m = np.column_stack(cols)
    out = np.rint(m).astype(np.int64)
    if np.abs(m - out).max() > 1e-9:  # pragma: no cover
        raise AnalysisError("subcode generator is not integral")
    return out


@dataclass(frozen=True)
class SubcodeLatticeCheck:
    generator: np.ndarray
    d2_min: int
    abs_det: int
    search_radius: int
    certified: bool
    shortest_vectors: int
    columns_in_c2: bool
    rows_mod2_in_c2: bool


def shortest_vector(m: np.ndarray, radius: int = 2, max_radius: int = 4):
    """Brute-force shortest nonzero vector of the lattice spanned by the columns of m.

    The coefficient box [-r, r]^n is certified when every coefficient vector with
    ||m z||^2 <= d2 satisfies |z_i| <= ||row_i(m^-1)|| sqrt(d2) <= r.
    """
    m = np.asarray(m, dtype=np.int64)
    inv = np.linalg.inv(m.astype(float))
    row_norms = np.linalg.norm(inv, axis=1)
    while True:
        z = _box(radius)
        z = z[np.any(z != 0, axis=1)]
        v = z @ m.T
        d2 = (v * v).sum(axis=1)
        best = int(d2.min())
        bound = float(row_norms.max() * math.sqrt(best))
        if bound < radius + 1 or radius >= max_radius:
            return best, int((d2 == best).sum()), radius, bound < radius + 1
        radius += 1


def verify_e8_equivalence() -> SubcodeLatticeCheck:
    """Shortest vector, determinant and Construction-A consistency of the level-2 generator."""
    m = M_TILDE
    d2, count, radius, certified = shortest_vector(m)
    det = int(round(abs(np.linalg.det(m.astype(float)))))
    mask = membership_mask(2)
    cols_code_frame = gc.lattice_from_symbols(m.T) % 2
    cols_ok = all(mask[bits_to_int(c)] for c in cols_code_frame)
    rows_ok = all(mask[bits_to_int(r % 2)] for r in m)
    return SubcodeLatticeCheck(generator=m.copy(), d2_min=d2, abs_det=det, search_radius=radius,
                               certified=certified, shortest_vectors=count,
                               columns_in_c2=cols_ok, rows_mod2_in_c2=rows_ok)


# ---------------------------------------------------------------- report table

@dataclass(frozen=True)
class ExampleRow:
    example: int
    ell0: int
    ell: int
    eta: int
    polys: tuple
    reference_gamma_p: float
    reference_gamma_s: float

    @property
    def partition(self) -> PartitionConfig:
        return PartitionConfig(self.ell0, self.ell, self.eta)

    @property
    def states(self) -> int:
        return 4 ** max(len(p) - 1 for p in self.polys)


LATTICE_NAMES = {0: "Z8", 1: "D4^2", 2: "E8", 3: "L8", 4: "2Z8"}

TABLE_ROWS = (
    ExampleRow(1, 2, 2, 4, ((1,), (0, 1)), 2.0, 1.4),
    ExampleRow(1, 2, 2, 4, ((0, 1), (1, 0, 1)), 2.0, 2.5),
    ExampleRow(2, 0, 2, 4, ((1,), (0, 1)), 2.0, 1.4),
    ExampleRow(2, 0, 2, 4, ((0, 1), (1, 0, 1)), 2.0, 2.5),
    ExampleRow(3, 0, 3, 4, ((0, 1), (0, 0, 1), (1, 0, 1)), 2.3, 2.0),
    ExampleRow(3, 0, 3, 4, ((0, 1), (0, 0, 1), (1, 0, 0, 1)), 2.3, 3.0),
    ExampleRow(4, 0, 3, 6, ((0, 1), (0, 0, 1), (1, 0, 1)), 1.3, 1.0),
    ExampleRow(4, 0, 3, 6, ((0, 1), (0, 0, 1), (1, 0, 0, 1)), 1.3, 2.0),
)


def table_rows() -> list[dict]:
    rows = []
    for r in TABLE_ROWS:
        p = r.partition
        tr = build_trellis(r.polys)
        rep = gain_report(tr, p)
        rows.append({
            "example": r.example,
            "lattice": LATTICE_NAMES[p.ell0],
            "sublattice": LATTICE_NAMES[p.level],
            "ell0": p.ell0, "ell": p.ell,
            "q1": p.q1, "q2": p.q2, "q3": p.q3,
            "bpcu": p.bpcu, "Q": 2 ** p.eta, "states": tr.states,
            "polynomials": tr.describe(),
            "delta_p_units": rep.delta_p / DELTA_MIN,
            "delta_s_units": rep.delta_s / DELTA_MIN,
            "gamma_p_db": rep.gamma_p_db, "gamma_s_db": rep.gamma_s_db,
            "gamma_prime_db": rep.gamma_prime_db,
        })
    return rows
