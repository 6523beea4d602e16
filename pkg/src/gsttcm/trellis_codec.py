"""Quaternary convolutional encoders, trellis tables, GST-TCM encoder and Viterbi decoder."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import golden_code as gc
from .channel_sim import real_channel_matrix
from .constellation import LatticeConstellation, label_constellation
from .lattice_partition import PartitionConfig
from .sphere_decoder import FactoredBasis, grouped_coset_minima


class TrellisError(ValueError):
    pass


def _normalize_poly(p) -> tuple[int, ...]:
    coeffs = [int(c) % 4 for c in p]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs) if coeffs else (0,)


def poly_degree(p) -> int:
    p = _normalize_poly(p)
    return len(p) - 1 if any(p) else 0


def format_poly(p) -> str:
    p = _normalize_poly(p)
    terms = []
    for d, c in enumerate(p):
        if c == 0:
            continue
        mono = "1" if d == 0 else ("D" if d == 1 else f"D^{d}")
        terms.append(mono if c == 1 else (f"{c}" if d == 0 else f"{c}{mono}"))
    return "+".join(terms) if terms else "0"


def parse_poly(text: str) -> tuple[int, ...]:
    """'1+D^2', '2D', 'D' -> coefficient tuple (constant term first)."""
    m = re.fullmatch(r"[0-9D^+]+", text.replace(" ", ""))
    if not m:
        raise TrellisError(f"malformed polynomial {text!r}")
    coeffs = [0] * 4
    for term in m.group(0).split("+"):
        t = re.fullmatch(r"(\d*)(D(?:\^(\d+))?)?", term)
        if not term or not t:
            raise TrellisError(f"malformed term {term!r} in {text!r}")
        if t.group(2):
            deg = int(t.group(3)) if t.group(3) else 1
            coef = int(t.group(1)) if t.group(1) else 1
        else:
            deg, coef = 0, int(t.group(1))
        if deg > 3:
            raise TrellisError(f"degree {deg} exceeds 3 in {text!r}")
        coeffs[deg] = (coeffs[deg] + coef) % 4
    return _normalize_poly(coeffs)


@dataclass(frozen=True)
class TrellisSpec:
    """Shift register over Z4; state = beta_{t-1} + 4 beta_{t-2} + 16 beta_{t-3}."""

    polys: tuple[tuple[int, ...], ...]
    memory: int
    next_state: np.ndarray = field(repr=False)  # (states, 4)
    outputs: np.ndarray = field(repr=False)  # (states, 4, ell) in Z4

    @property
    def ell(self) -> int:
        return len(self.polys)

    @property
    def states(self) -> int:
        return 4 ** self.memory

    @cached_property
    def label_index(self) -> np.ndarray:
        """Trellis coset index of every branch: alpha_1 is the most significant base-4 digit."""
        w = 4 ** np.arange(self.ell - 1, -1, -1)
        return (self.outputs * w).sum(axis=-1)

    @cached_property
    def predecessors(self) -> tuple[np.ndarray, np.ndarray]:
        """(pred_state, input) arrays of shape (states, 4) sorted by predecessor index."""
        preds = [[] for _ in range(self.states)]
        for s in range(self.states):
            for b in range(4):
                preds[int(self.next_state[s, b])].append((s, b))
        ps = np.array([[p for p, _ in sorted(row)] for row in preds], dtype=np.int64)
        bs = np.array([[b for _, b in sorted(row)] for row in preds], dtype=np.int64)
        return ps, bs

    def describe(self) -> str:
        return "(" + ", ".join(format_poly(p) for p in self.polys) + ")"

    def run(self, betas, state: int = 0):
        """Outputs and visited states for an input sequence."""
        outs, path = [], [state]
        for b in betas:
            outs.append(tuple(int(a) for a in self.outputs[state, int(b)]))
            state = int(self.next_state[state, int(b)])
            path.append(state)
        return outs, path


def build_trellis(polys) -> TrellisSpec:
    polys = tuple(_normalize_poly(p) for p in polys)
    if not polys:
        raise TrellisError("need at least one generator polynomial")
    if len(polys) > 3:
        raise TrellisError("at most three generator polynomials are supported")
    if any(len(p) > 4 for p in polys):
        raise TrellisError("polynomial degrees must be below 4")
    nu = max(poly_degree(p) for p in polys)
    states = 4 ** nu
    g = np.zeros((len(polys), nu + 1), dtype=np.int64)
    for i, p in enumerate(polys):
        g[i, :len(p)] = p
    st = np.arange(states)
    hist = (st[:, None] // 4 ** np.arange(nu)[None, :]) % 4  # beta_{t-1}, beta_{t-2}, ...
    beta = np.arange(4)
    # register contents (state, input, delay)
    reg = np.concatenate([np.broadcast_to(beta[None, :, None], (states, 4, 1)),
                          np.broadcast_to(hist[:, None, :], (states, 4, nu))], axis=2)
    out = np.einsum("sbd,id->sbi", reg, g) % 4
    nxt = (beta[None, :] + 4 * st[:, None]) % states
    return TrellisSpec(polys=polys, memory=nu, next_state=nxt, outputs=out)


def alpha_bits(alphas) -> np.ndarray:
    """Natural mapping 0->00, 1->01, 2->10, 3->11, alpha_1 first."""
    a = np.asarray(alphas, dtype=np.int64)
    return np.stack([a >> 1, a & 1], axis=-1).reshape(a.shape[:-1] + (-1,))


@dataclass(frozen=True)
class ErrorEvent:
    length: int
    states: tuple[int, ...]
    labels: tuple[tuple[int, ...], ...]
    inputs: tuple[int, ...]

    def label_strings(self) -> list[str]:
        return ["".join(str(a) for a in lab) for lab in self.labels]


def enumerate_simple_error_events(trellis: TrellisSpec, max_len: int) -> list[ErrorEvent]:
    """Paths leaving state 0 and first returning to it within max_len branches."""
    if trellis.memory == 0:
        return []
    if max_len < trellis.memory + 1:
        raise TrellisError("max_len must be at least memory + 1")
    events = []

    def walk(state, states, labels, inputs):
        if len(inputs) >= max_len:
            return
        for b in range(4):
            if not inputs and b == 0:
                continue
            ns = int(trellis.next_state[state, b])
            lab = tuple(int(a) for a in trellis.outputs[state, b])
            if ns == 0:
                events.append(ErrorEvent(len(inputs) + 1, tuple(states + [ns]),
                                         tuple(labels + [lab]), tuple(inputs + [b])))
            else:
                walk(ns, states + [ns], labels + [lab], inputs + [b])

    walk(0, [0], [], [])
    events.sort(key=lambda e: (e.length, e.inputs))
    return events


@dataclass(frozen=True)
class GstTcmConfig:
    partition: PartitionConfig
    trellis: TrellisSpec
    frame_len: int = 130

    def __post_init__(self):
        if self.trellis.ell != self.partition.ell:
            raise TrellisError(
                f"trellis has {self.trellis.ell} outputs but the partition needs {self.partition.ell}")
        if self.frame_len < 1:
            raise TrellisError("frame length must be positive")

    @property
    def eta(self) -> int:
        return self.partition.eta

    @cached_property
    def constellation(self) -> LatticeConstellation:
        return label_constellation(self.partition, self.partition.eta)

    @property
    def bits_per_slot(self) -> int:
        return self.partition.bits_per_slot

    @property
    def frame_bits(self) -> int:
        return self.frame_len * self.bits_per_slot

    def split(self, bits: np.ndarray):
        """(L * bits_per_slot,) payload -> per-slot (b1, b2, b3)."""
        bits = np.asarray(bits, dtype=np.int64)
        p = self.partition
        if bits.size % self.bits_per_slot:
            raise TrellisError(f"payload length {bits.size} is not a multiple of {self.bits_per_slot}")
        slots = bits.reshape(-1, self.bits_per_slot)
        return slots[:, :p.q1], slots[:, p.q1:p.q1 + p.q2], slots[:, p.q1 + p.q2:]


@dataclass
class EncodedFrame:
    codewords: np.ndarray  # (L, 2, 2)
    points: np.ndarray  # (L, 8) code frame
    final_state: int
    labels: np.ndarray  # (L, ell) alpha values


def gst_tcm_encode(bits, cfg: GstTcmConfig, state: int = 0) -> EncodedFrame:
    b1, b2, b3 = cfg.split(bits)
    if len(b1) != cfg.frame_len:
        raise TrellisError(f"expected {cfg.frame_len} slots, got {len(b1)}")
    betas = 2 * b1[:, 0] + b1[:, 1]
    tr = cfg.trellis
    alphas = np.zeros((len(betas), tr.ell), dtype=np.int64)
    for t, b in enumerate(betas):
        alphas[t] = tr.outputs[state, b]
        state = int(tr.next_state[state, b])
    lc = cfg.constellation
    points = lc.encode(alpha_bits(alphas), b2, b3)
    v = lc.to_channel_vector(points)
    x = gc.devectorize(v @ gc.rotation_matrix().T)
    return EncodedFrame(codewords=x, points=points, final_state=state, labels=alphas)


def receiver_basis(H: np.ndarray) -> np.ndarray:
    """Code-frame lattice vectors -> received real vectors: script-H R P."""
    return real_channel_matrix(H) @ gc.lattice_generator()


def uncentered_observation(Y: np.ndarray, H: np.ndarray, centering: np.ndarray) -> np.ndarray:
    """vectorize(Y_t) + script-H R m, so that the lattice point sits at basis @ x."""
    hr = real_channel_matrix(H) @ gc.rotation_matrix()
    return gc.vectorize(Y) + hr @ centering


@dataclass
class ViterbiResult:
    bits: np.ndarray
    path_metric: float
    points: np.ndarray
    branch_metrics: np.ndarray  # metrics of the chosen branches
    states: np.ndarray
    nodes: int
    inner_decodes: int
    out_of_region: int


def trellis_branch_metrics(ys: np.ndarray, fb: FactoredBasis, cfg: GstTcmConfig):
    """Per-slot metrics and survivor points for every trellis coset.

    Returns (metrics (T, 4^ell), points (T, 4^ell, 8), nodes, inner decode count).
    """
    lc = cfg.constellation
    n_c = cfg.partition.n_cosets
    n_sub = lc.coset_words.shape[0] // n_c
    pts, met, nodes = grouped_coset_minima(ys, fb, lc.coset_words, n_sub)
    return met, pts, nodes, ys.shape[0] * n_c * n_sub


def viterbi_search(bm: np.ndarray, trellis: TrellisSpec):
    """Add-compare-select from state 0; returns (inputs, states, path metric)."""
    t_count = bm.shape[0]
    S = trellis.states
    ps, bs = trellis.predecessors
    lab = trellis.label_index[ps, bs]  # (S, 4)
    pm = np.full(S, np.inf)
    pm[0] = 0.0
    back = np.zeros((t_count, S), dtype=np.int64)
    for t in range(t_count):
        cand = pm[ps] + bm[t][lab]
        k = np.argmin(cand, axis=1)  # first minimum -> smallest predecessor
        back[t] = k
        pm = cand[np.arange(S), k]
    end = int(np.argmin(pm))
    metric = float(pm[end])
    betas = np.zeros(t_count, dtype=np.int64)
    states = np.zeros(t_count + 1, dtype=np.int64)
    s = end
    states[t_count] = s
    for t in range(t_count - 1, -1, -1):
        k = back[t, s]
        betas[t] = bs[s, k]
        s = int(ps[s, k])
        states[t] = s
    return betas, states, metric


def viterbi_decode(Y: np.ndarray, H: np.ndarray, cfg: GstTcmConfig) -> ViterbiResult:
    lc = cfg.constellation
    fb = FactoredBasis(receiver_basis(H))
    ys = uncentered_observation(np.asarray(Y), H, lc.centering)
    bm, pts, nodes, inner = trellis_branch_metrics(ys, fb, cfg)
    tr = cfg.trellis
    betas, states, metric = viterbi_search(bm, tr)
    t_idx = np.arange(len(betas))
    labels = tr.label_index[states[:-1], betas]
    chosen = pts[t_idx, labels]
    _, b2, b3, inside = lc.decode(chosen)
    b1 = np.stack([betas >> 1, betas & 1], axis=1)
    bits = np.concatenate([b1, b2, b3], axis=1).reshape(-1)
    return ViterbiResult(bits=bits, path_metric=metric, points=chosen,
                         branch_metrics=bm[t_idx, labels], states=states, nodes=nodes,
                         inner_decodes=inner, out_of_region=int((~inside).sum()))
