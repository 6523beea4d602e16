"""QAM carving, Gray / coset labeling of finite lattice constellations, uncoded profiles.

Wire format of one time slot (see README): ``b1`` (2*ell trellis-coset bits),
``b2`` (q2 sublattice-coset bits), ``b3`` (q3 bits, 4 groups of eta - 2 bits,
group i labels symbol-frame pair i).  Inside each group the real-part bits
come first, each component least significant bit first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import golden_code as gc
from .lattice_partition import N, PartitionConfig, bits_to_int, int_to_bits

SUPPORTED_ETA = (2, 3, 4, 5, 6, 7)


class ConstellationError(ValueError):
    pass


def gray(n: int) -> int:
    return n ^ (n >> 1)


def _bits_lsb(m: int, n: int) -> list[int]:
    return [(m >> i) & 1 for i in range(n)]


def _grid(nbits: int) -> tuple[list[tuple[int, int]], list[int], str]:
    """Points of a 2^nbits grid in the positive quadrant with their integer labels."""
    if nbits % 2 == 0:
        side = 1 << (nbits // 2)
        h = nbits // 2
        pts, labels = [], []
        for im in range(side):
            for re in range(side):
                pts.append((re, im))
                labels.append(gray(re) | (gray(im) << h))
        return pts, labels, "square"
    if nbits == 1:
        return [(0, 0), (1, 0)], [0, 1], "rectangular"
    if nbits == 3:
        pts, labels = [], []
        for im in range(2):
            for re in range(4):
                pts.append((re, im))
                labels.append(gray(re) | (im << 2))
        return pts, labels, "rectangular"
    # cross: enclosing square minus corner blocks, snake-ordered Gray index
    side = 3 << ((nbits - 3) // 2)
    corner = 1 << ((nbits - 5) // 2)
    pts = []
    for im in range(side):
        row = []
        for re in range(side):
            in_corner = (re < corner or re >= side - corner) and (im < corner or im >= side - corner)
            if not in_corner:
                row.append((re, im))
        pts.extend(row if im % 2 == 0 else row[::-1])
    labels = [gray(i) for i in range(len(pts))]
    return pts, labels, "cross"


@dataclass(frozen=True)
class QamSpec:
    eta: int
    shape: str
    points: np.ndarray = field(repr=False)  # (2^eta, 2) nonnegative integers
    labels: np.ndarray = field(repr=False)  # integer label per point
    centering_offset: complex = 0j

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def energy(self) -> float:
        z = self.points[:, 0] + 1j * self.points[:, 1] - self.centering_offset
        return float(np.mean(np.abs(z) ** 2))

    @property
    def complex_points(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]


@lru_cache(maxsize=None)
def _qam(nbits: int) -> QamSpec:
    pts, labels, shape = _grid(nbits)
    p = np.array(pts, dtype=np.int64).reshape(-1, 2)
    p.setflags(write=False)
    lab = np.array(labels, dtype=np.int64)
    lab.setflags(write=False)
    centre = complex(p[:, 0].mean(), p[:, 1].mean())
    return QamSpec(eta=nbits, shape=shape, points=p, labels=lab, centering_offset=centre)


def carve_qam(eta: int) -> QamSpec:
    if eta not in SUPPORTED_ETA:
        raise ConstellationError(f"unsupported QAM exponent {eta!r}; use one of {SUPPORTED_ETA}")
    return _qam(int(eta))


class PairLabeler:
    """Bijection between integer labels and points of one QAM-like grid, with nearest-point fallback."""

    def __init__(self, spec: QamSpec):
        self.spec = spec
        self.nbits = spec.eta
        pts = spec.points
        self.width = int(pts[:, 0].max()) + 1
        self.height = int(pts[:, 1].max()) + 1
        self.index = -np.ones((self.width, self.height), dtype=np.int64)
        self.by_label = np.zeros((1 << self.nbits, 2), dtype=np.int64)
        for (re, im), lab in zip(pts, spec.labels):
            self.index[re, im] = lab
            self.by_label[lab] = (re, im)
        if len(set(spec.labels.tolist())) != len(spec.labels):  # pragma: no cover
            raise ConstellationError("labels are not unique")

    def point(self, label: np.ndarray) -> np.ndarray:
        return self.by_label[np.asarray(label, dtype=np.int64)]

    def label(self, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Labels of integer pairs (..., 2); off-grid pairs go to the nearest grid point.

        Returns (labels, inside) where inside flags pairs that were already on the grid.
        """
        pairs = np.asarray(pairs, dtype=np.int64)
        re = np.clip(pairs[..., 0], 0, self.width - 1)
        im = np.clip(pairs[..., 1], 0, self.height - 1)
        lab = self.index[re, im]
        inside = (re == pairs[..., 0]) & (im == pairs[..., 1]) & (lab >= 0)
        missing = lab < 0
        if np.any(missing):
            pts = self.spec.points
            for idx in zip(*np.nonzero(missing)):
                q = pairs[idx]
                d = ((pts - q) ** 2).sum(axis=1)
                lab[idx] = self.spec.labels[int(np.argmin(d))]
        return lab, inside


def _bits_to_ints(bits: np.ndarray, width: int) -> np.ndarray:
    """(..., k*width) bits -> (..., k) ints, each group LSB first."""
    bits = np.asarray(bits, dtype=np.int64)
    g = bits.reshape(bits.shape[:-1] + (-1, width))
    return (g << np.arange(width)).sum(axis=-1)


def _ints_to_bits(vals: np.ndarray, width: int) -> np.ndarray:
    vals = np.asarray(vals, dtype=np.int64)
    b = (vals[..., None] >> np.arange(width)) & 1
    return b.reshape(vals.shape[:-1] + (-1,))


def _gf2_span_table(rows: np.ndarray) -> dict[int, tuple[int, ...]]:
    """Codeword key -> generating bit tuple (b0 first) for the binary span of rows."""
    m = rows.shape[0]
    table = {}
    for bits in itertools.product((0, 1), repeat=m):
        word = (np.array(bits, dtype=np.int64) @ rows) % 2 if m else np.zeros(N, dtype=np.int64)
        table[bits_to_int(word)] = bits
    if len(table) != 1 << m:  # pragma: no cover
        raise ConstellationError("coset generator rows are linearly dependent")
    return table


class LatticeConstellation:
    """Finite constellation carved from Lambda_top with coset bits and Gray-labeled offsets.

    A point is x = 2u + (b1 H_c1 xor b2 H_c2) in the code frame; the symbol-frame
    pairs of u = P^-1 w are labeled by b3.
    """

    def __init__(self, h_c1: np.ndarray, h_c2: np.ndarray, eta: int):
        if eta not in SUPPORTED_ETA or eta == 5:
            raise ConstellationError(
                f"lattice constellations need a QAM made of 2x2 blocks; eta={eta!r} is not supported")
        self.eta = eta
        self.h_c1 = np.asarray(h_c1, dtype=np.int64).reshape(-1, N)
        self.h_c2 = np.asarray(h_c2, dtype=np.int64).reshape(-1, N)
        self.n1 = self.h_c1.shape[0]
        self.q2 = self.h_c2.shape[0]
        self.group = eta - 2
        self.q3 = 4 * self.group
        self.blocks = PairLabeler(_qam(self.group))
        self.qam = carve_qam(eta)
        stacked = np.vstack([self.h_c1, self.h_c2])
        self._coset_table = _gf2_span_table(stacked)
        perm = list(gc.SYMBOL_PERMUTATION)
        # symbol-frame coset word for every stacked bit index
        words = np.array([(np.array(b, dtype=np.int64) @ stacked) % 2 if stacked.shape[0] else
                          np.zeros(N, dtype=np.int64)
                          for b in itertools.product((0, 1), repeat=stacked.shape[0])],
                         dtype=np.int64).reshape(-1, N)
        self.coset_words = words  # code frame, row j from bits of j (MSB = b0)
        self.coset_words_sym = words[:, perm]
        mu = self.qam.centering_offset
        self.centering = np.tile([mu.real, mu.imag], 4)

    @property
    def bits_per_point(self) -> int:
        return self.n1 + self.q2 + self.q3

    def coset_index(self, b1, b2) -> np.ndarray:
        bits = np.concatenate([np.asarray(b1, dtype=np.int64).reshape(np.shape(b1)[:-1] + (-1,)),
                               np.asarray(b2, dtype=np.int64).reshape(np.shape(b2)[:-1] + (-1,))],
                              axis=-1)
        m = bits.shape[-1]
        return (bits << np.arange(m - 1, -1, -1)).sum(axis=-1) if m else np.zeros(bits.shape[:-1], np.int64)

    def encode(self, b1, b2, b3) -> np.ndarray:
        """Bits -> code-frame lattice vectors; accepts batches on leading axes."""
        b1 = np.asarray(b1, dtype=np.int64)
        b2 = np.asarray(b2, dtype=np.int64)
        b3 = np.asarray(b3, dtype=np.int64)
        if b1.shape[-1] != self.n1 or b2.shape[-1] != self.q2 or b3.shape[-1] != self.q3:
            raise ConstellationError(
                f"expected ({self.n1}, {self.q2}, {self.q3}) bits, got "
                f"({b1.shape[-1]}, {b2.shape[-1]}, {b3.shape[-1]})")
        j = self.coset_index(b1, b2)
        cs = self.coset_words_sym[j]
        if self.group:
            labels = _bits_to_ints(b3, self.group)
        else:
            labels = np.zeros(b3.shape[:-1] + (4,), dtype=np.int64)
        w = self.blocks.point(labels).reshape(labels.shape[:-1] + (8,))
        s = 2 * w + cs
        return gc.lattice_from_symbols(s)

    def encode_word(self, c: np.ndarray, b3) -> np.ndarray:
        """Code-frame binary word c plus b3 bits -> lattice vector."""
        c = np.asarray(c, dtype=np.int64) % 2
        b3 = np.asarray(b3, dtype=np.int64)
        labels = _bits_to_ints(b3, self.group) if self.group else np.zeros(b3.shape[:-1] + (4,), np.int64)
        w = self.blocks.point(labels).reshape(labels.shape[:-1] + (8,))
        return gc.lattice_from_symbols(2 * w + gc.symbols_from_lattice(c))

    def decode(self, x: np.ndarray):
        """Lattice vector(s) -> (b1, b2, b3, inside).

        Words outside the labeled code, or offsets outside the carved region,
        map to the nearest admissible label; ``inside`` is False for those points.
        """
        x = np.asarray(x, dtype=np.int64)
        flat = x.reshape(-1, N)
        c = flat % 2
        s = gc.symbols_from_lattice(flat)
        w = (s - gc.symbols_from_lattice(c)) // 2
        labels, inside_pairs = self.blocks.label(w.reshape(-1, 4, 2))
        inside = inside_pairs.all(axis=-1)
        m = self.n1 + self.q2
        coset_bits = np.zeros((flat.shape[0], m), dtype=np.int64)
        for i, row in enumerate(c):
            key = bits_to_int(row)
            bits = self._coset_table.get(key)
            if bits is None:
                inside[i] = False
                bits = self._nearest_coset_bits(row)
            coset_bits[i] = bits
        b3 = _ints_to_bits(labels, self.group) if self.group else np.zeros((flat.shape[0], 0), np.int64)
        lead = x.shape[:-1]
        return (coset_bits[:, :self.n1].reshape(lead + (self.n1,)),
                coset_bits[:, self.n1:].reshape(lead + (self.q2,)),
                b3.reshape(lead + (self.q3,)),
                inside.reshape(lead))

    def _nearest_coset_bits(self, word) -> tuple[int, ...]:
        d = (self.coset_words != word).sum(axis=1)
        j = int(np.argmin(d))
        m = self.n1 + self.q2
        return tuple((j >> (m - 1 - i)) & 1 for i in range(m))

    def to_channel_vector(self, x: np.ndarray) -> np.ndarray:
        """Centered symbol-frame reals (input to R) of code-frame lattice vectors."""
        return gc.symbols_from_lattice(np.asarray(x, dtype=float)) - self.centering


def label_constellation(partition: PartitionConfig, eta: int | None = None) -> LatticeConstellation:
    """Labeled constellation for Lambda_ell0, coset bits b1 -> [C_ell0 / C_ell0+ell], b2 -> [C_ell0+ell / C_4]."""
    eta = partition.eta if eta is None else eta
    return LatticeConstellation(partition.h_c1, partition.h_c2, eta)


def subcode_constellation(level: int, eta: int) -> LatticeConstellation:
    """Labeled constellation of Lambda_level alone (no trellis bits)."""
    from .lattice_partition import coset_generator_matrix
    h_c2 = np.zeros((0, N), np.int64) if level == 4 else coset_generator_matrix(level, 4 - level)
    return LatticeConstellation(np.zeros((0, N), np.int64), h_c2, eta)


@dataclass(frozen=True)
class UncodedProfile:
    bpcu: int
    per_symbol_eta: tuple[int, int, int, int]

    @property
    def per_symbol_qam(self) -> tuple[int, ...]:
        return tuple(1 << e for e in self.per_symbol_eta)

    @property
    def energy(self) -> float:
        return float(np.mean([carve_qam(e).energy for e in self.per_symbol_eta]))

    @property
    def q(self) -> float:
        return sum(self.per_symbol_eta) / 4


_UNCODED = {
    5: (2, 3, 2, 3),
    6: (3, 3, 3, 3),
    7: (3, 4, 3, 4),
    10: (5, 5, 5, 5),
    12: (6, 6, 6, 6),
}


def uncoded_profile(bpcu: int) -> UncodedProfile:
    if bpcu not in _UNCODED:
        raise ConstellationError(f"no uncoded profile for {bpcu!r} bpcu; have {sorted(_UNCODED)}")
    return UncodedProfile(bpcu=int(bpcu), per_symbol_eta=_UNCODED[bpcu])


class UncodedConstellation:
    """Independent QAM per information symbol; points live directly in the symbol frame."""

    def __init__(self, profile: UncodedProfile):
        self.profile = profile
        self.etas = profile.per_symbol_eta
        self.labelers = [PairLabeler(carve_qam(e)) for e in self.etas]
        self.bits_per_point = sum(self.etas)
        self.centering = np.concatenate(
            [[carve_qam(e).centering_offset.real, carve_qam(e).centering_offset.imag] for e in self.etas])
        self._splits = np.cumsum((0,) + self.etas)

    def encode(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        if bits.shape[-1] != self.bits_per_point:
            raise ConstellationError(f"expected {self.bits_per_point} bits, got {bits.shape[-1]}")
        out = np.empty(bits.shape[:-1] + (8,), dtype=np.int64)
        for i, lab in enumerate(self.labelers):
            chunk = bits[..., self._splits[i]:self._splits[i + 1]]
            v = (chunk << np.arange(self.etas[i])).sum(axis=-1)
            out[..., 2 * i:2 * i + 2] = lab.point(v)
        return out

    def decode(self, s) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=np.int64)
        parts, inside = [], np.ones(s.shape[:-1], dtype=bool)
        for i, lab in enumerate(self.labelers):
            v, ok = lab.label(s[..., 2 * i:2 * i + 2])
            parts.append((v[..., None] >> np.arange(self.etas[i])) & 1)
            inside &= ok
        return np.concatenate(parts, axis=-1), inside

    def to_channel_vector(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(s, dtype=float) - self.centering
