"""Binary code chain C0 > C1 > C2 > C3 > C4 and Construction A.

All vectors here live in the *code frame*: the 8 integer coordinates in which
the generator matrices below are written.  Mapping a code-frame vector to the
information symbols (a, b, c, d) of a Golden codeword is handled by
:mod:`gsttcm.golden_code` (see ``SYMBOL_PERMUTATION`` there).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

N = 8

_G1 = (
    (1, 0, 0, 1, 0, 0, 0, 0),
    (0, 1, 0, 1, 0, 0, 0, 0),
    (0, 0, 1, 1, 0, 0, 0, 0),
    (0, 0, 0, 0, 1, 0, 0, 1),
    (0, 0, 0, 0, 0, 1, 0, 1),
    (0, 0, 0, 0, 0, 0, 1, 1),
)
_G2 = (
    (0, 1, 0, 1, 0, 1, 0, 1),
    (0, 0, 1, 1, 0, 0, 1, 1),
    (0, 0, 0, 0, 1, 1, 1, 1),
    (1, 1, 1, 1, 1, 1, 1, 1),
)
_G3 = (
    (0, 0, 0, 0, 1, 1, 1, 1),
    (1, 1, 1, 1, 1, 1, 1, 1),
)

# h^(k)_1, h^(k)_2 for the quotient [C_k / C_{k+1}], k = 0..3
COSET_ROWS = (
    ((0, 0, 0, 0, 0, 0, 0, 1), (0, 0, 0, 1, 0, 0, 0, 0)),
    ((0, 0, 0, 0, 0, 1, 0, 1), (0, 0, 0, 0, 0, 0, 1, 1)),
    ((0, 1, 0, 1, 0, 1, 0, 1), (0, 0, 1, 1, 0, 0, 1, 1)),
    ((0, 0, 0, 0, 1, 1, 1, 1), (1, 1, 1, 1, 1, 1, 1, 1)),
)


class PartitionError(ValueError):
    """Invalid level or partition configuration."""


def bits_to_int(v) -> int:
    """Pack an 8-bit word (coordinate 0 first) into an int, coordinate i -> bit i."""
    out = 0
    for i, b in enumerate(v):
        if int(b) & 1:
            out |= 1 << i
    return out


def int_to_bits(m: int, n: int = N) -> np.ndarray:
    return np.array([(m >> i) & 1 for i in range(n)], dtype=np.int64)


@dataclass(frozen=True)
class BinaryCode:
    level: int
    generator: np.ndarray = field(repr=False)
    n: int = N

    @property
    def k(self) -> int:
        return int(self.generator.shape[0])

    @property
    def codewords(self) -> np.ndarray:
        return _codeword_table(self.level)

    @property
    def codeword_set(self) -> frozenset:
        return _codeword_keys(self.level)

    def __len__(self) -> int:
        return 1 << self.k

    def contains(self, word) -> bool:
        return bits_to_int(np.asarray(word) % 2) in self.codeword_set

    def min_weight(self) -> int | None:
        w = self.codewords.sum(axis=1)
        w = w[w > 0]
        return int(w.min()) if w.size else None


def _raw_generator(level: int) -> np.ndarray:
    if level == 0:
        return np.eye(N, dtype=np.int64)
    if level == 4:
        return np.zeros((0, N), dtype=np.int64)
    return np.array({1: _G1, 2: _G2, 3: _G3}[level], dtype=np.int64)


def _span(gen: np.ndarray) -> np.ndarray:
    k = gen.shape[0]
    if k == 0:
        return np.zeros((1, N), dtype=np.int64)
    coeffs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int64)
    return (coeffs @ gen) % 2


@lru_cache(maxsize=None)
def _codeword_table(level: int) -> np.ndarray:
    table = _span(_raw_generator(level))
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _codeword_keys(level: int) -> frozenset:
    return frozenset(bits_to_int(c) for c in _codeword_table(level))


@lru_cache(maxsize=None)
def membership_mask(level: int) -> np.ndarray:
    """Boolean table of length 256: entry m is True iff word m lies in C_level."""
    mask = np.zeros(256, dtype=bool)
    mask[list(_codeword_keys(level))] = True
    mask.setflags(write=False)
    return mask


def _check_level(level: int) -> None:
    if not isinstance(level, (int, np.integer)) or not 0 <= level <= 4:
        raise PartitionError(f"partition level must be in 0..4, got {level!r}")


def code_at_level(level: int) -> BinaryCode:
    _check_level(level)
    gen = _raw_generator(level)
    gen.setflags(write=False)
    return BinaryCode(level=int(level), generator=gen)


def _check_pair(ell0: int, ell: int) -> None:
    if not (0 <= ell0 and 1 <= ell and ell0 + ell <= 4):
        raise PartitionError(f"need 0 <= ell0, 1 <= ell, ell0 + ell <= 4; got ({ell0}, {ell})")


def coset_generator_matrix(ell0: int, ell: int) -> np.ndarray:
    """Stacked rows h^(ell0)_1, h^(ell0)_2, ..., h^(ell0+ell-1)_2 (shape 2*ell x 8)."""
    _check_pair(ell0, ell)
    rows = [r for k in range(ell0, ell0 + ell) for r in COSET_ROWS[k]]
    return np.array(rows, dtype=np.int64)


def coset_leader(bits, ell0: int, ell: int) -> np.ndarray:
    """bits (length 2*ell, b0 first) times the coset generator matrix over GF(2)."""
    h = coset_generator_matrix(ell0, ell)
    b = np.asarray(bits, dtype=np.int64).reshape(-1)
    if b.size != h.shape[0]:
        raise PartitionError(f"expected {h.shape[0]} bits, got {b.size}")
    return (b @ h) % 2


def all_coset_leaders(ell0: int, ell: int) -> np.ndarray:
    """All 4^ell coset leaders, row j built from the bits of j (b0 = most significant)."""
    h = coset_generator_matrix(ell0, ell)
    m = h.shape[0]
    bits = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.int64)
    return (bits @ h) % 2


def is_in_lattice(v, level: int) -> bool:
    """Construction-A membership: v mod 2 must be a codeword of C_level."""
    _check_level(level)
    return bool(membership_mask(level)[bits_to_int(np.asarray(v, dtype=np.int64) % 2)])


def construction_a(u, c) -> np.ndarray:
    """x = 2u + c with the binary word c lifted to {0, 1}."""
    u = np.asarray(u, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64) % 2
    return 2 * u + c


def word_depth(word) -> int:
    """Deepest level k with word in C_k (4 for the zero word)."""
    key = bits_to_int(np.asarray(word) % 2)
    for level in range(4, -1, -1):
        if membership_mask(level)[key]:
            return level
    raise AssertionError("C_0 contains every word")


@dataclass(frozen=True)
class PartitionConfig:
    """Lambda_{ell0} / Lambda_{ell0+ell} with the per-slot bit budget for QAM exponent eta."""

    ell0: int
    ell: int
    eta: int = 4

    def __post_init__(self):
        _check_pair(self.ell0, self.ell)
        if self.eta < 2:
            raise PartitionError("eta must be at least 2")

    @property
    def level(self) -> int:
        return self.ell0 + self.ell

    @property
    def n_cosets(self) -> int:
        return 4 ** self.ell

    @property
    def q1(self) -> int:
        return 2

    @property
    def q2(self) -> int:
        return 2 * (4 - self.ell - self.ell0)

    @property
    def q3(self) -> int:
        return 4 * (self.eta - 2)

    @property
    def bits_per_slot(self) -> int:
        return self.q1 + self.q2 + self.q3

    @property
    def bpcu(self) -> float:
        return self.bits_per_slot / 2

    @property
    def h_c1(self) -> np.ndarray:
        return coset_generator_matrix(self.ell0, self.ell)

    @property
    def h_c2(self) -> np.ndarray:
        if self.level == 4:
            return np.zeros((0, N), dtype=np.int64)
        return coset_generator_matrix(self.level, 4 - self.level)
