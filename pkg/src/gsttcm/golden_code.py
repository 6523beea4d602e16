"""Golden code algebra: codewords, vectorization, rotation R, ideal matrix B."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THETA = (1.0 + math.sqrt(5.0)) / 2.0
THETA_BAR = 1.0 - THETA
ALPHA = 1.0 + 1.0j - 1.0j * THETA
ALPHA_BAR = 1.0 + 1.0j * (1.0 - THETA_BAR)
SCALE = 1.0 / math.sqrt(5.0)

# Symbol-frame coordinate i is code-frame coordinate SYMBOL_PERMUTATION[i]:
#   s = x[SYMBOL_PERMUTATION],  s = (Re a, Im a, Re b, Im b, Re c, Im c, Re d, Im d).
# With this identification the Construction-A lattices of the binary chain
# coincide with the right ideals generated by B^k (see README, "Coordinate frames").
SYMBOL_PERMUTATION = (0, 1, 4, 6, 3, 2, 5, 7)
_INVERSE_PERMUTATION = tuple(int(i) for i in np.argsort(SYMBOL_PERMUTATION))


class GoldenCodeError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianInt:
    re: int
    im: int

    def __add__(self, other: "GaussianInt") -> "GaussianInt":
        return GaussianInt(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "GaussianInt") -> "GaussianInt":
        return GaussianInt(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "GaussianInt") -> "GaussianInt":
        return GaussianInt(self.re * other.re - self.im * other.im,
                           self.re * other.im + self.im * other.re)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def coerce(cls, z) -> "GaussianInt":
        if isinstance(z, GaussianInt):
            return z
        z = complex(z)
        if z.real != int(z.real) or z.imag != int(z.imag):
            raise GoldenCodeError(f"{z!r} is not a Gaussian integer")
        return cls(int(z.real), int(z.imag))


@dataclass(frozen=True)
class GoldenCodeword:
    entries: np.ndarray
    symbols: tuple | None = None

    def det_metric(self) -> float:
        return det_metric(self.entries)


def _as_complex(z) -> complex:
    return complex(z) if not isinstance(z, GaussianInt) else complex(z.re, z.im)


def encode(a, b, c, d) -> GoldenCodeword:
    """Golden codeword of the information symbols a, b, c, d (normalized by 1/sqrt(5))."""
    a, b, c, d = (_as_complex(z) for z in (a, b, c, d))
    x = SCALE * np.array(
        [[ALPHA * (a + b * THETA), ALPHA * (c + d * THETA)],
         [1j * ALPHA_BAR * (c + d * THETA_BAR), ALPHA_BAR * (a + b * THETA_BAR)]],
        dtype=complex,
    )
    syms = None
    try:
        syms = tuple(GaussianInt.coerce(z) for z in (a, b, c, d))
    except GoldenCodeError:
        pass
    return GoldenCodeword(entries=x, symbols=syms)


def encode_many(symbols: np.ndarray) -> np.ndarray:
    """Batch encode: symbols (..., 4) complex -> codewords (..., 2, 2)."""
    s = np.asarray(symbols, dtype=complex)
    a, b, c, d = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
    out = np.empty(s.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = ALPHA * (a + b * THETA)
    out[..., 0, 1] = ALPHA * (c + d * THETA)
    out[..., 1, 0] = 1j * ALPHA_BAR * (c + d * THETA_BAR)
    out[..., 1, 1] = ALPHA_BAR * (a + b * THETA_BAR)
    return SCALE * out


def vectorize(x: np.ndarray) -> np.ndarray:
    """[Re x11, Im x11, Re x21, Im x21, Re x12, Im x12, Re x22, Im x22]; batches on leading axes."""
    x = np.asarray(x)
    cols = np.stack([x[..., 0, 0], x[..., 1, 0], x[..., 0, 1], x[..., 1, 1]], axis=-1)
    out = np.empty(cols.shape[:-1] + (8,), dtype=float)
    out[..., 0::2] = cols.real
    out[..., 1::2] = cols.imag
    return out


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    z = v[..., 0::2] + 1j * v[..., 1::2]
    out = np.empty(v.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = z[..., 0]
    out[..., 1, 0] = z[..., 1]
    out[..., 0, 1] = z[..., 2]
    out[..., 1, 1] = z[..., 3]
    return out


def real_to_symbols(u: np.ndarray) -> np.ndarray:
    """(Re a, Im a, ..., Im d) -> complex (a, b, c, d)."""
    u = np.asarray(u)
    return u[..., 0::2] + 1j * u[..., 1::2]


def symbols_to_real(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    out = np.empty(s.shape[:-1] + (8,), dtype=float)
    out[..., 0::2] = s.real
    out[..., 1::2] = s.imag
    return out


def rotation_matrix() -> np.ndarray:
    """R with vectorize(encode(a, b, c, d)) = R u, u = (Re a, Im a, ..., Im d)."""
    t, tb = THETA, THETA_BAR
    r = np.array([
        [1, -tb, t, 1, 0, 0, 0, 0],
        [tb, 1, -1, t, 0, 0, 0, 0],
        [0, 0, 0, 0, -t, -1, 1, -tb],
        [0, 0, 0, 0, 1, -t, tb, 1],
        [0, 0, 0, 0, 1, -tb, t, 1],
        [0, 0, 0, 0, tb, 1, -1, t],
        [1, -t, tb, 1, 0, 0, 0, 0],
        [t, 1, -1, tb, 0, 0, 0, 0],
    ], dtype=float)
    return SCALE * r


def symbols_from_lattice(x: np.ndarray) -> np.ndarray:
    """Code-frame lattice vector(s) -> symbol-frame integer vector(s)."""
    return np.asarray(x)[..., list(SYMBOL_PERMUTATION)]


def lattice_from_symbols(s: np.ndarray) -> np.ndarray:
    return np.asarray(s)[..., list(_INVERSE_PERMUTATION)]


def permutation_matrix() -> np.ndarray:
    """P with P x = symbols_from_lattice(x)."""
    p = np.zeros((8, 8))
    p[np.arange(8), list(SYMBOL_PERMUTATION)] = 1.0
    return p


def lattice_generator() -> np.ndarray:
    """R P: maps a code-frame lattice vector to the vectorized codeword."""
    return rotation_matrix() @ permutation_matrix()


B_MATRIX = np.array([[1j * (1 - THETA), 1 - THETA],
                     [1j * THETA, 1j * THETA]], dtype=complex)
B_POWERS = {k: np.linalg.matrix_power(B_MATRIX, k) for k in range(0, 5)}

if abs(np.linalg.det(B_MATRIX) - (1 + 1j)) > 1e-12:  # pragma: no cover
    raise RuntimeError("det(B) != 1 + i")


def subcode_codeword(x, k: int) -> np.ndarray:
    """X B^k (unnormalized power of B)."""
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= 4:
        raise GoldenCodeError(f"subcode index must be in 1..4, got {k!r}")
    if isinstance(x, GoldenCodeword):
        x = x.entries
    return np.asarray(x) @ B_POWERS[int(k)]


def det_metric(x) -> float:
    """det(X X^H) = |det X|^2; batches over leading axes."""
    if isinstance(x, GoldenCodeword):
        x = x.entries
    x = np.asarray(x)
    d = x[..., 0, 0] * x[..., 1, 1] - x[..., 0, 1] * x[..., 1, 0]
    out = np.abs(d) ** 2
    return float(out) if np.ndim(out) == 0 else out


def det_numerator(s: np.ndarray) -> np.ndarray:
    """Exact integer 5 |det X|^2 for symbol-frame integer vectors s (..., 8).

    det = (alpha alpha_bar / 5) (N(a + b theta) - i N(c + d theta)) with
    N(x + y theta) = x^2 + x y - y^2 and |alpha alpha_bar|^2 = 5.
    """
    s = np.asarray(s, dtype=np.int64)
    a = s[..., 0] + 1j * s[..., 1]
    b = s[..., 2] + 1j * s[..., 3]
    c = s[..., 4] + 1j * s[..., 5]
    d = s[..., 6] + 1j * s[..., 7]
    n1 = a * a + a * b - b * b
    n2 = c * c + c * d - d * d
    z = n1 - 1j * n2
    re = np.rint(z.real).astype(np.int64)
    im = np.rint(z.imag).astype(np.int64)
    return re * re + im * im
