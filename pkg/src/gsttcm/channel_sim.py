"""2x2 slow Rayleigh fading channel, AWGN and SNR bookkeeping.

Randomness comes from Philox streams keyed by (master seed, stream tag, frame
index), so a frame's channel, noise and payload do not depend on which other
frames were simulated or in what order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

N_T = 2
N_R = 2

STREAM_CHANNEL = 1
STREAM_NOISE = 2
STREAM_PAYLOAD = 3


def frame_rng(seed: int, frame: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(frame)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChannelRealization:
    H: np.ndarray
    draw_id: tuple = ()


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ValueError("sigma2 must be nonnegative")

    @property
    def n0(self) -> float:
        return 2.0 * self.sigma2


@dataclass(frozen=True)
class SnrPoint:
    snr_db: float
    energy_per_symbol: float
    bits_per_symbol: float

    @property
    def eb(self) -> float:
        return self.energy_per_symbol / self.bits_per_symbol

    @property
    def sigma2(self) -> float:
        return sigma2_from_snr(self.snr_db, self.eb)


def sigma2_from_snr(snr_db: float, eb: float, n_t: int = N_T) -> float:
    """sigma^2 = (n_T E_b / 2) 10^(-SNR/10)."""
    return n_t * eb / 2.0 * 10.0 ** (-snr_db / 10.0)


def snr_from_sigma2(sigma2: float, eb: float, n_t: int = N_T) -> float:
    return 10.0 * math.log10(n_t * eb / (2.0 * sigma2))


def ebn0_db(snr_db: float, n_t: int = N_T) -> float:
    """E_b/N_0 in dB corresponding to SNR = n_T E_b / N_0."""
    return snr_db - 10.0 * math.log10(n_t)


def draw_channel(rng: np.random.Generator, draw_id: tuple = ()) -> ChannelRealization:
    """i.i.d. CN(0, 1) entries: real and imaginary parts each of variance 1/2."""
    g = rng.standard_normal((2, N_R, N_T)) * math.sqrt(0.5)
    return ChannelRealization(H=g[0] + 1j * g[1], draw_id=draw_id)


def draw_channels(rng: np.random.Generator, count: int) -> np.ndarray:
    g = rng.standard_normal((2, count, N_R, N_T)) * math.sqrt(0.5)
    return g[0] + 1j * g[1]


def real_channel_matrix(H: np.ndarray) -> np.ndarray:
    """8x8 real form acting on vectorize(X): vectorize(H X) = Hr vectorize(X)."""
    H = np.asarray(H, dtype=complex)
    blk = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            h = H[i, j]
            blk[2 * i, 2 * j] = h.real
            blk[2 * i, 2 * j + 1] = -h.imag
            blk[2 * i + 1, 2 * j] = h.imag
            blk[2 * i + 1, 2 * j + 1] = h.real
    out = np.zeros((8, 8))
    out[:4, :4] = blk
    out[4:, 4:] = blk
    return out


def draw_noise(rng: np.random.Generator, shape: tuple, sigma2: float) -> np.ndarray:
    g = rng.standard_normal((2,) + tuple(shape)) * math.sqrt(sigma2)
    return g[0] + 1j * g[1]


def transmit(x_seq: np.ndarray, H: np.ndarray, noise: NoiseModel,
             rng: np.random.Generator | None = None, z: np.ndarray | None = None) -> np.ndarray:
    """Y_t = H X_t + Z_t for a (L, 2, 2) codeword sequence.

    Pass ``z`` to reuse a frozen noise realization (scaled to unit variance per
    real dimension); otherwise noise is drawn from ``rng``.
    """
    x_seq = np.asarray(x_seq, dtype=complex)
    y = np.einsum("ij,tjk->tik", H, x_seq)
    if noise.sigma2 == 0:
        return y
    if z is None:
        if rng is None:
            raise ValueError("need an rng or a frozen noise array")
        z = draw_noise(rng, x_seq.shape, 1.0)
    return y + math.sqrt(noise.sigma2) * z
