"""Transmission schemes driven by the Monte-Carlo harness.

Each scheme maps a frame payload to L Golden codewords and back, given the
received frame and the channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import golden_code as gc
from .channel_sim import real_channel_matrix
from .constellation import (UncodedConstellation, carve_qam, subcode_constellation,
                            uncoded_profile)
from .sphere_decoder import FactoredBasis, closest_points, coset_metrics
from .trellis_codec import (GstTcmConfig, gst_tcm_encode, receiver_basis, uncentered_observation,
                            viterbi_decode)


@dataclass
class DecodeStats:
    bits: np.ndarray
    nodes: int = 0
    out_of_region: int = 0
    inner_decodes: int = 0


class Scheme:
    name = "scheme"
    frame_len = 1
    bits_per_slot = 0

    @property
    def frame_bits(self) -> int:
        return self.frame_len * self.bits_per_slot

    @property
    def energy(self) -> float:
        raise NotImplementedError

    @property
    def bits_per_symbol(self) -> float:
        return self.bits_per_slot / 4

    @property
    def bpcu(self) -> float:
        return self.bits_per_slot / 2

    def encode(self, bits: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decode(self, Y: np.ndarray, H: np.ndarray) -> DecodeStats:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _codewords(v: np.ndarray) -> np.ndarray:
    return gc.devectorize(v @ gc.rotation_matrix().T)


class UncodedScheme(Scheme):
    """Golden code with independent QAM symbols, lattice-decoded on Z^8."""

    def __init__(self, bpcu: int, frame_len: int = 1):
        self.profile = uncoded_profile(bpcu)
        self.const = UncodedConstellation(self.profile)
        self.frame_len = int(frame_len)
        self.bits_per_slot = self.const.bits_per_point
        self.name = f"uncoded-{bpcu}bpcu"

    @property
    def energy(self) -> float:
        return self.profile.energy

    def encode(self, bits):
        s = self.const.encode(np.asarray(bits).reshape(self.frame_len, -1))
        return _codewords(self.const.to_channel_vector(s))

    def decode(self, Y, H):
        hr = real_channel_matrix(H) @ gc.rotation_matrix()
        ys = gc.vectorize(Y) + hr @ self.const.centering
        pts, _, nodes = closest_points(ys, FactoredBasis(hr))
        bits, inside = self.const.decode(pts)
        return DecodeStats(bits=bits.reshape(-1), nodes=nodes, out_of_region=int((~inside).sum()),
                           inner_decodes=len(pts))

    def describe(self):
        return {"kind": "uncoded", "bpcu": self.profile.bpcu, "frame_len": self.frame_len,
                "qam": list(self.profile.per_symbol_qam)}


class SubcodeScheme(Scheme):
    """Finite constellation of the Golden subcode Lambda_level with QAM exponent eta."""

    def __init__(self, level: int, eta: int, frame_len: int = 1):
        self.level = int(level)
        self.eta = int(eta)
        self.const = subcode_constellation(self.level, self.eta)
        self.frame_len = int(frame_len)
        self.bits_per_slot = self.const.bits_per_point
        self.name = f"subcode-g{level}-{2 ** eta}qam"

    @property
    def energy(self) -> float:
        return carve_qam(self.eta).energy

    def encode(self, bits):
        b = np.asarray(bits).reshape(self.frame_len, -1)
        q2 = self.const.q2
        empty = np.zeros((self.frame_len, 0), dtype=np.int64)
        x = self.const.encode(empty, b[:, :q2], b[:, q2:])
        return _codewords(self.const.to_channel_vector(x))

    def decode(self, Y, H):
        fb = FactoredBasis(receiver_basis(H))
        ys = uncentered_observation(Y, H, self.const.centering)
        pts, met, nodes = coset_metrics(ys, fb, self.const.coset_words)
        j = np.argmin(met, axis=1)
        chosen = pts[np.arange(len(j)), j]
        _, b2, b3, inside = self.const.decode(chosen)
        bits = np.concatenate([b2, b3], axis=1).reshape(-1)
        return DecodeStats(bits=bits, nodes=nodes, out_of_region=int((~inside).sum()),
                           inner_decodes=met.size)

    def describe(self):
        return {"kind": "subcode", "level": self.level, "eta": self.eta, "frame_len": self.frame_len}


class TcmScheme(Scheme):
    def __init__(self, cfg: GstTcmConfig, name: str = "gst-tcm"):
        self.cfg = cfg
        self.frame_len = cfg.frame_len
        self.bits_per_slot = cfg.bits_per_slot
        self.name = name

    @property
    def energy(self) -> float:
        return carve_qam(self.cfg.eta).energy

    def encode(self, bits):
        return gst_tcm_encode(bits, self.cfg).codewords

    def decode(self, Y, H):
        r = viterbi_decode(Y, H, self.cfg)
        return DecodeStats(bits=r.bits, nodes=r.nodes, out_of_region=r.out_of_region,
                           inner_decodes=r.inner_decodes)

    def describe(self):
        p = self.cfg.partition
        return {"kind": "gst_tcm", "ell0": p.ell0, "ell": p.ell, "eta": p.eta,
                "polynomials": [list(q) for q in self.cfg.trellis.polys],
                "frame_len": self.frame_len}
