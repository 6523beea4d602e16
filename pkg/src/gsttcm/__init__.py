"""Golden space-time trellis coded modulation for 2x2 MIMO.

Golden code algebra, Construction-A lattice partitioning, quaternary trellis
encoding, sphere-decoder driven Viterbi decoding and a slow Rayleigh fading
Monte-Carlo harness.
"""

__version__ = "0.1.0"
