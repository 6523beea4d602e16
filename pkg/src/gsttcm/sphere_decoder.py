"""Closest lattice point search (Schnorr-Euchner enumeration) and coset decoding.

The search minimizes ||z - R u||^2 over integer u for an upper-triangular R
obtained from a QR factorization of the search basis.  The factorization is
done once per channel realization (:class:`FactoredBasis`) and reused for
every target vector and coset offset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

NODE_LIMIT = 1_000_000
RANK_TOL = 1e-10

STATUS_OK = 0
STATUS_NODE_LIMIT = 1


class DecodeError(RuntimeError):
    """Rank-deficient basis or aborted search."""


@numba.njit(cache=True, nogil=True)
def _lex_less(a, b):
    for i in range(a.shape[0]):
        if a[i] < b[i]:
            return True
        if a[i] > b[i]:
            return False
    return False


@numba.njit(cache=True, nogil=True)
def _se_search(rm, z, best_u, node_limit, bound=np.inf):
    """Enumerate ||z - rm u||^2; best_u holds the seed on entry and the optimum on exit.

    The initial radius is the seed's metric, or ``bound`` when that is smaller;
    in the latter case best_u is left untouched if nothing inside ``bound`` exists.
    Returns (metric, nodes, status, found).
    """
    n = z.shape[0]
    # seed radius from the given point
    d0 = 0.0
    for i in range(n):
        acc = z[i]
        for j in range(i, n):
            acc -= rm[i, j] * best_u[j]
        d0 += acc * acc
    best = d0 * (1.0 + 1e-12) + 1e-300
    seeded = True
    if bound < best:
        best = bound
        seeded = False
    found = False
    u = np.zeros(n, dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    center = np.zeros(n)
    dist = np.zeros(n + 1)
    nodes = 0

    k = n - 1
    center[k] = z[k] / rm[k, k]
    u[k] = np.int64(np.round(center[k]))
    step[k] = 1 if center[k] >= u[k] else -1
    while True:
        e = (center[k] - u[k]) * rm[k, k]
        nd = dist[k + 1] + e * e
        nodes += 1
        if nodes > node_limit:
            return best, nodes, 1, found
        if nd <= best:
            if k == 0:
                if (not found) or nd < best or (nd == best and _lex_less(u, best_u)):
                    best = nd
                    found = True
                    for i in range(n):
                        best_u[i] = u[i]
                # next sibling at level 0
                u[k] += step[k]
                step[k] = -step[k] - (1 if step[k] > 0 else -1)
            else:
                dist[k] = nd
                k -= 1
                acc = z[k]
                for j in range(k + 1, n):
                    acc -= rm[k, j] * u[j]
                center[k] = acc / rm[k, k]
                u[k] = np.int64(np.round(center[k]))
                step[k] = 1 if center[k] >= u[k] else -1
        else:
            k += 1
            if k == n:
                break
            u[k] += step[k]
            step[k] = -step[k] - (1 if step[k] > 0 else -1)
    if seeded and not found:
        # rounding kept the seed itself just outside its own radius
        return d0, nodes, 0, True
    return best, nodes, 0, found


@numba.njit(cache=True, nogil=True)
def _seed_point(rm, z, out):
    """Babai-free seed: rounded least-squares solution of rm u = z (back substitution)."""
    n = z.shape[0]
    ls = np.zeros(n)
    for i in range(n - 1, -1, -1):
        acc = z[i]
        for j in range(i + 1, n):
            acc -= rm[i, j] * ls[j]
        ls[i] = acc / rm[i, i]
    for i in range(n):
        out[i] = np.int64(np.round(ls[i]))


@numba.njit(cache=True, nogil=True)
def _closest(rm, z, node_limit):
    u = np.zeros(z.shape[0], dtype=np.int64)
    _seed_point(rm, z, u)
    d, nodes, status, found = _se_search(rm, z, u, node_limit, np.inf)
    # exact metric of the returned point
    n = z.shape[0]
    m = 0.0
    for i in range(n):
        acc = z[i]
        for j in range(i, n):
            acc -= rm[i, j] * u[j]
        m += acc * acc
    return u, m, nodes, status


@numba.njit(cache=True, nogil=True)
def _closest_batch(rm, zs, node_limit):
    t_count = zs.shape[0]
    n = zs.shape[1]
    pts = np.zeros((t_count, n), dtype=np.int64)
    met = np.zeros(t_count)
    total = 0
    status = 0
    for t in range(t_count):
        u, m, nodes, st = _closest(rm, zs[t], node_limit)
        pts[t] = u
        met[t] = m
        total += nodes
        if st != 0:
            status = st
    return pts, met, total, status


@numba.njit(cache=True, nogil=True)
def _coset_batch(rm2, zs, shifts, node_limit):
    """For every target t and coset shift j: closest point of zs[t] - shifts[j] on rm2."""
    t_count = zs.shape[0]
    j_count = shifts.shape[0]
    n = zs.shape[1]
    pts = np.zeros((t_count, j_count, n), dtype=np.int64)
    met = np.zeros((t_count, j_count))
    target = np.zeros(n)
    total = 0
    status = 0
    for t in range(t_count):
        for j in range(j_count):
            for i in range(n):
                target[i] = zs[t, i] - shifts[j, i]
            u, m, nodes, st = _closest(rm2, target, node_limit)
            pts[t, j] = u
            met[t, j] = m
            total += nodes
            if st != 0:
                status = st
    return pts, met, total, status


@numba.njit(cache=True, nogil=True)
def _group_min_batch(rm2, zs, shifts, group, node_limit):
    """Minimum over consecutive groups of coset shifts, sharing the search radius.

    Returns best points (T, G, n), metrics (T, G), winning member (T, G), nodes, status.
    """
    t_count = zs.shape[0]
    n = zs.shape[1]
    g_count = shifts.shape[0] // group
    pts = np.zeros((t_count, g_count, n), dtype=np.int64)
    met = np.zeros((t_count, g_count))
    arg = np.zeros((t_count, g_count), dtype=np.int64)
    target = np.zeros(n)
    u = np.zeros(n, dtype=np.int64)
    total = 0
    status = 0
    for t in range(t_count):
        for g in range(g_count):
            best = np.inf
            for m in range(group):
                j = g * group + m
                for i in range(n):
                    target[i] = zs[t, i] - shifts[j, i]
                _seed_point(rm2, target, u)
                d, nodes, st, found = _se_search(rm2, target, u, node_limit, best)
                total += nodes
                if st != 0:
                    status = st
                if found and (d < best or m == 0):
                    # exact metric of the new candidate
                    e = 0.0
                    for i in range(n):
                        acc = target[i]
                        for k in range(i, n):
                            acc -= rm2[i, k] * u[k]
                        e += acc * acc
                    if e < best:
                        best = e
                        arg[t, g] = m
                        for i in range(n):
                            pts[t, g, i] = u[i]
            met[t, g] = best
    return pts, met, arg, total, status


@dataclass(frozen=True)
class SearchBasis:
    matrix: np.ndarray
    offset: np.ndarray | None = None


@dataclass(frozen=True)
class DecodeResult:
    point: np.ndarray
    metric: float
    coset_index: int | None = None
    nodes: int = 0


class FactoredBasis:
    """QR factorization of a square search basis M (columns = lattice generators)."""

    def __init__(self, matrix: np.ndarray):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DecodeError("search basis must be square")
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[-1] < RANK_TOL:
            raise DecodeError(f"rank-deficient basis (smallest singular value {sv[-1]:.3g})")
        self.matrix = m
        q, r = np.linalg.qr(m)
        self.q = q
        self.r = np.ascontiguousarray(r)
        self.r2 = np.ascontiguousarray(2.0 * r)

    def rotate(self, y: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(np.asarray(y, dtype=float) @ self.q)


def _check(status: int) -> None:
    if status != STATUS_OK:
        raise DecodeError(f"sphere search exceeded {NODE_LIMIT} visited nodes")


def closest_point(y, basis, node_limit: int = NODE_LIMIT) -> DecodeResult:
    """Integer u minimizing ||y - M u - offset||^2 (ties: lexicographically smallest u).

    ``basis`` may be a :class:`SearchBasis`, a :class:`FactoredBasis` or a raw matrix.
    """
    offset = None
    if isinstance(basis, SearchBasis):
        offset = basis.offset
        basis = basis.matrix
    fb = basis if isinstance(basis, FactoredBasis) else FactoredBasis(basis)
    y = np.asarray(y, dtype=float)
    if offset is not None:
        y = y - offset
    u, m, nodes, status = _closest(fb.r, fb.rotate(y), node_limit)
    _check(status)
    metric = float(np.sum((y - fb.matrix @ u) ** 2))
    return DecodeResult(point=u, metric=metric, nodes=int(nodes))


def closest_points(ys, basis, node_limit: int = NODE_LIMIT):
    """Batch version of :func:`closest_point`; returns (points, metrics, nodes)."""
    fb = basis if isinstance(basis, FactoredBasis) else FactoredBasis(basis)
    zs = fb.rotate(np.atleast_2d(ys))
    pts, met, nodes, status = _closest_batch(fb.r, zs, node_limit)
    _check(status)
    return pts, met, int(nodes)


def coset_metrics(ys, basis, cosets, node_limit: int = NODE_LIMIT):
    """Distances from each y to each coset c_j + 2Z^8 (images under M).

    Returns (points x = 2u + c_j of shape (T, J, 8), metrics (T, J), nodes).
    """
    fb = basis if isinstance(basis, FactoredBasis) else FactoredBasis(basis)
    cosets = np.asarray(cosets, dtype=np.int64).reshape(-1, fb.matrix.shape[1])
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    zs = fb.rotate(ys)
    shifts = np.ascontiguousarray(cosets @ fb.r.T, dtype=float)
    pts, met, nodes, status = _coset_batch(fb.r2, zs, shifts, node_limit)
    _check(status)
    return 2 * pts + cosets[None, :, :], met, int(nodes)


def grouped_coset_minima(ys, basis, cosets, group: int, node_limit: int = NODE_LIMIT):
    """Minimum distance to each union of ``group`` consecutive cosets c_j + 2Z^8.

    Equivalent to taking the minimum of :func:`coset_metrics` over each group,
    but the search radius is carried over between members of a group.
    Returns (points (T, G, 8), metrics (T, G), nodes).
    """
    fb = basis if isinstance(basis, FactoredBasis) else FactoredBasis(basis)
    cosets = np.asarray(cosets, dtype=np.int64).reshape(-1, fb.matrix.shape[1])
    if cosets.shape[0] % group:
        raise ValueError("coset count must be a multiple of the group size")
    zs = fb.rotate(np.atleast_2d(np.asarray(ys, dtype=float)))
    shifts = np.ascontiguousarray(cosets @ fb.r.T, dtype=float)
    pts, met, arg, nodes, status = _group_min_batch(fb.r2, zs, shifts, group, node_limit)
    _check(status)
    g_idx = np.arange(cosets.shape[0] // group)[None, :] * group + arg
    return 2 * pts + cosets[g_idx], met, int(nodes)


def coset_decode(y, channel_basis, cosets, node_limit: int = NODE_LIMIT):
    """Best coset and point for one received vector; also returns all per-coset metrics."""
    pts, met, nodes = coset_metrics(y, channel_basis, cosets, node_limit)
    met = met[0]
    j = int(np.argmin(met))
    return DecodeResult(point=pts[0, j], metric=float(met[j]), coset_index=j, nodes=nodes), met


def branch_metric_table(y_t, channel_basis, partition, node_limit: int = NODE_LIMIT):
    """Metrics of the 4^ell trellis cosets of Lambda_ell0 / Lambda_ell0+ell.

    Each trellis coset is the union of 4^(4-ell0-ell) cosets of 2Z^8 and its metric
    is the minimum over that union.  Returns (metrics (T, 4^ell), points
    (T, 4^ell, 8), inner decode count, nodes).
    """
    from .constellation import label_constellation
    lc = label_constellation(partition, partition.eta)
    ys = np.atleast_2d(y_t)
    n_c = partition.n_cosets
    n_sub = lc.coset_words.shape[0] // n_c
    pts, met, nodes = grouped_coset_minima(ys, channel_basis, lc.coset_words, n_sub, node_limit)
    return met, pts, ys.shape[0] * n_c * n_sub, nodes
