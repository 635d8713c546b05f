"""Tropical spectral theory of square min-plus matrices.

A square matrix F is read as the weighted adjacency matrix of a directed
graph: F[i,j] is the cost of stepping from node i to node j, and the k-th
tropical power tabulates minimal costs of exactly-k-step walks.  The
tropical eigenvalue equals the minimum mean weight over directed cycles;
it is computed here with Karp's recurrence on walk tables, seeded from a
virtual source with zero-cost edges into every node so that cycles in
every component are covered.  Negative edge weights are fine: the mean
normalization keeps the recurrence well defined.

Eigenvectors come from the Kleene star of the eigenvalue-shifted matrix
(a column at a node lying on a critical cycle), and stabilization of the
power sequence, F^(k+sigma) = sigma*lambda + F^(k) entrywise, is detected
by scanning stored powers for the smallest onset/period pair.

All results are exact (ints and Fractions) for exact inputs; matrices in
float mode are compared with an explicit tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .semiring import (DEFAULT_FLOAT_TOL, INF, TropMatrix, is_exact_array,
                       mat_mul)


class NoFiniteCycleError(ValueError):
    """The graph of the matrix has no cycle of finite weight."""


class MinMeanCycle(NamedTuple):
    eigenvalue: object
    cycle: tuple


@dataclass(frozen=True)
class SpectralResult:
    eigenvalue: object
    critical_cycle: tuple
    eigenvector: np.ndarray
    onset: int | None
    cyclicity: int | None
    strongly_connected: bool


def _exact(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and x != INF and x == int(x):
        return int(x)
    return x


def _ratio(num, den: int):
    num = _exact(num)
    if isinstance(num, float):
        return num / den
    return Fraction(num, den)


def _eq(a, b, tol: float) -> bool:
    if tol == 0.0:
        return a == b
    if a == INF or b == INF:
        return a == b
    return abs(float(a) - float(b)) <= tol


def strongly_connected(f: TropMatrix) -> bool:
    """True when the graph of finite entries is strongly connected."""
    n = f.rows
    adj = np.asarray(f.data != INF)

    def reachable(mat):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v in np.nonzero(mat[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        return seen

    return bool(reachable(adj).all() and reachable(adj.T).all())


def _walk_tables(data: np.ndarray, count: int) -> list:
    """tables[j][v] = minimal cost over exactly-j-step walks ending at v,
    starting anywhere (equivalently: from a virtual zero-cost source)."""
    n = data.shape[0]
    dtype = object if data.dtype == object else data.dtype
    tables = [np.zeros(n, dtype=dtype)]
    for _ in range(count):
        tables.append((tables[-1][:, None] + data).min(axis=0))
    return tables


def _karp_eigenvalue(data: np.ndarray):
    n = data.shape[0]
    tables = _walk_tables(data, n)
    best = None
    for v in range(n):
        end = tables[n][v]
        if end == INF:
            continue
        end = _exact(end)
        worst = None
        for j in range(n):
            ej = tables[j][v]
            if ej == INF:
                continue
            r = _ratio(end - _exact(ej), n - j)
            if worst is None or r > worst:
                worst = r
        if best is None or worst < best:
            best = worst
    if best is None:
        raise NoFiniteCycleError("no admissible cycle")
    return best


def _shift_array(data: np.ndarray, lam) -> np.ndarray:
    """Subtract lam from every finite entry, keeping exact arithmetic exact."""
    if data.dtype == np.int64 and isinstance(lam, int):
        return data - lam
    if data.dtype == np.float64 and not (isinstance(lam, (int, Fraction))
                                         and is_exact_array(data)):
        return data - float(lam)
    out = np.empty(data.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(data.reshape(-1)):
        v = _exact(v)
        flat[i] = INF if v == INF else v - lam
    return out


def _kleene_star(shifted: np.ndarray):
    """All-pairs shortest paths (Floyd-Warshall) of the shifted matrix,
    plus the minimal weight of a closed walk through each node."""
    n = shifted.shape[0]
    dist = shifted.copy()
    for k in range(n):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    star = dist.copy()
    for i in range(n):
        if star[i, i] == INF or star[i, i] > 0:
            star[i, i] = 0
    closed = (shifted + star.T).min(axis=1)
    return star, closed


def _critical_cycle(shifted: np.ndarray, node: int, tol: float) -> tuple:
    """A zero-weight cycle through ``node`` of the shifted matrix, found by
    a backward table on path costs to ``node``."""
    n = shifted.shape[0]
    dtype = object if shifted.dtype == object else np.float64
    g = np.full(n, INF, dtype=dtype)
    g[node] = 0
    tables = [g]
    length = None
    for _ in range(n):
        g = (shifted + g[None, :]).min(axis=1)
        tables.append(g)
        if _eq(g[node], 0, tol):
            length = len(tables) - 1
            break
    if length is None:
        raise RuntimeError("internal error: no zero cycle through critical node")
    cycle = [node]
    cur = node
    for j in range(length, 0, -1):
        for w in range(n):
            if shifted[cur, w] != INF and \
                    _eq(shifted[cur, w] + tables[j - 1][w], tables[j][cur], tol):
                cur = w
                break
        else:
            raise RuntimeError("internal error: broken tight edge chain")
        if j > 1:
            cycle.append(cur)
    return tuple(cycle)


def _default_tol(f: TropMatrix, tol) -> float:
    if tol is not None:
        return tol
    return 0.0 if f.exact else DEFAULT_FLOAT_TOL


def min_mean_cycle(f: TropMatrix, tol: float | None = None) -> MinMeanCycle:
    """Minimum over directed cycles of (total weight / length), with one
    achieving cycle, via Karp's recurrence."""
    if f.rows != f.cols:
        raise ValueError("needs a square matrix")
    tol = _default_tol(f, tol)
    lam = _karp_eigenvalue(f.data)
    shifted = _shift_array(f.data, lam)
    _, closed = _kleene_star(shifted)
    node = None
    for v in range(f.rows):
        if _eq(closed[v], 0, tol * max(1, f.rows)):
            node = v
            break
    if node is None:
        raise RuntimeError("internal error: no critical node found")
    cycle = _critical_cycle(shifted, node, tol * max(1, f.rows))
    if tol == 0.0:
        weight = sum(_exact(f.data[cycle[i], cycle[(i + 1) % len(cycle)]])
                     for i in range(len(cycle)))
        assert _ratio(weight, len(cycle)) == lam
    return MinMeanCycle(lam, cycle)


def trop_eigenvector(f: TropMatrix, eigenvalue, tol: float | None = None) -> np.ndarray:
    """A vector v with F (.) v = eigenvalue + v entrywise: the Kleene-star
    column of the shifted matrix at a node on a critical cycle."""
    tol = _default_tol(f, tol)
    shifted = _shift_array(f.data, eigenvalue)
    star, closed = _kleene_star(shifted)
    node = None
    for v in range(f.rows):
        if _eq(closed[v], 0, tol * max(1, f.rows)):
            node = v
            break
    if node is None:
        raise ValueError(f"{eigenvalue!r} is not the tropical eigenvalue of "
                         "this matrix (no critical node)")
    vec = star[:, node].copy()
    lhs = (f.data + vec[None, :]).min(axis=1)
    rhs = np.array([INF if x == INF else eigenvalue + x for x in vec], dtype=vec.dtype)
    for i in range(f.rows):
        if not _eq(lhs[i], rhs[i], tol * max(1, f.rows)):
            raise RuntimeError("internal error: eigenvector verification failed "
                               f"at row {i}: {lhs[i]!r} != {rhs[i]!r}")
    vec.flags.writeable = False
    return vec


def _power_equal(pk: np.ndarray, pj: np.ndarray, steps: int, lam, tol: float) -> bool:
    """Does pk equal pj with steps*lam added to every finite entry?"""
    if tol > 0.0:
        a = pk.astype(np.float64)
        b = pj.astype(np.float64) + steps * float(lam)
        both_inf = np.isinf(a) & np.isinf(b)
        return bool(np.all(both_inf | (np.abs(a - b) <= tol)))
    if isinstance(lam, Fraction):
        num, den = lam.numerator, lam.denominator
    else:
        num, den = int(lam), 1
    if pk.dtype == object or pj.dtype == object:
        shift = Fraction(steps * num, den)
        shifted = np.array([INF if v == INF else v + shift
                            for v in pj.reshape(-1)], dtype=object).reshape(pj.shape)
        return bool(np.all(pk == shifted))
    # int64/float64 exact: compare den*pk against den*pj + steps*num
    return bool(np.all(den * pk == den * pj + steps * num))


def detect_stabilization(f: TropMatrix, k_max: int | None = None,
                         tol: float | None = None):
    """Smallest (onset k0, period sigma) with F^(k0+sigma) = sigma*lam + F^(k0),
    or None if none occurs within k_max.  The relation is re-verified at two
    further multiples of sigma before being accepted."""
    if f.rows != f.cols:
        raise ValueError("needs a square matrix")
    n = f.rows
    if k_max is None:
        k_max = max(6, 4 * n * n)
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    tol = _default_tol(f, tol)
    lam = _karp_eigenvalue(f.data)
    powers = [None, f]

    def power(k: int) -> np.ndarray:
        while len(powers) <= k:
            powers.append(mat_mul(powers[-1], f))
        return powers[k].data

    for total in range(2, k_max + 1):
        pk = power(total)
        for onset in range(1, total):
            sigma = total - onset
            if not _power_equal(pk, power(onset), sigma, lam, tol):
                continue
            ok = all(_power_equal(power(onset + t * sigma), power(onset),
                                  t * sigma, lam, tol) for t in (2, 3))
            if ok:
                return onset, sigma
    return None


def spectral_radius(f: TropMatrix, k_max: int):
    """min over k <= k_max of tropTr(F^k)/k; equals the minimum mean cycle
    for k_max >= n.  Computed from traces only, so it cross-checks Karp."""
    if f.rows != f.cols:
        raise ValueError("needs a square matrix")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    best = None
    p = f
    for k in range(1, k_max + 1):
        t = p.data.diagonal().min()
        t = t.item() if isinstance(t, np.generic) else t
        if t != INF:
            r = _ratio(t, k)
            if best is None or r < best:
                best = r
        if k < k_max:
            p = mat_mul(p, f)
    if best is None:
        raise NoFiniteCycleError("no admissible cycle")
    return best


def spectral_analysis(f: TropMatrix, k_max: int | None = None,
                      tol: float | None = None) -> SpectralResult:
    """Eigenvalue, critical cycle, eigenvector and stabilization in one pass."""
    mmc = min_mean_cycle(f, tol=tol)
    vec = trop_eigenvector(f, mmc.eigenvalue, tol=tol)
    stab = detect_stabilization(f, k_max=k_max, tol=tol)
    onset, cyclicity = stab if stab is not None else (None, None)
    return SpectralResult(
        eigenvalue=mmc.eigenvalue,
        critical_cycle=mmc.cycle,
        eigenvector=vec,
        onset=onset,
        cyclicity=cyclicity,
        strongly_connected=strongly_connected(f),
    )
