"""Brute-force minimizers used as ground truth in tests and the CLI.

These enumerate every deterministic configuration and evaluate the cost
from its raw definition, on purpose without reusing any of the tropical
contraction machinery.  Rational inputs are rescaled to a common integer
denominator so the enumeration runs on exact integer values (held in
float64 together with +inf; the magnitudes involved stay far below the
2**53 exactness limit, which is checked).

Deliberately simple and slow; inputs are capped by configuration size.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .semiring import INF

DEFAULT_CAP = 10**7


class BruteForceResult(NamedTuple):
    value: object
    minimizers: list


class ModularBruteForce(NamedTuple):
    value: object
    minimizer_count: int


def _scaled_int(v, denom: int) -> float:
    if v == INF:
        return INF
    s = v * denom
    s = int(s)
    if abs(s) > 2**50:
        raise ValueError(f"entry {v} too large for exact enumeration")
    return float(s)


def _common_denominator(values) -> int:
    denom = 1
    for v in values:
        if isinstance(v, Fraction):
            denom = math.lcm(denom, v.denominator)
    return denom


def _as_value(scaled: float, denom: int):
    if scaled == INF:
        return INF
    f = Fraction(int(scaled), denom)
    return int(f) if f.denominator == 1 else f


def brute_force_min(net, cap: int = DEFAULT_CAP) -> BruteForceResult:
    """Exhaustive minimum of a FactorNetwork cost, with every minimizer.

    Enumerates all domain**n assignments; assignment tuples are in
    variable order (variable 0 first).
    """
    n, size = net.n, net.domain
    total_configs = size**n
    if total_configs > cap:
        raise ValueError(f"{size}**{n} = {total_configs} configurations "
                         f"exceed the cap {cap}")
    entries = []
    for t in net.factors:
        for v in t.data.reshape(-1):
            entries.append(v if not isinstance(v, np.generic) else v.item())
    denom = _common_denominator(entries)
    total = np.zeros(total_configs, dtype=np.float64)
    idx = np.arange(total_configs, dtype=np.int64)
    for t in net.factors:
        flat_index = np.zeros(total_configs, dtype=np.int64)
        for v in t.labels:
            digit = (idx // size ** (n - 1 - v)) % size
            flat_index = flat_index * size + digit
        table = np.array([_scaled_int(x if not isinstance(x, np.generic) else x.item(),
                                      denom)
                          for x in t.data.reshape(-1)], dtype=np.float64)
        total += table[flat_index]
    best = total.min()
    if best == INF:
        return BruteForceResult(INF, [])
    where = np.nonzero(total == best)[0]
    shape = (size,) * n
    minimizers = [tuple(int(c) for c in np.unravel_index(int(i), shape))
                  for i in where]
    return BruteForceResult(_as_value(best, denom), minimizers)


def brute_force_chain(inputs: int, one_body, two_body, n: int, boundary: str,
                      cap: int = DEFAULT_CAP) -> BruteForceResult:
    """Exhaustive classical bound of a 1D correlator inequality.

    Evaluates, for every tuple of per-party strategy indices, the sum of
    one-body terms c[k]*o_i(k) and two-body terms
    c[d][k][l]*o_i(k)*o_{i+d}(l) directly from the coefficients.  The
    strategy indexing convention (bit k of the index flips setting k from
    +1 to -1) matches the rest of the package so assignments compare.
    """
    size = 1 << inputs
    total_configs = size**n
    if total_configs > cap:
        raise ValueError(f"{size}**{n} = {total_configs} configurations "
                         f"exceed the cap {cap}")
    outcomes = [[1 - 2 * ((s >> k) & 1) for k in range(inputs)] for s in range(size)]
    values = list(one_body) + [c for m in two_body.values() for row in m for c in row]
    denom = _common_denominator(values)
    h = np.array([sum(_scaled_int(c, denom) * outcomes[s][k]
                      for k, c in enumerate(one_body)) for s in range(size)])
    pair = {int(d): np.array([[sum(_scaled_int(m[k][l], denom)
                                   * outcomes[s][k] * outcomes[t][l]
                                   for k in range(inputs) for l in range(inputs))
                               for t in range(size)] for s in range(size)])
            for d, m in two_body.items()}
    idx = np.arange(total_configs, dtype=np.int64)
    digits = [(idx // size ** (n - 1 - p)) % size for p in range(n)]
    total = np.zeros(total_configs, dtype=np.float64)
    for p in range(n):
        total += h[digits[p]]
    for d, g in pair.items():
        last = n if boundary == "pbc" else n - d
        for i in range(max(0, last)):
            total += g[digits[i], digits[(i + d) % n]]
    best = total.min()
    where = np.nonzero(total == best)[0]
    shape = (size,) * n
    minimizers = [tuple(int(c) for c in np.unravel_index(int(i), shape))
                  for i in where]
    return BruteForceResult(_as_value(best, denom), minimizers)


def brute_force_modular(outcomes: int, settings: int, alpha,
                        cap: int = DEFAULT_CAP) -> ModularBruteForce:
    """Exhaustive minimum over deterministic outcome assignments of a
    d-outcome, m-setting modular inequality.

    Enumerates all (A_1..A_m, B_1..B_m) in Z_d**(2m) and sums
    alpha[(A_i - B_i) mod d] + alpha[(B_i - A_{i+1}) mod d], closing the
    loop with A_{m+1} = A_1 - 1 so that the induced differences always
    satisfy sum q = 1 (mod d), the convention the recursion encodes.
    """
    d, m = outcomes, settings
    total_configs = d ** (2 * m)
    if total_configs > cap:
        raise ValueError(f"{d}**{2 * m} = {total_configs} assignments "
                         f"exceed the cap {cap}")
    denom = _common_denominator(alpha)
    a = np.array([_scaled_int(v, denom) for v in alpha], dtype=np.float64)
    idx = np.arange(total_configs, dtype=np.int64)

    def digit(p):
        # layout: (A_1..A_m, B_1..B_m), leftmost most significant
        return (idx // d ** (2 * m - 1 - p)) % d

    first_a = digit(0)
    total = np.zeros(total_configs, dtype=np.float64)
    for i in range(m):
        a_i = digit(i) if i else first_a
        b_i = digit(m + i)
        total += a[(a_i - b_i) % d]
        nxt = digit(i + 1) if i + 1 < m else (first_a - 1) % d
        total += a[(b_i - nxt) % d]
    best = total.min()
    count = int(np.count_nonzero(total == best))
    return ModularBruteForce(_as_value(best, denom), count)
