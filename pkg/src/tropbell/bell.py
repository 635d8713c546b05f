"""Classical bounds of 1D correlator Bell inequalities and of modular
multi-outcome inequalities.

Conventions used throughout this module:

* A deterministic local strategy for ``inputs`` dichotomic settings is a
  function setting -> {-1, +1}.  Strategy index i assigns setting k the
  outcome +1 when bit k of i is 0 and -1 when it is 1 (binary counting,
  setting 0 least significant), so index 0 is the all +1 strategy.
* A chain inequality is given by one-body coefficients c[k] (per setting)
  and two-body coefficients c[dist][k][l] for distances 1..range.  Its
  value on deterministic strategies is
  sum_i sum_k c[k]*o_i(k) + sum_dist sum_i sum_kl c[dist][k][l]*o_i(k)*o_{i+dist}(l).
* Blocking for range-r interactions groups r consecutive parties into one
  effective party with |S|**r strategies, encoded big-endian (the leftmost
  party of a block is the most significant digit).
* Transfer-matrix attribution: entry (i, j) of the blocked matrix carries
  the one-body terms and the block-internal correlators of the right
  block j, plus every correlator crossing from block i into block j.
  Summing entries over consecutive blocks of a closed chain then counts
  every term exactly once, which is verified by an explicit
  reconstruction test.  Open chains prepend the left block's local cost,
  and a shorter boundary block (with rectangular matrices) absorbs the
  remainder when the length is not a multiple of r.

The modular (d-outcome, m-setting) inequalities are handled by the split
minimization over outcome differences q_i in Z_d subject to
sum_i q_i = 1 (mod d): a vector recursion whose step is a minimization
against the coefficient vector over a circulant table, costing O(m d^2)
total.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .network import FactorNetwork
from .semiring import INF, TropMatrix, mat_power, trop_trace
from .spectral import _ratio, detect_stabilization, min_mean_cycle
from .tensor import TropTensor


def _exact_num(v):
    """Coefficients parse to exact rationals; floats are read as decimals."""
    if isinstance(v, bool):
        raise ValueError(f"boolean coefficient {v!r}")
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else v
    if isinstance(v, (float, np.floating)):
        f = Fraction(str(float(v)))
        return int(f) if f.denominator == 1 else f
    if isinstance(v, str):
        f = Fraction(v)
        return int(f) if f.denominator == 1 else f
    raise ValueError(f"bad coefficient {v!r}")


def enumerate_strategies(inputs: int) -> tuple:
    """All 2**inputs deterministic strategies, in binary-counting order."""
    if inputs < 1:
        raise ValueError("inputs must be >= 1")
    return tuple(tuple(1 - 2 * ((i >> k) & 1) for k in range(inputs))
                 for i in range(1 << inputs))


@dataclass(frozen=True)
class ChainBellSpec:
    """Translation-invariant 1D inequality on +-1 correlators.

    ``two_body[d][k][l]`` weighs the correlator of setting k at a party
    with setting l at the party d sites to its right.
    """
    inputs: int
    corr_range: int
    one_body: tuple
    two_body: Mapping[int, tuple]
    boundary: str = "obc"
    n: int | None = None
    translation_invariant: bool = True

    def __post_init__(self):
        if self.inputs < 1:
            raise ValueError("inputs must be >= 1")
        if self.corr_range < 1:
            raise ValueError("range must be >= 1")
        if self.boundary not in ("obc", "pbc"):
            raise ValueError(f"boundary must be 'obc' or 'pbc', got {self.boundary!r}")
        ob = tuple(_exact_num(c) for c in self.one_body)
        if len(ob) != self.inputs:
            raise ValueError(f"one_body needs {self.inputs} coefficients")
        tb = {}
        for d, mat in dict(self.two_body).items():
            d = int(d)
            if not 1 <= d <= self.corr_range:
                raise ValueError(f"distance {d} outside 1..{self.corr_range}")
            mat = tuple(tuple(_exact_num(c) for c in row) for row in mat)
            if len(mat) != self.inputs or any(len(r) != self.inputs for r in mat):
                raise ValueError(f"two_body[{d}] must be {self.inputs}x{self.inputs}")
            tb[d] = mat
        object.__setattr__(self, "one_body", ob)
        object.__setattr__(self, "two_body", tb)

    @property
    def domain(self) -> int:
        return 1 << self.inputs


@dataclass(frozen=True)
class TransferModel:
    """Blocked transfer matrix of a TI chain spec."""
    matrix: TropMatrix
    spec: ChainBellSpec
    block_len: int
    strategies: tuple
    boundary: str


class ChainBound(NamedTuple):
    value: object
    assignment: tuple | None


@dataclass(frozen=True)
class ThermodynamicResult:
    per_particle: object
    block_eigenvalue: object
    critical_cycle: tuple
    onset: int | None
    cyclicity: int | None
    table: tuple


def _one_body_table(spec: ChainBellSpec, strategies):
    return [sum(c * s[k] for k, c in enumerate(spec.one_body)) for s in strategies]


def _pair_table(spec: ChainBellSpec, d: int, strategies):
    g = spec.two_body.get(d)
    if g is None:
        return None
    return [[sum(g[k][l] * s[k] * t[l]
                 for k in range(spec.inputs) for l in range(spec.inputs))
             for t in strategies] for s in strategies]


class _CostTables:
    def __init__(self, spec: ChainBellSpec):
        self.spec = spec
        self.strategies = enumerate_strategies(spec.inputs)
        self.h = _one_body_table(spec, self.strategies)
        self.g = {d: _pair_table(spec, d, self.strategies) for d in spec.two_body}

    def local(self, strats: Sequence[int]):
        """One-body plus internal correlators of one block of parties."""
        total = sum(self.h[s] for s in strats)
        for d, g in self.g.items():
            for a in range(len(strats) - d):
                total += g[strats[a]][strats[a + d]]
        return total

    def cross(self, left: Sequence[int], right: Sequence[int]):
        """Correlators from a block into the block immediately to its right."""
        r = len(left)
        total = 0
        for d, g in self.g.items():
            for p in range(r):
                q = p + d - r
                if 0 <= q < len(right):
                    total += g[left[p]][right[q]]
        return total


def _block_tuples(size: int, count: int) -> list:
    return list(itertools.product(range(size), repeat=count))


def build_transfer_matrix(spec: ChainBellSpec) -> TransferModel:
    """Blocked |S|**r transfer matrix of a translation-invariant spec."""
    if not spec.translation_invariant:
        raise ValueError("transfer matrices need a translation-invariant spec; "
                         "route non-TI problems through to_factor_network")
    tables = _CostTables(spec)
    r = spec.corr_range
    blocks = _block_tuples(spec.domain, r)
    locals_ = [tables.local(b) for b in blocks]
    entries = [[locals_[j] + tables.cross(bi, bj)
                for j, bj in enumerate(blocks)]
               for bi in blocks]
    return TransferModel(matrix=TropMatrix(entries), spec=spec, block_len=r,
                         strategies=tables.strategies, boundary=spec.boundary)


def _first_argmin(tot: np.ndarray) -> np.ndarray:
    mins = tot.min(axis=0)
    return np.asarray(tot == mins[None, :]).astype(bool).argmax(axis=0)


def _viterbi(start: np.ndarray, transitions):
    """Forward tropical DP keeping, per state, the first minimizing parent."""
    v = start
    parents = []
    for t in transitions:
        tot = v[:, None] + t
        parents.append(_first_argmin(tot))
        v = tot.min(axis=0)
    return v, parents


def _start_vector(size: int, index: int | None = None) -> np.ndarray:
    v = np.full(size, INF, dtype=object)
    if index is not None:
        v[index] = 0
    return v


def classical_bound_chain(model: TransferModel, n: int,
                          witness: bool = False) -> ChainBound:
    """Exact classical bound of the length-n chain, via tropical matrix
    powers; with ``witness`` an optimal per-party strategy assignment is
    recovered by argmin backtracking and re-verified against the direct
    energy evaluation."""
    spec = model.spec
    r = model.block_len
    data = model.matrix.data
    size = data.shape[0]
    tables = _CostTables(spec)
    blocks = _block_tuples(spec.domain, r)

    if model.boundary == "pbc":
        if n < 1:
            raise ValueError("PBC chains need n >= 1")
        if n % r:
            raise ValueError(f"PBC blocking needs n divisible by the range "
                             f"r={r}, got n={n}")
        count = n // r
        beta = trop_trace(mat_power(model.matrix, count))
        if not witness:
            return ChainBound(beta, None)
        best = None
        for s0 in range(size):
            v, parents = _viterbi(_start_vector(size, s0), [data] * count)
            if best is None or v[s0] < best[0]:
                best = (v[s0], s0, parents)
        _, s0, parents = best
        seq = [s0]
        cur = s0
        for par in reversed(parents):
            cur = int(par[cur])
            seq.append(cur)
        seq = list(reversed(seq))[:-1]
    else:
        if n < 2:
            raise ValueError("OBC chains need n >= 2")
        full, tail_len = divmod(n, r)
        tail_blocks = _block_tuples(spec.domain, tail_len) if tail_len else None
        if full == 0:
            costs = np.array([tables.local(t) for t in tail_blocks], dtype=object)
            beta = costs.min()
            if not witness:
                return ChainBound(beta, None)
            idx = int(np.asarray(costs == beta).astype(bool).argmax())
            assignment = tail_blocks[idx]
            energy = chain_energy(spec, assignment, boundary=model.boundary)
            assert energy == beta
            return ChainBound(beta, assignment)
        start = np.array([tables.local(b) for b in blocks], dtype=object)
        transitions = [data] * (full - 1)
        if tail_len:
            rect = np.array([[tables.local(t) + tables.cross(b, t)
                              for t in tail_blocks] for b in blocks], dtype=object)
            transitions.append(rect)
        v, parents = _viterbi(start, transitions)
        vmin = v.min()
        beta = vmin.item() if isinstance(vmin, np.generic) else vmin
        if not witness:
            return ChainBound(beta, None)
        cur = int(np.asarray(v == beta).astype(bool).argmax())
        seq = [cur]
        for par in reversed(parents):
            cur = int(par[cur])
            seq.append(cur)
        seq = list(reversed(seq))

    assignment = []
    for pos, b in enumerate(seq):
        if model.boundary == "obc" and tail_len and pos == len(seq) - 1:
            assignment.extend(tail_blocks[b])
        else:
            assignment.extend(blocks[b])
    assignment = tuple(assignment)
    energy = chain_energy(spec, assignment, boundary=model.boundary)
    if energy != beta:
        raise RuntimeError(f"internal error: witness energy {energy} != bound {beta}")
    return ChainBound(beta, assignment)


def chain_energy(spec: ChainBellSpec, assignment: Sequence[int],
                 boundary: str | None = None):
    """Direct evaluation of the chain cost on per-party strategy indices."""
    boundary = boundary or spec.boundary
    n = len(assignment)
    tables = _CostTables(spec)
    total = sum(tables.h[s] for s in assignment)
    for d, g in tables.g.items():
        last = n if boundary == "pbc" else n - d
        for i in range(last):
            total += g[assignment[i]][assignment[(i + d) % n]]
    return total


def thermodynamic_bound(model: TransferModel, k_max: int | None = None,
                        lengths: Sequence[int] | None = None) -> ThermodynamicResult:
    """Per-particle classical bound in the infinite-chain limit, with
    stabilization data and an exact finite-size convergence table."""
    r = model.block_len
    mmc = min_mean_cycle(model.matrix)
    per_particle = _ratio(mmc.eigenvalue, r) if not isinstance(mmc.eigenvalue, float) \
        else mmc.eigenvalue / r
    stab = detect_stabilization(model.matrix, k_max=k_max)
    onset, cyclicity = stab if stab is not None else (None, None)
    if lengths is None:
        lengths = tuple(r * (1 << i) for i in range(9))
    rows = []
    for n in lengths:
        if n % r:
            raise ValueError(f"table length {n} not divisible by the range {r}")
        beta = trop_trace(mat_power(model.matrix, n // r))
        rows.append((n, beta, _ratio(beta, n) if beta != INF else INF))
    return ThermodynamicResult(per_particle=per_particle,
                               block_eigenvalue=mmc.eigenvalue,
                               critical_cycle=mmc.cycle,
                               onset=onset, cyclicity=cyclicity,
                               table=tuple(rows))


def to_factor_network(spec: ChainBellSpec, n: int | None = None) -> FactorNetwork:
    """Finite chain as a factor network over deterministic strategies.

    One factor per correlator pair; one-body terms fold into the pair
    factor on (i-1, i) when present, else (i, i+1), else any factor
    containing the party, else a singleton factor.  The contraction of
    the result equals the transfer-matrix bound.
    """
    n = n if n is not None else spec.n
    if n is None or n < 1:
        raise ValueError("need a finite chain length n >= 1")
    tables = _CostTables(spec)
    size = spec.domain
    pbc = spec.boundary == "pbc"
    factors: dict[tuple, np.ndarray] = {}

    def bucket(key: tuple) -> np.ndarray:
        if key not in factors:
            arr = np.empty((size,) * len(key), dtype=object)
            arr[...] = 0
            factors[key] = arr
        return factors[key]

    for d in sorted(tables.g):
        g = tables.g[d]
        last = n if pbc else n - d
        for i in range(max(0, last)):
            j = (i + d) % n
            if j == i:
                arr = bucket((i,))
                for s in range(size):
                    arr[s] += g[s][s]
            elif i < j:
                arr = bucket((i, j))
                for s in range(size):
                    for t in range(size):
                        arr[s, t] += g[s][t]
            else:
                arr = bucket((j, i))
                for s in range(size):
                    for t in range(size):
                        arr[t, s] += g[s][t]

    for p in range(n):
        prefs = []
        if pbc:
            prefs.append(tuple(sorted(((p - 1) % n, p))))
            prefs.append(tuple(sorted((p, (p + 1) % n))))
        else:
            if p > 0:
                prefs.append((p - 1, p))
            if p + 1 < n:
                prefs.append((p, p + 1))
        key = next((k for k in prefs if k in factors and len(k) == 2), None)
        if key is None:
            key = next((k for k in factors if p in k), None)
        if key is None:
            key = (p,)
        arr = bucket(key)
        axis = key.index(p)
        shape = [1] * len(key)
        shape[axis] = size
        hvec = np.array(tables.h, dtype=object).reshape(shape)
        arr += hvec

    tensors = [TropTensor(key, np.array(arr, dtype=object))
               for key, arr in factors.items()]
    return FactorNetwork(n, size, tensors)


def cglmp_alpha(d: int) -> tuple:
    """CGLMP coefficient vector: alpha_k = 1 - 2k/(d-1), exact."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return tuple(Fraction(1) - Fraction(2 * k, d - 1) for k in range(d))


@dataclass(frozen=True)
class ModularBellSpec:
    """Bipartite inequality with d outcomes and m settings per party,
    weighted by alpha over the modular outcome differences."""
    outcomes: int
    settings: int
    alpha: tuple

    def __post_init__(self):
        if self.outcomes < 2:
            raise ValueError("outcomes (d) must be >= 2")
        if self.settings < 1:
            raise ValueError("settings (m) must be >= 1")
        a = tuple(_exact_num(v) for v in self.alpha)
        if len(a) != self.outcomes:
            raise ValueError(f"alpha needs {self.outcomes} entries")
        object.__setattr__(self, "alpha", a)


def modular_bound(spec: ModularBellSpec) -> Fraction:
    """Classical bound by the d-ary vector recursion.

    With f0(x) = alpha[(1-x) mod d] and
    f_k(x) = min_y alpha[y] + f_{k-1}((x+y) mod d), the bound is
    f_{2m-1}(0); each step is one circulant-table minimization, so the
    whole run costs O(m d^2).
    """
    d, m = spec.outcomes, spec.settings
    denom = math.lcm(*(v.denominator if isinstance(v, Fraction) else 1
                       for v in spec.alpha))
    scaled = [int(v * denom) for v in spec.alpha]
    peak = 2 * m * max(1, max(abs(s) for s in scaled))
    dtype = np.int64 if peak < 2**62 else object
    alpha = np.array(scaled, dtype=dtype)
    idx = (np.arange(d)[:, None] + np.arange(d)[None, :]) % d
    f = alpha[(1 - np.arange(d)) % d]
    for _ in range(2 * m - 1):
        f = (alpha[None, :] + f[idx]).min(axis=1)
    return Fraction(int(f[0]), denom)


def chain_spec_from_dict(payload: dict) -> ChainBellSpec:
    n = payload.get("n")
    if n in ("inf", "infinite", None):
        n = None
    else:
        n = int(n)
    two_body = {int(k): v for k, v in payload.get("two_body", {}).items()}
    inputs = int(payload["inputs"])
    rng = int(payload.get("range", max(two_body) if two_body else 1))
    return ChainBellSpec(
        inputs=inputs,
        corr_range=rng,
        one_body=tuple(payload.get("one_body", [0] * inputs)),
        two_body=two_body,
        boundary=payload.get("boundary", "obc"),
        n=n,
        translation_invariant=bool(payload.get("translation_invariant", True)),
    )


def modular_spec_from_dict(payload: dict) -> ModularBellSpec:
    return ModularBellSpec(outcomes=int(payload["d"]),
                           settings=int(payload["m"]),
                           alpha=tuple(payload["alpha"]))


def spec_from_dict(payload: dict):
    kind = payload.get("type")
    if kind == "chain":
        return chain_spec_from_dict(payload)
    if kind == "modular":
        return modular_spec_from_dict(payload)
    raise ValueError(f"spec type must be 'chain' or 'modular', got {kind!r}")


def load_spec(path):
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
