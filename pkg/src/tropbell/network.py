"""Factor networks over a finite strategy set and their tropical contraction.

A network encodes a cost function that is a sum of local terms, one dense
tropical tensor per factor.  Contraction eliminates the closed variables
(those shared by at least two factors) one by one: the factors touching
the chosen variable are joined, every variable that is internal to that
group (not appearing anywhere else in the network) is minimized out along
with it, and the group is replaced by a single factor on the surviving
variables.  The full contraction yields the global minimum plus a trace of
the per-step bookkeeping, and, when witnesses were recorded, an optimal
assignment by backtracking.

JSON format (see ``network_from_dict``)::

    { "n": 5, "domain": 2,
      "factors": [ {"vars": [0, 1], "entries": [0, 1, 2, null], "scale": 1} ] }

Entries are row-major over the listed variables, ``null`` encodes +inf,
and each entry is divided by the optional per-factor ``scale``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .semiring import INF, common_arrays
from .tensor import TropTensor, contract_pair, reduce_min

DEFAULT_MAX_LEGS = 22


class RankCapError(RuntimeError):
    """An intermediate tensor would exceed the configured size cap."""


def _merge_tensors(a: TropTensor, b: TropTensor) -> TropTensor:
    b = b.transpose_to(a.labels)
    x, y = common_arrays(a.data, b.data)
    s = x + y
    s.flags.writeable = False
    return TropTensor(a.labels, s)


class FactorNetwork:
    """n variables over a uniform domain, plus a list of factor tensors.

    Factors with identical variable sets are merged entrywise at
    construction (tropical product), and every variable must occur in at
    least one factor.
    """

    __slots__ = ("n", "domain", "factors")

    def __init__(self, n: int, domain: int, factors: Iterable, _validate: bool = True):
        if n < 1 or domain < 1:
            raise ValueError("need n >= 1 and domain >= 1")
        normalized: dict[tuple, TropTensor] = {}
        order: list[tuple] = []
        for item in factors:
            if isinstance(item, TropTensor):
                t = item
            else:
                variables, values = item
                t = TropTensor(tuple(variables), values)
            labels = tuple(sorted(t.labels))
            t = t.transpose_to(labels)
            if _validate:
                if not labels:
                    raise ValueError("factors must have at least one variable")
                if not all(isinstance(v, (int, np.integer)) and 0 <= v < n
                           for v in labels):
                    raise ValueError(f"factor variables {labels} not all in [0, {n})")
            if any(c != domain for c in t.data.shape):
                raise ValueError(f"factor on {labels} has cardinalities "
                                 f"{t.data.shape}, expected {domain} each")
            if labels in normalized:
                normalized[labels] = _merge_tensors(normalized[labels], t)
            else:
                normalized[labels] = t
                order.append(labels)
        self.factors = [normalized[l] for l in order]
        self.n = n
        self.domain = domain
        if _validate:
            covered = set().union(*(set(t.labels) for t in self.factors)) \
                if self.factors else set()
            missing = set(range(n)) - covered
            if missing:
                raise ValueError(f"variables {sorted(missing)} appear in no factor")

    def index_sets(self) -> tuple:
        return tuple(t.labels for t in self.factors)

    def __repr__(self):
        return (f"FactorNetwork(n={self.n}, domain={self.domain}, "
                f"factors={self.index_sets()})")


@dataclass(frozen=True)
class EliminationPlan:
    """A permutation of the network's eliminable (closed) variables."""
    order: tuple

    def __iter__(self):
        return iter(self.order)


@dataclass(frozen=True)
class TraceStep:
    """Bookkeeping of one elimination step.

    ``merged`` lists the variable sets of the factors joined at this step,
    ``absorbed`` the variables minimized out (the chosen one plus every
    variable internal to the joined group), ``survivors`` the variables of
    the replacement factor, and ``remaining`` all factor variable sets
    after the step.  A ``skipped`` step marks a plan variable that an
    earlier step had already absorbed.
    """
    k: int
    var: object
    skipped: bool
    merged: tuple
    absorbed: frozenset
    survivors: tuple
    remaining: tuple
    tensor: TropTensor | None = None


@dataclass
class ContractionTrace:
    n: int
    steps: list = field(default_factory=list)
    open_labels: tuple = ()
    result: TropTensor | None = None
    closure: TropTensor | None = None


def eliminable_vars(net: FactorNetwork) -> frozenset:
    """Variables occurring in at least two factors (the closed indices)."""
    counts: dict = {}
    for t in net.factors:
        for v in t.labels:
            counts[v] = counts.get(v, 0) + 1
    return frozenset(v for v, c in counts.items() if c >= 2)


def _step_sets(sets: Sequence[frozenset], var):
    """The joined group, absorbed set, and survivor set for eliminating var."""
    group_idx = [i for i, s in enumerate(sets) if var in s]
    group = [sets[i] for i in group_idx]
    union = set().union(*group)
    outside = set().union(*(s for i, s in enumerate(sets) if i not in set(group_idx))) \
        if len(group_idx) < len(sets) else set()
    shared = {v for v in union if sum(v in s for s in group) >= 2}
    absorbed = (shared | {var}) - outside
    survivors = tuple(sorted(union - absorbed))
    return group_idx, absorbed, survivors


def contract_step(net: FactorNetwork, var, k: int = 1,
                  record_witness: bool = False,
                  max_legs: int = DEFAULT_MAX_LEGS):
    """Eliminate one closed variable; returns the new network and the step record."""
    if var not in eliminable_vars(net):
        raise ValueError(f"variable {var!r} is not eliminable "
                         "(it appears in fewer than two factors)")
    sets = [frozenset(t.labels) for t in net.factors]
    group_idx, absorbed, survivors = _step_sets(sets, var)
    union = absorbed | set(survivors)
    legs = len(union) * math.log2(net.domain)
    if legs > max_legs:
        raise RankCapError(
            f"step {k} (eliminating {var!r}) would build a tensor with "
            f"{legs:.1f} binary-equivalent legs (cap {max_legs})")
    group_set = set(group_idx)
    joined = net.factors[group_idx[0]]
    for i in group_idx[1:]:
        joined = contract_pair(joined, net.factors[i])
    new_factor = reduce_min(joined, absorbed, record_witness=record_witness)
    new_factor = new_factor.transpose_to(survivors)
    factors = [t for i, t in enumerate(net.factors) if i not in group_set]
    factors.append(new_factor)
    out = FactorNetwork(net.n, net.domain, factors, _validate=False)
    step = TraceStep(
        k=k, var=var, skipped=False,
        merged=tuple(net.factors[i].labels for i in group_idx),
        absorbed=frozenset(absorbed),
        survivors=survivors,
        remaining=out.index_sets(),
        tensor=new_factor,
    )
    return out, step


def greedy_order(net: FactorNetwork) -> EliminationPlan:
    """Complete plan choosing, at each step, the variable whose elimination
    leaves the fewest surviving variables (ties broken by smallest label).

    Variables absorbed alongside a chosen one are appended right after it;
    the executor skips them when their turn comes.
    """
    sets = [frozenset(t.labels) for t in net.factors]
    remaining = set(eliminable_vars(net))
    order: list = []
    while remaining:
        best = None
        for v in sorted(remaining):
            group_idx, absorbed, survivors = _step_sets(sets, v)
            key = (len(survivors), v)
            if best is None or key < best[0]:
                best = (key, v, group_idx, absorbed, survivors)
        _, v, group_idx, absorbed, survivors = best
        order.append(v)
        order.extend(sorted(absorbed - {v}))
        remaining -= absorbed
        group_set = set(group_idx)
        sets = [s for i, s in enumerate(sets) if i not in group_set]
        sets.append(frozenset(survivors))
    return EliminationPlan(tuple(order))


def contract_full(net: FactorNetwork, plan: EliminationPlan | None = None,
                  close: bool = True, record_witness: bool = False,
                  max_legs: int = DEFAULT_MAX_LEGS):
    """Contract the whole network along a plan.

    Returns ``(tensor, trace)``.  With ``close=True`` any variables left
    open at the end are minimized out, so the tensor is a scalar holding
    the global minimum.  Variables of a factor that never connects to the
    rest of the network are open indices by construction and are only
    removed by this final closure.
    """
    if plan is None:
        plan = greedy_order(net)
    eli = eliminable_vars(net)
    if set(plan.order) != set(eli) or len(plan.order) != len(eli):
        raise ValueError(f"plan {plan.order} is not a permutation of the "
                         f"eliminable variables {tuple(sorted(eli))}")
    trace = ContractionTrace(n=net.n)
    current = net
    for k, var in enumerate(plan.order, start=1):
        if not any(var in t.labels for t in current.factors):
            trace.steps.append(TraceStep(
                k=k, var=var, skipped=True, merged=(),
                absorbed=frozenset(), survivors=(),
                remaining=current.index_sets()))
            continue
        current, step = contract_step(current, var, k=k,
                                      record_witness=record_witness,
                                      max_legs=max_legs)
        trace.steps.append(step)
    result = current.factors[0]
    for t in current.factors[1:]:
        result = contract_pair(result, t)
    result = result.transpose_to(tuple(sorted(result.labels)))
    trace.open_labels = result.labels
    trace.result = result
    if not close:
        return result, trace
    closure = reduce_min(result, result.labels, record_witness=record_witness)
    trace.closure = closure
    return closure, trace


def backtrack_optimum(trace: ContractionTrace, open_assignment=None) -> tuple:
    """Recover one optimal assignment from a witness-recorded contraction.

    Open variables are read from the closure witness (or from
    ``open_assignment``, a sequence aligned with ``trace.open_labels``);
    each step's absorbed variables are then resolved in reverse order.
    """
    assignment: dict = {}
    if trace.open_labels:
        if open_assignment is not None:
            if len(open_assignment) != len(trace.open_labels):
                raise ValueError("open_assignment length mismatch")
            assignment.update(zip(trace.open_labels, open_assignment))
        else:
            if trace.closure is None or trace.closure.witness is None:
                raise ValueError("witnesses absent: contraction must run with "
                                 "record_witness=True and close=True (or pass "
                                 "open_assignment)")
            for label, w in trace.closure.witness.items():
                assignment[label] = int(w[()])
    for step in reversed(trace.steps):
        if step.skipped:
            continue
        t = step.tensor
        if t.witness is None:
            raise ValueError("witnesses absent: contraction must run with "
                             "record_witness=True")
        coords = tuple(assignment[l] for l in t.labels)
        for var, w in t.witness.items():
            assignment[var] = int(w[coords])
    return tuple(assignment[i] for i in range(trace.n))


def network_from_dict(payload: dict) -> FactorNetwork:
    """Parse the JSON network format; ``null`` entries become +inf."""
    try:
        n = int(payload["n"])
        domain = int(payload["domain"])
        raw_factors = payload["factors"]
    except KeyError as exc:
        raise ValueError(f"network spec missing field {exc}") from None
    factors = []
    for fi, f in enumerate(raw_factors):
        try:
            variables = tuple(int(v) for v in f["vars"])
            entries = f["entries"]
        except KeyError as exc:
            raise ValueError(f"factor {fi} missing field {exc}") from None
        scale = int(f.get("scale", 1))
        if scale < 1:
            raise ValueError(f"factor {fi}: scale must be a positive integer")
        expected = domain ** len(variables)
        if len(entries) != expected:
            raise ValueError(f"factor {fi} on {variables}: expected {expected} "
                             f"entries, got {len(entries)}")
        values = []
        for e in entries:
            if e is None:
                values.append(INF)
            elif isinstance(e, bool):
                raise ValueError(f"factor {fi}: boolean entry {e!r}")
            elif isinstance(e, int):
                values.append(Fraction(e, scale))
            elif isinstance(e, float):
                values.append(Fraction(str(e)) / scale)
            elif isinstance(e, str):
                values.append(Fraction(e) / scale)
            else:
                raise ValueError(f"factor {fi}: bad entry {e!r}")
        shape = (domain,) * len(variables)
        factors.append(TropTensor(variables, values, shape=shape))
    return FactorNetwork(n, domain, factors)


def load_network(path) -> FactorNetwork:
    with open(path) as fh:
        return network_from_dict(json.load(fh))
