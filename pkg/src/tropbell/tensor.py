"""Dense tropical tensors with labeled indices.

A tensor holds one tropical value per joint assignment of its index
variables.  Contracting two tensors adds their tables on matched labels
and minimizes over the labels being eliminated; this is the min-plus
analogue of einsum.  Contractions can record, per output entry, the
assignment of the eliminated variables that achieved the minimum
(the witness), which later lets an optimal global configuration be
reconstructed by backtracking.

Tie-breaking for witnesses is the lexicographically smallest minimizing
assignment with variables ordered by label, so results are reproducible.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .semiring import INF, TropMatrix, arrays_equal, as_trop_array, common_arrays


class TropTensor:
    """Immutable rank-n tropical tensor over labeled variables.

    ``labels`` are distinct orderable hashables (ints in practice); axis i
    of ``data`` enumerates the values of ``labels[i]``.  ``witness`` maps
    an eliminated label to an int array, aligned with ``data``, holding
    the minimizing value of that label for each output entry.
    """

    __slots__ = ("labels", "data", "witness")

    def __init__(self, labels: Iterable, values, shape=None,
                 witness: Mapping | None = None):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be distinct, got {labels}")
        if isinstance(values, np.ndarray) and values.flags.writeable is False \
                and shape is None and values.dtype in (np.int64, np.float64, object):
            data = values
        else:
            data = as_trop_array(values, shape)
        if data.ndim != len(labels):
            raise ValueError(f"{len(labels)} labels for a rank-{data.ndim} table")
        self.labels = labels
        self.data = data
        self.witness = dict(witness) if witness else None

    @classmethod
    def scalar(cls, value) -> "TropTensor":
        return cls((), as_trop_array([value]).reshape(()))

    @classmethod
    def from_matrix(cls, m: TropMatrix, row_label, col_label) -> "TropTensor":
        return cls((row_label, col_label), m.data)

    def as_matrix(self) -> TropMatrix:
        if self.data.ndim != 2:
            raise ValueError("only rank-2 tensors convert to matrices")
        return TropMatrix(self.data)

    @property
    def rank(self) -> int:
        return len(self.labels)

    def cardinality(self, label) -> int:
        return self.data.shape[self.labels.index(label)]

    def item(self):
        """Value of a rank-0 tensor."""
        if self.labels:
            raise ValueError("item() needs a rank-0 tensor")
        v = self.data[()]
        return v.item() if isinstance(v, np.generic) else v

    def relabel(self, mapping: Mapping) -> "TropTensor":
        labels = tuple(mapping.get(l, l) for l in self.labels)
        wit = {mapping.get(l, l): w for l, w in self.witness.items()} \
            if self.witness else None
        return TropTensor(labels, self.data, witness=wit)

    def transpose_to(self, labels) -> "TropTensor":
        labels = tuple(labels)
        if set(labels) != set(self.labels):
            raise ValueError("transpose must keep the same label set")
        perm = tuple(self.labels.index(l) for l in labels)
        data = self.data.transpose(perm)
        data.flags.writeable = False
        wit = {l: w.transpose(perm) for l, w in self.witness.items()} \
            if self.witness else None
        return TropTensor(labels, data, witness=wit)

    def equals(self, other: "TropTensor", tol: float = 0.0) -> bool:
        if set(self.labels) != set(other.labels):
            return False
        return arrays_equal(self.data, other.transpose_to(self.labels).data, tol)

    def __repr__(self):
        return f"TropTensor(labels={self.labels!r}, shape={self.data.shape})"


def delta_tensor(rank: int, dim: int) -> TropTensor:
    """Tropical Kronecker delta: 0 where all coordinates agree, INF elsewhere.

    Labels must be attached by the caller via ``relabel`` or the
    ``labels`` argument of contraction helpers; this returns labels 0..rank-1.
    """
    if rank < 1 or dim < 1:
        raise ValueError("rank and dim must be >= 1")
    data = np.full((dim,) * rank, INF)
    for v in range(dim):
        data[(v,) * rank] = 0.0
    return TropTensor(tuple(range(rank)), data)


def _aligned(data: np.ndarray, labels, full) -> np.ndarray:
    """View of ``data`` broadcastable over the axis layout ``full``."""
    pos = {l: i for i, l in enumerate(full)}
    order = sorted(range(len(labels)), key=lambda i: pos[labels[i]])
    arr = data.transpose(order)
    present = set(labels)
    slicer = tuple(slice(None) if l in present else None for l in full)
    return arr[slicer]


def _min_with_witness(total: np.ndarray, out_labels, elim, cards,
                      record_witness: bool):
    """Minimize the trailing flattened axis; optionally decode argmins.

    ``total`` has shape (out dims..., prod of elim cards); ``elim`` is the
    sorted tuple of eliminated labels, ``cards`` their cardinalities in
    that order (row-major, so the first flat minimum is lexicographically
    smallest in label order).
    """
    vals = np.array(total.min(axis=-1), dtype=total.dtype)
    witness = None
    if record_witness:
        first = np.asarray(total == vals[..., None]).astype(bool).argmax(axis=-1)
        first = np.asarray(first).reshape(vals.shape)
        witness = {}
        trailing = 1
        digits = []
        for c in reversed(cards):
            digits.append((first // trailing) % c)
            trailing *= c
        for label, digit in zip(elim, reversed(digits)):
            witness[label] = np.asarray(digit, dtype=np.int64).reshape(vals.shape)
    vals.flags.writeable = False
    return vals, witness


def contract_pair(t1: TropTensor, t2: TropTensor, eliminate=(),
                  record_witness: bool = False) -> TropTensor:
    """Tropical contraction of two tensors.

    Shared labels are matched entrywise; those listed in ``eliminate``
    (a subset of the shared labels) are then minimized out.  Output label
    order: t1's surviving labels, then t2's new ones.
    """
    shared = [l for l in t1.labels if l in set(t2.labels)]
    elim = tuple(sorted(set(eliminate)))
    if not set(elim) <= set(shared):
        raise ValueError(f"eliminate {elim} not a subset of shared labels {shared}")
    for l in shared:
        if t1.cardinality(l) != t2.cardinality(l):
            raise ValueError(f"cardinality mismatch on shared label {l!r}")
    out = [l for l in t1.labels if l not in elim]
    t1set = set(t1.labels)
    out += [l for l in t2.labels if l not in t1set]
    full = tuple(out) + elim
    x, y = common_arrays(t1.data, t2.data)
    total = _aligned(x, t1.labels, full) + _aligned(y, t2.labels, full)
    if not elim:
        total.flags.writeable = False
        return TropTensor(out, total)
    cards = [t1.cardinality(l) for l in elim]
    flat = total.reshape(total.shape[:len(out)] + (-1,))
    vals, witness = _min_with_witness(flat, out, elim, cards, record_witness)
    return TropTensor(out, vals, witness=witness)


def reduce_min(t: TropTensor, labels=(), record_witness: bool = False) -> TropTensor:
    """Minimize out the given labels; with all labels this yields a scalar."""
    elim = tuple(sorted(set(labels)))
    unknown = set(elim) - set(t.labels)
    if unknown:
        raise ValueError(f"unknown labels {sorted(unknown)}")
    if not elim:
        return t
    out = [l for l in t.labels if l not in elim]
    full = tuple(out) + elim
    arr = _aligned(t.data, t.labels, full)
    cards = [t.cardinality(l) for l in elim]
    flat = arr.reshape(arr.shape[:len(out)] + (-1,))
    vals, witness = _min_with_witness(flat, out, elim, cards, record_witness)
    return TropTensor(out, vals, witness=witness)


def diagonal_trace(t: TropTensor, label_pair, record_witness: bool = False) -> TropTensor:
    """Match two labels and minimize over their common value.

    On a rank-2 tensor this is the tropical trace.  Both labels are removed
    from the output; a witness records the shared value under each label.
    """
    l1, l2 = label_pair
    if l1 not in t.labels or l2 not in t.labels or l1 == l2:
        raise ValueError(f"labels {label_pair!r} must be two distinct tensor labels")
    if t.cardinality(l1) != t.cardinality(l2):
        raise ValueError(f"cardinality mismatch between {l1!r} and {l2!r}")
    a1, a2 = t.labels.index(l1), t.labels.index(l2)
    arr = np.moveaxis(t.data, (a1, a2), (0, 1))
    idx = np.arange(t.cardinality(l1))
    diag = arr[idx, idx]
    out = [l for l in t.labels if l not in (l1, l2)]
    flat = np.moveaxis(diag, 0, -1)
    vals = np.array(flat.min(axis=-1), dtype=flat.dtype)
    witness = None
    if record_witness:
        first = np.asarray(flat == vals[..., None]).astype(bool).argmax(axis=-1)
        first = np.asarray(first, dtype=np.int64).reshape(vals.shape)
        witness = {l1: first, l2: first}
    vals.flags.writeable = False
    return TropTensor(out, vals, witness=witness)
