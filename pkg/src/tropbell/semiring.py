"""Exact min-plus (tropical) scalars and dense matrices.

The carrier is the reals extended by +infinity.  Tropical addition is
``min``, tropical multiplication is ``+``; the respective neutral elements
are ``INF`` and ``0``.  Finite values are kept exact: integers stay
integers, rationals are ``fractions.Fraction``.  Plain floats are accepted
as a separate approximate mode (comparisons then take a tolerance, see
``DEFAULT_FLOAT_TOL``); mixing floats with Fractions in one matrix is
rejected because Python would silently coerce the sums to float.

Array storage is tiered by dtype for speed without losing exactness:
int64 for pure small integers, float64 when +inf or finite floats are
present (integer values remain exact in float64), and object arrays of
int/Fraction otherwise.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

INF = float("inf")

DEFAULT_FLOAT_TOL = 1e-9

# int64 is only used while products of sums cannot leave the exact float64
# range either; above this magnitude entries fall back to object arrays.
_INT64_SAFE = 2**40


def oplus(a, b):
    """Tropical sum: min(a, b)."""
    return a if a <= b else b


def odot(a, b):
    """Tropical product: a + b, with INF absorbing."""
    if a == INF or b == INF:
        return INF
    return a + b


def _check_entry(v):
    if v != v:
        raise ValueError("NaN is not a tropical value")
    if v == -INF:
        raise ValueError("-inf is not in the min-plus carrier")


def as_trop_array(values, shape=None) -> np.ndarray:
    """Build a read-only array of tropical values with a suitable dtype.

    ``values`` may be nested sequences, a flat sequence (with ``shape``),
    or an ndarray.  Raises on NaN, -inf, or a float/Fraction mix.
    """
    flat = np.asarray(values, dtype=object).reshape(-1)
    has_frac = False
    has_float = False
    has_inf = False
    max_abs_int = 0
    out = np.empty(flat.shape[0], dtype=object)
    for i, v in enumerate(flat):
        if isinstance(v, (bool, np.bool_)):
            v = int(v)
        if isinstance(v, (Integral, np.integer)):
            v = int(v)
            max_abs_int = max(max_abs_int, abs(v))
        elif isinstance(v, Fraction) or isinstance(v, Rational):
            _check_entry(v)
            if v.denominator == 1:
                v = int(v)
                max_abs_int = max(max_abs_int, abs(v))
            else:
                v = Fraction(v)
                has_frac = True
        elif isinstance(v, (float, np.floating)):
            v = float(v)
            _check_entry(v)
            if v == INF:
                has_inf = True
            else:
                has_float = True
        else:
            raise TypeError(f"unsupported tropical entry {v!r}")
        out[i] = v
    if has_frac and has_float:
        raise ValueError("cannot mix finite floats with Fractions; "
                         "use one mode per matrix/tensor")
    if shape is None:
        shape = np.asarray(values, dtype=object).shape
    out = out.reshape(shape)
    if has_frac or max_abs_int > _INT64_SAFE:
        arr = out
    elif has_float or has_inf:
        arr = out.astype(np.float64)
    else:
        arr = out.astype(np.int64)
    arr.flags.writeable = False
    return arr


def is_exact_array(arr: np.ndarray) -> bool:
    """True when every finite entry is an int or Fraction (bitwise-exact math)."""
    if arr.dtype == object:
        return not any(isinstance(v, float) and v != INF for v in arr.reshape(-1))
    if arr.dtype == np.float64:
        finite = arr[np.isfinite(arr)]
        return bool(np.all(finite == np.floor(finite)))
    return True


def _to_object_exact(arr: np.ndarray) -> np.ndarray:
    """int64/float64 array -> object array of ints (INF and floats kept)."""
    if arr.dtype == object:
        return arr
    out = np.empty(arr.shape, dtype=object)
    it = arr.reshape(-1)
    flat = out.reshape(-1)
    for i, v in enumerate(it):
        v = float(v) if arr.dtype == np.float64 else int(v)
        if isinstance(v, float) and v != INF and v == int(v):
            v = int(v)
        flat[i] = v
    return out


def common_arrays(a: np.ndarray, b: np.ndarray):
    """Coerce two tropical arrays to a dtype their sum stays exact in."""
    if a.dtype == object or b.dtype == object:
        return _to_object_exact(a), _to_object_exact(b)
    return a, b


def arrays_equal(a: np.ndarray, b: np.ndarray, tol: float = 0.0) -> bool:
    """Entrywise equality; with tol > 0, finite entries may differ by tol."""
    if a.shape != b.shape:
        return False
    if tol == 0.0:
        return bool(np.all(a == b))
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    both_inf = np.isinf(af) & np.isinf(bf)
    return bool(np.all(both_inf | (np.abs(af - bf) <= tol)))


class TropMatrix:
    """Immutable dense matrix over the min-plus semiring."""

    __slots__ = ("data",)

    def __init__(self, entries, shape=None):
        if isinstance(entries, TropMatrix):
            data = entries.data
        elif isinstance(entries, np.ndarray) and entries.flags.writeable is False \
                and entries.ndim == 2 and shape is None:
            data = entries
        else:
            data = as_trop_array(entries, shape)
        if data.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {data.shape}")
        self.data = data

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def exact(self) -> bool:
        return is_exact_array(self.data)

    def __getitem__(self, ij):
        v = self.data[ij]
        return v if not isinstance(v, np.generic) else v.item()

    def __matmul__(self, other: "TropMatrix") -> "TropMatrix":
        return mat_mul(self, other)

    def equals(self, other: "TropMatrix", tol: float = 0.0) -> bool:
        return arrays_equal(self.data, other.data, tol)

    def tolist(self):
        return [[self[i, j] for j in range(self.cols)] for i in range(self.rows)]

    def __repr__(self):
        return f"TropMatrix({self.tolist()!r})"


def identity(n: int) -> TropMatrix:
    """Tropical identity: 0 on the diagonal, INF elsewhere."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = np.full((n, n), INF)
    np.fill_diagonal(m, 0.0)
    return TropMatrix(m)


def zeros(n: int) -> TropMatrix:
    """All-zero matrix, the tropical analogue of the all-ones matrix."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return TropMatrix(np.zeros((n, n), dtype=np.int64))


def mat_mul(a: TropMatrix, b: TropMatrix) -> TropMatrix:
    """C[i,j] = min_k (A[i,k] + B[k,j])."""
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.rows}x{a.cols} @ {b.rows}x{b.cols}")
    x, y = common_arrays(a.data, b.data)
    total = x[:, :, None] + y[None, :, :]
    out = total.min(axis=1)
    out.flags.writeable = False
    return TropMatrix(out)


def mat_power(a: TropMatrix, k: int) -> TropMatrix:
    """k-fold tropical product by repeated squaring; k = 0 gives the identity."""
    if a.rows != a.cols:
        raise ValueError("mat_power needs a square matrix")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return identity(a.rows)
    result = None
    base = a
    while True:
        if k & 1:
            result = base if result is None else mat_mul(result, base)
        k >>= 1
        if k == 0:
            return result
        base = mat_mul(base, base)


def trop_trace(a: TropMatrix):
    """Tropical trace: minimum of the diagonal."""
    if a.rows != a.cols:
        raise ValueError("trace needs a square matrix")
    d = a.data.diagonal().min()
    return d.item() if isinstance(d, np.generic) else d
