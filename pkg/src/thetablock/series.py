"""Exact truncated Fourier series in ``q`` and one or several elliptic variables.

Exponents are stored as integers: ``q`` in units of 1/24 and ``zeta`` in
units of 1/2, which covers eta's ``q^(1/24)``, theta's ``q^(1/8)`` and
``zeta^(1/2)``.  Coefficients are exact (int64 when small, otherwise Python
ints or Fractions).  Every series carries ``qmax``: all coefficients with
``qexp <= qmax`` are known, nothing above is stored.

Bivariate series are dense row blocks (see :mod:`thetablock.kernels`);
multivariate series are sparse dictionaries since they only appear in the
rank-4 lattice computations.
"""
from __future__ import annotations

import heapq
import json
from collections import defaultdict
from fractions import Fraction
from math import gcd
from numbers import Rational
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from . import kernels

QDEN = 24
ZDEN = 2
MULTI_ZDEN = 10
_I64_LIMIT = 1 << 62


class SeriesError(ValueError):
    """Base class for series arithmetic failures."""


class DenominatorMismatch(SeriesError):
    pass


class NotDivisibleError(SeriesError, ArithmeticError):
    """Raised when an order-by-order division leaves a nonzero remainder."""


class NotInvertibleError(SeriesError):
    pass


def qunits(x) -> int:
    """Natural ``q`` exponent -> integer count of 1/24."""
    v = Fraction(x) * QDEN
    if v.denominator != 1:
        raise SeriesError(f"q exponent {x} is not a multiple of 1/{QDEN}")
    return int(v)


def zunits(x) -> int:
    v = Fraction(x) * ZDEN
    if v.denominator != 1:
        raise SeriesError(f"zeta exponent {x} is not a multiple of 1/{ZDEN}")
    return int(v)


def _normal_coeff(c):
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, (int, np.integer)):
        return int(c)
    if isinstance(c, Rational):
        return _normal_coeff(Fraction(c.numerator, c.denominator))
    raise TypeError(f"coefficient {c!r} is not an exact rational")


def _tidy(arr: np.ndarray) -> np.ndarray:
    """Return int64 when every entry is a small integer, else object."""
    if arr.dtype == np.int64:
        return arr
    if arr.dtype.kind in "iub":
        if arr.size and int(np.abs(arr.astype(object)).max()) > _I64_LIMIT:
            return arr.astype(object)
        return arr.astype(np.int64)
    if arr.dtype != object:
        raise TypeError(f"floating or unsupported dtype {arr.dtype}; coefficients must be exact")
    flat = [_normal_coeff(c) for c in arr.ravel()]
    if all(isinstance(c, int) for c in flat) and (not flat or max(abs(c) for c in flat) <= _I64_LIMIT):
        return np.array(flat, dtype=np.int64).reshape(arr.shape)
    out = np.empty(arr.shape, dtype=object)
    out.ravel()[:] = flat
    return out


def _gcd_all(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = gcd(g, int(v))
    return g


class FourierSeries:
    """Truncated bivariate series ``sum c(q, z) q^(q/24) zeta^(z/2)``.

    Rows of the coefficient block sit at ``q0 + i*qstep``, columns at
    ``z0 + j``.  Instances are immutable.
    """

    qden = QDEN
    zden = ZDEN
    __slots__ = ("_c", "q0", "qstep", "z0", "qmax")

    def __init__(self, coeffs, q0: int, z0: int, qmax: int, qstep: int = QDEN):
        arr = np.asarray(coeffs)
        if arr.ndim != 2:
            raise SeriesError("coefficient block must be 2-D")
        qmax = int(qmax)
        if qstep <= 0:
            raise SeriesError("qstep must be positive")
        keep = (qmax - q0) // qstep + 1 if qmax >= q0 else 0
        arr = arr[:max(keep, 0)]
        if arr.size:
            arr = _tidy(arr)
            mask = arr != 0
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
        else:
            rows = cols = ()
        if len(rows) == 0:
            arr = np.zeros((0, 0), dtype=np.int64)
            q0 = z0 = 0
            qstep = QDEN
        else:
            r0, r1 = int(rows[0]), int(rows[-1])
            c0, c1 = int(cols[0]), int(cols[-1])
            step = _gcd_all(rows - r0) or 1
            arr = arr[r0:r1 + 1:step, c0:c1 + 1]
            q0 = q0 + r0 * qstep
            qstep = qstep * step
            z0 = z0 + c0
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self._c = arr
        self.q0 = int(q0)
        self.qstep = int(qstep)
        self.z0 = int(z0)
        self.qmax = qmax

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, qmax: int) -> "FourierSeries":
        return cls(np.zeros((0, 0), dtype=np.int64), 0, 0, qmax)

    @classmethod
    def monomial(cls, qexp: int, zexp: int, coeff, qmax: int) -> "FourierSeries":
        return cls(np.array([[_normal_coeff(coeff)]], dtype=object), qexp, zexp, qmax)

    @classmethod
    def one(cls, qmax: int) -> "FourierSeries":
        return cls.monomial(0, 0, 1, qmax)

    @classmethod
    def from_terms(cls, terms: Mapping[Tuple[int, int], object], qmax: int) -> "FourierSeries":
        """Build from ``{(qexp, zexp): coeff}`` with exponents in scaled units."""
        items = [(int(k[0]), int(k[1]), _normal_coeff(v)) for k, v in terms.items() if v != 0]
        items = [t for t in items if t[0] <= qmax]
        if not items:
            return cls.zero(qmax)
        qs = [t[0] for t in items]
        zs = [t[1] for t in items]
        q0, z0 = min(qs), min(zs)
        step = _gcd_all(q - q0 for q in qs) or QDEN
        arr = np.zeros(((max(qs) - q0) // step + 1, max(zs) - z0 + 1), dtype=object)
        for q, z, c in items:
            arr[(q - q0) // step, z - z0] += c
        return cls(arr, q0, z0, qmax, step)

    # -- inspection ---------------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def is_zero(self) -> bool:
        return self._c.size == 0

    @property
    def q_order(self) -> Optional[int]:
        return None if self.is_zero else self.q0

    @property
    def q_top(self) -> Optional[int]:
        return None if self.is_zero else self.q0 + (self._c.shape[0] - 1) * self.qstep

    def _ord_bound(self) -> int:
        return self.qmax + 1 if self.is_zero else self.q0

    @property
    def terms(self) -> Dict[Tuple[int, int], object]:
        out = {}
        if self.is_zero:
            return out
        rows, cols = np.nonzero(self._c != 0)
        for i, j in zip(rows.tolist(), cols.tolist()):
            out[(self.q0 + i * self.qstep, self.z0 + j)] = _normal_coeff(self._c[i, j])
        return out

    def __len__(self) -> int:
        return int(np.count_nonzero(self._c != 0)) if self._c.size else 0

    def coefficient(self, qexp: int, zexp: int):
        if qexp > self.qmax:
            raise SeriesError(f"q^{qexp}/{QDEN} lies above qmax={self.qmax}")
        if self.is_zero:
            return 0
        i, r = divmod(qexp - self.q0, self.qstep)
        j = zexp - self.z0
        if r or i < 0 or i >= self._c.shape[0] or j < 0 or j >= self._c.shape[1]:
            return 0
        return _normal_coeff(self._c[i, j])

    def q_slice(self, qexp: int) -> Dict[int, object]:
        """Laurent polynomial in zeta at ``q^(qexp/24)`` as ``{zexp: coeff}``."""
        if qexp > self.qmax:
            raise SeriesError(f"q^{qexp}/{QDEN} lies above qmax={self.qmax}")
        if self.is_zero:
            return {}
        i, r = divmod(qexp - self.q0, self.qstep)
        if r or i < 0 or i >= self._c.shape[0]:
            return {}
        row = self._c[i]
        return {self.z0 + int(j): _normal_coeff(row[j]) for j in np.flatnonzero(row != 0)}

    def q_exponents(self) -> list:
        if self.is_zero:
            return []
        rows = np.flatnonzero((self._c != 0).any(axis=1))
        return [self.q0 + int(i) * self.qstep for i in rows]

    def dense(self, q_lo: int, q_hi: int, q_step: int, z_lo: int, z_hi: int, z_step: int = 1) -> np.ndarray:
        """Coefficients on the rectangular grid given (inclusive bounds)."""
        nr = (q_hi - q_lo) // q_step + 1
        nc = (z_hi - z_lo) // z_step + 1
        dtype = np.int64 if self._c.dtype == np.int64 else object
        out = np.zeros((max(nr, 0), max(nc, 0)), dtype=dtype)
        for (q, z), c in self.terms.items():
            i, ri = divmod(q - q_lo, q_step)
            j, rj = divmod(z - z_lo, z_step)
            if ri or rj or not (0 <= i < nr and 0 <= j < nc):
                raise SeriesError(f"term q^{q} z^{z} falls off the requested grid")
            out[i, j] = c
        return out

    def truncate(self, qmax: int) -> "FourierSeries":
        if qmax > self.qmax:
            raise SeriesError(f"cannot raise precision from {self.qmax} to {qmax}")
        return FourierSeries(self._c, self.q0, self.z0, qmax, self.qstep)

    def scale_z(self, a: int) -> "FourierSeries":
        """Substitute ``z -> a z``."""
        if a == 0:
            raise SeriesError("scale_z(0) collapses the elliptic variable")
        if self.is_zero:
            return self
        arr = self._c
        if a < 0:
            arr = arr[:, ::-1]
            z0 = -(self.z0 + arr.shape[1] - 1)
            a = -a
        else:
            z0 = self.z0
        out = np.zeros((arr.shape[0], a * (arr.shape[1] - 1) + 1), dtype=arr.dtype)
        out[:, ::a] = arr
        return FourierSeries(out, self.q0, z0 * a, self.qmax, self.qstep)

    def shift(self, dq: int, dz: int) -> "FourierSeries":
        """Multiply by the monomial ``q^dq zeta^dz`` (exact, shifts qmax)."""
        return FourierSeries(self._c, self.q0 + dq, self.z0 + dz, self.qmax + dq, self.qstep)

    def map_coeffs(self, fn) -> "FourierSeries":
        arr = np.vectorize(fn, otypes=[object])(self._c.astype(object)) if self._c.size else self._c
        return FourierSeries(arr, self.q0, self.z0, self.qmax, self.qstep)

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> "FourierSeries":
        return FourierSeries(-self._c, self.q0, self.z0, self.qmax, self.qstep)

    def __add__(self, other):
        if not isinstance(other, FourierSeries):
            other = FourierSeries.monomial(0, 0, other, self.qmax)
        return ring_combine(self, other, "add")

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, FourierSeries):
            other = FourierSeries.monomial(0, 0, other, self.qmax)
        return ring_combine(self, other, "sub")

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, FourierSeries):
            return series_mul(self, other)
        c = _normal_coeff(other)
        return FourierSeries(self._c.astype(object) * c, self.q0, self.z0, self.qmax, self.qstep)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return series_pow(self, e)

    def __truediv__(self, other):
        if isinstance(other, FourierSeries):
            return div_exact(self, other)
        return self * (Fraction(1) / _normal_coeff(other))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FourierSeries):
            return NotImplemented
        return self.qmax == other.qmax and self.terms == other.terms

    def same_terms(self, other: "FourierSeries", qmax: Optional[int] = None) -> bool:
        """Compare terms up to ``qmax`` (default: the common precision)."""
        top = min(self.qmax, other.qmax) if qmax is None else qmax
        return self.truncate(top).terms == other.truncate(top).terms

    def __hash__(self):
        return hash((self.qmax, tuple(sorted(self.terms.items()))))

    def __repr__(self) -> str:
        return f"FourierSeries({len(self)} terms, q_order={self.q_order}, qmax={self.qmax}/{QDEN})"

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        rows = []
        for (q, z), c in sorted(self.terms.items()):
            c = Fraction(c)
            rows.append([q, z, c.numerator, c.denominator])
        return {"qden": QDEN, "zden": ZDEN, "qmax": self.qmax, "terms": rows}

    @classmethod
    def from_json(cls, data) -> "FourierSeries":
        if isinstance(data, str):
            data = json.loads(data)
        if data.get("qden", QDEN) != QDEN or data.get("zden", ZDEN) != ZDEN:
            raise DenominatorMismatch("serialized series uses different exponent denominators")
        terms = {(q, z): Fraction(n, d) for q, z, n, d in data["terms"]}
        return cls.from_terms(terms, data["qmax"])


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _check_dens(a, b) -> None:
    if a.qden != b.qden or a.zden != b.zden:
        raise DenominatorMismatch(f"({a.qden},{a.zden}) vs ({b.qden},{b.zden})")


def _embed(s: FourierSeries, q0: int, g: int, nrows: int, z0: int, ncols: int, dtype) -> np.ndarray:
    out = np.zeros((nrows, ncols), dtype=dtype)
    if s.is_zero or nrows <= 0:
        return out
    start = (s.q0 - q0) // g
    stride = s.qstep // g
    src = s.coeffs
    last = min(src.shape[0], (nrows - 1 - start) // stride + 1) if start < nrows else 0
    if last <= 0:
        return out
    c = s.z0 - z0
    out[start:start + (last - 1) * stride + 1:stride, c:c + src.shape[1]] = src[:last]
    return out


def _common_dtype(*series):
    return np.int64 if all(s.coeffs.dtype == np.int64 for s in series) else object


def ring_combine(a: FourierSeries, b: FourierSeries, op: str = "add") -> FourierSeries:
    """Termwise sum or difference; precision is the smaller of the two."""
    _check_dens(a, b)
    if op not in ("add", "sub"):
        raise ValueError(f"op must be 'add' or 'sub', got {op!r}")
    qmax = min(a.qmax, b.qmax)
    live = [s for s in (a, b) if not s.is_zero]
    if not live:
        return FourierSeries.zero(qmax)
    g = _gcd_all([s.qstep for s in live] + [s.q0 - live[0].q0 for s in live])
    q0 = min(s.q0 for s in live)
    qtop = min(max(s.q_top for s in live), qmax)
    if qtop < q0:
        return FourierSeries.zero(qmax)
    z0 = min(s.z0 for s in live)
    ztop = max(s.z0 + s.coeffs.shape[1] - 1 for s in live)
    nrows = (qtop - q0) // g + 1
    ncols = ztop - z0 + 1
    dtype = _common_dtype(*live)
    if dtype == np.int64:
        bound = sum(int(np.abs(s.coeffs).max()) for s in live)
        if bound > kernels.SAFE:
            dtype = object
    A = _embed(a, q0, g, nrows, z0, ncols, dtype)
    B = _embed(b, q0, g, nrows, z0, ncols, dtype)
    out = A + B if op == "add" else A - B
    return FourierSeries(out, q0, z0, qmax, g)


def series_mul(a: FourierSeries, b: FourierSeries) -> FourierSeries:
    """Truncated Cauchy product.

    The result is known up to ``min(a.qmax + ord(b), b.qmax + ord(a))``;
    a zero factor counts as having order ``qmax + 1``.
    """
    _check_dens(a, b)
    qmax = min(a.qmax + b._ord_bound(), b.qmax + a._ord_bound())
    if a.is_zero or b.is_zero:
        return FourierSeries.zero(qmax)
    g = gcd(a.qstep, b.qstep)
    q0 = a.q0 + b.q0
    if q0 > qmax:
        return FourierSeries.zero(qmax)
    nrows = (qmax - q0) // g + 1
    A = _embed(a, a.q0, g, nrows, a.z0, a.coeffs.shape[1], a.coeffs.dtype)
    B = _embed(b, b.q0, g, nrows, b.z0, b.coeffs.shape[1], b.coeffs.dtype)
    out = kernels.conv2d(A, B, nrows)
    return FourierSeries(out, q0, a.z0 + b.z0, qmax, g)


def div_exact(num: FourierSeries, den: FourierSeries) -> FourierSeries:
    """Solve ``quot * den = num`` order by order in ``q``.

    Each step divides a zeta-slice by the lowest ``q``-slice of ``den``
    (long division from its lowest zeta exponent); a nonzero remainder
    raises :class:`NotDivisibleError`.  The quotient is known up to
    ``min(num.qmax - o, den.qmax - o + ord(quot))`` where ``o = ord(den)``.
    """
    _check_dens(num, den)
    if den.is_zero:
        raise ZeroDivisionError("division by the zero series")
    o = den.q0
    if num.is_zero:
        return FourierSeries.zero(num.qmax - o)
    qord = num.q0 - o
    qmax = min(num.qmax - o, den.qmax - o + qord)
    if qmax < qord:
        return FourierSeries.zero(qmax)
    g = gcd(num.qstep, den.qstep)
    nrows = (qmax - qord) // g + 1
    dtype = _common_dtype(num, den)
    N = _embed(num, num.q0, g, nrows, num.z0, num.coeffs.shape[1], dtype)
    D = _embed(den, den.q0, g, nrows, den.z0, den.coeffs.shape[1], dtype)
    p = int(np.flatnonzero(D[0] != 0)[0])
    pad = D.shape[1]
    W = N.shape[1]
    while True:
        R = np.zeros((nrows, W + 2 * pad), dtype=dtype)
        R[:, pad:pad + W] = N
        quot, status = kernels.divide2d(R, D, nrows)
        if status == kernels.OK:
            break
        if status == kernels.INEXACT:
            raise NotDivisibleError("nonzero remainder in order-by-order division")
        if pad > 64 * (W + D.shape[1]):
            raise NotDivisibleError("quotient support does not stabilise; not divisible")
        pad *= 2
    z0 = num.z0 - pad - den.z0 - p
    return FourierSeries(quot, qord, z0, qmax, g)


def inverse(a: FourierSeries) -> FourierSeries:
    """Multiplicative inverse; the lowest ``q``-slice must be a monomial."""
    if a.is_zero:
        raise NotInvertibleError("zero series has no inverse")
    low = a.q_slice(a.q0)
    if len(low) != 1:
        raise NotInvertibleError(f"lowest q-slice has {len(low)} terms; need a single monomial")
    one = FourierSeries.one(a.qmax - a.q0)
    return div_exact(one, a)


def series_pow(a: FourierSeries, e: int) -> FourierSeries:
    """Integer power by repeated squaring; negative powers invert first."""
    e = int(e)
    if e == 0:
        return FourierSeries.one(a.qmax - a._ord_bound() if not a.is_zero else a.qmax)
    if e < 0:
        a = inverse(a)
        e = -e
    result = None
    base = a
    while e:
        if e & 1:
            result = base if result is None else series_mul(result, base)
        e >>= 1
        if e:
            base = series_mul(base, base)
    return result


def q_slice(a: FourierSeries, n: int) -> Dict[int, object]:
    return a.q_slice(n)


# ---------------------------------------------------------------------------
# multivariate
# ---------------------------------------------------------------------------

ZVec = Tuple[int, ...]


class MultiFourierSeries:
    """Sparse truncated series in ``q`` and a lattice variable.

    The exponent ``k`` is an integer vector of length ``rank`` holding twice
    the pairings ``(l, b_i)`` of the dual vector ``l`` with the lattice basis.
    For ``A4^v(5)`` in the fundamental-weight basis that is ``l`` written in
    units of ``alpha_i/10``, hence the default ``zden=10``.
    """

    qden = QDEN
    __slots__ = ("rank", "zden", "qmax", "_slices")

    def __init__(self, rank: int, terms: Mapping[Tuple[int, ZVec], object], qmax: int, zden: int = MULTI_ZDEN):
        self.rank = int(rank)
        self.zden = int(zden)
        self.qmax = int(qmax)
        slices: Dict[int, Dict[ZVec, object]] = defaultdict(dict)
        for (q, k), c in terms.items():
            if q > self.qmax:
                continue
            k = tuple(int(x) for x in k)
            if len(k) != self.rank:
                raise SeriesError(f"exponent vector {k} has wrong length for rank {self.rank}")
            c = _normal_coeff(c)
            if c != 0:
                s = slices[int(q)]
                s[k] = s.get(k, 0) + c
                if s[k] == 0:
                    del s[k]
        self._slices = {q: s for q, s in slices.items() if s}

    @classmethod
    def _from_slices(cls, rank, slices, qmax, zden):
        obj = cls.__new__(cls)
        obj.rank, obj.zden, obj.qmax = rank, zden, qmax
        obj._slices = {q: s for q, s in slices.items() if s and q <= qmax}
        return obj

    @classmethod
    def one(cls, rank: int, qmax: int, zden: int = MULTI_ZDEN) -> "MultiFourierSeries":
        return cls(rank, {(0, (0,) * rank): 1}, qmax, zden)

    @property
    def is_zero(self) -> bool:
        return not self._slices

    @property
    def q_order(self) -> Optional[int]:
        return min(self._slices) if self._slices else None

    def _ord_bound(self) -> int:
        return self.qmax + 1 if self.is_zero else min(self._slices)

    @property
    def terms(self) -> Dict[Tuple[int, ZVec], object]:
        return {(q, k): c for q, s in self._slices.items() for k, c in s.items()}

    def q_exponents(self) -> list:
        return sorted(self._slices)

    def q_slice(self, qexp: int) -> Dict[ZVec, object]:
        if qexp > self.qmax:
            raise SeriesError(f"q^{qexp}/{QDEN} lies above qmax={self.qmax}")
        return dict(self._slices.get(qexp, {}))

    def __len__(self) -> int:
        return sum(len(s) for s in self._slices.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiFourierSeries):
            return NotImplemented
        return (self.rank, self.zden, self.qmax) == (other.rank, other.zden, other.qmax) and self._slices == other._slices

    def __repr__(self) -> str:
        return f"MultiFourierSeries(rank={self.rank}, {len(self)} terms, q_order={self.q_order}, qmax={self.qmax}/{QDEN})"

    def _check(self, other) -> None:
        if self.rank != other.rank or self.zden != other.zden or self.qden != other.qden:
            raise DenominatorMismatch("rank or exponent denominators differ")

    def __neg__(self):
        return MultiFourierSeries._from_slices(
            self.rank, {q: {k: -c for k, c in s.items()} for q, s in self._slices.items()}, self.qmax, self.zden)

    def __add__(self, other):
        self._check(other)
        qmax = min(self.qmax, other.qmax)
        out = {q: dict(s) for q, s in self._slices.items() if q <= qmax}
        for q, s in other._slices.items():
            if q > qmax:
                continue
            t = out.setdefault(q, {})
            for k, c in s.items():
                v = t.get(k, 0) + c
                if v:
                    t[k] = v
                else:
                    t.pop(k, None)
        return MultiFourierSeries._from_slices(self.rank, out, qmax, self.zden)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, MultiFourierSeries):
            return multi_mul(self, other)
        c = _normal_coeff(other)
        return MultiFourierSeries._from_slices(
            self.rank, {q: {k: v * c for k, v in s.items()} for q, s in self._slices.items()} if c else {},
            self.qmax, self.zden)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return multi_pow(self, e)

    def __truediv__(self, other):
        return multi_div_exact(self, other)

    def times_q_series(self, f: FourierSeries) -> "MultiFourierSeries":
        """Multiply by a series in ``q`` alone (no zeta dependence)."""
        if any(z != 0 for (_, z) in f.terms):
            raise SeriesError("factor depends on zeta")
        fq = {q: c for (q, _), c in f.terms.items()}
        qmax = min(self.qmax + f._ord_bound(), f.qmax + self._ord_bound())
        out: Dict[int, Dict[ZVec, object]] = defaultdict(dict)
        for qa, s in self._slices.items():
            for qb, c in fq.items():
                q = qa + qb
                if q > qmax:
                    continue
                t = out[q]
                for k, v in s.items():
                    t[k] = t.get(k, 0) + v * c
        for t in out.values():
            for k in [k for k, v in t.items() if v == 0]:
                del t[k]
        return MultiFourierSeries._from_slices(self.rank, out, qmax, self.zden)

    def specialize(self, v) -> FourierSeries:
        """Substitute ``z * v`` (``v`` in the basis) for the lattice variable.

        The pairing ``(l, z v)`` is ``z * sum v_i (l, b_i)``, so the new zeta
        exponent in half-units is the dot product ``k . v``.
        """
        v = [int(x) for x in v]
        if len(v) != self.rank:
            raise SeriesError("specialization vector has wrong length")
        terms: Dict[Tuple[int, int], object] = defaultdict(int)
        for q, s in self._slices.items():
            for k, c in s.items():
                terms[(q, sum(a * b for a, b in zip(k, v)))] += c
        return FourierSeries.from_terms(terms, self.qmax)

    def map_exponents(self, fn) -> "MultiFourierSeries":
        """Apply a linear map to every exponent vector (e.g. a Weyl reflection)."""
        out: Dict[int, Dict[ZVec, object]] = {}
        for q, s in self._slices.items():
            t: Dict[ZVec, object] = {}
            for k, c in s.items():
                kk = tuple(int(x) for x in fn(k))
                t[kk] = t.get(kk, 0) + c
            out[q] = {k: c for k, c in t.items() if c}
        return MultiFourierSeries._from_slices(self.rank, out, self.qmax, self.zden)


def _poly_mul(a: Dict[ZVec, object], b: Dict[ZVec, object], out: Dict[ZVec, object], sign: int = 1) -> None:
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + sign * ca * cb


def multi_mul(a: MultiFourierSeries, b: MultiFourierSeries) -> MultiFourierSeries:
    a._check(b)
    qmax = min(a.qmax + b._ord_bound(), b.qmax + a._ord_bound())
    out: Dict[int, Dict[ZVec, object]] = defaultdict(dict)
    for qa, sa in a._slices.items():
        for qb, sb in b._slices.items():
            if qa + qb <= qmax:
                _poly_mul(sa, sb, out[qa + qb])
    for t in out.values():
        for k in [k for k, v in t.items() if v == 0]:
            del t[k]
    return MultiFourierSeries._from_slices(a.rank, out, qmax, a.zden)


def multi_pow(a: MultiFourierSeries, e: int) -> MultiFourierSeries:
    if e < 0:
        a = multi_div_exact(MultiFourierSeries.one(a.rank, a.qmax - a._ord_bound(), a.zden), a)
        e = -e
    if e == 0:
        return MultiFourierSeries.one(a.rank, a.qmax - a._ord_bound(), a.zden)
    result = None
    base = a
    while e:
        if e & 1:
            result = base if result is None else multi_mul(result, base)
        e >>= 1
        if e:
            base = multi_mul(base, base)
    return result


def _laurent_divide(num: Dict[ZVec, object], den: Dict[ZVec, object]) -> Dict[ZVec, object]:
    """Exact division of Laurent polynomials, lowest lexicographic term first."""
    if not num:
        return {}
    lo = min(den)
    hi = max(den)
    lead = den[lo]
    limit = tuple(x - y for x, y in zip(max(num), hi))
    rem = dict(num)
    heap = list(rem)
    heapq.heapify(heap)
    quot: Dict[ZVec, object] = {}
    while heap:
        m = heapq.heappop(heap)
        v = rem.get(m, 0)
        if v == 0:
            continue
        qk = tuple(x - y for x, y in zip(m, lo))
        if qk > limit:
            raise NotDivisibleError("nonzero remainder in multivariate Laurent division")
        c = Fraction(v) / lead
        c = c.numerator if c.denominator == 1 else c
        quot[qk] = c
        for kd, cd in den.items():
            k = tuple(x + y for x, y in zip(qk, kd))
            nv = rem.get(k, 0) - c * cd
            if nv:
                if k not in rem or rem[k] == 0:
                    heapq.heappush(heap, k)
                rem[k] = nv
            else:
                rem.pop(k, None)
    return quot


def multi_div_exact(num: MultiFourierSeries, den: MultiFourierSeries) -> MultiFourierSeries:
    """Order-by-order division; monomials are ordered lexicographically."""
    num._check(den)
    if den.is_zero:
        raise ZeroDivisionError("division by the zero series")
    o = den.q_order
    if num.is_zero:
        return MultiFourierSeries._from_slices(num.rank, {}, num.qmax - o, num.zden)
    qord = num.q_order - o
    qmax = min(num.qmax - o, den.qmax - o + qord)
    g = _gcd_all([q - o for q in den._slices] + [q - num.q_order for q in num._slices]) or QDEN
    theta0 = den._slices[o]
    rem = {q: dict(s) for q, s in num._slices.items()}
    quot: Dict[int, Dict[ZVec, object]] = {}
    q = qord
    while q <= qmax:
        target = rem.get(q + o, {})
        target = {k: c for k, c in target.items() if c}
        if target:
            part = _laurent_divide(target, theta0)
            quot[q] = part
            for qd, sd in den._slices.items():
                if qd == o:
                    continue
                tq = q + qd
                if tq - o > qmax:
                    continue
                _poly_mul(part, sd, rem.setdefault(tq, {}), sign=-1)
        q += g
    return MultiFourierSeries._from_slices(num.rank, quot, qmax, num.zden)
