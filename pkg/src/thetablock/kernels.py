"""Dense kernels behind the series arithmetic.

Each int64 kernel exists twice: a numba ``@njit`` version and a numpy
version that returns identical results.  The numba path is used when numba
imports and ``THETABLOCK_DISABLE_NUMBA`` is unset (or ``0``); otherwise, or
after ``set_backend("numpy")``, the numpy path runs.  Object arrays (Python
big ints, Fractions) always go through numpy.

Division kernels report a status code instead of raising so the caller can
retry on a wider grid or in exact object arithmetic.
"""
from __future__ import annotations

import os
from fractions import Fraction

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

# |x| <= SAFE and |y| <= SAFE guarantees x + y fits in int64
SAFE = 1 << 61

OK = 0
INEXACT = 1
NONINTEGRAL = 2
OVERFLOW = 3
SPILL = 4

_backend = "numba" if HAVE_NUMBA and os.environ.get("THETABLOCK_DISABLE_NUMBA", "0") in ("", "0") else "numpy"


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` for the int64 kernels."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


def get_backend() -> str:
    return _backend


# ---------------------------------------------------------------------------
# numpy implementations (int64 and object)
# ---------------------------------------------------------------------------


def conv2d_numpy(a: np.ndarray, b: np.ndarray, nrows: int) -> np.ndarray:
    """One shifted add of ``b`` per nonzero entry of ``a`` (pass the sparser factor as ``a``)."""
    dtype = np.int64 if (a.dtype == np.int64 and b.dtype == np.int64) else object
    out = np.zeros((nrows, a.shape[1] + b.shape[1] - 1), dtype=dtype)
    if a.size == 0 or b.size == 0:
        return out
    wb = b.shape[1]
    rows, cols = np.nonzero(a != 0)
    for i, k in zip(rows.tolist(), cols.tolist()):
        if i >= nrows:
            break
        span = min(b.shape[0], nrows - i)
        out[i:i + span, k:k + wb] += a[i, k] * b[:span]
    return out


def _exact_div(v, lead):
    if isinstance(v, int) and isinstance(lead, int) and v % lead == 0:
        return v // lead
    q = Fraction(v) / lead
    return q.numerator if q.denominator == 1 else q


def divide2d_numpy(R: np.ndarray, den: np.ndarray, nrows: int):
    """Order-by-order exact division; ``R`` is consumed.

    ``den[0]`` must be nonzero.  Quotient column ``t`` pairs with
    ``R`` column ``t`` shifted down by the lowest nonzero column ``p`` of
    ``den[0]``.  Returns ``(quot, status)``.
    """
    is_int = R.dtype == np.int64 and den.dtype == np.int64
    W = R.shape[1]
    nz0 = np.flatnonzero(den[0] != 0)
    p, h = int(nz0[0]), int(nz0[-1])
    lead = den[0, p]
    seg = den[0, p:h + 1]
    span = h - p
    quot = np.zeros((nrows, W), dtype=R.dtype)
    if is_int:
        maxden = int(np.abs(den).max())
        cap = SAFE // maxden
        lead = int(lead)
    drows = [i for i in range(1, min(den.shape[0], nrows)) if (den[i] != 0).any()]
    for n in range(nrows):
        row = R[n]
        nz = np.flatnonzero(row != 0)
        if nz.size == 0:
            continue
        if span == 0:
            # monomial leading slice: the whole row divides at once
            if is_int:
                if np.any(row % lead):
                    return quot, NONINTEGRAL
                qn = row // lead
                if np.abs(qn).max() > cap:
                    return quot, OVERFLOW
            else:
                qn = np.array([_exact_div(v, lead) if v != 0 else 0 for v in row], dtype=object)
            quot[n] = qn
            row[:] = 0
        else:
            top = int(nz[-1]) - span
            t = int(nz[0])
            while t < W:
                v = row[t]
                if v != 0:
                    if t > top:
                        return quot, INEXACT
                    if is_int:
                        v = int(v)
                        if v % lead:
                            return quot, NONINTEGRAL
                        c = v // lead
                        if abs(c) > cap or np.abs(row[t:t + span + 1]).max() > SAFE:
                            return quot, OVERFLOW
                    else:
                        c = _exact_div(v, lead)
                    quot[n, t] = c
                    row[t:t + span + 1] -= c * seg
                t += 1
        qn = quot[n]
        qnz = np.flatnonzero(qn != 0)
        lo, hi = int(qnz[0]), int(qnz[-1])
        qseg = qn[lo:hi + 1]
        qmaxabs = int(np.abs(qseg).max()) if is_int else 0
        for i in drows:
            if n + i >= nrows:
                break
            conv = np.convolve(qseg, den[i])
            start = lo - p
            stop = start + conv.size
            cnz = np.flatnonzero(conv != 0)
            if cnz.size == 0:
                continue
            if start + cnz[0] < 0 or start + cnz[-1] >= W:
                return quot, SPILL
            a, b = max(start, 0), min(stop, W)
            piece = conv[a - start:b - start]
            target = R[n + i, a:b]
            if is_int:
                bound = qmaxabs * int(np.abs(den[i]).max()) * min(qseg.size, den.shape[1])
                if bound > SAFE or np.abs(target).max() > SAFE:
                    return quot, OVERFLOW
            target -= piece
    return quot, OK


# ---------------------------------------------------------------------------
# numba implementations (int64 only)
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _conv2d_nb(a, b, nrows):
        ra, wa = a.shape
        rb, wb = b.shape
        out = np.zeros((nrows, wa + wb - 1), dtype=np.int64)
        brows = np.zeros(rb, dtype=np.int64)
        nb = 0
        for j in range(rb):
            for l in range(wb):
                if b[j, l] != 0:
                    brows[nb] = j
                    nb += 1
                    break
        for i in range(min(ra, nrows)):
            for k in range(wa):
                x = a[i, k]
                if x == 0:
                    continue
                for jj in range(nb):
                    j = brows[jj]
                    if i + j >= nrows:
                        break
                    for l in range(wb):
                        out[i + j, k + l] += x * b[j, l]
        return out

    @njit(cache=True)
    def _divide2d_nb(R, den, nrows):
        W = R.shape[1]
        rd, wd = den.shape
        p = -1
        h = -1
        for l in range(wd):
            if den[0, l] != 0:
                if p < 0:
                    p = l
                h = l
        lead = den[0, p]
        maxden = 0
        for i in range(rd):
            for l in range(wd):
                v = abs(den[i, l])
                if v > maxden:
                    maxden = v
        cap = SAFE // maxden
        quot = np.zeros((nrows, W), dtype=np.int64)
        drows = np.zeros(rd, dtype=np.int64)
        nd = 0
        for i in range(1, rd):
            for l in range(wd):
                if den[i, l] != 0:
                    drows[nd] = i
                    nd += 1
                    break
        for n in range(nrows):
            top = -1
            for t in range(W):
                if R[n, t] != 0:
                    top = t
            if top < 0:
                continue
            top -= h - p
            for t in range(W):
                v = R[n, t]
                if v == 0:
                    continue
                if t > top:
                    return quot, INEXACT
                if v % lead != 0:
                    return quot, NONINTEGRAL
                c = v // lead
                if abs(c) > cap:
                    return quot, OVERFLOW
                quot[n, t] = c
                for l in range(p, h + 1):
                    d = den[0, l]
                    if d != 0:
                        idx = t + l - p
                        if abs(R[n, idx]) > SAFE:
                            return quot, OVERFLOW
                        R[n, idx] -= c * d
            for ii in range(nd):
                i = drows[ii]
                if n + i >= nrows:
                    break
                for t in range(W):
                    c = quot[n, t]
                    if c == 0:
                        continue
                    for l in range(wd):
                        d = den[i, l]
                        if d == 0:
                            continue
                        idx = t + l - p
                        if idx < 0 or idx >= W:
                            return quot, SPILL
                        if abs(R[n + i, idx]) > SAFE:
                            return quot, OVERFLOW
                        R[n + i, idx] -= c * d
        return quot, OK


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _conv_bound(a: np.ndarray, b: np.ndarray) -> int:
    """Bound on any output entry: ``min(nnz) * max|a| * max|b|``."""
    if a.size == 0 or b.size == 0:
        return 0
    nnz = min(int(np.count_nonzero(a)), int(np.count_nonzero(b)))
    return int(np.abs(a).max()) * int(np.abs(b).max()) * nnz


def conv2d(a: np.ndarray, b: np.ndarray, nrows: int) -> np.ndarray:
    """Truncated 2-D Cauchy product: rows ``>= nrows`` are dropped.

    The factor with fewer nonzeros drives the loop.  int64 inputs stay in
    int64 only when an a-priori bound rules out overflow; otherwise the
    product is formed over Python integers.
    """
    if np.count_nonzero(a) > np.count_nonzero(b):
        a, b = b, a
    if a.dtype == np.int64 and b.dtype == np.int64:
        if _conv_bound(a, b) <= SAFE:
            if _backend == "numba":
                return _conv2d_nb(np.ascontiguousarray(a), np.ascontiguousarray(b), nrows)
            return conv2d_numpy(a, b, nrows)
    return conv2d_numpy(a.astype(object), b.astype(object), nrows)


def divide2d(R: np.ndarray, den: np.ndarray, nrows: int):
    """Dispatch for :func:`divide2d_numpy`; falls back to exact objects.

    Returns ``(quot, status)`` where status is ``OK``, ``INEXACT`` or
    ``SPILL``; the int64 statuses ``NONINTEGRAL`` and ``OVERFLOW`` trigger
    an automatic rerun over Python integers / Fractions.
    """
    if R.dtype == np.int64 and den.dtype == np.int64:
        work = R.copy()
        if _backend == "numba":
            quot, status = _divide2d_nb(work, np.ascontiguousarray(den), nrows)
        else:
            quot, status = divide2d_numpy(work, den, nrows)
        if status in (OK, INEXACT, SPILL):
            return quot, status
    return divide2d_numpy(R.astype(object), den.astype(object), nrows)
