from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thetablock import kernels
from thetablock.kernels import OK, INEXACT, conv2d, divide2d


def naive_conv(a, b, nrows):
    out = [[0] * (len(a[0]) + len(b[0]) - 1) for _ in range(nrows)]
    for i, ra in enumerate(a):
        for k, x in enumerate(ra):
            for j, rb in enumerate(b):
                if i + j >= nrows:
                    continue
                for l, y in enumerate(rb):
                    out[i + j][k + l] += int(x) * int(y)
    return out


small_int = st.integers(-5, 5)


def grid(rows, cols):
    return st.lists(st.lists(small_int, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@settings(max_examples=60)
@given(st.data())
def test_conv2d_matches_naive(backend, data):
    r1, c1, r2, c2 = (data.draw(st.integers(1, 4)) for _ in range(4))
    a = data.draw(grid(r1, c1))
    b = data.draw(grid(r2, c2))
    nrows = data.draw(st.integers(1, r1 + r2))
    got = conv2d(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64), nrows)
    assert got.tolist() == naive_conv(a, b, nrows)


def test_conv2d_switches_to_big_ints_on_overflow(backend):
    big = np.array([[1 << 40, 1 << 40]], dtype=np.int64)
    got = conv2d(big, big, 1)
    assert got.dtype == object
    assert got.tolist() == [[1 << 80, 1 << 81, 1 << 80]]


@settings(max_examples=60)
@given(st.data())
def test_divide2d_inverts_conv2d(backend, data):
    rq, cq = data.draw(st.integers(1, 4)), data.draw(st.integers(1, 4))
    rd, cd = data.draw(st.integers(1, 3)), data.draw(st.integers(1, 3))
    quot = data.draw(grid(rq, cq))
    den = data.draw(grid(rd, cd))
    lead = data.draw(st.sampled_from([1, -1]))
    den[0][0] = lead
    nrows = rq
    prod = conv2d(np.array(quot, dtype=np.int64), np.array(den, dtype=np.int64), nrows)
    width = cq + cd - 1
    R = np.zeros((nrows, width), dtype=np.int64)
    R[:, :prod.shape[1]] = prod[:nrows]
    q, status = divide2d(R, np.array(den, dtype=np.int64), nrows)
    assert status == OK
    assert q[:, :cq].tolist() == quot
    assert not q[:, cq:].any()


def test_divide2d_reports_inexact(backend):
    R = np.array([[1, 0, 1]], dtype=np.int64)
    den = np.array([[1, 1]], dtype=np.int64)
    _, status = divide2d(R, den, 1)
    assert status == INEXACT


def test_divide2d_falls_back_to_fractions(backend):
    R = np.array([[1, 1]], dtype=np.int64)
    den = np.array([[2, 2]], dtype=np.int64)
    q, status = divide2d(R, den, 1)
    assert status == OK
    assert q.dtype == object
    assert q[0, 0] == Fraction(1, 2) and q[0, 1] == 0


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")
