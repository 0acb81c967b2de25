from __future__ import annotations

import json
from collections import defaultdict

import pytest
from hypothesis import given, settings, strategies as st

from conftest import A_VECTORS, phi, psi
from thetablock.errors import IdenticallyZeroError, WindowError
from thetablock.lifts import (
    HumbertLabel,
    SingularPart,
    borch_leading,
    borch_table,
    check_relation,
    divisor_list,
    fj_product,
    grit_table,
    humbert_multiplicity,
    psi_window,
    relation_terms,
    relation_window,
    sing_window,
    singular_part,
    verify_conjecture,
)

B_VALUES = {25: 10, 37: 12, 43: 13, 50: 14, 53: 14}


# ---------------------------------------------------------------------------
# additive lift
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("N", [25, 37])
def test_grit_table_symmetric_and_even(N):
    t = grit_table(phi(N, 9), 3, 3)
    assert t.is_symmetric() and t.is_even()
    assert t.fj_row(1) == {(n, r): c for (n, r), c in phi(N, 9).items() if n <= 3}


def test_grit_table_needs_window():
    with pytest.raises(WindowError):
        grit_table(phi(25, 4), 3, 3)


# ---------------------------------------------------------------------------
# multiplicative lift
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("N", sorted(A_VECTORS))
def test_borch_leading(N):
    lead = borch_leading(psi(N, 1))
    assert (lead.A, lead.B, lead.C, lead.D0) == (1, B_VALUES[N], N, 0)


def naive_borch(p, n_max, m_max):
    """Multiply the factors one by one as trivariate polynomials (keys ``(n, m, r)``)."""
    N = p.index
    lead = borch_leading(p)
    A, B, mC = int(lead.A), int(lead.B), int(lead.C) // N
    nq, nx = n_max - A + 1, m_max - mC + 1
    c = {k: v for k, v in p.items()}
    poly = {(0, 0, 0): 1}

    def times(poly, mono, e):
        # multiply by (1 - mono)^e, truncated; e < 0 uses the geometric series
        dn, dm, dr = mono
        for _ in range(abs(e)):
            new = defaultdict(int)
            for (n, m, r), v in poly.items():
                new[(n, m, r)] += v
                j = 1
                while True:
                    key = (n + j * dn, m + j * dm, r + j * dr)
                    if key[0] >= nq or key[1] >= nx:
                        break
                    new[key] += -v if e > 0 else v
                    if e > 0 or (dn, dm) == (0, 0):
                        break
                    j += 1
            poly = {k: v for k, v in new.items() if v}
        return poly

    for (n, r), v in c.items():
        if n == 0 and r < 0:
            poly = times(poly, (0, 0, r), int(v))
    for m in range(nx):
        for n in range(nq):
            if (n, m) == (0, 0):
                continue
            for (nn, r), v in c.items():
                if nn == n * m and v:
                    poly = times(poly, (n, m, r), int(v))
    return {(n + A, r + B, m + mC): v for (n, m, r), v in poly.items()}


@pytest.mark.parametrize("N", [25, 37])
def test_borch_table_matches_naive_product(N):
    p = psi(N, 4)
    assert borch_table(p, 2, 3).coeffs == naive_borch(p, 2, 3)


@pytest.mark.parametrize("N", [25, 37])
def test_first_two_fourier_jacobi_rows(N):
    f = phi(N, 9)
    p = psi(N, 4)
    t = borch_table(p, 3, 3)
    assert t.fj_row(1) == {k: v for k, v in f.items() if k[0] <= 3}
    assert t.fj_row(2) == {k: v for k, v in fj_product(f, p).items() if k[0] <= 3}


def test_borch_table_needs_window():
    with pytest.raises(WindowError):
        borch_table(psi(25, 1), 3, 3)


# ---------------------------------------------------------------------------
# singular part and divisors
# ---------------------------------------------------------------------------


def test_singular_part_rendering():
    sp = SingularPart(37, ((0, 0, 4, 0), (0, 1, 3, 1), (0, 5, 1, 25), (6, 30, 1, 12)))
    assert sp.to_text() == "z^5+3z+4+q^6 z^30"
    assert SingularPart(10, ((0, 2, -2, 4),)).to_text() == "-2z^2"
    assert SingularPart(10, ((1, 7, 1, 9),), complete=False).to_text() == "q z^7 (incomplete window)"


def test_singular_part_window_flag():
    assert sing_window(53) == 13
    assert not singular_part(psi(53, 3)).complete


@pytest.mark.parametrize("N", sorted(A_VECTORS))
def test_singular_orbits_are_canonical(N):
    sp = singular_part(psi(N, sing_window(N)))
    for n, r, c, D in sp.orbits:
        assert 0 <= r <= N and D == r * r - 4 * N * n
        assert D > 0 or (n, r) == (0, 0)


def test_psi37_divisors():
    p = psi(37, sing_window(37))
    assert divisor_list(p) == [(0, 1, 1, 10), (0, 2, 1, 4), (0, 3, 1, 2), (0, 4, 1, 1), (0, 5, 1, 1), (6, 30, 1, 1)]


def test_humbert_label_checks():
    p = psi(37, 9)
    with pytest.raises(ValueError):
        HumbertLabel(2, 4, 2)
    with pytest.raises(ValueError):
        humbert_multiplicity(p, (2, 17, 1))


@pytest.mark.parametrize("r0", [1, 2, 3, 5])
def test_humbert_on_q0_orbits_sums_multiples(r0):
    p = psi(37, 9)
    direct = sum(p.coeff_reduced(0, n * r0) for n in range(1, 38) if n * r0 <= 37)
    assert humbert_multiplicity(p, (0, r0, 1)) == direct


def test_humbert_m0_zero_label():
    p = psi(37, 9)
    assert humbert_multiplicity(p, (0, 1, 0)) == humbert_multiplicity(p, (0, 1, 1)) == 10
    with pytest.raises(ValueError, match="primitive"):
        humbert_multiplicity(p, (0, 2, 0))


# ---------------------------------------------------------------------------
# linear relations
# ---------------------------------------------------------------------------


@settings(max_examples=200)
@given(st.integers(5, 60), st.integers(1, 6), st.integers(-40, 40), st.integers(0, 12), st.integers(-60, 60))
def test_relation_terms_match_brute_force(N, alpha, beta, n, r):
    if 4 * N * alpha - beta * beta >= 0:
        with pytest.raises(ValueError):
            relation_terms(N, alpha, beta, n, r)
        return
    a1, a0 = 4 * N * n - 2 * beta * r, -r * r
    bound = abs(a1) + abs(a0) + 1  # Cauchy bound on the real roots
    want = [a for a in range(-bound, bound + 1)
            if 4 * N * (alpha * a * a + n * a) - (beta * a + r) ** 2 >= 0]
    assert relation_terms(N, alpha, beta, n, r) == want


def test_relation_needs_finite_sum():
    with pytest.raises(ValueError, match="not finite"):
        relation_terms(25, 1, 7, 0, 0)


def test_relation_small_range():
    nr, rr = (0, 3), (-10, 10)
    w = relation_window(37, 6, 30, range(0, 4), range(-10, 11))
    rep = check_relation(phi(37, w), 6, 30, nr, rr)
    assert rep.all_zero and rep.checked == 4 * 21
    ctrl = check_relation(phi(25, relation_window(25, 1, 11, range(0, 4), range(-10, 11))), 1, 11, nr, rr)
    assert not ctrl.all_zero
    assert json.loads(json.dumps(rep.to_json()))["all_zero"] is True


def test_relation_window_is_sufficient():
    w = relation_window(37, 6, 30, range(0, 4), range(-10, 11))
    with pytest.raises(WindowError):
        check_relation(phi(37, w - 1), 6, 30, (0, 3), (-10, 10))


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------


def test_verify_small_window():
    rep = verify_conjecture((1, 1, 1, 1), 2, 2)
    assert rep.equal and rep.fj_rows
    data = rep.to_json()
    assert set(data) == {"a", "N", "weight", "window", "equal", "sing", "sing_text", "divisors", "leading",
                         "fj_rows_match"}
    assert data["sing_text"] == "z^4+2z^3+3z^2+4z+4"
    assert "timings" in rep.to_json(timings=True)


def test_verify_rejects_zero_block():
    with pytest.raises(IdenticallyZeroError):
        verify_conjecture((1, 0, 0, 0))


def test_psi_window():
    assert psi_window(25, 3, 3) == 6 and psi_window(53, 3, 3) == 13
