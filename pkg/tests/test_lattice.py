from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from thetablock.errors import DescriptorError, IdenticallyZeroError
from thetablock.jacobi import block_expand, block_from_a, phi2_arguments, psi_from_block
from thetablock.lattice import (
    A3_5_BASIS,
    CARTAN_A4,
    POSITIVE_ROOTS_A4,
    T0_BASIS,
    EnumerationCapError,
    GramLattice,
    LatticeBlockDescriptor,
    a4_data,
    class_key,
    discriminant_classes,
    hyperbolic_norm,
    index_N,
    index_polynomial,
    lattice_hecke,
    lattice_psi_q0,
    lattice_theta_expand,
    named_lattice,
    quasi_pullback_block,
    rank_weight_sane,
    short_dual_vectors,
    specialize_block,
    theta_a4,
    weyl_act,
    weyl_group_elements,
    weyl_orbits_by_norm,
    weyl_transitivity_check,
)
from thetablock.series import QDEN

A4V5 = named_lattice("A4v5")


@lru_cache(maxsize=None)
def theta(qmax):
    return lattice_theta_expand(theta_a4(), qmax)


@lru_cache(maxsize=None)
def psi_a4():
    return lattice_psi_q0(theta_a4(), 1)


# ---------------------------------------------------------------------------
# Gram lattices
# ---------------------------------------------------------------------------


def test_gram_validation():
    with pytest.raises(ValueError):
        GramLattice(((2, 1), (0, 2)))
    with pytest.raises(ValueError):
        GramLattice(((2, 3), (3, 2)))
    with pytest.raises(ValueError):
        GramLattice(((3,),))


@pytest.mark.parametrize("name, det", [("A4", 5), ("A4v5", 125), ("A3_5", 500), ("2A1_5", 100), ("A0", 50),
                                       ("B0", 20)])
def test_named_lattices(name, det):
    assert named_lattice(name).det == det


def test_unknown_lattice_name():
    with pytest.raises(KeyError):
        named_lattice("E8")


def test_a4_data_is_consistent():
    data = a4_data()
    assert data["gram_weight5"] == [[4, 3, 2, 1], [3, 6, 4, 2], [2, 4, 6, 3], [1, 2, 3, 4]]
    assert len(data["positive_roots"]) == 10
    inv = A4V5.inverse
    # (1/5) A4 Cartan is the inverse of the weight Gram
    assert inv == [[Fraction(c, 5) for c in row] for row in CARTAN_A4]


@settings(max_examples=100)
@given(st.tuples(*[st.integers(-5, 5)] * 4))
def test_index_matches_polynomial_random(a):
    assert index_N(a) == index_polynomial(a)
    assert 2 * index_N(a) == sum(x * x for x in phi2_arguments(a))


def brute_short(L, bound, box):
    out = []
    for y in itertools.product(range(-box, box + 1), repeat=L.rank):
        nrm = L.dual_norm(y)
        if nrm <= bound:
            out.append((y, nrm))
    return sorted(out, key=lambda t: (t[1], t[0]))


@pytest.mark.parametrize("name, bound, box", [("B0", 3, 8), ("A0", 2, 7), ("A4v5", Fraction(6, 5), 5)])
def test_short_vectors_match_brute_force(name, bound, box):
    L = named_lattice(name)
    assert short_dual_vectors(L, bound) == brute_short(L, bound, box)


def test_enumeration_cap():
    with pytest.raises(EnumerationCapError):
        short_dual_vectors(A4V5, 20, cap=100)


# ---------------------------------------------------------------------------
# discriminant classes
# ---------------------------------------------------------------------------


def test_a4v5_class_table():
    rep = discriminant_classes(A4V5)
    assert rep.order_of_D == 125
    assert rep.classes == ((0, 1, 1), (Fraction(2, 5), 20, 1), (Fraction(4, 5), 30, 1), (Fraction(6, 5), 30, 2),
                           (Fraction(8, 5), 20, 3), (2, 24, 5))
    assert rep.norm2_holds


def test_rank_one_counterexample():
    rep = discriminant_classes(GramLattice(((14,),)))
    assert rep.order_of_D == 14 and not rep.norm2_holds
    assert rep.found == 11


def test_class_key_is_invariant_under_lattice_translation():
    y = (1, 0, 2, -1)
    for x in [(1, 0, 0, 0), (0, -2, 1, 3)]:
        shifted = tuple(a + b for a, b in zip(y, A4V5.lattice_to_dual(x)))
        assert class_key(A4V5, shifted) == class_key(A4V5, y)


def test_weyl_group_preserves_norm():
    group = list(weyl_group_elements())
    assert len(group) == 240
    y = (1, 2, -1, 3)
    assert {A4V5.dual_norm(weyl_act(g, y)) for g in group} == {A4V5.dual_norm(y)}


def test_weyl_transitivity():
    assert weyl_orbits_by_norm() == {0: [1], Fraction(2, 5): [20], Fraction(4, 5): [30], Fraction(6, 5): [30],
                                     Fraction(8, 5): [20], 2: [24]}
    assert weyl_transitivity_check()


# ---------------------------------------------------------------------------
# lattice blocks
# ---------------------------------------------------------------------------


def test_theta_a4_descriptor():
    d = theta_a4()
    assert d.weight == 2 and d.raw_eta_power == -6 and d.n_thetas == 10
    # the block's index form is the A4^v(5) Gram
    assert d.index_gram() == [[Fraction(x) for x in row] for row in A4V5.gram]


def test_two_design_constant():
    # sum over all 20 roots of (r, z)^2 = 2 C (z, z) with C = 1
    for v in itertools.product(range(-2, 3), repeat=4):
        lhs = 2 * sum(sum(m * x for m, x in zip(y, v)) ** 2 for y in POSITIVE_ROOTS_A4)
        assert lhs == 2 * A4V5.norm(v)


@settings(max_examples=50)
@given(st.tuples(*[st.integers(-6, 6)] * 4).filter(lambda a: any(a)))
def test_specialize_matches_block_from_a(a):
    assert specialize_block(theta_a4(), a) == block_from_a(a)


def test_specialize_rejects_bad_vector():
    with pytest.raises(DescriptorError):
        specialize_block(theta_a4(), (1, 1, 1))


def test_t0_quasi_pullback():
    res = quasi_pullback_block(theta_a4(), T0_BASIS)
    d = res.descriptor
    assert res.removed == 1 and d.weight == 3 and d.n_thetas == 9 and d.raw_eta_power == -3
    assert d.lattice.gram == ((4, 3, 2), (3, 6, 4), (2, 4, 6)) and d.lattice.det == 50
    assert dict(d.forms) == {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 2, (1, 1, 0): 1, (0, 1, 1): 2, (1, 1, 1): 2}
    assert rank_weight_sane(d)


def test_second_quasi_pullback():
    d0 = quasi_pullback_block(theta_a4(), T0_BASIS).descriptor
    res = quasi_pullback_block(d0, ((1, 0, 0), (0, 0, 1)))
    d = res.descriptor
    assert res.removed == 1 and d.weight == 4 and d.n_thetas == 8 and d.raw_eta_power == 0
    assert d.lattice.gram == ((4, 2), (2, 6))
    assert dict(d.forms) == {(1, 0): 2, (0, 1): 4, (1, 1): 2}
    assert rank_weight_sane(d)


def test_plain_pullback_to_a3():
    res = quasi_pullback_block(theta_a4(), A3_5_BASIS)
    d = res.descriptor
    assert res.removed == 0 and d.weight == 2
    assert d.lattice.gram == ((10, -5, 0), (-5, 10, -5), (0, -5, 10))
    forms = {y for y, _ in d.forms}
    assert (2, -1, 0) in forms and (1, 1, -1) in forms


def test_pullback_checks_primitivity():
    with pytest.raises(ValueError, match="primitive"):
        quasi_pullback_block(theta_a4(), ((2, 0, 0, 0),))
    with pytest.raises(ValueError):
        quasi_pullback_block(theta_a4(), ((1, 0, 0),))


def test_pullback_that_kills_everything():
    d = LatticeBlockDescriptor(GramLattice(((2, 0), (0, 2))), 3, (((1, 0), 1),))
    with pytest.raises(IdenticallyZeroError):
        quasi_pullback_block(d, ((0, 1),))


@pytest.mark.parametrize("x", [(1, 2, 1), (3, -1, 2), (1, 1, 4)])
def test_pullback_commutes_with_specialization(x):
    # specializing the restriction at x is specializing the original at sum x_k s_k
    d = theta_a4()
    sub = quasi_pullback_block(d, A3_5_BASIS).descriptor
    w = tuple(sum(x[k] * A3_5_BASIS[k][i] for k in range(3)) for i in range(4))
    assert specialize_block(sub, x) == specialize_block(d, w)


# ---------------------------------------------------------------------------
# multivariate expansions
# ---------------------------------------------------------------------------


def weyl_denominator():
    """``sum_{w in S5} sgn(w) e^{w rho}`` with ``rho = (2, 1, 0, -1, -2)`` in ambient coordinates.

    Keys are twice the alpha-coordinates of ``w rho`` (exponents are doubled pairings).
    """
    rho = (2, 1, 0, -1, -2)
    out = {}
    for perm in itertools.permutations(range(5)):
        inv = sum(1 for i in range(5) for j in range(i + 1, 5) if perm[i] > perm[j])
        v = [rho[perm[i]] for i in range(5)]
        m = tuple(sum(v[:j + 1]) for j in range(4))  # alpha coordinates
        out[tuple(2 * x for x in m)] = (-1) ** inv
    return out


def test_theta_a4_q1_slice_is_weyl_denominator():
    s = theta(1).q_slice(QDEN)
    assert theta(1).q_order == QDEN
    assert len(s) == 120 and set(s.values()) == {1, -1}
    assert s == weyl_denominator()


def test_theta_a4_is_anti_invariant_under_s1():
    th = theta(2)

    def s1(k):
        c1 = sum(CARTAN_A4[0][j] * k[j] for j in range(4))
        return (k[0] - c1, k[1], k[2], k[3])

    assert th.map_exponents(s1) == -th


@pytest.mark.parametrize("a", [(1, 1, 1, 1), (1, 1, 1, 2), (2, -1, -3, 6)])
def test_theta_a4_specializes_to_phi(a):
    th = theta(3)
    f = block_expand(block_from_a(a), 3)
    assert th.specialize(a) == f.series


def test_lattice_hecke_identity():
    th = theta(2)
    assert lattice_hecke(th, 1, 2) == th


def test_psi_a4_q0_slice():
    p = psi_a4()
    want = {(0, 0, 0, 0): 4}
    for m in POSITIVE_ROOTS_A4:
        want[tuple(2 * x for x in m)] = 1
        want[tuple(-2 * x for x in m)] = 1
    assert p.q_slice(0) == want


def test_psi_a4_specializes_to_psi37():
    a = (1, 1, 1, 2)
    assert psi_a4().specialize(a) == psi_from_block(block_from_a(a), 1).series


def test_psi_a4_singular_data_lives_in_q0():
    """Every singular coefficient at ``q^1`` is a translate of a ``q^0`` coefficient."""
    p = psi_a4()
    q0 = p.q_slice(0)
    q1 = p.q_slice(QDEN)
    singular = {k: c for k, c in q1.items() if hyperbolic_norm(A4V5, 1, k) < 0}
    assert singular
    allowed = {Fraction(-2 * j, 5) for j in range(1, 6)}
    for k, c in singular.items():
        assert hyperbolic_norm(A4V5, 1, k) in allowed
        found = False
        for x in itertools.product(range(-1, 2), repeat=4):
            gx = A4V5.lattice_to_dual(x)
            k2 = tuple(a + 2 * b for a, b in zip(k, gx))
            y = [Fraction(v, 2) for v in k]
            n2 = 1 + Fraction(A4V5.norm(x), 2) + sum(a * b for a, b in zip(y, x))
            if n2 == 0 and k2 in q0:
                assert q0[k2] == c
                found = True
                break
        assert found, k


def test_lattice_psi_rejects_deep_orders():
    from thetablock.lattice import lattice_psi
    with pytest.raises(ValueError):
        lattice_psi(theta_a4(), 4)
