"""Even lattices by Gram matrix, the A4 data, and lattice theta blocks.

Dual vectors are stored by their pairings with the lattice basis:
``l`` in ``L^v`` is the integer vector ``y = (l, b_1), ..., (l, b_n)``.  For
``A4^v(5)`` in the fundamental-weight basis, ``y`` is ``l`` written in
units of ``alpha_i/5``.  Its norm is ``y^T G^-1 y``.  A linear form of a
theta factor is such a ``y``: the factor is ``theta(tau, sum_i y_i z_i)``.
"""
from __future__ import annotations

import itertools
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import floor, gcd, isqrt
from typing import Dict, List, Sequence, Tuple

from .errors import DescriptorError, IdenticallyZeroError
from .jacobi import ThetaBlockDescriptor, block_from_args
from .series import QDEN, MultiFourierSeries, multi_div_exact, multi_mul, qunits, series_pow
from .jacobi import _eta_scaled

Matrix = Tuple[Tuple[int, ...], ...]


class EnumerationCapError(RuntimeError):
    """Short-vector enumeration visited more candidates than allowed."""


def _det(M: Sequence[Sequence]) -> Fraction:
    """Exact determinant by fraction-free elimination."""
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    det = Fraction(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if A[r][i] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            A[i], A[piv] = A[piv], A[i]
            det = -det
        det *= A[i][i]
        for r in range(i + 1, n):
            f = A[r][i] / A[i][i]
            if f:
                for c in range(i, n):
                    A[r][c] -= f * A[i][c]
    return det


def _inverse(M: Sequence[Sequence]) -> List[List[Fraction]]:
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for i in range(n):
        piv = next(r for r in range(i, n) if A[r][i] != 0)
        A[i], A[piv] = A[piv], A[i]
        p = A[i][i]
        A[i] = [x / p for x in A[i]]
        for r in range(n):
            if r != i and A[r][i] != 0:
                f = A[r][i]
                A[r] = [x - f * y for x, y in zip(A[r], A[i])]
    return [row[n:] for row in A]


@dataclass(frozen=True)
class GramLattice:
    gram: Matrix
    name: str = field(default="", compare=False)

    def __post_init__(self):
        g = tuple(tuple(int(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", g)
        n = len(g)
        if n == 0 or any(len(row) != n for row in g):
            raise ValueError("Gram matrix must be square and nonempty")
        if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise ValueError("Gram matrix must be symmetric")
        for k in range(1, n + 1):
            if _det([row[:k] for row in g[:k]]) <= 0:
                raise ValueError(f"Gram matrix is not positive definite (leading minor {k})")
        if any(g[i][i] % 2 for i in range(n)):
            raise ValueError("lattice is not even (odd diagonal entry)")

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def det(self) -> int:
        return int(_det(self.gram))

    @property
    def inverse(self) -> List[List[Fraction]]:
        return _gram_inverse(self.gram)

    def norm(self, x: Sequence[int]) -> int:
        """``(x, x)`` for ``x`` in ``L`` given in basis coordinates."""
        g = self.gram
        return sum(x[i] * g[i][j] * x[j] for i in range(self.rank) for j in range(self.rank))

    def dual_norm(self, y: Sequence) -> Fraction:
        """``(l, l)`` for the dual vector with pairings ``y``."""
        inv = self.inverse
        return sum((Fraction(y[i]) * inv[i][j] * y[j] for i in range(self.rank) for j in range(self.rank)), Fraction(0))

    def dual_pair(self, y1: Sequence, y2: Sequence) -> Fraction:
        inv = self.inverse
        return sum((Fraction(y1[i]) * inv[i][j] * y2[j] for i in range(self.rank) for j in range(self.rank)), Fraction(0))

    def to_lattice_coords(self, y: Sequence) -> Tuple[Fraction, ...]:
        """Coordinates ``x`` with ``l = sum x_i b_i``; ``l`` is in ``L`` iff all are integers."""
        inv = self.inverse
        return tuple(sum((inv[i][j] * y[j] for j in range(self.rank)), Fraction(0)) for i in range(self.rank))

    def lattice_to_dual(self, x: Sequence[int]) -> Tuple[int, ...]:
        """Pairings ``y = G x`` of the lattice vector with coordinates ``x``."""
        return tuple(sum(self.gram[i][j] * x[j] for j in range(self.rank)) for i in range(self.rank))

    def sublattice(self, basis: Sequence[Sequence[int]], name: str = "") -> "GramLattice":
        S = [list(map(int, b)) for b in basis]
        g = self.gram
        n = self.rank
        new = [[sum(S[a][i] * g[i][j] * S[b][j] for i in range(n) for j in range(n)) for b in range(len(S))]
               for a in range(len(S))]
        return GramLattice(tuple(tuple(r) for r in new), name)

    @classmethod
    def from_json(cls, data) -> "GramLattice":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(tuple(r) for r in data))

    def to_json(self) -> list:
        return [list(r) for r in self.gram]


@lru_cache(maxsize=32)
def _gram_inverse(gram: Matrix) -> List[List[Fraction]]:
    return _inverse(gram)


# ---------------------------------------------------------------------------
# A4 data
# ---------------------------------------------------------------------------

CARTAN_A4 = ((2, -1, 0, 0), (-1, 2, -1, 0), (0, -1, 2, -1), (0, 0, -1, 2))
GRAM_A4V5 = tuple(tuple(min(i, j) * (5 - max(i, j)) for j in range(1, 5)) for i in range(1, 5))
POSITIVE_ROOTS_A4 = tuple(
    tuple(1 if i <= k <= j else 0 for k in range(4)) for i in range(4) for j in range(i, 4)
)
# ordered to match the ten partial sums a1, a2, a3, a4, a1+a2, ..., a1+a2+a3+a4
POSITIVE_ROOTS_A4 = tuple(sorted(POSITIVE_ROOTS_A4, key=lambda m: (sum(m), [-x for x in m])))
FUNDAMENTAL_WEIGHTS_5 = ((4, -1, -1, -1, -1), (3, 3, -2, -2, -2), (2, 2, 2, -3, -3), (1, 1, 1, 1, -4))
SIMPLE_ROOTS_AMBIENT = tuple(tuple(1 if k == i else (-1 if k == i + 1 else 0) for k in range(5)) for i in range(4))


def a4_data() -> dict:
    """Cartan matrix, ``A4^v(5)`` Gram, positive roots (alpha-coordinates), weights (ambient fifths)."""
    for i, a in enumerate(SIMPLE_ROOTS_AMBIENT):
        for j, w in enumerate(FUNDAMENTAL_WEIGHTS_5):
            if Fraction(sum(x * y for x, y in zip(a, w)), 5) != (1 if i == j else 0):
                raise AssertionError("simple roots and fundamental weights are not dual")
    for m in POSITIVE_ROOTS_A4:
        if sum(m[i] * CARTAN_A4[i][j] * m[j] for i in range(4) for j in range(4)) != 2:
            raise AssertionError("positive root of norm != 2")
    for i in range(4):
        for j in range(4):
            w5 = sum(x * y for x, y in zip(FUNDAMENTAL_WEIGHTS_5[i], FUNDAMENTAL_WEIGHTS_5[j]))
            if Fraction(w5, 5) != GRAM_A4V5[i][j]:
                raise AssertionError("weight Gram mismatch")
    return {
        "gram_root": [list(r) for r in CARTAN_A4],
        "gram_weight5": [list(r) for r in GRAM_A4V5],
        "positive_roots": [list(m) for m in POSITIVE_ROOTS_A4],
        "fundamental_weights": [[Fraction(x, 5) for x in w] for w in FUNDAMENTAL_WEIGHTS_5],
        "simple_roots": [list(a) for a in SIMPLE_ROOTS_AMBIENT],
    }


def index_N(a: Sequence[int]) -> int:
    """``(a, a)/2`` in ``A4^v(5)``: the index of the weight-2 block for ``a``."""
    G = GRAM_A4V5
    twice = sum(a[i] * G[i][j] * a[j] for i in range(4) for j in range(4))
    return twice // 2


def index_polynomial(a: Sequence[int]) -> int:
    a1, a2, a3, a4 = a
    return (2 * a1 * a1 + 3 * a1 * a2 + 2 * a1 * a3 + a1 * a4 + 3 * a2 * a2 + 4 * a2 * a3
            + 2 * a2 * a4 + 3 * a3 * a3 + 3 * a3 * a4 + 2 * a4 * a4)


A3_5_BASIS = ((2, -1, 0, 0), (-1, 2, -1, 0), (0, -1, 2, -1))
T0_BASIS = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))


def _named() -> Dict[str, GramLattice]:
    a4v5 = GramLattice(GRAM_A4V5, "A4v5")
    return {
        "A4": GramLattice(CARTAN_A4, "A4"),
        "A4v5": a4v5,
        "A3_5": a4v5.sublattice(A3_5_BASIS, "A3_5"),
        "2A1_5": GramLattice(((10, 0), (0, 10)), "2A1_5"),
        "A0": a4v5.sublattice(T0_BASIS, "A0"),
        "B0": GramLattice(((4, 2), (2, 6)), "B0"),
    }


NAMED_LATTICES = _named()


def named_lattice(name: str) -> GramLattice:
    try:
        return NAMED_LATTICES[name]
    except KeyError:
        raise KeyError(f"unknown lattice {name!r}; known: {', '.join(sorted(NAMED_LATTICES))}") from None


# ---------------------------------------------------------------------------
# short vectors and discriminant classes
# ---------------------------------------------------------------------------


def _fp_form(Q: List[List[Fraction]]):
    """Write ``y^T Q y = sum_i d_i (y_i + sum_{j>i} mu_ij y_j)^2``."""
    n = len(Q)
    q = [[Fraction(x) for x in row] for row in Q]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    d = [q[i][i] for i in range(n)]
    mu = [[q[i][j] if j > i else Fraction(0) for j in range(n)] for i in range(n)]
    return d, mu


def _int_range(c: Fraction, s2: Fraction):
    """Integers ``y`` with ``(y - c)^2 <= s2``."""
    if s2 < 0:
        return range(0)
    r = isqrt(s2.numerator // s2.denominator) + 1
    lo = floor(c) - r - 1
    hi = floor(c) + r + 1
    while (lo - c) ** 2 > s2 and lo <= hi:
        lo += 1
    while (hi - c) ** 2 > s2 and hi >= lo:
        hi -= 1
    return range(lo, hi + 1)


def short_dual_vectors(L: GramLattice, bound, cap: int = 2_000_000) -> List[Tuple[Tuple[int, ...], Fraction]]:
    """All dual vectors (as pairings ``y``) with ``(l, l) <= bound``, with their norms."""
    bound = Fraction(bound)
    n = L.rank
    d, mu = _fp_form(L.inverse)
    out = []
    y = [0] * n
    visited = 0

    def rec(i: int, rem: Fraction):
        nonlocal visited
        c = -sum((mu[i][j] * y[j] for j in range(i + 1, n)), Fraction(0))
        for v in _int_range(c, rem / d[i]):
            visited += 1
            if visited > cap:
                raise EnumerationCapError(f"more than {cap} candidates below norm {bound}")
            y[i] = v
            left = rem - d[i] * (v - c) ** 2
            if i == 0:
                out.append((tuple(y), bound - left))
            else:
                rec(i - 1, left)
        y[i] = 0

    rec(n - 1, bound)
    out.sort(key=lambda t: (t[1], t[0]))
    return out


def class_key(L: GramLattice, y: Sequence[int]) -> Tuple[Fraction, ...]:
    """Class of ``l`` in ``L^v / L``: fractional parts of its lattice coordinates."""
    return tuple(x - floor(x) for x in L.to_lattice_coords(y))


@dataclass(frozen=True)
class DualClassReport:
    order_of_D: int
    classes: Tuple[Tuple[Fraction, int, int], ...]  # (min_norm, class_count, elements_per_class)
    norm2_holds: bool
    found: int = 0
    norm_bound: Fraction = Fraction(2)

    def to_json(self) -> dict:
        return {
            "order_of_D": self.order_of_D,
            "classes": [[str(n), c, e] for n, c, e in self.classes],
            "norm2_holds": self.norm2_holds,
            "classes_found": self.found,
            "norm_bound": str(self.norm_bound),
        }


def class_minima(L: GramLattice, bound=2, cap: int = 2_000_000) -> Dict[tuple, Tuple[Fraction, List[tuple]]]:
    """``class -> (minimal norm, representatives of that norm)`` for classes reached below ``bound``."""
    best: Dict[tuple, Tuple[Fraction, List[tuple]]] = {}
    for y, nrm in short_dual_vectors(L, bound, cap):
        k = class_key(L, y)
        cur = best.get(k)
        if cur is None or nrm < cur[0]:
            best[k] = (nrm, [y])
        elif nrm == cur[0]:
            cur[1].append(y)
    return best


def discriminant_classes(L: GramLattice, norm_bound=2, cap: int = 2_000_000) -> DualClassReport:
    """Group short dual vectors modulo ``L``; Norm_2 holds iff every class has a vector of norm <= 2."""
    norm_bound = Fraction(norm_bound)
    best = class_minima(L, max(norm_bound, Fraction(2)), cap)
    order = L.det
    norm2 = sum(1 for nrm, _ in best.values() if nrm <= 2) == order
    tally: Dict[Tuple[Fraction, int], int] = defaultdict(int)
    for nrm, reps in best.values():
        if nrm <= norm_bound:
            tally[(nrm, len(reps))] += 1
    classes = tuple((nrm, cnt, per) for (nrm, per), cnt in sorted(tally.items()))
    return DualClassReport(order, classes, norm2, len(best), norm_bound)


# ---------------------------------------------------------------------------
# Weyl group action on A4^v(5)
# ---------------------------------------------------------------------------


def _y_to_ambient5(y: Sequence[int]) -> Tuple[int, ...]:
    # l = sum y_i alpha_i / 5 ; returns 5 * ambient coordinates
    return (y[0], y[1] - y[0], y[2] - y[1], y[3] - y[2], -y[3])


def _ambient5_to_y(v: Sequence[int]) -> Tuple[int, ...]:
    return (v[0], v[0] + v[1], v[0] + v[1] + v[2], v[0] + v[1] + v[2] + v[3])


def weyl_group_elements():
    """``S5 x {+-1}`` acting on ambient coordinates (240 maps)."""
    for perm in itertools.permutations(range(5)):
        for s in (1, -1):
            yield perm, s


def weyl_act(g, y: Sequence[int]) -> Tuple[int, ...]:
    perm, s = g
    v = _y_to_ambient5(y)
    return _ambient5_to_y([s * v[perm[i]] for i in range(5)])


def weyl_orbits_by_norm() -> Dict[Fraction, List[int]]:
    """Orbit sizes of the group on the discriminant classes of ``A4^v(5)``, per minimal norm."""
    L = NAMED_LATTICES["A4v5"]
    best = class_minima(L, 2)
    if len(best) != L.det:
        raise AssertionError("class enumeration incomplete")
    by_norm: Dict[Fraction, set] = defaultdict(set)
    rep = {}
    for k, (nrm, reps) in best.items():
        by_norm[nrm].add(k)
        rep[k] = reps[0]
    group = list(weyl_group_elements())
    out: Dict[Fraction, List[int]] = {}
    for nrm, keys in sorted(by_norm.items()):
        left = set(keys)
        sizes = []
        while left:
            k = next(iter(sorted(left)))
            orbit = {class_key(L, weyl_act(g, rep[k])) for g in group}
            if not orbit <= keys:
                raise AssertionError("group action does not preserve norms")
            sizes.append(len(orbit))
            left -= orbit
        out[nrm] = sizes
    return out


def weyl_transitivity_check() -> bool:
    """True iff classes of equal minimal norm form a single orbit."""
    return all(len(sizes) == 1 for sizes in weyl_orbits_by_norm().values())


# ---------------------------------------------------------------------------
# lattice theta blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeBlockDescriptor:
    """``sign * eta^f0 * prod_y (theta(tau, y . z) / eta)^f(y)`` on ``lattice``."""

    lattice: GramLattice
    eta_exp: int
    forms: Tuple[Tuple[Tuple[int, ...], int], ...]
    sign: int = 1
    zero: bool = False

    def __post_init__(self):
        tally: Dict[Tuple[int, ...], int] = {}
        for y, e in self.forms:
            y = tuple(int(x) for x in y)
            if len(y) != self.lattice.rank:
                raise DescriptorError("form has wrong length")
            tally[y] = tally.get(y, 0) + int(e)
        object.__setattr__(self, "forms", tuple(sorted((y, e) for y, e in tally.items() if e)))
        if not self.zero and any(all(x == 0 for x in y) for y, _ in self.forms):
            raise DescriptorError("zero form in a nonzero descriptor")

    @property
    def weight(self) -> Fraction:
        return Fraction(self.eta_exp, 2)

    @property
    def n_thetas(self) -> int:
        return sum(e for _, e in self.forms)

    @property
    def raw_eta_power(self) -> int:
        return self.eta_exp - self.n_thetas

    def index_gram(self) -> List[List[Fraction]]:
        """``sum f(y) y y^T``: the lattice index form the block carries."""
        n = self.lattice.rank
        return [[sum((Fraction(e) * y[i] * y[j] for y, e in self.forms), Fraction(0)) for j in range(n)]
                for i in range(n)]

    def to_text(self) -> str:
        parts = [f"eta^{self.raw_eta_power}"] if self.raw_eta_power else []
        for y, e in sorted(self.forms, key=lambda t: (sum(1 for x in t[0] if x), [-abs(x) for x in t[0]], t[0])):
            lin = "+".join(f"{'' if c == 1 else '-' if c == -1 else c}z{i + 1}" for i, c in enumerate(y) if c)
            lin = lin.replace("+-", "-")
            parts.append(f"theta({lin})" + (f"^{e}" if e != 1 else ""))
        body = " * ".join(parts) or "1"
        return ("-" if self.sign < 0 else "") + body

    def to_json(self) -> dict:
        return {"gram": self.lattice.to_json(), "lattice": self.lattice.name, "eta_exp": self.eta_exp,
                "raw_eta_power": self.raw_eta_power, "weight": str(self.weight),
                "forms": [[list(y), e] for y, e in self.forms], "sign": self.sign, "zero": self.zero,
                "text": self.to_text()}


def theta_a4() -> LatticeBlockDescriptor:
    """``prod_{r > 0} theta((r, z)) / eta^6`` over ``A4^v(5)``: forms are the positive roots."""
    return LatticeBlockDescriptor(NAMED_LATTICES["A4v5"], 4, tuple((m, 1) for m in POSITIVE_ROOTS_A4))


def specialize_block(d: LatticeBlockDescriptor, v: Sequence[int]) -> ThetaBlockDescriptor:
    """Substitute ``z = z v``: each form ``y`` becomes ``theta_{y . v}``."""
    v = [int(x) for x in v]
    if len(v) != d.lattice.rank:
        raise DescriptorError("specialization vector has wrong length")
    args = []
    for y, e in d.forms:
        if e < 0:
            raise DescriptorError("specialize_block expects a pure block")
        args += [sum(a * b for a, b in zip(y, v))] * e
    out = block_from_args(args, d.eta_exp, v)
    if d.sign < 0 and not out.zero:
        out = ThetaBlockDescriptor(out.eta_exp, out.theta_exps, -out.sign, False, out.a)
    return out


def _is_primitive(S: Sequence[Sequence[int]], n: int) -> bool:
    k = len(S)
    g = 0
    for cols in itertools.combinations(range(n), k):
        g = gcd(g, int(_det([[S[i][c] for c in cols] for i in range(k)])))
    return g == 1


@dataclass(frozen=True)
class PullbackResult:
    descriptor: LatticeBlockDescriptor
    removed: int

    @property
    def weight(self) -> Fraction:
        return self.descriptor.weight


def quasi_pullback_block(d: LatticeBlockDescriptor, sub_basis: Sequence[Sequence[int]],
                         name: str = "") -> PullbackResult:
    """Restrict to the sublattice spanned by ``sub_basis`` (rows in basis coordinates).

    Forms vanishing on the sublattice are removed: ``theta/eta`` becomes
    ``eta^2`` (the derivative of theta at zero is a multiple of ``eta^3``),
    so ``f(0)`` grows by 2 and the weight by 1 for each removed form.
    """
    S = [[int(x) for x in b] for b in sub_basis]
    n = d.lattice.rank
    if not S or any(len(b) != n for b in S):
        raise ValueError("sub_basis rows must have the lattice rank")
    if len(S) > n or not _is_primitive(S, n):
        raise ValueError("sub_basis does not span a primitive sublattice")
    sub = d.lattice.sublattice(S, name)
    kept = []
    removed = 0
    for y, e in d.forms:
        y2 = tuple(sum(b[i] * y[i] for i in range(n)) for b in S)
        if all(x == 0 for x in y2):
            removed += e
        else:
            kept.append((y2, e))
    if not kept:
        raise IdenticallyZeroError("every theta factor vanishes on the sublattice")
    out = LatticeBlockDescriptor(sub, d.eta_exp + 2 * removed, tuple(kept), d.sign)
    return PullbackResult(out, removed)


def restrict_block(d: LatticeBlockDescriptor, sub_basis: Sequence[Sequence[int]], name: str = "") -> LatticeBlockDescriptor:
    return quasi_pullback_block(d, sub_basis, name).descriptor


def rank_weight_sane(d: LatticeBlockDescriptor) -> bool:
    """``rank <= 8`` and ``rank/2 <= k <= 12 - rank`` for a pure lattice theta block."""
    n = d.lattice.rank
    k = d.weight
    return n <= 8 and Fraction(n, 2) <= k <= 12 - n


# ---------------------------------------------------------------------------
# multivariate expansions
# ---------------------------------------------------------------------------


def _theta_form(y: Sequence[int], qmax: int, rank: int) -> MultiFourierSeries:
    # theta(tau, (y, z)) = sum_n (-1)^n q^((2n+1)^2/8) zeta^((2n+1) y / 2)
    terms = {}
    n = 0
    while 3 * (2 * n + 1) ** 2 <= qmax:
        for m in (n, -n - 1):
            k = tuple((2 * m + 1) * x for x in y)
            terms[(3 * (2 * m + 1) ** 2, k)] = -1 if m % 2 else 1
        n += 1
    return MultiFourierSeries(rank, terms, qmax)


def lattice_theta_expand(d: LatticeBlockDescriptor, qmax) -> MultiFourierSeries:
    """Multivariate expansion up to ``q^qmax`` from theta sums and an eta power.

    Exponent vectors are ``2 (l, b_i)``; for ``A4^v(5)`` that is ``alpha_i/10`` units.
    """
    if d.zero:
        raise IdenticallyZeroError("descriptor is identically zero")
    Q = qunits(qmax)
    if Q < QDEN:
        raise ValueError("expansion needs qmax >= 1")
    rank = d.lattice.rank
    e = d.raw_eta_power
    # work slightly deeper so the eta division leaves the full window
    W = Q + max(0, -e) + QDEN
    acc = MultiFourierSeries.one(rank, W)
    for y, f in d.forms:
        if f < 0:
            raise ValueError("lattice_theta_expand expects a pure block")
        t = _theta_form(y, W, rank)
        for _ in range(f):
            acc = multi_mul(acc, t)
    if e:
        acc = acc.times_q_series(series_pow(_eta_scaled(W), e))
    if d.sign < 0:
        acc = -acc
    if acc.qmax < Q:
        raise AssertionError("working precision too small")
    return MultiFourierSeries._from_slices(rank, {q: s for q, s in acc._slices.items() if q <= Q}, Q, acc.zden)


def lattice_hecke(f: MultiFourierSeries, m: int, weight: int) -> MultiFourierSeries:
    """``f_m(n, l) = sum_{a | (n, m), l/a in L^v} a^(k-1) f(nm/a^2, l/a)``."""
    qmax_nat = f.qmax // QDEN
    top = qmax_nat // m
    out: Dict[Tuple[int, Tuple[int, ...]], object] = defaultdict(int)
    divs = [a for a in range(1, m + 1) if m % a == 0]
    for (q, k), c in f.terms.items():
        if q % QDEN:
            raise ValueError("Hecke operator needs integral q exponents")
        n1 = q // QDEN
        for a in divs:
            num = n1 * a * a
            if num % m:
                continue
            n = num // m
            if n > top or n % a:
                continue
            key = (n * QDEN, tuple(a * x for x in k))
            out[key] += Fraction(a) ** (weight - 1) * c
    return MultiFourierSeries(f.rank, out, top * QDEN, f.zden)


def lattice_psi(d: LatticeBlockDescriptor, qmax: int = 1) -> MultiFourierSeries:
    """``Psi = -(Theta|T_-(2))/Theta`` up to ``q^qmax`` (``qmax <= 3``)."""
    qmax = int(qmax)
    if not 0 <= qmax <= 3:
        raise ValueError("multivariate Psi is limited to q-orders 0..3")
    theta = lattice_theta_expand(d, 2 * (qmax + 1))
    if theta.q_order != QDEN:
        raise ValueError("block must have q-order exactly 1")
    k = d.weight
    if k.denominator != 1:
        raise ValueError("weight must be integral")
    t2 = lattice_hecke(theta, 2, int(k))
    psi = -multi_div_exact(t2, theta)
    return MultiFourierSeries._from_slices(psi.rank, {q: s for q, s in psi._slices.items() if q <= qmax * QDEN},
                                           qmax * QDEN, psi.zden)


def lattice_psi_q0(d: LatticeBlockDescriptor, qmax: int = 1) -> MultiFourierSeries:
    """:func:`lattice_psi` with the ``q^0`` slice checked against ``2k + sum f(y)(zeta^y + zeta^-y)``."""
    psi = lattice_psi(d, qmax)
    want: Dict[Tuple[int, ...], int] = defaultdict(int)
    want[(0,) * d.lattice.rank] += int(2 * d.weight)
    for y, f in d.forms:
        want[tuple(2 * x for x in y)] += f
        want[tuple(-2 * x for x in y)] += f
    want = {k: v for k, v in want.items() if v}
    if psi.q_slice(0) != want:
        raise AssertionError("q^0 slice of the lattice Psi disagrees with the block data")
    return psi


def hyperbolic_norm(L: GramLattice, n: int, k: Sequence[int]) -> Fraction:
    """``2n - (l, l)`` for the exponent ``q^n zeta^l`` with ``k = 2y``."""
    return 2 * Fraction(n) - L.dual_norm([Fraction(x, 2) for x in k])
