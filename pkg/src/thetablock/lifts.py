"""Additive and multiplicative lifts of theta blocks and their divisor data.

A :class:`LiftTable` holds coefficients ``c(n, r, m)`` of
``sum c(n, r, m) q^n zeta^r xi^(N m)``: ``m`` is the Fourier-Jacobi index.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import IdenticallyZeroError, WindowError
from .jacobi import (
    JacobiFormSeries,
    _divisors,
    block_expand,
    block_from_a,
    psi_from_phi,
    psi_q0_expected,
)
from .series import QDEN, series_mul


def _int_items(phi: JacobiFormSeries):
    for (n, r), c in phi.items():
        if Fraction(n).denominator != 1 or Fraction(r).denominator != 1:
            raise ValueError("lift tables need integral exponents")
        yield (int(n), int(r)), c


def _gen_binom(e: int, j: int) -> int:
    """``binom(e, j)`` for any integer ``e`` (falling factorial over ``j!``)."""
    num = 1
    for i in range(j):
        num *= e - i
    den = 1
    for i in range(2, j + 1):
        den *= i
    return num // den


@dataclass(frozen=True)
class Leading:
    A: Fraction
    B: Fraction
    C: Fraction
    D0: int

    def to_json(self) -> dict:
        return {"A": str(self.A), "B": str(self.B), "C": str(self.C), "D0": self.D0}


@dataclass
class LiftTable:
    index_N: int
    weight: int
    coeffs: Dict[Tuple[int, int, int], object]
    n_max: int
    m_max: int
    leading: Optional[Leading] = None

    def get(self, n: int, r: int, m: int):
        return self.coeffs.get((n, r, m), 0)

    def fj_row(self, m: int) -> Dict[Tuple[int, int], object]:
        """``{(n, r): c}`` of the ``xi^(N m)`` coefficient."""
        return {(n, r): c for (n, r, mm), c in self.coeffs.items() if mm == m}

    def is_symmetric(self) -> bool:
        top = min(self.n_max, self.m_max)
        return all(self.get(m, r, n) == c for (n, r, m), c in self.coeffs.items() if n <= top and m <= top)

    def is_even(self) -> bool:
        return all(self.get(n, -r, m) == c for (n, r, m), c in self.coeffs.items())

    def first_mismatch(self, other: "LiftTable") -> Optional[dict]:
        keys = sorted(set(self.coeffs) | set(other.coeffs), key=lambda k: (k[2], k[0], k[1]))
        for k in keys:
            a, b = self.get(*k), other.get(*k)
            if a != b:
                return {"n": k[0], "r": k[1], "m": k[2], "left": str(a), "right": str(b)}
        return None


# ---------------------------------------------------------------------------
# Gritsenko lift
# ---------------------------------------------------------------------------


def grit_table(phi: JacobiFormSeries, n_max: int, m_max: int) -> LiftTable:
    """``c(n, r, m) = sum_{d | (n, r, m)} d^(k-1) c(nm/d^2, r/d; phi)`` for ``m >= 1``.

    The ``m = 0`` row vanishes because ``phi`` has no ``q^0`` term.
    """
    if phi.q_order is None:
        raise ValueError("phi is the zero series")
    if phi.q_order < 1:
        raise ValueError("c(0,0; phi) != 0 would need the Eisenstein term, which is not handled")
    k = int(phi.weight)
    if Fraction(phi.weight) != k:
        raise ValueError("weight must be integral")
    if phi.qmax < n_max * m_max:
        raise WindowError(f"phi is known to q^{phi.qmax}; the lift needs q^{n_max * m_max}")
    terms = dict(_int_items(phi))
    by_n: Dict[int, List[Tuple[int, object]]] = {}
    for (n, r), c in terms.items():
        by_n.setdefault(n, []).append((r, c))
    out: Dict[Tuple[int, int, int], object] = {}
    for m in range(1, m_max + 1):
        for n in range(0, n_max + 1):
            for d in _divisors(gcd(n, m)):
                src = n * m // (d * d)
                w = Fraction(d) ** (k - 1)
                w = w.numerator if w.denominator == 1 else w
                for r1, c in by_n.get(src, ()):
                    key = (n, d * r1, m)
                    out[key] = out.get(key, 0) + w * c
    out = {key: v for key, v in out.items() if v != 0}
    return LiftTable(phi.index, k, out, n_max, m_max)


# ---------------------------------------------------------------------------
# Borcherds product
# ---------------------------------------------------------------------------


def borch_leading(psi: JacobiFormSeries) -> Leading:
    """``24A = sum c(0,r)``, ``2B = sum_{r>0} r c(0,r)``, ``4C = sum r^2 c(0,r)``, ``D0``."""
    q0 = psi.q_slice(0)
    A = Fraction(sum(q0.values()), 24)
    B = Fraction(sum(r * c for r, c in q0.items() if r > 0), 2)
    C = Fraction(sum(r * r * c for r, c in q0.items()), 4)
    D0 = 0
    for (n, r), c in psi.items():
        if n < 0 and r == 0:
            D0 += len(_divisors(-n)) * c
    return Leading(A, B, C, int(D0))


def _singular_integrality(psi: JacobiFormSeries) -> None:
    N = psi.index
    for (n, r), c in psi.items():
        if 4 * N * Fraction(n) - Fraction(r) ** 2 <= 0 and Fraction(c).denominator != 1:
            raise ValueError(f"singular coefficient c({n},{r}) = {c} is not an integer")


def borch_table(psi: JacobiFormSeries, n_max: int, m_max: int) -> LiftTable:
    """Expand ``q^A zeta^B xi^C prod (1 - q^n zeta^r xi^(N m))^c(nm, r)`` on the window.

    The product runs over ``m > 0``, or ``m = 0`` and ``n > 0``, or
    ``m = n = 0`` and ``r < 0``.  Each factor is expanded binomially and
    truncated at ``q^n_max`` and ``xi^(N m_max)``.
    """
    if psi.weight != 0:
        raise ValueError("Borcherds products take weight-0 input")
    _singular_integrality(psi)
    N = psi.index
    lead = borch_leading(psi)
    for name in ("A", "B"):
        if getattr(lead, name).denominator != 1:
            raise ValueError(f"{name} = {getattr(lead, name)} is not an integer (character obstruction)")
    if lead.C % N:
        raise ValueError(f"C = {lead.C} is not a multiple of the index {N}")
    A, B, mC = int(lead.A), int(lead.B), int(lead.C) // N
    nq = n_max - A + 1  # rows of the bare product that reach the window
    nx = m_max - mC + 1
    out: Dict[Tuple[int, int, int], object] = {}
    if nq <= 0 or nx <= 0:
        return LiftTable(N, 0, out, n_max, m_max, lead)
    need = (nq - 1) * (nx - 1)
    if psi.qmax < need:
        raise WindowError(f"Psi is known to q^{psi.qmax}; the product needs q^{need}")

    terms = dict(_int_items(psi))
    factors: List[Tuple[int, int, int, int]] = []  # (n, m, r, exponent)
    for (n, r), c in terms.items():
        if n == 0 and r < 0:
            if c < 0:
                raise ValueError("negative exponent on a pure zeta factor: meromorphic product")
            factors.append((0, 0, r, int(c)))
    for m in range(0, nx):
        for n in range(0, nq):
            if m == 0 and n == 0:
                continue
            for (nn, r), c in terms.items():
                if nn == n * m:
                    factors.append((n, m, r, int(c)))
    reach = B + sum(abs(r) * e for (n, m, r, e) in factors if n == 0 and m == 0)
    rmax = max([abs(r) for (n, m, r, e) in factors if (n, m) != (0, 0)] or [0])
    W = reach + (nq + nx) * rmax + 1
    P = np.zeros((nq, nx, 2 * W + 1), dtype=object)
    P[0, 0, W] = 1
    for n0, m0, r0, e in factors:
        if e == 0:
            continue
        if (n0, m0) == (0, 0):
            top = e
        else:
            top = min((nq - 1) // n0 if n0 else nq, (nx - 1) // m0 if m0 else nx)
            if e > 0:
                top = min(top, e)
        orig = P.copy()
        for j in range(1, top + 1):
            coef = (-1) ** j * _gen_binom(e, j)
            if coef == 0:
                continue
            dn, dm, dr = j * n0, j * m0, j * r0
            if dn >= nq or dm >= nx:
                break
            src = orig[:nq - dn, :nx - dm]
            if dr >= 0:
                if dr and np.any(src[:, :, 2 * W + 1 - dr:] != 0):
                    raise AssertionError("zeta window too narrow in the product expansion")
                P[dn:, dm:, dr:] += coef * src[:, :, :2 * W + 1 - dr]
            else:
                if np.any(src[:, :, :-dr] != 0):
                    raise AssertionError("zeta window too narrow in the product expansion")
                P[dn:, dm:, :dr] += coef * src[:, :, -dr:]
    it = np.nditer(P, flags=["multi_index", "refs_ok"])
    for v in it:
        c = v.item()
        if c != 0:
            i, j, t = it.multi_index
            out[(i + A, t - W + B, j + mC)] = c
    return LiftTable(N, 0, out, n_max, m_max, lead)


def fj_product(theta: JacobiFormSeries, psi: JacobiFormSeries) -> Dict[Tuple[int, int], object]:
    """``{(n, r): c}`` of ``-Theta * Psi``."""
    prod = series_mul(theta.series, psi.series)
    return {(q // QDEN, z // 2): -c for (q, z), c in prod.terms.items()}


# ---------------------------------------------------------------------------
# singular part and divisors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularPart:
    index_N: int
    orbits: Tuple[Tuple[int, int, int, int], ...]  # (n, r, coeff, r^2 - 4Nn)
    complete: bool = True

    def to_text(self) -> str:
        q0 = sorted((o for o in self.orbits if o[0] == 0), key=lambda o: -o[1])
        rest = sorted((o for o in self.orbits if o[0] > 0), key=lambda o: (o[0], -o[1]))
        pieces = []
        for n, r, c, _ in q0 + rest:
            qpart = "" if n == 0 else ("q" if n == 1 else f"q^{n}")
            zpart = "" if r == 0 else ("z" if r == 1 else f"z^{r}")
            mono = " ".join(p for p in (qpart, zpart) if p)
            if not mono:
                body = str(abs(c))
            else:
                body = ("" if abs(c) == 1 else str(abs(c))) + mono
            pieces.append(("-" if c < 0 else "+") + body)
        s = "".join(pieces)
        s = s[1:] if s.startswith("+") else s
        return (s or "0") + ("" if self.complete else " (incomplete window)")

    __str__ = to_text

    def to_json(self) -> list:
        return [[n, r, c] for n, r, c, _ in self.orbits]


def sing_window(N: int) -> int:
    """Largest ``n`` of a canonical orbit with ``r^2 - 4Nn >= 0`` and ``|r| <= N``."""
    return N // 4


def singular_part(psi: JacobiFormSeries) -> SingularPart:
    """Canonical orbits with ``r^2 - 4Nn > 0``, plus the constant ``c(0, 0)``.

    Representatives have ``0 <= r <= N`` (minimal ``n`` in the orbit) and
    ``n >= 0``, so the whole ``q^0`` slice appears.  Orbits of discriminant
    zero away from ``(0, 0)`` carry no divisor and are left out.  The list
    is complete once ``Psi`` is known to ``q^(N//4)``.
    """
    N = psi.index
    top = int(min(Fraction(psi.qmax), sing_window(N)))
    orbits = []
    for n in range(0, top + 1):
        for r in range(0, N + 1):
            D = r * r - 4 * N * n
            if D < 0 or (D == 0 and n > 0):
                continue
            c = psi.coeff(n, r)
            if c != 0:
                if Fraction(c).denominator != 1:
                    raise ValueError(f"singular coefficient c({n},{r}) = {c} is not an integer")
                orbits.append((n, r, int(c), D))
    return SingularPart(N, tuple(sorted(orbits)), complete=psi.qmax >= sing_window(N))


@dataclass(frozen=True)
class HumbertLabel:
    """Primitive ``T0 = [[n0, r0/2], [r0/2, N m0]]`` with ``r0^2 - 4 N n0 m0 > 0``."""

    n0: int
    r0: int
    m0: int

    def __post_init__(self):
        if gcd(gcd(self.n0, self.r0), self.m0) != 1:
            raise ValueError(f"label {self.astuple()} is not primitive")
        if self.m0 < 0:
            raise ValueError("m0 must be nonnegative")

    def astuple(self) -> Tuple[int, int, int]:
        return (self.n0, self.r0, self.m0)

    def disc(self, N: int) -> int:
        return self.r0 * self.r0 - 4 * N * self.n0 * self.m0


def humbert_multiplicity(psi: JacobiFormSeries, T: HumbertLabel | Sequence[int]) -> int:
    """``sum_{n >= 1} c(n^2 n0 m0, n r0)``.

    Terms vanish once ``n^2 (r0^2 - 4N n0 m0) > N^2`` since a weak form has
    no coefficient with ``r^2 - 4Nn > N^2``.
    """
    if not isinstance(T, HumbertLabel):
        T = HumbertLabel(*T)
    N = psi.index
    disc = T.disc(N)
    if disc <= 0:
        raise ValueError(f"label {T.astuple()} has discriminant {disc} <= 0")
    total = 0
    n = 1
    while n * n * disc <= N * N:
        total += psi.coeff_reduced(n * n * T.n0 * T.m0, n * T.r0)
        n += 1
    return int(total)


def divisor_list(psi: JacobiFormSeries, sing: Optional[SingularPart] = None) -> List[Tuple[int, int, int, int]]:
    """``(n0, r0, 1, multiplicity)`` for each positive-discriminant orbit of ``Sing``."""
    sing = sing or singular_part(psi)
    out = []
    for n, r, _, D in sing.orbits:
        if D > 0:
            out.append((n, r, 1, humbert_multiplicity(psi, HumbertLabel(n, r, 1))))
    return [d for d in out if d[3] != 0]


# ---------------------------------------------------------------------------
# linear relations
# ---------------------------------------------------------------------------


def _nonneg_interval(a2: int, a1: int, a0: int) -> Optional[Tuple[int, int]]:
    """Integer ``x`` with ``a2 x^2 + a1 x + a0 >= 0`` for ``a2 < 0`` (``None`` if empty)."""
    disc = a1 * a1 - 4 * a2 * a0
    if disc < 0:
        return None
    s = isqrt(disc)
    # real roots lie in [(-a1 - s - 1)/(2 a2), ...]; widen, then trim exactly
    lo = (-a1 + s + 1) // (2 * a2) - 2
    hi = (-a1 - s - 1) // (2 * a2) + 2
    lo, hi = min(lo, hi), max(lo, hi)
    f = lambda x: a2 * x * x + a1 * x + a0
    while lo <= hi and f(lo) < 0:
        lo += 1
    while hi >= lo and f(hi) < 0:
        hi -= 1
    return (lo, hi) if lo <= hi else None


def relation_terms(N: int, alpha: int, beta: int, n: int, r: int) -> List[int]:
    """The ``a`` with ``4N(alpha a^2 + n a) - (beta a + r)^2 >= 0``."""
    a2 = 4 * N * alpha - beta * beta
    if a2 >= 0:
        raise ValueError(
            f"(alpha, beta) = ({alpha}, {beta}): 4N alpha - beta^2 = {a2} >= 0, the sum over a is not finite")
    iv = _nonneg_interval(a2, 4 * N * n - 2 * beta * r, -r * r)
    return [] if iv is None else list(range(iv[0], iv[1] + 1))


def relation_window(N: int, alpha: int, beta: int, n_range: Iterable[int], r_range: Iterable[int]) -> int:
    """``q``-precision a holomorphic form of index ``N`` needs for :func:`check_relation`."""
    probe = JacobiFormSeries.__new__(JacobiFormSeries)
    object.__setattr__(probe, "index", N)
    top = 0
    for n in n_range:
        for r in r_range:
            for a in relation_terms(N, alpha, beta, n, r):
                nn, _ = JacobiFormSeries.reduced(probe, alpha * a * a + n * a, beta * a + r)
                top = max(top, nn)
    return top


@dataclass(frozen=True)
class RelationReport:
    alpha: int
    beta: int
    n_range: Tuple[int, int]
    r_range: Tuple[int, int]
    checked: int
    nonzero: Tuple[Tuple[int, int, object], ...]

    @property
    def all_zero(self) -> bool:
        return not self.nonzero

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "n_range": list(self.n_range), "r_range": list(self.r_range),
                "checked": self.checked, "all_zero": self.all_zero,
                "nonzero": [[n, r, str(s)] for n, r, s in self.nonzero]}


def check_relation(phi: JacobiFormSeries, alpha: int, beta: int, n_range=(0, 15), r_range=(-60, 60)) -> RelationReport:
    """``sum_a c(alpha a^2 + n a, beta a + r; phi)`` for every ``(n, r)`` in range.

    ``phi`` must be holomorphic so the exact ``a``-interval bounds the sum;
    coefficients are read through the elliptic law.
    """
    N = phi.index
    bad = []
    count = 0
    for n in range(n_range[0], n_range[1] + 1):
        for r in range(r_range[0], r_range[1] + 1):
            s = 0
            for a in relation_terms(N, alpha, beta, n, r):
                s += phi.coeff_reduced(alpha * a * a + n * a, beta * a + r)
            count += 1
            if s != 0:
                bad.append((n, r, s))
    return RelationReport(alpha, beta, tuple(n_range), tuple(r_range), count, tuple(bad))


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------


@dataclass
class VerifyReport:
    a: Tuple[int, ...]
    N: int
    weight: int
    window: dict
    equal: bool
    first_mismatch: Optional[dict]
    sing: SingularPart
    divisors: List[Tuple[int, int, int, int]]
    leading: Leading
    fj_rows: bool
    timings: Dict[str, float] = field(default_factory=dict)

    def to_json(self, timings: bool = False) -> dict:
        out = {
            "a": list(self.a),
            "N": self.N,
            "weight": self.weight,
            "window": self.window,
            "equal": self.equal,
            "sing": self.sing.to_json(),
            "sing_text": self.sing.to_text(),
            "divisors": [list(d) for d in self.divisors],
            "leading": self.leading.to_json(),
            "fj_rows_match": self.fj_rows,
        }
        if self.first_mismatch is not None:
            out["first_mismatch"] = self.first_mismatch
        if timings:
            out["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return out


def psi_window(N: int, n_max: int, m_max: int) -> int:
    """``q``-precision of ``Psi`` for the lift window and a complete singular part."""
    return max((n_max - 1) * (m_max - 1), sing_window(N), 1)


def verify_conjecture(a: Sequence[int], n_max: int = 3, m_max: int = 3, expand=None) -> VerifyReport:
    """Compare the additive lift of ``phi_{2,a}`` with the product of its ``Psi`` on the window.

    ``expand(descriptor, qmax)`` replaces :func:`block_expand` (e.g. a cached variant).
    """
    if n_max < 1 or m_max < 1:
        raise ValueError("window sizes must be positive")
    d = block_from_a(a)
    if d.zero:
        raise IdenticallyZeroError(f"a={list(a)}: a theta argument vanishes, the block is identically zero")
    N = int(d.index)
    t = {}
    t0 = time.perf_counter()
    qpsi = psi_window(N, n_max, m_max)
    phi = (expand or block_expand)(d, max(n_max * m_max, 2 * (qpsi + 1)))
    t["expand"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    psi = psi_from_phi(phi).truncate(qpsi)
    if psi.q_slice(0) != psi_q0_expected(d):
        raise AssertionError("q^0 slice of Psi disagrees with the block data")
    t["psi"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    grit = grit_table(phi, n_max, m_max)
    t["grit"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    borch = borch_table(psi, n_max, m_max)
    if d.sign < 0:
        borch.coeffs = {k: -v for k, v in borch.coeffs.items()}
    t["borch"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    mismatch = grit.first_mismatch(borch)
    row1 = {(n, r): c for (n, r), c in _int_items(phi) if n <= n_max}
    row2 = {k: v for k, v in fj_product(phi, psi).items() if k[0] <= n_max}
    fj_ok = borch.fj_row(1) == row1 and (m_max < 2 or borch.fj_row(2) == row2)
    sing = singular_part(psi)
    divs = divisor_list(psi, sing)
    t["divisors"] = time.perf_counter() - t0
    window = {"n_max": n_max, "m_max": m_max, "phi_qmax": str(phi.qmax), "psi_qmax": str(psi.qmax)}
    return VerifyReport(tuple(int(x) for x in a), N, int(d.weight), window, mismatch is None, mismatch,
                        sing, divs, borch.leading, fj_ok, t)
