"""Eta, odd Jacobi theta, theta blocks, index-raising Hecke operators and Psi.

Public functions take ``q`` exponents in natural units (ints or Fractions)
and convert to the 1/24 grid of :class:`~thetablock.series.FourierSeries`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DescriptorError, IdenticallyZeroError, WindowError
from .series import QDEN, ZDEN, FourierSeries, div_exact, qunits, series_mul, zunits


class ZeroThetaError(IdenticallyZeroError):
    """``theta_0`` is the zero function."""


def _natural(x: int, den: int):
    v = Fraction(x, den)
    return v.numerator if v.denominator == 1 else v


# ---------------------------------------------------------------------------
# eta and theta
# ---------------------------------------------------------------------------


# Product formulas are used up to this many q-orders; deeper expansions use
# the sparse sum forms (pentagonal numbers, Jacobi's theta sum).  Tests check
# that the two routes agree on the overlap.
PRODUCT_DEPTH = 256


def _eta_product(qmax: int) -> FourierSeries:
    deg = (qmax - 1) // QDEN
    poly = np.zeros(deg + 1, dtype=object)
    poly[0] = 1
    for n in range(1, deg + 1):
        poly[n:] = poly[n:] - poly[:-n].copy()
    return FourierSeries(poly.reshape(-1, 1), 1, 0, qmax, QDEN)


def _eta_pentagonal(qmax: int) -> FourierSeries:
    deg = (qmax - 1) // QDEN
    poly = np.zeros(deg + 1, dtype=np.int64)
    k = 0
    while True:
        hit = False
        for j in ((k, -k) if k else (0,)):
            e = j * (3 * j - 1) // 2
            if e <= deg:
                poly[e] += -1 if j % 2 else 1
                hit = True
        if not hit:
            break
        k += 1
    return FourierSeries(poly.reshape(-1, 1), 1, 0, qmax, QDEN)


@lru_cache(maxsize=64)
def _eta_scaled(qmax: int, method: str = "auto") -> FourierSeries:
    if (qmax - 1) // QDEN < 0:
        return FourierSeries.zero(qmax)
    if method == "auto":
        method = "product" if (qmax - 1) // QDEN <= PRODUCT_DEPTH else "sum"
    return _eta_product(qmax) if method == "product" else _eta_pentagonal(qmax)


def eta_expand(qmax, method: str = "auto") -> FourierSeries:
    """``q^(1/24) prod_{n>=1} (1 - q^n)`` up to ``q^qmax``.

    ``method`` is ``"product"``, ``"sum"`` (Euler's pentagonal series) or
    ``"auto"``.
    """
    return _eta_scaled(qunits(qmax), method)


@lru_cache(maxsize=64)
def _eta_cubed_scaled(qmax: int) -> FourierSeries:
    # Jacobi: eta^3 = sum_{n>=0} (-1)^n (2n+1) q^((2n+1)^2/8)
    terms = {}
    n = 0
    while 3 * (2 * n + 1) ** 2 <= qmax:
        terms[(3 * (2 * n + 1) ** 2, 0)] = (-1) ** n * (2 * n + 1)
        n += 1
    return FourierSeries.from_terms(terms, qmax)


def eta_cubed_expand(qmax) -> FourierSeries:
    """``eta^3`` from its sparse series."""
    return _eta_cubed_scaled(qunits(qmax))


def _theta_product(qmax: int) -> FourierSeries:
    # q^(1/8) (zeta^(1/2) - zeta^(-1/2)) prod (1 - q^n zeta)(1 - q^n / zeta)(1 - q^n)
    deg = (qmax - 3) // QDEN
    half = 2 * isqrt(2 * deg + 2) + 4
    width = 2 * half + 1
    arr = np.zeros((deg + 1, width), dtype=np.int64)
    arr[0, half + 1] = 1
    arr[0, half - 1] = -1
    for n in range(1, deg + 1):
        for shift in (2, -2, 0):
            src = arr[:deg + 1 - n].copy()
            if shift > 0:
                arr[n:, shift:] -= src[:, :-shift]
            elif shift < 0:
                arr[n:, :shift] -= src[:, -shift:]
            else:
                arr[n:] -= src
    if arr[:, 0].any() or arr[:, -1].any():  # pragma: no cover - width bound is generous
        raise AssertionError("theta expansion ran off its zeta window")
    return FourierSeries(arr, 3, -half, qmax, QDEN)


def _theta_sum(qmax: int) -> FourierSeries:
    # sum_n (-1)^n q^((2n+1)^2/8) zeta^((2n+1)/2)
    terms = {}
    n = 0
    while 3 * (2 * n + 1) ** 2 <= qmax:
        for m in (n, -n - 1):
            terms[(3 * (2 * m + 1) ** 2, 2 * m + 1)] = -1 if m % 2 else 1
        n += 1
    return FourierSeries.from_terms(terms, qmax)


@lru_cache(maxsize=64)
def _theta_scaled(qmax: int, method: str = "auto") -> FourierSeries:
    deg = (qmax - 3) // QDEN
    if deg < 0:
        return FourierSeries.zero(qmax)
    if method == "auto":
        method = "product" if deg <= PRODUCT_DEPTH else "sum"
    return _theta_product(qmax) if method == "product" else _theta_sum(qmax)


def theta_expand(a: int, qmax, method: str = "auto") -> FourierSeries:
    """``theta(tau, a z)`` up to ``q^qmax``; ``a < 0`` gives ``-theta_|a|``.

    ``method`` picks the triple product, the theta sum, or (``"auto"``)
    the product for shallow expansions and the sum beyond that.
    """
    a = int(a)
    if a == 0:
        raise ZeroThetaError("theta_0(tau, z) = theta(tau, 0) vanishes identically")
    base = _theta_scaled(qunits(qmax), method)
    out = base.scale_z(abs(a))
    return -out if a < 0 else out


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"^(eta|theta_(\d+)|theta)(?:\^\(?(-?\d+)\)?)?$")


@dataclass(frozen=True)
class ThetaBlockDescriptor:
    """``sign * eta^f(0) * prod_a (theta_a / eta)^f(a)``.

    ``eta_exp`` is ``f(0)``; the net power of eta after cancelling the
    denominators is :attr:`raw_eta_power`.
    """

    eta_exp: int
    theta_exps: Tuple[Tuple[int, int], ...]
    sign: int = 1
    zero: bool = False
    a: Optional[Tuple[int, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        tally: Dict[int, int] = {}
        for k, v in dict(self.theta_exps).items() if isinstance(self.theta_exps, Mapping) else self.theta_exps:
            k, v = int(k), int(v)
            if k <= 0:
                raise DescriptorError(f"theta index {k} must be positive; fold signs into `sign`")
            tally[k] = tally.get(k, 0) + v
        object.__setattr__(self, "theta_exps", tuple(sorted((k, v) for k, v in tally.items() if v)))
        if self.sign not in (1, -1):
            raise DescriptorError("sign must be +1 or -1")
        object.__setattr__(self, "eta_exp", int(self.eta_exp))

    def f(self, a: int) -> int:
        if a == 0:
            return self.eta_exp
        return dict(self.theta_exps).get(abs(a), 0)

    @property
    def weight(self) -> Fraction:
        return Fraction(self.eta_exp, 2)

    @property
    def index(self) -> Fraction:
        return Fraction(sum(a * a * v for a, v in self.theta_exps), 2)

    @property
    def raw_eta_power(self) -> int:
        return self.eta_exp - sum(v for _, v in self.theta_exps)

    @property
    def n_thetas(self) -> int:
        return sum(v for _, v in self.theta_exps)

    @property
    def is_pure(self) -> bool:
        return all(v > 0 for _, v in self.theta_exps)

    @property
    def predicted_q_order(self) -> Fraction:
        """``f(0)/24 + sum f(a)/12``: the order unless the leading slice cancels."""
        return Fraction(self.eta_exp, 24) + Fraction(self.n_thetas, 12)

    def to_text(self) -> str:
        if self.zero:
            body = "0 (identically zero)"
        else:
            parts = [f"eta^{self.raw_eta_power}"] if self.raw_eta_power else []
            for k, v in self.theta_exps:
                parts.append(f"theta_{k}" + (f"^{v}" if v != 1 else ""))
            body = " * ".join(parts) or "1"
            if self.sign < 0:
                body = "-" + body
        if self.a is not None:
            body += "  a=[" + ",".join(str(x) for x in self.a) + "]"
        return body

    __str__ = to_text

    @classmethod
    def from_text(cls, text: str) -> "ThetaBlockDescriptor":
        """Parse ``[-]eta^E * theta_a^k * ...`` (the ``a=[...]`` tag is optional)."""
        text = text.strip()
        avec = None
        m = re.search(r"a=\[([-\d,\s]+)\]\s*$", text)
        if m:
            avec = tuple(int(x) for x in m.group(1).split(","))
            text = text[:m.start()].strip()
        sign = 1
        if text.startswith("-"):
            sign, text = -1, text[1:].strip()
        raw = 0
        thetas: Dict[int, int] = {}
        for tok in (t.strip() for t in text.split("*")):
            mm = _TOKEN.match(tok.replace(" ", ""))
            if not mm:
                raise DescriptorError(f"cannot parse factor {tok!r}")
            e = int(mm.group(3)) if mm.group(3) else 1
            if mm.group(1) == "eta":
                raw += e
            else:
                a = int(mm.group(2)) if mm.group(2) else 1
                thetas[a] = thetas.get(a, 0) + e
        eta_exp = raw + sum(thetas.values())
        return cls(eta_exp, tuple(thetas.items()), sign, False, avec)

    def to_json(self) -> dict:
        out = {
            "eta_exp": self.eta_exp,
            "raw_eta_power": self.raw_eta_power,
            "theta_exps": [[k, v] for k, v in self.theta_exps],
            "sign": self.sign,
            "zero": self.zero,
            "weight": str(self.weight),
            "index": str(self.index),
            "text": self.to_text(),
        }
        if self.a is not None:
            out["a"] = list(self.a)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "ThetaBlockDescriptor":
        a = tuple(data["a"]) if data.get("a") is not None else None
        return cls(data["eta_exp"], tuple(tuple(x) for x in data["theta_exps"]), data.get("sign", 1),
                   data.get("zero", False), a)


def block_from_args(args: Iterable[int], eta_exp: int, a: Optional[Sequence[int]] = None) -> ThetaBlockDescriptor:
    """Descriptor of ``eta^(eta_exp - len(args)) * prod theta_{arg}``."""
    args = [int(x) for x in args]
    if any(x == 0 for x in args):
        return ThetaBlockDescriptor(eta_exp, (), 1, True, tuple(a) if a is not None else None)
    sign = -1 if sum(1 for x in args if x < 0) % 2 else 1
    tally: Dict[int, int] = {}
    for x in args:
        tally[abs(x)] = tally.get(abs(x), 0) + 1
    return ThetaBlockDescriptor(eta_exp, tuple(tally.items()), sign, False, tuple(a) if a is not None else None)


def phi2_arguments(a: Sequence[int]) -> Tuple[int, ...]:
    """The ten partial sums ``a_i + ... + a_j`` of four integers."""
    if len(a) != 4:
        raise DescriptorError(f"expected 4 integers, got {len(a)}")
    a1, a2, a3, a4 = (int(x) for x in a)
    return (a1, a2, a3, a4, a1 + a2, a2 + a3, a3 + a4, a1 + a2 + a3, a2 + a3 + a4, a1 + a2 + a3 + a4)


def block_from_a(a: Sequence[int]) -> ThetaBlockDescriptor:
    """Weight-2 block ``eta^-6 prod theta_{a_i+...+a_j}``; ``f(0) = 4``."""
    return block_from_args(phi2_arguments(a), 4, a)


# ---------------------------------------------------------------------------
# Jacobi form carrier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JacobiFormSeries:
    series: FourierSeries
    weight: Fraction
    index: int
    descriptor: Optional[ThetaBlockDescriptor] = field(default=None, compare=False)

    @property
    def qmax(self) -> Fraction:
        return _natural(self.series.qmax, QDEN)

    @property
    def q_order(self):
        o = self.series.q_order
        return None if o is None else _natural(o, QDEN)

    def coeff(self, n, r):
        """``c(n, r)`` read directly from the window."""
        qe = qunits(n)
        if qe > self.series.qmax:
            raise WindowError(f"c({n},{r}) lies above the window q^{self.qmax}")
        return self.series.coefficient(qe, zunits(r))

    def reduced(self, n: int, r: int) -> Tuple[int, int]:
        """Orbit representative of ``(n, r)`` under the elliptic law, ``|r| <= N``."""
        N = self.index
        D = r * r - 4 * N * n
        rr = (r + N) % (2 * N) - N
        nn, rem = divmod(rr * rr - D, 4 * N)
        assert rem == 0
        return nn, rr

    def coeff_reduced(self, n: int, r: int):
        """``c(n, r)`` using ``c(n, r) = c(n + l^2 N + l r, r + 2 l N)`` to reach the window."""
        nn, rr = self.reduced(int(n), int(r))
        return self.coeff(nn, rr)

    def q_slice(self, n) -> Dict[object, object]:
        return {_natural(z, ZDEN): c for z, c in self.series.q_slice(qunits(n)).items()}

    def items(self):
        """``((n, r), c)`` over stored terms in natural units, sorted."""
        for (q, z), c in sorted(self.series.terms.items()):
            yield (_natural(q, QDEN), _natural(z, ZDEN)), c

    def truncate(self, qmax) -> "JacobiFormSeries":
        return JacobiFormSeries(self.series.truncate(qunits(qmax)), self.weight, self.index, self.descriptor)

    def __neg__(self):
        return JacobiFormSeries(-self.series, self.weight, self.index, None)


def _integral_index(d: ThetaBlockDescriptor) -> int:
    N = d.index
    if N.denominator != 1 or N <= 0:
        raise DescriptorError(f"index {N} is not a positive integer")
    return int(N)


def _expand_scaled(d: ThetaBlockDescriptor, Q: int) -> FourierSeries:
    """Expand at working precision ``Q`` (1/24 units); the result may be shorter.

    Factors are applied one at a time so each product pairs the dense
    accumulator with a sparse theta; eta powers go through ``eta^3``.
    """
    acc = FourierSeries.one(Q)
    divisors = []
    for a, v in d.theta_exps:
        t = theta_expand(a, _natural(Q, QDEN))
        for _ in range(abs(v)):
            if v > 0:
                acc = series_mul(acc, t)
            else:
                divisors.append(t)
    e = d.raw_eta_power
    eta3 = _eta_cubed_scaled(Q)
    eta = _eta_scaled(Q)
    etas = [eta3] * (abs(e) // 3) + [eta] * (abs(e) % 3)
    if e > 0:
        for x in etas:
            acc = series_mul(acc, x)
    else:
        divisors = etas + divisors
    for x in divisors:
        acc = div_exact(acc, x)
    return acc if d.sign > 0 else -acc


def block_expand(d: ThetaBlockDescriptor, qmax) -> JacobiFormSeries:
    """Expand ``sign * eta^f(0) prod (theta_a/eta)^f(a)`` up to ``q^qmax``.

    Eta powers in the denominator are divided out at the end so the
    intermediate coefficients stay small.
    """
    if d.zero:
        raise IdenticallyZeroError("theta block is identically zero (a theta argument vanishes)")
    N = _integral_index(d)
    target = qunits(qmax)
    pad = QDEN
    while True:
        s = _expand_scaled(d, target + pad)
        if s.qmax >= target:
            break
        pad += target + pad - s.qmax + QDEN
    return JacobiFormSeries(s.truncate(target), d.weight, N, d)


# ---------------------------------------------------------------------------
# Hecke operators
# ---------------------------------------------------------------------------


def _divisors(n: int):
    n = abs(n)
    small = [d for d in range(1, isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def hecke_Tm(phi: JacobiFormSeries, m: int) -> JacobiFormSeries:
    """Index-raising Hecke operator ``T_-(m)`` via its coefficient formula.

    ``c(n, r; phi|T(m)) = sum_{d | (n, r, m)} d^(k-1) c(nm/d^2, r/d; phi)``.
    The result is known up to ``q^floor(qmax/m)``.
    """
    m = int(m)
    if m <= 0:
        raise ValueError("m must be positive")
    k = phi.weight
    if Fraction(k).denominator != 1:
        raise ValueError("weight must be integral")
    k = int(k)
    s = phi.series
    if any(q % QDEN or z % ZDEN for q, z in s.terms):
        raise ValueError("Hecke operator needs integral q and zeta exponents")
    qmax_nat = s.qmax // QDEN
    top = qmax_nat // m
    if top < 0:
        raise WindowError("window too small for the Hecke operator")
    out: Dict[Tuple[int, int], object] = {}
    for (q, z), c in s.terms.items():
        n1, r1 = q // QDEN, z // ZDEN
        for d in _divisors(m):
            num = n1 * d * d
            if num % m:
                continue
            n = num // m
            if n > top or n % d:
                continue
            w = Fraction(d) ** (k - 1)
            key = (n * QDEN, d * r1 * ZDEN)
            out[key] = out.get(key, 0) + w * c
    series = FourierSeries.from_terms(out, top * QDEN)
    return JacobiFormSeries(series, Fraction(k), phi.index * m, None)


# ---------------------------------------------------------------------------
# Psi
# ---------------------------------------------------------------------------


def psi_q0_expected(d: ThetaBlockDescriptor) -> Dict[int, int]:
    """``2k + sum_a f(a)(zeta^a + zeta^-a)``."""
    out = {0: int(2 * d.weight)} if d.weight else {}
    for a, v in d.theta_exps:
        out[a] = out.get(a, 0) + v
        out[-a] = out.get(-a, 0) + v
    return {r: c for r, c in out.items() if c}


def psi_from_phi(phi: JacobiFormSeries) -> JacobiFormSeries:
    """``-(phi|T_-(2)) / phi`` for a form of ``q``-order exactly one."""
    if phi.q_order != 1:
        raise ValueError(f"need q-order exactly 1, found {phi.q_order}")
    t2 = hecke_Tm(phi, 2)
    quot = div_exact(t2.series, phi.series)
    return JacobiFormSeries(-quot, Fraction(0), phi.index, None)


def psi_from_block(d: ThetaBlockDescriptor, qmax) -> JacobiFormSeries:
    """Weight-0 weak form ``Psi = -(Theta|T_-(2))/Theta`` up to ``q^qmax``.

    Needs the block to ``q^(2(qmax+1))``.  The ``q^0`` slice is checked
    against ``c(0,0) = 2k`` and ``c(0, +-a) = f(a)``.
    """
    Q = Fraction(qmax)
    if Q.denominator != 1 or Q < 0:
        raise ValueError("qmax for Psi must be a nonnegative integer")
    phi = block_expand(d, 2 * (Q + 1))
    psi = psi_from_phi(phi)
    psi = psi.truncate(Q)
    got = psi.q_slice(0)
    want = psi_q0_expected(d)
    if got != want:
        raise AssertionError(f"q^0 slice of Psi {got} disagrees with the descriptor {want}")
    return JacobiFormSeries(psi.series, Fraction(0), phi.index, d)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FormReport:
    q_order: object
    qmax: object
    is_holomorphic: bool
    is_cusp: bool
    evenness: bool
    note: str = "verdicts hold up to qmax only"

    def to_json(self) -> dict:
        return {"q_order": str(self.q_order), "qmax": str(self.qmax), "is_holomorphic": self.is_holomorphic,
                "is_cusp": self.is_cusp, "evenness": self.evenness, "note": self.note}


def form_checks(phi: JacobiFormSeries) -> FormReport:
    """Support scan: holomorphic means ``4Nn - r^2 >= 0`` on every term, cusp means ``> 0``."""
    N = phi.index
    hol = cusp = True
    even = True
    for (n, r), c in phi.items():
        disc = 4 * N * Fraction(n) - Fraction(r) ** 2
        if disc < 0:
            hol = cusp = False
        elif disc == 0:
            cusp = False
        if phi.series.coefficient(qunits(n), -zunits(r)) != c:
            even = False
    return FormReport(phi.q_order, phi.qmax, hol, cusp, even)


def _elliptic_comparisons(phi: JacobiFormSeries, lambdas: Iterable[int]) -> Tuple[bool, int]:
    """(law holds, number of comparisons that are not just ``r -> -r``)."""
    N = phi.index
    top = phi.series.qmax
    nontrivial = 0
    for (n, r), c in phi.items():
        for lam in lambdas:
            n2 = n + lam * lam * N + lam * r
            if qunits(n2) > top:
                continue
            if phi.coeff(n2, r + 2 * lam * N) != c:
                return False, nontrivial
            if r + 2 * lam * N != -r:
                nontrivial += 1
    return True, nontrivial


def check_elliptic_law(phi: JacobiFormSeries, lambdas: Iterable[int] = (1, -1, 2, -2)) -> bool:
    """``c(n, r) = c(n + l^2 N + l r, r + 2 l N)`` wherever both sides lie in the window."""
    return _elliptic_comparisons(phi, tuple(lambdas))[0]


def elliptic_index(phi: JacobiFormSeries, candidates: Iterable[int]) -> Optional[int]:
    """First index in ``candidates`` whose elliptic law holds with at least one nontrivial comparison.

    A window too short to relate distinct coefficients proves nothing, so
    such candidates are skipped.
    """
    for N in candidates:
        probe = JacobiFormSeries(phi.series, phi.weight, int(N))
        ok, nontrivial = _elliptic_comparisons(probe, (1, -1))
        if ok and nontrivial:
            return int(N)
    return None
