"""Command-line entry point: ``thetablock <command> [options]``.

Exit codes: 0 when the checked statement holds, 1 on a mathematical
mismatch, 2 on usage, window, or descriptor errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .cache import ExpansionCache, resolve_cache_dir
from .errors import IdenticallyZeroError, ThetaBlockError
from .jacobi import block_expand, block_from_a, psi_from_phi, psi_q0_expected
from .lattice import (
    NAMED_LATTICES,
    GramLattice,
    LatticeBlockDescriptor,
    discriminant_classes,
    named_lattice,
    quasi_pullback_block,
    rank_weight_sane,
    theta_a4,
    weyl_orbits_by_norm,
)
from .lifts import (
    HumbertLabel,
    check_relation,
    divisor_list,
    humbert_multiplicity,
    relation_window,
    sing_window,
    singular_part,
    verify_conjecture,
)

OK, MISMATCH, USAGE = 0, 1, 2

# the five weight-2 blocks whose lifts are checked
INDEX_TO_A = {
    25: (1, 1, 1, 1),
    37: (1, 1, 1, 2),
    43: (-1, 5, -1, -2),
    50: (2, -1, -3, 6),
    53: (1, -6, 3, 1),
}

# relations of the form sum_a c(alpha a^2 + n a, beta a + r) = 0
KNOWN_RELATIONS = {37: [(6, 30)], 43: [(2, 19), (3, 23)]}

PULLBACK_PRESETS = {
    "T0": [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0)],
    "A3_5": [(2, -1, 0, 0), (-1, 2, -1, 0), (0, -1, 2, -1)],
}

COMMANDS = ("verify", "sing", "humbert", "relations", "norm2", "lattice-report", "pullback")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    a: Optional[Tuple[int, ...]] = None
    index: Optional[int] = None
    nmax: int = 3
    mmax: int = 3
    qmax: Optional[int] = None
    gram: Optional[str] = None
    fmt: str = "text"
    out: Optional[str] = None
    cache_dir: Optional[str] = None
    timings: bool = False
    labels: List[Tuple[int, int, int]] = field(default_factory=list)
    pairs: List[Tuple[int, int]] = field(default_factory=list)
    n_range: Tuple[int, int] = (0, 15)
    r_range: Tuple[int, int] = (-60, 60)
    norm_bound: Fraction = Fraction(2)
    basis: Optional[List[Tuple[int, ...]]] = None
    then: Optional[List[Tuple[int, ...]]] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for name in ("nmax", "mmax"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name} must be positive")
        if self.qmax is not None and self.qmax < 1:
            raise UsageError("--qmax must be positive")
        if self.a is not None and len(self.a) != 4:
            raise UsageError(f"--a needs exactly 4 entries, got {len(self.a)}")
        if self.fmt not in ("json", "text"):
            raise UsageError("--format is json or text")


def _ints(text: str, what: str) -> Tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x != "")
    except ValueError:
        raise UsageError(f"malformed {what}: {text!r}") from None


def _rows(text: str, what: str) -> List[Tuple[int, ...]]:
    return [_ints(r, what) for r in text.split(";") if r.strip()]


def load_gram(source: str) -> GramLattice:
    """A registered name, a JSON matrix literal, or a path to a JSON file."""
    if source in NAMED_LATTICES:
        return named_lattice(source)
    text = source
    p = Path(source)
    if not source.lstrip().startswith("[") and p.exists():
        text = p.read_text()
    elif not source.lstrip().startswith("["):
        raise UsageError(f"unknown lattice {source!r}; known: {', '.join(sorted(NAMED_LATTICES))}")
    try:
        return GramLattice.from_json(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"cannot parse Gram matrix: {exc}") from None


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class Report:
    command: str
    ok: bool
    data: dict
    text: str

    def to_json(self) -> str:
        return json.dumps({"command": self.command, "ok": self.ok, **self.data}, sort_keys=True, indent=2) + "\n"


def render(report: Report, fmt: str) -> str:
    return report.to_json() if fmt == "json" else report.text.rstrip("\n") + "\n"


def _resolve_a(cfg: RunConfig) -> Tuple[int, ...]:
    if cfg.a is not None:
        return cfg.a
    if cfg.index is not None:
        try:
            return INDEX_TO_A[cfg.index]
        except KeyError:
            raise UsageError(f"no registered block of index {cfg.index}; use --a") from None
    raise UsageError("need --a or --index")


def _block(cfg: RunConfig):
    a = _resolve_a(cfg)
    d = block_from_a(a)
    if d.zero:
        raise IdenticallyZeroError(f"a={list(a)}: a theta argument vanishes, the block is identically zero")
    return a, d


def _expander(cfg: RunConfig):
    directory = resolve_cache_dir(cfg.cache_dir)
    return ExpansionCache(directory).expand if directory else block_expand


def _psi(cfg: RunConfig, d, qmax: int):
    phi = _expander(cfg)(d, 2 * (qmax + 1))
    psi = psi_from_phi(phi).truncate(qmax)
    if psi.q_slice(0) != psi_q0_expected(d):
        raise AssertionError("q^0 slice of Psi disagrees with the block data")
    return psi


def _divisor_text(divs) -> str:
    extra = [t for t in divs if t[0] > 0]
    lines = ["divisors (n0, r0, m0): multiplicity"]
    lines += [f"  ({n}, {r}, {m}): {mult}" for n, r, m, mult in divs]
    if not extra:
        lines.append("  (theta-block divisors only)")
    return "\n".join(lines)


def cmd_verify(cfg: RunConfig) -> Report:
    a, _ = _block(cfg)
    rep = verify_conjecture(a, cfg.nmax, cfg.mmax, expand=_expander(cfg))
    ok = rep.equal and rep.fj_rows
    data = rep.to_json(timings=cfg.timings)
    lead = rep.leading
    lines = [
        f"a = {list(a)}  N = {rep.N}  weight = {rep.weight}",
        f"window: n, m <= {cfg.nmax}, {cfg.mmax}; phi to q^{rep.window['phi_qmax']}, Psi to q^{rep.window['psi_qmax']}",
        f"Grit == Borch on window: {'yes' if rep.equal else 'NO'}",
        f"Fourier-Jacobi rows m=1, m=2: {'match' if rep.fj_rows else 'MISMATCH'}",
        f"leading exponents (A, B, C) = ({lead.A}, {lead.B}, {lead.C})",
        f"Sing = {rep.sing.to_text()}",
        _divisor_text(rep.divisors),
    ]
    if rep.first_mismatch:
        lines.append(f"first mismatch: {rep.first_mismatch}")
    if cfg.timings:
        lines.append("timings: " + ", ".join(f"{k}={v:.2f}s" for k, v in rep.timings.items()))
    return Report("verify", ok, data, "\n".join(lines))


def _sing_qmax(cfg: RunConfig, N: int) -> int:
    need = max(sing_window(N), 1)
    if cfg.qmax is not None and cfg.qmax < need:
        raise UsageError(f"--qmax {cfg.qmax} is below the completeness window q^{need} for index {N}")
    return cfg.qmax if cfg.qmax is not None else need


def cmd_sing(cfg: RunConfig) -> Report:
    a, d = _block(cfg)
    N = int(d.index)
    q = _sing_qmax(cfg, N)
    psi = _psi(cfg, d, q)
    sing = singular_part(psi)
    data = {"a": list(a), "N": N, "psi_qmax": q, "sing": sing.to_json(), "sing_text": sing.to_text(),
            "complete": sing.complete}
    return Report("sing", True, data, sing.to_text())


def cmd_humbert(cfg: RunConfig) -> Report:
    a, d = _block(cfg)
    N = int(d.index)
    q = _sing_qmax(cfg, N)
    psi = _psi(cfg, d, q)
    if cfg.labels:
        rows = [(n, r, m, humbert_multiplicity(psi, HumbertLabel(n, r, m))) for n, r, m in cfg.labels]
        text = "\n".join(f"({n}, {r}, {m}): {mult}" for n, r, m, mult in rows)
    else:
        rows = divisor_list(psi)
        text = _divisor_text(rows)
    data = {"a": list(a), "N": N, "psi_qmax": q, "divisors": [list(t) for t in rows]}
    return Report("humbert", True, data, text)


def cmd_relations(cfg: RunConfig) -> Report:
    a, d = _block(cfg)
    N = int(d.index)
    pairs = cfg.pairs or KNOWN_RELATIONS.get(N)
    if not pairs:
        raise UsageError(f"no relation registered for index {N}; pass --pair alpha,beta")
    windows = [relation_window(N, al, be, range(cfg.n_range[0], cfg.n_range[1] + 1),
                               range(cfg.r_range[0], cfg.r_range[1] + 1)) for al, be in pairs]
    q = cfg.qmax if cfg.qmax is not None else max(windows + [1])
    if q < max(windows):
        raise UsageError(f"--qmax {q} is below the needed window {max(windows)}")
    phi = _expander(cfg)(d, q)
    reps = [check_relation(phi, al, be, cfg.n_range, cfg.r_range) for al, be in pairs]
    ok = all(r.all_zero for r in reps)
    data = {"a": list(a), "N": N, "phi_qmax": q, "relations": [r.to_json() for r in reps]}
    lines = [f"a = {list(a)}  N = {N}  phi to q^{q}"]
    for r in reps:
        state = "all zero" if r.all_zero else f"{len(r.nonzero)} nonzero, first {r.nonzero[0]}"
        lines.append(f"(alpha, beta) = ({r.alpha}, {r.beta}): {r.checked} sums, {state}")
    return Report("relations", ok, data, "\n".join(lines))


def _class_lines(rep) -> List[str]:
    lines = [f"|D| = {rep.order_of_D}"]
    lines += [f"  norm {n}: {c} classes x {e} elements" for n, c, e in rep.classes]
    lines.append(f"Norm_2 holds: {'true' if rep.norm2_holds else 'false'}")
    return lines


def cmd_norm2(cfg: RunConfig) -> Report:
    L = load_gram(cfg.gram or "A4v5")
    rep = discriminant_classes(L, 2)
    return Report("norm2", rep.norm2_holds, {"gram": L.to_json(), **rep.to_json()}, "\n".join(_class_lines(rep)))


def cmd_lattice_report(cfg: RunConfig) -> Report:
    L = load_gram(cfg.gram or "A4v5")
    rep = discriminant_classes(L, cfg.norm_bound)
    data = {"gram": L.to_json(), "det": L.det, **rep.to_json()}
    lines = [f"Gram {L.to_json()}  det {L.det}"] + _class_lines(rep)
    if L.gram == NAMED_LATTICES["A4v5"].gram:
        orbits = weyl_orbits_by_norm()
        data["weyl_orbits"] = {str(k): v for k, v in orbits.items()}
        data["weyl_transitive"] = all(len(v) == 1 for v in orbits.values())
        lines.append(f"S5 x {{+-1}} transitive on each norm: {'true' if data['weyl_transitive'] else 'false'}")
    return Report("lattice-report", True, data, "\n".join(lines))


def cmd_pullback(cfg: RunConfig) -> Report:
    d: LatticeBlockDescriptor = theta_a4()
    steps = [cfg.basis or PULLBACK_PRESETS["T0"]]
    if cfg.then:
        steps.append(cfg.then)
    out = []
    for basis in steps:
        res = quasi_pullback_block(d, basis)
        d = res.descriptor
        out.append({"basis": [list(b) for b in basis], "removed": res.removed, "det": d.lattice.det,
                    "rank_weight_sane": rank_weight_sane(d), **d.to_json()})
    lines = []
    for step in out:
        lines.append(f"basis {step['basis']}: removed {step['removed']}, weight {step['weight']}, "
                     f"Gram {step['gram']} (det {step['det']})")
        lines.append(f"  {step['text']}")
    return Report("pullback", True, {"steps": out}, "\n".join(lines))


DISPATCH = {
    "verify": cmd_verify,
    "sing": cmd_sing,
    "humbert": cmd_humbert,
    "relations": cmd_relations,
    "norm2": cmd_norm2,
    "lattice-report": cmd_lattice_report,
    "pullback": cmd_pullback,
}


def dispatch(cfg: RunConfig, stream=None) -> int:
    """Run ``cfg`` and write the rendered report; returns the exit code."""
    stream = stream or sys.stdout
    try:
        report = DISPATCH[cfg.command](cfg)
    except (UsageError, ThetaBlockError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return USAGE
    except AssertionError as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return MISMATCH
    text = render(report, cfg.fmt)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stream.write(text)
    return OK if report.ok else MISMATCH


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="fmt", choices=("json", "text"), default="text")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--cache-dir", help="cache expanded blocks here (THETABLOCK_CACHE overrides)")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings (not reproducible)")

    block = argparse.ArgumentParser(add_help=False)
    block.add_argument("--a", help="comma-separated vector a = a1,a2,a3,a4")
    block.add_argument("--index", type=int, help=f"registered index: {', '.join(map(str, INDEX_TO_A))}")
    block.add_argument("--qmax", type=int, help="q-precision override")

    p = argparse.ArgumentParser(prog="thetablock", description="Theta blocks, their lifts, and the A4 lattice data.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common, block], help="compare the additive lift with the product")
    v.add_argument("--nmax", type=int, default=3, help="largest q exponent n in the window")
    v.add_argument("--mmax", type=int, default=3, help="largest xi exponent m in the window")
    sub.add_parser("sing", parents=[common, block], help="singular part of Psi")
    h = sub.add_parser("humbert", parents=[common, block], help="Humbert divisor multiplicities")
    h.add_argument("--label", action="append", default=[], help="n0,r0,m0 (repeatable); default: divisor list")
    r = sub.add_parser("relations", parents=[common, block], help="check linear relations among coefficients")
    r.add_argument("--pair", action="append", default=[], help="alpha,beta (repeatable)")
    r.add_argument("--nrange", default="0,15", help="inclusive n range lo,hi")
    r.add_argument("--rrange", default="-60,60", help="inclusive r range lo,hi")
    for name, hlp in (("norm2", "Norm_2 condition"), ("lattice-report", "discriminant classes")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--gram", help="lattice name, JSON matrix, or JSON file (default A4v5)")
        if name == "lattice-report":
            s.add_argument("--norm-bound", default="2", help="report classes with minimal norm up to this bound")
    pb = sub.add_parser("pullback", parents=[common], help="(quasi) pull-back of the A4 denominator block")
    pb.add_argument("--basis", help="sublattice rows 'x,x,x,x;...' or a preset: " + ", ".join(PULLBACK_PRESETS))
    pb.add_argument("--then", help="second restriction, rows in the first sublattice's basis")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = dict(command=ns.command, fmt=ns.fmt, out=ns.out, cache_dir=ns.cache_dir, timings=ns.timings)
    if getattr(ns, "a", None):
        kw["a"] = _ints(ns.a, "--a")
    for name in ("index", "qmax", "nmax", "mmax", "gram"):
        if getattr(ns, name, None) is not None:
            kw[name] = getattr(ns, name)
    for lab in getattr(ns, "label", []):
        t = _ints(lab, "--label")
        if len(t) != 3:
            raise UsageError(f"--label needs n0,r0,m0, got {lab!r}")
        kw.setdefault("labels", []).append(t)
    for pr in getattr(ns, "pair", []):
        t = _ints(pr, "--pair")
        if len(t) != 2:
            raise UsageError(f"--pair needs alpha,beta, got {pr!r}")
        kw.setdefault("pairs", []).append(t)
    if ns.command == "relations":
        kw["n_range"] = _ints(ns.nrange, "--nrange")
        kw["r_range"] = _ints(ns.rrange, "--rrange")
        if len(kw["n_range"]) != 2 or len(kw["r_range"]) != 2:
            raise UsageError("ranges are lo,hi")
    if getattr(ns, "norm_bound", None) is not None:
        try:
            kw["norm_bound"] = Fraction(ns.norm_bound)
        except ValueError:
            raise UsageError(f"malformed --norm-bound {ns.norm_bound!r}") from None
    if getattr(ns, "basis", None):
        kw["basis"] = PULLBACK_PRESETS.get(ns.basis) or _rows(ns.basis, "--basis")
    if getattr(ns, "then", None):
        kw["then"] = _rows(ns.then, "--then")
    return RunConfig(**kw)


VECTOR_FLAGS = ("--a", "--nrange", "--rrange", "--pair", "--label", "--basis", "--then")


def _attach_negative_values(argv: Sequence[str]) -> List[str]:
    """Rewrite ``--a -1,5,-1,-2`` as ``--a=-1,5,-1,-2`` so argparse does not read it as a flag."""
    out: List[str] = []
    it = iter(argv)
    for tok in it:
        if tok in VECTOR_FLAGS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and nxt[1:2].isdigit():
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(_attach_negative_values(sys.argv[1:] if argv is None else argv))
    try:
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
