"""Two-sorted first-order formulas: the rewriting target language.

Temporal terms are variables, the boundary markers max/min, or small
constant shifts of these; individual terms are variables only (the
rewritings are constant-free).  Besides data atoms and order atoms the
language has the arithmetic-progression abbreviations, relational
primitive recursion blocks, and oracle atoms standing for the base
LTL-level predicates resolved at evaluation time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Union


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TMax:
    pass


@dataclass(frozen=True)
class TMin:
    pass


@dataclass(frozen=True)
class TShift:
    base: "TempTerm"
    delta: int


TempTerm = Union[TVar, TMax, TMin, TShift]

MAX = TMax()
MIN = TMin()


def tshift(base: TempTerm, delta: int) -> TempTerm:
    if delta == 0:
        return base
    if isinstance(base, TShift):
        return tshift(base.base, base.delta + delta)
    return TShift(base, delta)


@dataclass(frozen=True)
class FTrue:
    pass


@dataclass(frozen=True)
class FFalse:
    pass


@dataclass(frozen=True)
class CAtom:
    """Concept data atom name(x, t)."""

    name: str
    x: str
    t: TempTerm


@dataclass(frozen=True)
class RAtom:
    """Role data atom name(x, y, t) over a role *name* (no inverses)."""

    name: str
    x: str
    y: str
    t: TempTerm


@dataclass(frozen=True)
class Less:
    a: TempTerm
    b: TempTerm


@dataclass(frozen=True)
class DiffEq:
    """a - b = r with r >= 0."""

    a: TempTerm
    b: TempTerm
    r: int


@dataclass(frozen=True)
class DiffGt:
    """a - b > r with r >= 0 (definable in pure order logic)."""

    a: TempTerm
    b: TempTerm
    r: int


@dataclass(frozen=True)
class DiffIn:
    """a - b in r + pN: needs b + r inside the active domain."""

    a: TempTerm
    b: TempTerm
    r: int
    p: int


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Exists:
    var: str
    sort: str  # "ind" | "time"
    sub: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    sort: str
    sub: "Formula"


@dataclass(frozen=True)
class RPRDef:
    """One recursive definition Q(params..., tvar) := theta."""

    name: str
    params: tuple[str, ...]
    tvar: str
    theta: "Formula"


@dataclass(frozen=True)
class RPR:
    defs: tuple[RPRDef, ...]
    body: "Formula"


@dataclass(frozen=True)
class RPRAtom:
    """Reference to a recursively defined relation variable."""

    name: str
    args: tuple[str, ...]
    t: TempTerm


@dataclass(frozen=True)
class OracleAtom:
    """Base predicate resolved against the canonical-model machinery.

    tags: LTL_CONCEPT (args x, t; payload dagger name),
    LTL_CONCEPT_PHANTOM (args x; payload (name, k)),
    ROLE_Q (args x, y, t; payload a positive temporal role),
    ROLE_Q_PHANTOM (args x, y; payload (role query, k)).
    """

    tag: str
    payload: object
    ivars: tuple[str, ...]
    t: Optional[TempTerm] = None


Formula = Union[
    FTrue,
    FFalse,
    CAtom,
    RAtom,
    Less,
    DiffEq,
    DiffGt,
    DiffIn,
    Not,
    And,
    Or,
    Exists,
    Forall,
    RPR,
    RPRAtom,
    OracleAtom,
]

TRUE = FTrue()
FALSE = FFalse()


def fand(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for part in parts:
        if isinstance(part, FFalse):
            return FALSE
        if isinstance(part, FTrue):
            continue
        if isinstance(part, And):
            flat.extend(part.parts)
        else:
            flat.append(part)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def for_(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for part in parts:
        if isinstance(part, FTrue):
            return TRUE
        if isinstance(part, FFalse):
            continue
        if isinstance(part, Or):
            flat.extend(part.parts)
        else:
            flat.append(part)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def diff_eq(a: TempTerm, b: TempTerm, r: int) -> Formula:
    if r < 0:
        a, b, r = b, a, -r
    return DiffEq(a, b, r)


def diff_in(a: TempTerm, b: TempTerm, r: int, p: int) -> Formula:
    assert p >= 1 and r >= 0
    return DiffIn(a, b, r, p)


def exists(var: str, sort: str, sub: Formula) -> Formula:
    if isinstance(sub, (FTrue, FFalse)):
        return sub
    return Exists(var, sort, sub)


def forall(var: str, sort: str, sub: Formula) -> Formula:
    if isinstance(sub, (FTrue, FFalse)):
        return sub
    return Forall(var, sort, sub)


# ---------------------------------------------------------------------------
# Variable plumbing


def _map_tterm(t: TempTerm, tmap: dict[str, TempTerm]) -> TempTerm:
    if isinstance(t, TVar):
        return tmap.get(t.name, t)
    if isinstance(t, TShift):
        return tshift(_map_tterm(t.base, tmap), t.delta)
    return t


def substitute(f: Formula, imap: dict[str, str] | None = None, tmap: dict[str, TempTerm] | None = None) -> Formula:
    """Substitute free individual variables (by variables) and free
    temporal variables (by temporal terms).  Bound variables are assumed
    distinct from the substituted names; the builders guarantee this by
    drawing bound names from a reserved namespace."""
    imap = imap or {}
    tmap = tmap or {}
    if not imap and not tmap:
        return f

    def it(v: str) -> str:
        return imap.get(v, v)

    def walk(node: Formula, imap: dict[str, str], tmap: dict[str, TempTerm]) -> Formula:
        if isinstance(node, (FTrue, FFalse)):
            return node
        if isinstance(node, CAtom):
            return CAtom(node.name, imap.get(node.x, node.x), _map_tterm(node.t, tmap))
        if isinstance(node, RAtom):
            return RAtom(
                node.name,
                imap.get(node.x, node.x),
                imap.get(node.y, node.y),
                _map_tterm(node.t, tmap),
            )
        if isinstance(node, Less):
            return Less(_map_tterm(node.a, tmap), _map_tterm(node.b, tmap))
        if isinstance(node, DiffEq):
            return DiffEq(_map_tterm(node.a, tmap), _map_tterm(node.b, tmap), node.r)
        if isinstance(node, DiffGt):
            return DiffGt(_map_tterm(node.a, tmap), _map_tterm(node.b, tmap), node.r)
        if isinstance(node, DiffIn):
            return DiffIn(_map_tterm(node.a, tmap), _map_tterm(node.b, tmap), node.r, node.p)
        if isinstance(node, Not):
            return Not(walk(node.sub, imap, tmap))
        if isinstance(node, And):
            return And(tuple(walk(p, imap, tmap) for p in node.parts))
        if isinstance(node, Or):
            return Or(tuple(walk(p, imap, tmap) for p in node.parts))
        if isinstance(node, Exists):
            imap2 = {k: v for k, v in imap.items() if k != node.var}
            tmap2 = {k: v for k, v in tmap.items() if k != node.var}
            return Exists(node.var, node.sort, walk(node.sub, imap2, tmap2))
        if isinstance(node, Forall):
            imap2 = {k: v for k, v in imap.items() if k != node.var}
            tmap2 = {k: v for k, v in tmap.items() if k != node.var}
            return Forall(node.var, node.sort, walk(node.sub, imap2, tmap2))
        if isinstance(node, RPR):
            defs = tuple(
                RPRDef(
                    d.name,
                    d.params,
                    d.tvar,
                    walk(
                        d.theta,
                        {k: v for k, v in imap.items() if k not in d.params},
                        {k: v for k, v in tmap.items() if k != d.tvar},
                    ),
                )
                for d in node.defs
            )
            return RPR(defs, walk(node.body, imap, tmap))
        if isinstance(node, RPRAtom):
            return RPRAtom(
                node.name,
                tuple(imap.get(a, a) for a in node.args),
                _map_tterm(node.t, tmap),
            )
        if isinstance(node, OracleAtom):
            return OracleAtom(
                node.tag,
                node.payload,
                tuple(imap.get(v, v) for v in node.ivars),
                None if node.t is None else _map_tterm(node.t, tmap),
            )
        raise TypeError(f"unknown formula node {node!r}")

    return walk(f, imap, tmap)


def free_vars(f: Formula) -> dict[str, str]:
    """Free variables and their sorts in first-occurrence order."""
    out: dict[str, str] = {}

    def tvars(t: TempTerm, bound: set[str]) -> None:
        if isinstance(t, TVar):
            if t.name not in bound and t.name not in out:
                out[t.name] = "time"
        elif isinstance(t, TShift):
            tvars(t.base, bound)

    def walk(node: Formula, bound: set[str]) -> None:
        if isinstance(node, (FTrue, FFalse)):
            return
        if isinstance(node, CAtom):
            if node.x not in bound and node.x not in out:
                out[node.x] = "ind"
            tvars(node.t, bound)
        elif isinstance(node, RAtom):
            for v in (node.x, node.y):
                if v not in bound and v not in out:
                    out[v] = "ind"
            tvars(node.t, bound)
        elif isinstance(node, (Less, DiffEq, DiffGt, DiffIn)):
            tvars(node.a, bound)
            tvars(node.b, bound)
        elif isinstance(node, Not):
            walk(node.sub, bound)
        elif isinstance(node, (And, Or)):
            for part in node.parts:
                walk(part, bound)
        elif isinstance(node, (Exists, Forall)):
            walk(node.sub, bound | {node.var})
        elif isinstance(node, RPR):
            for d in node.defs:
                walk(d.theta, bound | set(d.params) | {d.tvar})
            walk(node.body, bound)
        elif isinstance(node, RPRAtom):
            for v in node.args:
                if v not in bound and v not in out:
                    out[v] = "ind"
            tvars(node.t, bound)
        elif isinstance(node, OracleAtom):
            for v in node.ivars:
                if v not in bound and v not in out:
                    out[v] = "ind"
            if node.t is not None:
                tvars(node.t, bound)
        else:
            raise TypeError(f"unknown formula node {node!r}")

    walk(f, set())
    return out


def iter_nodes(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from iter_nodes(f.sub)
    elif isinstance(f, (And, Or)):
        for part in f.parts:
            yield from iter_nodes(part)
    elif isinstance(f, (Exists, Forall)):
        yield from iter_nodes(f.sub)
    elif isinstance(f, RPR):
        for d in f.defs:
            yield from iter_nodes(d.theta)
        yield from iter_nodes(f.body)
