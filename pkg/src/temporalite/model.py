"""Core domain model: ontologies, data instances and queries.

An ontology is a set of concept inclusions (TBox) and role inclusions
(RBox) over temporalised concepts and roles.  Temporal operators appear
as prefixes on terms; after normalisation every term carries at most one
prefix and eventuality prefixes have been compiled away.  Data instances
(ABoxes) are finite sets of timestamped concept/role atoms over the
integers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

# Temporal prefixes.  XF/XP are next/previous, GF/GP always-future/past,
# DF/DP eventually-future/past (eliminated by normalisation).
XF, XP, GF, GP, DF, DP = "XF", "XP", "GF", "GP", "DF", "DP"
BOX_OPS = frozenset({GF, GP})
NEXT_OPS = frozenset({XF, XP})
DIAMOND_OPS = frozenset({DF, DP})
ALL_OPS = BOX_OPS | NEXT_OPS | DIAMOND_OPS

#: reserved marker; identifiers containing it are rejected by the parser
RESERVED = "$"
#: reserved concept name used for padding dummies, never queried
DUMMY = "$dummy"


class ModelError(ValueError):
    """Raised for ill-formed ontologies, data or queries."""


@dataclass(frozen=True, order=True)
class Role:
    """A role name or its inverse; ``inv`` is an involution."""

    base: str
    inverse: bool = False

    def inv(self) -> Role:
        return Role(self.base, not self.inverse)

    def __str__(self) -> str:
        return self.base + ("-" if self.inverse else "")


@dataclass(frozen=True, order=True)
class Concept:
    """An atomic concept name."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Exists:
    """The unqualified existential restriction over a role."""

    role: Role

    def __str__(self) -> str:
        return f"E {self.role}"


Basic = Union[Concept, Exists]


@dataclass(frozen=True)
class Term:
    """A temporalised concept or role: a prefix chain over a base.

    ``prefixes`` reads outside-in, so ``(GF, XP)`` over ``A`` is the term
    "always-in-the-future (previous A)".  Normal form guarantees at most
    one prefix, drawn from {XF, XP, GF, GP}.
    """

    prefixes: tuple[str, ...]
    base: Union[Basic, Role]

    def __post_init__(self) -> None:
        for op in self.prefixes:
            if op not in ALL_OPS:
                raise ModelError(f"unknown temporal operator {op!r}")

    @property
    def is_role(self) -> bool:
        return isinstance(self.base, Role)

    def with_prefixes(self, prefixes: tuple[str, ...]) -> Term:
        return Term(prefixes, self.base)

    def __str__(self) -> str:
        ops = " ".join(_OP_TEXT[p] for p in self.prefixes)
        return f"{ops} {self.base}".strip()


_OP_TEXT = {XF: "X_F", XP: "X_P", GF: "G_F", GP: "G_P", DF: "D_F", DP: "D_P"}


@dataclass(frozen=True)
class Inclusion:
    """One clause: premises (conjoined) entail conclusions (disjoined).

    Empty premises stand for top, empty conclusions for bottom.  All
    terms on both sides are concepts, or all are roles.
    """

    premises: tuple[Term, ...]
    conclusions: tuple[Term, ...]

    def __post_init__(self) -> None:
        kinds = {t.is_role for t in self.premises + self.conclusions}
        if len(kinds) > 1:
            raise ModelError("inclusion mixes concept and role terms")

    @property
    def is_role(self) -> bool:
        terms = self.premises + self.conclusions
        return bool(terms) and terms[0].is_role

    def __str__(self) -> str:
        left = " & ".join(map(str, self.premises)) or "top"
        right = " | ".join(map(str, self.conclusions)) or "bot"
        return f"{left} <= {right}"


@dataclass(frozen=True)
class FragmentDescriptor:
    """Tightest clausal classification of a normalised ontology."""

    concept_class: str
    role_class: str
    operators: frozenset[str]
    capabilities: frozenset[str] = frozenset()

    def __str__(self) -> str:
        ops = ",".join(sorted(self.operators)) or "-"
        return f"({self.concept_class}, {self.role_class}, {{{ops}}})"


CLASS_ORDER = ("core", "krom", "horn", "horn+", "g-bool", "bool")

CAP_HORN_REWRITABLE = "horn-rewritable"
CAP_CORE_REWRITABLE = "core-rewritable"
CAP_CONSISTENCY = "consistency-decidable-here"
CAP_EMITTERS_ONLY = "emitters-only"


@dataclass(frozen=True)
class Ontology:
    """A TBox plus RBox.  Construct raw, then ``normalize_ontology``."""

    tbox: tuple[Inclusion, ...]
    rbox: tuple[Inclusion, ...]
    normalized: bool = False

    @property
    def inclusions(self) -> tuple[Inclusion, ...]:
        return self.tbox + self.rbox

    def concept_names(self) -> set[str]:
        names: set[str] = set()
        for inc in self.inclusions:
            for term in inc.premises + inc.conclusions:
                if isinstance(term.base, Concept):
                    names.add(term.base.name)
        return names

    def role_bases(self) -> set[str]:
        bases: set[str] = set()
        for inc in self.inclusions:
            for term in inc.premises + inc.conclusions:
                if isinstance(term.base, Exists):
                    bases.add(term.base.role.base)
                elif isinstance(term.base, Role):
                    bases.add(term.base.base)
        return bases

    def roles(self) -> list[Role]:
        """All roles of the alphabet, both polarities, sorted."""
        return [Role(b, i) for b in sorted(self.role_bases()) for i in (False, True)]

    def canonical_text(self) -> str:
        lines = sorted(str(inc) for inc in self.tbox) + sorted(str(inc) for inc in self.rbox)
        return "\n".join(lines)


def ontology(tbox: Iterable[Inclusion] = (), rbox: Iterable[Inclusion] = ()) -> Ontology:
    return Ontology(tuple(tbox), tuple(rbox))


# ---------------------------------------------------------------------------
# Normalisation


class _FreshNames:
    def __init__(self, taken: set[str]):
        self.taken = set(taken)
        self.counter = itertools.count(1)

    def fresh(self, hint: str) -> str:
        while True:
            name = f"{hint}{RESERVED}{next(self.counter)}"
            if name not in self.taken:
                self.taken.add(name)
                return name


def _base_hint(term: Term) -> str:
    if isinstance(term.base, Concept):
        return term.base.name
    if isinstance(term.base, Exists):
        return term.base.role.base
    return term.base.base


def _fresh_term_like(term: Term, names: _FreshNames) -> Term:
    """A prefix-free term over a fresh name of the same kind as ``term``."""
    hint = _base_hint(term)
    if term.is_role:
        return Term((), Role(names.fresh(hint)))
    return Term((), Concept(names.fresh(hint)))


def _flatten_inclusion(inc: Inclusion, names: _FreshNames) -> list[Inclusion]:
    """Peel nested prefixes using fresh names, preserving least models.

    A premise G_F X_P A becomes G_F A' with the defining clause
    X_P A <= A'; a conclusion G_F X_P A becomes G_F A' with A' <= X_P A.
    """
    out: list[Inclusion] = []
    premises = list(inc.premises)
    conclusions = list(inc.conclusions)
    changed = True
    while changed:
        changed = False
        for i, term in enumerate(premises):
            if len(term.prefixes) > 1:
                inner = term.with_prefixes(term.prefixes[1:])
                aux = _fresh_term_like(term, names)
                out.append(Inclusion((inner,), (aux,)))
                premises[i] = aux.with_prefixes(term.prefixes[:1])
                changed = True
        for i, term in enumerate(conclusions):
            if len(term.prefixes) > 1:
                inner = term.with_prefixes(term.prefixes[1:])
                aux = _fresh_term_like(term, names)
                out.append(Inclusion((aux,), (inner,)))
                conclusions[i] = aux.with_prefixes(term.prefixes[:1])
                changed = True
    out.append(Inclusion(tuple(premises), tuple(conclusions)))
    return out


def _eliminate_diamonds(inc: Inclusion, names: _FreshNames) -> list[Inclusion]:
    """Compile eventuality prefixes away.

    A lone eventuality premise swaps sides: D_P p <= q turns into
    p <= G_F q.  Otherwise each premise D_P p gets a fresh surrogate p'
    defined by p <= G_F p' (mirror for D_F); in the least model p' holds
    exactly where D_P p does.  An eventuality conclusion D_F q in a
    disjunctive clause is simulated by moving G_F q' to the premises and
    adding top <= q' | q; on a Horn conclusion it is rejected.
    """
    premises = list(inc.premises)
    conclusions = list(inc.conclusions)

    def is_diamond(t: Term) -> bool:
        return bool(t.prefixes) and t.prefixes[0] in DIAMOND_OPS

    if len(premises) == 1 and len(conclusions) <= 1 and is_diamond(premises[0]):
        term = premises[0]
        op = GF if term.prefixes[0] == DP else GP
        inner = term.with_prefixes(term.prefixes[1:])
        swapped = tuple(c.with_prefixes((op,) + c.prefixes) for c in conclusions)
        if all(len(c.prefixes) <= 1 for c in swapped) and not any(map(is_diamond, swapped)):
            return [Inclusion((inner,), swapped)]

    out: list[Inclusion] = []
    for i, term in enumerate(premises):
        if is_diamond(term):
            op = GF if term.prefixes[0] == DP else GP
            inner = term.with_prefixes(term.prefixes[1:])
            aux = _fresh_term_like(term, names)
            out.append(Inclusion((inner,), (aux.with_prefixes((op,)),)))
            premises[i] = aux

    for i, term in enumerate(conclusions):
        if is_diamond(term):
            if len(conclusions) <= 1:
                raise ModelError(
                    f"eventuality on a Horn conclusion has no normal form: {inc}"
                )
            op_box = GF if term.prefixes[0] == DF else GP
            inner = term.with_prefixes(term.prefixes[1:])
            aux = _fresh_term_like(term, names)
            rest = tuple(c for j, c in enumerate(conclusions) if j != i)
            out.append(
                Inclusion(tuple(premises) + (aux.with_prefixes((op_box,)),), rest)
            )
            out.append(Inclusion((), (aux, inner)))
            return out

    out.append(Inclusion(tuple(premises), tuple(conclusions)))
    return out


def _invert_term(term: Term) -> Term:
    assert isinstance(term.base, Role)
    return Term(term.prefixes, term.base.inv())


def normalize_ontology(raw: Ontology) -> Ontology:
    """Return the normal form: prefix depth at most one, no eventualities,
    inverse-closed RBox, and every TBox role also mentioned in the RBox.

    The result is a model-conservative extension of ``raw``; fresh names
    carry the reserved marker and cannot clash with parsed input.
    """
    taken = raw.concept_names() | raw.role_bases()
    names = _FreshNames(taken)

    for inc in raw.inclusions:
        for term in inc.premises + inc.conclusions:
            if any(op not in ALL_OPS for op in term.prefixes):
                raise ModelError(f"unknown operator in {term}")

    work = list(raw.inclusions)
    flat: list[Inclusion] = []
    while work:
        inc = work.pop()
        pieces = _flatten_inclusion(inc, names)
        done = pieces[:-1]
        for piece in done:
            work.append(piece)
        flat.append(pieces[-1])

    cooked: list[Inclusion] = []
    work = flat
    while work:
        inc = work.pop()
        pieces = _eliminate_diamonds(inc, names)
        for piece in pieces[:-1]:
            work.append(piece)
        last = pieces[-1]
        if any(t.prefixes and t.prefixes[0] in DIAMOND_OPS for t in last.premises + last.conclusions):
            work.append(last)
        else:
            cooked.append(last)

    tbox = [inc for inc in cooked if not inc.is_role and (inc.premises or inc.conclusions)]
    rbox = [inc for inc in cooked if inc.is_role]

    # close the RBox under inverses: temporal prefixes commute with inversion
    closed: dict[str, Inclusion] = {}
    for inc in rbox:
        mirror = Inclusion(
            tuple(_invert_term(t) for t in inc.premises),
            tuple(_invert_term(t) for t in inc.conclusions),
        )
        for cand in (inc, mirror):
            closed.setdefault(str(cand), cand)
    rbox = list(closed.values())

    # every role of the TBox must occur in the RBox (trivial axioms added)
    rbox_bases = {
        t.base.base
        for inc in rbox
        for t in inc.premises + inc.conclusions
        if isinstance(t.base, Role)
    }
    tbox_bases = set()
    for inc in tbox:
        for t in inc.premises + inc.conclusions:
            if isinstance(t.base, Exists):
                tbox_bases.add(t.base.role.base)
    for base in sorted(tbox_bases - rbox_bases):
        for role in (Role(base), Role(base, True)):
            trivial = Term((), role)
            rbox.append(Inclusion((trivial,), (trivial,)))

    def _dedup(incs: list[Inclusion]) -> tuple[Inclusion, ...]:
        seen: dict[str, Inclusion] = {}
        for inc in incs:
            premises = tuple(dict.fromkeys(inc.premises))
            conclusions = tuple(dict.fromkeys(inc.conclusions))
            inc = Inclusion(premises, conclusions)
            seen.setdefault(str(inc), inc)
        return tuple(seen[k] for k in sorted(seen))

    return Ontology(_dedup(tbox), _dedup(rbox), normalized=True)


# ---------------------------------------------------------------------------
# Fragment classification


def _clause_class(incs: Iterable[Inclusion]) -> str:
    core = krom = horn = gbool = True
    for inc in incs:
        k, m = len(inc.premises), len(inc.conclusions)
        if m > 1:
            horn = False
        if k + m > 2:
            krom = False
        if k + m > 2 or m > 1:
            core = False
        if k < 1:
            gbool = False
    if core:
        return "core"
    if horn:
        return "horn"
    if krom:
        return "krom"
    if gbool:
        return "g-bool"
    return "bool"


def classify_fragment(o: Ontology) -> FragmentDescriptor:
    """Tightest (concept-class, role-class, operator-set) plus capabilities."""
    if not o.normalized:
        raise ModelError("classify_fragment expects a normalized ontology")
    cclass = _clause_class(o.tbox)
    rclass = _clause_class(o.rbox)
    if rclass == "horn" and all(
        all(not t.prefixes for t in inc.premises) for inc in o.rbox
    ):
        rclass = "horn+"
    ops: set[str] = set()
    for inc in o.inclusions:
        for term in inc.premises + inc.conclusions:
            for op in term.prefixes:
                ops.add("box" if op in BOX_OPS else "next")

    horn_like = {"core", "horn", "horn+"}
    caps: set[str] = set()
    if cclass in horn_like and rclass in horn_like:
        caps.add(CAP_HORN_REWRITABLE)
        caps.add(CAP_CONSISTENCY)
        if cclass == "core" and rclass in ("core",):
            caps.add(CAP_CORE_REWRITABLE)
    else:
        caps.add(CAP_EMITTERS_ONLY)
    return FragmentDescriptor(cclass, rclass, frozenset(ops), frozenset(caps))


# ---------------------------------------------------------------------------
# ABoxes


@dataclass(frozen=True)
class ABox:
    """A finite set of timestamped atoms.

    ``prepare_abox`` shifts time so the minimum is 0, pads with reserved
    dummies so the maximum is at least 1 and at least the number of
    individuals minus one, and remembers the shift for answer
    translation.  Inverse role atoms are a view, not storage.
    """

    concept_atoms: frozenset[tuple[str, str, int]]
    role_atoms: frozenset[tuple[str, str, str, int]]
    offset: int = 0
    prepared: bool = False

    def individuals(self) -> list[str]:
        inds = {a for _, a, _ in self.concept_atoms}
        for _, a, b, _ in self.role_atoms:
            inds.add(a)
            inds.add(b)
        return sorted(inds)

    def timestamps(self) -> list[int]:
        stamps = [n for *_, n in self.concept_atoms] + [n for *_, n in self.role_atoms]
        return stamps

    @property
    def min_time(self) -> int:
        return min(self.timestamps())

    @property
    def max_time(self) -> int:
        return max(self.timestamps())

    def tem(self) -> range:
        return range(self.min_time, self.max_time + 1)

    def has_role(self, role: Role, a: str, b: str, n: int) -> bool:
        if role.inverse:
            return (role.base, b, a, n) in self.role_atoms
        return (role.base, a, b, n) in self.role_atoms

    def role_pairs(self) -> set[tuple[str, str]]:
        pairs = set()
        for _, a, b, _ in self.role_atoms:
            pairs.add((a, b))
            pairs.add((b, a))
        return pairs


def abox(
    concepts: Iterable[tuple[str, str, int]] = (),
    roles: Iterable[tuple[str, str, str, int]] = (),
) -> ABox:
    return ABox(frozenset(concepts), frozenset(roles))


def prepare_abox(a: ABox) -> ABox:
    """Shift to min 0 and pad with dummies; idempotent."""
    if not a.concept_atoms and not a.role_atoms:
        raise ModelError("empty data instance")
    if a.prepared:
        return a
    shift = a.min_time
    concepts = {(c, i, n - shift) for c, i, n in a.concept_atoms}
    roles = {(r, i, j, n - shift) for r, i, j, n in a.role_atoms}
    inds = sorted({i for _, i, _ in concepts} | {i for _, i, j, _ in roles} | {j for _, i, j, _ in roles})
    need = max(1, len(inds) - 1)
    have = max(max((n for *_, n in concepts), default=0), max((n for *_, n in roles), default=0))
    if have < need:
        concepts.add((DUMMY, inds[0], need))
    return ABox(frozenset(concepts), frozenset(roles), offset=shift + a.offset, prepared=True)


# ---------------------------------------------------------------------------
# Positive temporal queries and epistemic formulas


@dataclass(frozen=True)
class PQTop:
    def __str__(self) -> str:
        return "top"


@dataclass(frozen=True)
class PQName:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PQRole:
    role: Role

    def __str__(self) -> str:
        return str(self.role)


@dataclass(frozen=True)
class PQExists:
    role: Role
    sub: "PositiveQuery"

    def __str__(self) -> str:
        return f"E[{self.role}]({self.sub})"


@dataclass(frozen=True)
class PQAnd:
    left: "PositiveQuery"
    right: "PositiveQuery"

    def __str__(self) -> str:
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class PQOr:
    left: "PositiveQuery"
    right: "PositiveQuery"

    def __str__(self) -> str:
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class PQOp:
    op: str  # XF, XP, GF, GP, DF, DP
    sub: "PositiveQuery"

    def __str__(self) -> str:
        return f"{_OP_TEXT[self.op]} ({self.sub})"


@dataclass(frozen=True)
class PQUntil:
    left: "PositiveQuery"
    right: "PositiveQuery"

    def __str__(self) -> str:
        return f"({self.left} U {self.right})"


@dataclass(frozen=True)
class PQSince:
    left: "PositiveQuery"
    right: "PositiveQuery"

    def __str__(self) -> str:
        return f"({self.left} S {self.right})"


PositiveQuery = Union[PQTop, PQName, PQRole, PQExists, PQAnd, PQOr, PQOp, PQUntil, PQSince]


def query_is_role(q: PositiveQuery) -> bool:
    """Whether a positive query denotes pairs (a role query)."""
    if isinstance(q, PQRole):
        return True
    if isinstance(q, (PQName, PQTop, PQExists)):
        return False
    if isinstance(q, PQOp):
        return query_is_role(q.sub)
    return query_is_role(q.left)


def query_size(q: PositiveQuery) -> int:
    if isinstance(q, (PQTop, PQName, PQRole)):
        return 1
    if isinstance(q, (PQExists, PQOp)):
        return 1 + query_size(q.sub)
    return 1 + query_size(q.left) + query_size(q.right)


def query_role_depth(q: PositiveQuery) -> int:
    if isinstance(q, PQExists):
        return 1 + query_role_depth(q.sub)
    if isinstance(q, PQOp):
        return query_role_depth(q.sub)
    if isinstance(q, (PQAnd, PQOr, PQUntil, PQSince)):
        return max(query_role_depth(q.left), query_role_depth(q.right))
    return 0


def query_names(q: PositiveQuery) -> tuple[set[str], set[str]]:
    """Concept names and role bases occurring in the query."""
    concepts: set[str] = set()
    roles: set[str] = set()

    def walk(node: PositiveQuery) -> None:
        if isinstance(node, PQName):
            concepts.add(node.name)
        elif isinstance(node, PQRole):
            roles.add(node.role.base)
        elif isinstance(node, PQExists):
            roles.add(node.role.base)
            walk(node.sub)
        elif isinstance(node, PQOp):
            walk(node.sub)
        elif isinstance(node, (PQAnd, PQOr, PQUntil, PQSince)):
            walk(node.left)
            walk(node.right)

    walk(q)
    return concepts, roles


# Epistemic first-order layer: positive queries as atoms, FO skeleton on top.


@dataclass(frozen=True)
class EAtom:
    """kappa(x,t) or rho(x,y,t) under the certain-answer semantics."""

    query: PositiveQuery
    vars: tuple[str, ...]  # (x, t) or (x, y, t)


@dataclass(frozen=True)
class ELess:
    left: str
    right: str


@dataclass(frozen=True)
class ENot:
    sub: "EpistemicFormula"


@dataclass(frozen=True)
class EAnd:
    parts: tuple["EpistemicFormula", ...]


@dataclass(frozen=True)
class EOr:
    parts: tuple["EpistemicFormula", ...]


@dataclass(frozen=True)
class EImplies:
    left: "EpistemicFormula"
    right: "EpistemicFormula"


@dataclass(frozen=True)
class EQuant:
    kind: str  # "forall" | "exists"
    var: str
    sort: str  # "ind" | "time"
    sub: "EpistemicFormula"


EpistemicFormula = Union[EAtom, ELess, ENot, EAnd, EOr, EImplies, EQuant]


def epistemic_free_vars(f: EpistemicFormula) -> dict[str, str]:
    """Free variables with their sorts, in first-occurrence order."""
    out: dict[str, str] = {}

    def walk(node: EpistemicFormula, bound: set[str]) -> None:
        if isinstance(node, EAtom):
            sorts = ("ind", "time") if len(node.vars) == 2 else ("ind", "ind", "time")
            for var, sort in zip(node.vars, sorts):
                if var not in bound and var not in out:
                    out[var] = sort
        elif isinstance(node, ELess):
            for var in (node.left, node.right):
                if var not in bound and var not in out:
                    out[var] = "time"
        elif isinstance(node, ENot):
            walk(node.sub, bound)
        elif isinstance(node, (EAnd, EOr)):
            for part in node.parts:
                walk(part, bound)
        elif isinstance(node, EImplies):
            walk(node.left, bound)
            walk(node.right, bound)
        elif isinstance(node, EQuant):
            walk(node.sub, bound | {node.var})

    walk(f, set())
    return out
