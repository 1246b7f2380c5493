"""Projections of the two-dimensional ontology onto propositional LTL.

The concept side replaces every basic concept B by a proposition (the
surrogate E_S for an existential); the role side replaces every role S
by a proposition A_S.  Connecting axioms bridge the two: for a role type
rho, fresh concepts D^n_rho unwind the canonical rod of rho into the
concept dimension, triggered by the surrogate of a fresh role G_rho (and
by E_S itself for the type generated by a single role S).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import ltl
from .ltl import LAtom, LClause, LTLOntology, PeriodicTrace, canonical_trace, ltl_ontology
from .model import (
    ABox,
    Concept,
    Exists,
    FragmentDescriptor,
    Inclusion,
    ModelError,
    Ontology,
    Role,
    Term,
    GF,
    GP,
    XF,
    XP,
    classify_fragment,
    prepare_abox,
)


class ProjectionError(ModelError):
    pass


def role_key(role: Role) -> str:
    return str(role)


def exists_surrogate(role: Role) -> str:
    return f"E${role_key(role)}"


def role_surrogate(role: Role) -> str:
    return f"A${role_key(role)}"


def concept_dag(base) -> str:
    """B-dagger for a basic concept."""
    if isinstance(base, Concept):
        return base.name
    if isinstance(base, Exists):
        return exists_surrogate(base.role)
    raise ProjectionError(f"not a basic concept: {base!r}")


def _latom_dag(term: Term) -> LAtom:
    prefix = term.prefixes[0] if term.prefixes else ""
    return (prefix, concept_dag(term.base))


def _latom_ddag(term: Term) -> LAtom:
    prefix = term.prefixes[0] if term.prefixes else ""
    assert isinstance(term.base, Role)
    return (prefix, role_surrogate(term.base))


def project(o: Ontology) -> tuple[LTLOntology, LTLOntology]:
    """(T-dagger, R-double-dagger) for a normalized ontology.

    The TBox must be Horn to live on the Horn LTL substrate; Boolean
    TBoxes are served by the encoding emitters instead.
    """
    if not o.normalized:
        raise ProjectionError("project expects a normalized ontology")
    tclauses = []
    for inc in o.tbox:
        if len(inc.conclusions) > 1:
            raise ProjectionError("non-Horn TBox cannot be projected onto Horn LTL")
        conclusion = _latom_dag(inc.conclusions[0]) if inc.conclusions else None
        tclauses.append(LClause(tuple(_latom_dag(t) for t in inc.premises), conclusion))
    rclauses = []
    for inc in o.rbox:
        if len(inc.conclusions) > 1:
            raise ProjectionError("non-Horn RBox cannot be projected onto Horn LTL")
        conclusion = _latom_ddag(inc.conclusions[0]) if inc.conclusions else None
        rclauses.append(LClause(tuple(_latom_ddag(t) for t in inc.premises), conclusion))
    rnames = {role_surrogate(r) for r in o.roles()}
    return ltl_ontology(tclauses), ltl_ontology(rclauses, rnames)


def sub_roles(o: Ontology) -> tuple[LAtom, ...]:
    """Positive temporalised-role vocabulary: every plain role of the
    alphabet plus every prefixed role occurring in the RBox."""
    atoms: set[LAtom] = {("", role_surrogate(r)) for r in o.roles()}
    for inc in o.rbox:
        for term in inc.premises + inc.conclusions:
            atoms.add(_latom_ddag(term))
    return tuple(sorted(atoms))


def canonical_rod(rddag: LTLOntology, seed: Iterable[tuple[LAtom, int]]) -> PeriodicTrace:
    """Minimal rod containing the seed atoms; bot-flagged when the seed
    is inconsistent with the role inclusions."""
    return canonical_trace(rddag, list(seed))


def rod_type(rod: PeriodicTrace, subr: tuple[LAtom, ...], n: int) -> frozenset[LAtom]:
    """Positive part of the role type realized at instant n."""
    return frozenset(a for a in subr if rod.holds(a, n))


def type_id(rho: frozenset[LAtom]) -> str:
    return ",".join(f"{p}:{name}" for p, name in sorted(rho))


def g_surrogate(tid: str) -> str:
    return f"EG${tid}"


def rod_params(rod: PeriodicTrace) -> tuple[int, int]:
    """(s, p) with r(n) = r(n + p) for n >= s and r(n) = r(n - p) for
    n <= -s, for a rod seeded at 0."""
    s_left, s_right = rod.stems()
    s = max(1, s_right, -s_left)
    p = ltl._lcm(rod.left_period, rod.right_period)
    return s, p


def con_axioms(
    rddag: LTLOntology,
    subr: tuple[LAtom, ...],
    rho: frozenset[LAtom],
    *,
    extra_triggers: Iterable[str] = (),
) -> list[LClause]:
    """Connecting axioms for one role type, already in dagger form.

    The chain concepts D^n track which existentials the canonical rod of
    rho forces n steps away from the assertion point; the future side
    loops at s + p - 1 back to s, the past side mirrors it.
    """
    rod = canonical_rod(rddag, [(a, 0) for a in rho])
    if rod.bot:
        raise ProjectionError(f"role type {type_id(rho)} is inconsistent")
    s, p = rod_params(rod)
    tid = type_id(rho)

    def d(n: int) -> str:
        return f"D${tid}${n}"

    clauses: list[LClause] = []
    for trig in [g_surrogate(tid), *extra_triggers]:
        clauses.append(LClause((("", trig),), ("", d(0))))
    for n in range(0, s + p - 1):
        clauses.append(LClause((("", d(n)),), (XF, d(n + 1))))
    clauses.append(LClause((("", d(s + p - 1)),), (XF, d(s))))
    for n in range(0, -(s + p) + 1, -1):
        if n > -(s + p) + 1:
            clauses.append(LClause((("", d(n)),), (XP, d(n - 1))))
    clauses.append(LClause((("", d(-(s + p) + 1)),), (XP, d(-s))))
    for n in range(-(s + p) + 1, s + p):
        for pfx, name in subr:
            if pfx == "" and rod.holds(("", name), n):
                exists_name = "E$" + name[2:]  # A$key -> E$key
                clauses.append(LClause((("", d(n)),), ("", exists_name)))
    return clauses


@dataclass(eq=False)
class OntologyContext:
    """Data-independent projection machinery, shared across ABoxes."""

    o: Ontology
    fragment: FragmentDescriptor
    tdag: LTLOntology
    rddag: LTLOntology
    subr: tuple[LAtom, ...]
    tr0: LTLOntology  # T-dagger plus single-role connecting axioms
    single_types: dict[str, str]  # role key -> type id
    _params: Optional[tuple[int, int]] = None
    _pair_types: dict = field(default_factory=dict)

    @property
    def horn(self) -> bool:
        from .model import CAP_HORN_REWRITABLE

        return CAP_HORN_REWRITABLE in self.fragment.capabilities

    def witness_trace(self, role: Role) -> PeriodicTrace:
        """Concept trace of the witness created by an existential over
        ``role``: consequences of E_{role^-} asserted at 0."""
        seed = [(("", exists_surrogate(role.inv())), 0)]
        return canonical_trace(self.tr0, seed)

    def single_rod(self, role: Role) -> PeriodicTrace:
        return canonical_rod(self.rddag, [(("", role_surrogate(role)), 0)])

    def concept_shift_set(self, src: str, dst: str) -> ltl.PeriodicSet:
        """{k : O entails src-dagger <= next^k dst-dagger}."""
        return ltl.entails_shift(self.tr0, ("", src), ("", dst))

    def role_shift_set(self, src: Role, dst: Role) -> ltl.PeriodicSet:
        return ltl.entails_shift(self.rddag, ("", role_surrogate(src)), ("", role_surrogate(dst)))

    def params(self) -> tuple[int, int]:
        """(s_O, p_O) for the concept projection, padded so p >= s and
        compatible with the role-side parameters."""
        if self._params is None:
            s, p = ltl.period_params(self.tr0)
            rs, rp = ltl.period_params(self.rddag)
            s = max(s, rs)
            if p % rp:
                p = ltl._lcm(p, rp)
            if p < s:
                p = p * ((s + p - 1) // p)
            self._params = (s, p)
        return self._params

    def pair_type_clauses(self, rho: frozenset[LAtom]) -> list[LClause]:
        tid = type_id(rho)
        if tid not in self._pair_types:
            self._pair_types[tid] = con_axioms(self.rddag, self.subr, rho)
        return self._pair_types[tid]


_CTX_CACHE: dict[str, OntologyContext] = {}


def make_context(o: Ontology) -> OntologyContext:
    """Context construction is memoised per ontology text: the traces,
    shift sets and periodicity parameters it caches are data-independent
    and expensive."""
    if not o.normalized:
        raise ProjectionError("make_context expects a normalized ontology")
    key = o.canonical_text()
    hit = _CTX_CACHE.get(key)
    if hit is not None:
        return hit
    ctx = _make_context(o)
    _CTX_CACHE[key] = ctx
    return ctx


def _make_context(o: Ontology) -> OntologyContext:
    fragment = classify_fragment(o)
    tdag, rddag = project(o)
    subr = sub_roles(o)
    con0: list[LClause] = []
    single_types: dict[str, str] = {}
    for role in o.roles():
        rod = canonical_rod(rddag, [(("", role_surrogate(role)), 0)])
        if rod.bot:
            continue  # inconsistent roles carry no connecting axioms
        rho = rod_type(rod, subr, 0)
        single_types[role_key(role)] = type_id(rho)
        con0.extend(
            con_axioms(rddag, subr, rho, extra_triggers=[exists_surrogate(role)])
        )
    seen = set()
    con0_unique = []
    for cl in con0:
        text = str(cl)
        if text not in seen:
            seen.add(text)
            con0_unique.append(cl)
    tr0 = ltl_ontology(tuple(tdag.clauses) + tuple(con0_unique), tdag.names)
    return OntologyContext(o, fragment, tdag, rddag, subr, tr0, single_types)


@dataclass(eq=False)
class ProjectionBundle:
    """Per-(ontology, ABox) projection: pair rods, realized role types,
    and the per-individual LTL data the concept traces are built from."""

    ctx: OntologyContext
    abox: ABox
    pair_rods: dict[tuple[str, str], PeriodicTrace]
    realized: dict[tuple[str, int], set[str]]  # (individual, instant) -> type ids
    trfull: LTLOntology
    inconsistent_pair: Optional[tuple[str, str]]
    _ind_traces: dict = field(default_factory=dict)

    @property
    def bot(self) -> bool:
        return self.inconsistent_pair is not None

    def individual_data(self, a: str) -> list[tuple[LAtom, int]]:
        data = [
            (("", name), n) for name, ind, n in sorted(self.abox.concept_atoms) if ind == a
        ]
        for (ind, n), tids in sorted(self.realized.items()):
            if ind == a:
                for tid in sorted(tids):
                    data.append((("", g_surrogate(tid)), n))
        return data

    def individual_trace(self, a: str) -> PeriodicTrace:
        trace = self._ind_traces.get(a)
        if trace is None:
            trace = canonical_trace(self.trfull, self.individual_data(a))
            self._ind_traces[a] = trace
        return trace


def build_projections(o_or_ctx, a: ABox) -> ProjectionBundle:
    """Compute rods for every data pair, realize their role types at the
    active instants, and instantiate the connecting axioms they need."""
    ctx = o_or_ctx if isinstance(o_or_ctx, OntologyContext) else make_context(o_or_ctx)
    abox = prepare_abox(a)
    pair_rods: dict[tuple[str, str], PeriodicTrace] = {}
    realized: dict[tuple[str, int], set[str]] = {}
    extra: list[LClause] = []
    seen_tids = set(ctx.single_types.values())
    inconsistent_pair = None
    pairs = sorted({(min(x, y), max(x, y)) for _, x, y, _ in abox.role_atoms})
    for x, y in pairs:
        seed = []
        for base, i, j, n in sorted(abox.role_atoms):
            if (i, j) == (x, y):
                seed.append((("", role_surrogate(Role(base))), n))
            if (j, i) == (x, y):
                seed.append((("", role_surrogate(Role(base, True))), n))
        rod = canonical_rod(ctx.rddag, seed)
        pair_rods[(x, y)] = rod
        pair_rods[(y, x)] = _mirror(rod)
        if rod.bot:
            inconsistent_pair = (x, y)
            continue
        for u, inverse in ((x, False), (y, True)):
            for n in abox.tem():
                rho = _type_at(ctx, rod, n, inverse=inverse)
                if not rho:
                    continue
                tid = type_id(rho)
                realized.setdefault((u, n), set()).add(tid)
                if tid not in seen_tids:
                    seen_tids.add(tid)
                    extra.extend(ctx.pair_type_clauses(rho))
    trfull = ltl_ontology(tuple(ctx.tr0.clauses) + tuple(extra), ctx.tr0.names)
    return ProjectionBundle(ctx, abox, pair_rods, realized, trfull, inconsistent_pair)


def _type_at(ctx: OntologyContext, rod: PeriodicTrace, n: int, inverse: bool) -> frozenset[LAtom]:
    if not inverse:
        return rod_type(rod, ctx.subr, n)
    flipped = []
    for pfx, name in ctx.subr:
        key = name[2:]
        role = _parse_role_key(key)
        if rod.holds((pfx, role_surrogate(role.inv())), n):
            flipped.append((pfx, name))
    return frozenset(flipped)


def _parse_role_key(key: str) -> Role:
    if key.endswith("-"):
        return Role(key[:-1], True)
    return Role(key)


def _mirror(rod: PeriodicTrace) -> PeriodicTrace:
    """View of a rod with every role swapped for its inverse."""
    return PeriodicTrace(
        rod.lo,
        rod.hi,
        tuple(_swap_cell(c) for c in rod.cells),
        tuple(_swap_cell(c) for c in rod.ltail),
        tuple(_swap_cell(c) for c in rod.rtail),
        rod.bot,
        frozenset(_swap_name(n) for n in rod.alphabet),
    )


def _swap_name(name: str) -> str:
    if name.startswith("A$"):
        return role_surrogate(_parse_role_key(name[2:]).inv())
    return name


def _swap_cell(cell: frozenset[str]) -> frozenset[str]:
    return frozenset(_swap_name(n) for n in cell)


# ---------------------------------------------------------------------------
# Role monotonicity


def is_role_monotone(
    ctx: OntologyContext, cap: int = 64
) -> tuple[str, Optional[tuple[str, str, int]]]:
    """("yes"|"no"|"unknown", witness).

    Syntactically, box-only RBoxes that are core or horn-plus are
    monotone.  Otherwise role types reachable from single-role seeds are
    enumerated (up to ``cap``) and each checked on its canonical rod: a
    role holding at n != 0 must extend to a half-line through n.
    """
    frag = ctx.fragment
    box_only = all(
        op not in (XF, XP)
        for inc in ctx.o.rbox
        for t in inc.premises + inc.conclusions
        for op in t.prefixes
    )
    if box_only and frag.role_class in ("core", "horn+"):
        return "yes", None

    seen: dict[str, frozenset[LAtom]] = {}
    frontier: list[frozenset[LAtom]] = []
    for role in ctx.o.roles():
        rod = ctx.single_rod(role)
        if rod.bot:
            continue
        rho = rod_type(rod, ctx.subr, 0)
        if rho and type_id(rho) not in seen:
            seen[type_id(rho)] = rho
            frontier.append(rho)
    checked = 0
    while frontier:
        rho = frontier.pop()
        checked += 1
        if checked > cap:
            return "unknown", None
        rod = canonical_rod(ctx.rddag, [(a, 0) for a in rho])
        if rod.bot:
            continue
        witness = _monotone_violation(ctx, rod, rho)
        if witness is not None:
            return "no", witness
        s, p = rod_params(rod)
        for n in range(-s - p, s + p + 1):
            sub = rod_type(rod, ctx.subr, n)
            if sub and type_id(sub) not in seen:
                seen[type_id(sub)] = sub
                frontier.append(sub)
    return "yes", None


def _monotone_violation(
    ctx: OntologyContext, rod: PeriodicTrace, rho: frozenset[LAtom]
) -> Optional[tuple[str, str, int]]:
    for pfx, name in ctx.subr:
        if pfx != "":
            continue
        hits = rod.pos_set(name)
        lo = hits.lo - 2 * hits.lper - 1
        hi = hits.hi + 2 * hits.rper + 1
        for n in hits.iter_range(lo, hi):
            if n == 0:
                continue
            up = hits.all_after(n - 1)
            down = hits.all_before(n + 1)
            if not up and not down:
                return (type_id(rho), name[2:], n)
    return None


# ---------------------------------------------------------------------------
# Bottom elimination


def bot_eliminate(o: Ontology) -> tuple[Ontology, str, str]:
    """Replace falsum by a fresh global concept A-bot and role P-bot.

    Roles inconsistent with the ontology are funnelled into P-bot so
    their emptiness keeps propagating; the rewritten ontology is
    bottom-free and, on consistent data, answer-preserving.
    """
    from .consistency import check_consistency
    from .model import abox as mk_abox

    if not o.normalized:
        raise ProjectionError("bot_eliminate expects a normalized ontology")
    a_bot = "A$bot"
    p_bot = "P$bot"
    new_rbox: list[Inclusion] = []
    for inc in o.rbox:
        if not inc.conclusions:
            new_rbox.append(Inclusion(inc.premises, (Term((), Role(p_bot)),)))
        else:
            new_rbox.append(inc)
    inconsistent_roles = []
    for role in o.roles():
        if role.inverse:
            continue
        report = check_consistency(o, mk_abox(roles=[(role.base, "u", "v", 0)]))
        if report.verdict == "inconsistent":
            inconsistent_roles.append(role)
    for role in inconsistent_roles:
        new_rbox.append(Inclusion((Term((), role),), (Term((), Role(p_bot)),)))

    new_tbox: list[Inclusion] = []
    for inc in o.tbox:
        if not inc.conclusions:
            new_tbox.append(Inclusion(inc.premises, (Term((), Concept(a_bot)),)))
        else:
            new_tbox.append(inc)
    for r in (Role(p_bot), Role(p_bot, True)):
        new_tbox.append(Inclusion((Term((), Exists(r)),), (Term((), Concept(a_bot)),)))
    ops = classify_fragment(o).operators
    bot_term = Term((), Concept(a_bot))
    if "box" in ops:
        new_tbox.append(Inclusion((bot_term,), (Term((GF,), Concept(a_bot)),)))
        new_tbox.append(Inclusion((bot_term,), (Term((GP,), Concept(a_bot)),)))
    elif "next" in ops:
        new_tbox.append(Inclusion((bot_term,), (Term((XF,), Concept(a_bot)),)))
        new_tbox.append(Inclusion((bot_term,), (Term((XP,), Concept(a_bot)),)))
    from .model import normalize_ontology, ontology

    cooked = normalize_ontology(ontology(new_tbox, new_rbox))
    return cooked, a_bot, p_bot
