"""Knowledge-base consistency and the satisfiability encodings.

Horn consistency is decided on the periodic projections: bottom must
show up in a pair rod, in an individual concept trace, or in the concept
trace of a witness reachable through derivable existentials.  For the
non-Horn fragments the module emits (but does not solve) the one-variable
first-order LTL and propositional LTL encodings whose satisfiability
characterises consistency; see ``docs`` in the README for the grammar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from . import ltl
from .ltl import LAtom, LClause, LTLOntology, canonical_trace
from .model import (
    ABox,
    CAP_HORN_REWRITABLE,
    Concept,
    Exists,
    GF,
    GP,
    Inclusion,
    ModelError,
    Ontology,
    Role,
    Term,
    XF,
    XP,
    prepare_abox,
)
from .projection import (
    OntologyContext,
    ProjectionBundle,
    build_projections,
    exists_surrogate,
    make_context,
    role_key,
    role_surrogate,
)


class FragmentMismatch(ModelError):
    pass


@dataclass(frozen=True)
class DerivationStep:
    clause: str
    instant: int


@dataclass(frozen=True)
class ConsistencyWitness:
    component: str  # e.g. "pair a,b" / "individual a" / "witness P"
    steps: tuple[DerivationStep, ...]


@dataclass(frozen=True)
class ConsistencyReport:
    verdict: str  # "consistent" | "inconsistent"
    witness: Optional[ConsistencyWitness] = None


def _bot_derivation(ont: LTLOntology, data: list[tuple[LAtom, int]]) -> tuple[DerivationStep, ...]:
    """A replayable chain of clause firings ending in bottom, recovered
    by a recording forward closure on a widening window."""
    from .ltl import _Builder

    dmin = min((n for _, n in data), default=0)
    dmax = max((n for _, n in data), default=0)
    margin = 12
    while margin <= 4096:
        b = _Builder(ont, dmin - margin, dmax + margin)
        for (pfx, name), n in data:
            b.apply_conclusion((pfx, name), n)
        steps: list[DerivationStep] = []
        progress = True
        while progress and not b.bot:
            progress = False
            for cl in ont.clauses:
                for n in range(b.lo, b.hi + 1):
                    if all(b.premise_true(p, n) for p in cl.premises):
                        if cl.conclusion is None:
                            steps.append(DerivationStep(str(cl), n))
                            b.bot = True
                            break
                        before = b._size()
                        b.apply_conclusion(cl.conclusion, n)
                        if b._size() != before:
                            steps.append(DerivationStep(str(cl), n))
                            progress = True
                if b.bot:
                    break
        if b.bot:
            return tuple(steps)
        margin *= 2
    return tuple()


def check_consistency(o_or_ctx, a: ABox) -> ConsistencyReport:
    """Decide consistency of a fully Horn knowledge base."""
    ctx = o_or_ctx if isinstance(o_or_ctx, OntologyContext) else make_context(o_or_ctx)
    if not ctx.horn:
        raise FragmentMismatch(
            "consistency is decided here for Horn ontologies only; "
            "use the encoding emitters for Boolean or Krom input"
        )
    return check_consistency_bundle(build_projections(ctx, prepare_abox(a)))


def check_consistency_bundle(bundle: ProjectionBundle) -> ConsistencyReport:
    ctx = bundle.ctx
    abox = bundle.abox
    if bundle.bot:
        x, y = bundle.inconsistent_pair
        seed = []
        for base, i, j, n in sorted(abox.role_atoms):
            if (i, j) == (x, y):
                seed.append((("", role_surrogate(Role(base))), n))
            if (j, i) == (x, y):
                seed.append((("", role_surrogate(Role(base, True))), n))
        steps = _bot_derivation(ctx.rddag, seed)
        return ConsistencyReport(
            "inconsistent", ConsistencyWitness(f"pair {x},{y}", steps)
        )
    for ind in abox.individuals():
        trace = bundle.individual_trace(ind)
        if trace.bot:
            steps = _bot_derivation(bundle.trfull, bundle.individual_data(ind))
            return ConsistencyReport(
                "inconsistent", ConsistencyWitness(f"individual {ind}", steps)
            )
    # witnesses: roles whose existential is derivable anywhere spawn an
    # anonymous element whose trace must be bottom-free as well
    reachable: set[str] = set()
    frontier: list[Role] = []
    for role in ctx.o.roles():
        name = exists_surrogate(role)
        if any(
            not bundle.individual_trace(ind).pos_set(name).is_empty()
            for ind in abox.individuals()
        ):
            if role_key(role) not in reachable:
                reachable.add(role_key(role))
                frontier.append(role)
    while frontier:
        role = frontier.pop()
        rod = ctx.single_rod(role)
        if rod.bot:
            steps = _bot_derivation(ctx.rddag, [(("", role_surrogate(role)), 0)])
            return ConsistencyReport(
                "inconsistent", ConsistencyWitness(f"witness {role}", steps)
            )
        wtrace = ctx.witness_trace(role)
        if wtrace.bot:
            steps = _bot_derivation(ctx.tr0, [(("", exists_surrogate(role.inv())), 0)])
            return ConsistencyReport(
                "inconsistent", ConsistencyWitness(f"witness {role}", steps)
            )
        for nxt in ctx.o.roles():
            name = exists_surrogate(nxt)
            if role_key(nxt) not in reachable and not wtrace.pos_set(name).is_empty():
                reachable.add(role_key(nxt))
                frontier.append(nxt)
    return ConsistencyReport("consistent")


# ---------------------------------------------------------------------------
# min/max shifts for core RBoxes


def minmax_shift(
    o_or_ctx, r: Role, s: Role
) -> tuple[Optional[int], Optional[int]]:
    """(min, max) such that always-future S holds in the rod of {R(0)}
    from min on, and always-past S up to max; None when absent or
    unbounded."""
    ctx = o_or_ctx if isinstance(o_or_ctx, OntologyContext) else make_context(o_or_ctx)
    if ctx.fragment.role_class not in ("core", "horn+", "horn"):
        raise FragmentMismatch("min/max shifts are defined for Horn role boxes")
    rod = ctx.single_rod(r)
    if rod.bot:
        raise ModelError(f"role {r} is inconsistent with the role box")
    hits = rod.pos_set(role_surrogate(s))

    max_rs: Optional[int] = None
    if len(hits.lres) == hits.lper:  # co-complete towards minus infinity
        gap = hits.next_not_in(hits.lo - 2 * hits.lper - 2)
        max_rs = gap  # None when S holds everywhere: unbounded
    min_rs: Optional[int] = None
    if len(hits.rres) == hits.rper:
        gap = hits.prev_not_in(hits.hi + 2 * hits.rper + 2)
        min_rs = gap
    return min_rs, max_rs


# ---------------------------------------------------------------------------
# FOLTL1 / LTL emitters

_OPS = {GF: "G", GP: "H", XF: "X", XP: "Y"}  # F / P are the eventualities


def _pred_basic(base) -> str:
    if isinstance(base, Concept):
        return base.name
    assert isinstance(base, Exists)
    return "ex$" + role_key(base.role)


def _fo_concept(term: Term, arg: str) -> str:
    body = f"{_pred_basic(term.base)}({arg})"
    for op in reversed(term.prefixes):
        body = f"{_OPS[op]} {body}"
    return body


def _fo_role(term: Term, u: str, v: str) -> str:
    role = term.base
    assert isinstance(role, Role)
    if role.inverse:
        body = f"{role.base}({v},{u})"
    else:
        body = f"{role.base}({u},{v})"
    for op in reversed(term.prefixes):
        body = f"{_OPS[op]} {body}"
    return body


def _boxed(line: str) -> str:
    return f"G H ({line})"


def _implication(premises: list[str], conclusions: list[str]) -> str:
    left = " & ".join(premises) if premises else "true"
    right = " | ".join(conclusions) if conclusions else "false"
    return f"({left} -> {right})"


def _xf_pow(k: int, body: str) -> str:
    op = "X" if k >= 0 else "Y"
    return ("" if k == 0 else (op + " ") * abs(k)) + body


def xi_constants(o: Ontology, a: ABox) -> list[str]:
    consts = list(a.individuals())
    for role in o.roles():
        consts.append(f"w${role_key(role)}")
    return consts


def emit_psi_k(o: Ontology, a: ABox) -> str:
    """One-variable FOLTL encoding whose satisfiability characterises
    Horn-role-box consistency; variables instantiated over the data
    individuals plus one witness constant per role."""
    if any(len(inc.conclusions) > 1 for inc in o.rbox):
        raise FragmentMismatch("the FOLTL encoding needs Horn role inclusions")
    abox = prepare_abox(a)
    consts = xi_constants(o, abox)
    lines: list[str] = []
    for w in consts:
        for inc in o.tbox:
            lines.append(
                _boxed(
                    _implication(
                        [_fo_concept(t, w) for t in inc.premises],
                        [_fo_concept(t, w) for t in inc.conclusions],
                    )
                )
            )
    for w in consts:
        for inc in o.rbox:
            lines.append(
                _boxed(
                    "A x . "
                    + _implication(
                        [_fo_role(t, w, "x") for t in inc.premises],
                        [_fo_role(t, w, "x") for t in inc.conclusions],
                    )
                )
            )
    for name, ind, n in sorted(abox.concept_atoms):
        lines.append(_xf_pow(n, f"{name}({ind})"))
    for base, i, j, n in sorted(abox.role_atoms):
        lines.append(_xf_pow(n, f"{base}({i},{j})"))
    for w in consts:
        for role in o.roles():
            inv = role_key(role.inv())
            lines.append(_boxed(f"ex${role_key(role)}({w}) -> F P ex${inv}(w${inv})"))
    for w in consts:
        for role in o.roles():
            key = role_key(role)
            if role.inverse:
                lines.append(_boxed(f"ex${key}({w}) <-> E x . {role.base}(x,{w})"))
            else:
                lines.append(_boxed(f"ex${key}({w}) <-> E x . {role.base}({w},x)"))
    return "\n".join(lines) + "\n"


def _krom_shift_entailments(o: Ontology, bound: int = 8) -> set[tuple[str, int, str]]:
    """(S1, delta, S2) with the role box entailing S1 <= next^delta S2,
    |delta| <= 2, via weighted reachability over role literals."""
    edges: dict[tuple[str, bool], list[tuple[str, bool, int]]] = {}

    def add_edge(src: Role, sp: bool, dst: Role, dp: bool, w: int) -> None:
        edges.setdefault((role_key(src), sp), []).append((role_key(dst), dp, w))

    def off(term: Term) -> int:
        if not term.prefixes:
            return 0
        return {XF: 1, XP: -1}.get(term.prefixes[0], 0)

    for inc in o.rbox:
        if len(inc.premises) == 1 and len(inc.conclusions) == 1:
            p, c = inc.premises[0], inc.conclusions[0]
            if any(op in (GF, GP) for op in p.prefixes + c.prefixes):
                continue
            add_edge(p.base, True, c.base, True, off(c) - off(p))
            add_edge(c.base, False, p.base, False, off(p) - off(c))
        elif len(inc.premises) == 2 and not inc.conclusions:
            p1, p2 = inc.premises
            add_edge(p1.base, True, p2.base, False, off(p2) - off(p1))
            add_edge(p2.base, True, p1.base, False, off(p1) - off(p2))
        elif not inc.premises and len(inc.conclusions) == 2:
            c1, c2 = inc.conclusions
            add_edge(c1.base, False, c2.base, True, off(c2) - off(c1))
            add_edge(c2.base, False, c1.base, True, off(c1) - off(c2))

    out: set[tuple[str, int, str]] = set()
    for role in o.roles():
        start = (role_key(role), True)
        seen = {(start, 0)}
        queue = [(start, 0)]
        while queue:
            (node, w) = queue.pop()
            key, pol = node
            if pol and abs(w) <= 2:
                out.add((role_key(role), w, key))
            for dst, dp, dw in edges.get(node, ()):  # bounded weight search
                nxt = ((dst, dp), w + dw)
                if abs(w + dw) <= bound and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return out


def emit_phi_k(o: Ontology, a: ABox) -> str:
    """One-variable FOLTL encoding for next-only Krom role boxes."""
    for inc in o.rbox:
        plain_krom = (not inc.premises and len(inc.conclusions) == 2) or (
            len(inc.premises) == 2 and not inc.conclusions
        )
        if plain_krom:
            if any(t.prefixes for t in inc.premises + inc.conclusions):
                raise FragmentMismatch(
                    "disjunctive/disjointness role inclusions must be atemporal"
                )
        elif not (len(inc.premises) <= 1 and len(inc.conclusions) <= 1):
            raise FragmentMismatch("role inclusions must be Krom")
    if any(
        op in (GF, GP)
        for inc in o.inclusions
        for t in inc.premises + inc.conclusions
        for op in t.prefixes
    ):
        raise FragmentMismatch("this encoding serves the next-only fragment")
    abox = prepare_abox(a)
    # the role box together with the role atoms may already be
    # inconsistent; then the encoding is plain falsum
    rbox_only = Ontology(tuple(), o.rbox, normalized=True)
    try:
        ctx = make_context(rbox_only)
        report = check_consistency(ctx, abox) if abox.role_atoms else None
        if report is not None and report.verdict == "inconsistent":
            return "false\n"
    except FragmentMismatch:
        pass  # Krom disjunctions: fall through, no cheap refutation

    lines: list[str] = []
    for inc in o.tbox:
        lines.append(
            _boxed(
                "A x . "
                + _implication(
                    [_fo_concept(t, "x") for t in inc.premises],
                    [_fo_concept(t, "x") for t in inc.conclusions],
                )
            )
        )
    for inc in o.rbox:
        if not inc.premises and len(inc.conclusions) == 2:
            s1, s2 = (t.base for t in inc.conclusions)
            k1, k2 = role_key(s1), role_key(s2)
            k2i = role_key(s2.inv())
            lines.append(_boxed(f"A x . (ex${k1}(x) | ex${k2}(x))"))
            lines.append(_boxed(f"(A x . ex${k1}(x)) | (A x . ex${k2i}(x))"))
    for name, ind, n in sorted(abox.concept_atoms):
        lines.append(_xf_pow(n, f"{name}({ind})"))
    for base, i, j, n in sorted(abox.role_atoms):
        lines.append(_xf_pow(n, f"ex${base}({i})"))
        lines.append(_xf_pow(n, f"ex${base}-({j})"))
    tbox_roles = sorted(
        {
            t.base.role.base
            for inc in o.tbox
            for t in inc.premises + inc.conclusions
            if isinstance(t.base, Exists)
        }
    )
    for base in tbox_roles:
        lines.append(_boxed(f"(E x . ex${base}(x)) <-> (E x . ex${base}-(x))"))
    for s1, delta, s2 in sorted(_krom_shift_entailments(o)):
        for o1 in (-1, 0, 1):
            o2 = delta + o1
            if abs(o2) > 1:
                continue
            left = ("X " if o1 == 1 else "Y " if o1 == -1 else "") + f"ex${s1}(x)"
            right = ("X " if o2 == 1 else "Y " if o2 == -1 else "") + f"ex${s2}(x)"
            lines.append(_boxed(f"A x . ({left} -> {right})"))
    return "\n".join(lines) + "\n"


def emit_psi_prime_k(o: Ontology, a: ABox) -> str:
    """Propositional LTL encoding for core role boxes; long next-chains
    entailed by the role box run through a binary counter gadget."""
    for inc in o.rbox:
        if len(inc.premises) + len(inc.conclusions) > 2 or len(inc.conclusions) > 1:
            raise FragmentMismatch("the propositional encoding needs core role inclusions")
    abox = prepare_abox(a)
    consts = xi_constants(o, abox)
    ctx = make_context(o)
    lines: list[str] = []

    def cvar(term: Term, w: str) -> str:
        body = f"{_pred_basic(term.base)}@{w}"
        for op in reversed(term.prefixes):
            body = f"{_OPS[op]} {body}"
        return body

    def rvar(term: Term, u: str, v: str) -> str:
        role = term.base
        key = f"{role.base}@{v}@{u}" if role.inverse else f"{role.base}@{u}@{v}"
        body = key
        for op in reversed(term.prefixes):
            body = f"{_OPS[op]} {body}"
        return body

    for w in consts:
        for inc in o.tbox:
            lines.append(
                _boxed(
                    _implication(
                        [cvar(t, w) for t in inc.premises],
                        [cvar(t, w) for t in inc.conclusions],
                    )
                )
            )
    for w in consts:
        for x in consts:
            for inc in o.rbox:
                lines.append(
                    _boxed(
                        _implication(
                            [rvar(t, w, x) for t in inc.premises],
                            [rvar(t, w, x) for t in inc.conclusions],
                        )
                    )
                )
    for name, ind, n in sorted(abox.concept_atoms):
        lines.append(_xf_pow(n, f"{name}@{ind}"))
    for base, i, j, n in sorted(abox.role_atoms):
        lines.append(_xf_pow(n, f"{base}@{i}@{j}"))
    for w in consts:
        for role in o.roles():
            inv = role_key(role.inv())
            lines.append(_boxed(f"ex${role_key(role)}@{w} -> F P ex${inv}@w${inv}"))
    for w in consts:
        for inc in o.rbox:
            if len(inc.premises) == 1 and len(inc.conclusions) == 1:
                p, c = inc.premises[0], inc.conclusions[0]
                if all(op in (XF, XP) for op in p.prefixes + c.prefixes):
                    lines.append(
                        _boxed(
                            f"{cvar(_existsify(p), w)} -> {cvar(_existsify(c), w)}"
                        )
                    )
    # counters for the long per-pair consequences
    for r in o.roles():
        for s in o.roles():
            try:
                min_rs, max_rs = minmax_shift(ctx, r, s)
            except ModelError:
                continue
            kr, ks = role_key(r), role_key(s)
            if max_rs is not None and abs(max_rs) > 1:
                for w in consts:
                    lines.extend(_counter(f"mx${kr}${ks}${w}", w, kr, ks, max_rs, future=True))
            if min_rs is not None and abs(min_rs) > 1:
                for w in consts:
                    lines.extend(_counter(f"mn${kr}${ks}${w}", w, kr, ks, min_rs, future=False))
    return "\n".join(lines) + "\n"


def _existsify(term: Term) -> Term:
    assert isinstance(term.base, Role)
    return Term(term.prefixes, Exists(term.base))


def _counter(tag: str, w: str, kr: str, ks: str, target: int, future: bool) -> list[str]:
    """Binary counter asserting next^target of a box consequence after
    the last occurrence of ex$kr at w."""
    n = max(1, abs(target).bit_length())
    step = "X" if target >= 0 else "Y"
    run = f"run${tag}"
    bits = [f"b{i}${tag}" for i in range(n)]
    lines: list[str] = []
    if future:
        lines.append(_boxed(f"G F ex${kr}@{w} -> G ex${ks}@{w}"))
        trigger = f"ex${kr}@{w} & ~F ex${kr}@{w}"
        assert_body = f"H ex${ks}@{w}"
    else:
        lines.append(_boxed(f"H P ex${kr}@{w} -> H ex${ks}@{w}"))
        trigger = f"ex${kr}@{w} & ~P ex${kr}@{w}"
        assert_body = f"G ex${ks}@{w}"
    zeros = " & ".join(f"~{b}" for b in bits)
    lines.append(_boxed(f"{trigger} -> {step} ({run} & {zeros})"))
    for k in range(n):
        low_ones = " & ".join(bits[:k]) if k else "true"
        flips = " & ".join([bits[k]] + [f"~{b}" for b in bits[:k]])
        lines.append(_boxed(f"{run} & ~{bits[k]} & {low_ones} -> {step} ({flips})"))
    for j in range(1, n):
        for k in range(j):
            lines.append(_boxed(f"{run} & {bits[j]} & ~{bits[k]} -> {step} {bits[j]}"))
            lines.append(_boxed(f"{run} & ~{bits[j]} & ~{bits[k]} -> {step} ~{bits[j]}"))
    stop = abs(target) - 1
    pattern = " & ".join(bits[i] if (stop >> i) & 1 else f"~{bits[i]}" for i in range(n))
    lines.append(_boxed(f"{run} & {pattern} -> {step} ({assert_body})"))
    lines.append(_boxed(f"{run} & {pattern} -> {step} ~{run}"))
    lines.append(_boxed(f"{run} & ~({pattern}) -> {step} {run}"))
    return lines


def emit_encoding(o: Ontology, a: ABox, which: str) -> str:
    if which == "psiK":
        return emit_psi_k(o, a)
    if which == "phiK":
        return emit_phi_k(o, a)
    if which == "psiPrimeK":
        return emit_psi_prime_k(o, a)
    raise ModelError(f"unknown encoding {which!r}")
