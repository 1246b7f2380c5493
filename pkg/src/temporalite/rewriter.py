"""First-order rewritings of ontology-mediated positive queries.

The construction follows the canonical-model analysis: a query answer at
a data individual is witnessed either inside the data (a named
neighbour), or on an anonymous witness created at some instant, in or
beyond the active temporal domain.  Phantom formulas decide answers at
offsets k beyond the domain edge; the auxiliary shift formulas translate
entailed next-power inclusions into order/congruence atoms over the
domain boundary markers.

Base predicates -- certain answers to atomic queries over the projected
LTL ontologies -- are emitted as oracle atoms and resolved at evaluation
time against the canonical traces; this keeps the construction exact
without reproducing closed-form LTL rewritings.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from . import fof
from .fof import (
    FALSE,
    MAX,
    MIN,
    Formula,
    OracleAtom,
    TVar,
    TempTerm,
    diff_eq,
    diff_in,
    exists,
    fand,
    for_,
    forall,
    substitute,
    tshift,
)
from .ltl import PeriodicSet
from .model import (
    Concept,
    EAnd,
    EAtom,
    EImplies,
    ELess,
    ENot,
    EOr,
    EQuant,
    EpistemicFormula,
    Exists as ExistsC,
    GF,
    GP,
    Inclusion,
    ModelError,
    Ontology,
    PQAnd,
    PQExists,
    PQName,
    PQOp,
    PQOr,
    PQRole,
    PQSince,
    PQTop,
    PQUntil,
    PositiveQuery,
    Role,
    Term,
    XF,
    XP,
    normalize_ontology,
    ontology,
    query_is_role,
    query_names,
    query_size,
)
from .projection import (
    OntologyContext,
    bot_eliminate,
    concept_dag,
    make_context,
    rod_params,
)

X, Y, T = "x", "y", TVar("t")


class RewriteError(ModelError):
    pass


@dataclass(frozen=True)
class _HitSides:
    """Decomposition of an entailed-shift set against (s, p): finite
    offsets within the stem and progression starts within one period,
    for both time directions."""

    s: int
    p: int
    pos_s: tuple[int, ...]
    pos_p: tuple[int, ...]
    neg_s: tuple[int, ...]
    neg_p: tuple[int, ...]

    @staticmethod
    def of(hits: PeriodicSet, s: int, p: int) -> "_HitSides":
        pos_s = tuple(hits.iter_range(0, s))
        pos_p = tuple(x - s for x in hits.iter_range(s + 1, s + p))
        neg_s = tuple(-x for x in hits.iter_range(-s, -1))
        neg_p = tuple(-x - s for x in hits.iter_range(-s - p, -s - 1))
        return _HitSides(s, p, pos_s, pos_p, tuple(sorted(neg_s)), tuple(sorted(neg_p)))

    def flip(self) -> "_HitSides":
        return _HitSides(self.s, self.p, self.neg_s, self.neg_p, self.pos_s, self.pos_p)


def _hits_plain(sides: _HitSides, t: TempTerm, t1: TempTerm) -> Formula:
    """Truth: (value of t1) - (value of t) lies in the decomposed set."""
    s, p = sides.s, sides.p
    parts: list[Formula] = []
    for si in sides.pos_s:
        parts.append(diff_eq(t1, t, si))
    for pi in sides.pos_p:
        parts.append(diff_in(t1, t, s + pi, p))
    for si in sides.neg_s:
        parts.append(diff_eq(t, t1, si))
    for pi in sides.neg_p:
        parts.append(diff_in(t, t1, s + pi, p))
    return for_(parts)


def _hits_anchored(sides: _HitSides, a: TempTerm, b: TempTerm, kbar: int) -> Formula:
    """Truth: (value of a - b) + kbar lies in the positive side of the
    set, where a - b is known non-negative.  The progression case splits
    on whether a - b runs past s + p_i (congruence beyond, finite list
    within)."""
    s, p = sides.s, sides.p
    assert kbar >= 1
    parts: list[Formula] = []
    for si in sides.pos_s:
        if si - kbar >= 0:
            parts.append(diff_eq(a, b, si - kbar))
    for pi in sides.pos_p:
        start = s + pi
        parts.append(diff_in(a, b, start + (p - kbar % p), p))
        for q in range(0, start + 1):
            if (kbar - (start - q)) >= 0 and (kbar - (start - q)) % p == 0:
                parts.append(diff_eq(a, b, q))
    return for_(parts)


def _hits_const(sides: _HitSides, d: int) -> Formula:
    """Membership of a constant distance."""
    s, p = sides.s, sides.p
    if d >= 0:
        if d <= s:
            return fof.TRUE if d in sides.pos_s else FALSE
        return fof.TRUE if any((d - s - pi) % p == 0 for pi in sides.pos_p) else FALSE
    d = -d
    if d <= s:
        return fof.TRUE if d in sides.neg_s else FALSE
    return fof.TRUE if any((d - s - pi) % p == 0 for pi in sides.neg_p) else FALSE


@dataclass
class RewritingBundle:
    """Main rewriting plus phantoms; data-independent for fixed inputs."""

    main: Formula
    ontology_fingerprint: str
    bound: int
    _phantom_fn: object = field(repr=False, default=None)
    _phantoms: dict = field(default_factory=dict, repr=False)

    def phantom(self, k: int) -> Formula:
        if k == 0:
            raise RewriteError("phantom offsets are nonzero")
        if k not in self._phantoms:
            self._phantoms[k] = self._phantom_fn(k)
        return self._phantoms[k]

    def phantoms(self, upto: Optional[int] = None) -> dict[int, Formula]:
        upto = upto if upto is not None else self.bound
        return {
            k: self.phantom(k)
            for k in itertools.chain(range(-upto, 0), range(1, upto + 1))
        }


class Rewriter:
    """Rewriting factory for one ontology (extended with any query roles
    outside its alphabet, as trivial role inclusions)."""

    def __init__(self, o: Ontology, extra_roles: frozenset[str] = frozenset()):
        if not o.normalized:
            o = normalize_ontology(o)
        self.raw = o
        self.has_bot = any(not inc.conclusions for inc in o.inclusions)
        if self.has_bot:
            cooked, a_bot, _ = bot_eliminate(o)
            self.a_bot: Optional[str] = a_bot
            base = cooked
        else:
            self.a_bot = None
            base = o
        if extra_roles - base.role_bases():
            extra = [
                Inclusion((Term((), Role(b, i)),), (Term((), Role(b, i)),))
                for b in sorted(extra_roles - base.role_bases())
                for i in (False, True)
            ]
            base = Ontology(base.tbox, base.rbox + tuple(extra), normalized=True)
        self.ctx = make_context(base)
        if not self.ctx.horn:
            raise RewriteError("rewriting requires a Horn ontology")
        self._fresh = itertools.count(1)
        self._memo: dict = {}
        self._sides: dict = {}

    # -- plumbing

    def fresh_t(self) -> TVar:
        return TVar(f"u{next(self._fresh)}")

    def fresh_i(self) -> str:
        return f"z{next(self._fresh)}"

    def n_bound(self, q: PositiveQuery) -> int:
        s, p = self.ctx.params()
        return s + query_size(q) * p

    def fingerprint(self) -> str:
        return hashlib.sha256(self.raw.canonical_text().encode()).hexdigest()[:16]

    # -- auxiliary shift formulas

    def role_sides(self, src: Role, dst: Role) -> _HitSides:
        key = ("role", str(src), str(dst))
        if key not in self._sides:
            rod = self.ctx.single_rod(src)
            if rod.bot:
                raise RewriteError(f"role {src} is inconsistent with the ontology")
            s, p = rod_params(rod)
            self._sides[key] = _HitSides.of(self.ctx.role_shift_set(src, dst), s, p)
        return self._sides[key]

    def concept_sides(self, src, dst) -> _HitSides:
        src_name, dst_name = concept_dag(src), concept_dag(dst)
        key = ("concept", src_name, dst_name)
        if key not in self._sides:
            from .ltl import canonical_trace

            trace = canonical_trace(self.ctx.tr0, [(("", src_name), 0)])
            if trace.bot:
                raise RewriteError(f"{src_name} is inconsistent with the ontology")
            s, p = rod_params(trace)
            self._sides[key] = _HitSides.of(self.ctx.concept_shift_set(src_name, dst_name), s, p)
        return self._sides[key]

    def theta(self, src: Role, dst: Role, t: TempTerm, t1: TempTerm) -> Formula:
        return _hits_plain(self.role_sides(src, dst), t, t1)

    def theta_src_phantom(self, src: Role, dst: Role, k: int, t1: TempTerm) -> Formula:
        # distance t1 - k_A; anchored below for k > 0, above for k < 0
        sides = self.role_sides(src, dst)
        if k > 0:
            return _hits_anchored(sides.flip(), MAX, t1, k)
        return _hits_anchored(sides, t1, MIN, -k)

    def theta_dst_phantom(self, src: Role, dst: Role, k1: int, t: TempTerm) -> Formula:
        # distance k1_A - t
        sides = self.role_sides(src, dst)
        if k1 > 0:
            return _hits_anchored(sides, MAX, t, k1)
        return _hits_anchored(sides.flip(), t, MIN, -k1)

    def theta_double(self, src: Role, dst: Role, k: int, k1: int) -> Formula:
        sides = self.role_sides(src, dst)
        return self._double(sides, k, k1)

    def _double(self, sides: _HitSides, k: int, k1: int) -> Formula:
        if (k > 0) == (k1 > 0):
            return _hits_const(sides, k1 - k)
        if k < 0 and k1 > 0:
            return _hits_anchored(sides, MAX, MIN, k1 - k)
        return _hits_anchored(sides.flip(), MAX, MIN, k - k1)

    def xi(self, src, dst, t: TempTerm, t1: TempTerm) -> Formula:
        return _hits_plain(self.concept_sides(src, dst), t, t1)

    def xi_src_phantom(self, src, dst, k: int, t1: TempTerm) -> Formula:
        sides = self.concept_sides(src, dst)
        if k > 0:
            return _hits_anchored(sides.flip(), MAX, t1, k)
        return _hits_anchored(sides, t1, MIN, -k)

    def xi_dst_phantom(self, src, dst, k1: int, t: TempTerm) -> Formula:
        sides = self.concept_sides(src, dst)
        if k1 > 0:
            return _hits_anchored(sides, MAX, t, k1)
        return _hits_anchored(sides.flip(), t, MIN, -k1)

    def xi_double(self, src, dst, k: int, k1: int) -> Formula:
        return self._double(self.concept_sides(src, dst), k, k1)

    # -- base (atomic) rewritings

    def _known_concept(self, name: str) -> bool:
        return name in self.ctx.tr0.names or name in self.ctx.o.concept_names()

    def omaq_concept(self, base, t: TempTerm, k: Optional[int]) -> Formula:
        """Atomic concept query: oracle atom over the concept projection,
        or a plain data atom for names foreign to the ontology."""
        if isinstance(base, Concept) and not self._known_concept(base.name):
            if k is None:
                return fof.CAtom(base.name, X, t)
            return FALSE  # no data beyond the active domain
        name = concept_dag(base)
        if k is None:
            return OracleAtom("LTL_CONCEPT", name, (X,), t)
        return OracleAtom("LTL_CONCEPT_PHANTOM", (name, k), (X,))

    def omaq_role(self, query: PositiveQuery, k: Optional[int]) -> Formula:
        if k is None:
            return OracleAtom("ROLE_Q", query, (X, Y), T)
        return OracleAtom("ROLE_Q_PHANTOM", (query, k), (X, Y))

    # -- positive temporal concepts (theorem induction)

    def rewrite_query(self, q: PositiveQuery, k: Optional[int] = None) -> Formula:
        """Free variables: x (and t when k is None) for concept queries;
        x, y (and t) for role queries."""
        if query_is_role(q):
            return self.omaq_role(q, k)
        return self._rq(q, k)

    def _rq(self, q: PositiveQuery, k: Optional[int]) -> Formula:
        key = (q, k)
        if key in self._memo:
            return self._memo[key]
        self._memo[key] = out = self._rq_build(q, k)
        return out

    def _rq_build(self, q: PositiveQuery, k: Optional[int]) -> Formula:
        if isinstance(q, PQTop):
            return fof.TRUE
        if isinstance(q, PQName):
            return self.omaq_concept(Concept(q.name), T, k)
        if isinstance(q, PQExists) and isinstance(q.sub, PQTop):
            return self.omaq_concept(ExistsC(q.role), T, k)
        if isinstance(q, PQAnd):
            return fand([self._rq(q.left, k), self._rq(q.right, k)])
        if isinstance(q, PQOr):
            return for_([self._rq(q.left, k), self._rq(q.right, k)])
        if isinstance(q, PQOp):
            return self._rq_temporal(q, k)
        if isinstance(q, (PQUntil, PQSince)):
            return self._rq_untilsince(q, k)
        if isinstance(q, PQExists):
            return self._rq_exists(q, k)
        raise RewriteError(f"unsupported query node {q!r}")

    # temporal operators at the top level of a concept query

    def _at_min(self, f: Formula) -> Formula:
        return substitute(f, tmap={"t": MIN})

    def _at_max(self, f: Formula) -> Formula:
        return substitute(f, tmap={"t": MAX})

    def _rq_temporal(self, q: PQOp, k: Optional[int]) -> Formula:
        sub = q.sub
        N = self.n_bound(q)
        if k is None:
            s = self.fresh_t()
            if q.op == GF:
                return fand(
                    [
                        forall(
                            s.name,
                            "time",
                            for_([fof.Not(fof.Less(T, s)), substitute(self._rq(sub, None), tmap={"t": s})]),
                        ),
                        fand([self._rq(sub, i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == GP:
                return fand(
                    [
                        forall(
                            s.name,
                            "time",
                            for_([fof.Not(fof.Less(s, T)), substitute(self._rq(sub, None), tmap={"t": s})]),
                        ),
                        fand([self._rq(sub, -i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == "DF":
                return for_(
                    [
                        exists(
                            s.name,
                            "time",
                            fand([fof.Less(T, s), substitute(self._rq(sub, None), tmap={"t": s})]),
                        ),
                        for_([self._rq(sub, i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == "DP":
                return for_(
                    [
                        exists(
                            s.name,
                            "time",
                            fand([fof.Less(s, T), substitute(self._rq(sub, None), tmap={"t": s})]),
                        ),
                        for_([self._rq(sub, -i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == XF:
                succ = fand(
                    [fof.Less(T, s), fof.Not(exists("m0", "time", fand([fof.Less(T, TVar("m0")), fof.Less(TVar("m0"), s)])))]
                )
                return for_(
                    [
                        exists(s.name, "time", fand([succ, substitute(self._rq(sub, None), tmap={"t": s})])),
                        fand([fof.Not(exists(s.name, "time", fof.Less(T, s))), self._rq(sub, 1)]),
                    ]
                )
            if q.op == XP:
                pred = fand(
                    [fof.Less(s, T), fof.Not(exists("m0", "time", fand([fof.Less(s, TVar("m0")), fof.Less(TVar("m0"), T)])))]
                )
                return for_(
                    [
                        exists(s.name, "time", fand([pred, substitute(self._rq(sub, None), tmap={"t": s})])),
                        fand([fof.Not(exists(s.name, "time", fof.Less(s, T))), self._rq(sub, -1)]),
                    ]
                )
            raise RewriteError(f"unknown operator {q.op}")
        # phantom variants
        if q.op == GF:
            if k > 0:
                return fand([self._rq(sub, i) for i in range(k + 1, k + N + 1)])
            return fand(
                [self._rq(sub, i) for i in range(k + 1, 0)] + [self._at_min(self._rq(q, None))]
            )
        if q.op == GP:
            if k < 0:
                return fand([self._rq(sub, i) for i in range(k - N, k)])
            return fand(
                [self._rq(sub, i) for i in range(1, k)] + [self._at_max(self._rq(q, None))]
            )
        if q.op == "DF":
            if k > 0:
                return for_([self._rq(sub, i) for i in range(k + 1, k + N + 1)])
            return for_(
                [self._rq(sub, i) for i in range(k + 1, 0)] + [self._at_min(self._rq(q, None))]
            )
        if q.op == "DP":
            if k < 0:
                return for_([self._rq(sub, i) for i in range(k - N, k)])
            return for_(
                [self._rq(sub, i) for i in range(1, k)] + [self._at_max(self._rq(q, None))]
            )
        if q.op == XF:
            if k == -1:
                return self._at_min(self._rq(sub, None))
            return self._rq(sub, k + 1)
        if q.op == XP:
            if k == 1:
                return self._at_max(self._rq(sub, None))
            return self._rq(sub, k - 1)
        raise RewriteError(f"unknown operator {q.op}")

    def _rq_untilsince(self, q: Union[PQUntil, PQSince], k: Optional[int]) -> Formula:
        # our own construction, validated against the model oracles:
        # a witness instant for the right side, all instants in between
        # for the left, phantoms past the domain edge
        until = isinstance(q, PQUntil)
        N = self.n_bound(q)
        lft, rgt = q.left, q.right
        s, m = self.fresh_t(), self.fresh_t()

        def between(a: TempTerm, b: TempTerm) -> Formula:
            inner = for_(
                [
                    fof.Not(fand([fof.Less(a, m), fof.Less(m, b)])),
                    substitute(self._rq(lft, None), tmap={"t": m}),
                ]
            )
            return forall(m.name, "time", inner)

        def left_phantoms(rng) -> Formula:
            return fand([self._rq(lft, i) for i in rng])

        if k is None:
            if until:
                in_domain = exists(
                    s.name,
                    "time",
                    fand([fof.Less(T, s), substitute(self._rq(rgt, None), tmap={"t": s}), between(T, s)]),
                )
                beyond = for_(
                    [
                        fand(
                            [
                                self._rq(rgt, j),
                                forall(
                                    m.name,
                                    "time",
                                    for_([fof.Not(fof.Less(T, m)), substitute(self._rq(lft, None), tmap={"t": m})]),
                                ),
                                left_phantoms(range(1, j)),
                            ]
                        )
                        for j in range(1, N + 1)
                    ]
                )
                return for_([in_domain, beyond])
            in_domain = exists(
                s.name,
                "time",
                fand([fof.Less(s, T), substitute(self._rq(rgt, None), tmap={"t": s}), between(s, T)]),
            )
            beyond = for_(
                [
                    fand(
                        [
                            self._rq(rgt, -j),
                            forall(
                                m.name,
                                "time",
                                for_([fof.Not(fof.Less(m, T)), substitute(self._rq(lft, None), tmap={"t": m})]),
                            ),
                            left_phantoms(range(-j + 1, 0)),
                        ]
                    )
                    for j in range(1, N + 1)
                ]
            )
            return for_([in_domain, beyond])
        # phantom variants
        if until:
            if k > 0:
                return for_(
                    [
                        fand([self._rq(rgt, j), left_phantoms(range(k + 1, j))])
                        for j in range(k + 1, k + N + 1)
                    ]
                )
            # anchored below the domain: the witness may sit among the
            # phantoms, inside the domain, or beyond the maximum
            opts: list[Formula] = []
            for j in range(k + 1, 0):
                opts.append(fand([self._rq(rgt, j), left_phantoms(range(k + 1, j))]))
            all_neg = left_phantoms(range(k + 1, 0))
            in_dom = exists(
                s.name,
                "time",
                fand(
                    [
                        substitute(self._rq(rgt, None), tmap={"t": s}),
                        forall(
                            m.name,
                            "time",
                            for_([fof.Not(fof.Less(m, s)), substitute(self._rq(lft, None), tmap={"t": m})]),
                        ),
                    ]
                ),
            )
            opts.append(fand([all_neg, in_dom]))
            all_dom = forall(m.name, "time", substitute(self._rq(lft, None), tmap={"t": m}))
            for j in range(1, N + 1):
                opts.append(
                    fand([all_neg, all_dom, self._rq(rgt, j), left_phantoms(range(1, j))])
                )
            return for_(opts)
        if k < 0:
            return for_(
                [
                    fand([self._rq(rgt, j), left_phantoms(range(j + 1, k))])
                    for j in range(k - N, k)
                ]
            )
        opts = []
        for j in range(1, k):
            opts.append(fand([self._rq(rgt, j), left_phantoms(range(j + 1, k))]))
        all_pos = left_phantoms(range(1, k))
        in_dom = exists(
            s.name,
            "time",
            fand(
                [
                    substitute(self._rq(rgt, None), tmap={"t": s}),
                    forall(
                        m.name,
                        "time",
                        for_([fof.Not(fof.Less(s, m)), substitute(self._rq(lft, None), tmap={"t": m})]),
                    ),
                ]
            ),
        )
        opts.append(fand([all_pos, in_dom]))
        all_dom = forall(m.name, "time", substitute(self._rq(lft, None), tmap={"t": m}))
        for j in range(1, N + 1):
            opts.append(fand([all_pos, all_dom, self._rq(rgt, -j), left_phantoms(range(-j + 1, 0))]))
        return for_(opts)

    # the existential case: named neighbour, witness at a data instant,
    # witness at a phantom instant

    def _roles(self) -> list[Role]:
        return self.ctx.o.roles()

    def _rq_exists(self, q: PQExists, k: Optional[int]) -> Formula:
        S, sub = q.role, q.sub
        if S.base not in self.ctx.o.role_bases():
            raise RewriteError(f"role {S} does not occur in the ontology")
        N = self.n_bound(q)
        parts: list[Formula] = []
        if k is None:
            sub_main = self._rq(sub, None)
            yv = self.fresh_i()
            named = exists(
                yv,
                "ind",
                fand(
                    [
                        substitute(self.omaq_role(PQRole(S), None), imap={Y: yv}),
                        substitute(sub_main, imap={X: yv}),
                    ]
                ),
            )
            parts.append(named)
            for s1 in self._roles():
                t1 = self.fresh_t()
                theta = self.theta(s1, S, t1, T)
                if not isinstance(theta, fof.FFalse):
                    parts.append(
                        exists(
                            t1.name,
                            "time",
                            fand(
                                [
                                    substitute(self.omaq_concept(ExistsC(s1), T, None), tmap={"t": t1}),
                                    theta,
                                    self.psi((s1,), (0,), sub, None, (t1,)),
                                ]
                            ),
                        )
                    )
                for mu in _phantom_range(N, None):
                    theta_k = self.theta_src_phantom(s1, S, mu, T)
                    if isinstance(theta_k, fof.FFalse):
                        continue
                    parts.append(
                        fand(
                            [
                                self.omaq_concept(ExistsC(s1), T, mu),
                                theta_k,
                                self.psi((s1,), (mu,), sub, None, ()),
                            ]
                        )
                    )
            return for_(parts)
        sub_ph = self._rq(sub, k)
        yv = self.fresh_i()
        named = exists(
            yv,
            "ind",
            fand(
                [
                    substitute(self.omaq_role(PQRole(S), k), imap={Y: yv}),
                    substitute(sub_ph, imap={X: yv}),
                ]
            ),
        )
        parts.append(named)
        for s1 in self._roles():
            t1 = self.fresh_t()
            theta_b = self.theta_dst_phantom(s1, S, k, t1)
            if not isinstance(theta_b, fof.FFalse):
                parts.append(
                    exists(
                        t1.name,
                        "time",
                        fand(
                            [
                                substitute(self.omaq_concept(ExistsC(s1), T, None), tmap={"t": t1}),
                                theta_b,
                                self.psi((s1,), (0,), sub, k, (t1,)),
                            ]
                        ),
                    )
                )
            for mu in _phantom_range(N, k):
                theta_d = self.theta_double(s1, S, mu, k)
                if isinstance(theta_d, fof.FFalse):
                    continue
                parts.append(
                    fand(
                        [
                            self.omaq_concept(ExistsC(s1), T, mu),
                            theta_d,
                            self.psi((s1,), (mu,), sub, k, ()),
                        ]
                    )
                )
        return for_(parts)

    # -- the recursive witness-chain formulas

    def psi(
        self,
        roles: tuple[Role, ...],
        mus: tuple[int, ...],
        q: PositiveQuery,
        k: Optional[int],
        tvars: tuple[TVar, ...],
    ) -> Formula:
        """Truth at (x, live time arguments, t): the canonical model of
        {exists roles[0] at m1} contains the witness chain with creation
        instants m_i (the live ones given by tvars, the anchored ones by
        mus) and the chain end satisfies q at t (or at offset k)."""
        live = tuple(tv.name for tv in tvars)
        key = (roles, mus, q, k, live)
        if key in self._memo:
            return self._memo[key]
        out = self._psi_build(roles, mus, q, k, tvars)
        self._memo[key] = out
        return out

    def _last_anchor(
        self, roles: tuple[Role, ...], mus: tuple[int, ...], tvars: tuple[TVar, ...]
    ):
        if mus[-1] == 0:
            return ("var", tvars[-1])
        return ("k", mus[-1])

    def _psi_build(self, roles, mus, q, k, tvars) -> Formula:
        if not roles:
            if k is None:
                return self._rq(q, None)
            return self._rq(q, k)
        if isinstance(q, PQTop):
            return fof.TRUE
        if isinstance(q, PQName) or (isinstance(q, PQExists) and isinstance(q.sub, PQTop)):
            base = Concept(q.name) if isinstance(q, PQName) else ExistsC(q.role)
            if isinstance(base, Concept) and not self._known_concept(base.name):
                return FALSE  # witnesses carry ontology vocabulary only
            src = ExistsC(roles[-1].inv())
            anchor = self._last_anchor(roles, mus, tvars)
            if k is None:
                if anchor[0] == "var":
                    return self.xi(src, base, anchor[1], T)
                return self.xi_src_phantom(src, base, anchor[1], T)
            if anchor[0] == "var":
                return self.xi_dst_phantom(src, base, k, anchor[1])
            return self.xi_double(src, base, anchor[1], k)
        if isinstance(q, PQAnd):
            return fand(
                [self.psi(roles, mus, q.left, k, tvars), self.psi(roles, mus, q.right, k, tvars)]
            )
        if isinstance(q, PQOr):
            return for_(
                [self.psi(roles, mus, q.left, k, tvars), self.psi(roles, mus, q.right, k, tvars)]
            )
        if isinstance(q, PQOp):
            return self._psi_temporal(roles, mus, q, k, tvars)
        if isinstance(q, (PQUntil, PQSince)):
            return self._psi_untilsince(roles, mus, q, k, tvars)
        if isinstance(q, PQExists):
            return self._psi_exists(roles, mus, q, k, tvars)
        raise RewriteError(f"unsupported query node {q!r}")

    def _psi_temporal(self, roles, mus, q: PQOp, k, tvars) -> Formula:
        sub = q.sub
        N = (len(roles) + 1) * self.n_bound(q)
        s = self.fresh_t()

        def at(tt: TempTerm, kk: Optional[int]) -> Formula:
            inner = self.psi(roles, mus, sub, kk, tvars)
            return substitute(inner, tmap={"t": tt}) if kk is None else inner

        if k is None:
            if q.op == GF:
                return fand(
                    [
                        forall(s.name, "time", for_([fof.Not(fof.Less(T, s)), at(s, None)])),
                        fand([at(T, i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == GP:
                return fand(
                    [
                        forall(s.name, "time", for_([fof.Not(fof.Less(s, T)), at(s, None)])),
                        fand([at(T, -i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == "DF":
                return for_(
                    [
                        exists(s.name, "time", fand([fof.Less(T, s), at(s, None)])),
                        for_([at(T, i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == "DP":
                return for_(
                    [
                        exists(s.name, "time", fand([fof.Less(s, T), at(s, None)])),
                        for_([at(T, -i) for i in range(1, N + 1)]),
                    ]
                )
            if q.op == XF:
                succ = fand(
                    [fof.Less(T, s), fof.Not(exists("m0", "time", fand([fof.Less(T, TVar("m0")), fof.Less(TVar("m0"), s)])))]
                )
                return for_(
                    [
                        exists(s.name, "time", fand([succ, at(s, None)])),
                        fand([fof.Not(exists(s.name, "time", fof.Less(T, s))), at(T, 1)]),
                    ]
                )
            if q.op == XP:
                pred = fand(
                    [fof.Less(s, T), fof.Not(exists("m0", "time", fand([fof.Less(s, TVar("m0")), fof.Less(TVar("m0"), T)])))]
                )
                return for_(
                    [
                        exists(s.name, "time", fand([pred, at(s, None)])),
                        fand([fof.Not(exists(s.name, "time", fof.Less(s, T))), at(T, -1)]),
                    ]
                )
            raise RewriteError(f"unknown operator {q.op}")
        if q.op == GF:
            if k > 0:
                return fand([at(T, i) for i in range(k + 1, k + N + 1)])
            return fand(
                [at(T, i) for i in range(k + 1, 0)]
                + [substitute(self.psi(roles, mus, q, None, tvars), tmap={"t": MIN})]
            )
        if q.op == GP:
            if k < 0:
                return fand([at(T, i) for i in range(k - N, k)])
            return fand(
                [at(T, i) for i in range(1, k)]
                + [substitute(self.psi(roles, mus, q, None, tvars), tmap={"t": MAX})]
            )
        if q.op == "DF":
            if k > 0:
                return for_([at(T, i) for i in range(k + 1, k + N + 1)])
            return for_(
                [at(T, i) for i in range(k + 1, 0)]
                + [substitute(self.psi(roles, mus, q, None, tvars), tmap={"t": MIN})]
            )
        if q.op == "DP":
            if k < 0:
                return for_([at(T, i) for i in range(k - N, k)])
            return for_(
                [at(T, i) for i in range(1, k)]
                + [substitute(self.psi(roles, mus, q, None, tvars), tmap={"t": MAX})]
            )
        if q.op == XF:
            if k == -1:
                return substitute(self.psi(roles, mus, sub, None, tvars), tmap={"t": MIN})
            return at(T, k + 1)
        if q.op == XP:
            if k == 1:
                return substitute(self.psi(roles, mus, sub, None, tvars), tmap={"t": MAX})
            return at(T, k - 1)
        raise RewriteError(f"unknown operator {q.op}")

    def _psi_untilsince(self, roles, mus, q, k, tvars) -> Formula:
        until = isinstance(q, PQUntil)
        N = (len(roles) + 1) * self.n_bound(q)
        lft, rgt = q.left, q.right
        s, m = self.fresh_t(), self.fresh_t()

        def atl(tt, kk):
            inner = self.psi(roles, mus, lft, kk, tvars)
            return substitute(inner, tmap={"t": tt}) if kk is None else inner

        def atr(tt, kk):
            inner = self.psi(roles, mus, rgt, kk, tvars)
            return substitute(inner, tmap={"t": tt}) if kk is None else inner

        def between(a, b):
            return forall(
                m.name,
                "time",
                for_([fof.Not(fand([fof.Less(a, m), fof.Less(m, b)])), atl(m, None)]),
            )

        if k is None:
            if until:
                in_dom = exists(s.name, "time", fand([fof.Less(T, s), atr(s, None), between(T, s)]))
                beyond = for_(
                    [
                        fand(
                            [
                                atr(T, j),
                                forall(m.name, "time", for_([fof.Not(fof.Less(T, m)), atl(m, None)])),
                                fand([atl(T, i) for i in range(1, j)]),
                            ]
                        )
                        for j in range(1, N + 1)
                    ]
                )
                return for_([in_dom, beyond])
            in_dom = exists(s.name, "time", fand([fof.Less(s, T), atr(s, None), between(s, T)]))
            beyond = for_(
                [
                    fand(
                        [
                            atr(T, -j),
                            forall(m.name, "time", for_([fof.Not(fof.Less(m, T)), atl(m, None)])),
                            fand([atl(T, -i) for i in range(1, j)]),
                        ]
                    )
                    for j in range(1, N + 1)
                ]
            )
            return for_([in_dom, beyond])
        if until:
            if k > 0:
                return for_(
                    [
                        fand([atr(T, j), fand([atl(T, i) for i in range(k + 1, j)])])
                        for j in range(k + 1, k + N + 1)
                    ]
                )
            opts = [
                fand([atr(T, j), fand([atl(T, i) for i in range(k + 1, j)])])
                for j in range(k + 1, 0)
            ]
            all_neg = fand([atl(T, i) for i in range(k + 1, 0)])
            in_dom = exists(
                s.name,
                "time",
                fand([atr(s, None), forall(m.name, "time", for_([fof.Not(fof.Less(m, s)), atl(m, None)]))]),
            )
            opts.append(fand([all_neg, in_dom]))
            all_dom = forall(m.name, "time", atl(m, None))
            for j in range(1, N + 1):
                opts.append(fand([all_neg, all_dom, atr(T, j), fand([atl(T, i) for i in range(1, j)])]))
            return for_(opts)
        if k < 0:
            return for_(
                [
                    fand([atr(T, j), fand([atl(T, i) for i in range(j + 1, k)])])
                    for j in range(k - N, k)
                ]
            )
        opts = [
            fand([atr(T, j), fand([atl(T, i) for i in range(j + 1, k)])])
            for j in range(1, k)
        ]
        all_pos = fand([atl(T, i) for i in range(1, k)])
        in_dom = exists(
            s.name,
            "time",
            fand([atr(s, None), forall(m.name, "time", for_([fof.Not(fof.Less(s, m)), atl(m, None)]))]),
        )
        opts.append(fand([all_pos, in_dom]))
        all_dom = forall(m.name, "time", atl(m, None))
        for j in range(1, N + 1):
            opts.append(fand([all_pos, all_dom, atr(T, -j), fand([atl(T, -i) for i in range(1, j)])]))
        return for_(opts)

    def _psi_exists(self, roles, mus, q: PQExists, k, tvars) -> Formula:
        S, sub = q.role, q.sub
        if S.base not in self.ctx.o.role_bases():
            raise RewriteError(f"role {S} does not occur in the ontology")
        N = (len(roles) + 1) * self.n_bound(q)
        last = roles[-1]
        src = ExistsC(last.inv())
        anchor = self._last_anchor(roles, mus, tvars)
        parts: list[Formula] = []
        for s_next in self._roles():
            tnext = self.fresh_t()
            # the witness goes one level deeper, created at a live instant
            if k is None:
                theta_live = self.theta(s_next, S, tnext, T)
            else:
                theta_live = self.theta_dst_phantom(s_next, S, k, tnext)
            if not isinstance(theta_live, fof.FFalse):
                if anchor[0] == "var":
                    xi_live = self.xi(src, ExistsC(s_next), anchor[1], tnext)
                else:
                    xi_live = self.xi_src_phantom(src, ExistsC(s_next), anchor[1], tnext)
                if not isinstance(xi_live, fof.FFalse):
                    parts.append(
                        exists(
                            tnext.name,
                            "time",
                            fand(
                                [
                                    xi_live,
                                    theta_live,
                                    self.psi(roles + (s_next,), mus + (0,), sub, k, tvars + (tnext,)),
                                ]
                            ),
                        )
                    )
            for i in _phantom_range(N, k):
                if anchor[0] == "var":
                    xi_ph = self.xi_dst_phantom(src, ExistsC(s_next), i, anchor[1])
                else:
                    xi_ph = self.xi_double(src, ExistsC(s_next), anchor[1], i)
                if isinstance(xi_ph, fof.FFalse):
                    continue
                if k is None:
                    theta_ph = self.theta_src_phantom(s_next, S, i, T)
                else:
                    theta_ph = self.theta_double(s_next, S, i, k)
                if isinstance(theta_ph, fof.FFalse):
                    continue
                parts.append(
                    fand(
                        [xi_ph, theta_ph, self.psi(roles + (s_next,), mus + (i,), sub, k, tvars)]
                    )
                )
        # or the chain folds back to its parent
        if k is None:
            if anchor[0] == "var":
                back_theta = self.theta(last, S.inv(), anchor[1], T)
            else:
                back_theta = self.theta_src_phantom(last, S.inv(), anchor[1], T)
        else:
            if anchor[0] == "var":
                back_theta = self.theta_dst_phantom(last, S.inv(), k, anchor[1])
            else:
                back_theta = self.theta_double(last, S.inv(), anchor[1], k)
        if not isinstance(back_theta, fof.FFalse):
            parts.append(
                fand([back_theta, self.psi(roles[:-1], mus[:-1], sub, k, tvars[:-1] if anchor[0] == "var" else tvars)])
            )
        return for_(parts)

    # -- public entry points

    def rewrite_ompiq(self, q: PositiveQuery, bound: Optional[int] = None) -> RewritingBundle:
        self._check_alphabet(q)
        main = self.rewrite_query(q, None)
        if self.a_bot is not None:
            main = for_([main, self.chi_bot()])

        def build_phantom(k: int) -> Formula:
            f = self.rewrite_query(q, k)
            if self.a_bot is not None:
                f = for_([f, self.chi_bot()])
            return f

        n = bound if bound is not None else 2 * self.n_bound(q)
        return RewritingBundle(main, self.fingerprint(), n, build_phantom)

    def rewrite_omaq(self, target, bound: Optional[int] = None) -> RewritingBundle:
        if isinstance(target, Role):
            return self.rewrite_ompiq(PQRole(target), bound)
        if isinstance(target, Concept):
            return self.rewrite_ompiq(PQName(target.name), bound)
        if isinstance(target, ExistsC):
            return self.rewrite_ompiq(PQExists(target.role, PQTop()), bound)
        raise RewriteError(f"not an atomic target: {target!r}")

    def chi_bot(self) -> Formula:
        tt = TVar("t0")
        return exists(
            "x0",
            "ind",
            exists("t0", "time", OracleAtom("LTL_CONCEPT", self.a_bot, ("x0",), tt)),
        )

    def rewrite_epistemic(self, f: EpistemicFormula) -> Formula:
        if isinstance(f, EAtom):
            if query_is_role(f.query):
                x, y, t = f.vars
                inner = self.rewrite_query(f.query, None)
                return substitute(inner, imap={X: x, Y: y}, tmap={"t": TVar(t)})
            x, t = f.vars
            inner = self.rewrite_query(f.query, None)
            return substitute(inner, imap={X: x}, tmap={"t": TVar(t)})
        if isinstance(f, ELess):
            return fof.Less(TVar(f.left), TVar(f.right))
        if isinstance(f, ENot):
            return fof.Not(self.rewrite_epistemic(f.sub))
        if isinstance(f, EAnd):
            return fand([self.rewrite_epistemic(p) for p in f.parts])
        if isinstance(f, EOr):
            return for_([self.rewrite_epistemic(p) for p in f.parts])
        if isinstance(f, EImplies):
            return for_([fof.Not(self.rewrite_epistemic(f.left)), self.rewrite_epistemic(f.right)])
        if isinstance(f, EQuant):
            sub = self.rewrite_epistemic(f.sub)
            if f.kind == "forall":
                return forall(f.var, f.sort, sub)
            return exists(f.var, f.sort, sub)
        raise RewriteError(f"unknown epistemic node {f!r}")

    def _check_alphabet(self, q: PositiveQuery) -> None:
        _, roles = query_names(q)
        missing = roles - self.ctx.o.role_bases()
        if missing:
            raise RewriteError(
                f"query roles outside the ontology alphabet: {sorted(missing)}"
            )


def _phantom_range(n: int, k: Optional[int]):
    """[-N, 0) and (0, N], stretched to k+N on the anchored side."""
    if k is None or k <= 0:
        lo, hi = -n if k is None or k == 0 else k - n, n
        lo = -n if k is None else k - n
        yield from range(lo, 0)
        yield from range(1, n + 1)
    else:
        yield from range(-n, 0)
        yield from range(1, k + n + 1)


def make_rewriter(o: Ontology, q: Optional[PositiveQuery] = None) -> Rewriter:
    """Rewriter over the ontology extended with any query roles missing
    from its alphabet (as trivial inclusions), so data-only roles work."""
    extra: frozenset[str] = frozenset()
    if q is not None:
        o_norm = o if o.normalized else normalize_ontology(o)
        _, roles = query_names(q)
        extra = frozenset(roles - o_norm.role_bases())
    return Rewriter(o, extra)
