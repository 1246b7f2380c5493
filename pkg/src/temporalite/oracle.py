"""Ground-truth oracles and the three-way cross-check.

Two independent answer paths:

* a naive window-bounded materializer applying the two-dimensional
  closure rules directly, with witness creation up to a fixed depth and
  stability detection instead of periodicity machinery;
* an exact semantic evaluator computing, per canonical-model element,
  the eventually periodic set of instants at which a positive query
  holds, using the projection traces and witness-interaction shifts.

The cross-check runs these against the rewrite-and-evaluate pipeline and
reports the first disagreement, or that the naive path was inconclusive
(its window did not stabilise).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from .foeval import DataStructure, OracleResolver, answers as fo_answers
from .ltl import PeriodicSet, truth_set
from .model import (
    ABox,
    Concept,
    Exists,
    GF,
    GP,
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
    XF,
    XP,
    normalize_ontology,
    prepare_abox,
    query_is_role,
    query_names,
    query_role_depth,
    query_size,
)
from .projection import (
    OntologyContext,
    ProjectionBundle,
    build_projections,
    concept_dag,
    exists_surrogate,
    role_key,
    role_surrogate,
)
from .rewriter import Rewriter, make_rewriter


class OracleError(ModelError):
    pass


# ---------------------------------------------------------------------------
# Naive materializer


@dataclass(eq=False)
class MaterializedModel:
    """Bounded fixpoint of the closure rules.  Concepts maps (element,
    instant) to prefixed basic concepts; roles maps (elem, elem, instant)
    to prefixed roles.  Atoms derived through the window-truncated
    box-introduction rule are marked provisional, as is everything
    derived from them."""

    lo: int
    hi: int
    depth: int
    concepts: dict
    roles: dict
    tainted: set
    bot: bool
    bot_tainted: bool
    elements: set


def _term_key(term) -> tuple:
    from .model import Term

    assert isinstance(term, Term)
    prefix = term.prefixes[0] if term.prefixes else ""
    base = term.base
    if isinstance(base, Concept):
        return ("c", prefix, base.name)
    if isinstance(base, Exists):
        return ("e", prefix, str(base.role))
    return ("r", prefix, str(base))


def naive_materialize(
    o: Ontology, a: ABox, window: int = 14, depth: int = 2, budget: int = 200_000
) -> MaterializedModel:
    """Fixpoint of the closure rules on a bounded universe.

    Kept deliberately free of the periodic-trace machinery: plain sets,
    plain loops.  Next-style rules apply inside the window only; the
    box-introduction rules take "all remaining window instants" as their
    premise and taint their conclusions (and everything downstream).
    """
    if not o.normalized:
        o = normalize_ontology(o)
    if any(len(inc.conclusions) > 1 for inc in o.inclusions):
        raise OracleError("the naive materializer handles Horn ontologies only")
    a = prepare_abox(a)
    lo, hi = a.min_time - window, a.max_time + window

    concepts: dict = {}
    roles: dict = {}
    tainted: set = set()
    state = {"bot": False, "bot_tainted": False, "count": 0}
    elements: set = set(a.individuals())

    def cadd(w, n, key, taint) -> bool:
        if not (lo <= n <= hi):
            return False
        cell = concepts.setdefault((w, n), set())
        atom = ("C", w, None, n, key)
        if key in cell:
            if not taint and atom in tainted:
                tainted.discard(atom)
                return True
            return False
        state["count"] += 1
        cell.add(key)
        if taint:
            tainted.add(atom)
        return True

    def radd(u, v, n, key, taint) -> bool:
        if not (lo <= n <= hi):
            return False
        cell = roles.setdefault((u, v, n), set())
        atom = ("R", u, v, n, key)
        if key in cell:
            if not taint and atom in tainted:
                tainted.discard(atom)
                return True
            return False
        state["count"] += 1
        cell.add(key)
        if taint:
            tainted.add(atom)
        return True

    def ctaint(w, n, key) -> bool:
        return ("C", w, None, n, key) in tainted

    def rtaint(u, v, n, key) -> bool:
        return ("R", u, v, n, key) in tainted

    for name, ind, n in a.concept_atoms:
        cadd(ind, n, ("", ("c", name)), False)
    for base, u, v, n in a.role_atoms:
        radd(u, v, n, ("", str(Role(base))), False)

    tkeys = [
        (tuple(_term_key(t) for t in inc.premises), inc.conclusions, inc)
        for inc in o.tbox
    ]
    rkeys = [
        (tuple(_term_key(t) for t in inc.premises), inc.conclusions, inc)
        for inc in o.rbox
    ]

    def c_has(w, n, key):
        # key: ("c"|"e", prefix, name-or-rolekey)
        kind, prefix, name = key
        if prefix == "":
            if kind == "c":
                return ("", ("c", name)) in concepts.get((w, n), ())
            return _exists_at(w, n, name)
        if prefix == XF:
            return c_has(w, n + 1, (kind, "", name))
        if prefix == XP:
            return c_has(w, n - 1, (kind, "", name))
        if prefix == GF:
            return all(c_has(w, k, (kind, "", name)) for k in range(n + 1, hi + 1))
        return all(c_has(w, k, (kind, "", name)) for k in range(lo, n))

    def _exists_at(w, n, rkey):
        if ("", ("e", rkey)) in concepts.get((w, n), ()):
            return True
        for (u, v, m), cell in roles.items():
            if u == w and m == n and ("", rkey) in cell:
                return True
        return False

    def r_has(u, v, n, key):
        _, prefix, name = key
        if prefix == "":
            return ("", name) in roles.get((u, v, n), ())
        if prefix == XF:
            return r_has(u, v, n + 1, ("r", "", name))
        if prefix == XP:
            return r_has(u, v, n - 1, ("r", "", name))
        if prefix == GF:
            return all(r_has(u, v, k, ("r", "", name)) for k in range(n + 1, hi + 1))
        return all(r_has(u, v, k, ("r", "", name)) for k in range(lo, n))

    def c_prem_taint(w, n, key):
        kind, prefix, name = key
        if prefix == "":
            if kind == "c":
                return ctaint(w, n, ("", ("c", name)))
            if ("", ("e", name)) in concepts.get((w, n), ()) and not ctaint(
                w, n, ("", ("e", name))
            ):
                return False
            for (u, v, m), cell in roles.items():
                if u == w and m == n and ("", name) in cell and not rtaint(u, v, m, ("", name)):
                    return False
            return True
        if prefix == XF:
            return c_prem_taint(w, n + 1, (kind, "", name))
        if prefix == XP:
            return c_prem_taint(w, n - 1, (kind, "", name))
        return True  # box premises on a window are inherently provisional

    def r_prem_taint(u, v, n, key):
        _, prefix, name = key
        if prefix == "":
            return rtaint(u, v, n, ("", name))
        if prefix == XF:
            return r_prem_taint(u, v, n + 1, ("r", "", name))
        if prefix == XP:
            return r_prem_taint(u, v, n - 1, ("r", "", name))
        return True

    def apply_cterm(w, n, term, taint) -> bool:
        key = _term_key(term)
        kind, prefix, name = key
        if prefix in (GF, GP):
            rng = range(n + 1, hi + 1) if prefix == GF else range(lo, n)
            changed = False
            for k in rng:
                changed |= cadd(w, k, ("", (kind, name)), taint)
            return changed
        shift = {XF: 1, XP: -1, "": 0}[prefix]
        return cadd(w, n + shift, ("", (kind, name)), taint)

    def apply_rterm(u, v, n, term, taint) -> bool:
        key = _term_key(term)
        _, prefix, name = key
        if prefix in (GF, GP):
            rng = range(n + 1, hi + 1) if prefix == GF else range(lo, n)
            changed = False
            for k in rng:
                changed |= radd(u, v, k, ("", name), taint)
            return changed
        shift = {XF: 1, XP: -1, "": 0}[prefix]
        return radd(u, v, n + shift, ("", name), taint)

    def wdepth(w) -> int:
        return w.count("|")

    changed = True
    while changed:
        changed = False
        if state["count"] > budget:
            raise OracleError("naive materializer exceeded its atom budget")
        # (mp)/(cls) on concepts
        for w in sorted(elements):
            for n in range(lo, hi + 1):
                for keys, conclusions, inc in tkeys:
                    if all(c_has(w, n, k) for k in keys):
                        taint = any(c_prem_taint(w, n, k) for k in keys)
                        if not conclusions:
                            if not state["bot"] or (state["bot_tainted"] and not taint):
                                state["bot"] = True
                                state["bot_tainted"] = taint
                                changed = True
                        else:
                            changed |= apply_cterm(w, n, conclusions[0], taint)
        # (mp)/(cls) on roles, (inv), (exists-left)
        for (u, v, n) in sorted(roles):
            for keys, conclusions, inc in rkeys:
                if all(r_has(u, v, n, k) for k in keys):
                    taint = any(r_prem_taint(u, v, n, k) for k in keys)
                    if not conclusions:
                        if not state["bot"] or (state["bot_tainted"] and not taint):
                            state["bot"] = True
                            state["bot_tainted"] = taint
                            changed = True
                    else:
                        changed |= apply_rterm(u, v, n, conclusions[0], taint)
            cell = roles.get((u, v, n), set())
            for prefix, name in list(cell):
                if prefix == "":
                    inv = str(_parse_role(name).inv())
                    changed |= radd(v, u, n, ("", inv), rtaint(u, v, n, ("", name)))
                    changed |= cadd(u, n, ("", ("e", name)), rtaint(u, v, n, ("", name)))
        # (exists-right): witnesses up to the depth cap
        for (w, n), cell in sorted(concepts.items()):
            for prefix, key in list(cell):
                if prefix != "" or key[0] != "e":
                    continue
                rkey = key[1]
                if wdepth(w) >= depth:
                    continue
                witness = f"{w}|{rkey}|{n}"
                if witness not in elements:
                    if not any(
                        ("", rkey) in roles.get((w, x, n), ()) for x in elements
                    ):
                        elements.add(witness)
                        changed |= radd(
                            w, witness, n, ("", rkey), ctaint(w, n, ("", key))
                        )
    return MaterializedModel(
        lo,
        hi,
        depth,
        concepts,
        roles,
        tainted,
        state["bot"],
        state["bot_tainted"],
        elements,
    )


def _parse_role(key: str) -> Role:
    if key.endswith("-"):
        return Role(key[:-1], True)
    return Role(key)


def eval_query_on_model(
    m: MaterializedModel, q: PositiveQuery, w, n: int
) -> bool:
    """Window-bounded semantic evaluation on the materialization."""
    if isinstance(q, PQTop):
        return True
    if isinstance(q, PQName):
        return ("", ("c", q.name)) in m.concepts.get((w, n), ())
    if isinstance(q, PQRole):
        u, v = w
        key = str(q.role)
        return ("", key) in m.roles.get((u, v, n), ())
    if isinstance(q, PQAnd):
        return eval_query_on_model(m, q.left, w, n) and eval_query_on_model(m, q.right, w, n)
    if isinstance(q, PQOr):
        return eval_query_on_model(m, q.left, w, n) or eval_query_on_model(m, q.right, w, n)
    if isinstance(q, PQOp):
        rng = {
            XF: [n + 1],
            XP: [n - 1],
            "DF": range(n + 1, m.hi + 1),
            "DP": range(m.lo, n),
            GF: range(n + 1, m.hi + 1),
            GP: range(m.lo, n),
        }[q.op]
        if q.op in (GF, GP):
            return all(eval_query_on_model(m, q.sub, w, k) for k in rng)
        return any(eval_query_on_model(m, q.sub, w, k) for k in rng)
    if isinstance(q, PQUntil):
        for k in range(n + 1, m.hi + 1):
            if eval_query_on_model(m, q.right, w, k) and all(
                eval_query_on_model(m, q.left, w, j) for j in range(n + 1, k)
            ):
                return True
        return False
    if isinstance(q, PQSince):
        for k in range(m.lo, n):
            if eval_query_on_model(m, q.right, w, k) and all(
                eval_query_on_model(m, q.left, w, j) for j in range(k + 1, n)
            ):
                return True
        return False
    if isinstance(q, PQExists):
        key = str(q.role)
        for other in m.elements:
            if ("", key) in m.roles.get((w, other, n), ()) and eval_query_on_model(
                m, q.sub, other, n
            ):
                return True
        return False
    raise OracleError(f"unsupported query {q!r}")


def naive_answers(
    o: Ontology, q: PositiveQuery, a: ABox, window: int = 14, budget: int = 200_000
) -> tuple[set[tuple], bool]:
    """(answers, stable): answers from three growing windows; stable when
    all three agree and the bottom flag is clean."""
    if not o.normalized:
        o = normalize_ontology(o)
    a = prepare_abox(a)
    depth = max(1, query_role_depth(q)) + 1
    results = []
    bots = []
    for w in (window, window + 3, window + 6):
        m = naive_materialize(o, a, window=w, depth=depth)
        bots.append((m.bot, m.bot_tainted))
        if m.bot:
            results.append(None)
            continue
        answers: set[tuple] = set()
        inds = a.individuals()
        if query_is_role(q):
            for x in inds:
                for y in inds:
                    for n in a.tem():
                        if eval_query_on_model(m, q, (x, y), n):
                            answers.add((x, y, n))
        else:
            for x in inds:
                for n in a.tem():
                    if eval_query_on_model(m, q, x, n):
                        answers.add((x, n))
        results.append(answers)
    if any(b for b, _ in bots):
        stable = all(b for b, _ in bots) and not any(t for _, t in bots)
        return set(), stable  # inconsistency: no informative answers
    stable = results[0] == results[1] == results[2]
    return results[-1], stable


# ---------------------------------------------------------------------------
# Exact semantic evaluator over the periodic representations


Element = Union[tuple, str]  # ("i", name) | ("w", parent, role, m)


@dataclass(eq=False)
class ExactEvaluator:
    bundle: ProjectionBundle
    top_size: int
    _memo: dict = field(default_factory=dict)

    @property
    def ctx(self) -> OntologyContext:
        return self.bundle.ctx

    def n_bound(self, level: int) -> int:
        s, p = self.ctx.params()
        return (level + 1) * (s + self.top_size * p)

    # element plumbing

    def chain_len(self, elem) -> int:
        return 0 if elem[0] == "i" else 1 + self.chain_len(elem[1])

    def chain_instants(self, elem) -> list[int]:
        out = []
        while elem[0] == "w":
            out.append(elem[3])
            elem = elem[1]
        return out

    def name_positions(self, elem, base) -> PeriodicSet:
        name = concept_dag(base)
        if elem[0] == "i":
            return self.bundle.individual_trace(elem[1]).pos_set(name)
        _, _, role, m = elem
        return self.ctx.witness_trace(role).pos_set(name).shift(m)

    def has_exists(self, elem, role: Role, m: int) -> bool:
        return self.name_positions(elem, Exists(role)).contains(m)

    # truth sets

    def truth(self, q: PositiveQuery, elem) -> PeriodicSet:
        key = (q, elem)
        if key not in self._memo:
            self._memo[key] = self._truth(q, elem)
        return self._memo[key]

    def _truth(self, q: PositiveQuery, elem) -> PeriodicSet:
        if isinstance(q, PQTop):
            return PeriodicSet.all()
        if isinstance(q, PQName):
            return self.name_positions(elem, Concept(q.name))
        if isinstance(q, PQAnd):
            return self.truth(q.left, elem).intersect(self.truth(q.right, elem))
        if isinstance(q, PQOr):
            return self.truth(q.left, elem).union(self.truth(q.right, elem))
        if isinstance(q, PQOp):
            from .ltl import (
                set_all_future,
                set_all_past,
                set_exists_future,
                set_exists_past,
            )

            sub = self.truth(q.sub, elem)
            return {
                XF: lambda s: s.shift(-1),
                XP: lambda s: s.shift(1),
                "DF": set_exists_future,
                "DP": set_exists_past,
                GF: set_all_future,
                GP: set_all_past,
            }[q.op](sub)
        if isinstance(q, PQUntil):
            from .ltl import set_until

            return set_until(self.truth(q.left, elem), self.truth(q.right, elem))
        if isinstance(q, PQSince):
            from .ltl import set_since

            return set_since(self.truth(q.left, elem), self.truth(q.right, elem))
        if isinstance(q, PQExists):
            return self._truth_exists(q, elem)
        raise OracleError(f"unsupported query {q!r}")

    def _truth_exists(self, q: PQExists, elem) -> PeriodicSet:
        S, sub = q.role, q.sub
        out = PeriodicSet.empty()
        abox = self.bundle.abox
        # named neighbours
        if elem[0] == "i":
            for b in abox.individuals():
                rod = self.bundle.pair_rods.get((elem[1], b))
                if rod is None:
                    continue
                edge = rod.pos_set(role_surrogate(S))
                if edge.is_empty():
                    continue
                out = out.union(edge.intersect(self.truth(sub, ("i", b))))
        # back to the parent
        if elem[0] == "w":
            _, parent, role, m = elem
            back = self.ctx.single_rod(role).pos_set(role_surrogate(S.inv())).shift(m)
            if not back.is_empty():
                out = out.union(back.intersect(self.truth(sub, parent)))
        # fresh witnesses, created at data instants or near the edges
        level = self.chain_len(elem)
        n_l = self.n_bound(level + 1)
        refs = [abox.min_time, abox.max_time] + self.chain_instants(elem)
        lo = min(refs) - n_l
        hi = max(refs) + n_l
        for role in self.ctx.o.roles():
            rod = self.ctx.single_rod(role)
            if rod.bot:
                continue
            edge_base = rod.pos_set(role_surrogate(S))
            if edge_base.is_empty():
                continue
            for m in range(lo, hi + 1):
                if not self.has_exists(elem, role, m):
                    continue
                child = ("w", elem, role, m)
                got = edge_base.shift(m).intersect(self.truth(sub, child))
                if not got.is_empty():
                    out = out.union(got)
        return out

    def role_truth(self, q: PositiveQuery, a: str, b: str) -> PeriodicSet:
        rod = self.bundle.pair_rods.get((a, b))
        if rod is None:
            return PeriodicSet.empty()
        return truth_set(q, lambda leaf: rod.pos_set(role_surrogate(leaf.role)))


def exact_answers(
    o_or_bundle,
    q: PositiveQuery,
    a: Optional[ABox] = None,
    at: Union[str, int] = "domain",
) -> set[tuple]:
    """Certain answers via direct evaluation over the canonical model.

    ``at`` is "domain" for the active temporal domain or a nonzero k for
    the phantom instant beyond the respective edge."""
    if isinstance(o_or_bundle, ProjectionBundle):
        bundle = o_or_bundle
    else:
        o = o_or_bundle
        if not o.normalized:
            o = normalize_ontology(o)
        from .projection import make_context

        _, qroles = query_names(q)
        missing = qroles - o.role_bases()
        if missing:
            from .model import Inclusion, Term

            extra = tuple(
                Inclusion((Term((), Role(base, inv)),), (Term((), Role(base, inv)),))
                for base in sorted(missing)
                for inv in (False, True)
            )
            o = Ontology(o.tbox, o.rbox + extra, normalized=True)
        bundle = build_projections(make_context(o), prepare_abox(a))
    from .consistency import check_consistency_bundle

    if bundle.bot:
        raise OracleError("inconsistent knowledge base; run the consistency check")
    report = check_consistency_bundle(bundle)
    if report.verdict != "consistent":
        raise OracleError("inconsistent knowledge base; run the consistency check")
    ev = ExactEvaluator(bundle, query_size(q))
    abox = bundle.abox
    inds = abox.individuals()
    out: set[tuple] = set()
    if at == "domain":
        instants = list(abox.tem())
    else:
        k = int(at)
        instants = [abox.max_time + k if k > 0 else abox.min_time + k]
    if query_is_role(q):
        for x in inds:
            for y in inds:
                s = ev.role_truth(q, x, y)
                for n in instants:
                    if s.contains(n):
                        out.add((x, y, n))
    else:
        for x in inds:
            s = ev.truth(q, ("i", x))
            for n in instants:
                if s.contains(n):
                    out.add((x, n))
    return out


# ---------------------------------------------------------------------------
# Cross-check


@dataclass(frozen=True)
class CrossCheckReport:
    agree: bool
    naive_conclusive: bool
    rewrite_answers: frozenset
    exact_answers: frozenset
    naive_answers: Optional[frozenset]
    disagreement: Optional[tuple] = None

    def verdicts_for(self, tup) -> dict:
        return {
            "rewrite": tup in self.rewrite_answers,
            "exact": tup in self.exact_answers,
            "naive": None if self.naive_answers is None else tup in self.naive_answers,
        }


def rewrite_eval_answers(o: Ontology, q: PositiveQuery, a: ABox) -> set[tuple]:
    rw = make_rewriter(o, q)
    bundle = build_projections(rw.ctx, prepare_abox(a))
    s = DataStructure.of(a)
    resolver = OracleResolver(bundle)
    return fo_answers(rw.rewrite_ompiq(q).main, s, resolver)


def cross_check(o: Ontology, q: PositiveQuery, a: ABox, window: int = 14) -> CrossCheckReport:
    if not o.normalized:
        o = normalize_ontology(o)
    rewrite_ans = frozenset(rewrite_eval_answers(o, q, a))
    exact_ans = frozenset(exact_answers(o, q, a))
    naive_ans, stable = naive_answers(o, q, a, window=window)
    naive_f = frozenset(naive_ans) if stable else None
    candidates = rewrite_ans | exact_ans | (naive_f or frozenset())
    disagreement = None
    for tup in sorted(candidates):
        in_r, in_e = tup in rewrite_ans, tup in exact_ans
        in_n = tup in naive_f if naive_f is not None else in_e
        if not (in_r == in_e == in_n):
            disagreement = tup
            break
    agree = disagreement is None
    return CrossCheckReport(agree, stable, rewrite_ans, exact_ans, naive_f, disagreement)
