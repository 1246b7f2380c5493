"""Evaluation of rewritings over the finite data structure.

The structure has two sorts: the individuals of the data and the active
temporal domain.  Oracle atoms are delegated to a resolver backed by the
canonical-trace machinery; everything else is standard enumeration with
memoised subformula tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import fof
from .ltl import PeriodicTrace, truth_set
from .model import ABox, ModelError, PQRole, PositiveQuery, prepare_abox
from .projection import ProjectionBundle, role_surrogate


class EvalError(ModelError):
    pass


@dataclass(eq=False)
class DataStructure:
    """The two-sorted first-order structure of a prepared data instance."""

    abox: ABox
    individuals: tuple[str, ...]
    tmin: int
    tmax: int
    concepts: frozenset[tuple[str, str, int]]
    roles: frozenset[tuple[str, str, str, int]]

    @staticmethod
    def of(a: ABox) -> "DataStructure":
        a = prepare_abox(a)
        return DataStructure(
            a,
            tuple(a.individuals()),
            a.min_time,
            a.max_time,
            a.concept_atoms,
            a.role_atoms,
        )

    @property
    def tem(self) -> range:
        return range(self.tmin, self.tmax + 1)


_EMPTY_TRACE = PeriodicTrace(0, -1, (), (frozenset(),), (frozenset(),), False, frozenset())


@dataclass(eq=False)
class OracleResolver:
    """Resolves oracle atoms against a projection bundle.

    Deterministic and memoised for a fixed ontology and data instance;
    safe to share across evaluations of different formulas.
    """

    bundle: ProjectionBundle
    _role_sets: dict = field(default_factory=dict)

    def _anchor(self, k: int) -> int:
        a = self.bundle.abox
        return (a.max_time + k) if k > 0 else (a.min_time + k)

    def concept_holds(self, name: str, a: str, n: int) -> bool:
        trace = self.bundle.individual_trace(a)
        if trace.bot:
            return True
        return trace.holds(("", name), n)

    def role_truth(self, query: PositiveQuery, a: str, b: str):
        key = (query, a, b)
        cached = self._role_sets.get(key)
        if cached is None:
            rod = self.bundle.pair_rods.get((a, b), _EMPTY_TRACE)
            if rod.bot:
                from .ltl import PeriodicSet

                cached = PeriodicSet.all()
            else:
                cached = truth_set(
                    query, lambda leaf: rod.pos_set(role_surrogate(leaf.role))
                )
            self._role_sets[key] = cached
        return cached

    def resolve(self, tag: str, payload, ivals: tuple[str, ...], tval: Optional[int]) -> bool:
        if tag == "LTL_CONCEPT":
            (a,) = ivals
            return self.concept_holds(payload, a, tval)
        if tag == "LTL_CONCEPT_PHANTOM":
            name, k = payload
            (a,) = ivals
            return self.concept_holds(name, a, self._anchor(k))
        if tag == "ROLE_Q":
            a, b = ivals
            return self.role_truth(payload, a, b).contains(tval)
        if tag == "ROLE_Q_PHANTOM":
            query, k = payload
            a, b = ivals
            return self.role_truth(query, a, b).contains(self._anchor(k))
        raise EvalError(f"unresolved oracle tag {tag!r}")


class _Evaluator:
    def __init__(self, s: DataStructure, resolver: Optional[OracleResolver]):
        self.s = s
        self.resolver = resolver
        self.memo: dict = {}
        self.fv_cache: dict[int, tuple[str, ...]] = {}
        self.rpr_tables: dict[str, dict] = {}

    def tval(self, t: fof.TempTerm, env: dict) -> int:
        if isinstance(t, fof.TVar):
            return env[t.name]
        if isinstance(t, fof.TMax):
            return self.s.tmax
        if isinstance(t, fof.TMin):
            return self.s.tmin
        if isinstance(t, fof.TShift):
            return self.tval(t.base, env) + t.delta
        raise EvalError(f"bad temporal term {t!r}")

    def free(self, f: fof.Formula) -> tuple[str, ...]:
        key = id(f)
        if key not in self.fv_cache:
            self.fv_cache[key] = tuple(fof.free_vars(f))
        return self.fv_cache[key]

    def eval(self, f: fof.Formula, env: dict) -> bool:
        fv = self.free(f)
        key = (id(f), tuple(env[v] for v in fv))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._eval(f, env)
        self.memo[key] = out
        return out

    def _eval(self, f: fof.Formula, env: dict) -> bool:
        s = self.s
        if isinstance(f, fof.FTrue):
            return True
        if isinstance(f, fof.FFalse):
            return False
        if isinstance(f, fof.CAtom):
            return (f.name, env[f.x], self.tval(f.t, env)) in s.concepts
        if isinstance(f, fof.RAtom):
            return (f.name, env[f.x], env[f.y], self.tval(f.t, env)) in s.roles
        if isinstance(f, fof.Less):
            return self.tval(f.a, env) < self.tval(f.b, env)
        if isinstance(f, fof.DiffEq):
            return self.tval(f.a, env) - self.tval(f.b, env) == f.r
        if isinstance(f, fof.DiffGt):
            return self.tval(f.a, env) - self.tval(f.b, env) > f.r
        if isinstance(f, fof.DiffIn):
            a, b = self.tval(f.a, env), self.tval(f.b, env)
            if b + f.r > s.tmax:  # the intermediate point must exist
                return False
            return a - b >= f.r and (a - b - f.r) % f.p == 0
        if isinstance(f, fof.Not):
            return not self.eval(f.sub, env)
        if isinstance(f, fof.And):
            return all(self.eval(p, env) for p in f.parts)
        if isinstance(f, fof.Or):
            return any(self.eval(p, env) for p in f.parts)
        if isinstance(f, (fof.Exists, fof.Forall)):
            domain = s.individuals if f.sort == "ind" else s.tem
            sub_env = dict(env)
            if isinstance(f, fof.Exists):
                for v in domain:
                    sub_env[f.var] = v
                    if self.eval(f.sub, sub_env):
                        return True
                return False
            for v in domain:
                sub_env[f.var] = v
                if not self.eval(f.sub, sub_env):
                    return False
            return True
        if isinstance(f, fof.RPR):
            return self._eval_rpr(f, env)
        if isinstance(f, fof.RPRAtom):
            table = self.rpr_tables.get(f.name)
            if table is None:
                raise EvalError(f"relation variable {f.name} outside its block")
            tv = self.tval(f.t, env)
            if tv < 0:
                return False
            return table.get((tuple(env[v] for v in f.args), tv), False)
        if isinstance(f, fof.OracleAtom):
            if self.resolver is None:
                raise EvalError("oracle atom met but no resolver supplied")
            ivals = tuple(env[v] for v in f.ivars)
            tval = None if f.t is None else self.tval(f.t, env)
            return self.resolver.resolve(f.tag, f.payload, ivals, tval)
        raise EvalError(f"unknown formula node {f!r}")

    def _eval_rpr(self, f: fof.RPR, env: dict) -> bool:
        for d in f.defs:
            if d.name in self.rpr_tables:
                raise EvalError(f"relation variable {d.name} defined twice")
        tables: dict[str, dict] = {d.name: {} for d in f.defs}
        self.rpr_tables.update(tables)
        try:
            import itertools as it

            # recursion starts at 0 with all relation variables false at
            # -1; theta at t may only read values strictly below t, which
            # are final, so memoisation stays valid throughout
            for t in range(0, self.s.tmax + 1):
                for d in f.defs:
                    for tup in it.product(self.s.individuals, repeat=len(d.params)):
                        sub_env = dict(env)
                        sub_env.update(dict(zip(d.params, tup)))
                        sub_env[d.tvar] = t
                        tables[d.name][(tup, t)] = self.eval(d.theta, sub_env)
            return self.eval(f.body, env)
        finally:
            for d in f.defs:
                del self.rpr_tables[d.name]


def evaluate(
    f: fof.Formula,
    s: DataStructure,
    resolver: Optional[OracleResolver] = None,
    bindings: Optional[dict] = None,
) -> bool:
    env = dict(bindings or {})
    missing = [v for v in fof.free_vars(f) if v not in env]
    if missing:
        raise EvalError(f"unbound variables: {missing}")
    return _Evaluator(s, resolver).eval(f, env)


def answers(
    f: fof.Formula,
    s: DataStructure,
    resolver: Optional[OracleResolver] = None,
) -> set[tuple]:
    """All assignments of the free variables satisfying the formula, as
    tuples in first-occurrence order of the variables."""
    fv = fof.free_vars(f)
    ev = _Evaluator(s, resolver)
    out: set[tuple] = set()

    names = list(fv)
    domains = [s.individuals if fv[v] == "ind" else list(s.tem) for v in names]

    def rec(i: int, env: dict) -> None:
        if i == len(names):
            if ev.eval(f, env):
                out.add(tuple(env[v] for v in names))
            return
        for val in domains[i]:
            env[names[i]] = val
            rec(i + 1, env)
        env.pop(names[i], None)

    rec(0, {})
    return out
