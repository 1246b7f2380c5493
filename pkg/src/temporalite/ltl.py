"""Propositional Horn LTL canonical models as eventually periodic traces.

The canonical model of a Horn LTL knowledge base is the least model of
its clauses; over the integers it is eventually periodic on both sides.
This module computes it exactly as a window of explicit cells plus
cyclic tail templates, verified by re-saturating a widened window, and
provides the derived machinery the rest of the engine is built on:
membership queries at arbitrary instants, entailed-shift sets, and
periodicity parameters.

Atoms are pairs (prefix, name); prefixes are "" (now), "XF"/"XP"
(next/previous) and "GF"/"GP" (always future/past).  Clauses are Horn:
a conjunction of prefixed atoms entails one prefixed atom or bottom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .model import (
    GF,
    GP,
    XF,
    XP,
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
)

LAtom = tuple[str, str]  # (prefix, name)

LOCAL_PREFIXES = ("", XF, XP)
GLOBAL_PREFIXES = (GF, GP)


class LTLError(ValueError):
    pass


class PeriodSearchError(LTLError):
    """The periodic shape of a trace could not be established within the
    configured bounds; this indicates a bug or a pathological input."""


@dataclass(frozen=True)
class LClause:
    premises: tuple[LAtom, ...]
    conclusion: Optional[LAtom]  # None encodes bottom

    def __str__(self) -> str:
        def one(a: LAtom) -> str:
            return f"{a[0]} {a[1]}".strip()

        left = " & ".join(one(p) for p in self.premises) or "top"
        right = one(self.conclusion) if self.conclusion else "bot"
        return f"{left} <= {right}"


@dataclass(eq=False)
class LTLOntology:
    """A set of Horn clauses over a finite alphabet of proposition names."""

    clauses: tuple[LClause, ...]
    names: frozenset[str]
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        names = set(self.names)
        for cl in self.clauses:
            for pfx, name in cl.premises + ((cl.conclusion,) if cl.conclusion else ()):
                names.add(name)
        self.names = frozenset(names)


def ltl_ontology(clauses: Iterable[LClause], names: Iterable[str] = ()) -> LTLOntology:
    return LTLOntology(tuple(clauses), frozenset(names))


# ---------------------------------------------------------------------------
# Eventually periodic subsets of the integers


@dataclass(frozen=True)
class PeriodicSet:
    """An eventually periodic subset of the integers.

    Membership below ``lo`` is governed by ``lres`` modulo ``lper``
    (counting leftwards from ``lo - 1``), inside [lo, hi] by the
    explicit window, above ``hi`` by ``rres`` modulo ``rper`` (counting
    rightwards from ``hi + 1``).  This shape is closed under the Boolean
    and temporal operations used by the engine.
    """

    lo: int
    hi: int
    window: frozenset[int]
    lper: int = 1
    lres: frozenset[int] = frozenset()
    rper: int = 1
    rres: frozenset[int] = frozenset()

    # -- basic queries

    def contains(self, n: int) -> bool:
        if self.lo <= n <= self.hi:
            return n in self.window
        if n > self.hi:
            return (n - self.hi - 1) % self.rper in self.rres
        return (self.lo - 1 - n) % self.lper in self.lres

    __contains__ = contains

    def is_empty(self) -> bool:
        return not self.window and not self.lres and not self.rres

    def unbounded_above(self) -> bool:
        return bool(self.rres)

    def unbounded_below(self) -> bool:
        return bool(self.lres)

    def max_finite(self) -> Optional[int]:
        """Largest element, None if empty or unbounded above."""
        if self.rres:
            return None
        if self.window:
            return max(self.window)
        if self.lres:
            return self.lo - 1 - min(self.lres)
        return None

    def min_finite(self) -> Optional[int]:
        if self.lres:
            return None
        if self.window:
            return min(self.window)
        if self.rres:
            return self.hi + 1 + min(self.rres)
        return None

    def next_in(self, n: int) -> Optional[int]:
        """Smallest element strictly above n, None if there is none."""
        k = n + 1
        if k < self.lo:
            if self.lres:
                offs = sorted((self.lo - 1 - k - r) % self.lper for r in self.lres)
                cand = k + min(offs)
                if cand < self.lo:
                    return cand
            k = self.lo
        for m in range(max(k, self.lo), self.hi + 1):
            if m in self.window:
                return m
        if not self.rres:
            return None
        j0 = max(0, n - self.hi)
        for j in range(j0, j0 + self.rper):
            if j % self.rper in self.rres and self.hi + 1 + j > n:
                return self.hi + 1 + j
        return None

    def prev_in(self, n: int) -> Optional[int]:
        k = n - 1
        if k > self.hi:
            if self.rres:
                offs = sorted((k - self.hi - 1 - r) % self.rper for r in self.rres)
                cand = k - min(offs)
                if cand > self.hi:
                    return cand
            k = self.hi
        for m in range(min(k, self.hi), self.lo - 1, -1):
            if m in self.window:
                return m
        if not self.lres:
            return None
        j0 = max(0, self.lo - n)
        for j in range(j0, j0 + self.lper):
            if j % self.lper in self.lres and self.lo - 1 - j < n:
                return self.lo - 1 - j
        return None

    def next_not_in(self, n: int) -> Optional[int]:
        """Smallest non-element strictly above n, None if co-finite there."""
        k = n + 1
        if k < self.lo:
            full = frozenset(range(self.lper))
            if self.lres != full:
                for m in range(k, self.lo):
                    if not self.contains(m):
                        return m
            k = self.lo
        for m in range(max(k, self.lo), self.hi + 1):
            if m not in self.window:
                return m
        if len(self.rres) == self.rper:
            return None
        j0 = max(0, n - self.hi)
        for j in range(j0, j0 + self.rper):
            if j % self.rper not in self.rres and self.hi + 1 + j > n:
                return self.hi + 1 + j
        return None

    def prev_not_in(self, n: int) -> Optional[int]:
        k = n - 1
        if k > self.hi:
            if len(self.rres) != self.rper:
                for m in range(k, self.hi, -1):
                    if not self.contains(m):
                        return m
            k = self.hi
        for m in range(min(k, self.hi), self.lo - 1, -1):
            if m not in self.window:
                return m
        if len(self.lres) == self.lper:
            return None
        j0 = max(0, self.lo - n)
        for j in range(j0, j0 + self.lper):
            if j % self.lper not in self.lres and self.lo - 1 - j < n:
                return self.lo - 1 - j
        return None

    def all_after(self, n: int) -> bool:
        return self.next_not_in(n) is None

    def all_before(self, n: int) -> bool:
        return self.prev_not_in(n) is None

    def iter_range(self, a: int, b: int):
        for n in range(a, b + 1):
            if self.contains(n):
                yield n

    # -- constructors

    @staticmethod
    def empty() -> "PeriodicSet":
        return PeriodicSet(0, -1, frozenset())

    @staticmethod
    def all() -> "PeriodicSet":
        return PeriodicSet(0, -1, frozenset(), 1, frozenset({0}), 1, frozenset({0}))

    @staticmethod
    def finite(elems: Iterable[int]) -> "PeriodicSet":
        elems = frozenset(elems)
        if not elems:
            return PeriodicSet.empty()
        return PeriodicSet(min(elems), max(elems), elems)

    @staticmethod
    def half_line_right(m: int) -> "PeriodicSet":
        """All integers >= m."""
        return PeriodicSet(m, m, frozenset({m}), 1, frozenset(), 1, frozenset({0}))

    @staticmethod
    def half_line_left(m: int) -> "PeriodicSet":
        """All integers <= m."""
        return PeriodicSet(m, m, frozenset({m}), 1, frozenset({0}), 1, frozenset())

    # -- alignment and Boolean structure

    def aligned(self, lo: int, hi: int, lper: int, rper: int) -> "PeriodicSet":
        assert lo <= self.lo and hi >= self.hi
        assert lper % self.lper == 0 and rper % self.rper == 0
        window = frozenset(n for n in range(lo, hi + 1) if self.contains(n))
        lres = frozenset(r for r in range(lper) if self.contains(lo - 1 - r))
        rres = frozenset(r for r in range(rper) if self.contains(hi + 1 + r))
        return PeriodicSet(lo, hi, window, lper, lres, rper, rres)

    def _common(self, other: "PeriodicSet"):
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        if hi < lo:
            hi = lo - 1
        lper = _lcm(self.lper, other.lper)
        rper = _lcm(self.rper, other.rper)
        return self.aligned(lo, hi, lper, rper), other.aligned(lo, hi, lper, rper)

    def union(self, other: "PeriodicSet") -> "PeriodicSet":
        a, b = self._common(other)
        return PeriodicSet(
            a.lo, a.hi, a.window | b.window, a.lper, a.lres | b.lres, a.rper, a.rres | b.rres
        )

    def intersect(self, other: "PeriodicSet") -> "PeriodicSet":
        a, b = self._common(other)
        return PeriodicSet(
            a.lo, a.hi, a.window & b.window, a.lper, a.lres & b.lres, a.rper, a.rres & b.rres
        )

    def shift(self, d: int) -> "PeriodicSet":
        return PeriodicSet(
            self.lo + d,
            self.hi + d,
            frozenset(n + d for n in self.window),
            self.lper,
            self.lres,
            self.rper,
            self.rres,
        )

    def equals(self, other: "PeriodicSet", probe: int = 3) -> bool:
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        span = _lcm(_lcm(self.lper, other.lper), _lcm(self.rper, other.rper))
        for n in range(lo - probe * span, hi + probe * span + 1):
            if self.contains(n) != other.contains(n):
                return False
        return True


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def set_exists_future(s: PeriodicSet) -> PeriodicSet:
    """{n : some element of s lies strictly above n}."""
    if s.unbounded_above():
        return PeriodicSet.all()
    m = s.max_finite()
    if m is None:
        return PeriodicSet.empty()
    return PeriodicSet.half_line_left(m - 1)


def set_exists_past(s: PeriodicSet) -> PeriodicSet:
    if s.unbounded_below():
        return PeriodicSet.all()
    m = s.min_finite()
    if m is None:
        return PeriodicSet.empty()
    return PeriodicSet.half_line_right(m + 1)


def set_all_future(s: PeriodicSet) -> PeriodicSet:
    """{n : every instant strictly above n is in s}."""
    if len(s.rres) != s.rper:
        return PeriodicSet.empty()
    g = s.prev_not_in(s.hi + 1)
    if g is None:
        return PeriodicSet.all()
    return PeriodicSet.half_line_right(g)


def set_all_past(s: PeriodicSet) -> PeriodicSet:
    if len(s.lres) != s.lper:
        return PeriodicSet.empty()
    g = s.next_not_in(s.lo - 1)
    if g is None:
        return PeriodicSet.all()
    return PeriodicSet.half_line_left(g)


def set_from_pointwise(fn: Callable[[int], bool], refs: Iterable[PeriodicSet]) -> PeriodicSet:
    """Materialise {n : fn(n)} assuming it is eventually periodic with
    the reference sets' combined periods; sampled and verified."""
    refs = list(refs)
    lo = min([r.lo for r in refs] or [0])
    hi = max([r.hi for r in refs] or [-1])
    if hi < lo:
        hi = lo
    lper = 1
    rper = 1
    for r in refs:
        lper = _lcm(lper, r.lper)
        rper = _lcm(rper, r.rper)
    for cushion in (1, 3):
        LO = lo - cushion * lper
        HI = hi + cushion * rper
        window = frozenset(n for n in range(LO, HI + 1) if fn(n))
        rres = frozenset(r for r in range(rper) if fn(HI + 1 + r))
        lres = frozenset(r for r in range(lper) if fn(LO - 1 - r))
        ok = all(fn(HI + 1 + r + rper) == ((r % rper) in rres) for r in range(rper)) and all(
            fn(LO - 1 - r - lper) == ((r % lper) in lres) for r in range(lper)
        )
        if ok:
            return PeriodicSet(LO, HI, window, lper, lres, rper, rres)
    raise LTLError("pointwise set is not periodic with the expected periods")


def set_until(s1: PeriodicSet, s2: PeriodicSet) -> PeriodicSet:
    """{n : exists k>n in s2 with (n,k) inside s1}."""

    def fn(n: int) -> bool:
        g = s1.next_not_in(n)
        nxt = s2.next_in(n)
        if nxt is None:
            return False
        return g is None or nxt <= g

    return set_from_pointwise(fn, [s1, s2])


def set_since(s1: PeriodicSet, s2: PeriodicSet) -> PeriodicSet:
    def fn(n: int) -> bool:
        g = s1.prev_not_in(n)
        prv = s2.prev_in(n)
        if prv is None:
            return False
        return g is None or prv >= g

    return set_from_pointwise(fn, [s1, s2])


# ---------------------------------------------------------------------------
# Traces


@dataclass(eq=False)
class PeriodicTrace:
    """The canonical trace: explicit cells on [lo, hi], cyclic templates
    beyond.  Position hi+1+j holds rtail[j mod len(rtail)] and position
    lo-1-j holds ltail[j mod len(ltail)]."""

    lo: int
    hi: int
    cells: tuple[frozenset[str], ...]
    ltail: tuple[frozenset[str], ...]
    rtail: tuple[frozenset[str], ...]
    bot: bool
    alphabet: frozenset[str]
    _possets: dict = field(default_factory=dict, repr=False)

    @property
    def left_period(self) -> int:
        return len(self.ltail)

    @property
    def right_period(self) -> int:
        return len(self.rtail)

    def names_at(self, n: int) -> frozenset[str]:
        if self.lo <= n <= self.hi:
            return self.cells[n - self.lo]
        if n > self.hi:
            return self.rtail[(n - self.hi - 1) % len(self.rtail)]
        return self.ltail[(self.lo - 1 - n) % len(self.ltail)]

    def pos_set(self, name: str) -> PeriodicSet:
        cached = self._possets.get(name)
        if cached is None:
            window = frozenset(n for n in range(self.lo, self.hi + 1) if name in self.cells[n - self.lo])
            lres = frozenset(j for j, cell in enumerate(self.ltail) if name in cell)
            rres = frozenset(j for j, cell in enumerate(self.rtail) if name in cell)
            cached = PeriodicSet(self.lo, self.hi, window, len(self.ltail), lres, len(self.rtail), rres)
            self._possets[name] = cached
        return cached

    def holds(self, atom: LAtom, n: int) -> bool:
        """Exact membership of a prefixed atom at any instant."""
        pfx, name = atom
        s = self.pos_set(name)
        if pfx == "":
            return s.contains(n)
        if pfx == XF:
            return s.contains(n + 1)
        if pfx == XP:
            return s.contains(n - 1)
        if pfx == GF:
            return s.all_after(n)
        if pfx == GP:
            return s.all_before(n)
        raise LTLError(f"unknown prefix {pfx!r}")

    def atom_set(self, atom: LAtom) -> PeriodicSet:
        pfx, name = atom
        s = self.pos_set(name)
        if pfx == "":
            return s
        if pfx == XF:
            return s.shift(-1)
        if pfx == XP:
            return s.shift(1)
        if pfx == GF:
            return set_all_future(s)
        if pfx == GP:
            return set_all_past(s)
        raise LTLError(f"unknown prefix {pfx!r}")

    def stems(self) -> tuple[int, int]:
        """(s_left, s_right): beyond them the trace repeats with its
        periods; measured as absolute positions from which repetition is
        already in force."""
        rp = len(self.rtail)
        s_right = self.hi + 1
        n = self.hi
        while n >= self.lo and self.names_at(n) == self.names_at(n + rp):
            s_right = n
            n -= 1
        lp = len(self.ltail)
        s_left = self.lo - 1
        n = self.lo
        while n <= self.hi and self.names_at(n) == self.names_at(n - lp):
            s_left = n
            n += 1
        return s_left, s_right

    def same_function(self, other: "PeriodicTrace", probe: int = 2) -> bool:
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        lspan = _lcm(len(self.ltail), len(other.ltail))
        rspan = _lcm(len(self.rtail), len(other.rtail))
        for n in range(lo - probe * lspan, hi + probe * rspan + 1):
            if self.names_at(n) != other.names_at(n):
                return False
        return self.bot == other.bot


# ---------------------------------------------------------------------------
# Saturation


class _Builder:
    def __init__(self, ont: LTLOntology, lo: int, hi: int):
        self.ont = ont
        self.lo = lo
        self.hi = hi
        self.cells: list[set[str]] = [set() for _ in range(hi - lo + 1)]
        self.ltail: list[set[str]] = [set()]
        self.rtail: list[set[str]] = [set()]
        self.bot = False
        # clause scheduling indexes: name -> [(clause, delta)] so that a
        # change of `name` at position m re-tries the clause at m - delta
        self.local_index: dict[str, list[tuple[LClause, int]]] = {}
        self.global_clauses: list[LClause] = []
        for cl in ont.clauses:
            if any(p[0] in GLOBAL_PREFIXES for p in cl.premises):
                self.global_clauses.append(cl)
            for pfx, name in cl.premises:
                if pfx in LOCAL_PREFIXES:
                    delta = {XF: 1, XP: -1, "": 0}[pfx]
                    self.local_index.setdefault(name, []).append((cl, delta))
        self.queue: list[tuple[LClause, int]] = []

    # -- representation access

    def has(self, name: str, n: int) -> bool:
        if self.lo <= n <= self.hi:
            return name in self.cells[n - self.lo]
        if n > self.hi:
            return name in self.rtail[(n - self.hi - 1) % len(self.rtail)]
        return name in self.ltail[(self.lo - 1 - n) % len(self.ltail)]

    def all_future(self, name: str, n: int) -> bool:
        if not all(name in cell for cell in self.rtail):
            return False
        for k in range(max(n + 1, self.lo), self.hi + 1):
            if name not in self.cells[k - self.lo]:
                return False
        for k in range(n + 1, self.lo):
            if not self.has(name, k):
                return False
        return True

    def all_past(self, name: str, n: int) -> bool:
        if not all(name in cell for cell in self.ltail):
            return False
        for k in range(min(n - 1, self.hi), self.lo - 1, -1):
            if name not in self.cells[k - self.lo]:
                return False
        for k in range(self.hi + 1, n):
            if not self.has(name, k):
                return False
        return True

    def premise_true(self, atom: LAtom, n: int) -> bool:
        pfx, name = atom
        if pfx == "":
            return self.has(name, n)
        if pfx == XF:
            return self.has(name, n + 1)
        if pfx == XP:
            return self.has(name, n - 1)
        if pfx == GF:
            return self.all_future(name, n)
        return self.all_past(name, n)

    # -- additions (window only; floods also reach the tails)

    def add(self, name: str, n: int) -> None:
        if not (self.lo <= n <= self.hi):
            return  # dropped at the frontier; widening catches the loss
        cell = self.cells[n - self.lo]
        if name in cell:
            return
        cell.add(name)
        for cl, delta in self.local_index.get(name, ()):
            self.queue.append((cl, n - delta))

    def flood_right(self, name: str, frm: int) -> None:
        changed = False
        for cell in self.rtail:
            if name not in cell:
                cell.add(name)
                changed = True
        for k in range(max(frm, self.lo), self.hi + 1):
            self.add(name, k)
        if changed:
            for cl, delta in self.local_index.get(name, ()):
                if delta == 1:  # next-premise at hi reads the tail
                    self.queue.append((cl, self.hi))

    def flood_left(self, name: str, upto: int) -> None:
        changed = False
        for cell in self.ltail:
            if name not in cell:
                cell.add(name)
                changed = True
        for k in range(min(upto, self.hi), self.lo - 1, -1):
            self.add(name, k)
        if changed:
            for cl, delta in self.local_index.get(name, ()):
                if delta == -1:  # previous-premise at lo reads the tail
                    self.queue.append((cl, self.lo))

    def apply_conclusion(self, atom: Optional[LAtom], n: int) -> None:
        if atom is None:
            self.bot = True
            return
        pfx, name = atom
        if pfx == "":
            self.add(name, n)
        elif pfx == XF:
            self.add(name, n + 1)
        elif pfx == XP:
            self.add(name, n - 1)
        elif pfx == GF:
            self.flood_right(name, n + 1)
        elif pfx == GP:
            self.flood_left(name, n - 1)

    def try_clause(self, cl: LClause, n: int) -> None:
        if self.bot or not (self.lo <= n <= self.hi):
            return
        lo, hi, cells = self.lo, self.hi, self.cells
        rtail, ltail = self.rtail, self.ltail
        for pfx, name in cl.premises:
            if pfx == "":
                m = n
            elif pfx == XF:
                m = n + 1
            elif pfx == XP:
                m = n - 1
            elif pfx == GF:
                if not self.all_future(name, n):
                    return
                continue
            else:
                if not self.all_past(name, n):
                    return
                continue
            if lo <= m <= hi:
                if name not in cells[m - lo]:
                    return
            elif m > hi:
                if name not in rtail[(m - hi - 1) % len(rtail)]:
                    return
            elif name not in ltail[(lo - 1 - m) % len(ltail)]:
                return
        self.apply_conclusion(cl.conclusion, n)

    def fire_at(self, cl: LClause, n: int) -> bool:
        """Clause check without applying; used by the closure validator."""
        if all(self.premise_true(p, n) for p in cl.premises):
            if cl.conclusion is None:
                return not self.bot
            pfx, name = cl.conclusion
            if pfx == "":
                return not self.has(name, n)
            if pfx == XF:
                return not self.has(name, n + 1)
            if pfx == XP:
                return not self.has(name, n - 1)
            if pfx == GF:
                return not all(self.has(name, k) for k in self._probe_right(n))
            if pfx == GP:
                return not all(self.has(name, k) for k in self._probe_left(n))
        return False

    def _probe_right(self, n: int):
        yield from range(n + 1, self.hi + 2 * len(self.rtail) + 2)

    def _probe_left(self, n: int):
        yield from range(self.lo - 2 * len(self.ltail) - 2, n)

    # -- main loop

    def requeue_boundaries(self) -> None:
        for readers in self.local_index.values():
            for cl, delta in readers:
                if delta == 1:
                    self.queue.append((cl, self.hi))
                elif delta == -1:
                    self.queue.append((cl, self.lo))

    def saturate(self, seed: bool = True) -> None:
        if seed:
            # content only enters through adds (which enqueue dependants)
            # and the box-premise sweep below; clauses without premises
            # fire everywhere once
            for cl in self.ont.clauses:
                if not cl.premises:
                    for n in range(self.lo, self.hi + 1):
                        self.try_clause(cl, n)
                        if self.bot:
                            return
            self.requeue_boundaries()
        while True:
            while self.queue:
                if self.bot:
                    return
                cl, n = self.queue.pop()
                self.try_clause(cl, n)
            if self.bot:
                return
            before = self._size()
            for cl in self.global_clauses:
                for n in range(self.lo, self.hi + 1):
                    self.try_clause(cl, n)
            if self._size() == before and not self.queue:
                return

    def _size(self) -> int:
        return sum(len(c) for c in self.cells) + sum(len(c) for c in self.rtail) + sum(
            len(c) for c in self.ltail
        )


def _smallest_right_period(
    cells: list[set[str]], zone_start: int, zone_end: int, max_period: int
) -> Optional[int]:
    """Smallest p such that cells p-repeat on a sufficient suffix of
    [zone_start, zone_end] (list indices); needs two repetitions plus
    slack to avoid mistaking a stem for a cycle."""
    zone = zone_end - zone_start + 1
    for p in range(1, max_period + 1):
        need = 2 * p + max(p, 4)
        if need > zone:
            return None
        if all(cells[i] == cells[i + p] for i in range(zone_end - need + 1, zone_end - p + 1)):
            return p
    return None


def _smallest_left_period(
    cells: list[set[str]], zone_start: int, zone_end: int, max_period: int
) -> Optional[int]:
    """Mirror of the right detection, anchored at zone_start."""
    zone = zone_end - zone_start + 1
    for p in range(1, max_period + 1):
        need = 2 * p + max(p, 4)
        if need > zone:
            return None
        if all(cells[i] == cells[i + p] for i in range(zone_start, zone_start + need - p)):
            return p
    return None


def _reachable_clauses(ont: LTLOntology, data: list[tuple[LAtom, int]]) -> LTLOntology:
    """Drop clauses whose premises mention names that no derivation from
    this data can ever produce; sound because names enter the model only
    through the data or clause conclusions."""
    seeds = frozenset(name for (_, name), _ in data)
    key = ("reach", seeds)
    hit = ont._cache.get(key)
    if hit is not None:
        return hit
    reach = set(seeds)
    clauses = list(ont.clauses)
    changed = True
    while changed:
        changed = False
        for cl in clauses:
            if cl.conclusion and cl.conclusion[1] not in reach:
                if all(p[1] in reach for p in cl.premises):
                    reach.add(cl.conclusion[1])
                    changed = True
    kept = tuple(
        cl for cl in clauses if all(p[1] in reach for p in cl.premises)
    )
    sub = LTLOntology(kept, ont.names) if len(kept) < len(clauses) else ont
    ont._cache[key] = sub
    return sub


def _attempt(
    ont: LTLOntology, data: list[tuple[LAtom, int]], margin: int
) -> Optional[PeriodicTrace]:
    if data:
        dmin = min(n for _, n in data)
        dmax = max(n for _, n in data)
    else:
        dmin = dmax = 0
    lo, hi = dmin - margin, dmax + margin
    slack = max(2, margin // 4)
    t_lo, t_hi = lo + slack, hi - slack  # trusted zone: clear of frontier losses
    max_period = max(1, t_hi - dmax)

    b = _Builder(ont, lo, hi)
    for (pfx, name), n in data:
        if pfx == "":
            b.add(name, n)
        elif pfx == XF:
            b.add(name, n + 1)
        elif pfx == XP:
            b.add(name, n - 1)
        elif pfx == GF:
            b.flood_right(name, n + 1)
        elif pfx == GP:
            b.flood_left(name, n - 1)
        else:
            raise LTLError(f"unknown prefix {pfx!r} in data")

    def bot_trace() -> PeriodicTrace:
        return PeriodicTrace(
            lo,
            hi,
            tuple(frozenset(c) for c in b.cells),
            tuple(frozenset(c) for c in b.ltail),
            tuple(frozenset(c) for c in b.rtail),
            True,
            ont.names,
        )

    rounds = 8 + len(ont.names) * (hi - lo + 1)
    first = True
    for _ in range(rounds):
        b.saturate(seed=first)
        first = False
        if b.bot:
            return bot_trace()
        p_r = _smallest_right_period(b.cells, dmax + 1 - lo, t_hi - lo, max_period)
        p_l = _smallest_left_period(b.cells, t_lo - lo, dmin - 1 - lo, max_period)
        if p_r is None or p_l is None:
            return None
        # tails anchored at the raw edges, with content taken from the
        # trusted zone at the congruent instant
        rtail = [
            set(b.cells[(t_hi - p_r + 1 + ((slack + j) % p_r)) - lo]) for j in range(p_r)
        ]
        ltail = [
            set(b.cells[(t_lo + ((-(slack + 1 + j)) % p_l)) - lo]) for j in range(p_l)
        ]
        if rtail == b.rtail and ltail == b.ltail:
            break
        b.rtail = rtail
        b.ltail = ltail
        # adopted templates change box-premise truth (swept globally) and
        # the next-premise reads across the window edges
        b.requeue_boundaries()
    else:
        raise PeriodSearchError("trace adoption loop did not converge")

    # keep only the trusted zone; tails re-anchored at its edges
    cells = tuple(frozenset(b.cells[n - lo]) for n in range(t_lo, t_hi + 1))
    rtail_f = tuple(frozenset(b.cells[(t_hi - p_r + 1 + (j % p_r)) - lo]) for j in range(p_r))
    ltail_f = tuple(frozenset(b.cells[(t_lo + ((-(1 + j)) % p_l)) - lo]) for j in range(p_l))
    trace = PeriodicTrace(t_lo, t_hi, cells, ltail_f, rtail_f, False, ont.names)

    # closure validation: saturation already closed the window, so only
    # rule firings at tail positions (two periods out) can be missing
    checker = _Builder(ont, t_lo, t_hi)
    checker.cells = [set(c) for c in cells]
    checker.ltail = [set(c) for c in ltail_f]
    checker.rtail = [set(c) for c in rtail_f]
    ring = list(range(t_lo - 2 * p_l, t_lo)) + list(range(t_hi + 1, t_hi + 2 * p_r + 1))
    for cl in ont.clauses:
        for n in ring:
            if checker.fire_at(cl, n):
                return None
    if not _extension_probe(ont, data, trace, p_l, p_r):
        return None
    return trace


def _extension_probe(
    ont: LTLOntology,
    data: list[tuple[LAtom, int]],
    trace: PeriodicTrace,
    p_l: int,
    p_r: int,
) -> bool:
    """Erase a buffer of two periods beyond each window edge, keep the
    periodic claim beyond it, re-saturate, and require the buffer to be
    re-derived exactly; a template that cannot regenerate its own
    continuation is rejected."""
    buf_l = max(2, 2 * p_l)
    buf_r = max(2, 2 * p_r)
    probe_l = 2 * buf_l
    probe_r = 2 * buf_r
    lo2, hi2 = trace.lo - probe_l, trace.hi + probe_r
    erased = list(range(trace.hi + 1, trace.hi + buf_r + 1)) + list(
        range(trace.lo - buf_l, trace.lo)
    )
    b = _Builder(ont, lo2, hi2)
    for n in range(lo2, hi2 + 1):
        if n not in erased:
            b.cells[n - lo2] = set(trace.names_at(n))
    b.ltail = [set(trace.names_at(lo2 - 1 - j)) for j in range(p_l)]
    b.rtail = [set(trace.names_at(hi2 + 1 + j)) for j in range(p_r)]
    for atom, n in data:  # data floods must cover the fresh cells too
        b.apply_conclusion(atom, n)
    seed_positions = erased + [
        trace.lo,
        trace.hi,
        trace.hi + buf_r + 1,
        trace.lo - buf_l - 1,
    ]
    for cl in ont.clauses:
        for n in seed_positions:
            b.try_clause(cl, n)
            if b.bot:
                return False
    # flood conclusions elsewhere must reach the fresh cells too
    for cl in ont.clauses:
        if cl.conclusion and cl.conclusion[0] in GLOBAL_PREFIXES:
            for n in range(lo2, hi2 + 1):
                b.try_clause(cl, n)
    b.requeue_boundaries()
    b.saturate(seed=False)
    if b.bot:
        return False
    for n in erased + list(range(trace.lo, trace.hi + 1)):
        if b.cells[n - lo2] != set(trace.names_at(n)):
            return False
    return True


def canonical_trace(
    ont: LTLOntology, data: Iterable[tuple[LAtom, int]], *, max_margin: int = 4096
) -> PeriodicTrace:
    """Least model of (ont, data) as a periodic trace.

    Saturates a finite window, detects the repeating shape beyond the
    data, and accepts only if the shape is closed under all clauses and
    stable under widening the window (the computed trace at twice the
    margin describes the same function on Z).
    """
    data = [((pfx, name), n) for (pfx, name), n in data]
    key = ("trace", frozenset(data))
    cached = ont._cache.get(key)
    if cached is not None:
        return cached
    pruned = _reachable_clauses(ont, data)
    margin = 12
    while margin <= max_margin:
        trace = _attempt(pruned, data, margin)
        if trace is not None:
            if not trace.bot:
                trace.alphabet = ont.names
            ont._cache[key] = trace
            return trace
        margin *= 2
    raise PeriodSearchError(
        f"no stable periodic trace within margin {max_margin} (alphabet {len(ont.names)})"
    )


def holds_at(trace: PeriodicTrace, atom: LAtom, n: int) -> bool:
    if trace.bot:
        return True
    return trace.holds(atom, n)


ALL_SHIFTS = PeriodicSet.all()


def entails_shift(ont: LTLOntology, seed: LAtom, target: LAtom) -> PeriodicSet:
    """{k : ont entails seed <= (next^k) target}, from the canonical
    trace of the single fact seed(0).  Inconsistent seeds yield all of Z."""
    key = ("shift", seed, target)
    cached = ont._cache.get(key)
    if cached is not None:
        return cached
    trace = canonical_trace(ont, [(seed, 0)])
    if trace.bot:
        result = ALL_SHIFTS
    else:
        result = trace.atom_set(target)
    ont._cache[key] = result
    return result


def period_params(ont: LTLOntology) -> tuple[int, int]:
    """Uniform (stem, period) verified over all single-atom seeds."""
    cached = ont._cache.get("period_params")
    if cached is not None:
        return cached
    s = 1
    p = 1
    for name in sorted(ont.names):
        trace = canonical_trace(ont, [(("", name), 0)])
        if trace.bot:
            continue
        s_left, s_right = trace.stems()
        s = max(s, s_right, -s_left)
        p = _lcm(p, _lcm(trace.left_period, trace.right_period))
    ont._cache["period_params"] = (s, p)
    return s, p


# ---------------------------------------------------------------------------
# Positive temporal queries over traces


def truth_set(
    query: PositiveQuery,
    leaf: Callable[[PositiveQuery], PeriodicSet],
) -> PeriodicSet:
    """Instants where a positive temporal query holds, with atomic leaves
    (names, roles, existentials) resolved by ``leaf``."""
    if isinstance(query, PQTop):
        return PeriodicSet.all()
    if isinstance(query, (PQName, PQRole, PQExists)):
        return leaf(query)
    if isinstance(query, PQAnd):
        return truth_set(query.left, leaf).intersect(truth_set(query.right, leaf))
    if isinstance(query, PQOr):
        return truth_set(query.left, leaf).union(truth_set(query.right, leaf))
    if isinstance(query, PQOp):
        sub = truth_set(query.sub, leaf)
        if query.op == XF:
            return sub.shift(-1)
        if query.op == XP:
            return sub.shift(1)
        if query.op == "DF":
            return set_exists_future(sub)
        if query.op == "DP":
            return set_exists_past(sub)
        if query.op == GF:
            return set_all_future(sub)
        if query.op == GP:
            return set_all_past(sub)
        raise LTLError(f"unknown operator {query.op}")
    if isinstance(query, PQUntil):
        return set_until(truth_set(query.left, leaf), truth_set(query.right, leaf))
    if isinstance(query, PQSince):
        return set_since(truth_set(query.left, leaf), truth_set(query.right, leaf))
    raise LTLError(f"unsupported query node {query!r}")
