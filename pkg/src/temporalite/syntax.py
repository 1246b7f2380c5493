"""Concrete syntax: ontologies, data, queries, and formula rendering.

Ontology files are line-oriented: one inclusion per line, operators
X_F X_P G_F G_P D_F D_P, inverse role P-, existential `E P`, `&` and `|`
for the connectives, `<=` between the sides, `top`/`bot`, comments `#`.
Data files are CSV (kind,name,subject,object,timestamp) or JSON lines.
Queries use E[S](...) for qualified existentials and infix U/S; the
epistemic layer adds quantifiers and implication over query atoms.
Rewritings render to s-expressions (round-trippable) and to an indented
pretty form.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from . import fof
from .model import (
    ABox,
    Concept,
    EAnd,
    EAtom,
    EImplies,
    ELess,
    ENot,
    EOr,
    EQuant,
    EpistemicFormula,
    Exists,
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
    RESERVED,
    Role,
    Term,
    abox,
    ontology,
)

OPS = {"X_F": "XF", "X_P": "XP", "G_F": "GF", "G_P": "GP", "D_F": "DF", "D_P": "DP"}
OPS_BACK = {v: k for k, v in OPS.items()}


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col_start: int
    col_end: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col_start}-{self.col_end}"


class ParseError(ModelError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.span = span


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*-?")

RESERVED_VARS = re.compile(r"^(x|y|t|x0|t0|m0|u[0-9]+|z[0-9]+)$")


class _Lines:
    def __init__(self, text: str, filename: str):
        self.filename = filename
        self.lines = text.splitlines()


def _tokenize_line(line: str, lineno: int, filename: str):
    tokens = []
    i = 0
    while i < len(line):
        ch = line[i]
        if ch in " \t":
            i += 1
            continue
        if ch == "#":
            break
        if line.startswith("<=", i):
            tokens.append(("<=", i))
            i += 2
            continue
        if ch in "&|()":
            tokens.append((ch, i))
            i += 1
            continue
        m = _IDENT.match(line, i)
        if m:
            tokens.append((m.group(0), i))
            i = m.end()
            continue
        raise ParseError(
            f"unexpected character {ch!r}", SourceSpan(filename, lineno, i + 1, i + 2)
        )
    return tokens


def _parse_term(tokens, pos, lineno, filename, line_len) -> tuple[Term, int]:
    prefixes: list[str] = []
    while pos < len(tokens) and tokens[pos][0] in OPS:
        prefixes.append(OPS[tokens[pos][0]])
        pos += 1
    if pos >= len(tokens):
        raise ParseError(
            "term expected", SourceSpan(filename, lineno, line_len, line_len + 1)
        )
    tok, col = tokens[pos]
    if tok == "E":
        pos += 1
        if pos >= len(tokens):
            raise ParseError(
                "role name expected after E",
                SourceSpan(filename, lineno, col + 1, col + 2),
            )
        rtok, rcol = tokens[pos]
        role = _parse_role_token(rtok, lineno, rcol, filename)
        return Term(tuple(prefixes), Exists(role)), pos + 1
    if RESERVED in tok:
        raise ParseError(
            f"reserved marker in identifier {tok!r}",
            SourceSpan(filename, lineno, col + 1, col + 1 + len(tok)),
        )
    if tok.endswith("-"):
        return Term(tuple(prefixes), Role(tok[:-1], True)), pos + 1
    return Term(tuple(prefixes), Concept(tok)), pos + 1


def _parse_role_token(tok: str, lineno: int, col: int, filename: str) -> Role:
    if RESERVED in tok:
        raise ParseError(
            f"reserved marker in identifier {tok!r}",
            SourceSpan(filename, lineno, col + 1, col + 1 + len(tok)),
        )
    if tok.endswith("-"):
        return Role(tok[:-1], True)
    return Role(tok)


def parse_ontology(text: str, filename: str = "<ontology>") -> Ontology:
    """Parse the line-oriented inclusion syntax into a raw ontology.

    Concept terms on a line must not mix with role terms; roles are
    recognised by occurring bare or under E (existential): a line like
    `P <= X_F Q` is a role inclusion because neither side mentions a
    concept construct.  Every line must contain `<=`.
    """
    tbox: list[Inclusion] = []
    rbox: list[Inclusion] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(raw, lineno, filename)
        if not tokens:
            continue
        arrow = [i for i, (tok, _) in enumerate(tokens) if tok == "<="]
        if len(arrow) != 1:
            raise ParseError(
                "exactly one <= expected", SourceSpan(filename, lineno, 1, len(raw) + 1)
            )
        cut = arrow[0]

        def side(toks, conjunctive: bool) -> list[Term]:
            if [t for t, _ in toks] == ["top"] or [t for t, _ in toks] == ["bot"]:
                return []
            terms = []
            pos = 0
            sep = "&" if conjunctive else "|"
            while pos < len(toks):
                term, pos = _parse_term(toks, pos, lineno, filename, len(raw))
                terms.append(term)
                if pos < len(toks):
                    if toks[pos][0] != sep:
                        raise ParseError(
                            f"expected {sep!r}",
                            SourceSpan(filename, lineno, toks[pos][1] + 1, toks[pos][1] + 2),
                        )
                    pos += 1
            return terms

        premises = side(tokens[:cut], True)
        conclusions = side(tokens[cut + 1 :], False)
        terms = premises + conclusions
        if not terms:
            raise ParseError(
                "empty inclusion", SourceSpan(filename, lineno, 1, len(raw) + 1)
            )
        kinds = {t.is_role for t in terms}
        if len(kinds) > 1:
            raise ParseError(
                "inclusion mixes concept and role terms",
                SourceSpan(filename, lineno, 1, len(raw) + 1),
            )
        inc = Inclusion(tuple(premises), tuple(conclusions))
        (rbox if inc.is_role else tbox).append(inc)
    return ontology(tbox, rbox)


def render_ontology(o: Ontology) -> str:
    return o.canonical_text() + "\n"


def parse_abox(text: str, fmt: str = "csv", filename: str = "<data>") -> ABox:
    """CSV columns: kind (C or R), name, subject, object-or-empty,
    timestamp.  JSON lines: objects with the same fields."""
    concepts = set()
    roles = set()
    rows: Iterable[tuple[int, list[str]]]
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        rows = [(i + 1, row) for i, row in enumerate(reader) if row and any(c.strip() for c in row)]
    elif fmt == "jsonl":
        rows = []
        for i, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            rows.append(
                (
                    i,
                    [
                        obj.get("kind", ""),
                        obj.get("name", ""),
                        obj.get("subject", ""),
                        obj.get("object", "") or "",
                        str(obj.get("timestamp", "")),
                    ],
                )
            )
    else:
        raise ModelError(f"unknown data format {fmt!r}")
    for lineno, row in rows:
        span = SourceSpan(filename, lineno, 1, 1 + len(",".join(row)))
        if len(row) != 5:
            raise ParseError("expected 5 columns: kind,name,subject,object,timestamp", span)
        kind, name, subj, obj, stamp = (c.strip() for c in row)
        if RESERVED in name or RESERVED in subj or RESERVED in obj:
            raise ParseError("reserved marker in identifier", span)
        try:
            n = int(stamp)
        except ValueError:
            raise ParseError(f"bad timestamp {stamp!r}", span) from None
        if kind == "C":
            if obj:
                raise ParseError("concept atom with an object column", span)
            concepts.add((name, subj, n))
        elif kind == "R":
            if not obj:
                raise ParseError("role atom missing its object", span)
            roles.add((name, subj, obj, n))
        else:
            raise ParseError(f"kind must be C or R, got {kind!r}", span)
    if not concepts and not roles:
        raise ParseError("empty data instance", SourceSpan(filename, 1, 1, 1))
    return abox(concepts, roles)


def render_abox(a: ABox) -> str:
    lines = []
    for name, ind, n in sorted(a.concept_atoms):
        lines.append(f"C,{name},{ind},,{n}")
    for base, x, y, n in sorted(a.role_atoms):
        lines.append(f"R,{base},{x},{y},{n}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Queries


class _QParser:
    """Recursive descent over the positive-query grammar with infix
    & | U S (tightest to loosest: prefix ops, &, |, U/S)."""

    def __init__(self, text: str, filename: str):
        self.text = text
        self.filename = filename
        self.pos = 0

    def error(self, message: str) -> ParseError:
        return ParseError(message, SourceSpan(self.filename, 1, self.pos + 1, self.pos + 2))

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\n":
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos :][:1]

    def eat(self, tok: str) -> None:
        self.skip()
        if not self.text.startswith(tok, self.pos):
            raise self.error(f"expected {tok!r}")
        self.pos += len(tok)

    def ident(self) -> str:
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise self.error("identifier expected")
        if RESERVED in m.group(0):
            raise self.error("reserved marker in identifier")
        self.pos = m.end()
        return m.group(0)

    def query(self) -> PositiveQuery:
        left = self.disjunct()
        self.skip()
        if self.peek() in ("U", "S") and not _IDENT.match(self.text, self.pos + 1):
            op = self.text[self.pos]
            self.pos += 1
            right = self.query()
            return PQUntil(left, right) if op == "U" else PQSince(left, right)
        return left

    def disjunct(self) -> PositiveQuery:
        left = self.conjunct()
        while self.peek() == "|":
            self.eat("|")
            left = PQOr(left, self.conjunct())
        return left

    def conjunct(self) -> PositiveQuery:
        left = self.atom()
        while self.peek() == "&":
            self.eat("&")
            left = PQAnd(left, self.atom())
        return left

    def atom(self) -> PositiveQuery:
        self.skip()
        for text_op, op in OPS.items():
            if self.text.startswith(text_op, self.pos):
                self.pos += len(text_op)
                return PQOp(op, self.atom())
        if self.peek() == "(":
            self.eat("(")
            q = self.query()
            self.eat(")")
            return q
        if self.text.startswith("E[", self.pos):
            self.pos += 2
            name = self.ident()
            role = Role(name[:-1], True) if name.endswith("-") else Role(name)
            self.eat("]")
            self.eat("(")
            sub = self.query()
            self.eat(")")
            return PQExists(role, sub)
        if self.text.startswith("top", self.pos) and not _IDENT.match(
            self.text, self.pos + 3
        ):
            self.pos += 3
            return PQTop()
        name = self.ident()
        if name.endswith("-"):
            return PQRole(Role(name[:-1], True))
        return PQName(name)


def parse_query(text: str, filename: str = "<query>") -> PositiveQuery:
    p = _QParser(text, filename)
    q = p.query()
    p.skip()
    if p.pos != len(p.text):
        raise p.error("trailing input after query")
    # a bare name is a concept unless it was declared with E[...] or used
    # as a role leaf elsewhere in the same query; role atoms inside a
    # concept query position are rejected at rewrite time
    return q


def render_query(q: PositiveQuery) -> str:
    if isinstance(q, PQTop):
        return "top"
    if isinstance(q, PQName):
        return q.name
    if isinstance(q, PQRole):
        return str(q.role)
    if isinstance(q, PQExists):
        return f"E[{q.role}]({render_query(q.sub)})"
    if isinstance(q, PQAnd):
        return f"({render_query(q.left)} & {render_query(q.right)})"
    if isinstance(q, PQOr):
        return f"({render_query(q.left)} | {render_query(q.right)})"
    if isinstance(q, PQOp):
        return f"{OPS_BACK[q.op]} ({render_query(q.sub)})"
    if isinstance(q, PQUntil):
        return f"({render_query(q.left)} U {render_query(q.right)})"
    if isinstance(q, PQSince):
        return f"({render_query(q.left)} S {render_query(q.right)})"
    raise ModelError(f"unknown query node {q!r}")


# Epistemic layer: forall x. / exists t. / -> / ~ / < over query atoms
# k(x,t) and r(x,y,t).


class _EParser(_QParser):
    def formula(self) -> EpistemicFormula:
        return self.implication()

    def implication(self) -> EpistemicFormula:
        left = self.disj()
        self.skip()
        if self.text.startswith("->", self.pos):
            self.pos += 2
            return EImplies(left, self.implication())
        return left

    def disj(self) -> EpistemicFormula:
        parts = [self.conj()]
        while self.peek() == "|":
            self.eat("|")
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else EOr(tuple(parts))

    def conj(self) -> EpistemicFormula:
        parts = [self.unary()]
        while self.peek() == "&":
            self.eat("&")
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else EAnd(tuple(parts))

    def unary(self) -> EpistemicFormula:
        self.skip()
        if self.peek() == "~":
            self.eat("~")
            return ENot(self.unary())
        for kw, kind in (("forall", "forall"), ("exists", "exists")):
            if self.text.startswith(kw + " ", self.pos) or self.text.startswith(
                kw + "\t", self.pos
            ):
                self.pos += len(kw)
                var = self.ident()
                if RESERVED_VARS.match(var):
                    raise self.error(f"variable name {var!r} is reserved")
                self.eat(":")
                sort = self.ident()
                if sort not in ("ind", "time"):
                    raise self.error("sort must be ind or time")
                self.eat(".")
                return EQuant(kind, var, sort, self.unary())
        if self.peek() == "(":
            save = self.pos
            self.eat("(")
            inner = self.formula()
            self.eat(")")
            return inner
        return self.atom_e()

    def atom_e(self) -> EpistemicFormula:
        save = self.pos
        first = self.ident()
        self.skip()
        if self.text.startswith("<", self.pos):
            self.eat("<")
            second = self.ident()
            for v in (first, second):
                if RESERVED_VARS.match(v):
                    raise self.error(f"variable name {v!r} is reserved")
            return ELess(first, second)
        # query atom: rewind and parse the query expression up to '(['
        self.pos = save
        q = _QParser.atom(self)
        self.eat("(")
        args = [self.ident()]
        while self.peek() == ",":
            self.eat(",")
            args.append(self.ident())
        self.eat(")")
        for v in args:
            if RESERVED_VARS.match(v):
                raise self.error(f"variable name {v!r} is reserved")
        from .model import query_is_role

        want = 3 if query_is_role(q) else 2
        if len(args) != want:
            raise self.error(f"query atom needs {want} arguments")
        return EAtom(q, tuple(args))


def parse_epistemic(text: str, filename: str = "<query>") -> EpistemicFormula:
    p = _EParser(text, filename)
    f = p.formula()
    p.skip()
    if p.pos != len(p.text):
        raise p.error("trailing input after formula")
    return f


def parse_query_or_epistemic(text: str, filename: str = "<query>"):
    """Positive query if it parses as one and covers the whole input;
    otherwise the epistemic grammar."""
    try:
        return parse_query(text, filename)
    except ModelError:
        return parse_epistemic(text, filename)


# ---------------------------------------------------------------------------
# FO formulas: s-expressions and a pretty infix form


def _render_tterm(t: fof.TempTerm) -> str:
    if isinstance(t, fof.TVar):
        return t.name
    if isinstance(t, fof.TMax):
        return "(max)"
    if isinstance(t, fof.TMin):
        return "(min)"
    if isinstance(t, fof.TShift):
        return f"(+ {_render_tterm(t.base)} {t.delta})"
    raise ModelError(f"bad temporal term {t!r}")


def render_formula(f: fof.Formula) -> str:
    """Canonical s-expression; parse_formula inverts it."""
    if isinstance(f, fof.FTrue):
        return "(true)"
    if isinstance(f, fof.FFalse):
        return "(false)"
    if isinstance(f, fof.CAtom):
        return f"(c {f.name} {f.x} {_render_tterm(f.t)})"
    if isinstance(f, fof.RAtom):
        return f"(r {f.name} {f.x} {f.y} {_render_tterm(f.t)})"
    if isinstance(f, fof.Less):
        return f"(lt {_render_tterm(f.a)} {_render_tterm(f.b)})"
    if isinstance(f, fof.DiffEq):
        return f"(deq {_render_tterm(f.a)} {_render_tterm(f.b)} {f.r})"
    if isinstance(f, fof.DiffGt):
        return f"(dgt {_render_tterm(f.a)} {_render_tterm(f.b)} {f.r})"
    if isinstance(f, fof.DiffIn):
        return f"(din {_render_tterm(f.a)} {_render_tterm(f.b)} {f.r} {f.p})"
    if isinstance(f, fof.Not):
        return f"(not {render_formula(f.sub)})"
    if isinstance(f, fof.And):
        return "(and " + " ".join(render_formula(p) for p in f.parts) + ")"
    if isinstance(f, fof.Or):
        return "(or " + " ".join(render_formula(p) for p in f.parts) + ")"
    if isinstance(f, fof.Exists):
        return f"(exists ({f.var} {f.sort}) {render_formula(f.sub)})"
    if isinstance(f, fof.Forall):
        return f"(forall ({f.var} {f.sort}) {render_formula(f.sub)})"
    if isinstance(f, fof.RPR):
        defs = " ".join(
            f"({d.name} ({' '.join(d.params)}) {d.tvar} {render_formula(d.theta)})"
            for d in f.defs
        )
        return f"(rec ({defs}) {render_formula(f.body)})"
    if isinstance(f, fof.RPRAtom):
        args = " ".join(f.args)
        return f"(ref {f.name} ({args}) {_render_tterm(f.t)})"
    if isinstance(f, fof.OracleAtom):
        payload = _render_payload(f.tag, f.payload)
        args = " ".join(f.ivars)
        t = "" if f.t is None else " " + _render_tterm(f.t)
        return f"(oracle {f.tag} {payload} ({args}){t})"
    raise ModelError(f"unknown formula node {f!r}")


def _render_payload(tag: str, payload) -> str:
    if tag == "LTL_CONCEPT":
        return json.dumps(payload)
    if tag == "LTL_CONCEPT_PHANTOM":
        name, k = payload
        return json.dumps([name, k])
    if tag == "ROLE_Q":
        return json.dumps(render_query(payload))
    if tag == "ROLE_Q_PHANTOM":
        q, k = payload
        return json.dumps([render_query(q), k])
    raise ModelError(f"unknown oracle tag {tag!r}")


class _SExprParser:
    def __init__(self, text: str):
        self.tokens = re.findall(r"\(|\)|\"(?:[^\"\\]|\\.)*\"|[^\s()]+", text)
        self.pos = 0

    def parse(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        if tok == "(":
            items = []
            while self.tokens[self.pos] != ")":
                items.append(self.parse())
            self.pos += 1
            return items
        if tok.startswith('"'):
            return json.loads(tok)
        return tok


def _sx_tterm(sx) -> fof.TempTerm:
    if isinstance(sx, list):
        if sx == ["max"]:
            return fof.MAX
        if sx == ["min"]:
            return fof.MIN
        if sx[0] == "+":
            return fof.tshift(_sx_tterm(sx[1]), int(sx[2]))
        raise ModelError(f"bad temporal term {sx!r}")
    return fof.TVar(sx)


def parse_formula(text: str) -> fof.Formula:
    sx = _SExprParser(text).parse()
    return _sx_formula(sx)


def _sx_formula(sx) -> fof.Formula:
    head = sx[0]
    if head == "true":
        return fof.TRUE
    if head == "false":
        return fof.FALSE
    if head == "c":
        return fof.CAtom(sx[1], sx[2], _sx_tterm(sx[3]))
    if head == "r":
        return fof.RAtom(sx[1], sx[2], sx[3], _sx_tterm(sx[4]))
    if head == "lt":
        return fof.Less(_sx_tterm(sx[1]), _sx_tterm(sx[2]))
    if head == "deq":
        return fof.DiffEq(_sx_tterm(sx[1]), _sx_tterm(sx[2]), int(sx[3]))
    if head == "dgt":
        return fof.DiffGt(_sx_tterm(sx[1]), _sx_tterm(sx[2]), int(sx[3]))
    if head == "din":
        return fof.DiffIn(_sx_tterm(sx[1]), _sx_tterm(sx[2]), int(sx[3]), int(sx[4]))
    if head == "not":
        return fof.Not(_sx_formula(sx[1]))
    if head == "and":
        return fof.And(tuple(_sx_formula(p) for p in sx[1:]))
    if head == "or":
        return fof.Or(tuple(_sx_formula(p) for p in sx[1:]))
    if head in ("exists", "forall"):
        var, sort = sx[1]
        cls = fof.Exists if head == "exists" else fof.Forall
        return cls(var, sort, _sx_formula(sx[2]))
    if head == "rec":
        defs = tuple(
            fof.RPRDef(d[0], tuple(d[1]), d[2], _sx_formula(d[3])) for d in sx[1]
        )
        return fof.RPR(defs, _sx_formula(sx[2]))
    if head == "ref":
        return fof.RPRAtom(sx[1], tuple(sx[2]), _sx_tterm(sx[3]))
    if head == "oracle":
        tag = sx[1]
        payload_raw = sx[2]
        ivars = tuple(sx[3])
        t = _sx_tterm(sx[4]) if len(sx) > 4 else None
        payload = _parse_payload(tag, payload_raw)
        return fof.OracleAtom(tag, payload, ivars, t)
    raise ModelError(f"unknown s-expression head {head!r}")


def _parse_payload(tag: str, raw):
    if tag == "LTL_CONCEPT":
        return raw
    if tag == "LTL_CONCEPT_PHANTOM":
        name, k = raw
        return (name, int(k))
    if tag == "ROLE_Q":
        return parse_query(raw)
    if tag == "ROLE_Q_PHANTOM":
        q, k = raw
        return (parse_query(q), int(k))
    raise ModelError(f"unknown oracle tag {tag!r}")


def render_pretty(f: fof.Formula, indent: int = 0) -> str:
    """Human-oriented infix rendering; not meant to be parsed back."""
    pad = "  " * indent
    if isinstance(f, (fof.And, fof.Or)):
        sep = " &\n" if isinstance(f, fof.And) else " |\n"
        inner = sep.join(render_pretty(p, indent + 1) for p in f.parts)
        return f"{pad}(\n{inner}\n{pad})"
    if isinstance(f, fof.Not):
        return f"{pad}~{render_pretty(f.sub, 0).strip()}"
    if isinstance(f, (fof.Exists, fof.Forall)):
        q = "E" if isinstance(f, fof.Exists) else "A"
        return f"{pad}{q} {f.var}:{f.sort} .\n{render_pretty(f.sub, indent + 1)}"
    if isinstance(f, fof.RPR):
        defs = "\n".join(
            f"{pad}  {d.name}({', '.join(d.params)}, {d.tvar}) :=\n{render_pretty(d.theta, indent + 2)}"
            for d in f.defs
        )
        return f"{pad}[rec\n{defs}\n{pad}]\n{render_pretty(f.body, indent)}"
    return pad + _pretty_leaf(f)


def _pretty_leaf(f: fof.Formula) -> str:
    if isinstance(f, fof.FTrue):
        return "true"
    if isinstance(f, fof.FFalse):
        return "false"
    if isinstance(f, fof.CAtom):
        return f"{f.name}({f.x},{_render_tterm(f.t)})"
    if isinstance(f, fof.RAtom):
        return f"{f.name}({f.x},{f.y},{_render_tterm(f.t)})"
    if isinstance(f, fof.Less):
        return f"{_render_tterm(f.a)} < {_render_tterm(f.b)}"
    if isinstance(f, fof.DiffEq):
        return f"{_render_tterm(f.a)} - {_render_tterm(f.b)} = {f.r}"
    if isinstance(f, fof.DiffGt):
        return f"{_render_tterm(f.a)} - {_render_tterm(f.b)} > {f.r}"
    if isinstance(f, fof.DiffIn):
        return f"{_render_tterm(f.a)} - {_render_tterm(f.b)} in {f.r}+{f.p}N"
    if isinstance(f, fof.RPRAtom):
        return f"{f.name}({', '.join(f.args)}, {_render_tterm(f.t)})"
    if isinstance(f, fof.OracleAtom):
        args = ", ".join(f.ivars) + ("" if f.t is None else f", {_render_tterm(f.t)}")
        return f"[{f.tag} {_render_payload(f.tag, f.payload)}]({args})"
    return render_formula(f)


# ---------------------------------------------------------------------------
# FOLTL1 re-parser for the emitted encodings

_FOLTL_TOKEN = re.compile(r"\(|\)|<->|->|[&|~,.]|[A-Za-z0-9_$@-]+")
_FOLTL_PREFIX = {"G", "H", "F", "P", "X", "Y"}


class FOLTLParseError(ModelError):
    pass


def parse_foltl_line(line: str):
    """Parse one emitted conjunct into a nested tuple tree; raises on
    malformed input.  The tree shape is ("op", ...), ("atom", name,
    args), ("var", name)."""
    tokens = _FOLTL_TOKEN.findall(line)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: Optional[str] = None):
        nonlocal pos
        if pos >= len(tokens):
            raise FOLTLParseError(f"unexpected end of line: {line!r}")
        tok = tokens[pos]
        if expected is not None and tok != expected:
            raise FOLTLParseError(f"expected {expected!r} got {tok!r} in {line!r}")
        pos += 1
        return tok

    def formula():
        node = disj()
        while peek() in ("->", "<->"):
            op = take()
            node = (op, node, disj())
        return node

    def disj():
        node = conj()
        while peek() == "|":
            take()
            node = ("|", node, conj())
        return node

    def conj():
        node = unary()
        while peek() == "&":
            take()
            node = ("&", node, unary())
        return node

    def unary():
        tok = peek()
        if tok == "~":
            take()
            return ("~", unary())
        if tok in _FOLTL_PREFIX:
            take()
            return (tok, unary())
        if tok in ("A", "E"):
            take()
            var = take()
            take(".")
            return (tok, var, unary())
        if tok == "(":
            take()
            node = formula()
            take(")")
            return node
        if tok in ("true", "false"):
            take()
            return (tok,)
        name = take()
        if peek() == "(":
            take()
            args = [take()]
            while peek() == ",":
                take()
                args.append(take())
            take(")")
            return ("atom", name, tuple(args))
        return ("atom", name, ())

    out = formula()
    if pos != len(tokens):
        raise FOLTLParseError(f"trailing tokens in {line!r}")
    return out


def parse_foltl(text: str) -> list:
    return [parse_foltl_line(line) for line in text.splitlines() if line.strip()]
