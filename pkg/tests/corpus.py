"""Shared corpus: the worked examples used across the test suite."""

from __future__ import annotations

from temporalite.model import (
    Concept,
    Exists,
    GF,
    GP,
    Inclusion,
    PQAnd,
    PQExists,
    PQName,
    PQOp,
    PQOr,
    PQRole,
    PQTop,
    Role,
    Term,
    XF,
    XP,
    abox,
    normalize_ontology,
    ontology,
)


def C(name):
    return Term((), Concept(name))


def Cp(op, name):
    return Term((op,), Concept(name))


def E(key, inv=False):
    return Term((), Exists(Role(key, inv)))


def Ep(op, key, inv=False):
    return Term((op,), Exists(Role(key, inv)))


def R(key, inv=False):
    return Term((), Role(key, inv))


def Rp(*ops_key):
    *ops, key = ops_key
    inv = key.endswith("-")
    base = key[:-1] if inv else key
    return Term(tuple(ops), Role(base, inv))


def ex1():
    """T = {A <= E P}, R = {P <= X_F Q}; kappa = E P.(X_F E Q-.B),
    rho = P & X_F Q."""
    o = normalize_ontology(
        ontology(
            tbox=[Inclusion((C("A"),), (E("P"),))],
            rbox=[Inclusion((R("P"),), (Rp(XF, "Q"),))],
        )
    )
    kappa = PQExists(Role("P"), PQOp(XF, PQExists(Role("Q", True), PQName("B"))))
    rho = PQAnd(PQRole(Role("P")), PQOp(XF, PQRole(Role("Q"))))
    a1 = abox(concepts=[("B", "c", 1)], roles=[("P", "a", "b", 0), ("Q", "c", "b", 1)])
    a2 = abox(concepts=[("B", "a", 1)], roles=[("P", "a", "b", 0)])
    a3 = abox(concepts=[("A", "a", 0), ("B", "a", 1)])
    a4 = abox(roles=[("P", "a", "b", 0)])
    t_prime = normalize_ontology(
        ontology(
            tbox=[
                Inclusion((C("A"),), (E("P"),)),
                Inclusion((E("P", True),), (Ep(XF, "Q", True),)),
            ],
        )
    )
    return o, kappa, rho, a1, a2, a3, a4, t_prime


def ex_connexion():
    o = normalize_ontology(
        ontology(
            tbox=[Inclusion((C("B"),), (E("P"),)), Inclusion((E("Q"),), (C("A"),))],
            rbox=[Inclusion((R("P"),), (Rp(XF, "Q"),))],
        )
    )
    return o, PQName("A"), abox(concepts=[("B", "a", 0)])


def ex_shrub():
    o = normalize_ontology(
        ontology(
            tbox=[Inclusion((E("Q"),), (Cp(GP, "A"),))],
            rbox=[
                Inclusion((R("P"),), (Rp(GF, "P1"),)),
                Inclusion((R("T"),), (Rp(GF, "T1"),)),
                Inclusion((R("T1"),), (Rp(GF, "T2"),)),
                Inclusion((R("P1"), R("T2")), (R("Q"),)),
            ],
        )
    )
    return o, PQName("A"), abox(roles=[("T", "a", "b", 0), ("P", "a", "b", 1)])


def ex_phantoms():
    """T = {A <= X_F E P, E P- <= X_F X_F B, E Q <= E Q},
    R = {P <= X_P Q}; kappa = E Q.(D_F B)."""
    o = normalize_ontology(
        ontology(
            tbox=[
                Inclusion((C("A"),), (Ep(XF, "P"),)),
                Inclusion((E("P", True),), (Term((XF, XF), Concept("B")),)),
                Inclusion((E("Q"),), (E("Q"),)),
            ],
            rbox=[Inclusion((R("P"),), (Rp(XP, "Q"),))],
        )
    )
    kappa = PQExists(Role("Q"), PQOp("DF", PQName("B")))
    return o, kappa, abox(concepts=[("A", "a", 0), ("D", "a", 1)])


def ex_4():
    """T = {E R <= E S}; R = {S <= G_P T, S <= G_F G_F G_F P,
    G_P G_P G_P T & G_F P <= R}; query A & E S."""
    o = normalize_ontology(
        ontology(
            tbox=[Inclusion((E("R"),), (E("S"),))],
            rbox=[
                Inclusion((R("S"),), (Rp(GP, "T"),)),
                Inclusion((R("S"),), (Term((GF, GF, GF), Role("P")),)),
                Inclusion((Term((GP, GP, GP), Role("T")), Rp(GF, "P")), (R("R"),)),
            ],
        )
    )
    query = PQAnd(PQName("A"), PQExists(Role("S"), PQTop()))
    return o, query


def ex_4_abox(n: int):
    return abox(concepts=[("A", "a", n)], roles=[("S", "a", "b", 0)])


def ex_canon():
    o = normalize_ontology(
        ontology(
            tbox=[
                Inclusion((C("A"),), (Ep(GF, "P"),)),
                Inclusion((E("S", True),), (E("T"),)),
                Inclusion((E("T", True),), (C("A"),)),
            ],
            rbox=[
                Inclusion((R("P"),), (Rp(XF, "R"),)),
                Inclusion((R("R"),), (Rp(XF, "R"),)),
                Inclusion((Rp(GF, "R"),), (R("S"),)),
            ],
        )
    )
    return o, abox(concepts=[("A", "a", 0)])


def ex_kdagger():
    """O = {E Q & G_F A <= bot, top <= A | E P, P- <= X_F Q}."""
    o = normalize_ontology(
        ontology(
            tbox=[
                Inclusion((E("Q"), Ep(GF, "A")), ()),
                Inclusion((), (C("A"), E("P"))),
            ],
            rbox=[Inclusion((R("P", True),), (Rp(XF, "Q"),))],
        )
    )
    return o, abox(roles=[("Q", "a", "b", 0)])


def prime_cycle():
    rbox = [
        Inclusion((R("P"),), (R("R0"),)),
        Inclusion((R("R0"),), (Rp(XF, "R1"),)),
        Inclusion((R("R1"),), (Rp(XF, "R0"),)),
        Inclusion((R("R1"),), (R("Q"),)),
        Inclusion((R("P"),), (R("Q0"),)),
        Inclusion((R("Q0"),), (Rp(XF, "Q1"),)),
        Inclusion((R("Q1"),), (Rp(XF, "Q2"),)),
        Inclusion((R("Q2"),), (Rp(XF, "Q0"),)),
        Inclusion((R("Q1"),), (R("Q"),)),
        Inclusion((R("Q2"),), (R("Q"),)),
        Inclusion((R("P"),), (R("Q"),)),
        Inclusion((R("P"),), (Rp(GP, "Q"),)),
    ]
    o = normalize_ontology(ontology(rbox=rbox))
    return o, abox(roles=[("P", "a", "b", 0)])


def thm_unexpected():
    """Box-only Horn ontology encoding parity through role inclusions."""
    tbox = [Inclusion((C("B"),), (E("S0"),))]
    for k in (0, 1):
        tbox.append(Inclusion((E(f"R{k}"), C("A0")), (E(f"S{k}"),)))
        tbox.append(Inclusion((E(f"R{k}"), C("A1")), (E(f"S{1 - k}"),)))
    rbox = []
    for k in (0, 1):
        rbox.append(Inclusion((R(f"S{k}"),), (R(f"F{k}"),)))
        rbox.append(Inclusion((R(f"S{k}"),), (Rp(GF, f"F{k}"),)))
        rbox.append(Inclusion((R(f"S{k}"),), (Rp(GP, f"P{k}"),)))
        rbox.append(Inclusion((Rp(GF, f"F{k}"), R(f"P{k}")), (R(f"R{k}"),)))
    o = normalize_ontology(ontology(tbox=tbox, rbox=rbox))
    return o, PQExists(Role("S0"), PQTop())


def thm_unexpected_abox(word: tuple[int, ...]):
    n = len(word)
    concepts = [("B", "a", n)] + [(f"A{e}", "a", i) for i, e in enumerate(word)]
    return abox(concepts=concepts)


def parity_ltl():
    """Next-only Horn ontology deciding the parity of the 1s in a word."""
    tbox = []
    for k in (0, 1):
        tbox.append(Inclusion((Cp(XP, f"B{k}"), C("A0")), (C(f"B{k}"),)))
        tbox.append(Inclusion((Cp(XP, f"B{1 - k}"), C("A1")), (C(f"B{k}"),)))
    return normalize_ontology(ontology(tbox=tbox))


def parity_abox(word: tuple[int, ...]):
    concepts = [("B0", "a", 0)] + [
        (f"A{e}", "a", i + 1) for i, e in enumerate(word)
    ]
    return abox(concepts=concepts)


def publishing():
    """Convexity of a role, domain/range links, used by the epistemic
    tests."""
    o = normalize_ontology(
        ontology(
            tbox=[
                Inclusion((E("uST"),), (C("US"),)),
                Inclusion((C("US"),), (E("uST"),)),
                Inclusion((E("pIn"),), (C("Pub"),)),
                Inclusion((C("Pub"),), (E("pIn"),)),
            ],
            rbox=[
                Inclusion((Term(("DP",), Role("uST")), Term(("DF",), Role("uST"))), (R("uST"),)),
            ],
        )
    )
    return o
