import pytest

from qistk.closures import Closure
from qistk.quasi.oracle import OracleBudget, consistent, hintikka_refutes
from qistk.quasi.suitable import (
    concordant, fuse, phi_conjunction, suitable_epi, suitable_epi_types,
    suitable_next, suitable_next_types,
)
from qistk.quasi.types import (
    QPoint, QuasiError, StateCandidate, TypeSet, alpha_of, beta_of,
    coherence_check, enumerate_types,
)
from qistk.syntax import (
    And, Atom, Common, Know, Next, Not, Signature, Until, Var, free_variables,
    parse_formula, print_formula, spine_canon, spine_neg, to_core,
)

SIG2 = Signature(2, {"Av": 2, "Req": 2, "p": 0, "q": 0}, frozenset())
FORMULA_1 = "forall y . C ((forall z . Av(y, z)) U (exists x . Req(x, y)))"


def closure1():
    return Closure.of(parse_formula(FORMULA_1, SIG2), 2)


def table4_members(cl):
    phi_core = spine_canon(to_core(parse_formula(FORMULA_1, SIG2)))
    u = Until(parse_formula("forall z . Av(x0, z)", SIG2),
              spine_canon(to_core(parse_formula("exists x . Req(x, x0)", SIG2))))
    c = Common(u)
    ec = spine_canon(to_core(And(Know(1, c), Know(2, c))))
    pos = [phi_core, c, ec, Know(1, c), Know(2, c), u, u.left, spine_canon(u.right)]
    neg_next = [spine_canon(Next(spine_neg(m))) for m in pos]
    # the paper's type keeps X forall-z-Av positive and everything else
    # negated at the next step
    members = set(pos)
    for m, nn in zip(pos, neg_next):
        if m == u.left:
            members.add(Next(u.left))
        else:
            members.add(nn)
    return frozenset(members)


def test_table4_type_is_coherent():
    cl = closure1()
    t = table4_members(cl)
    assert len(t) == 16
    ok, why = coherence_check(t, (), cl)
    assert ok, why


def test_contradictory_pair_rejected():
    cl = Closure.of(Atom("p"), 1)
    members = frozenset({Atom("p"), Not(Atom("p")), Next(Atom("p")),
                         Next(Not(Atom("p")))})
    ok, why = coherence_check(members, (), cl)
    assert not ok and "contradictory" in why


def test_until_saturation_violation():
    phi = parse_formula("(p U q)", SIG2)
    cl = Closure.of(phi, 2)
    u, p, q = spine_canon(to_core(phi)), Atom("p"), Atom("q")
    members = {u, Not(p), Not(q), Next(u), Next(p), Next(q)}
    ok, why = coherence_check(frozenset(members), (), cl)
    assert not ok
    assert "until" in why


def test_member_outside_closure_raises():
    cl = Closure.of(Atom("p"), 1)
    with pytest.raises(QuasiError):
        coherence_check(frozenset({Atom("nope")}), (), cl)


def test_enumerate_types_single_atom():
    cl = Closure.of(Atom("p"), 1)
    types = list(enumerate_types(cl))
    assert len(types) == 4  # p and X p vary independently
    keys = {t.key() for t in types}
    assert len(keys) == 4


def test_enumerate_types_contains_table4():
    cl = closure1()
    want = table4_members(cl)
    found = any(t.members == want for t in enumerate_types(cl))
    assert found


def test_enumerate_types_no_duplicates():
    cl = Closure.of(parse_formula("(p U q)", SIG2), 2)
    types = list(enumerate_types(cl))
    assert len({t.key() for t in types}) == len(types)
    # p, q, Xp, Xq, XU vary; U is forced by the unfolding, and the lifted
    # one-directional rules cut Xq-without-XU and XU-without-support
    assert len(types) == 20


def test_alpha_beta_shapes():
    cl = Closure.of(Atom("p"), 1)
    t = next(iter(enumerate_types(cl)))
    cand = StateCandidate((), (t,))
    a = alpha_of(cand, cl)
    assert free_variables(a) == frozenset()
    b = beta_of(QPoint(cand, t), cl)
    assert isinstance(b, And)


def test_candidate_invariants():
    cl = Closure.of(parse_formula("(p U q)", SIG2), 2)
    types = list(enumerate_types(cl))
    t_p = next(t for t in types if t.has(Atom("p")))
    t_np = next(t for t in types if not t.has(Atom("p")))
    with pytest.raises(QuasiError):
        StateCandidate((), (t_p, t_np))  # 0-ary p is a sentence: must agree


def test_constant_map_must_point_inside():
    cl = Closure.of(Atom("p"), 1)
    types = list(enumerate_types(cl))
    with pytest.raises(QuasiError):
        StateCandidate((), (types[0],), ((("c1"), types[1]),))


# -- oracle ---------------------------------------------------------------------


def test_consistent_contradiction():
    gamma = parse_formula("(p & ~p)", SIG2)
    assert consistent(gamma, OracleBudget(), 2).verdict == "no"


def test_consistent_s5_clash():
    gamma = parse_formula("(K 1 p & Kd 1 ~p)", SIG2)
    # the related world needs both p (from K) and ~p
    assert consistent(gamma, OracleBudget(), 2).verdict == "no"


def test_consistent_until_conflict():
    gamma = parse_formula("((p U q) & (~p & ~q))", SIG2)
    assert consistent(gamma, OracleBudget(), 2).verdict == "no"


def test_consistent_yes_semantic_with_witness():
    gamma = parse_formula("(p & X ~p)", SIG2)
    budget = OracleBudget(tier="bounded-semantic", states_max=2, domain_max=1)
    v = consistent(gamma, budget, 1)
    assert v.verdict == "yes" and v.witness is not None


def test_consistent_alpha_of_simple_candidate():
    cl = Closure.of(Atom("p"), 1)
    t = next(t for t in enumerate_types(cl)
             if t.has(Atom("p")) and t.has(Next(Atom("p"))))
    cand = StateCandidate((), (t,))
    budget = OracleBudget(tier="bounded-semantic", states_max=2, domain_max=1)
    assert consistent(alpha_of(cand, cl), budget, 1).verdict == "yes"


def test_hintikka_does_not_refute_satisfiable():
    gamma = parse_formula("(p U q)", SIG2)
    assert not hintikka_refutes(gamma, 2, OracleBudget())


# -- suitability ------------------------------------------------------------------


def test_table4_successor_requires_negated_phi():
    cl = closure1()
    want = table4_members(cl)
    t = next(t for t in enumerate_types(cl) if t.members == want)
    phi_core = spine_canon(to_core(parse_formula(FORMULA_1, SIG2)))
    for t2 in enumerate_types(cl, limit=None):
        if suitable_next_types(t, t2, cl):
            assert t2.has(Not(phi_core))
            break
    else:
        pytest.fail("no successor found")


def test_fixpoint_type_self_suitable():
    cl = Closure.of(Atom("p"), 1)
    t = next(t for t in enumerate_types(cl)
             if t.has(Atom("p")) and t.has(Next(Atom("p"))))
    assert suitable_next_types(t, t, cl)
    t2 = next(t2 for t2 in enumerate_types(cl)
              if t2.has(Atom("p")) and not t2.has(Next(Atom("p"))))
    assert not suitable_next_types(t2, t2, cl)


def test_epistemic_suitability_reflexive_symmetric():
    cl = Closure.of(parse_formula("K 1 p", SIG2), 2)
    types = list(enumerate_types(cl))
    for t in types:
        assert suitable_epi_types(t, t, 1, cl)
    for a in types:
        for b in types:
            assert (suitable_epi_types(a, b, 1, cl)
                    == suitable_epi_types(b, a, 1, cl))


def test_epistemic_suitability_equivalence_laws():
    cl = Closure.of(parse_formula("(K 1 p -> K 2 q)", SIG2), 2)
    types = list(enumerate_types(cl))
    n = len(types)
    for i in (1, 2):
        rel = [[suitable_epi_types(types[a], types[b], i, cl)
                for b in range(n)] for a in range(n)]
        for a in range(n):
            assert rel[a][a]
            for b in range(n):
                assert rel[a][b] == rel[b][a]
        # transitivity via class consistency: partners of related types match
        for a in range(n):
            for b in range(n):
                if rel[a][b]:
                    assert rel[a] == rel[b]


def test_types_disagreeing_on_knowledge_not_suitable():
    cl = Closure.of(parse_formula("K 1 p", SIG2), 2)
    types = list(enumerate_types(cl))
    k = Know(1, Atom("p"))
    a = next(t for t in types if t.has(k))
    b = next(t for t in types if not t.has(k))
    assert not suitable_epi_types(a, b, 1, cl)


def test_lemma3i_biconditional_on_suitable_pairs():
    cl = Closure.of(parse_formula("(p U q)", SIG2), 2)
    types = list(enumerate_types(cl))
    for a in types:
        for b in types:
            if not suitable_next_types(a, b, cl):
                continue
            for m in a.members:
                if isinstance(m, Next):
                    assert b.has(m.sub), (a.key(), b.key(), print_formula(m))


def test_lemma3ii_forward_direction():
    cl = Closure.of(parse_formula("K 1 p", SIG2), 2)
    types = list(enumerate_types(cl))
    k = Know(1, Atom("p"))
    for a in types:
        if not a.has(k):
            continue
        for b in types:
            if suitable_epi_types(a, b, 1, cl):
                assert b.has(Atom("p"))


def test_phi_conjunction_and_concordance():
    cl = Closure.of(parse_formula("K 1 p", SIG2), 2)
    types = list(enumerate_types(cl))
    t = types[0]
    conj = phi_conjunction(t, 1, types, cl)
    assert conj is not None
    assert concordant([t], [t], 1, cl)
    partners = [u for u in types if suitable_epi_types(t, u, 1, cl)]
    if len(partners) > 1:
        s = partners[1]
        assert concordant([t, s], [s], 1, cl) == concordant([s], [t, s], 1, cl)


def test_fuse():
    assert fuse(["C0", "C1"], ["C1", "C2"]) == ["C0", "C1", "C2"]
    with pytest.raises(QuasiError):
        fuse(["C0"], ["C1"])
