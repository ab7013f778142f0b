import pytest

from qistk.closures import (
    Closure, ClosureError, cl_member, closure_subC, closure_subCON,
    closure_sub_n, closure_sub_x, encode_k_disjunction, or_groupings,
    pick_fresh_variable,
)
from qistk.syntax import (
    Atom, Common, Forall, Know, Next, Not, Signature, Until, Var,
    free_variables, parse_formula, print_formula, spine_canon, spine_neg,
    subformulas, to_core,
)

SIG2 = Signature(2, {"Av": 2, "Req": 2, "P": 1, "p": 0, "q": 0}, frozenset())
FORMULA_1 = "forall y . C ((forall z . Av(y, z)) U (exists x . Req(x, y)))"


def phi1():
    return parse_formula(FORMULA_1, SIG2)


def test_subC_without_common_is_subformulas():
    phi = parse_formula("(p U q)", SIG2)
    assert closure_subC(phi, 2) == {spine_canon(s) for s in subformulas(to_core(phi))}


def test_subC_formula1_adds_EC_and_KiC():
    got = closure_subC(phi1(), 2)
    c_members = [s for s in got if isinstance(s, Common)]
    assert len(c_members) == 1
    cpsi = c_members[0]
    assert Know(1, cpsi) in got and Know(2, cpsi) in got
    # EC appears as the core conjunction of K_1 C and K_2 C
    ec = [s for s in got if isinstance(s, Not) and not isinstance(s.sub, Forall)]
    assert any("K 1" in print_formula(s) and "K 2" in print_formula(s) for s in ec)


def test_subC_singleton():
    assert closure_subC(Atom("p"), 2) == {Atom("p")}


def test_subCON_direct_unfold():
    p = Atom("P", (Var("x"),))
    got = closure_subCON(p, 1)
    assert got == {p, Not(p), Next(p), Next(Not(p))}


def test_subCON_negation_closure_property():
    import random
    from test_syntax import random_formula, RNG_SIG
    rng = random.Random(11)
    for _ in range(100):
        phi = random_formula(rng, 3, ["a"])
        s = closure_subCON(phi, 2)
        for member in s:
            assert spine_neg(member) in s, print_formula(member)


def test_sub_x_requires_fresh_variable():
    with pytest.raises(ClosureError):
        closure_sub_x(phi1(), 2, "y")


def test_sub_x_formula1_has_32_members_matching_table():
    x = pick_fresh_variable(phi1())
    assert x == "x0"
    got = closure_sub_x(phi1(), 2, x)
    assert len(got) == 32
    phi_core = spine_canon(to_core(phi1()))
    u = Until(Forall("z", Atom("Av", (Var(x), Var("z")))),
              Not(Forall("x", Not(Atom("Req", (Var("x"), Var(x)))))))
    base = [
        phi_core,
        Common(u),
        spine_canon(to_core(parse_formula(          # EC psi, core-expanded
            "E C ((forall z . Av(x0, z)) U (exists x . Req(x, x0)))",
            Signature(2, {"Av": 2, "Req": 2})))),
        Know(1, Common(u)),
        Know(2, Common(u)),
        u,
        u.left,
        u.right,                                    # exists-form member
    ]
    for member in base:
        assert member in got, print_formula(member)
        assert spine_neg(member) in got
        assert Next(member) in got
        assert Next(spine_neg(member)) in got
    # atoms with two free variables are filtered out
    texts = {print_formula(s) for s in got}
    assert "Av(x0, z)" not in texts and "Req(x, x0)" not in texts


def test_sub_x_sentence_fragment():
    p = Atom("p")
    got = closure_sub_x(p, 1)
    assert got == {p, Not(p), Next(p), Next(Not(p))}


def test_sub_0_contains_phi_itself():
    got = closure_sub_n(phi1(), 2, 0)
    assert spine_canon(to_core(phi1())) in got


def test_sub_x_members_have_at_most_one_free_variable():
    got = closure_sub_x(phi1(), 2)
    assert all(len(free_variables(s)) <= 1 for s in got)
    assert all(free_variables(s) <= {"x0"} for s in got)


# -- cl levels ----------------------------------------------------------------


def test_cl0_equals_sub_x():
    cl = Closure.of(phi1(), 2)
    assert cl.base == closure_sub_x(phi1(), 2)


def test_every_sub_x_member_in_cl0():
    cl = Closure.of(phi1(), 2)
    for s in cl.base:
        assert cl._member_level(s, 0, None)


def test_k_disjunction_membership_level_1():
    phi = parse_formula("(K 1 p -> K 2 q)", SIG2)
    cl = Closure.of(phi, 2)
    assert cl.depth == 1
    psi1, psi2 = Atom("p"), Not(Atom("q"))
    member = encode_k_disjunction(1, [psi1, psi2])
    # member of cl_{0,1} = cl_iota for iota=(1) at depth 1
    assert cl.member(member, (1,))
    assert cl.member(spine_neg(member), (1,))
    # agent-2 disjunction is not in cl_{0,1} at the bottom layer
    member2 = encode_k_disjunction(2, [psi1, psi2])
    assert not cl.member(member2, (1,))
    assert cl.member(member2, (2,))
    # but the empty index reaches the union over agents
    assert cl.member(member2, ())


def test_index_too_long_raises():
    cl = Closure.of(Atom("p"), 2)
    with pytest.raises(ClosureError):
        cl.member(Atom("p"), (1,))


def test_triple_next_not_in_cl0():
    phi = parse_formula("(p U q)", SIG2)
    cl = Closure.of(phi, 2)
    psi = Atom("p")
    assert cl.member(Next(psi), ())
    assert not cl.member(Next(Next(Next(psi))), ())
    # enumerator oracle: stream the whole of cl_0 and check directly
    level0 = set(cl.iter_level(0))
    assert Next(Next(Next(psi))) not in level0
    assert Next(psi) in level0


def test_k_disjunction_recognized_up_to_reordering():
    phi = parse_formula("(K 1 p -> K 2 q)", SIG2)
    cl = Closure.of(phi, 2)
    a, b = Atom("p"), Atom("q")
    m1 = encode_k_disjunction(1, [a, b])
    m2 = encode_k_disjunction(1, [b, a, b])
    assert m1 == m2
    # hand-built unsorted variant is still recognized as a member
    from qistk.syntax import Implies
    unsorted = Know(1, Implies(spine_neg(b), a))
    assert cl.member(unsorted, (1,))


def test_or_groupings_cover_single_and_split():
    from qistk.syntax import Implies
    body = Implies(Not(Atom("p")), Atom("q"))
    gs = or_groupings(body)
    assert [body] in gs
    assert [Atom("p"), Atom("q")] in gs


def test_iter_level_streams_disjunction_layer():
    from itertools import islice
    cl = Closure.of(parse_formula("K 1 p", SIG2), 1)
    stream = list(islice(cl.iter_level(1, part_pool=8), 40))
    ks = [f for f in stream if isinstance(f, Know) and f not in cl.base]
    assert ks, "expected fresh K-disjunction members in the level-1 stream"


def test_cl_member_function():
    assert cl_member(Atom("p"), (), Atom("p"), 1)
