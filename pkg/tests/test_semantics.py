import random
from pathlib import Path

import pytest

from qistk.generate import (
    GenConfig, class_models, family_phase_color, random_kripke, random_qis,
    violating_model,
)
from qistk.models import (
    check_class, g_transform, kripke_to_mf, load_model,
)
from qistk.semantics import (
    EvalError, evaluate, find_counterexample, model_truth, point_truth,
    validity_probe,
)
from qistk.syntax import (
    Signature, everyone_knows, parse_formula,
)
from qistk.closures import closure_sub_x

CORPUS = Path(__file__).resolve().parents[1] / "src" / "qistk" / "corpus"

SIG1 = Signature(1, {"P": 1, "Q": 1, "p": 0, "q": 0}, frozenset())
SIG2 = Signature(2, {"P": 1, "p": 0, "q": 0}, frozenset())


def fig1a():
    return load_model((CORPUS / "fig1a.qis").read_text())


def fig1b():
    return load_model((CORPUS / "fig1b.qis").read_text())


def test_fig1a_barcan_counterexample():
    m = fig1a()
    assert evaluate(m, "r", 0, {}, parse_formula("forall x . K 1 P(x)", SIG1))
    assert not evaluate(m, "r", 0, {}, parse_formula("K 1 (forall x . P(x))", SIG1))


def test_fig1b_k_axiom_counterexample():
    m = fig1b()
    sigma = {"x": "c"}
    sig = Signature(1, {"Q": 1}, frozenset())
    lhs = parse_formula("(K 1 (Q(x) -> exists x . Q(x)) & K 1 Q(x))", sig)
    assert evaluate(m, "q", 0, sigma, lhs)
    assert not evaluate(m, "q", 0, sigma, parse_formula("K 1 (exists x . Q(x))", sig))


def test_tautology():
    m = fig1a()
    assert evaluate(m, "r", 0, {}, parse_formula("(p | ~p)", Signature(1, {"p": 0})))


def test_unbound_variable_rejected():
    with pytest.raises(EvalError):
        evaluate(fig1a(), "r", 0, {}, parse_formula("P(x)", SIG1))


def test_point_truth():
    m = fig1a()
    phi = parse_formula("P(x)", SIG1)
    assert point_truth(m, "r", 0, phi)      # I(P, w) = {a, b} = D
    assert not point_truth(m, "r1", 0, phi)  # I(P, w1) = {a}
    sentence = parse_formula("exists x . P(x)", SIG1)
    assert point_truth(m, "r", 0, sentence) == evaluate(m, "r", 0, {}, sentence)


def test_model_truth_bf_witness():
    m = fig1a()
    bf = parse_formula("(forall x . K 1 P(x) -> K 1 (forall x . P(x)))", SIG1)
    v = model_truth(m, bf)
    assert not v.truth
    assert v.witness == ("r", 0, {})


def test_find_counterexample_fig1b():
    m = fig1b()
    sig = Signature(1, {"Q": 1}, frozenset())
    phi = parse_formula(
        "((K 1 (Q(x) -> exists x . Q(x)) & K 1 Q(x)) -> K 1 (exists x . Q(x)))", sig)
    got = find_counterexample(m, phi)
    assert got == ("q", 0, {"x": "c"})
    assert find_counterexample(m, phi) == got  # deterministic
    assert find_counterexample(m, parse_formula("(Q(x) | ~Q(x))", sig)) is None


BF_CBF = [
    "(forall x . X P(x) <-> X (forall x . P(x)))",
    "(forall x . K 1 P(x) <-> K 1 (forall x . P(x)))",
    "(forall x . K 2 P(x) <-> K 2 (forall x . P(x)))",
]


def test_barcan_valid_on_random_qis():
    rng = random.Random(42)
    cfg = GenConfig(agents=2, domain_max=3, states_max=3, runs_max=2)
    for k in range(40):
        m = random_qis(rng, cfg)
        for text in BF_CBF:
            phi = parse_formula(text, SIG2)
            assert model_truth(m, phi).truth, (k, text)


def test_phase_invariance():
    rng = random.Random(43)
    cfg = GenConfig(agents=2, domain_max=2, states_max=3, runs_max=2,
                    prefix_max=2, cycle_max=3)
    texts = ["(p U q)", "X (p -> q)", "K 1 (p U q)", "C p",
             "forall x . (P(x) U p)"]
    for _ in range(25):
        m = random_qis(rng, cfg)
        for rid, run in m.runs.items():
            p, c = len(run.prefix), len(run.cycle)
            for text in texts:
                phi = parse_formula(text, SIG2)
                assert point_truth(m, rid, p, phi) == point_truth(m, rid, p + c, phi)


def test_common_knowledge_equals_ek_fixpoint():
    rng = random.Random(44)
    cfg = GenConfig(agents=2, domain_max=2, states_max=3, runs_max=2)
    psi = parse_formula("p", SIG2)
    for _ in range(25):
        m = random_qis(rng, cfg)
        ek = psi
        conj = True
        for _ in range(len(m.states)):
            ek = everyone_knows(ek, 2)
            conj = conj and evaluate(m, "r0", 0, {}, ek)
        from qistk.syntax import Common
        assert evaluate(m, "r0", 0, {}, Common(psi)) == conj


def test_lemma1_g_transform_preserves_closure_truth():
    rng = random.Random(45)
    cfg = GenConfig(agents=2, domain_max=2, states_max=3, runs_max=2)
    phi = parse_formula("(K 1 (p U P(x)) -> C (q & X p))", SIG2)
    closure = sorted(closure_sub_x(phi, 2), key=str)
    for _ in range(10):
        m = random_kripke(rng, cfg)
        g = g_transform(m)
        for psi in closure:
            for rid, run in m.runs.items():
                for t in run.phases():
                    from qistk.semantics import assignments
                    for sigma in assignments(m, {"x0"}):
                        assert (evaluate(m, rid, t, sigma, psi)
                                == evaluate(g, rid, t, sigma, psi)), (rid, t, psi)


def test_kripke_to_mf_agrees_and_validates_k_bf():
    rng = random.Random(46)
    cfg = GenConfig(agents=2, domain_max=2, states_max=3, runs_max=2)
    k_instance = parse_formula(
        "(K 1 (P(x) -> p) -> (K 1 P(x) -> K 1 p))", SIG2)
    bf = parse_formula("(forall x . K 1 P(x) -> K 1 (forall x . P(x)))", SIG2)
    for _ in range(15):
        m = random_kripke(rng, cfg)
        mf = kripke_to_mf(m)
        for text in ["K 1 P(x)", "(p U P(x))", "C P(x)", "forall x . K 2 P(x)"]:
            phi = parse_formula(text, SIG2)
            from qistk.semantics import assignments
            for rid, run in m.runs.items():
                for t in run.phases():
                    for sigma in assignments(m, {"x"}):
                        assert (evaluate(m, rid, t, sigma, phi)
                                == evaluate(mf, rid, t, sigma, phi))
        assert model_truth(mf, k_instance).truth
        assert model_truth(mf, bf).truth


def test_s5_laws_on_generated_models():
    rng = random.Random(47)
    cfg = GenConfig(agents=2, domain_max=2, states_max=3, runs_max=2)
    laws = [
        "(K 1 p -> p)",
        "(K 1 p -> K 1 (K 1 p))",
        "(~K 1 p -> K 1 (~K 1 p))",
    ]
    for _ in range(25):
        m = random_qis(rng, cfg)
        for text in laws:
            assert model_truth(m, parse_formula(text, SIG2)).truth, text


def test_mf_barcan_converse_always_valid():
    # CBF holds in all mf models, including the Fig. 1 countermodel for BF
    cbf = parse_formula("(K 1 (forall x . P(x)) -> forall x . K 1 P(x))", SIG1)
    assert model_truth(fig1a(), cbf).truth


def test_validity_probe_counts():
    kt2 = parse_formula("(K 1 (X p) -> X (K 1 p))", SIG2)
    cfg = GenConfig(agents=2, domain_max=2, states_max=4, runs_max=2, cycle_max=3)
    good = list(class_models(7, cfg, frozenset({"pr", "sync"}), 30))
    report = validity_probe(good, kt2)
    assert report.tried == 30 and report.failed == 0 and report.ok

    bad = violating_model("kt2")
    assert check_class(bad, "pr")
    report2 = validity_probe([bad], kt2)
    assert report2.failed == 1 and report2.first_counterexample is not None


def test_violating_models_are_outside_their_class():
    assert not check_class(violating_model("kt1"), "pr")
    m2 = violating_model("kt2")
    assert check_class(m2, "pr") and not check_class(m2, "sync")
    assert not check_class(violating_model("kt3"), "nl")
    assert not check_class(violating_model("kt4"), "nl")
    assert not check_class(violating_model("kt5"), "shared")


def test_class_families_land_in_their_classes():
    cfg = GenConfig(agents=2)
    for tags in [frozenset({"pr"}), frozenset({"pr", "sync"}), frozenset({"nl"}),
                 frozenset({"nl", "sync"}), frozenset({"shared"})]:
        for m in class_models(11, cfg, tags, 10):
            for t in tags:
                assert check_class(m, t), (sorted(tags), t)
