from pathlib import Path

import pytest

from qistk.models import (
    LassoRun, Model, ModelError, check_class, check_no_learning,
    check_perfect_recall, check_shared_knowledge, check_synchronicity,
    check_unique_initial_state, epistemic_reachable, epistemic_related,
    g_transform, kripke_to_mf, load_model,
)
from qistk.syntax import Signature

CORPUS = Path(__file__).resolve().parents[1] / "src" / "qistk" / "corpus"


def fig1a():
    return load_model((CORPUS / "fig1a.qis").read_text())


def fig1b():
    return load_model((CORPUS / "fig1b.qis").read_text())


def kripke2(partitions=None, interp=None, runs=None):
    """Small two-agent Kripke model used across tests."""
    sig = Signature(2, {"P": 1, "p": 0}, frozenset())
    states = ("s0", "s1", "s2")
    runs = runs or {
        "r0": LassoRun("r0", ("s0",), ("s1", "s2")),
        "r1": LassoRun("r1", (), ("s2",)),
    }
    partitions = partitions or {
        (1,): (frozenset({"s0", "s1"}), frozenset({"s2"})),
        (2,): (frozenset({"s0"}), frozenset({"s1", "s2"})),
    }
    interp = interp or {
        ("P", "s0"): frozenset({("a",)}),
        ("P", "s1"): frozenset({("a",), ("b",)}),
        ("p", "s2"): frozenset({()}),
    }
    return Model("kripke", sig, ("a", "b"), states, runs, interp, {},
                 partitions=partitions)


def test_load_fig1a():
    m = fig1a()
    assert m.flavor == "mf"
    assert set(m.states) == {"w", "w1", "w2"}
    assert set(m.domain) == {"a", "b"}
    assert m.interp[("P", "w")] == {("a",), ("b",)}
    assert m.interp[("P", "w1")] == {("a",)}
    assert m.interp[("P", "w2")] == {("b",)}


def test_load_fig1b():
    m = fig1b()
    assert m.interp[("Q", "v")] == {("c",)}
    assert m.interp[("Q", "v1")] == {("c",)}
    assert m.interp[("Q", "v2")] == frozenset()


def test_nonrigid_constant_rejected():
    text = """(model (flavor kripke) (agents 1) (domain a)
      (constants (c a) (c b))
      (preds) (states w) (runs (r (cycle w)))
      (epistemic (agent 1) (partition (w))))"""
    with pytest.raises(ModelError):
        load_model(text)


def test_empty_cycle_rejected():
    with pytest.raises(ModelError):
        LassoRun("r", ("s0",), ())


def test_dangling_state_rejected():
    text = """(model (flavor kripke) (agents 1) (domain a)
      (preds) (states w) (runs (r (cycle w nope)))
      (epistemic (agent 1) (partition (w))))"""
    with pytest.raises(ModelError):
        load_model(text)


def test_partition_must_cover_states():
    text = """(model (flavor kripke) (agents 1) (domain a)
      (preds) (states w v) (runs (r (cycle w)))
      (epistemic (agent 1) (partition (w))))"""
    with pytest.raises(ModelError):
        load_model(text)


def test_fig1a_relations():
    m = fig1a()
    assert epistemic_related(m, 1, "a", ("r", 0), ("r1", 0))
    assert not epistemic_related(m, 1, "a", ("r", 0), ("r2", 0))
    assert epistemic_related(m, 1, "b", ("r", 0), ("r2", 0))
    assert epistemic_related(m, 1, "a", ("r", 0), ("r", 0))


def test_mf_relation_requires_individual():
    with pytest.raises(ModelError):
        epistemic_related(fig1a(), 1, None, ("r", 0), ("r", 0))


def test_reachability():
    m = fig1a()
    assert epistemic_reachable(m, "a", ("r", 0), ("r", 5))
    assert epistemic_reachable(m, "a", ("r", 0), ("r1", 0))
    assert not epistemic_reachable(m, "a", ("r", 0), ("r2", 0))
    # union over individuals connects everything
    assert epistemic_reachable(m, None, ("r1", 0), ("r2", 0))


def test_reachability_chain():
    m = kripke2()
    # s0 ~1 s1 and s1 ~2 s2, so s0 reaches s2
    assert epistemic_reachable(m, None, ("r0", 0), ("r1", 0))


def test_qis_roundtrip_locals():
    m = g_transform(kripke2())
    assert m.flavor == "qis"
    # derived relation equals local-state equality: reflexivity and symmetry
    assert epistemic_related(m, 1, None, ("r0", 0), ("r0", 1))  # s0 ~1 s1
    assert not epistemic_related(m, 1, None, ("r0", 0), ("r0", 2))


def test_g_transform_identity_partitions_gives_point_identity():
    parts = {
        (1,): (frozenset({"s0"}), frozenset({"s1"}), frozenset({"s2"})),
        (2,): (frozenset({"s0"}), frozenset({"s1"}), frozenset({"s2"})),
    }
    m = g_transform(kripke2(partitions=parts))
    assert epistemic_related(m, 1, None, ("r0", 1), ("r0", 3))  # same phase, same state
    assert not epistemic_related(m, 1, None, ("r0", 0), ("r1", 0))


def test_kripke_to_mf_copies_partitions():
    m = kripke2()
    mf = kripke_to_mf(m)
    for a in m.domain:
        assert mf.partitions[(1, a)] == m.partitions[(1,)]
        assert epistemic_related(mf, 1, a, ("r0", 0), ("r0", 1))


def test_g_transform_rejects_qis():
    with pytest.raises(ModelError):
        g_transform(fig1a())


# -- class checks -------------------------------------------------------------


def counter_model(L=3, colors=(0, 0)):
    """Pure-cycle Kripke model whose relations are phase (and run color)
    equality: the lasso analogue of time-in-the-local-state."""
    sig = Signature(1, {"p": 0}, frozenset())
    states = tuple(f"s{r}_{t}" for r in range(len(colors)) for t in range(L))
    runs = {f"r{r}": LassoRun(f"r{r}", (), tuple(f"s{r}_{t}" for t in range(L)))
            for r in range(len(colors))}
    cells = []
    for t in range(L):
        for color in set(colors):
            cell = frozenset(f"s{r}_{t}" for r, col in enumerate(colors) if col == color)
            cells.append(cell)
    interp = {("p", s): frozenset() for s in states}
    return Model("kripke", sig, ("a",), states, runs, interp, {},
                 partitions={(1,): tuple(cells)})


def test_synchronicity_counter_model():
    assert check_synchronicity(counter_model())


def test_synchronicity_violation():
    # two shifted cycles sharing states: related at unequal times mod lcm
    sig = Signature(1, {"p": 0}, frozenset())
    runs = {
        "r0": LassoRun("r0", (), ("s0", "s1")),
        "r1": LassoRun("r1", (), ("s1", "s0")),
    }
    m = Model("kripke", sig, ("a",), ("s0", "s1"), runs,
              {("p", "s0"): frozenset()}, {},
              partitions={(1,): (frozenset({"s0"}), frozenset({"s1"}))})
    assert not check_synchronicity(m)


def test_fig1a_single_step_sync():
    # one-state cycles: every related pair has equal time modulo 1
    assert check_synchronicity(fig1a())


def test_unique_initial_state():
    assert not check_unique_initial_state(fig1a())
    m = counter_model(L=2, colors=(0,))
    assert check_unique_initial_state(m)
    shared_start = {
        "r0": LassoRun("r0", ("s0",), ("s1",)),
        "r1": LassoRun("r1", ("s0",), ("s2",)),
    }
    assert check_unique_initial_state(kripke2(runs=shared_start))


def test_perfect_recall_constant_locals():
    # constant relation per run: agent never distinguishes times
    sig = Signature(1, {"p": 0}, frozenset())
    runs = {"r0": LassoRun("r0", (), ("s0", "s1"))}
    m = Model("kripke", sig, ("a",), ("s0", "s1"), runs, {}, {},
              partitions={(1,): (frozenset({"s0", "s1"}),)})
    assert check_perfect_recall(m, 1)
    assert check_no_learning(m, 1)


def test_perfect_recall_counter_model():
    assert check_perfect_recall(counter_model(), 1)
    assert check_no_learning(counter_model(), 1)


def test_perfect_recall_violation():
    # (r,1) ~ (r1,1) via state s; histories x vs y unrelated anywhere
    sig = Signature(1, {"p": 0}, frozenset())
    runs = {
        "r0": LassoRun("r0", ("x",), ("s",)),
        "r1": LassoRun("r1", ("y",), ("s",)),
    }
    m = Model("kripke", sig, ("a",), ("x", "y", "s"), runs, {}, {},
              partitions={(1,): (frozenset({"x"}), frozenset({"y"}), frozenset({"s"}))})
    assert not check_perfect_recall(m, 1)


def test_no_learning_violation():
    # knowledge refines at step 1: states split after a shared start
    sig = Signature(1, {"p": 0}, frozenset())
    runs = {
        "r0": LassoRun("r0", ("s",), ("u",)),
        "r1": LassoRun("r1", ("s",), ("v",)),
    }
    m = Model("kripke", sig, ("a",), ("s", "u", "v"), runs, {}, {},
              partitions={(1,): (frozenset({"s"}), frozenset({"u"}), frozenset({"v"}))})
    assert not check_no_learning(m, 1)
    # and this refinement is perfect recall
    assert check_perfect_recall(m, 1)


def test_shared_knowledge():
    assert check_shared_knowledge(fig1a())  # single agent
    assert check_shared_knowledge(counter_model(colors=(0, 1)))
    m = kripke2()  # different partitions for the two agents
    assert not check_shared_knowledge(m)


def test_check_class_dispatch():
    m = counter_model()
    for tag in ("pr", "nl", "sync", "uis", "shared"):
        assert isinstance(check_class(m, tag), bool)
    with pytest.raises(ModelError):
        check_class(m, "bogus")


def test_window_doubling_stability():
    models = [fig1a(), fig1b(), counter_model(), kripke2()]
    for m in models:
        for tag in ("pr", "nl", "sync"):
            assert check_class(m, tag, cap=24) == check_class(m, tag, cap=48), (
                tag, m.flavor)
