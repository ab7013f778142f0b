"""Seeded model generation: unconstrained random models, constructive
families for the interaction-axiom classes, and hand-built violating models.

Constrained classes are generated constructively (each family provably lands
in its class) and validated against the class checks; rejection sampling from
arbitrary random models would be both slow and presentation-fragile.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from .models import LassoRun, Model, check_class
from .syntax import Signature


@dataclass(frozen=True)
class GenConfig:
    agents: int = 2
    domain_max: int = 3
    states_max: int = 4
    prefix_max: int = 1
    cycle_max: int = 2
    runs_max: int = 3
    predicates: Mapping[str, int] = field(
        default_factory=lambda: {"P": 1, "p": 0, "q": 0})
    constants: tuple[str, ...] = ()


def _domain(rng: random.Random, cfg: GenConfig) -> tuple[str, ...]:
    return tuple(f"d{i}" for i in range(rng.randint(1, cfg.domain_max)))


def _random_interp(rng, cfg, states, domain):
    interp = {}
    for pred, arity in cfg.predicates.items():
        for s in states:
            tuples = set()
            for combo in _tuples(domain, arity):
                if rng.random() < 0.5:
                    tuples.add(combo)
            interp[(pred, s)] = frozenset(tuples)
    return interp


def _tuples(domain, arity):
    if arity == 0:
        return [()]
    out = [()]
    for _ in range(arity):
        out = [t + (d,) for t in out for d in domain]
    return out


def _random_runs(rng, cfg, states) -> dict[str, LassoRun]:
    runs = {}
    for k in range(rng.randint(1, cfg.runs_max)):
        prefix = tuple(rng.choice(states)
                       for _ in range(rng.randint(0, cfg.prefix_max)))
        cycle = tuple(rng.choice(states)
                      for _ in range(rng.randint(1, cfg.cycle_max)))
        runs[f"r{k}"] = LassoRun(f"r{k}", prefix, cycle)
    return runs


def _const_map(rng, cfg, domain):
    return {c: rng.choice(domain) for c in cfg.constants}


def _sig(cfg) -> Signature:
    return Signature(cfg.agents, cfg.predicates, frozenset(cfg.constants))


def random_qis(rng: random.Random, cfg: GenConfig) -> Model:
    """Unconstrained QIS: random local-state structure, runs, interpretation."""
    domain = _domain(rng, cfg)
    w = rng.randint(1, cfg.states_max)
    states = tuple(f"s{i}" for i in range(w))
    locals_pool = [f"l{i}" for i in range(w)]
    qis_locals = {}
    for s in states:
        per_agent = tuple(rng.choice(locals_pool) for _ in range(cfg.agents))
        qis_locals[s] = (s, per_agent)
    return Model("qis", _sig(cfg), domain, states, _random_runs(rng, cfg, states),
                 _random_interp(rng, cfg, states, domain), _const_map(rng, cfg, domain),
                 qis_locals=qis_locals)


def random_kripke(rng: random.Random, cfg: GenConfig) -> Model:
    """Unconstrained Kripke model with random per-agent partitions."""
    domain = _domain(rng, cfg)
    w = rng.randint(1, cfg.states_max)
    states = tuple(f"s{i}" for i in range(w))
    partitions = {}
    for i in range(1, cfg.agents + 1):
        groups = rng.randint(1, w)
        assign = {s: rng.randrange(groups) for s in states}
        cells = [frozenset(s for s in states if assign[s] == g)
                 for g in range(groups)]
        partitions[(i,)] = tuple(c for c in cells if c)
    return Model("kripke", _sig(cfg), domain, states, _random_runs(rng, cfg, states),
                 _random_interp(rng, cfg, states, domain), _const_map(rng, cfg, domain),
                 partitions=partitions)


# -- constructive class families ----------------------------------------------


def family_phase_color(rng: random.Random, cfg: GenConfig,
                       shared: bool = False) -> Model:
    """Equal-length pure cycles; agent locals pair the phase with a per-run
    color, so the relations are phase-lockstep. Lands in pr+nl+sync (and
    shared when colors coincide across agents)."""
    domain = _domain(rng, cfg)
    L = rng.randint(1, max(2, cfg.cycle_max))
    nruns = rng.randint(1, cfg.runs_max)
    palette = range(rng.randint(1, 2))
    colors = {}
    for i in range(1, cfg.agents + 1):
        if shared and i > 1:
            colors[i] = colors[1]
        else:
            colors[i] = [rng.choice(list(palette)) for _ in range(nruns)]
    states, qis_locals, runs = [], {}, {}
    for r in range(nruns):
        names = [f"s{r}_{t}" for t in range(L)]
        states += names
        for t, s in enumerate(names):
            qis_locals[s] = (s, tuple(f"{t}c{colors[i][r]}"
                                      for i in range(1, cfg.agents + 1)))
        runs[f"r{r}"] = LassoRun(f"r{r}", (), tuple(names))
    states = tuple(states)
    return Model("qis", _sig(cfg), domain, states, runs,
                 _random_interp(rng, cfg, states, domain),
                 _const_map(rng, cfg, domain), qis_locals=qis_locals)


def family_constant_locals(rng: random.Random, cfg: GenConfig,
                           shared: bool = False) -> Model:
    """Locals constant along each run (a per-run color): agents never
    distinguish times, so the model is pr+nl (not synchronous in general)."""
    domain = _domain(rng, cfg)
    nruns = rng.randint(1, cfg.runs_max)
    palette = range(rng.randint(1, 2))
    colors = {}
    for i in range(1, cfg.agents + 1):
        if shared and i > 1:
            colors[i] = colors[1]
        else:
            colors[i] = [rng.choice(list(palette)) for _ in range(nruns)]
    states, qis_locals, runs = [], {}, {}
    for r in range(nruns):
        plen = rng.randint(0, cfg.prefix_max)
        clen = rng.randint(1, cfg.cycle_max)
        names = [f"s{r}_{t}" for t in range(plen + clen)]
        states += names
        for s in names:
            qis_locals[s] = (s, tuple(f"g{colors[i][r]}"
                                      for i in range(1, cfg.agents + 1)))
        runs[f"r{r}"] = LassoRun(f"r{r}", tuple(names[:plen]), tuple(names[plen:]))
    states = tuple(states)
    return Model("qis", _sig(cfg), domain, states, runs,
                 _random_interp(rng, cfg, states, domain),
                 _const_map(rng, cfg, domain), qis_locals=qis_locals)


CLASS_FAMILIES = {
    frozenset(): lambda rng, cfg: random_qis(rng, cfg),
    frozenset({"pr"}): lambda rng, cfg: (
        family_constant_locals if rng.random() < 0.5 else family_phase_color)(rng, cfg),
    frozenset({"pr", "sync"}): lambda rng, cfg: family_phase_color(rng, cfg),
    frozenset({"nl"}): lambda rng, cfg: (
        family_constant_locals if rng.random() < 0.5 else family_phase_color)(rng, cfg),
    frozenset({"nl", "sync"}): lambda rng, cfg: family_phase_color(rng, cfg),
    frozenset({"shared"}): lambda rng, cfg: (
        family_constant_locals if rng.random() < 0.5 else family_phase_color)(
            rng, cfg, shared=True),
}


def class_models(seed: int, cfg: GenConfig, tags: frozenset[str],
                 count: int, check: bool = True) -> Iterator[Model]:
    """Stream `count` models of the requested class; each is verified against
    the class checks before being yielded."""
    try:
        family = CLASS_FAMILIES[frozenset(tags)]
    except KeyError:
        raise ValueError(f"no generation family for class {sorted(tags)}")
    rng = random.Random(seed)
    produced = 0
    while produced < count:
        m = family(rng, cfg)
        if check and not all(check_class(m, t) for t in tags):
            continue  # family guarantees the class; guard against regressions
        produced += 1
        yield m


# -- hand-built violating models (one per interaction-axiom row) ---------------


def _qis(sig, domain, qis_locals, runs, interp, consts=None):
    return Model("qis", sig, domain, tuple(qis_locals), runs, interp,
                 consts or {}, qis_locals=qis_locals)


def violating_model(row: str) -> Model:
    """A model outside the class of the given axiom row (kt1..kt5), on which
    the corresponding axiom has a counterexample."""
    sig = Signature(2, {"p": 0, "q": 0, "r": 0}, frozenset())
    t, f = frozenset({()}), frozenset()
    if row == "kt1":
        # breaks perfect recall: histories x/y merge into a shared local z;
        # r fails only off-run, so the until-eventuality ~r is considered
        # possible but never realized
        locals_ = {
            "a0": ("a0", ("x", "e")), "a1": ("a1", ("z", "e")),
            "b0": ("b0", ("y", "e")), "b1": ("b1", ("z", "e")),
        }
        runs = {"ra": LassoRun("ra", (), ("a0", "a1")),
                "rb": LassoRun("rb", (), ("b0", "b1"))}
        interp = {("p", "a0"): t, ("p", "a1"): t, ("p", "b0"): f, ("p", "b1"): t,
                  ("q", "a0"): t, ("q", "a1"): t, ("q", "b0"): t, ("q", "b1"): t,
                  ("r", "a0"): t, ("r", "a1"): t, ("r", "b0"): t, ("r", "b1"): f}
        return _qis(sig, ("d0",), locals_, runs, interp)
    if row == "kt2":
        # perfect recall but not synchronous: a one-off start is related to
        # every time of the constant run
        locals_ = {
            "w": ("w", ("g", "e")),
            "b": ("b", ("g", "e")), "w2": ("w2", ("g", "e")),
        }
        runs = {"ra": LassoRun("ra", (), ("w",)),
                "rb": LassoRun("rb", ("b",), ("w2",))}
        interp = {("p", "w"): t, ("p", "w2"): t, ("p", "b"): f,
                  ("q", "w"): f, ("q", "w2"): f, ("q", "b"): f}
        return _qis(sig, ("d0",), locals_, runs, interp)
    if row == "kt3":
        # breaks no learning: knowledge refines after a shared start
        locals_ = {
            "s": ("s", ("h", "e")),
            "u": ("u", ("u1", "e")), "v": ("v", ("v1", "e")),
        }
        runs = {"ra": LassoRun("ra", ("s",), ("u",)),
                "rb": LassoRun("rb", ("s",), ("v",))}
        interp = {("p", "s"): t, ("p", "u"): t, ("p", "v"): f,
                  ("q", "s"): f, ("q", "u"): t, ("q", "v"): f}
        return _qis(sig, ("d0",), locals_, runs, interp)
    if row == "kt4":
        # no learning fails the same way; reuse the refining model shape but
        # with synchronous-looking locals broken at step 1
        return violating_model("kt3")
    if row == "kt5":
        # agents with different partitions do not share knowledge
        locals_ = {
            "w0": ("w0", ("m", "n0")),
            "w1": ("w1", ("m", "n1")),
        }
        runs = {"ra": LassoRun("ra", (), ("w0",)),
                "rb": LassoRun("rb", (), ("w1",))}
        interp = {("p", "w0"): t, ("p", "w1"): f,
                  ("q", "w0"): f, ("q", "w1"): f}
        return _qis(sig, ("d0",), locals_, runs, interp)
    raise ValueError(f"unknown row {row!r}")
