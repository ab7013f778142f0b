"""Finite multi-agent models over ultimately periodic runs: quantified
interpreted systems, Kripke models, and monodic-friendly (mf) models.

Runs are lassos, so every point-quantified property is decided on a finite
window; the perfect-recall / no-learning / synchronicity checks use the
modular reading of time described in the class-check docstrings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from .sexpr import SexprError, parse_sexpr, tagged, tagged_one
from .syntax import Signature

Point = tuple[str, int]

DEFAULT_WINDOW_CAP = 48


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class LassoRun:
    rid: str
    prefix: tuple[str, ...]
    cycle: tuple[str, ...]

    def __post_init__(self):
        if not self.cycle:
            raise ModelError(f"run {self.rid}: empty cycle")

    def phase(self, n: int) -> int:
        p = len(self.prefix)
        if n < p:
            return n
        return p + (n - p) % len(self.cycle)

    def state_at(self, n: int) -> str:
        ph = self.phase(n)
        if ph < len(self.prefix):
            return self.prefix[ph]
        return self.cycle[ph - len(self.prefix)]

    def phases(self) -> range:
        return range(len(self.prefix) + len(self.cycle))

    def states(self) -> frozenset[str]:
        return frozenset(self.prefix) | frozenset(self.cycle)


@dataclass(frozen=True)
class Model:
    flavor: str
    sig: Signature
    domain: tuple[str, ...]
    states: tuple[str, ...]
    runs: Mapping[str, LassoRun]
    interp: Mapping[tuple[str, str], frozenset[tuple[str, ...]]]
    const_map: Mapping[str, str]
    # qis: state -> (env local, per-agent locals); None for kripke/mf
    qis_locals: Optional[Mapping[str, tuple[str, tuple[str, ...]]]] = None
    # kripke: agent -> partition; mf: (agent, individual) -> partition
    partitions: Mapping[object, tuple[frozenset[str], ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "runs", dict(self.runs))
        object.__setattr__(self, "interp", dict(self.interp))
        object.__setattr__(self, "const_map", dict(self.const_map))
        object.__setattr__(self, "partitions",
                           {k: tuple(v) for k, v in dict(self.partitions).items()})
        self._validate()

    def _validate(self):
        if self.flavor not in ("qis", "kripke", "mf"):
            raise ModelError(f"unknown flavor {self.flavor!r}")
        if not self.domain:
            raise ModelError("empty domain")
        if not self.runs:
            raise ModelError("no runs")
        known = set(self.states)
        for run in self.runs.values():
            for s in run.states():
                if s not in known:
                    raise ModelError(f"run {run.rid} references unknown state {s}")
        for c in self.sig.constants:
            if c not in self.const_map:
                raise ModelError(f"constant {c} has no interpretation")
        for c, a in self.const_map.items():
            if a not in self.domain:
                raise ModelError(f"constant {c} maps outside the domain")
        dom = set(self.domain)
        for (pred, state), tuples in self.interp.items():
            if pred not in self.sig.predicates:
                raise ModelError(f"undeclared predicate {pred}")
            if state not in known:
                raise ModelError(f"interpretation at unknown state {state}")
            arity = self.sig.predicates[pred]
            for tup in tuples:
                if len(tup) != arity or any(a not in dom for a in tup):
                    raise ModelError(f"bad tuple {tup} for {pred} at {state}")
        if self.flavor == "qis":
            if self.qis_locals is None:
                raise ModelError("qis model needs local-state structure")
            for s in self.states:
                if s not in self.qis_locals:
                    raise ModelError(f"state {s} lacks local states")
                env, locals_ = self.qis_locals[s]
                if len(locals_) != self.sig.agents:
                    raise ModelError(f"state {s}: expected {self.sig.agents} locals")
        else:
            keys = ([(i,) for i in range(1, self.sig.agents + 1)]
                    if self.flavor == "kripke" else
                    [(i, a) for i in range(1, self.sig.agents + 1) for a in self.domain])
            for key in keys:
                if key not in self.partitions:
                    raise ModelError(f"missing epistemic partition for {key}")
                cells = self.partitions[key]
                seen: set[str] = set()
                for cell in cells:
                    if seen & cell:
                        raise ModelError(f"partition {key} has overlapping cells")
                    seen |= cell
                if seen != known:
                    raise ModelError(f"partition {key} does not cover all states")

    # -- epistemic structure --------------------------------------------------

    def _cache(self, name: str) -> dict:
        cache = self.__dict__.get(name)
        if cache is None:
            cache = {}
            object.__setattr__(self, name, cache)
        return cache

    def cell_of(self, i: int, a: Optional[str], state: str):
        """Equivalence-class key of a state under agent i (and individual a)."""
        if not 1 <= i <= self.sig.agents:
            raise ModelError(f"unknown agent {i}")
        if self.flavor == "qis":
            return ("qis", i, self.qis_locals[state][1][i - 1])
        key = (i,) if self.flavor == "kripke" else (i, self._need_individual(a))
        cache = self._cache("_cells")
        hit = cache.get(key)
        if hit is None:
            hit = {}
            for idx, cell in enumerate(self.partitions[key]):
                for s in cell:
                    hit[s] = (key, idx)
            cache[key] = hit
        try:
            return hit[state]
        except KeyError:
            raise ModelError(f"state {state} missing from partition {key}")

    def _need_individual(self, a: Optional[str]) -> str:
        if a is None:
            raise ModelError("mf model requires an individual")
        if a not in self.domain:
            raise ModelError(f"unknown individual {a}")
        return a

    def states_related(self, i: int, a: Optional[str], s1: str, s2: str) -> bool:
        return self.cell_of(i, a, s1) == self.cell_of(i, a, s2)

    def realized_states(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for run in self.runs.values():
            out |= run.states()
        return out

    def reachable_state_classes(self, a: Optional[str]) -> dict[str, int]:
        """Connected components of realized states under the union of all
        agents' relations (per individual for mf)."""
        cache = self._cache("_reach")
        hit = cache.get(a)
        if hit is not None:
            return hit
        realized = sorted(self.realized_states())
        parent = {s: s for s in realized}

        def find(s):
            while parent[s] != s:
                parent[s] = parent[parent[s]]
                s = parent[s]
            return s

        agents = range(1, self.sig.agents + 1)
        individuals = [a] if (self.flavor != "mf" or a is not None) else list(self.domain)
        for i in agents:
            for ind in individuals:
                groups: dict[object, str] = {}
                for s in realized:
                    key = self.cell_of(i, ind, s)
                    if key in groups:
                        ra, rb = find(groups[key]), find(s)
                        parent[ra] = rb
                    else:
                        groups[key] = s
        out = {s: find(s) for s in realized}
        cache[a] = out
        return out

    def point_state(self, p: Point) -> str:
        rid, n = p
        if rid not in self.runs:
            raise ModelError(f"unknown run {rid}")
        return self.runs[rid].state_at(n)


def epistemic_related(m: Model, i: int, a: Optional[str], p1: Point, p2: Point) -> bool:
    """Point relation, induced by the states under them."""
    return m.states_related(i, a, m.point_state(p1), m.point_state(p2))


def epistemic_reachable(m: Model, a: Optional[str], p1: Point, p2: Point) -> bool:
    """Transitive closure of the union of all agents' relations, computed on
    the finite realized-state graph and lifted to points."""
    roots = m.reachable_state_classes(a)
    s1, s2 = m.point_state(p1), m.point_state(p2)
    return roots[s1] == roots[s2]


# -- loading ------------------------------------------------------------------


def load_model(text: str) -> Model:
    try:
        top = parse_sexpr(text)
    except SexprError as e:
        raise ModelError(f"format error: {e}") from e
    if not isinstance(top, list) or not top or top[0] != "model":
        raise ModelError("expected a (model ...) form")
    flavor = tagged_one(top, "flavor")[1]
    agents = int(tagged_one(top, "agents")[1])
    domain = tuple(tagged_one(top, "domain")[1:])
    const_map = {}
    for entry in tagged(top, "constants"):
        for pair in entry[1:]:
            name, value = pair
            if name in const_map and const_map[name] != value:
                raise ModelError(f"constant {name} interpreted non-rigidly")
            const_map[name] = value
    preds = {}
    for entry in tagged(top, "preds"):
        for pair in entry[1:]:
            preds[pair[0]] = int(pair[1])
    sig = Signature(agents, preds, frozenset(const_map))

    states_block = tagged_one(top, "states")
    qis_locals = None
    if flavor == "qis":
        qis_locals = {}
        names = []
        for entry in states_block[1:]:
            name = entry[0]
            env = tagged_one(entry, "env")[1]
            locals_ = tuple(tagged_one(entry, "locals")[1:])
            qis_locals[name] = (env, locals_)
            names.append(name)
        states = tuple(names)
    else:
        states = tuple(states_block[1:])

    runs = {}
    for entry in tagged_one(top, "runs")[1:]:
        rid = entry[0]
        prefixes = tagged(entry, "prefix")
        prefix = tuple(prefixes[0][1:]) if prefixes else ()
        cycle = tuple(tagged_one(entry, "cycle")[1:])
        runs[rid] = LassoRun(rid, prefix, cycle)

    partitions = {}
    for entry in tagged(top, "epistemic"):
        i = int(tagged_one(entry, "agent")[1])
        ind = tagged(entry, "individual")
        cells = tuple(frozenset(cell) for cell in tagged_one(entry, "partition")[1:])
        key = (i, ind[0][1]) if ind else (i,)
        partitions[key] = cells

    interp = {}
    for entry in tagged(top, "interp"):
        for block in entry[1:]:
            pred = block[0]
            for at in tagged(block, "at"):
                state = at[1]
                tuples = frozenset(tuple(t) for t in at[2:])
                interp[(pred, state)] = tuples

    return Model(flavor, sig, domain, states, runs, interp, const_map,
                 qis_locals=qis_locals, partitions=partitions)


# -- transformations ----------------------------------------------------------


def g_transform(m: Model) -> Model:
    """Kripke-to-QIS map: each agent's local state is the epistemic class of
    the current point, the environment local state is the point itself."""
    if m.flavor != "kripke":
        raise ModelError("g_transform expects a kripke model")
    new_states = {}
    qis_locals = {}
    runs = {}
    interp = {}
    for run in m.runs.values():
        names = []
        for ph in run.phases():
            s = run.state_at(ph)
            name = f"{run.rid}@{ph}"
            locals_ = tuple(str(m.cell_of(i, None, s))
                            for i in range(1, m.sig.agents + 1))
            qis_locals[name] = (name, locals_)
            new_states[name] = s
            names.append(name)
        p = len(run.prefix)
        runs[run.rid] = LassoRun(run.rid, tuple(names[:p]), tuple(names[p:]))
    for name, old in new_states.items():
        for pred in m.sig.predicates:
            interp[(pred, name)] = m.interp.get((pred, old), frozenset())
    return Model("qis", m.sig, m.domain, tuple(new_states), runs, interp,
                 m.const_map, qis_locals=qis_locals)


def kripke_to_mf(m: Model) -> Model:
    """View a Kripke model as an mf model: every individual shares the
    agent's relation."""
    if m.flavor != "kripke":
        raise ModelError("kripke_to_mf expects a kripke model")
    partitions = {}
    for i in range(1, m.sig.agents + 1):
        for a in m.domain:
            partitions[(i, a)] = m.partitions[(i,)]
    return Model("mf", m.sig, m.domain, m.states, m.runs, m.interp,
                 m.const_map, partitions=partitions)


# -- class checks -------------------------------------------------------------


def _pair_window(r1: LassoRun, r2: LassoRun, cap: int) -> int:
    lcm = math.lcm(len(r1.cycle), len(r2.cycle))
    b = max(len(r1.prefix), len(r2.prefix)) + 2 * lcm
    return min(b, cap)


def _individuals(m: Model) -> list[Optional[str]]:
    return list(m.domain) if m.flavor == "mf" else [None]


def check_synchronicity(m: Model, cap: int = DEFAULT_WINDOW_CAP) -> bool:
    """Modular synchronicity on the lasso presentation.

    A lasso revisits states across periods, so the literal time-equality
    reading of synchronicity is unsatisfiable on any cyclic presentation.
    The finite analogue checked here: related cycle-region points carry
    equal times modulo the pair's cycle periods (formula truth is
    phase-invariant, so period aliasing is unobservable), while a prefix
    position occurs at exactly one absolute time and so must match exactly.
    """
    for a in _individuals(m):
        for i in range(1, m.sig.agents + 1):
            for r1 in m.runs.values():
                for r2 in m.runs.values():
                    mod = math.lcm(len(r1.cycle), len(r2.cycle))
                    b = _pair_window(r1, r2, cap)
                    for n1 in range(b + 1):
                        for n2 in range(b + 1):
                            if n1 < len(r1.prefix) or n2 < len(r2.prefix):
                                ok = n1 == n2
                            else:
                                ok = (n1 - n2) % mod == 0
                            if ok:
                                continue
                            if m.states_related(i, a, r1.state_at(n1), r2.state_at(n2)):
                                return False
    return True


def check_unique_initial_state(m: Model) -> bool:
    starts = {run.state_at(0) for run in m.runs.values()}
    return len(starts) == 1


def check_shared_knowledge(m: Model) -> bool:
    """All agents induce the same relation on states."""
    realized = sorted(m.realized_states())
    for a in _individuals(m):
        for s1 in realized:
            for s2 in realized:
                verdicts = {m.states_related(i, a, s1, s2)
                            for i in range(1, m.sig.agents + 1)}
                if len(verdicts) > 1:
                    return False
    return True


def _lift(run: LassoRun, n: int) -> int:
    """Smallest time with the same state as n and at least prefix+cycle,
    leaving room below for one full period of witnesses."""
    p, c = len(run.prefix), len(run.cycle)
    if n < p:
        return n
    while n < p + c:
        n += c
    return n


def check_perfect_recall(m: Model, i: int, cap: int = DEFAULT_WINDOW_CAP) -> bool:
    """Windowed perfect recall for agent i (per individual on mf models).

    Related pairs are examined with the later-run time lifted by whole
    periods so the backward witness search has one full cycle of room;
    verdicts are exact up to the window, by periodicity of the relations.
    """
    for a in _individuals(m):
        for r1 in m.runs.values():
            for r2 in m.runs.values():
                b = _pair_window(r1, r2, cap)
                for n1 in range(1, b + 1):
                    for n2 in range(b + 1):
                        if not m.states_related(i, a, r1.state_at(n1), r2.state_at(n2)):
                            continue
                        if not _pr_pair(m, i, a, r1, n1, r2, n2):
                            return False
    return True


def _pr_pair(m: Model, i: int, a, r1: LassoRun, n1: int, r2: LassoRun, n2: int) -> bool:
    n2 = _lift(r2, n2)
    prev = r1.state_at(n1 - 1)
    if m.states_related(i, a, prev, r2.state_at(n2)):
        return True
    lo = max(0, n2 - len(r2.prefix) - 2 * len(r2.cycle))
    for k in range(lo, n2):
        if not m.states_related(i, a, prev, r2.state_at(k)):
            continue
        cur = r1.state_at(n1)
        if all(m.states_related(i, a, cur, r2.state_at(k2))
               for k2 in range(k + 1, n2 + 1)):
            return True
    return False


def check_no_learning(m: Model, i: int, cap: int = DEFAULT_WINDOW_CAP) -> bool:
    """Windowed no learning for agent i; the forward witness search is
    bounded by one period past the pair, with wraparound through the cycle."""
    for a in _individuals(m):
        for r1 in m.runs.values():
            for r2 in m.runs.values():
                b = _pair_window(r1, r2, cap)
                for n1 in range(b + 1):
                    for n2 in range(b + 1):
                        if not m.states_related(i, a, r1.state_at(n1), r2.state_at(n2)):
                            continue
                        if not _nl_pair(m, i, a, r1, n1, r2, n2):
                            return False
    return True


def _nl_pair(m: Model, i: int, a, r1: LassoRun, n1: int, r2: LassoRun, n2: int) -> bool:
    nxt = r1.state_at(n1 + 1)
    if m.states_related(i, a, nxt, r2.state_at(n2)):
        return True
    hi = max(n2, len(r2.prefix)) + 2 * len(r2.cycle)
    for k in range(n2 + 1, hi + 1):
        if not m.states_related(i, a, nxt, r2.state_at(k)):
            continue
        cur = r1.state_at(n1)
        if all(m.states_related(i, a, cur, r2.state_at(k2))
               for k2 in range(n2, k)):
            return True
    return False


def check_class(m: Model, tag: str, cap: int = DEFAULT_WINDOW_CAP) -> bool:
    """Dispatch on a class tag: pr, nl, sync, uis, shared."""
    if tag == "sync":
        return check_synchronicity(m, cap)
    if tag == "uis":
        return check_unique_initial_state(m)
    if tag == "shared":
        return check_shared_knowledge(m)
    if tag == "pr":
        return all(check_perfect_recall(m, i, cap)
                   for i in range(1, m.sig.agents + 1))
    if tag == "nl":
        return all(check_no_learning(m, i, cap)
                   for i in range(1, m.sig.agents + 1))
    raise ModelError(f"unknown class tag {tag!r}")
