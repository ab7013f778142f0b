"""Two-tier consistency oracle replacing provability-based consistency.

The hintikka tier is a depth-bounded tableau: every expansion is a validity,
so a closed tableau refutes the formula (sound for "no").  The
bounded-semantic tier searches small Kripke models through the evaluator and
is sound for "yes".  Verdicts carry the tier that produced them.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Optional

from ..models import LassoRun, Model
from ..semantics import find_counterexample
from ..syntax import (
    And, Atom, Common, Const, Exists, Forall, Formula, Implies, Know, Next,
    Not, Signature, Term, Until, Var, everyone_knows, free_variables,
    predicates_of, print_formula, spine_canon, spine_neg, to_core,
)


@dataclass(frozen=True)
class OracleBudget:
    tier: str = "hintikka"  # or "bounded-semantic"
    domain_max: int = 2
    states_max: int = 3
    prefix_max: int = 1
    cycle_max: int = 2
    time_budget: float = 10.0
    max_models: int = 5000
    tableau_depth: int = 5

    def __post_init__(self):
        if min(self.domain_max, self.states_max, self.cycle_max) < 1:
            raise ValueError("budget bounds must be positive")
        if self.tier not in ("hintikka", "bounded-semantic"):
            raise ValueError(f"unknown oracle tier {self.tier!r}")


@dataclass(frozen=True)
class OracleVerdict:
    verdict: str  # "yes" | "no" | "unknown"
    tier: str
    witness: Optional[Model] = None

    def __bool__(self):
        return self.verdict == "yes"


# -- hintikka tier ---------------------------------------------------------------


def _conjuncts(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        return _conjuncts(phi.left) + _conjuncts(phi.right)
    return [spine_canon(to_core(phi))]


class _Tableau:
    def __init__(self, agents: int, depth: int, deadline: float):
        self.agents = agents
        self.depth = depth
        self.deadline = deadline
        self.fresh = 0

    def refutes(self, fs: frozenset[Formula], depth: int) -> bool:
        """True only when every branch closes within the depth bound."""
        if time.monotonic() > self.deadline:
            return False
        return self._expand(set(fs), set(), depth)

    def _expand(self, branch: set[Formula], done: set[Formula], depth: int) -> bool:
        while True:
            for f in branch:
                if spine_neg(f) in branch:
                    return True
            todo = [f for f in sorted(branch, key=print_formula) if f not in done]
            if not todo:
                return self._modal_close(branch, depth)
            f = todo[0]
            done = done | {f}
            step = self._alpha(f, branch)
            if step is not None:
                branch = branch | step
                continue
            branches = self._beta(f, branch)
            if branches is not None:
                return all(self._expand(branch | b, set(done), depth)
                           for b in branches)
            # leaf for the propositional pass; modal content handled at close

    def _alpha(self, f: Formula, branch: set[Formula]) -> Optional[set[Formula]]:
        if isinstance(f, Not) and isinstance(f.sub, Implies):
            l, r = f.sub.left, f.sub.right
            return {spine_canon(l), spine_neg(r)}
        if isinstance(f, Know):
            return {spine_canon(f.sub)}  # T
        if isinstance(f, Common):
            ec = to_core(everyone_knows(Common(f.sub), self.agents))
            return {spine_canon(f.sub), spine_canon(ec)}
        if isinstance(f, Forall):
            terms = self._branch_terms(branch, f.var)
            return {spine_canon(substitute_term(f.body, f.var, t)) for t in terms}
        if isinstance(f, Not) and isinstance(f.sub, Forall):
            w = self._fresh()
            inst = substitute_term(f.sub.body, f.sub.var, Var(w))
            return {spine_neg(inst)}
        if isinstance(f, Not) and isinstance(f.sub, Until):
            # ~(a U b) adds ~b now; the tail splits in the beta pass
            return {spine_neg(f.sub.right)}
        return None

    def _beta(self, f: Formula, branch: set[Formula]):
        if isinstance(f, Implies):
            return [{spine_neg(f.left)}, {spine_canon(f.right)}]
        if isinstance(f, Until):
            a, b = f.left, f.right
            return [{spine_canon(b)},
                    {spine_canon(a), Next(spine_canon(f))}]
        if isinstance(f, Not) and isinstance(f.sub, Until):
            a = f.sub.left
            return [{spine_neg(a)}, {Next(spine_canon(f))}]
        if isinstance(f, Not) and isinstance(f.sub, Common):
            ec = to_core(everyone_knows(Common(f.sub.sub), self.agents))
            return [{spine_neg(f.sub.sub)}, {spine_neg(ec)}]
        return None

    def _modal_close(self, branch: set[Formula], depth: int) -> bool:
        if depth <= 0:
            return False
        nexts = {spine_canon(f.sub) for f in branch if isinstance(f, Next)}
        if nexts and self._expand(set(nexts), set(), depth - 1):
            return True
        for f in sorted(branch, key=print_formula):
            if isinstance(f, Not) and isinstance(f.sub, Know):
                i, body = f.sub.agent, f.sub.sub
                world = {spine_neg(body)}
                for g in branch:
                    if isinstance(g, Know) and g.agent == i:
                        world.add(g)           # axiom 4: knowledge persists
                    if (isinstance(g, Not) and isinstance(g.sub, Know)
                            and g.sub.agent == i):
                        world.add(g)           # axiom 5: ignorance persists
                if self._expand(set(world), set(), depth - 1):
                    return True
        return False

    def _branch_terms(self, branch: set[Formula], var: str) -> list[Term]:
        terms: list[Term] = []
        names = set()

        def walk(f: Formula):
            if isinstance(f, Atom):
                for t in f.terms:
                    if t.name not in names:
                        names.add(t.name)
                        terms.append(t)
            from ..syntax import children
            for c in children(f):
                walk(c)

        for f in branch:
            walk(f)
        if not terms:
            terms.append(Var(self._fresh()))
        return terms

    def _fresh(self) -> str:
        self.fresh += 1
        return f"_w{self.fresh}"


def substitute_term(body: Formula, var: str, term: Term) -> Formula:
    from ..syntax import substitute
    return substitute(body, {var: term})


def hintikka_refutes(gamma: Formula, agents: int, budget: OracleBudget) -> bool:
    deadline = time.monotonic() + budget.time_budget
    tab = _Tableau(agents, budget.tableau_depth, deadline)
    start = frozenset(_conjuncts(to_core(gamma)))
    return tab.refutes(start, budget.tableau_depth)


# -- bounded-semantic tier ---------------------------------------------------------


def _close_existentially(gamma: Formula) -> Formula:
    for v in sorted(free_variables(gamma)):
        gamma = Exists(v, gamma)
    return gamma


def _lassos_from_function(states: tuple[str, ...], delta: dict[str, str]):
    runs = {}
    for idx, start in enumerate(states):
        path, seen = [], {}
        s = start
        while s not in seen:
            seen[s] = len(path)
            path.append(s)
            s = delta[s]
        cut = seen[s]
        runs[f"r{idx}"] = LassoRun(f"r{idx}", tuple(path[:cut]), tuple(path[cut:]))
    return runs


def _partitions(states: tuple[str, ...]):
    if len(states) == 1:
        yield (frozenset(states),)
        return
    # set partitions by restricted growth strings
    n = len(states)

    def rec(i, groups):
        if i == n:
            yield tuple(frozenset(g) for g in groups)
            return
        for g in groups:
            g.append(states[i])
            yield from rec(i + 1, groups)
            g.pop()
        groups.append([states[i]])
        yield from rec(i + 1, groups)
        groups.pop()

    yield from rec(1, [[states[0]]])


def search_model(gamma: Formula, agents: int, budget: OracleBudget,
                 seed: int = 0) -> Optional[tuple[Model, tuple]]:
    """Search small Kripke models for a point satisfying the formula.

    Skeletons (state count, transition function, partitions) are enumerated
    exhaustively within bounds; predicate interpretations are enumerated
    exhaustively when small, otherwise sampled, all under the model budget.
    """
    gamma = _close_existentially(gamma)
    preds = predicates_of(gamma)
    consts = sorted({c for c in _constants(gamma)})
    deadline = time.monotonic() + budget.time_budget
    rng = random.Random(seed)
    tried = 0
    for w in range(1, budget.states_max + 1):
        states = tuple(f"s{i}" for i in range(w))
        for d in range(1, budget.domain_max + 1):
            domain = tuple(f"d{i}" for i in range(d))
            atoms = [(p, combo) for p, a in sorted(preds.items())
                     for combo in product(domain, repeat=a)]
            per_state = len(atoms)
            exhaustive = (2 ** (per_state * w)) <= budget.max_models
            for delta_vals in product(states, repeat=w):
                delta = dict(zip(states, delta_vals))
                runs = _lassos_from_function(states, delta)
                for parts in product(_partitions(states), repeat=agents):
                    partitions = {(i + 1,): parts[i] for i in range(agents)}
                    if exhaustive:
                        choices = product((False, True), repeat=per_state * w)
                    else:
                        choices = (tuple(rng.random() < 0.5
                                         for _ in range(per_state * w))
                                   for _ in range(64))
                    for bits in choices:
                        tried += 1
                        if tried > budget.max_models or time.monotonic() > deadline:
                            return None
                        interp = {}
                        it = iter(bits)
                        for s in states:
                            for (p, combo) in atoms:
                                if next(it):
                                    interp.setdefault((p, s), set()).add(combo)
                        interp = {k: frozenset(v) for k, v in interp.items()}
                        for cvals in product(domain, repeat=len(consts)):
                            sig = Signature(agents, preds, frozenset(consts))
                            m = Model("kripke", sig, domain, states, runs,
                                      interp, dict(zip(consts, cvals)),
                                      partitions=partitions)
                            hit = find_counterexample(m, Not(gamma))
                            if hit is not None:
                                return m, hit
    return None


def _constants(phi: Formula) -> frozenset[str]:
    from ..syntax import constants_of
    return constants_of(phi)


# -- entry point --------------------------------------------------------------------


_CACHE: dict = {}


def consistent(gamma: Formula, budget: OracleBudget, agents: int = 1,
               seed: int = 0) -> OracleVerdict:
    """Consistency verdict for a formula: hintikka tier answers yes unless
    refuted; the bounded-semantic tier confirms with a witness model or
    returns unknown."""
    key = (print_formula(gamma), budget, agents)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    refuted = hintikka_refutes(gamma, agents, budget)
    if budget.tier == "hintikka":
        out = OracleVerdict("no" if refuted else "yes", "hintikka")
    elif refuted:
        out = OracleVerdict("no", "hintikka")
    else:
        found = search_model(gamma, agents, budget, seed)
        if found is None:
            out = OracleVerdict("unknown", "bounded-semantic")
        else:
            out = OracleVerdict("yes", "bounded-semantic", found[0])
    _CACHE[key] = out
    return out
