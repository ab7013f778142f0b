"""Satisfaction on finite lasso models: QIS, Kripke, and mf flavors.

Truth at a point depends only on the run phase (relations are state-induced),
which keys the memo table and bounds the until-scan.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Optional

from .models import Model, ModelError, epistemic_reachable
from .syntax import (
    And, Atom, Common, Const, Exists, Forall, Formula, Iff, Implies, Know,
    Next, Not, Or, Term, Until, Var, free_variables,
)

Assignment = Mapping[str, str]


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    truth: bool
    witness: Optional[tuple[str, int, dict[str, str]]] = None


class _Evaluator:
    def __init__(self, m: Model):
        self.m = m
        self.memo: dict = {}

    def term_value(self, t: Term, sigma: Assignment) -> str:
        if isinstance(t, Const):
            return self.m.const_map[t.name]
        if t.name not in sigma:
            raise EvalError(f"unbound variable {t.name!r}")
        return sigma[t.name]

    def ev(self, rid: str, n: int, sigma: Assignment, phi: Formula) -> bool:
        run = self.m.runs[rid]
        fv = free_variables(phi)
        key = (rid, run.phase(n), phi, tuple(sorted((v, sigma[v]) for v in fv)))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        # recursion is well-founded: modal steps strictly shrink the formula
        out = self._ev(rid, n, sigma, phi)
        self.memo[key] = out
        return out

    def _ev(self, rid: str, n: int, sigma: Assignment, phi: Formula) -> bool:
        m = self.m
        if isinstance(phi, Atom):
            state = m.runs[rid].state_at(n)
            tup = tuple(self.term_value(t, sigma) for t in phi.terms)
            return tup in m.interp.get((phi.pred, state), frozenset())
        if isinstance(phi, Not):
            return not self.ev(rid, n, sigma, phi.sub)
        if isinstance(phi, Implies):
            return (not self.ev(rid, n, sigma, phi.left)
                    or self.ev(rid, n, sigma, phi.right))
        if isinstance(phi, And):
            return (self.ev(rid, n, sigma, phi.left)
                    and self.ev(rid, n, sigma, phi.right))
        if isinstance(phi, Or):
            return (self.ev(rid, n, sigma, phi.left)
                    or self.ev(rid, n, sigma, phi.right))
        if isinstance(phi, Iff):
            return (self.ev(rid, n, sigma, phi.left)
                    == self.ev(rid, n, sigma, phi.right))
        if isinstance(phi, Forall):
            return all(self.ev(rid, n, {**sigma, phi.var: a}, phi.body)
                       for a in m.domain)
        if isinstance(phi, Exists):
            return any(self.ev(rid, n, {**sigma, phi.var: a}, phi.body)
                       for a in m.domain)
        if isinstance(phi, Next):
            return self.ev(rid, n + 1, sigma, phi.sub)
        if isinstance(phi, Until):
            return self._until(rid, n, sigma, phi)
        if isinstance(phi, Know):
            return self._know(rid, n, sigma, phi)
        if isinstance(phi, Common):
            return self._common(rid, n, sigma, phi)
        raise EvalError(f"cannot evaluate {phi!r}")

    def _until(self, rid: str, n: int, sigma: Assignment, phi: Until) -> bool:
        run = self.m.runs[rid]
        p, c = len(run.prefix), len(run.cycle)
        horizon = (p - n if n < p else 0) + c
        for k in range(n, n + horizon + 1):
            if self.ev(rid, k, sigma, phi.right):
                return True
            if not self.ev(rid, k, sigma, phi.left):
                return False
        return False

    def _related_points(self, rid: str, n: int, i: int,
                        individuals: list[Optional[str]]):
        here = self.m.point_state((rid, n))
        for rid2 in sorted(self.m.runs):
            run2 = self.m.runs[rid2]
            for t in run2.phases():
                state2 = run2.state_at(t)
                if any(self.m.states_related(i, a, here, state2)
                       for a in individuals):
                    yield rid2, t

    def _know_individuals(self, sigma: Assignment, phi) -> list[Optional[str]]:
        if self.m.flavor != "mf":
            return [None]
        fv = free_variables(phi.sub)
        if fv:
            if len(fv) > 1:
                raise EvalError("mf semantics needs a monodic modal operand")
            (y,) = fv
            if y not in sigma:
                raise EvalError(f"unbound variable {y!r}")
            return [sigma[y]]
        return list(self.m.domain)  # sentence: every individual's relation

    def _know(self, rid: str, n: int, sigma: Assignment, phi: Know) -> bool:
        individuals = self._know_individuals(sigma, phi)
        return all(self.ev(rid2, t, sigma, phi.sub)
                   for rid2, t in self._related_points(rid, n, phi.agent, individuals))

    def _common(self, rid: str, n: int, sigma: Assignment, phi: Common) -> bool:
        if self.m.flavor == "mf":
            fv = free_variables(phi.sub)
            if len(fv) > 1:
                raise EvalError("mf semantics needs a monodic modal operand")
            a = sigma[next(iter(fv))] if fv else None
        else:
            a = None
        for rid2 in sorted(self.m.runs):
            run2 = self.m.runs[rid2]
            for t in run2.phases():
                if epistemic_reachable(self.m, a, (rid, n), (rid2, t)):
                    if not self.ev(rid2, t, sigma, phi.sub):
                        return False
        return True


def evaluate(m: Model, rid: str, n: int, sigma: Assignment, phi: Formula) -> bool:
    """Satisfaction at point (rid, n) under the assignment."""
    missing = free_variables(phi) - set(sigma)
    if missing:
        raise EvalError(f"assignment misses {sorted(missing)}")
    if rid not in m.runs:
        raise ModelError(f"unknown run {rid}")
    return _Evaluator(m).ev(rid, n, dict(sigma), phi)


def assignments(m: Model, variables) -> list[dict[str, str]]:
    """All assignments of the variables into the domain, lexicographic by
    variable name then declared domain order."""
    names = sorted(variables)
    return [dict(zip(names, combo)) for combo in product(m.domain, repeat=len(names))]


def point_truth(m: Model, rid: str, n: int, phi: Formula) -> bool:
    """Truth at a point: satisfied under every assignment of the free variables."""
    ev = _Evaluator(m)
    return all(ev.ev(rid, n, sigma, phi)
               for sigma in assignments(m, free_variables(phi)))


def find_counterexample(m: Model, phi: Formula):
    """First point and assignment falsifying the formula, in deterministic
    order; None if the formula is true on the model."""
    ev = _Evaluator(m)
    sigmas = assignments(m, free_variables(phi))
    for rid in sorted(m.runs):
        for t in m.runs[rid].phases():
            for sigma in sigmas:
                if not ev.ev(rid, t, sigma, phi):
                    return (rid, t, sigma)
    return None


def model_truth(m: Model, phi: Formula, want_witness: bool = True) -> Verdict:
    """Truth on the model: true at every point."""
    cex = find_counterexample(m, phi)
    if cex is None:
        return Verdict(True)
    return Verdict(False, cex if want_witness else None)


@dataclass(frozen=True)
class ProbeReport:
    tried: int
    passed: int
    failed: int
    first_counterexample: Optional[tuple] = None  # (model index, point, sigma)
    exhausted: bool = False

    @property
    def ok(self) -> bool:
        return self.failed == 0 and not self.exhausted


def validity_probe(models, phi: Formula, limit: Optional[int] = None) -> ProbeReport:
    """Evaluate a formula for truth across an iterable of models."""
    tried = passed = failed = 0
    first = None
    for idx, m in enumerate(models):
        if limit is not None and tried >= limit:
            break
        tried += 1
        v = model_truth(m, phi)
        if v.truth:
            passed += 1
        else:
            failed += 1
            if first is None:
                first = (idx, v.witness)
    return ProbeReport(tried, passed, failed, first)
