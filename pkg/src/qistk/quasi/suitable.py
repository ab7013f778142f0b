"""Temporal and epistemic suitability between types, candidates and points,
plus the concordance/fusion combinators used by the tree machinery.

Type-level verdicts are structural (the next-step and S5 transfer criteria);
candidate and point levels add the necessary structural matching conditions
and consult the consistency oracle on the alpha/beta combinations.
"""

from __future__ import annotations

from typing import Optional

from ..closures import Closure, or_groupings
from ..syntax import (
    And, Formula, Know, Next, Not, absorptive_concat, big_and, free_variables,
    print_formula, spine_canon, spine_neg,
)
from .oracle import OracleBudget, consistent
from .types import (
    QPoint, QuasiError, StateCandidate, TypeSet, alpha_of, beta_of, fkey,
    type_formula, _lift, _strip_next,
)


_NEXT_CACHE: dict = {}
_EPI_CACHE: dict = {}


def suitable_next_types(t1: TypeSet, t2: TypeSet, closure: Closure,
                        budget: Optional[OracleBudget] = None) -> bool:
    """Next-step suitability: X psi in t1 iff psi in t2, for every X psi in
    the universe; optionally strengthened by the oracle."""
    if t1.index != t2.index:
        raise QuasiError("next-suitability needs equal indexes")
    key = (t1, t2)
    hit = _NEXT_CACHE.get(key)
    if hit is None:
        hit = _next_structural(t1, t2)
        _NEXT_CACHE[key] = hit
    if not hit:
        return False
    if budget is not None:
        gamma = And(t1.conjunction(), Next(t2.conjunction()))
        if consistent(gamma, budget, closure.agents).verdict == "no":
            return False
    return True


def _next_structural(t1: TypeSet, t2: TypeSet) -> bool:
    for c in t1.members | frozenset(spine_neg(m) for m in t1.members):
        if isinstance(c, Next):
            inner = spine_canon(c.sub)
            if inner in t2.members or spine_neg(inner) in t2.members:
                if (c in t1.members) != (inner in t2.members):
                    return False
    return True


def _k_body_holds(body: Formula, t: TypeSet) -> Optional[bool]:
    """Truth of a K-operand under a type: direct membership, or some
    disjunctive reading with a true part."""
    c = spine_canon(body)
    if c in t.members:
        return True
    if spine_neg(c) in t.members:
        # a disjunctive reading may still make it true
        pass
    verdicts = []
    for parts in or_groupings(c):
        vs = []
        for p in parts:
            if p in t.members:
                vs.append(True)
            elif spine_neg(p) in t.members:
                vs.append(False)
            else:
                vs.append(None)
        if any(v is True for v in vs):
            return True
        verdicts.append(vs)
    if any(all(v is False for v in vs) for vs in verdicts):
        return False
    return None


def suitable_epi_types(t1: TypeSet, t2: TypeSet, i: int, closure: Closure,
                       budget: Optional[OracleBudget] = None) -> bool:
    """Epistemic suitability for agent i: equal K_i commitments and the boxed
    content holds on both sides (the S5 transfer criterion)."""
    if absorptive_concat(t1.index, i) != absorptive_concat(t2.index, i):
        raise QuasiError("epistemic suitability needs compatible indexes")
    key = (t1, t2, i)
    hit = _EPI_CACHE.get(key)
    if hit is None:
        hit = _epi_structural(t1, t2, i)
        _EPI_CACHE[key] = hit
    if not hit:
        return False
    if budget is not None:
        gamma = And(t1.conjunction(), Not(Know(i, Not(t2.conjunction()))))
        if consistent(gamma, budget, closure.agents).verdict == "no":
            return False
    return True


_PROFILES: dict = {}


def _k_profile(t: TypeSet, i: int) -> frozenset:
    key = (t, i)
    hit = _PROFILES.get(key)
    if hit is None:
        hit = frozenset(m for m in t.members
                        if isinstance(m, Know) and m.agent == i)
        _PROFILES[key] = hit
    return hit


def _epi_structural(t1: TypeSet, t2: TypeSet, i: int) -> bool:
    # complement-closed universes make profile equality the full membership
    # criterion: a Know-formula negative on one side is absent from its profile
    if _k_profile(t1, i) != _k_profile(t2, i):
        return False
    for m in _k_profile(t1, i):
        if _k_body_holds(m.sub, t1) is False or _k_body_holds(m.sub, t2) is False:
            return False
    return True


def _type_relation_total(types1, types2, related) -> bool:
    """Every type on each side has a partner on the other."""
    return (all(any(related(a, b) for b in types2) for a in types1)
            and all(any(related(a, b) for a in types1) for b in types2))


def suitable_next_candidates(c1: StateCandidate, c2: StateCandidate,
                             closure: Closure,
                             budget: Optional[OracleBudget] = None) -> bool:
    if c1.index != c2.index:
        raise QuasiError("next-suitability needs equal indexes")
    rel = lambda a, b: suitable_next_types(a, b, closure)
    if not _type_relation_total(c1.types, c2.types, rel):
        return False
    con1, con2 = c1.con_map(), c2.con_map()
    if set(con1) != set(con2):
        return False
    for name in con1:
        if not rel(con1[name], con2[name]):
            return False
    if budget is not None:
        gamma = And(alpha_of(c1, closure), Next(alpha_of(c2, closure)))
        if consistent(gamma, budget, closure.agents).verdict == "no":
            return False
    return True


def suitable_epi_candidates(c1: StateCandidate, c2: StateCandidate, i: int,
                            closure: Closure,
                            budget: Optional[OracleBudget] = None) -> bool:
    if absorptive_concat(c1.index, i) != absorptive_concat(c2.index, i):
        raise QuasiError("epistemic suitability needs compatible indexes")
    rel = lambda a, b: suitable_epi_types(a, b, i, closure)
    if not _type_relation_total(c1.types, c2.types, rel):
        return False
    if budget is not None:
        gamma = And(alpha_of(c1, closure),
                    Not(Know(i, Not(alpha_of(c2, closure)))))
        if consistent(gamma, budget, closure.agents).verdict == "no":
            return False
    return True


def suitable_next(a, b, level: str, closure: Closure,
                  constant: Optional[str] = None,
                  budget: Optional[OracleBudget] = None) -> bool:
    """Dispatch on level: type, candidate or point; the c-variant also checks
    the constant-indexed types."""
    if level == "type":
        return suitable_next_types(a, b, closure, budget)
    if level == "candidate":
        return suitable_next_candidates(a, b, closure, budget)
    if level != "point":
        raise QuasiError(f"unknown level {level!r}")
    if not suitable_next_candidates(a.candidate, b.candidate, closure, budget):
        return False
    if not suitable_next_types(a.distinguished, b.distinguished, closure):
        return False
    if constant is not None:
        if (a.candidate.con_map().get(constant) != a.distinguished
                or b.candidate.con_map().get(constant) != b.distinguished):
            return False
    if budget is not None:
        gamma = And(beta_of(a, closure), Next(beta_of(b, closure)))
        if consistent(gamma, budget, closure.agents).verdict == "no":
            return False
    return True


def suitable_epi(a, b, i: int, level: str, closure: Closure,
                 constant: Optional[str] = None,
                 budget: Optional[OracleBudget] = None) -> bool:
    if level == "type":
        return suitable_epi_types(a, b, i, closure, budget)
    if level == "candidate":
        return suitable_epi_candidates(a, b, i, closure, budget)
    if level != "point":
        raise QuasiError(f"unknown level {level!r}")
    if not suitable_epi_candidates(a.candidate, b.candidate, i, closure, budget):
        return False
    if not suitable_epi_types(a.distinguished, b.distinguished, i, closure):
        return False
    if constant is not None:
        if (a.candidate.con_map().get(constant) != a.distinguished
                or b.candidate.con_map().get(constant) != b.distinguished):
            return False
    if budget is not None:
        gamma = And(beta_of(a, closure),
                    Not(Know(i, Not(beta_of(b, closure)))))
        if consistent(gamma, budget, closure.agents).verdict == "no":
            return False
    return True


# -- Phi, concordance, fusion ------------------------------------------------------


def phi_conjunction(t: TypeSet, i: int, pool, closure: Closure) -> Formula:
    """Conjunction of all pool types epistemically suitable with t."""
    related = [u for u in pool
               if suitable_epi_types(t, u, i, closure)]
    if not related:
        raise QuasiError("no suitable types in the pool")
    return big_and([u.conjunction() for u in
                    sorted(related, key=TypeSet.key)])


def phi_points(p: QPoint, i: int, pool, closure: Closure) -> frozenset[QPoint]:
    """Point-valued variant: the set of pool points suitable with p."""
    return frozenset(q for q in pool
                     if suitable_epi(p, q, i, "point", closure))


def concordant(lam, lam_prime, i: int, closure: Closure) -> bool:
    """Interval-partition compatibility of two type sequences: both split
    into the same number of consecutive blocks, suitable across each pair."""
    n, m = len(lam), len(lam_prime)
    if n == 0 or m == 0:
        return False

    def block_ok(a0, a1, b0, b1):
        return all(suitable_epi_types(s, s2, i, closure)
                   for s in lam[a0:a1] for s2 in lam_prime[b0:b1])

    reached = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        j, k = frontier.pop()
        if j == n and k == m:
            return True
        for j2 in range(j + 1, n + 1):
            for k2 in range(k + 1, m + 1):
                if (j2, k2) in reached:
                    continue
                if block_ok(j, j2, k, k2):
                    reached.add((j2, k2))
                    frontier.append((j2, k2))
    return (n, m) in reached


def fuse(lam: list, mu: list) -> list:
    """Fusion of candidate sequences: the first must end where the second
    starts."""
    if not lam or not mu:
        raise QuasiError("fusion needs non-empty sequences")
    if lam[-1] != mu[0]:
        raise QuasiError("fusion endpoints do not match")
    return list(lam[:-1]) + list(mu)
