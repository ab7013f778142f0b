"""Closure operators over formulas: subformula sets, negation/next closure,
the single-variable closure, and the indexed closure levels.

Closure members are kept in spine-canonical form (double negation removed,
negation pushed through X), so complements pair up exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .syntax import (
    Atom, Common, Const, Formula, Implies, Know, Next, Not, Until, Var,
    absorptive_concat, all_variables, alternation_depth, constants_of,
    everyone_knows, free_variables, fresh_variable, print_formula, spine_canon,
    spine_neg, subformulas, substitute, to_core,
)


class ClosureError(ValueError):
    pass


def closure_subC(phi: Formula, agents: int) -> frozenset[Formula]:
    """Subformulas of the core form plus EC/K_iC companions of C-subformulas."""
    core = to_core(phi)
    out = {spine_canon(s) for s in subformulas(core)}
    for s in subformulas(core):
        if isinstance(s, Common):
            out.add(spine_canon(to_core(everyone_knows(s, agents))))
            for i in range(1, agents + 1):
                out.add(spine_canon(Know(i, s)))
    return frozenset(out)


def closure_subCON(phi: Formula, agents: int) -> frozenset[Formula]:
    """Negation/next closure: adds ~s, X s and X~s for every member."""
    out = set()
    for s in closure_subC(phi, agents):
        out.add(s)
        out.add(spine_neg(s))
        out.add(Next(s))
        out.add(Next(spine_neg(s)))
    return frozenset(out)


def closure_sub_n(phi: Formula, agents: int, n: int) -> frozenset[Formula]:
    """Members of the negation/next closure with at most n free variables."""
    return frozenset(s for s in closure_subCON(phi, agents)
                     if len(free_variables(s)) <= n)


def pick_fresh_variable(phi: Formula) -> str:
    """Deterministic variable not occurring in the formula."""
    used = set(all_variables(phi)) | set(constants_of(phi))
    if "x" not in used:
        return "x"
    return fresh_variable("x", used)


def closure_sub_x(phi: Formula, agents: int, x: Optional[str] = None) -> frozenset[Formula]:
    """One-variable closure: members with at most one free variable, the free
    variable renamed to x."""
    if x is None:
        x = pick_fresh_variable(phi)
    elif x in all_variables(phi) or x in constants_of(phi):
        raise ClosureError(f"variable {x!r} occurs in the formula")
    out = set()
    for s in closure_sub_n(phi, agents, 1):
        fv = free_variables(s)
        if fv:
            (y,) = fv
            s = spine_canon(substitute(s, {y: Var(x)}))
        out.add(s)
    return frozenset(out)


# -- K-disjunction coding ----------------------------------------------------


def encode_k_disjunction(i: int, parts: list[Formula]) -> Formula:
    """Canonical K_i(d1 | ... | dn) member: parts sorted, deduplicated,
    folded as a right-nested core disjunction."""
    uniq = sorted({spine_canon(p) for p in parts}, key=print_formula)
    if not uniq:
        raise ClosureError("empty disjunction")
    body = uniq[-1]
    for p in reversed(uniq[:-1]):
        body = Implies(spine_neg(p), body)
    return Know(i, body)


def or_groupings(body: Formula) -> list[list[Formula]]:
    """All readings of a formula as a right-nested disjunction list."""
    outs = [[body]]
    if isinstance(body, Implies):
        first = spine_neg(body.left)
        for rest in or_groupings(body.right):
            outs.append([first] + rest)
    return outs


# -- indexed closure levels ---------------------------------------------------


@dataclass(frozen=True)
class Closure:
    """Materialized closure data for one formula."""

    phi: Formula
    agents: int
    x: str
    depth: int
    base: frozenset[Formula]

    @staticmethod
    def of(phi: Formula, agents: int, x: Optional[str] = None) -> "Closure":
        if x is None:
            x = pick_fresh_variable(phi)
        return Closure(phi, agents, x, alternation_depth(phi),
                       closure_sub_x(phi, agents, x))

    def sentences(self) -> frozenset[Formula]:
        return frozenset(s for s in self.base if not free_variables(s))

    def complement_pairs(self) -> list[tuple[Formula, Formula]]:
        """Base members grouped with their canonical complements."""
        seen, pairs = set(), []
        for c in sorted(self.base, key=print_formula):
            if c in seen:
                continue
            n = spine_neg(c)
            if n not in self.base:
                raise ClosureError(f"closure not complement-closed at {print_formula(c)}")
            seen.update({c, n})
            pairs.append((c, n))
        return pairs

    def _member_level(self, psi: Formula, k: int, only_agent: Optional[int]) -> bool:
        c = spine_canon(psi)
        if c in self.base:
            return True
        if k <= 0:
            return False
        core = c.sub if isinstance(c, Not) else c
        if not isinstance(core, Know):
            return False
        if only_agent is not None and core.agent != only_agent:
            # lower levels admit any agent
            return self._member_level(core, k - 1, None) if k > 1 else False
        if not 1 <= core.agent <= self.agents:
            return False
        for parts in or_groupings(core.sub):
            if all(self._member_level(p, k - 1, None) for p in parts):
                return True
        return False

    def member(self, psi: Formula, iota: tuple[int, ...]) -> bool:
        """Membership in cl_iota, without materializing disjunction layers."""
        if iota == ():
            return self._member_level(psi, self.depth, None)
        if len(iota) > self.depth:
            raise ClosureError(
                f"index length {len(iota)} exceeds alternation depth {self.depth}")
        k = self.depth - (len(iota) - 1)
        return self._member_level(psi, k, iota[-1])

    def iter_level(self, k: int, part_pool: int = 64) -> Iterator[Formula]:
        """Stream cl_k: the base, then K-disjunction layers by subset size.

        Higher layers draw disjuncts from a finite prefix (part_pool) of the
        previous level's stream.
        """
        from itertools import combinations, islice

        yield from sorted(self.base, key=print_formula)
        if k <= 0:
            return
        pool = list(islice(self.iter_level(k - 1, part_pool), part_pool))
        for size in range(1, len(pool) + 1):
            for combo in combinations(pool, size):
                for i in range(1, self.agents + 1):
                    member = encode_k_disjunction(i, list(combo))
                    yield member
                    yield spine_neg(member)


def cl_member(psi: Formula, iota: tuple[int, ...], phi: Formula, agents: int) -> bool:
    return Closure.of(phi, agents).member(psi, iota)
