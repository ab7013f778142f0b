"""Lasso sequences of state candidates and the acceptability check:
every until-formula in every type is realized by a suitable chain of types
within one window of the lasso."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..closures import Closure
from ..syntax import Formula, Until, print_formula
from .suitable import suitable_next_candidates, suitable_next_types
from .types import QuasiError, StateCandidate, TypeSet, fkey


@dataclass(frozen=True)
class CandidateLasso:
    rid: str
    prefix: tuple[StateCandidate, ...]
    cycle: tuple[StateCandidate, ...]
    pad: int = 0  # number of leading undefined steps (the X-padding)

    def __post_init__(self):
        if not self.cycle:
            raise QuasiError(f"sequence {self.rid}: empty cycle")
        if self.pad < 0:
            raise QuasiError("negative padding")

    def defined(self, n: int) -> bool:
        return n >= self.pad

    def candidate_at(self, n: int) -> Optional[StateCandidate]:
        if n < self.pad:
            return None
        k = n - self.pad
        if k < len(self.prefix):
            return self.prefix[k]
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]

    def position(self, n: int) -> Optional[int]:
        """Phase-like position index for defined steps."""
        if n < self.pad:
            return None
        k = n - self.pad
        if k < len(self.prefix):
            return k
        return len(self.prefix) + (k - len(self.prefix)) % len(self.cycle)

    def window(self) -> range:
        return range(self.pad,
                     self.pad + len(self.prefix) + 2 * len(self.cycle))

    def horizon(self, n: int) -> int:
        """Steps ahead of n that cover every reachable position once."""
        k = n - self.pad
        p, c = len(self.prefix), len(self.cycle)
        return (p - k if k < p else 0) + c


def _realizes(seq: CandidateLasso, n: int, start: TypeSet, u: Until,
              closure: Closure,
              forced: Optional[dict[int, TypeSet]] = None) -> bool:
    """Search a suitable chain from `start` at step n realizing the until."""
    horizon = seq.horizon(n) + len(seq.cycle)

    def step(k: int, t: TypeSet) -> bool:
        if t.has(u.right):
            return True
        if not t.has(u.left) or k >= horizon:
            return False
        nxt = seq.candidate_at(n + k + 1)
        if nxt is None:
            return False
        if forced is not None:
            t2 = forced.get(seq.position(n + k + 1))
            return (t2 is not None and suitable_next_types(t, t2, closure)
                    and step(k + 1, t2))
        return any(suitable_next_types(t, t2, closure) and step(k + 1, t2)
                   for t2 in nxt.types)

    return step(0, start)


def acceptable_sequence_check(seq: CandidateLasso, closure: Closure,
                              check_suitability: bool = True):
    """Acceptability of a lasso of candidates.

    Returns (ok, report) where report lists (step, formula) for every
    unrealized eventuality, plus any consecutive-suitability failures."""
    problems: list[tuple[int, str]] = []
    if check_suitability:
        for n in seq.window():
            here, there = seq.candidate_at(n), seq.candidate_at(n + 1)
            if not suitable_next_candidates(here, there, closure):
                problems.append((n, "candidates not next-suitable"))
    for n in seq.window():
        cand = seq.candidate_at(n)
        for t in cand.types:
            for m in t.members:
                if isinstance(m, Until) and not _realizes(seq, n, t, m, closure):
                    problems.append((n, fkey(m)))
        con = cand.con_map()
        if con:
            for name in con:
                forced = {}
                for k in seq.window():
                    pos = seq.position(k)
                    forced[pos] = seq.candidate_at(k).con_map()[name]
                t = con[name]
                for m in t.members:
                    if isinstance(m, Until) and not _realizes(
                            seq, n, t, m, closure, forced=forced):
                        problems.append((n, f"{fkey(m)} [constant {name}]"))
    return (not problems), problems
