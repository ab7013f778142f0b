"""The consistent-type pool: enumerated coherent types pruned by the sound
consequences of consistency (a next-step successor exists, eventualities are
realizable, negated knowledge and common knowledge have witnesses, and a
budget-bounded acceptable lasso exists)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..closures import Closure
from ..syntax import Common, Know, Not, Until, spine_neg
from .suitable import suitable_epi_types, suitable_next_types
from .types import QuasiError, TypeSet, enumerate_types


@dataclass
class TypePool:
    closure: Closure
    types: list[TypeSet]
    succ: list[set[int]]
    epi: dict[int, list[set[int]]]  # agent -> adjacency

    def neighbors(self, k: int) -> set[int]:
        out = set()
        for i in self.epi:
            out |= self.epi[i][k]
        return out


def _adjacency(closure: Closure, types: list[TypeSet]):
    """Suitability adjacency on coherent same-universe types.

    Next-suitability reduces to an equality join between the X-projection of
    the source and the content projection of the target; epistemic
    suitability reduces to equal per-agent knowledge profiles (veridicality
    holds inside each coherent type, so the cross-side body checks of the
    general criterion are automatic)."""
    from ..syntax import Know, Next, spine_canon

    n = len(types)
    universe = sorted({m for t in types for m in t.members}
                      | {spine_neg(m) for t in types for m in t.members},
                      key=str)
    next_pairs = [(c, spine_canon(c.sub)) for c in universe
                  if isinstance(c, Next)]
    src = {}
    tgt_groups: dict = {}
    for k, t in enumerate(types):
        src[k] = tuple(c in t.members for c, _ in next_pairs)
        tgt = tuple(b in t.members for _, b in next_pairs)
        tgt_groups.setdefault(tgt, set()).add(k)
    succ = [set(tgt_groups.get(src[k], set())) for k in range(n)]

    epi = {}
    for i in range(1, closure.agents + 1):
        profiles: dict = {}
        for k, t in enumerate(types):
            prof = frozenset(m for m in t.members
                             if isinstance(m, Know) and m.agent == i)
            profiles.setdefault(prof, set()).add(k)
        epi[i] = [set(profiles[frozenset(
            m for m in types[k].members
            if isinstance(m, Know) and m.agent == i)]) for k in range(n)]
    return succ, epi


def _until_realizable(types, succ, keep: set[int]) -> set[int]:
    """Indices whose until-members all admit a realization path inside keep."""
    bad = set()
    untils = {}
    for k in keep:
        for m in types[k].members:
            if isinstance(m, Until):
                untils.setdefault(m, set()).add(k)
    for u, holders in untils.items():
        realized = {k for k in keep if types[k].has(u.right)}
        changed = True
        while changed:
            changed = False
            for k in keep - realized:
                if types[k].has(u.left) and succ[k] & realized & keep:
                    realized.add(k)
                    changed = True
        bad |= holders - realized
    return keep - bad


def _witness_prune(closure, types, epi, keep: set[int]) -> set[int]:
    """Negated knowledge needs an epistemic neighbor refuting the content;
    negated common knowledge needs a refuting type in the component."""
    out = set(keep)
    for k in list(out):
        t = types[k]
        for m in t.members:
            if isinstance(m, Not) and isinstance(m.sub, Know):
                i, body = m.sub.agent, spine_neg(m.sub.sub)
                if not any(types[j].has(body) for j in epi[i][k] & out):
                    out.discard(k)
                    break
            if isinstance(m, Not) and isinstance(m.sub, Common):
                want = spine_neg(m.sub.sub)
                comp = _component(k, epi, out)
                if not any(types[j].has(want) for j in comp):
                    out.discard(k)
                    break
    return out


def _component(k: int, epi, keep: set[int]) -> set[int]:
    seen = {k}
    frontier = [k]
    while frontier:
        cur = frontier.pop()
        for i in epi:
            for j in epi[i][cur]:
                if j in keep and j not in seen:
                    seen.add(j)
                    frontier.append(j)
    return seen


def _sccs(keep: list[int], succ) -> list[list[int]]:
    """Iterative Tarjan over the kept subgraph."""
    keep_set = set(keep)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in keep:
        if root in index:
            continue
        work = [(root, iter(sorted(succ[root] & keep_set)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(sorted(succ[w] & keep_set))))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def good_sccs(types, succ, keep: set[int], cycle_cap: int) -> list[set[int]]:
    """Strongly connected sets with an internal cycle that realize every
    until-formula of their members.

    Realization-tour lengths are enforced where tours are built; here only
    self-fulfillment and cyclicity matter."""
    out = []
    for comp in _sccs(sorted(keep), succ):
        cset = set(comp)
        if len(cset) == 1:
            (k,) = cset
            if k not in succ[k]:
                continue
        if _until_realizable(types, succ, cset) == cset:
            out.append(cset)
    return out


def _reaches(succ, keep: set[int], targets: set[int]) -> set[int]:
    hit = set(t for t in targets if t in keep)
    changed = True
    while changed:
        changed = False
        for k in keep - hit:
            if succ[k] & hit:
                hit.add(k)
                changed = True
    return hit


def select_component(pool: TypePool, start: int) -> Optional[set[int]]:
    """A small subset closed under epistemic neighbors, containing a
    next-step successor for every member, and realizing every until-formula
    internally; the search builds structures inside it."""
    S: set[int] = set()
    frontier = {start}
    guard = 0
    while True:
        guard += 1
        if guard > 4 * len(pool.types) + 8:
            return None
        while frontier:
            k = frontier.pop()
            if k in S:
                continue
            S.add(k)
            frontier |= pool.neighbors(k) - S
        # each member needs a successor inside the set; prefer successors
        # whose neighbor closure is already contained
        grew = False
        for k in sorted(S):
            if pool.succ[k] & S:
                continue
            best = None
            for j in sorted(pool.succ[k]):
                growth = len(_neighbor_closure(pool, j) - S)
                if best is None or growth < best[0]:
                    best = (growth, j)
            if best is None:
                return None
            frontier.add(best[1])
            grew = True
            break
        if grew:
            continue
        # until-formulas must be realizable without leaving the set
        ok = _until_realizable(pool.types, pool.succ, S)
        missing = S - ok
        if not missing:
            return S
        k = sorted(missing)[0]
        added = False
        for m in sorted(pool.types[k].members, key=str):
            if not isinstance(m, Until):
                continue
            witnesses = {j for j in range(len(pool.types))
                         if pool.types[j].has(m.right)}
            path = _shortest_path(pool.succ, k, witnesses)
            if path and set(path) - S:
                frontier.update(set(path) - S)
                added = True
                break
        if not added:
            return None


def _neighbor_closure(pool: TypePool, start: int) -> set[int]:
    seen = {start}
    frontier = [start]
    while frontier:
        k = frontier.pop()
        for j in pool.neighbors(k):
            if j not in seen:
                seen.add(j)
                frontier.append(j)
    return seen


def _shortest_path(succ, start: int, targets: set[int]) -> Optional[list[int]]:
    if start in targets:
        return [start]
    prev = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for w in sorted(succ[v]):
                if w in prev:
                    continue
                prev[w] = v
                if w in targets:
                    out = [w]
                    while prev[out[-1]] is not None:
                        out.append(prev[out[-1]])
                    return list(reversed(out))
                nxt.append(w)
        frontier = nxt
    return None


def subpool(pool: TypePool, keep: set[int]) -> tuple[TypePool, dict[int, int]]:
    """Restriction of the pool to a subset; returns the restricted pool and
    the old-to-new index map."""
    kept = sorted(keep)
    remap = {old: new for new, old in enumerate(kept)}
    types = [pool.types[k] for k in kept]
    succ = [set(remap[j] for j in pool.succ[k] if j in keep) for k in kept]
    epi = {i: [set(remap[j] for j in pool.epi[i][k] if j in keep) for k in kept]
           for i in pool.epi}
    return TypePool(pool.closure, types, succ, epi), remap


def build_pool(closure: Closure, cycle_cap: int = 12,
               max_types: Optional[int] = None) -> TypePool:
    """Enumerate coherent types and prune to the budget-consistent core."""
    types = list(enumerate_types(closure, limit=max_types))
    succ, epi = _adjacency(closure, types)
    keep = set(range(len(types)))
    while True:
        before = set(keep)
        keep = {k for k in keep if succ[k] & keep}
        keep = _until_realizable(types, succ, keep)
        keep = _witness_prune(closure, types, epi, keep)
        good = good_sccs(types, succ, keep, cycle_cap)
        reachable = _reaches(succ, keep, set().union(*good) if good else set())
        keep &= reachable
        if keep == before:
            break
    kept = sorted(keep)
    remap = {old: new for new, old in enumerate(kept)}
    new_types = [types[k] for k in kept]
    new_succ = [set(remap[j] for j in succ[k] if j in keep) for k in kept]
    new_epi = {i: [set(remap[j] for j in epi[i][k] if j in keep) for k in kept]
               for i in epi}
    return TypePool(closure, new_types, new_succ, new_epi)
