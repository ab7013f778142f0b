"""Bounded satisfiability search: build a quasimodel for a monodic formula
from the pruned type pool, or report unknown.

Structures use singleton state candidates, so each has a single forced
object; runs are acceptable type lassos, with rotations of covering cycles
for the synchronous class and a shared initial type for the unique-initial-
state class.  The oracle is incomplete by design: there is no unsat verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..closures import Closure
from ..syntax import Formula, Until, agents_of, is_monodic, spine_neg
from .oracle import OracleBudget
from .pool import TypePool, build_pool, good_sccs
from .sequences import CandidateLasso, acceptable_sequence_check
from .structure import ObjectTrack, Quasimodel, target_formula, validate_quasimodel
from .suitable import suitable_epi_types
from .types import QuasiError, StateCandidate, TypeSet


@dataclass(frozen=True)
class SearchResult:
    status: str  # "sat" | "unknown"
    quasimodel: Optional[Quasimodel] = None
    reason: str = ""
    pool_size: int = 0


def _bfs_path(succ, keep, start: int, targets: set[int]) -> Optional[list[int]]:
    if start in targets:
        return [start]
    prev = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for w in sorted(succ[v]):
                if w not in keep or w in prev:
                    continue
                prev[w] = v
                if w in targets:
                    path = [w]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return list(reversed(path))
                nxt.append(w)
        frontier = nxt
    return None


def _close_cycle(succ, scc: set[int], cur: int, start: int) -> Optional[list[int]]:
    """Path cur -> start inside the SCC using at least one edge."""
    best = None
    for w in sorted(succ[cur] & scc):
        if w == start:
            return [cur, start]
        p = _bfs_path(succ, scc, w, {start})
        if p is not None and (best is None or len(p) + 1 < len(best)):
            best = [cur] + p
    return best


def _realization_tour(pool: TypePool, scc: set[int], start: int) -> Optional[list[int]]:
    """A closed walk From start inside the SCC that visits a witness for
    every until-formula present in the component."""
    types, succ = pool.types, pool.succ
    untils = sorted({m for k in scc for m in types[k].members
                     if isinstance(m, Until)},
                    key=lambda m: str(m))
    walk = [start]
    cur = start
    for u in untils:
        witnesses = {k for k in scc if types[k].has(u.right)}
        if not witnesses:
            return None
        leg = _bfs_path(succ, scc, cur, witnesses)
        if leg is None:
            return None
        walk.extend(leg[1:])
        cur = walk[-1]
    closing = _close_cycle(succ, scc, cur, start)
    if closing is None:
        return None
    walk.extend(closing[1:])
    return walk[:-1]  # the closing edge back to start is implied


def find_cycle(pool: TypePool, start: int, cycle_cap: int) -> Optional[list[int]]:
    """An acceptable cycle through start, if one exists within the cap."""
    keep = set(range(len(pool.types)))
    for scc in good_sccs(pool.types, pool.succ, keep, cycle_cap):
        if start in scc:
            tour = _realization_tour(pool, scc, start)
            if tour is not None and len(tour) <= cycle_cap:
                return tour
    return None


def find_lasso(pool: TypePool, start: int, prefix_cap: int,
               cycle_cap: int) -> Optional[tuple[list[int], list[int]]]:
    """An acceptable lasso from start: a path into a good component plus a
    realization tour inside it."""
    keep = set(range(len(pool.types)))
    sccs = good_sccs(pool.types, pool.succ, keep, cycle_cap)
    for scc in sorted(sccs, key=lambda s: sorted(s)):
        path = _bfs_path(pool.succ, keep, start, scc)
        if path is None or len(path) - 1 > prefix_cap:
            continue
        entry = path[-1]
        tour = _realization_tour(pool, scc, entry)
        if tour is None or len(tour) > cycle_cap:
            continue
        return path[:-1], tour
    return None


def _singleton(pool: TypePool, k: int, constants) -> StateCandidate:
    t = pool.types[k]
    return StateCandidate(t.index, (t,), tuple((c, t) for c in constants))


def _lasso_to_sequence(pool: TypePool, rid: str, prefix: list[int],
                       cycle: list[int], constants) -> CandidateLasso:
    return CandidateLasso(
        rid,
        tuple(_singleton(pool, k, constants) for k in prefix),
        tuple(_singleton(pool, k, constants) for k in cycle))


def _check_lasso(pool: TypePool, seq: CandidateLasso) -> bool:
    ok, _ = acceptable_sequence_check(seq, pool.closure)
    return ok


def _assemble(pool: TypePool, phi: Formula, tags,
              sequences: dict[str, CandidateLasso],
              designated: tuple[str, int, TypeSet]) -> Quasimodel:
    from .structure import SUITABILITY_GENERATED

    cl = pool.closure
    track = {}
    for rid, seq in sequences.items():
        for n in seq.window():
            pos = seq.position(n)
            track[(rid, pos)] = seq.candidate_at(n).types[0]
    obj = ObjectTrack("rho0", track)
    return Quasimodel(phi, cl, "plain", frozenset(tags), sequences,
                      {"rho0": obj}, SUITABILITY_GENERATED, designated)


def bounded_sat_search(phi: Formula, tags: frozenset[str] = frozenset(),
                       budget: Optional[OracleBudget] = None,
                       agents: Optional[int] = None) -> SearchResult:
    """Search for a quasimodel witnessing satisfiability under the class
    tags; returns sat with the structure, or unknown."""
    if not is_monodic(phi):
        raise QuasiError("satisfiability search needs a monodic formula")
    if budget is None:
        budget = OracleBudget(prefix_max=4, cycle_max=12)
    if agents is None:
        agents = max(agents_of(phi), default=1)
    cl = Closure.of(phi, agents)
    cycle_cap = max(budget.cycle_max, 4)
    pool = build_pool(cl, cycle_cap=cycle_cap)
    if not pool.types:
        return SearchResult("unknown", reason="no consistent types survive")
    goal = target_formula(phi, cl)
    starts = [k for k, t in enumerate(pool.types) if t.has(goal)]
    if not starts:
        return SearchResult("unknown", reason="no type contains the formula",
                            pool_size=len(pool.types))
    constants = sorted(_constants_of(phi))
    unsupported = tags - {"sync", "uis", "pr", "nl"}
    if unsupported:
        raise QuasiError(f"unknown tags {sorted(unsupported)}")

    from .pool import select_component, subpool

    ranked = []
    for start in starts:
        comp = select_component(pool, start)
        if comp is not None:
            ranked.append((len(comp), start, comp))
    ranked.sort(key=lambda x: (x[0], x[1]))
    for _, start, comp in ranked[:8]:
        sub, remap = subpool(pool, comp)
        q = _try_structure(sub, phi, tags, remap[start], budget, constants)
        if q is None:
            continue
        ok, violations = validate_quasimodel(q, type_pool=pool.types)
        if not ok:
            continue
        if _extraction_confirms(q, phi, budget):
            return SearchResult("sat", q, pool_size=len(pool.types))
    return SearchResult("unknown",
                        reason="no structure within budget validates",
                        pool_size=len(pool.types))


def _extraction_confirms(q: Quasimodel, phi: Formula,
                         budget: OracleBudget) -> bool:
    """Sat verdicts are backed end to end: the witness model must exist and
    satisfy the formula at the designated point."""
    from ..semantics import evaluate
    from .extract import extract_mf_model
    for multiplicity in (1, 2):
        try:
            ext = extract_mf_model(q, multiplicity, budget)
        except QuasiError:
            continue
        if evaluate(ext.model, ext.run, ext.step, ext.assignment, phi):
            return True
    return False


def _constants_of(phi: Formula):
    from ..syntax import constants_of
    return constants_of(phi)


def _try_structure(pool: TypePool, phi, tags, start: int,
                   budget: OracleBudget, constants):
    sync = "sync" in tags
    uis = "uis" in tags
    cycle_cap = max(budget.cycle_max, 4)
    prefix_cap = max(budget.prefix_max, 2)
    runs: dict[str, list[tuple[list[int], list[int]]]] = {}
    sequences: dict[str, CandidateLasso] = {}
    realized: set[int] = set()
    need: set[int] = {start}
    designated = None
    counter = 0

    def add_lasso(prefix: list[int], cycle: list[int]) -> Optional[str]:
        nonlocal counter
        rid = f"r{counter}"
        counter += 1
        seq = _lasso_to_sequence(pool, rid, prefix, cycle, constants)
        if not _check_lasso(pool, seq):
            return None
        sequences[rid] = seq
        for k in prefix + cycle:
            realized.add(k)
            need.update(pool.neighbors(k))
        return rid

    cycles_used: list[int] = []

    def add_rotations(cyc: list[int]) -> Optional[str]:
        # extraction unrolls synchronized structures to the lcm of the cycle
        # lengths; refuse blowups early
        import math
        lcm = math.lcm(*(cycles_used + [len(cyc)]))
        if lcm * (sum(cycles_used) + len(cyc)) > 240:
            return None
        cycles_used.append(len(cyc))
        first = None
        for shift in range(len(cyc)):
            rid = add_lasso([], cyc[shift:] + cyc[:shift])
            if rid is None:
                return None
            if shift == 0:
                first = rid
        return first

    if sync:
        cyc = find_cycle(pool, start, cycle_cap)
        if cyc is None:
            return None
        pos0 = cyc.index(start)
        first = add_rotations(cyc[pos0:] + cyc[:pos0])  # start first
        if first is None:
            return None
        designated = (first, 0, pool.types[start])
    else:
        lasso = find_lasso(pool, start, prefix_cap, cycle_cap)
        if lasso is None:
            return None
        prefix, cycle = lasso
        full = prefix + cycle
        rid = add_lasso(prefix, cycle)
        if rid is None:
            return None
        designated = (rid, 0, pool.types[start])

    guard = 0
    while need - realized:
        guard += 1
        if guard > len(pool.types) + 4:
            return None
        u = sorted(need - realized)[0]
        if uis:
            # runs must share the initial type: route through the start
            path = _bfs_path(pool.succ, set(range(len(pool.types))), start, {u})
            if path is None or len(path) - 1 > prefix_cap + cycle_cap:
                return None
            tail = find_lasso(pool, u, prefix_cap, cycle_cap)
            if tail is None:
                return None
            t_prefix, t_cycle = tail
            if add_lasso(path[:-1] + t_prefix, t_cycle) is None:
                return None
        elif sync:
            cyc = find_cycle(pool, u, cycle_cap)
            if cyc is None:
                return None
            if add_rotations(cyc) is None:
                return None
        else:
            lasso = find_lasso(pool, u, prefix_cap, cycle_cap)
            if lasso is None:
                return None
            if add_lasso(lasso[0], lasso[1]) is None:
                return None
    return _assemble(pool, phi, tags, sequences, designated)
