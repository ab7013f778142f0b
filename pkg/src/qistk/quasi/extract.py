"""Witness-model extraction: build a monodic-friendly model from a validated
quasimodel.

The domain is object copies; per-state first-order structures are found by
backtracking over predicate extensions, with modal subformulas read through
their types (the surrogate abstraction); epistemic partitions are the
suitability classes of object values, per state position for synchronous
structures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from ..models import LassoRun, Model
from ..syntax import (
    And, Atom, Common, Const, Exists, Forall, Formula, Iff, Implies, Know,
    Next, Not, Or, Signature, Until, Var, constants_of, free_variables,
    predicates_of, spine_canon, substitute,
)
from .oracle import OracleBudget
from .structure import Quasimodel
from .suitable import suitable_epi_types
from .types import QuasiError, StateCandidate, TypeSet

MODAL = (Know, Common, Next, Until)


@dataclass(frozen=True)
class Extraction:
    model: Model
    run: str
    step: int
    assignment: dict[str, str]


def _unrolled(q: Quasimodel):
    """Per-sequence pre-cycle length and cycle length; synchronized across
    sequences for the synchronous class."""
    out = {}
    if "sync" in q.tags:
        L = math.lcm(*[len(s.cycle) for s in q.sequences.values()])
        P = max(s.pad + len(s.prefix) for s in q.sequences.values())
        for rid, s in q.sequences.items():
            out[rid] = (s.pad, P, L)
    else:
        for rid, s in q.sequences.items():
            out[rid] = (s.pad, s.pad + len(s.prefix), len(s.cycle))
    return out


def extract_mf_model(q: Quasimodel, multiplicity: int = 1,
                     budget: Optional[OracleBudget] = None) -> Extraction:
    """Build the mf witness model; requires a valid quasimodel."""
    if multiplicity < 1:
        raise QuasiError("multiplicity must be positive")
    if budget is None:
        budget = OracleBudget()
    cl = q.closure
    layout = _unrolled(q)
    merge_init = "uis" in q.tags

    def state_name(rid: str, n: int) -> str:
        if merge_init and n == 0:
            return "w_init"
        return f"{rid}@{n}"

    # states and runs
    states: list[str] = []
    runs: dict[str, LassoRun] = {}
    state_info: dict[str, tuple[str, int]] = {}
    for rid in sorted(q.sequences):
        pad, pre, clen = layout[rid]
        names = []
        for n in range(pad):
            names.append(f"{rid}@pad{n}")
        for n in range(pad, pre + clen):
            names.append(state_name(rid, n))
            state_info.setdefault(names[-1], (rid, n))
        for name in names:
            if name not in states:
                states.append(name)
        runs[rid] = LassoRun(rid, tuple(names[:pre]), tuple(names[pre:]))

    # domain: object copies
    objects = sorted(q.objects)
    domain = tuple(f"{o}#{x}" for o in objects for x in range(multiplicity))
    owner = {f"{o}#{x}": o for o in objects for x in range(multiplicity)}

    # constants: the tracking object's zeroth copy
    constants = sorted({c for cand in _candidates(q) for c, _ in cand.con})
    const_map = {}
    points = q.window_points()
    for cname in constants:
        tracker = next(
            (o for o in objects
             if all(q.value(o, p) == q.candidate(p).con_map().get(cname)
                    for p in points)), None)
        if tracker is None:
            raise QuasiError(f"no object tracks constant {cname}")
        const_map[cname] = f"{tracker}#0"

    preds = predicates_of(q.phi)
    sig = Signature(cl.agents, preds, frozenset(constants))

    # epistemic partitions: suitability classes of object values, refined by
    # the state position for synchronous structures
    partitions = {}
    for i in range(1, cl.agents + 1):
        for o in objects:
            cells: dict = {}
            for name in states:
                if name not in state_info:
                    cells[("pad", name)] = {name}
                    continue
                rid, n = state_info[name]
                t = q.value(o, (rid, n))
                if t is None:
                    cells[("pad", name)] = {name}
                    continue
                cls = _value_class(q, i, o, t)
                slot = _sync_slot(q, layout, rid, n)
                cells.setdefault((slot, cls), set()).add(name)
            part = tuple(frozenset(cell) for cell in cells.values())
            for x in range(multiplicity):
                partitions[(i, f"{o}#{x}")] = part

    # per-state structures
    interp: dict[tuple[str, str], frozenset[tuple[str, ...]]] = {}
    solved: dict[tuple, dict] = {}
    for name in states:
        if name not in state_info:
            for p in preds:
                interp[(p, name)] = frozenset()
            continue
        rid, n = state_info[name]
        key = _solve_key(q, rid, n)
        if key in solved:
            assignment = solved[key]
        else:
            assignment = _solve_state(q, rid, n, domain, owner, const_map,
                                      preds, multiplicity, budget)
            solved[key] = assignment
        for p, arity in preds.items():
            tuples = frozenset(tup for (pn, tup), val in assignment.items()
                               if pn == p and val)
            interp[(p, name)] = tuples

    model = Model("mf", sig, domain, tuple(states), runs, interp, const_map,
                  partitions=partitions)

    rid0, n0, t0 = q.designated
    sigma = {}
    fv = free_variables(q.phi)
    if fv:
        (y,) = fv
        d = next((d for d in domain
                  if q.value(owner[d], (rid0, n0)) == t0), None)
        if d is None:
            raise QuasiError("designated type has no tracking individual")
        sigma[y] = d
    return Extraction(model, rid0, n0, sigma)


def _candidates(q: Quasimodel):
    for seq in q.sequences.values():
        yield from seq.prefix
        yield from seq.cycle


def _value_class(q: Quasimodel, i: int, o: str, t: TypeSet):
    """Representative key of t's suitability class among object values."""
    values = sorted({q.value(o, p).key() for p in q.window_points()
                     if q.value(o, p) is not None})
    by_key = {}
    for p in q.window_points():
        v = q.value(o, p)
        if v is not None:
            by_key[v.key()] = v
    for key in values:
        try:
            if suitable_epi_types(t, by_key[key], i, q.closure):
                return key
        except QuasiError:
            continue
    return t.key()


def _sync_slot(q: Quasimodel, layout, rid: str, n: int):
    if "sync" not in q.tags:
        return None
    pad, pre, L = layout[rid]
    return n if n < pre else pre + (n - pre) % L


def _solve_key(q: Quasimodel, rid: str, n: int):
    cand = q.candidate((rid, n))
    values = tuple((o, q.value(o, (rid, n)).key()) for o in sorted(q.objects))
    return (cand.key(), values)


# -- first-order realization --------------------------------------------------------


def _solve_state(q: Quasimodel, rid: str, n: int, domain, owner, const_map,
                 preds, multiplicity: int, budget: OracleBudget) -> dict:
    """Backtracking search for predicate extensions satisfying every
    individual's type abstraction at one state."""
    cl = q.closure
    cand = q.candidate((rid, n))
    type_of = {d: q.value(owner[d], (rid, n)) for d in domain}
    atoms = [(p, tup) for p, a in sorted(preds.items())
             for tup in _tuples(domain, a)]
    assignment: dict = {}
    constraints = []
    for d in sorted(domain):
        t = type_of[d]
        if t is None:
            continue
        for m in sorted(t.members, key=str):
            constraints.append((m, d))

    sentences = cand.types[0].sentence_part()

    def modal_truth(f: Formula, sigma: Mapping[str, str]) -> bool:
        fv = free_variables(f)
        if not fv:
            return spine_canon(f) in sentences
        if len(fv) > 1:
            raise QuasiError("non-monodic modal subformula in a type member")
        (v,) = fv
        d = sigma.get(v)
        if d is None:
            raise QuasiError(f"unbound variable {v} in a type member")
        renamed = spine_canon(substitute(f, {v: Var(cl.x)}))
        t = type_of[d]
        return t is not None and renamed in t.members

    def ev(f: Formula, sigma) -> tuple[Optional[bool], Optional[tuple]]:
        """Three-valued evaluation; on None returns a blocking atom."""
        if isinstance(f, MODAL):
            return modal_truth(f, sigma), None
        if isinstance(f, Atom):
            tup = tuple(const_map[t.name] if isinstance(t, Const)
                        else sigma[t.name] for t in f.terms)
            key = (f.pred, tup)
            if key in assignment:
                return assignment[key], None
            return None, key
        if isinstance(f, Not):
            v, blk = ev(f.sub, sigma)
            return (None, blk) if v is None else (not v, None)
        if isinstance(f, (Implies, And, Or, Iff)):
            lv, lblk = ev(f.left, sigma)
            rv, rblk = ev(f.right, sigma)
            if isinstance(f, Implies):
                out = _or3(_n3(lv), rv)
            elif isinstance(f, And):
                out = _and3(lv, rv)
            elif isinstance(f, Or):
                out = _or3(lv, rv)
            else:
                out = None if (lv is None or rv is None) else lv == rv
            return (out, lblk or rblk) if out is None else (out, None)
        if isinstance(f, (Forall, Exists)):
            want_all = isinstance(f, Forall)
            blocking = None
            decided = True
            for d in domain:
                v, blk = ev(f.body, {**sigma, f.var: d})
                if v is None:
                    decided = False
                    blocking = blocking or blk
                elif want_all and not v:
                    return False, None
                elif not want_all and v:
                    return True, None
            if decided:
                return (want_all, None)
            return None, blocking
        raise QuasiError(f"cannot ground {f!r}")

    nodes = 0

    def solve() -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > budget.max_models:
            raise QuasiError(
                f"no realizing structure within budget at ({rid},{n}); "
                f"multiplicity {multiplicity} may be too small")
        blocking = None
        for (m, d) in constraints:
            v, blk = ev(m, {cl.x: d})
            if v is False:
                return False
            if v is None and blocking is None:
                blocking = blk
        if blocking is None:
            return True
        for value in (False, True):
            assignment[blocking] = value
            if solve():
                return True
            del assignment[blocking]
        return False

    if not solve():
        raise QuasiError(
            f"no first-order structure realizes the state ({rid},{n}); "
            f"multiplicity {multiplicity} may be too small")
    for key in atoms:
        assignment.setdefault(key, False)
    return dict(assignment)


def _tuples(domain, arity):
    out = [()]
    for _ in range(arity):
        out = [t + (d,) for t in out for d in domain]
    return out


def _n3(x):
    return None if x is None else (not x)


def _or3(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _and3(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True
