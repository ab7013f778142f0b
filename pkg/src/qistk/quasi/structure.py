"""Quasimodels: frames of candidate lassos, objects threading types through
them, per-agent-per-object point relations, and the validator covering the
frame, object, quasimodel and tagged-class conditions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from ..closures import Closure
from ..sexpr import SexprError, parse_sexpr, tagged, tagged_one
from ..syntax import (
    Common, Formula, Know, Not, Until, Var, absorptive_concat, free_variables,
    parse_formula, print_formula, spine_canon, spine_neg, substitute, to_core,
)
from .sequences import CandidateLasso, acceptable_sequence_check
from .suitable import suitable_epi_types, suitable_next_candidates, suitable_next_types
from .types import QuasiError, StateCandidate, TypeSet, coherence_check, fkey

Point = tuple[str, int]


@dataclass(frozen=True)
class ObjectTrack:
    """One object: a type at every defined point, stored per position."""

    name: str
    values: Mapping[tuple[str, int], TypeSet]  # (sequence id, position) -> type

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))

    def at(self, seq: CandidateLasso, n: int) -> Optional[TypeSet]:
        pos = seq.position(n)
        if pos is None:
            return None
        return self.values.get((seq.rid, pos))


SUITABILITY_GENERATED = "suitability"


@dataclass(frozen=True)
class Quasimodel:
    phi: Formula
    closure: Closure
    flavor: str  # "plain" | "plus"
    tags: frozenset[str]
    sequences: Mapping[str, CandidateLasso]
    objects: Mapping[str, ObjectTrack]
    # either (agent, object name) -> generating point pairs, whose
    # reflexive-symmetric-transitive closure is the relation, or the marker
    # SUITABILITY_GENERATED: the maximal relation compatible with Def. 19(3)
    # (same-time only under the sync tag)
    relations: object
    designated: tuple[str, int, TypeSet]

    def __post_init__(self):
        object.__setattr__(self, "sequences", dict(self.sequences))
        object.__setattr__(self, "objects", dict(self.objects))
        if not self.generated:
            object.__setattr__(self, "relations",
                               {k: frozenset(v)
                                for k, v in dict(self.relations).items()})
        if self.flavor not in ("plain", "plus"):
            raise QuasiError(f"unknown flavor {self.flavor!r}")
        bad = self.tags - {"pr", "nl", "sync", "uis"}
        if bad:
            raise QuasiError(f"unknown tags {sorted(bad)}")

    @property
    def generated(self) -> bool:
        return isinstance(self.relations, str)

    def global_window(self) -> int:
        return max(seq.window().stop for seq in self.sequences.values())

    def window_points(self) -> list[Point]:
        """Points up to the shared window bound, so cross-sequence witnesses
        beyond a short cycle's own window are visible."""
        stop = self.global_window()
        out = []
        for rid in sorted(self.sequences):
            seq = self.sequences[rid]
            out.extend((rid, n) for n in range(seq.pad, stop))
        return out

    def value(self, obj: str, p: Point) -> Optional[TypeSet]:
        rid, n = p
        return self.objects[obj].at(self.sequences[rid], n)

    def candidate(self, p: Point) -> Optional[StateCandidate]:
        rid, n = p
        return self.sequences[rid].candidate_at(n)

    def related(self, i: int, obj: str, p1: Point, p2: Point) -> bool:
        cls = self._closure_classes(i, obj)
        a, b = cls.get(self._pkey(p1)), cls.get(self._pkey(p2))
        return a is not None and a == b

    def _pkey(self, p: Point):
        # synchronous relations distinguish times; otherwise points fold
        # onto lasso positions
        rid, n = p
        if "sync" in self.tags:
            return (rid, n)
        return (rid, self.sequences[rid].position(n))

    def _closure_classes(self, i: int, obj: str):
        cache = getattr(self, "_rel_cache", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_rel_cache", cache)
        hit = cache.get((i, obj))
        if hit is not None:
            return hit
        if self.generated:
            from ..syntax import absorptive_concat
            classes = {}
            for p in self.window_points():
                val = self.value(obj, p)
                if val is None:
                    continue
                slot = p[1] if "sync" in self.tags else None
                profile = frozenset(m for m in val.members
                                    if isinstance(m, Know) and m.agent == i)
                classes[self._pkey(p)] = (
                    slot, absorptive_concat(val.index, i), profile)
            cache[(i, obj)] = classes
            return classes
        parent: dict = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for p in self.window_points():
            find(self._pkey(p))
        for (a, b) in self.relations.get((i, obj), ()):
            union(self._pkey(a), self._pkey(b))
        classes = {x: find(x) for x in parent}
        cache[(i, obj)] = classes
        return classes

    def reachable_classes(self, obj: str):
        """Connected components of window points under all agents' relations
        for one object."""
        parent: dict = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        keys = [self._pkey(p) for p in self.window_points()]
        for k in keys:
            find(k)
        for i in range(1, self.closure.agents + 1):
            cls = self._closure_classes(i, obj)
            groups: dict = {}
            for k in keys:
                root = cls.get(k)
                if root in groups:
                    a, b = find(groups[root]), find(k)
                    if a != b:
                        parent[a] = b
                else:
                    groups[root] = k
        return {k: find(k) for k in keys}


def target_formula(q_phi: Formula, closure: Closure) -> Formula:
    """The formula whose membership witnesses satisfiability: the sentence
    itself, or its one-variable renaming."""
    core = spine_canon(to_core(q_phi))
    fv = free_variables(core)
    if not fv:
        return core
    (y,) = fv
    return spine_canon(substitute(core, {y: Var(closure.x)}))


# -- validation ------------------------------------------------------------------


def validate_quasimodel(q: Quasimodel, type_pool: Optional[list[TypeSet]] = None,
                        check_types: bool = True) -> tuple[bool, list[str]]:
    """Checks, over the lasso window: frame conditions, object conditions
    (with the plus variant of the epistemic witness clause when requested),
    quasimodel conditions, the derived knowledge/common-knowledge transfer
    properties, and the tagged class conditions.

    The saturation clauses quantify over all types; type_pool supplies that
    enumeration (default: enumerate from the closure)."""
    from .types import enumerate_types

    v: list[str] = []
    cl = q.closure
    if type_pool is None:
        type_pool = list(enumerate_types(cl))
    points = q.window_points()
    if not points:
        v.append("Def.17(iv)(a): empty frame")
        return False, v

    if check_types:
        for rid, seq in q.sequences.items():
            for cand in set(seq.prefix) | set(seq.cycle):
                for t in cand.types:
                    ok, why = coherence_check(t.members, t.index, cl)
                    if not ok:
                        v.append(f"Def.13: incoherent type in {rid}: {why}")

    # frame: relations stay inside the defined region (generated relations
    # only ever connect defined points)
    if not q.generated:
        for (i, obj), pairs in q.relations.items():
            for (p1, p2) in pairs:
                for (rid, n) in (p1, p2):
                    if rid not in q.sequences or not q.sequences[rid].defined(n):
                        v.append("Def.17(iv)(c): relation touches undefined "
                                 f"point {(rid, n)}")

    # quasimodel condition 1: the target formula sits where designated
    rid0, n0, t0 = q.designated
    goal = target_formula(q.phi, cl)
    cand0 = q.candidate((rid0, n0))
    if cand0 is None or t0 not in cand0.types or not t0.has(goal):
        v.append("Def.19(1): designated type does not contain the formula")

    # quasimodel condition 2: candidate suitability along each sequence
    for rid, seq in q.sequences.items():
        for n in seq.window():
            c1, c2 = seq.candidate_at(n), seq.candidate_at(n + 1)
            if not suitable_next_candidates(c1, c2, cl):
                v.append(f"Def.19(2): candidates at ({rid},{n}) not next-suitable")

    # acceptability of each sequence (realized eventualities)
    for rid, seq in q.sequences.items():
        ok, problems = acceptable_sequence_check(seq, cl, check_suitability=False)
        for (n, what) in problems:
            v.append(f"Def.20: unrealized eventuality at ({rid},{n}): {what}")

    # object conditions
    for name, obj in q.objects.items():
        _check_object(q, name, type_pool, v)

    # quasimodel condition 4: every type is some object's value
    for p in points:
        cand = q.candidate(p)
        for t in cand.types:
            if not any(q.value(name, p) == t for name in q.objects):
                v.append(f"Def.19(4): type at {p} not tracked by any object")
                break

    # quasimodel condition 5: constant trackers are objects
    constants = sorted({c for cand in _all_candidates(q) for c, _ in cand.con})
    for cname in constants:
        if not any(all(q.value(oname, p) == q.candidate(p).con_map().get(cname)
                       for p in points)
                   for oname in q.objects):
            v.append(f"Def.19(5): no object tracks constant {cname}")

    # relation-object compatibility (Def.19(3) / Def.18(2)); generated
    # relations are suitability classes, compatible by construction
    if not q.generated:
        for (i, oname), _ in q.relations.items():
            for p1 in points:
                for p2 in points:
                    if not q.related(i, oname, p1, p2):
                        continue
                    t1, t2 = q.value(oname, p1), q.value(oname, p2)
                    if t1 is None or t2 is None:
                        continue
                    try:
                        ok = suitable_epi_types(t1, t2, i, cl)
                    except QuasiError:
                        ok = False
                    if not ok:
                        v.append(f"Def.19(3): related points {p1},{p2} carry "
                                 f"unsuitable types for agent {i}")

    _check_lemma4(q, v)
    _check_tags(q, v)
    return (not v), v


def _all_candidates(q: Quasimodel) -> Iterator[StateCandidate]:
    for seq in q.sequences.values():
        yield from seq.prefix
        yield from seq.cycle


def _check_object(q: Quasimodel, name: str, type_pool, v: list[str]):
    cl = q.closure
    points = q.window_points()
    # (1) next-suitability along each sequence
    for rid, seq in q.sequences.items():
        for n in seq.window():
            t1 = q.value(name, (rid, n))
            t2 = q.value(name, (rid, n + 1))
            if t1 is None or t2 is None:
                v.append(f"Def.18: object {name} undefined on ({rid},{n})")
                continue
            if not suitable_next_types(t1, t2, cl):
                v.append(f"Def.18(1): object {name} not next-suitable at ({rid},{n})")
    # (3) until realization along the object's own track
    for rid, seq in q.sequences.items():
        for n in seq.window():
            t = q.value(name, (rid, n))
            if t is None:
                continue
            for m in t.members:
                if isinstance(m, Until) and not _object_realizes(q, name, rid, n, m):
                    v.append(f"Def.18(3): object {name} never realizes "
                             f"{fkey(m)} from ({rid},{n})")
                neg = spine_neg(m)
                if (isinstance(neg, Until) and t.has(Not(neg))
                        and _object_realizes(q, name, rid, n, neg)):
                    v.append(f"Def.18(3): object {name} realizes the negated "
                             f"{fkey(neg)} at ({rid},{n})")
    # (4)/(4') epistemic saturation over the type pool; realized values are
    # indexed by relation class so each demand is a set lookup
    plus = q.flavor == "plus"
    for i in range(1, cl.agents + 1):
        classes = q._closure_classes(i, name)
        realized: dict = {}
        for p2 in points:
            val = q.value(name, p2)
            if val is not None:
                realized.setdefault(classes.get(q._pkey(p2)), set()).add(val)
        groups: dict = {}
        for t2 in type_pool:
            groups.setdefault(_profile(t2, i), []).append(t2)
        checked: set = set()
        for p in points:
            t = q.value(name, p)
            if t is None:
                continue
            want_index = absorptive_concat(t.index, i) if plus else t.index
            ckey = classes.get(q._pkey(p))
            if (ckey, t) in checked:
                continue
            checked.add((ckey, t))
            have = realized.get(ckey, set())
            for t2 in groups.get(_profile(t, i), []):
                t2i = t2 if t2.index == want_index \
                    else TypeSet(want_index, t2.members)
                try:
                    if not suitable_epi_types(t, t2i, i, cl):
                        continue
                except QuasiError:
                    continue
                if t2i not in have:
                    clause = "Def.18(4')" if plus else "Def.18(4)"
                    v.append(f"{clause}: object {name} at {p} misses an "
                             f"agent-{i} witness for a suitable type")
                    break
    # (5) negated common knowledge needs a reachable witness
    reach = q.reachable_classes(name)
    for p in points:
        t = q.value(name, p)
        if t is None:
            continue
        for m in t.members:
            if isinstance(m, Not) and isinstance(m.sub, Common):
                want = spine_neg(m.sub.sub)
                ok = any(
                    reach.get(q._pkey(p2)) == reach.get(q._pkey(p))
                    and q.value(name, p2) is not None
                    and q.value(name, p2).has(want)
                    for p2 in points)
                if not ok:
                    v.append(f"Def.18(5): object {name} at {p} has {fkey(m)} "
                             f"but no reachable witness")


def _profile(t: TypeSet, i: int) -> frozenset:
    return frozenset(m for m in t.members
                     if isinstance(m, Know) and m.agent == i)


def _object_realizes(q: Quasimodel, name: str, rid: str, n: int, u: Until) -> bool:
    seq = q.sequences[rid]
    horizon = seq.horizon(n) + len(seq.cycle)
    for k in range(horizon + 1):
        t = q.value(name, (rid, n + k))
        if t is None:
            return False
        if t.has(u.right):
            return True
        if not t.has(u.left):
            return False
    return False


def _check_lemma4(q: Quasimodel, v: list[str]):
    """Knowledge and common-knowledge transfer, both directions, computed per
    relation class via member-set intersections."""
    cl = q.closure
    points = q.window_points()
    k_formulas = {i: sorted((m for m in cl.base
                             if isinstance(m, Know) and m.agent == i), key=fkey)
                  for i in range(1, cl.agents + 1)}
    c_formulas = sorted((m for m in cl.base if isinstance(m, Common)), key=fkey)
    for name in q.objects:
        for i in range(1, cl.agents + 1):
            classes = q._closure_classes(i, name)
            groups: dict = {}
            for p in points:
                val = q.value(name, p)
                if val is not None:
                    groups.setdefault(classes.get(q._pkey(p)), set()).add(val)
            for root, vals in groups.items():
                inter = None
                for val in vals:
                    inter = val.members if inter is None \
                        else inter & val.members
                for m in k_formulas[i]:
                    body = spine_canon(m.sub)
                    held = {m in val.members for val in vals}
                    if len(held) > 1:
                        v.append(f"Lemma 4(i): {fkey(m)} varies inside a "
                                 f"relation class of {name}")
                        continue
                    if held == {True} and body not in inter:
                        v.append(f"Lemma 4(i): {fkey(m)} held but content "
                                 f"fails at a related point of {name}")
                    if held == {False} and body in inter:
                        v.append(f"Lemma 4(i): {fkey(m)} absent but content "
                                 f"holds at every related point of {name}")
        reach = q.reachable_classes(name)
        comp_groups: dict = {}
        for p in points:
            val = q.value(name, p)
            if val is not None:
                comp_groups.setdefault(reach.get(q._pkey(p)), set()).add(val)
        for root, vals in comp_groups.items():
            inter = None
            for val in vals:
                inter = val.members if inter is None else inter & val.members
            for m in c_formulas:
                body = spine_canon(m.sub)
                everywhere = body in inter
                for val in vals:
                    if (m in val.members) != everywhere:
                        v.append(f"Lemma 4(ii): {fkey(m)} disagrees with "
                                 f"reachable content for {name}")
                        break


def _check_tags(q: Quasimodel, v: list[str]):
    cl = q.closure
    points = q.window_points()
    if "sync" in q.tags and not q.generated:
        for (i, oname), pairs in q.relations.items():
            for (p1, p2) in pairs:
                if p1[1] != p2[1]:
                    v.append(f"sync: generating pair {p1},{p2} crosses times")
    if "uis" in q.tags:
        cands = {q.candidate((rid, 0)) for rid in q.sequences}
        if any(seq.pad for seq in q.sequences.values()):
            v.append("uis: padded sequences have no initial state")
        elif len(cands) != 1:
            v.append("uis: sequences start at different candidates")
        else:
            for name in q.objects:
                starts = {q.value(name, (rid, 0)) for rid in q.sequences}
                if len(starts) != 1:
                    v.append(f"uis: object {name} differs at the initial state")
    if "pr" in q.tags:
        _check_condition_e(q, v)
    if "nl" in q.tags:
        _check_condition_g(q, v)


def _suits(q, name, i, p1, p2) -> bool:
    t1, t2 = q.value(name, p1), q.value(name, p2)
    if t1 is None or t2 is None:
        return False
    try:
        return suitable_epi_types(t1, t2, i, q.closure)
    except QuasiError:
        return False


def _check_condition_e(q: Quasimodel, v: list[str]):
    """(E): suitable now implies suitable one step back, possibly against an
    earlier witness."""
    for name in q.objects:
        for i in range(1, q.closure.agents + 1):
            for rid, seq in q.sequences.items():
                for rid2, seq2 in q.sequences.items():
                    for n in seq.window():
                        if n <= seq.pad:
                            continue
                        for n2 in seq2.window():
                            if not _suits(q, name, i, (rid, n), (rid2, n2)):
                                continue
                            if _suits(q, name, i, (rid, n - 1), (rid2, n2)):
                                continue
                            if not any(
                                    _suits(q, name, i, (rid, n - 1), (rid2, k))
                                    and all(_suits(q, name, i, (rid, n), (rid2, k2))
                                            for k2 in range(k + 1, n2 + 1))
                                    for k in range(seq2.pad, n2)):
                                v.append(f"(E): object {name}, agent {i}: "
                                         f"({rid},{n})~({rid2},{n2}) has no history")
                                return


def _check_condition_g(q: Quasimodel, v: list[str]):
    """(G): suitable now implies suitable one step forward, possibly against a
    later witness."""
    for name in q.objects:
        for i in range(1, q.closure.agents + 1):
            for rid, seq in q.sequences.items():
                for rid2, seq2 in q.sequences.items():
                    for n in seq.window():
                        for n2 in seq2.window():
                            if not _suits(q, name, i, (rid, n), (rid2, n2)):
                                continue
                            if _suits(q, name, i, (rid, n + 1), (rid2, n2)):
                                continue
                            hi = n2 + 2 * len(seq2.cycle) + len(seq2.prefix)
                            if not any(
                                    _suits(q, name, i, (rid, n + 1), (rid2, k))
                                    and all(_suits(q, name, i, (rid, n), (rid2, k2))
                                            for k2 in range(n2, k))
                                    for k in range(n2 + 1, hi + 1)):
                                v.append(f"(G): object {name}, agent {i}: "
                                         f"({rid},{n})~({rid2},{n2}) learns")
                                return


# -- loading ----------------------------------------------------------------------


def load_quasimodel(text: str, agents: Optional[int] = None) -> Quasimodel:
    """Read the s-expression quasimodel format."""
    try:
        top = parse_sexpr(text)
    except SexprError as e:
        raise QuasiError(f"format error: {e}") from e
    if not isinstance(top, list) or not top or top[0] != "quasimodel":
        raise QuasiError("expected a (quasimodel ...) form")
    phi_text = tagged_one(top, "phi")[1]
    agents_decl = tagged(top, "agents")
    if agents is None:
        agents = int(agents_decl[0][1]) if agents_decl else 1
    phi = parse_formula(phi_text, agents=agents)
    cl = Closure.of(phi, agents)
    flavor = tagged_one(top, "flavor")[1]
    tags = frozenset(tagged_one(top, "tags")[1:]) if tagged(top, "tags") else frozenset()

    candidates: dict[str, StateCandidate] = {}
    type_names: dict[tuple[str, str], TypeSet] = {}
    for centry in tagged_one(top, "candidates")[1:]:
        cname = centry[0]
        index = tuple(int(x) for x in tagged_one(centry, "index")[1:])
        ctypes = []
        for tentry in tagged_one(centry, "types")[1:]:
            tname = tentry[0]
            members = frozenset(
                spine_canon(to_core(parse_formula(txt, agents=agents)))
                for txt in tentry[1:])
            t = TypeSet(index, members)
            type_names[(cname, tname)] = t
            ctypes.append(t)
        con = []
        for pair in (tagged(centry, "con")[0][1:] if tagged(centry, "con") else []):
            con.append((pair[0], type_names[(cname, pair[1])]))
        candidates[cname] = StateCandidate(index, tuple(ctypes), tuple(con))

    sequences = {}
    for sentry in tagged_one(top, "sequences")[1:]:
        rid = sentry[0]
        pads = tagged(sentry, "pad")
        pad = int(pads[0][1]) if pads else 0
        prefixes = tagged(sentry, "prefix")
        prefix = tuple(candidates[c] for c in prefixes[0][1:]) if prefixes else ()
        cycle = tuple(candidates[c] for c in tagged_one(sentry, "cycle")[1:])
        sequences[rid] = CandidateLasso(rid, prefix, cycle, pad)

    def type_at(rid: str, pos_name: str, tname: str) -> TypeSet:
        # resolve the type name through the candidate at that position
        seq = sequences[rid]
        n = int(pos_name)
        cand = seq.candidate_at(n)
        if cand is None:
            raise QuasiError(f"object value at undefined point ({rid},{n})")
        for (cname, name), t in type_names.items():
            if name == tname and t in cand.types:
                return t
        raise QuasiError(f"unknown type {tname} at ({rid},{n})")

    objects = {}
    for oentry in tagged(top, "objects")[0][1:] if tagged(top, "objects") else []:
        oname = oentry[0]
        values = {}
        for at in tagged(oentry, "at"):
            rid, n, tname = at[1], int(at[2]), at[3]
            pos = sequences[rid].position(n)
            values[(rid, pos)] = type_at(rid, at[2], tname)
        objects[oname] = ObjectTrack(oname, values)

    relations = {}
    for eentry in tagged(top, "epistemic"):
        i = int(tagged_one(eentry, "agent")[1])
        oname = tagged_one(eentry, "object")[1]
        pairs = set()
        for pair in tagged_one(eentry, "pairs")[1:]:
            (r1, n1), (r2, n2) = pair
            pairs.add(((r1, int(n1)), (r2, int(n2))))
        relations[(i, oname)] = frozenset(pairs)

    designated = None
    des = tagged(top, "designated")
    goal = target_formula(phi, cl)
    if des:
        rid, n = des[0][1], int(des[0][2])
        cand = sequences[rid].candidate_at(n)
        t = next((t for t in cand.types if t.has(goal)), None)
        if t is None:
            raise QuasiError("designated candidate lacks the formula")
        designated = (rid, n, t)
    else:
        for rid in sorted(sequences):
            seq = sequences[rid]
            for n in seq.window():
                cand = seq.candidate_at(n)
                t = next((t for t in cand.types if t.has(goal)), None)
                if t is not None:
                    designated = (rid, n, t)
                    break
            if designated:
                break
        if designated is None:
            raise QuasiError("no candidate contains the formula")

    return Quasimodel(phi, cl, flavor, tags, sequences, objects, relations,
                      designated)
