"""Types, state candidates and points over a formula closure.

A type is a maximal coherent subset of the materialized closure universe:
maximality pairs each member with its canonical complement, and the local
saturation rules propagate the until/common-knowledge/knowledge axioms at
every next-depth available inside the universe.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Optional

from ..closures import Closure, or_groupings
from ..syntax import (
    And, Atom, Common, Const, Exists, Forall, Formula, Implies, Know, Next,
    Not, Until, Var, big_and, big_or, everyone_knows, free_variables,
    print_formula, spine_canon, spine_neg, substitute, to_core,
)


class QuasiError(ValueError):
    pass


def fkey(phi: Formula) -> str:
    return print_formula(phi)


@dataclass(frozen=True)
class TypeSet:
    """A coherent selection from the closure universe, tagged with its index."""

    index: tuple[int, ...]
    members: frozenset[Formula]

    def key(self) -> tuple:
        return (self.index, tuple(sorted(fkey(m) for m in self.members)))

    def sentence_part(self) -> frozenset[Formula]:
        return frozenset(m for m in self.members if not free_variables(m))

    def has(self, phi: Formula) -> bool:
        return spine_canon(phi) in self.members

    def conjunction(self) -> Formula:
        return big_and(sorted(self.members, key=fkey))


@dataclass(frozen=True)
class IndexedType:
    base: TypeSet
    constant: str


@dataclass(frozen=True)
class StateCandidate:
    index: tuple[int, ...]
    types: tuple[TypeSet, ...]
    con: tuple[tuple[str, TypeSet], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "types",
                           tuple(sorted(set(self.types), key=TypeSet.key)))
        object.__setattr__(self, "con", tuple(sorted(self.con)))
        if not self.types:
            raise QuasiError("state candidate needs at least one type")
        sentences = {t.sentence_part() for t in self.types}
        if len(sentences) > 1:
            raise QuasiError("candidate types disagree on sentences")
        for c, t in self.con:
            if t not in self.types:
                raise QuasiError(f"constant {c} maps outside the candidate")

    def con_map(self) -> dict[str, TypeSet]:
        return dict(self.con)

    def key(self):
        return (self.index, tuple(t.key() for t in self.types),
                tuple((c, t.key()) for c, t in self.con))


@dataclass(frozen=True)
class QPoint:
    candidate: StateCandidate
    distinguished: TypeSet

    def __post_init__(self):
        if self.distinguished not in self.candidate.types:
            raise QuasiError("distinguished type not in the candidate")

    @property
    def index(self) -> tuple[int, ...]:
        return self.candidate.index

    def key(self):
        return (self.candidate.key(), self.distinguished.key())


# -- coherence engine -------------------------------------------------------------


def _lift(phi: Formula, k: int) -> Formula:
    for _ in range(k):
        phi = Next(phi)
    return spine_canon(phi)


def _strip_next(phi: Formula) -> tuple[int, Formula]:
    k = 0
    while isinstance(phi, Next):
        k += 1
        phi = phi.sub
    return k, phi


def _n3(x):  # three-valued negation
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


class _Engine:
    """Universe indexing plus compiled saturation rules over integer ids."""

    def __init__(self, closure: Closure, extras: frozenset[Formula]):
        universe = closure.base | extras | frozenset(spine_neg(e) for e in extras)
        self.forms: list[Formula] = sorted(universe, key=fkey)
        self.idx: dict[Formula, int] = {f: i for i, f in enumerate(self.forms)}
        self.negs: list[int] = [self.idx[spine_neg(f)] for f in self.forms]
        self.pairs: list[tuple[int, int]] = []
        seen = set()
        for i, f in enumerate(self.forms):
            if i in seen:
                continue
            seen.update({i, self.negs[i]})
            self.pairs.append((i, self.negs[i]))
        self.rules: list[tuple[str, object]] = []
        self.rules_by_id: dict[int, list[int]] = defaultdict(list)
        self._compile(closure)

    def _have(self, f: Formula) -> Optional[int]:
        return self.idx.get(f)

    def _add(self, desc: str, fn, deps: list[int]):
        self.rules.append((desc, fn))
        for d in deps:
            self.rules_by_id[d].append(len(self.rules) - 1)
            self.rules_by_id[self.negs[d]].append(len(self.rules) - 1)

    def _compile(self, closure: Closure):
        for tc, c in enumerate(self.forms):
            k, node = _strip_next(c)
            if isinstance(node, Not):
                continue  # handled through the complement member
            if isinstance(node, Implies):
                a = self._have(_lift(node.left, k))
                b = self._have(_lift(node.right, k))
                if a is not None and b is not None:
                    self._add(
                        f"implication table at {fkey(c)}",
                        lambda v, tc=tc, a=a, b=b:
                            _iff3(v[tc], _or3(_n3(v[a]), v[b])),
                        [tc, a, b])
            elif isinstance(node, Until):
                a = self._have(_lift(node.left, k))
                b = self._have(_lift(node.right, k))
                u1 = self._have(_lift(node, k + 1))
                if a is None or b is None:
                    continue
                if u1 is not None:
                    self._add(
                        f"until unfolding at {fkey(c)}",
                        lambda v, tc=tc, a=a, b=b, u1=u1:
                            _iff3(v[tc], _or3(v[b], _and3(v[a], v[u1]))),
                        [tc, a, b, u1])
                else:
                    self._add(
                        f"until witness at {fkey(c)}",
                        lambda v, tc=tc, b=b: _imp3(v[b], v[tc]),
                        [tc, b])
                    self._add(
                        f"until support at {fkey(c)}",
                        lambda v, tc=tc, a=a, b=b:
                            _imp3(v[tc], _or3(v[a], v[b])),
                        [tc, a, b])
            elif isinstance(node, Common):
                a = self._have(_lift(node.sub, k))
                ec = spine_canon(to_core(everyone_knows(node, closure.agents)))
                e = self._have(_lift(ec, k))
                if a is not None and e is not None:
                    self._add(
                        f"common-knowledge unfolding at {fkey(c)}",
                        lambda v, tc=tc, a=a, e=e:
                            _iff3(v[tc], _and3(v[a], v[e])),
                        [tc, a, e])
            elif isinstance(node, Know):
                b = self._have(_lift(node.sub, k))
                if b is not None:
                    self._add(
                        f"knowledge veridicality at {fkey(c)}",
                        lambda v, tc=tc, b=b: _imp3(v[tc], v[b]),
                        [tc, b])
                    continue
                for parts in or_groupings(node.sub):
                    ids = [self._have(_lift(p, k)) for p in parts]
                    if len(parts) > 1 and all(i is not None for i in ids):
                        self._add(
                            f"knowledge veridicality at {fkey(c)}",
                            lambda v, tc=tc, ids=tuple(ids):
                                _imp3(v[tc], _anyof(v, ids)),
                            [tc, *ids])
                        break

    def check_rules(self, vals, rule_ids=None):
        """First violated rule description, or None."""
        source = (range(len(self.rules)) if rule_ids is None
                  else sorted(set(rule_ids)))
        for ri in source:
            desc, fn = self.rules[ri]
            if fn(vals) is False:
                return desc
        return None


def _iff3(a, b):
    if a is None or b is None:
        return None
    return a == b


def _imp3(a, b):
    if a is False:
        return True
    if a is None:
        return None
    return b


def _anyof(v, ids):
    out = False
    for i in ids:
        out = _or3(out, v[i])
    return out


_ENGINES: dict = {}


def _engine(closure: Closure, extras: frozenset[Formula]) -> _Engine:
    key = (closure, extras)
    eng = _ENGINES.get(key)
    if eng is None:
        eng = _Engine(closure, extras)
        _ENGINES[key] = eng
    return eng


def coherence_check(members: frozenset[Formula], iota: tuple[int, ...],
                    closure: Closure,
                    extras: frozenset[Formula] = frozenset()):
    """Maximality and saturation over the materialized universe.

    Returns (ok, first violation description)."""
    eng = _engine(closure, extras)
    canon_members = frozenset(spine_canon(m) for m in members)
    outside = canon_members - set(eng.idx)
    if outside:
        raise QuasiError(
            f"member outside the closure: {fkey(sorted(outside, key=fkey)[0])}")
    vals: list[Optional[bool]] = [None] * len(eng.forms)
    for m in canon_members:
        vals[eng.idx[m]] = True
        vals[eng.negs[eng.idx[m]]] = False
    for pos, neg in eng.pairs:
        if canon_members >= {eng.forms[pos], eng.forms[neg]}:
            return False, (f"contradictory pair {fkey(eng.forms[pos])} / "
                           f"{fkey(eng.forms[neg])}")
        if vals[pos] is None:
            return False, (f"undecided pair {fkey(eng.forms[pos])} / "
                           f"{fkey(eng.forms[neg])}")
    why = eng.check_rules(vals)
    if why is not None:
        return False, why
    return True, None


def enumerate_types(closure: Closure, iota: tuple[int, ...] = (),
                    extras: frozenset[Formula] = frozenset(),
                    limit: Optional[int] = None) -> Iterator[TypeSet]:
    """All coherent types over the materialized universe, by backtracking
    over complement pairs with incremental rule checking."""
    eng = _engine(closure, extras)
    vals: list[Optional[bool]] = [None] * len(eng.forms)
    count = 0

    def assign(k: int):
        nonlocal count
        if limit is not None and count >= limit:
            return
        if k == len(eng.pairs):
            members = frozenset(
                eng.forms[pos if vals[pos] else neg] for pos, neg in eng.pairs)
            count += 1
            yield TypeSet(iota, members)
            return
        pos, neg = eng.pairs[k]
        local = eng.rules_by_id.get(pos, ())
        for value in (True, False):
            vals[pos], vals[neg] = value, not value
            if eng.check_rules(vals, local) is None:
                yield from assign(k + 1)
        vals[pos] = vals[neg] = None

    yield from assign(0)


# -- alpha / beta ----------------------------------------------------------------


def type_formula(t: TypeSet, closure: Closure, term=None) -> Formula:
    """The conjunction of a type's members, optionally with the free variable
    substituted by a term."""
    conj = t.conjunction()
    if term is not None:
        conj = substitute(conj, {closure.x: term})
    return conj


def alpha_of(c: StateCandidate, closure: Closure) -> Formula:
    """Existence of each type, exhaustiveness over individuals, and the
    constant assignments, as one closed formula."""
    x = closure.x
    types = list(c.types)
    parts = [Exists(x, type_formula(t, closure)) for t in types]
    parts.append(Forall(x, big_or([type_formula(t, closure) for t in types])))
    for name, t in c.con:
        parts.append(type_formula(t, closure, term=Const(name)))
    return big_and(parts)


def beta_of(p: QPoint, closure: Closure) -> Formula:
    return And(alpha_of(p.candidate, closure),
               type_formula(p.distinguished, closure))
