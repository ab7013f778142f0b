"""Depth-bounded epistemic trees of candidates or points, the tree-step
relation between them, and the tree formula describing a tree from one
point's perspective."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..closures import Closure
from ..syntax import (
    And, Formula, Know, Not, absorptive_concat, big_and, print_formula,
)
from .suitable import concordant, suitable_epi_types, suitable_next_types
from .types import QPoint, QuasiError, StateCandidate, TypeSet, beta_of, fkey


@dataclass(frozen=True)
class KTree:
    """A set of indexed candidates (or points) with a unique empty-index root."""

    k: int
    candidates: tuple[StateCandidate, ...] = ()
    points: tuple[QPoint, ...] = ()

    @property
    def kind(self) -> str:
        return "points" if self.points else "candidates"

    def nodes(self):
        return self.points if self.points else self.candidates

    def root(self):
        roots = [n for n in self.nodes() if n.index == ()]
        if len(roots) != 1:
            raise QuasiError(f"expected a unique empty-index root, found {len(roots)}")
        return roots[0]


def _agents_range(closure: Closure):
    return range(1, closure.agents + 1)


def validate_ktree(tree: KTree, closure: Closure,
                   pool_by_index: Mapping[tuple[int, ...], Sequence[TypeSet]]):
    """Closure conditions on a k-tree.

    The upward condition quantifies over all enumerated types of the longer
    index; the pool provides that enumeration per index.

    Returns (ok, violation description)."""
    try:
        tree.root()
    except QuasiError as e:
        return False, str(e)
    nodes = tree.nodes()
    for node in nodes:
        if len(node.index) > tree.k:
            return False, f"node index longer than k={tree.k}"
    for node in nodes:
        iota = node.index
        node_types = ([node.distinguished] if tree.kind == "points"
                      else list(node.types))
        for t in node_types:
            for i in _agents_range(closure):
                up = absorptive_concat(iota, i)
                if up == iota or len(up) > tree.k:
                    continue
                for t2 in pool_by_index.get(up, ()):
                    if not suitable_epi_types(t, t2, i, closure):
                        continue
                    if not _witnessed(tree, up, t2):
                        return False, (
                            f"missing {up}-witness for {fkey(t2.conjunction())[:60]}")
            if iota:
                i = iota[-1]
                down = iota[:-1]
                found = False
                for other in nodes:
                    if other.index != down:
                        continue
                    for t2 in _types_of(other):
                        if suitable_epi_types(t, t2, i, closure):
                            found = True
                            break
                    if found:
                        break
                if not found:
                    return False, f"no parent witness below index {iota}"
    return True, None


def _types_of(node):
    if isinstance(node, QPoint):
        return node.candidate.types
    return node.types


def _witnessed(tree: KTree, index, t2: TypeSet) -> bool:
    for node in tree.nodes():
        if node.index != index:
            continue
        if isinstance(node, QPoint):
            if node.distinguished == t2:
                return True
        elif t2 in node.types:
            return True
    return False


def tree_step_check(sigma: KTree, sigma2: KTree, f: Mapping, mode: str,
                    closure: Closure, constant: Optional[str] = None):
    """Suitability step between two k-trees under the threading function f.

    f maps each node of the first tree to a suitability sequence ending in
    the second tree; modes: plain, sync (all sequences of length exactly 2),
    c (sequences must track the constant).

    Returns (ok, violation description)."""
    if mode not in ("plain", "sync", "c"):
        raise QuasiError(f"unknown mode {mode!r}")
    nodes = list(sigma.nodes())
    in_sigma = {_node_key(n) for n in nodes}
    in_sigma2 = {_node_key(n) for n in sigma2.nodes()}
    some_long = False
    for node in nodes:
        seq = f.get(_node_key(node))
        if not seq:
            return False, "threading function misses a node"
        if seq[0] != node:
            return False, "threaded sequence does not start at its node"
        for a, b in zip(seq, seq[1:]):
            if not _step_suitable(a, b, closure, constant if mode == "c" else None):
                return False, "threaded sequence is not next-suitable"
        for mid in seq[:-1]:
            if _node_key(mid) not in in_sigma:
                return False, "intermediate node outside the first tree"
        if _node_key(seq[-1]) not in in_sigma2:
            return False, "sequence does not end in the second tree"
        if mode == "sync" and len(seq) != 2:
            return False, f"sync step needs length exactly 2, got {len(seq)}"
        if len(seq) >= 2:
            some_long = True
    if not some_long:
        return False, "no sequence of length at least 2"
    # concordance between threads of epistemically suitable types
    for a in nodes:
        for b in nodes:
            for i in _agents_range(closure):
                ta, tb = _lead_type(a), _lead_type(b)
                try:
                    related = suitable_epi_types(ta, tb, i, closure)
                except QuasiError:
                    continue
                if not related:
                    continue
                lam = [_lead_type(st) for st in f[_node_key(a)]]
                mu = [_lead_type(st) for st in f[_node_key(b)]]
                if not concordant(lam, mu, i, closure):
                    return False, "threads of suitable types are not concordant"
    return True, None


def _node_key(node):
    return node.key()


def _lead_type(node) -> TypeSet:
    if isinstance(node, QPoint):
        return node.distinguished
    return node.types[0]


def _step_suitable(a, b, closure, constant):
    if isinstance(a, QPoint):
        from .suitable import suitable_next
        return suitable_next(a, b, "point", closure, constant=constant)
    from .suitable import suitable_next_candidates
    return suitable_next_candidates(a, b, closure)


def tree_formula(sigma: KTree, p: QPoint, closure: Closure) -> Formula:
    """The formula describing the tree from a point's perspective: its beta
    conjoined with the possibility of every suitable shorter-index subtree."""
    if sigma.kind != "points":
        raise QuasiError("tree formulas are defined on point trees")
    if p.index == ():
        return beta_of(p, closure)
    i = p.index[-1]
    down = p.index[:-1]
    parts = [beta_of(p, closure)]
    neighbors = [q for q in sigma.points
                 if q.index == down
                 and suitable_epi_types(q.distinguished, p.distinguished, i, closure)]
    for q in sorted(neighbors, key=lambda q: q.key()):
        parts.append(Not(Know(i, Not(tree_formula(sigma, q, closure)))))
    return big_and(parts)
