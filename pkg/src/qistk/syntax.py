"""Formula syntax: AST, parsing, printing, substitution, monodic test."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional


class ParseError(ValueError):
    """Syntax error with source position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class SignatureError(ValueError):
    """Name used in a way the signature does not declare."""


@dataclass(frozen=True)
class Signature:
    """Agent count, predicate arities and constant names."""

    agents: int
    predicates: Mapping[str, int] = field(default_factory=dict)
    constants: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.agents < 1:
            raise SignatureError("agent count must be positive")
        object.__setattr__(self, "predicates", dict(self.predicates))
        object.__setattr__(self, "constants", frozenset(self.constants))
        overlap = set(self.predicates) & self.constants
        if overlap:
            raise SignatureError(f"names both predicate and constant: {sorted(overlap)}")


# -- terms -------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    name: str


@dataclass(frozen=True)
class Var(Term):
    pass


@dataclass(frozen=True)
class Const(Term):
    pass


# -- formulas ----------------------------------------------------------------


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    terms: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Next(Formula):
    sub: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Know(Formula):
    agent: int
    sub: Formula


@dataclass(frozen=True)
class Common(Formula):
    sub: Formula


BINARY = (Implies, And, Or, Iff, Until)
QUANT = (Forall, Exists)


def _cache_hash(cls):
    # formulas are compared and hashed constantly; memoize the generated hash
    generated = cls.__hash__

    def cached(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = generated(self)
            object.__setattr__(self, "_h", h)
        return h

    cls.__hash__ = cached


for _cls in (Atom, Not, Implies, And, Or, Iff, Forall, Exists, Next, Until,
             Know, Common, Var, Const):
    _cache_hash(_cls)

_OP_TOKEN = {Implies: "->", And: "&", Or: "|", Iff: "<->", Until: "U"}


def children(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, Atom):
        return ()
    if isinstance(phi, (Not, Next, Know, Common)):
        return (phi.sub,)
    if isinstance(phi, BINARY):
        return (phi.left, phi.right)
    if isinstance(phi, QUANT):
        return (phi.body,)
    raise TypeError(f"not a formula: {phi!r}")


def _rebuild(phi: Formula, subs: tuple[Formula, ...]) -> Formula:
    if isinstance(phi, (Not, Next, Common)):
        return type(phi)(subs[0])
    if isinstance(phi, Know):
        return Know(phi.agent, subs[0])
    if isinstance(phi, BINARY):
        return type(phi)(subs[0], subs[1])
    if isinstance(phi, QUANT):
        return type(phi)(phi.var, subs[0])
    return phi


def size(phi: Formula) -> int:
    return 1 + sum(size(c) for c in children(phi))


def free_variables(phi: Formula) -> frozenset[str]:
    """Names with at least one free occurrence."""
    if isinstance(phi, Atom):
        return frozenset(t.name for t in phi.terms if isinstance(t, Var))
    if isinstance(phi, QUANT):
        return free_variables(phi.body) - {phi.var}
    out: frozenset[str] = frozenset()
    for c in children(phi):
        out |= free_variables(c)
    return out


def all_variables(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Atom):
        return frozenset(t.name for t in phi.terms if isinstance(t, Var))
    out: frozenset[str] = frozenset()
    if isinstance(phi, QUANT):
        out |= {phi.var}
    for c in children(phi):
        out |= all_variables(c)
    return out


def constants_of(phi: Formula) -> frozenset[str]:
    """All constant names occurring in the formula."""
    if isinstance(phi, Atom):
        return frozenset(t.name for t in phi.terms if isinstance(t, Const))
    out: frozenset[str] = frozenset()
    for c in children(phi):
        out |= constants_of(c)
    return out


def predicates_of(phi: Formula) -> dict[str, int]:
    out: dict[str, int] = {}
    if isinstance(phi, Atom):
        out[phi.pred] = len(phi.terms)
    for c in children(phi):
        for p, k in predicates_of(c).items():
            out[p] = k
    return out


def agents_of(phi: Formula) -> frozenset[int]:
    out: frozenset[int] = frozenset()
    if isinstance(phi, Know):
        out |= {phi.agent}
    for c in children(phi):
        out |= agents_of(c)
    return out


def signature_of(phi: Formula, agents: int) -> Signature:
    """Smallest signature (with the given agent count) covering the formula."""
    return Signature(agents, predicates_of(phi), frozenset(constants_of(phi)))


def fresh_variable(base: str, avoid: set[str]) -> str:
    """Numeric-suffix scheme: smallest unused suffix on the base name."""
    n = 0
    while f"{base}{n}" in avoid:
        n += 1
    return f"{base}{n}"


def substitute(phi: Formula, bindings: Mapping[str, Term]) -> Formula:
    """Capture-avoiding simultaneous substitution of free variables."""
    live = {v: t for v, t in bindings.items() if v in free_variables(phi)}
    if not live:
        return phi
    if isinstance(phi, Atom):
        return Atom(phi.pred, tuple(
            live.get(t.name, t) if isinstance(t, Var) else t for t in phi.terms))
    if isinstance(phi, QUANT):
        inner = {v: t for v, t in live.items() if v != phi.var}
        clash = {t.name for t in inner.values() if isinstance(t, Var)}
        var, body = phi.var, phi.body
        if var in clash:
            avoid = set(all_variables(body)) | clash | set(inner)
            nv = fresh_variable(var, avoid)
            body = substitute(body, {var: Var(nv)})
            var = nv
        return type(phi)(var, substitute(body, inner))
    return _rebuild(phi, tuple(substitute(c, live) for c in children(phi)))


def alpha_eq(a: Formula, b: Formula) -> bool:
    """Structural equality up to renaming of bound variables."""

    def go(a, b, env_a, env_b):
        if type(a) is not type(b):
            return False
        if isinstance(a, Atom):
            if a.pred != b.pred or len(a.terms) != len(b.terms):
                return False
            for ta, tb in zip(a.terms, b.terms):
                if type(ta) is not type(tb):
                    return False
                if isinstance(ta, Var):
                    if env_a.get(ta.name, ta.name) != env_b.get(tb.name, tb.name):
                        return False
                elif ta.name != tb.name:
                    return False
            return True
        if isinstance(a, QUANT):
            mark = f"@{len(env_a)}"
            return go(a.body, b.body,
                      {**env_a, a.var: mark}, {**env_b, b.var: mark})
        if isinstance(a, Know) and a.agent != b.agent:
            return False
        return all(go(ca, cb, env_a, env_b)
                   for ca, cb in zip(children(a), children(b)))

    return go(a, b, {}, {})


def is_monodic(phi: Formula) -> bool:
    """True iff every modal subformula has at most one free variable."""
    if isinstance(phi, (Know, Common, Next, Until)) and len(free_variables(phi)) > 1:
        return False
    return all(is_monodic(c) for c in children(phi))


def alternation_depth(phi: Formula) -> int:
    """Max length over branches of the absorptively collapsed K-agent sequence.

    A Common node resets the agent context (its unfolding may interleave
    any agents).
    """

    def go(f: Formula, last: Optional[int]) -> int:
        if isinstance(f, Know):
            inner = go(f.sub, f.agent)
            return inner if f.agent == last else 1 + inner
        if isinstance(f, Common):
            return go(f.sub, None)
        kids = children(f)
        return max((go(c, last) for c in kids), default=0)

    return go(phi, None)


# -- agent indexes -----------------------------------------------------------


def is_index(iota: tuple[int, ...]) -> bool:
    return all(iota[k] != iota[k + 1] for k in range(len(iota) - 1))


def absorptive_concat(iota: tuple[int, ...], i: int) -> tuple[int, ...]:
    """Append agent i unless it already ends the index."""
    if iota and iota[-1] == i:
        return iota
    return iota + (i,)


# -- sugar expansion and spine normalization ---------------------------------


def to_core(phi: Formula) -> Formula:
    """Expand the retained sugar (&, |, <->, exists) into ~, ->, forall."""
    if isinstance(phi, And):
        return Not(Implies(to_core(phi.left), Not(to_core(phi.right))))
    if isinstance(phi, Or):
        return Implies(Not(to_core(phi.left)), to_core(phi.right))
    if isinstance(phi, Iff):
        l, r = to_core(phi.left), to_core(phi.right)
        return Not(Implies(Implies(l, r), Not(Implies(r, l))))
    if isinstance(phi, Exists):
        return Not(Forall(phi.var, Not(to_core(phi.body))))
    return _rebuild(phi, tuple(to_core(c) for c in children(phi)))


def spine_canon(phi: Formula) -> Formula:
    """Normalize the leading ~/X spine: cancel ~~ and push ~ through X."""
    if isinstance(phi, Next):
        return Next(spine_canon(phi.sub))
    if isinstance(phi, Not):
        inner = spine_canon(phi.sub)
        if isinstance(inner, Not):
            return inner.sub
        if isinstance(inner, Next):
            return Next(spine_canon(Not(inner.sub)))
        return Not(inner)
    return phi


def spine_neg(phi: Formula) -> Formula:
    """Canonical complement: spine-normalized negation."""
    return spine_canon(Not(phi))


def big_and(parts: list[Formula]) -> Formula:
    if not parts:
        raise ValueError("empty conjunction")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def big_or(parts: list[Formula]) -> Formula:
    if not parts:
        raise ValueError("empty disjunction")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def everyone_knows(phi: Formula, agents: int) -> Formula:
    """E-expansion: conjunction of K_i phi over all agents."""
    return big_and([Know(i, phi) for i in range(1, agents + 1)])


# -- printer -----------------------------------------------------------------


def print_formula(phi: Formula) -> str:
    """Canonical ASCII rendering; reparses to a structurally equal AST."""
    if isinstance(phi, Atom):
        if not phi.terms:
            return phi.pred
        return f"{phi.pred}({', '.join(t.name for t in phi.terms)})"
    if isinstance(phi, Not):
        return "~" + _wrap(phi.sub)
    if isinstance(phi, BINARY):
        return f"({_wrap(phi.left)} {_OP_TOKEN[type(phi)]} {_wrap(phi.right)})"
    if isinstance(phi, Forall):
        return f"forall {phi.var} . {print_formula(phi.body)}"
    if isinstance(phi, Exists):
        return f"exists {phi.var} . {print_formula(phi.body)}"
    if isinstance(phi, Next):
        return "X " + _wrap(phi.sub)
    if isinstance(phi, Know):
        return f"K {phi.agent} " + _wrap(phi.sub)
    if isinstance(phi, Common):
        return "C " + _wrap(phi.sub)
    raise TypeError(f"not a formula: {phi!r}")


def _wrap(phi: Formula) -> str:
    # atoms are self-delimiting; binary nodes print their own parentheses
    if isinstance(phi, (Atom, *BINARY)):
        return print_formula(phi)
    return f"({print_formula(phi)})"


# -- parser ------------------------------------------------------------------

_KEYWORDS = {"forall", "exists", "X", "F", "G", "K", "Kd", "E", "C", "U"}
_SYMBOLS = ("<->", "->", "(", ")", ",", ".", "~", "&", "|")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(("sym", sym, i))
                i += len(sym)
                break
        else:
            if ch.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                toks.append(("nat", text[i:j], i))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                toks.append(("name", text[i:j], i))
                i = j
            else:
                raise ParseError(f"unexpected character {ch!r}", i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, sig: Optional[Signature],
                 agents: int, constants: frozenset[str]):
        self.toks = _tokenize(text)
        self.pos = 0
        self.sig = sig
        self.agents = sig.agents if sig is not None else agents
        self.constants = sig.constants if sig is not None else constants
        self.seen_preds: dict[str, int] = {}

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, value: str):
        kind, val, at = self.take()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val!r}", at)

    def formula(self) -> Formula:
        kind, val, at = self.peek()
        if val == "~":
            self.take()
            return Not(self.formula())
        if val == "(":
            self.take()
            left = self.formula()
            kind2, val2, at2 = self.take()
            if val2 == ")":
                return left
            if val2 in ("->", "&", "|", "<->"):
                op = {"->": Implies, "&": And, "|": Or, "<->": Iff}[val2]
                right = self.formula()
                self.expect(")")
                return op(left, right)
            if val2 == "U":
                right = self.formula()
                self.expect(")")
                return Until(left, right)
            raise ParseError(f"expected operator or ')', found {val2!r}", at2)
        if val in ("forall", "exists"):
            self.take()
            kind2, var, at2 = self.take()
            if kind2 != "name" or var in _KEYWORDS:
                raise ParseError("expected variable name", at2)
            if var in self.constants:
                raise ParseError(f"cannot bind constant name {var!r}", at2)
            self.expect(".")
            body = self.formula()
            return (Forall if val == "forall" else Exists)(var, body)
        if val == "X":
            self.take()
            return Next(self.formula())
        if val == "F":
            self.take()
            f = self.formula()
            return Until(Implies(f, f), f)
        if val == "G":
            self.take()
            f = self.formula()
            neg = Not(f)
            return Not(Until(Implies(neg, neg), neg))
        if val in ("K", "Kd"):
            self.take()
            kind2, num, at2 = self.take()
            if kind2 != "nat":
                raise ParseError("expected agent number", at2)
            agent = int(num)
            if not 1 <= agent <= self.agents:
                raise ParseError(f"unknown agent index {agent}", at2)
            sub = self.formula()
            if val == "K":
                return Know(agent, sub)
            return Not(Know(agent, Not(sub)))
        if val == "E":
            self.take()
            return everyone_knows(self.formula(), self.agents)
        if val == "C":
            self.take()
            return Common(self.formula())
        if kind == "name" and val not in _KEYWORDS:
            return self.atom()
        raise ParseError(f"unexpected token {val!r}", at)

    def atom(self) -> Formula:
        kind, name, at = self.take()
        terms: tuple[Term, ...] = ()
        if self.peek()[1] == "(":
            self.take()
            parts = []
            if self.peek()[1] != ")":
                parts.append(self.term())
                while self.peek()[1] == ",":
                    self.take()
                    parts.append(self.term())
            self.expect(")")
            terms = tuple(parts)
        if name in self.constants:
            raise ParseError(f"constant {name!r} used as predicate", at)
        if self.sig is not None:
            if name not in self.sig.predicates:
                raise SignatureError(f"undeclared predicate {name!r}")
            if self.sig.predicates[name] != len(terms):
                raise SignatureError(
                    f"predicate {name!r} expects arity {self.sig.predicates[name]}, "
                    f"got {len(terms)}")
        else:
            known = self.seen_preds.setdefault(name, len(terms))
            if known != len(terms):
                raise SignatureError(
                    f"predicate {name!r} used with arities {known} and {len(terms)}")
        return Atom(name, terms)

    def term(self) -> Term:
        kind, name, at = self.take()
        if kind != "name" or name in _KEYWORDS:
            raise ParseError("expected term name", at)
        if name in self.constants:
            return Const(name)
        return Var(name)


def parse_formula(text: str, sig: Optional[Signature] = None, *,
                  agents: int = 1, constants: frozenset[str] = frozenset()) -> Formula:
    """Parse the ASCII grammar.

    With a signature, predicate/constant/agent use is checked against it;
    without one, predicates are inferred and names default to variables.
    """
    p = _Parser(text, sig, agents, constants)
    phi = p.formula()
    kind, val, at = p.peek()
    if kind != "end":
        raise ParseError(f"trailing input {val!r}", at)
    return phi


def subformulas(phi: Formula) -> frozenset[Formula]:
    """All subformulas including the formula itself."""
    out = {phi}
    for c in children(phi):
        out |= subformulas(c)
    return frozenset(out)
