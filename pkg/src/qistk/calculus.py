"""Hilbert systems for the temporal-epistemic logics: axiom schemas, the
interaction axioms, schema instantiation/recognition, and a derivation
checker.

Schema templates carry formula metavariables and negative agent slots;
matching and rule checking compare formulas after sugar normalization.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Optional

from .syntax import (
    And, Atom, Common, Const, Exists, Forall, Formula, Iff, Implies, Know,
    Next, Not, Or, ParseError, Signature, Term, Until, Var, alpha_eq, children,
    constants_of, everyone_knows, free_variables, is_monodic, parse_formula,
    print_formula, subformulas, substitute, to_core,
)


class CalculusError(ValueError):
    pass


@dataclass(frozen=True)
class FVar(Atom):
    """Formula metavariable inside a schema template; an Atom subclass so the
    generic formula walkers treat it as a leaf."""

    @property
    def name(self) -> str:
        return self.pred


PHI, PSI, CHI = FVar("phi"), FVar("psi"), FVar("chi")
AGENT_I, AGENT_J = -1, -2  # agent metavariable slots in templates


@dataclass(frozen=True)
class Schema:
    name: str
    template: Optional[Formula]  # None: handled by a dedicated matcher
    side_condition: str = ""


def _axiom_templates(agents: int) -> dict[str, Optional[Formula]]:
    ec_common = everyone_knows(Common(PHI), agents)
    return {
        "Taut": None,
        "Ex": None,
        "K-X": Implies(Next(Implies(PHI, PSI)),
                       Implies(Next(PHI), Next(PSI))),
        "T1": Iff(Next(Not(PHI)), Not(Next(PHI))),
        "T2": Iff(Until(PHI, PSI),
                  Or(PSI, And(PHI, Next(Until(PHI, PSI))))),
        "K-K": Implies(Know(AGENT_I, Implies(PHI, PSI)),
                       Implies(Know(AGENT_I, PHI), Know(AGENT_I, PSI))),
        "T": Implies(Know(AGENT_I, PHI), PHI),
        "4": Implies(Know(AGENT_I, PHI), Know(AGENT_I, Know(AGENT_I, PHI))),
        "5": Implies(Not(Know(AGENT_I, PHI)),
                     Know(AGENT_I, Not(Know(AGENT_I, PHI)))),
        "C1": Iff(Common(PHI), And(PHI, ec_common)),
        "KT1": Implies(
            And(Know(AGENT_I, PHI),
                Next(And(Know(AGENT_I, PSI), Not(Know(AGENT_I, CHI))))),
            Not(Know(AGENT_I, Not(
                Until(Know(AGENT_I, PHI),
                      Until(Know(AGENT_I, PSI), Not(CHI))))))),
        "KT2": Implies(Know(AGENT_I, Next(PHI)), Next(Know(AGENT_I, PHI))),
        "KT3": Implies(Until(Know(AGENT_I, PHI), Know(AGENT_I, PSI)),
                       Know(AGENT_I, Until(Know(AGENT_I, PHI),
                                           Know(AGENT_I, PSI)))),
        "KT4": Implies(Next(Know(AGENT_I, PHI)), Know(AGENT_I, Next(PHI))),
        "KT5": Iff(Know(AGENT_I, PHI), Know(AGENT_J, PHI)),
    }


# Taut is matched last: degenerate bindings make instances of the other
# schemas propositional tautologies, and recognition runs in this fixed order
BASE_AXIOMS = ("Ex", "K-X", "T1", "T2", "K-K", "T", "4", "5")
COMMON_AXIOMS = ("C1",)
RULES = ("MP", "Gen", "Nec-X", "Nec-K", "T3", "C2")


@dataclass(frozen=True)
class SystemSpec:
    base: str  # "QKT" or "QKTC"
    extensions: frozenset[int] = frozenset()
    agents: int = 1

    def __post_init__(self):
        if self.base not in ("QKT", "QKTC"):
            raise CalculusError(f"unknown base system {self.base!r}")
        if not self.extensions <= {1, 2, 3, 4, 5}:
            raise CalculusError(f"bad extensions {sorted(self.extensions)}")
        object.__setattr__(self, "extensions", frozenset(self.extensions))

    @property
    def name(self) -> str:
        sup = ",".join(str(k) for k in sorted(self.extensions))
        return f"{self.base}_{self.agents}" + (f"^{{{sup}}}" if sup else "")

    def axiom_names(self) -> tuple[str, ...]:
        names = list(BASE_AXIOMS)
        if self.base == "QKTC":
            names += list(COMMON_AXIOMS)
        names += [f"KT{k}" for k in sorted(self.extensions)]
        names.append("Taut")
        return tuple(names)

    def rule_names(self) -> tuple[str, ...]:
        names = [r for r in RULES if r != "C2"]
        if self.base == "QKTC":
            names.append("C2")
        return tuple(names)

    def allows_common(self) -> bool:
        return self.base == "QKTC"


def _norm(phi: Formula) -> Formula:
    return to_core(phi)


# -- template matching ---------------------------------------------------------


def _match(tmpl: Formula, phi: Formula, binds: dict) -> bool:
    if isinstance(tmpl, FVar):
        if tmpl.name in binds:
            return binds[tmpl.name] == phi
        binds[tmpl.name] = phi
        return True
    if type(tmpl) is not type(phi):
        return False
    if isinstance(tmpl, Atom):
        return tmpl == phi
    if isinstance(tmpl, Know) and tmpl.agent < 0:
        key = f"agent{tmpl.agent}"
        if key in binds:
            if binds[key] != phi.agent:
                return False
        else:
            binds[key] = phi.agent
        return _match(tmpl.sub, phi.sub, binds)
    if isinstance(tmpl, Know):
        return tmpl.agent == phi.agent and _match(tmpl.sub, phi.sub, binds)
    if isinstance(tmpl, (Forall, Exists)):
        return tmpl.var == phi.var and _match(tmpl.body, phi.body, binds)
    kids_t, kids_p = children(tmpl), children(phi)
    return all(_match(a, b, binds) for a, b in zip(kids_t, kids_p))


def _is_tautology(phi: Formula, max_letters: int = 20) -> bool:
    """Propositional-abstraction truth table: maximal non-boolean subformulas
    become letters."""
    letters: dict[Formula, int] = {}

    def abstract(f: Formula):
        if isinstance(f, (Not, Implies, And, Or, Iff)):
            return (type(f).__name__,) + tuple(abstract(c) for c in children(f))
        if f not in letters:
            letters[f] = len(letters)
        return ("letter", letters[f])

    tree = abstract(phi)
    if len(letters) > max_letters:
        raise CalculusError(
            f"too large: {len(letters)} abstracted letters (limit {max_letters})")

    def ev(node, row) -> bool:
        tag = node[0]
        if tag == "letter":
            return row[node[1]]
        if tag == "Not":
            return not ev(node[1], row)
        if tag == "Implies":
            return not ev(node[1], row) or ev(node[2], row)
        if tag == "And":
            return ev(node[1], row) and ev(node[2], row)
        if tag == "Or":
            return ev(node[1], row) or ev(node[2], row)
        return ev(node[1], row) == ev(node[2], row)  # Iff

    return all(ev(tree, row) for row in product((False, True), repeat=len(letters)))


def _candidate_terms(phi: Formula, x: str) -> list[Term]:
    terms: list[Term] = [Var(x)]
    seen = {x}

    def walk(f: Formula):
        if isinstance(f, Atom):
            for t in f.terms:
                if t.name not in seen:
                    seen.add(t.name)
                    terms.append(t)
        for c in children(f):
            walk(c)

    walk(phi)
    return terms


def _match_ex(phi: Formula) -> Optional[dict]:
    """Ex: forall x phi -> phi[x/t]."""
    if not isinstance(phi, Implies) or not isinstance(phi.left, Forall):
        return None
    x, body, rhs = phi.left.var, phi.left.body, phi.right
    for t in _candidate_terms(phi, x):
        if alpha_eq(substitute(body, {x: t}), rhs):
            return {"x": x, "t": t, "phi": body}
    return None


def recognize_axiom(phi: Formula, sys: SystemSpec):
    """First matching axiom schema of the system, with a witness binding;
    None when no schema matches."""
    if not sys.allows_common() and any(
            isinstance(s, Common) for s in subformulas(phi)):
        return None
    templates = _axiom_templates(sys.agents)
    norm = _norm(phi)
    for name in sys.axiom_names():
        if name == "Taut":
            try:
                if _is_tautology(norm):
                    return ("Taut", {})
            except CalculusError:
                pass
            continue
        if name == "Ex":
            got = _match_ex(norm)
            if got is not None:
                return ("Ex", got)
            continue
        binds: dict = {}
        if _match(_norm(templates[name]), norm, binds):
            return (name, binds)
    return None


def instantiate_schema(name: str, bindings: Mapping, sys: SystemSpec) -> Formula:
    """Build an axiom instance; checks side conditions and the monodicity
    gate on the result."""
    templates = _axiom_templates(sys.agents)
    if name not in sys.axiom_names():
        raise CalculusError(f"schema {name!r} not available in {sys.name}")
    if name == "Taut":
        raise CalculusError("Taut is recognized, not instantiated")
    if name == "Ex":
        phi, x, t = bindings["phi"], bindings["x"], bindings["t"]
        out = Implies(Forall(x, phi), substitute(phi, {x: t}))
    else:
        def build(tmpl: Formula) -> Formula:
            if isinstance(tmpl, FVar):
                return bindings[tmpl.name]
            if isinstance(tmpl, Know) and tmpl.agent < 0:
                agent = bindings["i" if tmpl.agent == AGENT_I else "j"]
                if not 1 <= agent <= sys.agents:
                    raise CalculusError(f"agent {agent} out of range")
                return Know(agent, build(tmpl.sub))
            if isinstance(tmpl, Atom):
                return tmpl
            if isinstance(tmpl, (Forall, Exists)):
                return type(tmpl)(tmpl.var, build(tmpl.body))
            if isinstance(tmpl, Know):
                return Know(tmpl.agent, build(tmpl.sub))
            kids = tuple(build(c) for c in children(tmpl))
            if isinstance(tmpl, (Not, Next, Common)):
                return type(tmpl)(kids[0])
            return type(tmpl)(kids[0], kids[1])

        out = build(templates[name])
    if not is_monodic(out):
        raise CalculusError("non-monodic instantiation")
    return out


# -- derivations ----------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    number: int
    formula: Formula
    kind: str  # "axiom" | "rule"
    name: str
    premises: tuple[int, ...] = ()


@dataclass(frozen=True)
class Derivation:
    lines: tuple[Line, ...]

    def conclusion(self) -> Formula:
        return self.lines[-1].formula


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    line: Optional[int] = None
    message: str = ""


_LINE_RE = re.compile(
    r"^\s*(\d+)\.\s*(.+?)\s*;\s*(axiom|rule)\s+(\S+)"
    r"(?:\s+from\s+([\d,\s]+))?(?:\s*\[[^\]]*\])?\s*$")


def parse_derivation(text: str, sys: SystemSpec,
                     sig: Optional[Signature] = None) -> Derivation:
    lines = []
    for raw in text.splitlines():
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE_RE.match(stripped)
        if m is None:
            raise CalculusError(f"malformed derivation line: {stripped!r}")
        number, formula_text, kind, name, froms = m.groups()
        phi = parse_formula(formula_text, sig, agents=sys.agents)
        premises = tuple(int(x) for x in froms.replace(",", " ").split()) if froms else ()
        lines.append(Line(int(number), phi, kind, name, premises))
    if not lines:
        raise CalculusError("empty derivation")
    return Derivation(tuple(lines))


def _rule_fits(name: str, premises: list[Formula], target: Formula,
               sys: SystemSpec) -> bool:
    ps = [_norm(p) for p in premises]
    t = _norm(target)
    if name == "MP":
        return (len(ps) == 2 and isinstance(ps[0], Implies)
                and ps[0].left == ps[1] and ps[0].right == t)
    if name == "Nec-X":
        return len(ps) == 1 and isinstance(t, Next) and t.sub == ps[0]
    if name == "Nec-K":
        return (len(ps) == 1 and isinstance(t, Know)
                and 1 <= t.agent <= sys.agents and t.sub == ps[0])
    if name == "Gen":
        if len(ps) != 1 or not isinstance(t, Implies):
            return False
        if not isinstance(t.right, Forall):
            return False
        x, body = t.right.var, t.right.body
        if x in free_variables(t.left):
            return False
        if not isinstance(ps[0], Implies) or ps[0].left != t.left:
            return False
        rhs = ps[0].right
        return any(alpha_eq(substitute(body, {x: term}), rhs)
                   for term in _candidate_terms(ps[0], x))
    if name == "T3":
        # chi -> ~psi & X chi  ==>  chi -> ~(phi U psi)
        if len(ps) != 1 or not isinstance(t, Implies):
            return False
        if not isinstance(t.right, Not) or not isinstance(t.right.sub, Until):
            return False
        chi, u = t.left, t.right.sub
        expected = _norm(Implies(chi, And(Not(u.right), Next(chi))))
        return ps[0] == expected
    if name == "C2":
        # phi -> (psi & E phi)  ==>  phi -> C psi
        if len(ps) != 1 or not isinstance(t, Implies):
            return False
        if not isinstance(t.right, Common):
            return False
        phi, psi = t.left, t.right.sub
        expected = _norm(Implies(phi, And(psi, everyone_knows(phi, sys.agents))))
        return ps[0] == expected
    return False


def check_derivation(d: Derivation, sys: SystemSpec) -> CheckResult:
    """Verify every line is a recognized axiom instance or a correct rule
    application to earlier lines; reports the first offending line."""
    by_number: dict[int, Formula] = {}
    for ln in d.lines:
        if not is_monodic(ln.formula):
            return CheckResult(False, ln.number, "non-monodic formula")
        if not sys.allows_common() and any(
                isinstance(s, Common) for s in subformulas(ln.formula)):
            return CheckResult(False, ln.number,
                               "common-knowledge operator outside QKTC")
        if ln.kind == "axiom":
            if ln.name not in sys.axiom_names():
                return CheckResult(False, ln.number,
                                   f"axiom {ln.name} not in {sys.name}")
            got = recognize_axiom(ln.formula, sys)
            if got is None or got[0] != ln.name:
                return CheckResult(False, ln.number,
                                   f"not an instance of {ln.name}")
        else:
            if ln.name not in sys.rule_names():
                return CheckResult(False, ln.number,
                                   f"rule {ln.name} not in {sys.name}")
            if not ln.premises or any(p >= ln.number for p in ln.premises):
                return CheckResult(False, ln.number, "premises must be earlier lines")
            try:
                premises = [by_number[p] for p in ln.premises]
            except KeyError as e:
                return CheckResult(False, ln.number, f"missing premise line {e}")
            if not _rule_fits(ln.name, premises, ln.formula, sys):
                return CheckResult(False, ln.number,
                                   f"rule {ln.name} does not yield this line")
        by_number[ln.number] = ln.formula
    return CheckResult(True)


# -- soundness probing -----------------------------------------------------------


def default_instance_pool(sig: Signature) -> list[Formula]:
    texts = ["p", "q", "~p", "(p -> q)", "P(x)", "X p", "K 1 p"]
    return [parse_formula(t, sig) for t in texts]


def schema_instances(name: str, sys: SystemSpec, pool: list[Formula],
                     cap: int = 60) -> list[Formula]:
    """Instances of one axiom schema over a formula pool (agents included)."""
    if name == "Taut":
        out = []
        for f in pool:
            out.append(Or(f, Not(f)))
            out.append(Implies(f, f))
        return out[:cap]
    if name == "Ex":
        return [Implies(Forall("x", f), f) for f in pool][:cap]
    templates = _axiom_templates(sys.agents)
    meta = sorted({n.name for n in subformulas(templates[name])
                   if isinstance(n, FVar)})
    agent_slots = ["i"] + (["j"] if name == "KT5" else [])
    out = []
    for agents in product(range(1, sys.agents + 1), repeat=len(agent_slots)):
        for combo in product(pool, repeat=len(meta)):
            binds = dict(zip(meta, combo)) | dict(zip(agent_slots, agents))
            try:
                out.append(instantiate_schema(name, binds, sys))
            except CalculusError:
                continue
            if len(out) >= cap:
                return out
    return out


def soundness_probe(sys: SystemSpec, models, pool: Optional[list[Formula]] = None,
                    per_schema_cap: int = 40):
    """Check every axiom schema of the system over the given models.

    Returns {schema name: ProbeReport}; any failure indicates a bug in either
    the evaluator or the model generation for the claimed class.
    """
    from .semantics import validity_probe

    if pool is None:
        pool = default_instance_pool(Signature(sys.agents, {"p": 0, "q": 0, "P": 1}))
    models = list(models)
    out = {}
    for name in sys.axiom_names():
        instances = schema_instances(name, sys, pool, cap=per_schema_cap)
        failures, tried = 0, 0
        first = None
        for inst in instances:
            report = validity_probe(models, inst)
            tried += report.tried
            failures += report.failed
            if first is None and report.first_counterexample is not None:
                first = (print_formula(inst), report.first_counterexample)
        from .semantics import ProbeReport
        out[name] = ProbeReport(tried, tried - failures, failures, first)
    return out
