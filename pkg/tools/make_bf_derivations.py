"""Emit the bundled Barcan derivation files and verify them with the checker.

Run from the repository root:  python3 tools/make_bf_derivations.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qistk.calculus import CheckResult, SystemSpec, check_derivation, parse_derivation  # noqa: E402


class Proof:
    def __init__(self):
        self.lines = []

    def add(self, formula: str, just: str) -> int:
        self.lines.append(f"{len(self.lines) + 1}. {formula} ; {just}")
        return len(self.lines)

    def taut(self, formula):
        return self.add(formula, "axiom Taut")

    def mp(self, implication_line, antecedent_line, conclusion):
        return self.add(conclusion, f"rule MP from {implication_line}, {antecedent_line}")

    def chain(self, l1, a, b, l2, c, result=None):
        """From a->b (line l1) and b->c (line l2) derive a->c."""
        result = result or f"({a} -> {c})"
        t = self.taut(f"(({a} -> {b}) -> (({b} -> {c}) -> ({a} -> {c})))")
        step = self.mp(t, l1, f"(({b} -> {c}) -> ({a} -> {c}))")
        return self.mp(step, l2, result)

    def text(self):
        return "\n".join(self.lines) + "\n"


def cbf_next():
    p = Proof()
    l1 = p.add("(forall x . P(x) -> P(x))", "axiom Ex")
    l2 = p.add("X (forall x . P(x) -> P(x))", "rule Nec-X from 1")
    l3 = p.add("(X (forall x . P(x) -> P(x)) -> (X (forall x . P(x)) -> X P(x)))",
               "axiom K-X")
    l4 = p.mp(l3, l2, "(X (forall x . P(x)) -> X P(x))")
    p.add("(X (forall x . P(x)) -> forall x . X P(x))", f"rule Gen from {l4}")
    return p.text()


def bf_know():
    p = Proof()
    A = "forall x . K 1 P(x)"    # the BF antecedent
    B = "K 1 P(x)"
    FA = "forall x . P(x)"

    # direction 1 (converse Barcan): K 1 forall -> forall K 1
    e1 = p.add(f"({FA} -> P(x))", "axiom Ex")
    n1 = p.add(f"K 1 ({FA} -> P(x))", f"rule Nec-K from {e1}")
    k1 = p.add(f"(K 1 ({FA} -> P(x)) -> (K 1 ({FA}) -> K 1 P(x)))", "axiom K-K")
    d1 = p.mp(k1, n1, f"(K 1 ({FA}) -> K 1 P(x))")
    cbf = p.add(f"(K 1 ({FA}) -> {A})", f"rule Gen from {d1}")

    # direction 2 (Barcan), via the S5 laws
    a1 = p.add(f"(({A}) -> {B})", "axiom Ex")
    # K-bar monotonicity: from X -> Y derive ~K~X -> ~K~Y
    na = p.add(f"K 1 (({A}) -> {B})", f"rule Nec-K from {a1}")
    t1 = p.taut(f"(((({A}) -> {B})) -> (~{B} -> ~({A})))")
    nt = p.add(f"K 1 ((({A}) -> {B}) -> (~{B} -> ~({A})))", f"rule Nec-K from {t1}")
    kk1 = p.add(f"(K 1 ((({A}) -> {B}) -> (~{B} -> ~({A}))) -> "
                f"(K 1 (({A}) -> {B}) -> K 1 (~{B} -> ~({A}))))", "axiom K-K")
    s1 = p.mp(kk1, nt, f"(K 1 (({A}) -> {B}) -> K 1 (~{B} -> ~({A})))")
    s2 = p.mp(s1, na, f"K 1 (~{B} -> ~({A}))")
    kk2 = p.add(f"(K 1 (~{B} -> ~({A})) -> (K 1 (~{B}) -> K 1 (~({A}))))", "axiom K-K")
    s3 = p.mp(kk2, s2, f"(K 1 (~{B}) -> K 1 (~({A})))")
    t2 = p.taut(f"((K 1 (~{B}) -> K 1 (~({A}))) -> (~(K 1 (~({A}))) -> ~(K 1 (~{B}))))")
    s4 = p.mp(t2, s3, f"(~(K 1 (~({A}))) -> ~(K 1 (~{B})))")

    # ~K~K P(x) -> P(x), from axiom 5 contraposed and axiom T
    f5 = p.add(f"(~{B} -> K 1 (~{B}))", "axiom 5")
    t3 = p.taut(f"((~{B} -> K 1 (~{B})) -> (~(K 1 (~{B})) -> ~~{B}))")
    s5 = p.mp(t3, f5, f"(~(K 1 (~{B})) -> ~~{B})")
    t4 = p.taut(f"(~~{B} -> {B})")
    s6 = p.chain(s5, f"~(K 1 (~{B}))", f"~~{B}", t4, B)
    tax = p.add(f"({B} -> P(x))", "axiom T")
    s7 = p.chain(s6, f"~(K 1 (~{B}))", B, tax, "P(x)")
    s8 = p.chain(s4, f"~(K 1 (~({A})))", f"~(K 1 (~{B}))", s7, "P(x)")
    gen = p.add(f"(~(K 1 (~({A}))) -> {FA})", f"rule Gen from {s8}")

    # box the result and detach with the B-theorem
    nb = p.add(f"K 1 (~(K 1 (~({A}))) -> {FA})", f"rule Nec-K from {gen}")
    kk3 = p.add(f"(K 1 (~(K 1 (~({A}))) -> {FA}) -> "
                f"(K 1 (~(K 1 (~({A})))) -> K 1 ({FA})))", "axiom K-K")
    s9 = p.mp(kk3, nb, f"(K 1 (~(K 1 (~({A})))) -> K 1 ({FA}))")

    # B-theorem: A -> K ~K ~A, from T (on ~A) and 5 (on ~A)
    tb = p.add(f"(K 1 (~({A})) -> ~({A}))", "axiom T")
    t5 = p.taut(f"((K 1 (~({A})) -> ~({A})) -> (~~({A}) -> ~(K 1 (~({A})))))")
    s10 = p.mp(t5, tb, f"(~~({A}) -> ~(K 1 (~({A}))))")
    t6 = p.taut(f"(({A}) -> ~~({A}))")
    s11 = p.chain(t6, f"({A})", f"~~({A})", s10, f"~(K 1 (~({A})))")
    f5b = p.add(f"(~(K 1 (~({A}))) -> K 1 (~(K 1 (~({A})))))", "axiom 5")
    s12 = p.chain(s11, f"({A})", f"~(K 1 (~({A})))", f5b, f"K 1 (~(K 1 (~({A}))))")
    bf = p.chain(s12, f"({A})", f"K 1 (~(K 1 (~({A}))))", s9, f"K 1 ({FA})",
                 result=f"(({A}) -> K 1 ({FA}))")

    # assemble the biconditional
    tl = p.taut(f"((K 1 ({FA}) -> {A}) -> ((({A}) -> K 1 ({FA})) -> "
                f"(K 1 ({FA}) <-> ({A}))))")
    half = p.mp(tl, cbf, f"((({A}) -> K 1 ({FA})) -> (K 1 ({FA}) <-> ({A})))")
    p.mp(half, bf, f"(K 1 ({FA}) <-> ({A}))")
    return p.text()


def main():
    corpus = Path(__file__).resolve().parents[1] / "src" / "qistk" / "corpus"
    sys1 = SystemSpec("QKT", frozenset(), agents=1)
    for fname, text in [("bf-next.drv", cbf_next()), ("bf-know.drv", bf_know())]:
        d = parse_derivation(text, sys1)
        result = check_derivation(d, sys1)
        if not result.ok:
            raise SystemExit(f"{fname}: rejected at line {result.line}: {result.message}")
        (corpus / fname).write_text(text)
        print(f"{fname}: {len(text.splitlines())} lines, accepted")


if __name__ == "__main__":
    main()
