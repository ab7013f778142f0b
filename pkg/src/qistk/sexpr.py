"""Minimal s-expression reader for the model and quasimodel file formats."""

from __future__ import annotations


class SexprError(ValueError):
    pass


def parse_sexpr(text: str):
    """Parse one s-expression: nested lists of atoms (str) and quoted strings."""
    toks = _tokenize(text)
    expr, rest = _read(toks, 0)
    if rest != len(toks):
        raise SexprError(f"trailing content after expression: {toks[rest]}")
    return expr


def _tokenize(text: str) -> list[str]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            toks.append(ch)
            i += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            if j >= n:
                raise SexprError("unterminated string")
            toks.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '();"':
                j += 1
            toks.append(text[i:j])
            i = j
    return toks


def _read(toks: list[str], i: int):
    if i >= len(toks):
        raise SexprError("unexpected end of input")
    tok = toks[i]
    if tok == "(":
        items = []
        i += 1
        while i < len(toks) and toks[i] != ")":
            item, i = _read(toks, i)
            items.append(item)
        if i >= len(toks):
            raise SexprError("missing closing parenthesis")
        return items, i + 1
    if tok == ")":
        raise SexprError("unexpected ')'")
    if tok.startswith('"'):
        return tok[1:-1], i + 1
    return tok, i + 1


def tagged(items: list, tag: str) -> list:
    """All sublists whose head is the given tag."""
    return [it for it in items
            if isinstance(it, list) and it and it[0] == tag]


def tagged_one(items: list, tag: str):
    found = tagged(items, tag)
    if len(found) != 1:
        raise SexprError(f"expected exactly one ({tag} ...) block, found {len(found)}")
    return found[0]
