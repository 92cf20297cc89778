"""S-expression reader and canonical printer.

The surface syntax is a small Scheme subset: parenthesised lists, symbols,
integer and real literals, ``#t``/``#f`` booleans, double-quoted strings,
and ``;`` comments running to end of line.  Pattern variables such as ``$A``
are ordinary symbols to the reader.  Every node carries an optional source
location that never participates in equality, hashing or printing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import LexError, ParseError


@dataclass(frozen=True, slots=True)
class Location:
    line: int
    column: int

    def __str__(self):
        return f"line {self.line}, column {self.column}"


class SExpr:
    """Base class for expression nodes; instances are immutable."""

    __slots__ = ()

    def __str__(self):
        return print_expr(self)


@dataclass(frozen=True, slots=True)
class Symbol(SExpr):
    name: str
    loc: Location | None = field(default=None, compare=False, repr=False)

    def is_pattern_var(self):
        return self.name.startswith("$")


@dataclass(frozen=True, slots=True)
class Integer(SExpr):
    value: int
    loc: Location | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Real(SExpr):
    value: float
    loc: Location | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Boolean(SExpr):
    value: bool
    loc: Location | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Text(SExpr):
    value: str
    loc: Location | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class SList(SExpr):
    items: tuple
    loc: Location | None = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]


def slist(*items, loc=None):
    return SList(tuple(items), loc)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "(" | ")" | "symbol" | "integer" | "real" | "boolean" | "string"
    text: str
    value: object
    loc: Location


_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
_REAL_RE = re.compile(r"[+-]?(?:[0-9]+\.[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?\Z"
                      r"|[+-]?[0-9]+[eE][+-]?[0-9]+\Z")
_ESCAPES_IN = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}
_ESCAPES_OUT = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t"}
_DELIMS = frozenset(' \t\r\n()";')


def _classify(text, loc):
    if _INT_RE.match(text):
        return Token("integer", text, int(text), loc)
    if _REAL_RE.match(text):
        return Token("real", text, float(text), loc)
    if text == "#t":
        return Token("boolean", text, True, loc)
    if text == "#f":
        return Token("boolean", text, False, loc)
    if text.startswith("#"):
        raise LexError(f"unknown literal '{text}'", loc)
    return Token("symbol", text, text, loc)


def tokenize(text):
    """Split source text into located tokens, discarding whitespace and comments.

    >>> [t.text for t in tokenize("(+ x 5)")]
    ['(', '+', 'x', '5', ')']
    """
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = Location(line, col)
        if ch in "()":
            tokens.append(Token(ch, ch, None, start))
            i += 1
            col += 1
            continue
        if ch == '"':
            i += 1
            col += 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise LexError("unterminated string literal", start)
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise LexError("unterminated string literal", start)
                    esc = text[i + 1]
                    if esc not in _ESCAPES_IN:
                        raise LexError(f"unknown escape '\\{esc}' in string",
                                       Location(line, col))
                    buf.append(_ESCAPES_IN[esc])
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            value = "".join(buf)
            tokens.append(Token("string", value, value, start))
            continue
        j = i
        while j < n and text[j] not in _DELIMS:
            j += 1
        word = text[i:j]
        tokens.append(_classify(word, start))
        col += j - i
        i = j
    return tokens


_ATOM_NODES = {
    "symbol": Symbol,
    "integer": Integer,
    "real": Real,
    "boolean": Boolean,
    "string": Text,
}


def parse(text):
    """Parse source text into a list of expression trees."""
    tokens = tokenize(text)
    forms = []
    pos = 0
    while pos < len(tokens):
        expr, pos = _read(tokens, pos)
        forms.append(expr)
    return forms


def parse_one(text):
    """Parse text that must contain exactly one form."""
    forms = parse(text)
    if len(forms) != 1:
        raise ParseError(f"expected exactly one form, found {len(forms)}")
    return forms[0]


def _read(tokens, pos):
    tok = tokens[pos]
    if tok.kind == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise ParseError(f"unclosed '(' opened at {tok.loc}", tok.loc,
                                 incomplete=True)
            if tokens[pos].kind == ")":
                return SList(tuple(items), tok.loc), pos + 1
            expr, pos = _read(tokens, pos)
            items.append(expr)
    if tok.kind == ")":
        raise ParseError("unmatched ')'", tok.loc)
    return _ATOM_NODES[tok.kind](tok.value, tok.loc), pos + 1


def escape_text(value):
    return "".join(_ESCAPES_OUT.get(c, c) for c in value)


def print_expr(expr):
    """Render an expression in canonical form: single spaces, no trailing
    whitespace, integers without exponent, reals in shortest round-trip form.
    """
    t = expr.__class__
    if t is Symbol:
        return expr.name
    if t is Integer:
        return str(expr.value)
    if t is Real:
        return repr(expr.value)
    if t is Boolean:
        return "#t" if expr.value else "#f"
    if t is Text:
        return '"' + escape_text(expr.value) + '"'
    if t is SList:
        return "(" + " ".join(print_expr(item) for item in expr.items) + ")"
    raise TypeError(f"not an expression node: {expr!r}")
