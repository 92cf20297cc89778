"""Runtime values and lexical environments.

Numbers, booleans and text are plain Python ``int``/``float``/``bool``/``str``;
symbols reuse the reader's Symbol node.  Pairs, closures, primitives and
concept references get their own classes.  ``None`` marks "no value" (the
result of ``define`` and the knowledge forms) and is not a language value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .concepts import ConceptId
from .errors import EvalError
from .sexpr import Symbol, escape_text


class EmptyList:
    """The empty list; a single shared instance NIL."""

    __slots__ = ()

    def __repr__(self):
        return "()"


NIL = EmptyList()


@dataclass(frozen=True)
class Pair:
    head: object
    tail: object


@dataclass(eq=False)
class Closure:
    params: tuple
    body: tuple
    env: "Env"


@dataclass(eq=False)
class Primitive:
    name: str
    fn: object

    def __repr__(self):
        return f"#<primitive {self.name}>"


class Env:
    """Chain of name->value frames; innermost frame wins on lookup."""

    __slots__ = ("frame", "parent")

    def __init__(self, parent=None, frame=None):
        self.frame = frame if frame is not None else {}
        self.parent = parent

    def define(self, name, value, loc=None):
        if name in self.frame:
            raise EvalError(f"'{name}' is already defined in this scope", loc)
        self.frame[name] = value

    def lookup(self, name):
        env = self
        while env is not None:
            if name in env.frame:
                return env.frame[name]
            env = env.parent
        raise KeyError(name)

    def has(self, name):
        env = self
        while env is not None:
            if name in env.frame:
                return True
            env = env.parent
        return False


def is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def values_equal(a, b):
    """Language-level `=`: numeric across int/real, structural over booleans,
    symbols, text and lists; closures and primitives are never equal."""
    if is_number(a) and is_number(b):
        return a == b
    if isinstance(a, bool) and isinstance(b, bool):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, Symbol) and isinstance(b, Symbol):
        return a.name == b.name
    if a is NIL and b is NIL:
        return True
    if isinstance(a, Pair) and isinstance(b, Pair):
        return values_equal(a.head, b.head) and values_equal(a.tail, b.tail)
    if isinstance(a, ConceptId) and isinstance(b, ConceptId):
        return a == b
    return False


def format_value(v):
    """Render a runtime value; proper lists print like source lists."""
    if v is None:
        return "#<unspecified>"
    if isinstance(v, bool):
        return "#t" if v else "#f"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + escape_text(v) + '"'
    if isinstance(v, Symbol):
        return v.name
    if v is NIL:
        return "()"
    if isinstance(v, Pair):
        parts = []
        node = v
        while isinstance(node, Pair):
            parts.append(format_value(node.head))
            node = node.tail
        if node is NIL:
            return "(" + " ".join(parts) + ")"
        return "(" + " ".join(parts) + " . " + format_value(node) + ")"
    if isinstance(v, Closure):
        return "#<closure>"
    if isinstance(v, Primitive):
        return f"#<primitive {v.name}>"
    if isinstance(v, ConceptId):
        return f"#<concept {v.name}>"
    return repr(v)
