"""Concept graph: named concepts, weighted is-a links, context overlays.

Mutation is single-writer and session-level; sampling reads an immutable
snapshot, so any number of concurrent samplers can share one snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConceptError
from .sexpr import SExpr, print_expr


@dataclass(frozen=True)
class ConceptId:
    """Opaque handle for a declared concept; names are unique per store."""

    name: str
    index: int


@dataclass(eq=False)
class IsALink:
    link_id: int
    source: object  # SExpr template or ConceptId
    target: ConceptId
    weight: float


def _describe_source(source):
    if isinstance(source, ConceptId):
        return source.name
    return print_expr(source)


class ConceptStore:
    def __init__(self):
        self._concepts = {}           # name -> ConceptId, insertion ordered
        self._by_target = {}          # ConceptId -> [IsALink], insertion ordered
        self._edges = {}              # concept-to-concept source -> {targets}
        self._contexts = {"default": {}}  # name -> {link_id: weight}
        self._active = "default"
        self._next_link = 0

    # -- concepts ----------------------------------------------------------

    def declare_concept(self, name, loc=None):
        if name in self._concepts:
            raise ConceptError(f"concept '{name}' is already declared", loc)
        cid = ConceptId(name, len(self._concepts))
        self._concepts[name] = cid
        self._by_target[cid] = []
        return cid

    def lookup(self, name):
        return self._concepts.get(name)

    def require(self, name, loc=None):
        cid = self._concepts.get(name)
        if cid is None:
            raise ConceptError(f"unknown concept '{name}'", loc)
        return cid

    def concept_names(self):
        return list(self._concepts)

    # -- links -------------------------------------------------------------

    def add_isa(self, source, target, weight=1.0, loc=None):
        """Register `source is-a target`.  Concept-to-concept cycles are
        rejected; expression sources may reference any declared concept,
        including the target itself."""
        if target not in self._by_target:
            raise ConceptError(f"unknown concept '{getattr(target, 'name', target)}'", loc)
        if isinstance(weight, bool) or not isinstance(weight, (int, float)) or weight <= 0:
            raise ConceptError(f"is-a weight must be a positive number, got {weight!r}", loc)
        for link in self._by_target[target]:
            if self._sources_equal(link.source, source):
                raise ConceptError(
                    f"duplicate is-a link {_describe_source(source)} -> {target.name}", loc)
        if isinstance(source, ConceptId):
            if source not in self._by_target:
                raise ConceptError(f"unknown concept '{source.name}'", loc)
            if source == target or self._reaches(target, source):
                raise ConceptError(
                    f"is-a link {source.name} -> {target.name} would create a concept cycle",
                    loc)
            self._edges.setdefault(source, set()).add(target)
        elif not isinstance(source, SExpr):
            raise ConceptError(f"is-a source must be an expression or concept, got {source!r}", loc)
        link = IsALink(self._next_link, source, target, float(weight))
        self._next_link += 1
        self._by_target[target].append(link)
        return link.link_id

    @staticmethod
    def _sources_equal(a, b):
        if isinstance(a, ConceptId) or isinstance(b, ConceptId):
            return a == b
        return a == b  # structural SExpr equality

    def _reaches(self, start, goal):
        seen = set()
        stack = [start]
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self._edges.get(node, ()))
        return False

    def find_link(self, source, target):
        for link in self._by_target.get(target, ()):
            if self._sources_equal(link.source, source):
                return link
        return None

    # -- contexts ----------------------------------------------------------

    def define_context(self, name, overrides, loc=None):
        """Create a named overlay mapping link ids to replacement weights."""
        if name in self._contexts:
            raise ConceptError(f"context '{name}' is already defined", loc)
        table = {}
        valid = {l.link_id for links in self._by_target.values() for l in links}
        for link_id, weight in overrides.items():
            if link_id not in valid:
                raise ConceptError(f"unknown link id {link_id} in context '{name}'", loc)
            if isinstance(weight, bool) or not isinstance(weight, (int, float)) or weight <= 0:
                raise ConceptError(
                    f"context weight must be a positive number, got {weight!r}", loc)
            table[link_id] = float(weight)
        self._contexts[name] = table

    def set_context(self, name, loc=None):
        if name not in self._contexts:
            raise ConceptError(f"unknown context '{name}'", loc)
        self._active = name

    @property
    def active_context(self):
        return self._active

    def context_names(self):
        return list(self._contexts)

    # -- reads -------------------------------------------------------------

    def instances_of(self, concept, context=None, loc=None):
        """All links targeting `concept` with context-resolved weights,
        in insertion order."""
        if concept not in self._by_target:
            raise ConceptError(f"unknown concept '{getattr(concept, 'name', concept)}'", loc)
        name = self._active if context is None else context
        if name not in self._contexts:
            raise ConceptError(f"unknown context '{name}'", loc)
        overlay = self._contexts[name]
        return [(link, overlay.get(link.link_id, link.weight))
                for link in self._by_target[concept]]

    def snapshot(self, context=None):
        name = self._active if context is None else context
        if name not in self._contexts:
            raise ConceptError(f"unknown context '{name}'")
        overlay = self._contexts[name]
        instances = {
            cid: tuple((link, overlay.get(link.link_id, link.weight)) for link in links)
            for cid, links in self._by_target.items()
        }
        return StoreSnapshot(dict(self._concepts), instances, name)


class StoreSnapshot:
    """Immutable view of a store under one context; safe to share."""

    __slots__ = ("_concepts", "_instances", "context")

    def __init__(self, concepts, instances, context):
        self._concepts = concepts
        self._instances = instances
        self.context = context

    def concept(self, name):
        return self._concepts.get(name)

    def concept_names(self):
        return list(self._concepts)

    def instances(self, concept):
        rows = self._instances.get(concept)
        if rows is None:
            raise ConceptError(f"unknown concept '{getattr(concept, 'name', concept)}'")
        return rows
