"""Recursive generative instantiation of concepts.

Sampling a concept draws one of its incoming is-a links with probability
proportional to effective weight, then recurses on a concept source or
instantiates an expression source.  Every concept symbol inside a template
is replaced by an independent recursive draw; when a template mentions
several concepts, the order in which they are instantiated is itself chosen
uniformly at random (the draws are independent, so the order is invisible in
distribution but fixed for rng-trace reproducibility).

Budgets guard the recursion: exceeding the depth or node cap aborts the
sample with an error rather than silently truncating, since truncation would
bias the declared distribution.
"""

from __future__ import annotations

from dataclasses import replace

from .concepts import ConceptId
from .errors import BudgetError, ConceptError, EvalError
from .evaluator import (DEFAULT_MAX_DEPTH, DEFAULT_MAX_NODES, SPECIAL_FORMS,
                        EvalContext, evaluate)
from .sexpr import SList, Symbol
from .values import Env


class SampleBudget:
    __slots__ = ("max_depth", "max_nodes", "nodes_expanded")

    def __init__(self, max_depth=DEFAULT_MAX_DEPTH, max_nodes=DEFAULT_MAX_NODES):
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.nodes_expanded = 0

    def charge(self, depth):
        self.nodes_expanded += 1
        if depth > self.max_depth or self.nodes_expanded > self.max_nodes:
            raise BudgetError(
                "sampling did not terminate within budget "
                f"(depth {depth}/{self.max_depth}, nodes "
                f"{self.nodes_expanded}/{self.max_nodes})")


def _choose(rows, rng):
    if rng is None:
        raise EvalError("no random source available for sampling")
    total = 0.0
    for _, w in rows:
        total += w
    u = rng.random() * total
    acc = 0.0
    for link, w in rows:
        acc += w
        if u < acc:
            return link
    return rows[-1][0]


def sample_concept(snapshot, concept, rng, budget=None, *, env=None, ctx=None, depth=0):
    """Draw one instance of `concept` from its weighted is-a links."""
    if budget is None:
        budget = SampleBudget()
    budget.charge(depth)
    rows = snapshot.instances(concept)
    if not rows:
        raise ConceptError(f"no generative model for concept '{concept.name}'")
    # single-link concepts are deterministic pass-throughs: no choice draw
    link = rows[0][0] if len(rows) == 1 else _choose(rows, rng)
    source = link.source
    if isinstance(source, ConceptId):
        return sample_concept(snapshot, source, rng, budget, env=env, ctx=ctx,
                              depth=depth + 1)
    return instantiate_expression(snapshot, source, env, rng, budget, ctx=ctx, depth=depth)


def instantiate_expression(snapshot, expr, env, rng, budget=None, *, ctx=None, depth=0):
    """Replace each concept symbol in `expr` by an independent draw, then
    evaluate the result against the session globals."""
    if budget is None:
        budget = SampleBudget()
    if env is None:
        from .evaluator import standard_env

        env = standard_env()
    occurrences = []
    _occurrences(expr, snapshot, frozenset(), (), occurrences)
    frame = {}
    mapping = {}
    if occurrences:
        if len(occurrences) == 1:
            order = [0]
        else:
            order = [int(k) for k in rng.permutation(len(occurrences))]
        drawn = {}
        for k in order:
            path = occurrences[k]
            cid = snapshot.concept(_node_at(expr, path).name)
            drawn[path] = sample_concept(snapshot, cid, rng, budget, env=env,
                                         ctx=ctx, depth=depth + 1)
        for i, path in enumerate(occurrences):
            name = f"concept value {i}"  # space keeps it unwritable in source
            mapping[path] = Symbol(name)
            frame[name] = drawn[path]
    body = _replace_paths(expr, mapping, ())
    eval_env = Env(env, frame) if frame else env
    if ctx is not None:
        inner = replace(ctx, session=None, snapshot=snapshot, budget=budget,
                        sample_depth=depth + 1, global_env=env)
    else:
        inner = EvalContext(rng=rng, snapshot=snapshot, budget=budget,
                            sample_depth=depth + 1, global_env=env)
    return evaluate(body, eval_env, inner)


def _node_at(expr, path):
    node = expr
    for i in path:
        node = node.items[i]
    return node


def _replace_paths(expr, mapping, path):
    if path in mapping:
        return mapping[path]
    if expr.__class__ is SList and expr.items and mapping:
        return SList(tuple(_replace_paths(c, mapping, path + (i,))
                           for i, c in enumerate(expr.items)), expr.loc)
    return expr


def _occurrences(expr, snapshot, bound, path, out):
    """Paths of symbols naming declared concepts, honoring quote and binders."""
    t = expr.__class__
    if t is Symbol:
        if expr.name not in bound and snapshot.concept(expr.name) is not None:
            out.append(path)
        return
    if t is not SList or not expr.items:
        return
    items = expr.items
    head = items[0]
    if head.__class__ is Symbol:
        op = head.name
        if op == "quote":
            return
        if op == "lambda" and len(items) >= 3 and items[1].__class__ is SList:
            inner = bound | {p.name for p in items[1].items if p.__class__ is Symbol}
            for i in range(2, len(items)):
                _occurrences(items[i], snapshot, inner, path + (i,), out)
            return
        if op == "let" and len(items) >= 3 and items[1].__class__ is SList:
            names = set()
            for j, pair in enumerate(items[1].items):
                if pair.__class__ is SList and len(pair.items) == 2:
                    if pair.items[0].__class__ is Symbol:
                        names.add(pair.items[0].name)
                    _occurrences(pair.items[1], snapshot, bound,
                                 path + (1, j, 1), out)
            inner = bound | names
            for i in range(2, len(items)):
                _occurrences(items[i], snapshot, inner, path + (i,), out)
            return
        if op == "define" and len(items) == 3 and items[1].__class__ is Symbol:
            _occurrences(items[2], snapshot, bound, path + (2,), out)
            return
        if op in SPECIAL_FORMS:
            for i in range(1, len(items)):
                _occurrences(items[i], snapshot, bound, path + (i,), out)
            return
    for i, item in enumerate(items):
        _occurrences(item, snapshot, bound, path + (i,), out)
