"""Rejection queries: blind conditional sampling with acceptance statistics.

A query re-evaluates its definitions from scratch on every attempt (fresh
randomness each time), checks the condition, and returns the query value of
the first accepted attempt; the returned value is distributed as the prior
conditioned on the condition.  Batch runs give every sample index its own
deterministic rng stream derived from (seed, index), so parallel and serial
execution produce identical multisets of samples.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from .errors import EvalError, ExhaustionError, ProblispError
from .evaluator import DEFAULT_MAX_ATTEMPTS, EvalContext, evaluate
from .rng import derive_rng
from .sexpr import SExpr, SList, Symbol
from .values import Env


@dataclass(frozen=True)
class QuerySpec:
    """Definitions, query expression and condition expression of one query."""

    definitions: tuple
    query: SExpr
    condition: SExpr

    @classmethod
    def from_form(cls, form):
        """Split a (rejection-query ...) form: the last two body forms are the
        query and condition, everything before them is a definition."""
        if form.__class__ is not SList or len(form.items) < 3:
            raise EvalError(
                "rejection-query expects (rejection-query defs... query condition)",
                getattr(form, "loc", None))
        head = form.items[0]
        if head.__class__ is not Symbol or head.name != "rejection-query":
            raise EvalError("not a rejection-query form", form.loc)
        body = form.items[1:]
        return cls(tuple(body[:-2]), body[-2], body[-1])


@dataclass(frozen=True)
class SampleReport:
    samples: tuple
    total_attempts: int
    acceptance_rate: float
    wall_time: float


def _attempt_loop(spec, base_env, rng, max_attempts, ctx):
    for attempt in range(1, max_attempts + 1):
        env = Env(base_env)
        try:
            for d in spec.definitions:
                evaluate(d, env, ctx)
            cond = evaluate(spec.condition, env, ctx)
        except ProblispError as err:
            err.message = f"{err.message} (attempt {attempt})"
            err.args = (err.message,)
            raise
        if cond.__class__ is not bool:
            raise EvalError("query condition must evaluate to a boolean "
                            f"(attempt {attempt})", spec.condition.loc)
        if cond:
            return evaluate(spec.query, env, ctx), attempt
    raise ExhaustionError(
        f"no accepted sample after {max_attempts} attempts", max_attempts)


def rejection_query(spec, base_env, rng, max_attempts=DEFAULT_MAX_ATTEMPTS, ctx=None):
    """Sample once from the conditioned distribution, or raise ExhaustionError."""
    if max_attempts < 1:
        raise EvalError("max-attempts must be at least 1")
    if ctx is None:
        ctx = EvalContext(rng=rng, global_env=base_env)
    else:
        ctx = replace(ctx, rng=rng, session=None)
    value, _ = _attempt_loop(spec, base_env, rng, max_attempts, ctx)
    return value


def run_samples(spec, n, base_env, seed, max_attempts=DEFAULT_MAX_ATTEMPTS, ctx=None):
    """Draw n accepted samples, one independent rng stream per sample index."""
    if n < 1:
        raise EvalError("sample count must be at least 1")
    path = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    start = time.perf_counter()
    values = []
    attempts_total = 0
    for i in range(n):
        rng = derive_rng(*path, i)
        if ctx is None:
            inner = EvalContext(rng=rng, global_env=base_env)
        else:
            inner = replace(ctx, rng=rng, session=None)
        try:
            value, attempts = _attempt_loop(spec, base_env, rng, max_attempts, inner)
        except ExhaustionError as err:
            wall = time.perf_counter() - start
            made = attempts_total + err.attempts
            partial = SampleReport(tuple(values), made,
                                   len(values) / made if made else 0.0, wall)
            raise ExhaustionError(f"sample {i}: {err.message}", err.attempts,
                                  partial) from None
        values.append(value)
        attempts_total += attempts
    wall = time.perf_counter() - start
    return SampleReport(tuple(values), attempts_total, n / attempts_total, wall)
