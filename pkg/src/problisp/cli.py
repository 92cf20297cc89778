"""Command-line entry point: script runner and REPL.

Exit codes: 0 success, 1 language error, 2 exhaustion or zero-probability
condition, 3 usage error.  With ``--output records`` every sample becomes one
JSON line and each file ends with a summary record (config echo, acceptance
stats, optimizer report); identical inputs, flags and seed produce
byte-identical records output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (BudgetError, ExhaustionError, LexError, ParseError,
                     ProblispError, ZeroProbabilityError)
from .evaluator import DEFAULT_MAX_ATTEMPTS
from .sexpr import parse, print_expr
from .session import Session
from .values import format_value, is_number


@dataclass
class SessionConfig:
    seed: int = 0
    samples: int = 1
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    rewrite: bool = True
    preludes: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    context: str | None = None
    output: str = "plain"
    stats: bool = False
    repl: bool = False
    files: list = field(default_factory=list)
    load_order: list | None = None  # [(kind, path)] in flag order; None = preludes then rules


def prelude_path():
    """Filesystem path of the shipped knowledge prelude."""
    return str(resources.files("problisp").joinpath("data/prelude.lisp"))


def rules_path():
    """Filesystem path of the shipped default rewrite rules."""
    return str(resources.files("problisp").joinpath("data/rules.lisp"))


def _resolve(path, std):
    return std() if path == "std" else path


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(3)


class _OrderedLoad(argparse.Action):
    """Record --prelude/--rules occurrences in one list, preserving flag order."""

    def __call__(self, parser, namespace, value, option_string=None):
        getattr(namespace, self.dest).append(value)
        if not hasattr(namespace, "load_order"):
            namespace.load_order = []
        namespace.load_order.append((self.dest, value))


def _build_parser():
    p = _ArgumentParser(
        prog="problisp",
        description="Probabilistic mini-Lisp with concept knowledge and "
                    "rewrite-optimized rejection queries.")
    p.add_argument("files", nargs="*", help="program files to run in order")
    p.add_argument("--seed", type=int, default=0, help="64-bit random seed (default 0)")
    p.add_argument("--samples", type=int, default=1,
                   help="samples per top-level rejection-query (default 1)")
    p.add_argument("--max-attempts", type=int, default=DEFAULT_MAX_ATTEMPTS,
                   help="rejection attempts per sample (default 10^6)")
    p.add_argument("--no-rewrite", action="store_true",
                   help="disable condition propagation / query rewriting")
    p.add_argument("--prelude", action=_OrderedLoad, default=[], metavar="PATH",
                   help="knowledge file to load first ('std' = shipped prelude); repeatable")
    p.add_argument("--rules", action=_OrderedLoad, default=[], metavar="PATH",
                   help="rewrite-rule file ('std' = shipped rules); repeatable. "
                        "Default: shipped rules when rewriting is enabled")
    p.add_argument("--context", default=None, metavar="NAME",
                   help="activate a named weight context after loading")
    p.add_argument("--stats", action="store_true",
                   help="report acceptance stats, optimizer chain and a histogram")
    p.add_argument("--output", choices=["plain", "records"], default="plain",
                   help="plain text or newline-delimited JSON records")
    p.add_argument("--repl", action="store_true",
                   help="enter the REPL (after running any files)")
    return p


def _parse_config(argv):
    ns = _build_parser().parse_args(argv)
    if ns.samples < 1 or ns.max_attempts < 1:
        print("problisp: error: --samples and --max-attempts must be >= 1",
              file=sys.stderr)
        raise SystemExit(3)
    config = SessionConfig(
        seed=ns.seed, samples=ns.samples, max_attempts=ns.max_attempts,
        rewrite=not ns.no_rewrite, preludes=ns.prelude, rules=ns.rules,
        context=ns.context, output=ns.output, stats=ns.stats, repl=ns.repl,
        files=ns.files)
    config.load_order = getattr(ns, "load_order", [])
    return config


def build_session(config):
    """Session with preludes and rule files loaded in flag order, context
    activated; the shipped rules load by default when rewriting is on."""
    session = Session(seed=config.seed, samples=config.samples,
                      max_attempts=config.max_attempts, rewrite=config.rewrite)
    order = config.load_order
    if order is None:
        order = ([("prelude", p) for p in config.preludes]
                 + [("rules", p) for p in config.rules])
    rule_files = []
    for kind, path in order:
        resolved = _resolve(path, prelude_path if kind == "prelude" else rules_path)
        if kind == "rules":
            rule_files.append(resolved)
        session.load_file(resolved)
    if not rule_files and config.rewrite:
        rule_files.append(rules_path())
        session.load_file(rule_files[0])
    if config.context is not None:
        session.store.set_context(config.context)
    return session, rule_files


# -- output ------------------------------------------------------------------


def histogram(values, bins=10):
    """Text table of value counts; reals get equal-width bins over the
    observed range, everything else is counted per distinct printed value."""
    if not values:
        raise ValueError("histogram requires at least one value")
    n = len(values)
    all_numeric = all(is_number(v) for v in values)
    if all_numeric and any(isinstance(v, float) for v in values):
        lo, hi = min(values), max(values)
        if lo == hi:
            return f"[{lo:g}, {hi:g}] : {n} (100.0%)"
        width = (hi - lo) / bins
        counts = [0] * bins
        for v in values:
            counts[min(int((v - lo) / width), bins - 1)] += 1
        lines = []
        for i, c in enumerate(counts):
            left, right = lo + i * width, lo + (i + 1) * width
            bracket = "]" if i == bins - 1 else ")"
            lines.append(f"[{left:g}, {right:g}{bracket} : {c} ({100 * c / n:.1f}%)")
        return "\n".join(lines)
    rows = {}
    order = {}
    for v in values:
        key = format_value(v)
        rows[key] = rows.get(key, 0) + 1
        if key not in order:
            order[key] = v
    if all_numeric:
        keys = sorted(rows, key=lambda k: order[k])
    else:
        keys = sorted(rows)
    return "\n".join(f"{k} : {rows[k]} ({100 * rows[k] / n:.1f}%)" for k in keys)


def _optimizer_echo(outcome, rewrite_enabled):
    info = {"enabled": rewrite_enabled, "fired": False, "target": None,
            "chain": [], "definition": None}
    if outcome is not None and outcome.fired:
        info.update(fired=True, target=outcome.target,
                    chain=[print_expr(c) for c in outcome.chain],
                    definition=print_expr(outcome.definition))
    return info


def _query_summary(result, config):
    report = result.report
    return {
        "query": result.ordinal,
        "samples": len(report.samples),
        "attempts": report.total_attempts,
        "acceptance_rate": report.acceptance_rate,
        "optimizer": _optimizer_echo(result.optimize, config.rewrite),
    }


def _config_echo(config, path, rule_files):
    return {
        "seed": config.seed, "samples": config.samples,
        "max_attempts": config.max_attempts, "rewrite": config.rewrite,
        "preludes": list(config.preludes), "rules": list(rule_files),
        "context": config.context, "output": config.output,
        "stats": config.stats, "file": str(path),
    }


def _record(out, obj):
    out.write(json.dumps(obj, sort_keys=True) + "\n")


def _print_query_plain(result, config, out):
    report = result.report
    for v in report.samples:
        out.write(format_value(v) + "\n")
    if config.stats:
        out.write(f";; query {result.ordinal}: samples {len(report.samples)}, "
                  f"attempts {report.total_attempts}, "
                  f"acceptance {report.acceptance_rate:.6g}\n")
        opt = result.optimize
        if opt is not None and opt.fired:
            chain = " -> ".join(print_expr(c) for c in opt.chain)
            out.write(f";; rewrite[{opt.target}]: {chain}\n")
            out.write(f";; rewrite[{opt.target}]: definition "
                      f"{print_expr(opt.definition)}\n")
        elif config.rewrite:
            out.write(";; rewrite: no rewrite applied\n")
        out.write(";; histogram:\n")
        for line in histogram(list(report.samples)).splitlines():
            out.write(f";;   {line}\n")


def run_file(path, session, config, out=None):
    """Run one program file in the session; returns a process exit status."""
    out = out if out is not None else sys.stdout
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        print(f"problisp: cannot read '{path}': {err.strerror}", file=sys.stderr)
        return 3
    try:
        forms = parse(text)
        summaries = []
        for idx, form in enumerate(forms):
            result = session.eval_form(form)
            if result.kind == "query":
                if config.output == "records":
                    for i, v in enumerate(result.report.samples):
                        _record(out, {"type": "sample", "query": result.ordinal,
                                      "index": i, "value": format_value(v)})
                else:
                    _print_query_plain(result, config, out)
                summaries.append(_query_summary(result, config))
            elif result.kind == "value":
                if config.output == "records":
                    _record(out, {"type": "value", "form": idx,
                                  "value": format_value(result.value)})
                else:
                    out.write(format_value(result.value) + "\n")
        if config.output == "records":
            _record(out, {"type": "summary",
                          "config": _config_echo(config, path, config.rules),
                          "queries": summaries})
    except (ExhaustionError, ZeroProbabilityError, BudgetError) as err:
        if err.filename is None:
            err.filename = str(path)
        print(f"problisp: {err}", file=sys.stderr)
        return 2
    except ProblispError as err:
        if err.filename is None:
            err.filename = str(path)
        print(f"problisp: {err}", file=sys.stderr)
        return 1
    return 0


# -- repl ----------------------------------------------------------------------


_REPL_HELP = """\
:help            show this help
:stats           statistics of the last rejection query
:concepts        declared concepts and links with effective weights
:rules           loaded rewrite rules
:context NAME    activate a weight context
:seed N          reseed the session (replays identically)
"""


def _meta_command(line, session, config, out):
    parts = line.split()
    cmd, args = parts[0], parts[1:]
    if cmd == ":help":
        out.write(_REPL_HELP)
    elif cmd == ":stats":
        last = session.last_query
        if last is None:
            out.write("no query has run yet\n")
            return
        report = last.report
        out.write(f"samples {len(report.samples)}, attempts {report.total_attempts}, "
                  f"acceptance {report.acceptance_rate:.6g}\n")
        opt = last.optimize
        if opt is not None and opt.fired:
            out.write("rewrite: " + " -> ".join(print_expr(c) for c in opt.chain) + "\n")
    elif cmd == ":concepts":
        store = session.store
        names = store.concept_names()
        if not names:
            out.write("no concepts declared\n")
        for name in names:
            cid = store.lookup(name)
            rows = store.instances_of(cid)
            out.write(f"{name} ({len(rows)} links)\n")
            for link, weight in rows:
                src = (link.source.name if hasattr(link.source, "index")
                       else print_expr(link.source))
                out.write(f"  {src} -> {name}  w={weight:g}\n")
    elif cmd == ":rules":
        if not session.rules:
            out.write("no rules loaded\n")
        for rule in session.rules:
            arrow = "<=>" if rule.kind == "equivalence" else "=>"
            out.write(f"{rule.name}: {print_expr(rule.lhs)} {arrow} "
                      f"{print_expr(rule.rhs)}\n")
    elif cmd == ":context" and len(args) == 1:
        try:
            session.store.set_context(args[0])
            out.write(f"context: {args[0]}\n")
        except ProblispError as err:
            out.write(f"error: {err}\n")
    elif cmd == ":seed" and len(args) == 1:
        try:
            session.reset_seed(int(args[0]))
            out.write(f"seed: {session.seed}\n")
        except ValueError:
            out.write("error: :seed expects an integer\n")
    else:
        out.write(f"unknown command '{line.strip()}' (try :help)\n")


def repl(session, config, stdin=None, out=None):
    """Read-eval-print over the session; errors return to the prompt."""
    stdin = stdin if stdin is not None else sys.stdin
    out = out if out is not None else sys.stdout
    tty = stdin.isatty()
    prompt, cont = "problisp> ", "......... "
    buffer = ""
    while True:
        if tty:
            out.write(cont if buffer else prompt)
            out.flush()
        line = stdin.readline()
        if not line:
            if tty:
                out.write("\n")
            return 0
        if not buffer and line.strip().startswith(":"):
            _meta_command(line.strip(), session, config, out)
            continue
        buffer = buffer + line
        if not buffer.strip():
            buffer = ""
            continue
        try:
            forms = parse(buffer)
        except ParseError as err:
            if err.incomplete:
                continue
            out.write(f"error: {err}\n")
            buffer = ""
            continue
        except LexError as err:
            out.write(f"error: {err}\n")
            buffer = ""
            continue
        buffer = ""
        for form in forms:
            try:
                result = session.eval_form(form)
            except ProblispError as err:
                out.write(f"error: {err}\n")
                continue
            if result.kind == "query":
                _print_query_plain(result, config, out)
            elif result.kind == "value":
                out.write(format_value(result.value) + "\n")


def main(argv=None):
    config = _parse_config(argv if argv is not None else sys.argv[1:])
    try:
        session, rule_files = build_session(config)
        config.rules = rule_files
    except (ExhaustionError, ZeroProbabilityError, BudgetError) as err:
        print(f"problisp: {err}", file=sys.stderr)
        return 2
    except ProblispError as err:
        print(f"problisp: {err}", file=sys.stderr)
        return 1
    for path in config.files:
        status = run_file(path, session, config)
        if status != 0:
            return status
    if config.repl or not config.files:
        return repl(session, config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
