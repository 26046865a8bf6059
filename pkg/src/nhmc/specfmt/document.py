"""``.nhmc.json`` chain documents.

A document is a JSON object::

    {
      "description": "optional text",
      "states": ["1", "2"],
      "initial": ["0.5", "0.5"],                  # expressions over n
      "kernels": {"Q": [["1 - 1/n", "1/n"],       # expressions over i, n
                        ["1/n", "1 - 1/n"]]},
      "schedule": [{"when": "i < 3", "use": "Q"},  # first match wins
                   {"when": "true", "use": "Q"}],  # catch-all is mandatory
      "functions": "indicator:1"                   # or S expressions over i, n
    }

``i`` is the 1-based step index: kernel rules are evaluated for
``i = 1 .. n-1`` and functions for ``i = 1 .. n``.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..chain import ArraySchemeFamily, ChainSpec
from ..kernels import ROW_TOL
from .errors import SpecError
from .expr import (Bool, EvalError, Expr, compile_expression, free_variables,
                   parse_expression, to_source)

FIELDS = ("description", "states", "initial", "kernels", "schedule", "functions")
REQUIRED = ("states", "initial", "kernels", "schedule", "functions")
INDICATOR = "indicator:"


@dataclass(frozen=True)
class Rule:
    when: Expr
    use: str


@dataclass(frozen=True)
class ChainDocument:
    states: tuple
    initial: tuple
    kernels: dict
    schedule: tuple
    functions: Union[str, tuple]
    description: str = ""

    def __hash__(self):
        return hash((self.states, self.initial, self.schedule, self.functions))


_STRING = re.compile(r'"(?:[^"\\]|\\.)*"')


def _string_positions(text, data):
    """Map JSON paths of string values to their offset in ``text``.

    Strings appear in the text in the same order as a depth-first walk of the
    decoded object (keys before values), so the two sequences are zipped.
    """
    offsets = [m.start() for m in _STRING.finditer(text)]
    out = {}
    k = 0

    def walk(node, path):
        nonlocal k
        if isinstance(node, dict):
            for key, value in node.items():
                k += 1
                walk(value, path + (key,))
        elif isinstance(node, list):
            for j, value in enumerate(node):
                walk(value, path + (j,))
        elif isinstance(node, str):
            if k < len(offsets):
                out[path] = offsets[k]
            k += 1

    walk(data, ())
    return out if k == len(offsets) else {}


def _path_str(path):
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else p)
    return s


class _Reader:
    def __init__(self, text, data):
        self.text = text
        self.positions = _string_positions(text, data)

    def locate(self, path):
        off = self.positions.get(path)
        if off is None:
            return None, None
        line = self.text.count("\n", 0, off) + 1
        col = off - (self.text.rfind("\n", 0, off) + 1) + 1
        return line, col

    def fail(self, kind, message, path):
        line, col = self.locate(path)
        raise SpecError(kind, message, line=line, column=col, where=_path_str(path) or None)

    def expr(self, source, path, variables):
        try:
            return parse_expression(source, variables)
        except SpecError as err:
            line, col = self.locate(path)
            # expression columns are 1-based, so adding the quote's column lands on the character
            raise err.located(where=_path_str(path), line=line,
                              column_offset=col if col is not None else None) from None


def parse_document(text: str) -> ChainDocument:
    """Parse and validate a chain document.

    Raises
    ------
    SpecError
        With ``kind`` naming the problem: ``syntax`` (bad JSON or a bad
        expression), ``structure``, ``undefined_kernel``,
        ``non_exhaustive_schedule``, ``unknown_function``, ``arity``,
        ``unknown_identifier`` or ``unknown_state``.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError("syntax", err.msg, line=err.lineno, column=err.colno,
                        expected=frozenset({"JSON value"})) from None
    r = _Reader(text, data)
    if not isinstance(data, dict):
        r.fail("structure", "document must be a JSON object", ())
    for key in data:
        if key not in FIELDS:
            r.fail("structure", f"unknown field {key!r}", ())
    for key in REQUIRED:
        if key not in data:
            r.fail("structure", f"missing field {key!r}", ())

    description = data.get("description", "")
    if not isinstance(description, str):
        r.fail("structure", "description must be a string", ("description",))

    states = data["states"]
    if not isinstance(states, list) or not states or not all(isinstance(s, str) for s in states):
        r.fail("structure", "states must be a non-empty list of strings", ("states",))
    if len(set(states)) != len(states):
        r.fail("structure", "state labels must be unique", ("states",))
    S = len(states)

    init = data["initial"]
    if not isinstance(init, list) or len(init) != S:
        r.fail("structure", f"initial must list {S} expressions", ("initial",))
    initial = tuple(r.expr(s, ("initial", j), ("n",)) for j, s in enumerate(init))

    kdefs = data["kernels"]
    if not isinstance(kdefs, dict) or not kdefs:
        r.fail("structure", "kernels must be a non-empty object", ("kernels",))
    kernels = {}
    for name, rows in kdefs.items():
        path = ("kernels", name)
        if not isinstance(rows, list) or len(rows) != S or not all(
                isinstance(row, list) and len(row) == S for row in rows):
            r.fail("structure", f"kernel {name!r} must be a {S}x{S} matrix", path)
        kernels[name] = tuple(
            tuple(r.expr(e, path + (x, y), ("i", "n")) for y, e in enumerate(row))
            for x, row in enumerate(rows)
        )

    sched = data["schedule"]
    if not isinstance(sched, list):
        r.fail("structure", "schedule must be a list of rules", ("schedule",))
    rules = []
    for j, rule in enumerate(sched):
        path = ("schedule", j)
        if not isinstance(rule, dict) or set(rule) != {"when", "use"}:
            r.fail("structure", "a rule is an object with exactly 'when' and 'use'", path)
        if not isinstance(rule["use"], str):
            r.fail("structure", "'use' must name a kernel", path + ("use",))
        if rule["use"] not in kernels:
            r.fail("undefined_kernel", f"rule uses undefined kernel {rule['use']!r}", path + ("use",))
        rules.append(Rule(r.expr(rule["when"], path + ("when",), ("i", "n")), rule["use"]))
    if not rules or rules[-1].when != Bool(True):
        r.fail("non_exhaustive_schedule", "the last schedule rule must be the catch-all 'when': 'true'",
               ("schedule",))

    fdef = data["functions"]
    if isinstance(fdef, str):
        if not fdef.startswith(INDICATOR):
            r.fail("structure", f"unknown function preset {fdef!r}", ("functions",))
        if fdef[len(INDICATOR):] not in states:
            r.fail("unknown_state", f"indicator of unknown state {fdef[len(INDICATOR):]!r}", ("functions",))
        functions = fdef
    elif isinstance(fdef, list) and len(fdef) == S:
        functions = tuple(r.expr(e, ("functions", j), ("i", "n")) for j, e in enumerate(fdef))
    else:
        r.fail("structure", f"functions must be a preset string or {S} expressions", ("functions",))

    return ChainDocument(tuple(states), initial, kernels, tuple(rules), functions, description)


def load_document(path) -> ChainDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())


def document_to_dict(doc: ChainDocument) -> dict:
    out = {}
    if doc.description:
        out["description"] = doc.description
    out["states"] = list(doc.states)
    out["initial"] = [to_source(e) for e in doc.initial]
    out["kernels"] = {name: [[to_source(e) for e in row] for row in rows] for name, rows in doc.kernels.items()}
    out["schedule"] = [{"when": to_source(r.when), "use": r.use} for r in doc.schedule]
    out["functions"] = doc.functions if isinstance(doc.functions, str) else [to_source(e) for e in doc.functions]
    return out


def dump_document(doc: ChainDocument) -> str:
    return json.dumps(document_to_dict(doc), indent=2) + "\n"


def _evaluator(e, where):
    f = compile_expression(e)

    def call(i, n):
        try:
            return f(i, n)
        except EvalError as err:
            raise SpecError(err.kind, str(err), where=where, i=i, n=n) from None
        except (OverflowError, ValueError) as err:
            raise SpecError("domain", str(err), where=where, i=i, n=n) from None

    return call


def _number(v, where, i, n):
    if isinstance(v, bool):
        raise SpecError("type", "expected a number, got a boolean", where=where, i=i, n=n)
    return float(v)


def instantiate(doc: ChainDocument, n: int) -> ChainSpec:
    """Evaluate the document into a chain of length ``n`` (at least 2).

    Kernel rows are checked against the row-stochastic invariants; a row
    more than 1e-12 away from summing to one is an error naming ``i``.
    """
    if n < 2:
        raise ValueError(f"chain length must be at least 2, got {n}")
    S = len(doc.states)
    initial = [_number(_evaluator(e, f"initial[{j}]")(None, n), f"initial[{j}]", None, n)
               for j, e in enumerate(doc.initial)]

    rules = [(_evaluator(r.when, f"schedule[{j}].when"), r.use) for j, r in enumerate(doc.schedule)]
    entry_fns = {
        name: [[_evaluator(e, f"kernels.{name}[{x}][{y}]") for y, e in enumerate(row)] for x, row in enumerate(rows)]
        for name, rows in doc.kernels.items()
    }
    depends_on_i = {
        name: any("i" in free_variables(e) for row in rows for e in row) for name, rows in doc.kernels.items()
    }
    cache = {}

    def kernel(name, i):
        key = (name, i if depends_on_i[name] else None)
        if key not in cache:
            M = np.empty((S, S))
            for x in range(S):
                for y in range(S):
                    M[x, y] = _number(entry_fns[name][x][y](i, n), f"kernels.{name}[{x}][{y}]", i, n)
                if np.any(M[x] < -ROW_TOL):
                    raise SpecError("negative_entry", f"kernel {name!r} row {x} has a negative entry: {M[x].tolist()}",
                                    where=f"kernels.{name}[{x}]", i=i, n=n)
                if abs(M[x].sum() - 1.0) > ROW_TOL:
                    raise SpecError("row_sum", f"kernel {name!r} row {x} sums to {M[x].sum()!r}: {M[x].tolist()}",
                                    where=f"kernels.{name}[{x}]", i=i, n=n)
            cache[key] = M
        return cache[key]

    K = np.empty((n - 1, S, S))
    for i in range(1, n):
        for j, (when, use) in enumerate(rules):
            hit = when(i, n)
            if not isinstance(hit, bool):
                raise SpecError("type", "schedule condition must be boolean", where=f"schedule[{j}].when", i=i, n=n)
            if hit:
                K[i - 1] = kernel(use, i)
                break

    F = np.zeros((n, S))
    if isinstance(doc.functions, str):
        F[:, doc.states.index(doc.functions[len(INDICATOR):])] = 1.0
    else:
        for x, e in enumerate(doc.functions):
            where = f"functions[{x}]"
            fn = _evaluator(e, where)
            if "i" in free_variables(e):
                F[:, x] = [_number(fn(i, n), where, i, n) for i in range(1, n + 1)]
            else:
                F[:, x] = _number(fn(None, n), where, None, n)
    desc = doc.description or "chain document"
    return ChainSpec(doc.states, initial, K, F, description=f"{desc} (n={n})")


def document_family(doc: ChainDocument) -> ArraySchemeFamily:
    return ArraySchemeFamily(lambda n: instantiate(doc, n), doc.description or "chain document")


def dobrushin_document(exponent: float) -> ChainDocument:
    """Document reproducing :func:`nhmc.chain.build_dobrushin_example` with
    ``a_n = min(1/2, n^-exponent)``."""
    if not 0.0 < exponent < 1.0:
        raise ValueError(f"exponent must lie in (0, 1), got {exponent!r}")
    a = f"min(0.5, pow(n, -{float(exponent)!r}))"
    text = json.dumps({
        "description": f"Bernstein-Dobrushin block chain, a_n = min(1/2, n^-{float(exponent)!r})",
        "states": ["1", "2"],
        "initial": ["0.5", "0.5"],
        "kernels": {
            "Qa": [[f"1 - {a}", a], [a, f"1 - {a}"]],
            "Qhalf": [["0.5", "0.5"], ["0.5", "0.5"]],
            "Qb": [[a, f"1 - {a}"], [f"1 - {a}", a]],
        },
        "schedule": [
            {"when": f"i < floor(1 / {a})", "use": "Qa"},
            {"when": f"mod(i, floor(1 / {a})) = 0", "use": "Qhalf"},
            {"when": "true", "use": "Qb"},
        ],
        "functions": "indicator:1",
    })
    return parse_document(text)


SUFFIX = ".nhmc.json"


def shipped_documents() -> dict:
    """Names and paths of the documents bundled with the package."""
    from importlib.resources import files

    root = files("nhmc") / "data"
    return {p.name[: -len(SUFFIX)]: p for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(SUFFIX)}


def read_document_source(name_or_path) -> str:
    """Text of a document given a file path or the name of a bundled document."""
    if not os.path.exists(name_or_path):
        shipped = shipped_documents()
        if name_or_path in shipped:
            return shipped[name_or_path].read_text(encoding="utf-8")
    with open(name_or_path, encoding="utf-8") as fh:
        return fh.read()
