"""Command-line interface: ``nhmc analyze | simulate | gate | example``.

Exit codes
----------
0 success, 1 usage or document error, 2 degenerate chain (``V(S_n) = 0``),
3 a bound check failed, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .chain import dobrushin_family
from .errors import DegenerateError, NHMCError, TooFewSamplesError
from .exact import DEFAULT_EXACT_CAP, OSC_BOUND_FACTOR, TREND_TOL, analyze, dobrushin_gate
from .kernels import CHECK_TOL, ROW_TOL
from .montecarlo import DEFAULT_SEED, GENERATOR, MIN_FIT_SAMPLES, atomic_write, fit_normal, sample
from .specfmt import (SpecError, document_family, dobrushin_document, dump_document, instantiate,
                      parse_document, read_document_source)

SCHEMA_VERSION = 1
DEFAULT_SAMPLES = 10000
DEFAULT_GATE_NS = (1000, 10000, 100000)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_BOUND = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for degenerate chains
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _count(text):
    """Integer argument that also accepts ``1e5`` style literals."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def _exponent(text):
    try:
        return float(text)
    except ValueError:
        pass
    if "/" in text:
        a, b = text.split("/", 1)
        try:
            return float(a) / float(b)
        except (ValueError, ZeroDivisionError):
            pass
    raise argparse.ArgumentTypeError(f"not an exponent: {text!r}")


def defaults_header() -> dict:
    return {
        "seed": DEFAULT_SEED,
        "samples": DEFAULT_SAMPLES,
        "exact_cap": DEFAULT_EXACT_CAP,
        "gate_n_list": list(DEFAULT_GATE_NS),
        "construction_tol": ROW_TOL,
        "check_tol": CHECK_TOL,
        "oscillation_bound_factor": OSC_BOUND_FACTOR,
        "trend_tol": TREND_TOL,
        "min_fit_samples": MIN_FIT_SAMPLES,
        "generator": GENERATOR,
    }


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _csv_text(rows) -> str:
    rows = [_flatten(r) for r in rows]
    fields = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def _text_block(d, indent=""):
    lines = []
    for k, v in d.items():
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.extend(_text_block(v, indent + "  "))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{indent}{k}:")
            for item in v:
                lines.extend(_text_block(item, indent + "  "))
                lines.append("")
        else:
            lines.append(f"{indent}{k}: {v}")
    return lines


def envelope(command, result) -> dict:
    return _clean({
        "schema_version": SCHEMA_VERSION,
        "tool": f"nhmc {__version__}",
        "command": command,
        "defaults": defaults_header(),
        "result": result,
    })


def emit(text: str, path=None):
    if path:
        try:
            atomic_write(path, text)
        except OSError as err:
            raise OSError(f"cannot write {path}: {err}") from err
    else:
        sys.stdout.write(text)


def render(env, fmt, rows=None, text=None) -> str:
    if fmt == "json":
        return json.dumps(env, indent=2) + "\n"
    if fmt == "csv":
        return _csv_text(rows if rows is not None else [env["result"]])
    header = [f"# {env['tool']} {env['command']} (schema {env['schema_version']})"]
    header += [f"# {k} = {v}" for k, v in env["defaults"].items()]
    body = text if text is not None else _text_block(env["result"])
    return "\n".join(header + body) + "\n"


def _load(path):
    try:
        source = read_document_source(path)
    except OSError as err:
        raise OSError(f"cannot read {path}: {err.strerror or err}") from err
    return parse_document(source)


def _ns(args, required=True):
    if args.n is not None and args.n_list:
        raise UsageError("give either --n or --n-list, not both")
    if args.n is not None:
        return [args.n]
    if args.n_list:
        return list(args.n_list)
    if required:
        raise UsageError("--n or --n-list is required")
    return []


def _analysis(spec, cap):
    rep = analyze(spec, cap)
    d = rep.to_dict()
    code = EXIT_OK
    if not (rep.lower_bound_ok and rep.z_bound_ok):
        code = EXIT_BOUND
    elif rep.degenerate:
        code = EXIT_DEGENERATE
    return d, code


def _worst(codes):
    for c in (EXIT_BOUND, EXIT_DEGENERATE):
        if c in codes:
            return c
    return EXIT_OK


def cmd_analyze(args) -> int:
    doc = _load(args.spec)
    results, codes = [], []
    for n in _ns(args):
        d, code = _analysis(instantiate(doc, n), args.exact_cap)
        results.append(d)
        codes.append(code)
    env = envelope("analyze", {"document": doc.description, "reports": results})
    emit(render(env, args.format, rows=env["result"]["reports"]), args.out)
    return _worst(codes)


def _fit_paths(out):
    stem = out[: -len(".csv")] if out.endswith(".csv") else out
    return out, stem + ".fit.json"


def _simulation(spec, samples, seed, out=None) -> dict:
    batch = sample(spec, samples, seed)
    result = {
        "n": spec.n,
        "samples": samples,
        "seed": seed,
        "generator": GENERATOR,
        "mean_Sn": batch.mean_Sn,
        "V_Sn": batch.V_Sn,
        "fit": None,
        "fit_error": None,
    }
    try:
        result["fit"] = fit_normal(batch).to_dict()
    except TooFewSamplesError as err:
        result["fit_error"] = str(err)
    if out:
        csv_path, fit_path = _fit_paths(out)
        batch.to_csv(csv_path)
        result["batch_csv"] = csv_path
        result["fit_json"] = fit_path
        atomic_write(fit_path, json.dumps(_clean(result), indent=2) + "\n")
    return result


def cmd_simulate(args) -> int:
    if args.n_list:
        raise UsageError("simulate takes a single --n")
    if args.n is None:
        raise UsageError("--n is required")
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    doc = _load(args.spec)
    result = _simulation(instantiate(doc, args.n), args.samples, args.seed, args.out)
    env = envelope("simulate", result)
    if args.out and args.format != "json":
        sys.stdout.write(render(env, args.format))
    elif args.out:
        sys.stdout.write(json.dumps(env, indent=2) + "\n")
    else:
        emit(render(env, args.format))
    return EXIT_OK


def _gate_text(reports):
    lines = []
    for rep in reports:
        lines.append(f"family: {rep['description']}")
        lines.append(f"  {'n':>8} {'alpha_n':>12} {'sum V':>14} {'C^2/(a^3 sum V)':>16} {'n^(1/3) a':>10}")
        for r in rep["rows"]:
            cv = "n/a" if r["condition_value"] is None else f"{r['condition_value']:.6g}"
            lines.append(f"  {r['n']:>8} {r['alpha_n']:>12.6g} {r['sum_variances']:>14.6g} {cv:>16}"
                         f" {r['corollary_value']:>10.4g}")
        lines.append(f"  verdict: {rep['verdict']}")
    return lines


def cmd_gate(args) -> int:
    ns = _ns(args, required=False) or list(DEFAULT_GATE_NS)
    families = []
    if args.spec:
        families.append(document_family(_load(args.spec)))
    for e in args.exponent or ([] if args.spec else [0.25, 1.0 / 3.0]):
        if not 0.0 < e < 1.0:
            raise UsageError(f"exponent must lie in (0, 1), got {e!r}")
        families.append(dobrushin_family(e))
    reports = []
    for fam in families:
        g = dobrushin_gate(fam, ns)
        reports.append({**g.to_dict(), "verdict": g.verdict()})
    env = envelope("gate", {"families": reports})
    rows = [{"family": rep["description"], **r} for rep in env["result"]["families"] for r in rep["rows"]]
    emit(render(env, args.format, rows=rows, text=_gate_text(env["result"]["families"])), args.out)
    return EXIT_OK


def cmd_example(args) -> int:
    if not args.exponent or len(args.exponent) != 1:
        raise UsageError("example takes exactly one --exponent")
    e = args.exponent[0]
    if not 0.0 < e < 1.0:
        raise UsageError(f"exponent must lie in (0, 1), got {e!r}")
    doc = dobrushin_document(e)
    text = dump_document(doc)
    if not args.run:
        emit(text, args.out)
        return EXIT_OK
    if args.out:
        emit(text, args.out)
    n = args.n if args.n is not None else 1000
    spec = instantiate(doc, n)
    analysis, code = _analysis(spec, args.exact_cap)
    result = {"document": json.loads(text), "analysis": analysis}
    try:
        result["simulation"] = _simulation(spec, args.samples, args.seed)
    except DegenerateError as err:
        result["simulation"] = {"error": str(err)}
        code = max(code, EXIT_DEGENERATE)
    env = envelope("example", result)
    sys.stdout.write(render(env, args.format))
    return code


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nhmc", description="Exact and Monte Carlo analysis of non-homogeneous Markov chain arrays.")
    p.add_argument("--version", action="version", version=f"nhmc {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spec_required=True):
        if spec_required is not None:
            sp.add_argument("spec", nargs=None if spec_required else "?",
                            help="path to a .nhmc.json document or the name of a bundled one")
        sp.add_argument("--n", type=_count, help="chain length")
        sp.add_argument("--n-list", type=_count, nargs="+", help="several chain lengths")
        sp.add_argument("--samples", type=_count, default=DEFAULT_SAMPLES)
        sp.add_argument("--seed", type=_count, default=DEFAULT_SEED)
        sp.add_argument("--out", help="output file (written atomically)")
        sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        sp.add_argument("--exact-cap", type=_count, default=DEFAULT_EXACT_CAP)

    a = sub.add_parser("analyze", help="exact diagnostics and bound checks")
    common(a)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="sample the normalized sum and fit N(0, 1)")
    common(s)
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gate", help="condition-value table over a list of n")
    common(g, spec_required=False)
    g.add_argument("--exponent", type=_exponent, action="append",
                   help="block-chain family with a_n = n^-e (repeatable)")
    g.set_defaults(func=cmd_gate)

    x = sub.add_parser("example", help="write the block-chain document, optionally run it")
    common(x, spec_required=None)
    x.add_argument("--exponent", type=_exponent, action="append", required=True)
    x.add_argument("--run", action="store_true", help="also analyze and simulate at --n")
    x.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as err:
        print(f"nhmc: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateError as err:
        print(f"nhmc: degenerate chain: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as err:
        print(f"nhmc: I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, NHMCError, ValueError) as err:
        print(f"nhmc: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
