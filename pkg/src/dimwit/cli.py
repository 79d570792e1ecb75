"""Command-line interface.

Exit codes: 0 success (or Inside), 3 Outside, 1 usage or validation error,
2 resource-guard refusal, 4 a table check missed its tolerance.
Global options may also be set through DIMWIT_SEED, DIMWIT_RESTARTS,
DIMWIT_TOL, DIMWIT_VERTEX_CAP and DIMWIT_FORMAT; flags win over the environment.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DimwitError, ResourceGuardError, SolverError, ValidationError
from .facets import classify_facets, enumerate_facets, is_facet
from .polytope import DEFAULT_VERTEX_CAP, classical_dimension, classical_max, membership
from .quantum import (BlochStrategy, QuantumStrategy, bloch_correlations,
                      correlations_from_quantum, seesaw_maximize)
from .scenario import (ClassicalStrategy, CorrelationMatrix, Scenario, apply_white_noise,
                       load_data_file, simulate_classical)
from .witness import (Witness, bound_LN, build_IN, evaluate, evaluate_J3,
                      parse_witness_spec)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GUARD = 2
EXIT_OUTSIDE = 3
EXIT_CHECK_FAILED = 4

EXACT_LABEL = "exact vertex enumeration"
SEESAW_LABEL = "see-saw lower bound"

GLOBAL_DEFAULTS = {"seed": 0, "restarts": 50, "tol": 1e-10, "vertex_cap": DEFAULT_VERTEX_CAP,
                   "format": "text"}
GLOBAL_TYPES = {"seed": int, "restarts": int, "tol": float, "vertex_cap": int, "format": str}

# bound-table targets and tolerances; None tolerance means exact equality
TABLE1 = {
    3: [("C_2", "classical", 2, 3, None), ("Q_2", "quantum", 2, 1 + 2 * math.sqrt(2), 1e-6),
        ("C_3", "classical", 3, 5, None), ("Q_3", "quantum", 3, 5, 1e-6),
        ("C_4", "classical", 4, 5, None)],
    4: [("C_2", "classical", 2, 5, None), ("Q_2", "quantum", 2, 6, 1e-6),
        ("C_3", "classical", 3, 7, None), ("Q_3", "quantum", 3, 7.9689, 1e-3),
        ("C_4", "classical", 4, 9, None)],
}


@dataclass
class RunReport:
    command: str
    inputs_digest: str
    results: dict
    timings: dict = field(default_factory=dict)
    tool_version: str = __version__

    def to_json(self) -> dict:
        return {"command": self.command, "inputs_digest": self.inputs_digest,
                "results": self.results, "timings": self.timings,
                "tool_version": self.tool_version}


def jsonable(obj):
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else str(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def digest(payload) -> str:
    text = json.dumps(jsonable(payload), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def _file_digest(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return "unreadable"


class _Timer:
    def __init__(self):
        self.timings = {}

    def stage(self, name):
        timer = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.timings[name] = round(time.perf_counter() - self.t0, 6)
        return _Stage()


def _fmt(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _witness_text(w: Witness) -> str:
    terms = []
    for x, row in enumerate(w.coeffs):
        for y, c in enumerate(row):
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            coef = "" if mag == 1 else f"{mag}*"
            terms.append(f"{sign} {coef}E{x + 1}{y + 1}")
    text = " ".join(terms) if terms else "0"
    return text[2:] if text.startswith("+ ") else text


# -- commands ----------------------------------------------------------------------------------

def cmd_member(input_path, d, opts):
    timer = _Timer()
    with timer.stage("load"):
        cm = load_data_file(input_path)
    with timer.stage("membership"):
        cert = membership(cm, d, opts["vertex_cap"])
    results = {"d": d, "verdict": cert.verdict, "distance": cert.distance}
    lines = [f"verdict: {cert.verdict} (d = {d})"]
    if cert.inside:
        results["convex_weights"] = [{"signs": v.signs.tolist(), "weight": wt}
                                     for v, wt in cert.convex_weights]
        lines.append(f"reproduced by a mixture of {len(cert.convex_weights)} deterministic strategies")
    else:
        w = cert.separating_witness
        results["witness"] = w.to_json(d=d, bound=cert.classical_max)
        results["achieved_value"] = float(cert.achieved_value)
        results["classical_max"] = cert.classical_max
        lines.append(f"separating witness: {_witness_text(w)} <= {_fmt(cert.classical_max)}")
        lines.append(f"value on data: {float(cert.achieved_value):.10g} > {_fmt(cert.classical_max)}")
        lines.append(f"classical dimension > {d} is certified")
    report = RunReport("member", digest({"command": "member", "d": d,
                                         "input": _file_digest(input_path)}),
                       jsonable(results), timer.timings)
    return (EXIT_OK if cert.inside else EXIT_OUTSIDE), report, lines


def cmd_dimension(input_path, opts):
    timer = _Timer()
    with timer.stage("load"):
        cm = load_data_file(input_path)
    with timer.stage("dimension"):
        d, certs = classical_dimension(cm, opts["vertex_cap"], return_certificates=True)
    rejected = []
    lines = [f"minimal classical dimension: {d}"]
    for c in certs[:-1]:
        rejected.append({"d": c.d, "witness": c.separating_witness.to_json(d=c.d, bound=c.classical_max),
                         "achieved_value": float(c.achieved_value), "classical_max": c.classical_max})
        lines.append(f"  d = {c.d} rejected by {_witness_text(c.separating_witness)} <= "
                     f"{_fmt(c.classical_max)} (value {float(c.achieved_value):.10g})")
    report = RunReport("dimension", digest({"command": "dimension", "input": _file_digest(input_path)}),
                       jsonable({"classical_dimension": d, "rejected": rejected}), timer.timings)
    return EXIT_OK, report, lines


def cmd_witness(spec, action, args, opts):
    timer = _Timer()
    w = parse_witness_spec(spec)
    inputs = {"command": "witness", "spec": spec, "action": action}
    results = {"witness": w.to_json(), "action": action}
    lines = [f"witness: {_witness_text(w)}"]
    code = EXIT_OK
    if action == "eval":
        cm = load_data_file(args.input)
        inputs["input"] = _file_digest(args.input)
        with timer.stage("eval"):
            value = evaluate(w, cm)
        results["value"] = value
        lines.append(f"value: {value:.10g}")
        if w.scenario.shape == (3, 2):
            results["J3"] = evaluate_J3(cm)
            lines.append(f"J_3 of the data: {results['J3']:.10g}")
    elif action == "classical-max":
        inputs["d"] = args.d
        with timer.stage("classical_max"):
            value = classical_max(w, args.d, opts["vertex_cap"])
        results.update({"d": args.d, "classical_max": value, "provenance": EXACT_LABEL})
        lines.append(f"C_{args.d} = {_fmt(value)}  [{EXACT_LABEL}]")
    elif action == "quantum-seesaw":
        inputs.update({"d": args.d, "seed": opts["seed"], "restarts": opts["restarts"],
                       "tol": opts["tol"]})
        with timer.stage("seesaw"):
            res = seesaw_maximize(w, args.d, restarts=opts["restarts"], tol=opts["tol"],
                                  seed=opts["seed"])
        results.update({"d": args.d, "value": res.value, "provenance": SEESAW_LABEL,
                        "best_restart": res.best_restart, "failed_restarts": len(res.failures),
                        "strategy": res.strategy.to_json()})
        lines.append(f"Q_{args.d} >= {res.value:.10f}  [{SEESAW_LABEL}, "
                     f"{opts['restarts']} restarts, seed {opts['seed']}]")
    elif action == "is-facet":
        inputs.update({"d": args.d, "bound": args.bound})
        bound = Fraction(args.bound) if args.bound is not None else None
        with timer.stage("is_facet"):
            check = is_facet(w, args.d, bound, opts["vertex_cap"])
        results.update({"d": args.d, "status": check.status, "max_value": check.max_value,
                        "affine_rank": check.affine_rank})
        lines.append(f"status at d = {args.d}: {check.status} (max over vertices "
                     f"{_fmt(check.max_value)}, saturating affine rank {check.affine_rank})")
        code = EXIT_OK if check else EXIT_CHECK_FAILED
    report = RunReport("witness", digest(inputs), jsonable(results), timer.timings)
    return code, report, lines


def cmd_facets(n, m, d, opts, max_entries=None, max_vertices=None):
    timer = _Timer()
    scenario = Scenario(n, m)
    kwargs = {}
    if max_entries is not None:
        kwargs["max_entries"] = max_entries
    if max_vertices is not None:
        kwargs["max_vertices"] = max_vertices
    with timer.stage("enumerate"):
        fe = enumerate_facets(scenario, d, **kwargs)
    with timer.stage("classify"):
        classes = classify_facets(fe.facets)
    label_of = {}
    for cls in classes:
        for f in cls.members:
            label_of[id(f)] = cls.label
    facets = []
    for f in fe.facets:
        obj = f.witness.to_json(d=d, bound=f.bound)
        obj["orbit_class"] = label_of[id(f)]
        obj["saturating_count"] = f.saturating_count
        facets.append(obj)
    summary = [{"orbit_class": c.label, "size": c.size, "bound": c.bound,
                "representative": c.representative.to_json(d=d, bound=c.bound)} for c in classes]
    lines = [f"{len(fe)} facets of the d = {d} polytope for N = {n}, m = {m}"
             + (" (relative to its affine hull)" if fe.relative else ""),
             f"{len(classes)} symmetry classes:"]
    for c in classes:
        lines.append(f"  [{c.label}] x{c.size}: {_witness_text(c.representative)} <= {_fmt(c.bound)}")
    if fe.relative:
        lines.append("affine hull equations:")
        for a, b in fe.equations:
            lines.append(f"  {_witness_text(Witness(scenario, tuple(map(tuple, a.reshape(n, m).tolist()))))} = {b}")
    results = {"scenario": scenario.to_json(), "d": d, "relative": fe.relative,
               "equations": [{"coeffs": a.reshape(n, m).tolist(), "value": b} for a, b in fe.equations],
               "facets": facets, "classes": summary}
    report = RunReport("facets", digest({"command": "facets", "N": n, "m": m, "d": d}),
                       jsonable(results), timer.timings)
    return EXIT_OK, report, lines


def cmd_table1(opts, only=None):
    timer = _Timer()
    cells, lines = [], []
    all_ok = True
    for n, row in TABLE1.items():
        w = build_IN(n)
        lines.append(f"I_{n}:")
        for name, kind, d, expected, tol in row:
            if only is not None and kind != only:
                continue
            with timer.stage(f"I_{n}/{name}"):
                if kind == "classical":
                    value = classical_max(w, d, opts["vertex_cap"])
                    ok = value == expected
                    if d <= n:
                        ok = ok and value == bound_LN(n, d)
                    provenance = EXACT_LABEL
                else:
                    res = seesaw_maximize(w, d, restarts=opts["restarts"], tol=opts["tol"],
                                          seed=opts["seed"])
                    value = res.value
                    ok = abs(value - expected) <= tol
                    provenance = SEESAW_LABEL
            all_ok &= ok
            cells.append({"witness": f"I_{n}", "cell": name, "d": d, "kind": kind,
                          "computed": value, "expected": expected, "tolerance": tol,
                          "pass": bool(ok), "provenance": provenance})
            shown = _fmt(value) if kind == "classical" else f"{value:.10f}"
            tol_text = "exact" if tol is None else f"tol {tol:g}"
            lines.append(f"  {name:4s} computed {shown:>14s}  expected {_fmt(expected):>14s}  "
                         f"({tol_text}, {provenance})  {'PASS' if ok else 'FAIL'}")
    inputs = {"command": "table1", "only": only}
    if only != "classical":
        inputs.update({"seed": opts["seed"], "restarts": opts["restarts"], "tol": opts["tol"]})
    report = RunReport("table1", digest(inputs), jsonable({"cells": cells, "all_pass": all_ok}),
                       timer.timings)
    return (EXIT_OK if all_ok else EXIT_CHECK_FAILED), report, lines


def load_strategy(obj):
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "classical":
        return ClassicalStrategy.from_json(obj)
    if kind == "quantum":
        return QuantumStrategy.from_json(obj)
    if kind == "bloch":
        return BlochStrategy.from_json(obj)
    raise ValidationError('strategy "kind" must be one of "classical", "quantum", "bloch"')


def cmd_simulate(strategy_path, noise, out_path, opts):
    timer = _Timer()
    try:
        obj = json.loads(Path(strategy_path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read {strategy_path}: {exc}", str(strategy_path)) from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{strategy_path}: invalid JSON at line {exc.lineno}: {exc.msg}",
                              (exc.lineno, exc.colno)) from exc
    strategy = load_strategy(obj)
    with timer.stage("simulate"):
        if isinstance(strategy, ClassicalStrategy):
            cm = simulate_classical(strategy)
        elif isinstance(strategy, QuantumStrategy):
            cm = correlations_from_quantum(strategy)
        else:
            cm = bloch_correlations(strategy)
        if noise is not None:
            cm = apply_white_noise(cm, noise)
    data = cm.to_json()
    results = {"correlations": data, "kind": obj["kind"], "visibility": noise}
    lines = ["E ="] + ["  " + "  ".join(f"{v:+.10f}" for v in row) for row in cm.e]
    n, m = cm.scenario.shape
    if n == m + 1 and n >= 3:
        value = evaluate(build_IN(n), cm)
        results[f"I_{n}"] = value
        lines.append(f"I_{n} = {value:.10g}")
    if (n, m) == (3, 2):
        results["J3"] = evaluate_J3(cm)
        lines.append(f"J_3 = {results['J3']:.10g}")
    if out_path:
        Path(out_path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
        lines.append(f"written to {out_path}")
    report = RunReport("simulate", digest({"command": "simulate", "strategy": _file_digest(strategy_path),
                                           "noise": noise}), jsonable(results), timer.timings)
    return EXIT_OK, report, lines


# -- argument parsing ----------------------------------------------------------------------------

def _global_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    g.add_argument("--restarts", type=int, default=argparse.SUPPRESS,
                   help="see-saw restarts (default 50)")
    g.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                   help="see-saw convergence tolerance (default 1e-10)")
    g.add_argument("--vertex-cap", dest="vertex_cap", type=int, default=argparse.SUPPRESS,
                   help=f"refuse polytopes with more vertices (default {DEFAULT_VERTEX_CAP})")
    g.add_argument("--format", choices=["text", "json"], default=argparse.SUPPRESS,
                   help="output format (default text)")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(prog="dimwit", parents=[common],
                                     description="Device-independent dimension witnesses.")
    parser.add_argument("--version", action="version", version=f"dimwit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("member", parents=[common], help="membership in the dimension-d classical polytope")
    p.add_argument("input", help="correlation (E) or probability (P) JSON file")
    p.add_argument("--d", type=int, required=True)

    p = sub.add_parser("dimension", parents=[common], help="minimal classical dimension of the data")
    p.add_argument("input")

    p = sub.add_parser("witness", parents=[common], help="evaluate or bound a linear witness")
    p.add_argument("spec", help='witness JSON file or "IN:<N>"')
    wsub = p.add_subparsers(dest="action", required=True)
    q = wsub.add_parser("eval", parents=[common])
    q.add_argument("--input", required=True)
    q = wsub.add_parser("classical-max", parents=[common])
    q.add_argument("--d", type=int, required=True)
    q = wsub.add_parser("quantum-seesaw", parents=[common])
    q.add_argument("--d", type=int, required=True)
    q = wsub.add_parser("is-facet", parents=[common])
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--bound", default=None, help="inequality bound (default: stored or exact maximum)")

    p = sub.add_parser("facets", parents=[common], help="facets of the dimension-d polytope")
    p.add_argument("N", type=int)
    p.add_argument("m", type=int)
    p.add_argument("d", type=int)
    p.add_argument("--max-entries", type=int, default=None, help="guard on N*m (default 8)")
    p.add_argument("--max-vertices", type=int, default=None, help="guard on vertex count (default 10^4)")

    p = sub.add_parser("table1", parents=[common], help="classical and quantum bounds of I_3 and I_4")
    p.add_argument("--only", choices=["classical", "quantum"], default=None)

    p = sub.add_parser("simulate", parents=[common], help="correlations produced by a strategy file")
    p.add_argument("strategy")
    p.add_argument("--noise", type=float, default=None,
                   help="visibility v in [0, 1]; correlators are scaled by v (0 gives pure noise)")
    p.add_argument("--out", default=None)
    return parser


def resolve_options(ns, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    opts = {}
    for key, default in GLOBAL_DEFAULTS.items():
        if key in ns:
            opts[key] = getattr(ns, key)
            continue
        env = environ.get("DIMWIT_" + key.upper())
        if env is not None:
            try:
                opts[key] = GLOBAL_TYPES[key](env)
            except ValueError as exc:
                raise ValidationError(f"DIMWIT_{key.upper()}={env!r} is not a valid {key}") from exc
        else:
            opts[key] = default
    if opts["format"] not in ("text", "json"):
        raise ValidationError(f"unknown output format {opts['format']!r}")
    return opts


def run(argv=None, environ=None):
    """Parse ``argv`` and run the command; returns ``(exit_code, report_or_None, lines)``."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    opts = resolve_options(ns, environ)
    cmd = ns.command
    if cmd == "member":
        return cmd_member(ns.input, ns.d, opts)
    if cmd == "dimension":
        return cmd_dimension(ns.input, opts)
    if cmd == "witness":
        return cmd_witness(ns.spec, ns.action, ns, opts)
    if cmd == "facets":
        return cmd_facets(ns.N, ns.m, ns.d, opts, ns.max_entries, ns.max_vertices)
    if cmd == "table1":
        return cmd_table1(opts, ns.only)
    if cmd == "simulate":
        return cmd_simulate(ns.strategy, ns.noise, ns.out, opts)
    raise ValidationError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    fmt = "json" if "--format=json" in argv or ("--format" in argv and
                                                 argv[argv.index("--format") + 1:][:1] == ["json"]) \
        else os.environ.get("DIMWIT_FORMAT", "text")
    try:
        code, report, lines = run(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else 0
    except ResourceGuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValidationError as exc:
        loc = f" (at {exc.location})" if exc.location is not None else ""
        print(f"error: {exc}{loc}", file=sys.stderr)
        return EXIT_ERROR
    except (SolverError, DimwitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if fmt == "json":
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    else:
        print("\n".join(lines))
    return code
