"""Command line: ``passivewf run | render | list-scenarios``.

Exit status of ``run``: 0 when the scenario verdict is PASS, 2 when it is FAIL
and 1 when the scenario is invalid or the computation raised.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import microlocal as ml
from .scenario import SCHEMA_VERSION, ScenarioError, bundled, load, resolve, tolerances
from .tasks import PAIR_COLUMNS, RUNNERS, pair_table

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings so output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def execute(doc):
    """Run a resolved scenario; returns the report dictionary and CSV tables."""
    passed, results, tables = RUNNERS[doc["task"]](doc)
    report = {
        "schema_version": SCHEMA_VERSION,
        "scenario": doc["name"],
        "task": doc["task"],
        "verdict": "PASS" if passed else "FAIL",
        "results": results,
        "provenance": {
            "package": "passivewf",
            "version": __version__,
            "config": doc,
            "tolerances": tolerances(),
            "threads_env": ml.THREADS_ENV,
        },
    }
    return report, tables


def write_report(report, tables, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [outdir / "report.json"]
    written[0].write_text(dumps(report), encoding="utf-8")
    for name in sorted(tables):
        path = outdir / name
        path.write_text(tables[name], encoding="utf-8")
        written.append(path)
    return written


def _resolve_source(source):
    """A scenario path, or the name of a bundled scenario."""
    if os.path.exists(source):
        return load(source)
    shipped = bundled()
    if source in shipped:
        return resolve(shipped[source])
    raise ScenarioError(f"no scenario file or bundled scenario named {source!r}")


# --------------------------------------------------------------- render

def _decay_csv(data, overlay=None):
    rep = ml.report_from_dict(data)
    head, rows = rep.to_rows()
    if overlay is not None:
        head = head + ["in_R_cone"]
        rows = [r + [str(bool(v))] for r, v in zip(rows, overlay)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    w.writerows(rows)
    return buf.getvalue()


def render(report, stem):
    """Plot-data files for a report dictionary; returns ``{file name: text}``."""
    out = {}
    if "verdicts" in report:
        out[f"{stem}.decay.csv"] = _decay_csv(report)
        return out
    results = report.get("results", {})
    task = report.get("task")
    if task in ("wf-scan", "theorem51"):
        pairs = results.get("pairs", [])
        out[f"{stem}.pairs.csv"] = pair_table(pairs) if pairs else ",".join(PAIR_COLUMNS) + "\n"
        for pr in pairs:
            out[f"{stem}.{pr['label']}.decay.csv"] = _decay_csv(pr["decay"], pr.get("in_R_cone"))
    elif "decay" in results:
        out[f"{stem}.decay.csv"] = _decay_csv(results["decay"])
    else:
        rows = sorted(_flatten(results))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        out[f"{stem}.summary.csv"] = buf.getvalue()
    return out


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}.{i}")
    else:
        yield prefix, json.dumps(obj, sort_keys=True)


# ------------------------------------------------------------------ cli

def cmd_run(args):
    doc = {"task": "scenario"}
    try:
        doc = _resolve_source(args.scenario)
        if args.out:
            doc["output"] = args.out
        report, tables = execute(doc)
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        print(f"schema pointer: {exc.pointer}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {doc['task']} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    files = write_report(report, tables, doc["output"])
    print(f"{doc['name']}: {report['verdict']} ({doc['task']})")
    for f in files:
        print(f"  wrote {f}")
    return EXIT_PASS if report["verdict"] == "PASS" else EXIT_FAIL


def cmd_render(args):
    path = Path(args.report)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read report: {exc}", file=sys.stderr)
        return EXIT_ERROR
    outdir = Path(args.out) if args.out else path.parent
    outdir.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    for name, text in sorted(render(report, stem).items()):
        (outdir / name).write_text(text, encoding="utf-8")
        print(f"wrote {outdir / name}")
    return EXIT_PASS


def cmd_list(args):
    for name, doc in bundled().items():
        expect = doc.get("expect", "PASS")
        print(f"{name:32s} {doc['task']:18s} expect {expect:4s}  {doc.get('description', '')}")
    return EXIT_PASS


def build_parser():
    parser = argparse.ArgumentParser(prog="passivewf", description="Passive-state wavefront verification runner.")
    parser.add_argument("--version", action="version", version=f"passivewf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario file or bundled scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="output directory (overrides the scenario)")
    p_run.set_defaults(func=cmd_run)
    p_render = sub.add_parser("render", help="write plot-data columns for a report")
    p_render.add_argument("report")
    p_render.add_argument("--out", help="output directory (default: next to the report)")
    p_render.set_defaults(func=cmd_render)
    p_list = sub.add_parser("list-scenarios", help="list bundled scenarios")
    p_list.set_defaults(func=cmd_list)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
