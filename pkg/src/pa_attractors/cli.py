"""``pa-attractors`` command line."""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from typing import List, Optional

from . import __version__
from .errors import (BadResidue, Disconnected, NonPositive, NonTranslationGluing, NotCoprime,
                     NotHyperbolic, OutsidePolygon, PaError, ParseError, SchemaMismatch, UnmatchedEdge)
from .scene import KINDS, Report, check, default_scenes, load_scene, run_scene, scene_from_dict

OUT_ENV = "PA_ATTRACTORS_OUT"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (ParseError, SchemaMismatch, NonPositive, BadResidue, NotCoprime, UnmatchedEdge,
                NonTranslationGluing, Disconnected, OutsidePolygon, NotHyperbolic)
ERROR_CHECKS = {"BranchSetNotInvariant": "lift_exists", "NoContinuousSheetRule": "lift_exists",
                "DoesNotCommute": "commutes", "NotPseudoAnosov": "return_map_pseudo_anosov"}


def _error_check(err: Exception) -> str:
    return ERROR_CHECKS.get(type(err).__name__, type(err).__name__)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pa-attractors", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in KINDS + ("all",):
        sp = sub.add_parser(name)
        if name != "all":
            sp.add_argument("scene", nargs="?", help="scene JSON file (built-in default if omitted)")
        sp.add_argument("--n", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--l", type=int)
        sp.add_argument("--iters", type=int, help="circle iterations for the rotation number")
        sp.add_argument("--samples", type=int, help="sample count override")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./pa-out)")
        sp.add_argument("--tol-geom", type=float)
        sp.add_argument("--tol-semiconj", type=float)
        sp.add_argument("--tol-rotation", type=float)
        sp.add_argument("--no-figures", action="store_true")
    return ap


def _apply_flags(doc: dict, args) -> dict:
    doc = json.loads(json.dumps(doc))
    payload = doc.setdefault("payload", {})
    if any(v is not None for v in (args.n, args.k, args.l)):
        if doc.get("kind") not in ("circle", "model"):
            raise SchemaMismatch("--n/--k/--l only apply to circle and model scenes")
        cur = payload.get("triple", [1, 1, 0])
        payload["triple"] = [args.n if args.n is not None else cur[0],
                             args.k if args.k is not None else cur[1],
                             args.l if args.l is not None else cur[2]]
    if args.iters is not None:
        payload["iterations"] = args.iters
    if args.samples is not None:
        kind = doc.get("kind")
        key = {"pa": "arcs", "centralizer": "samples", "model": "return_samples"}.get(kind)
        if key:
            payload[key] = args.samples
        if kind == "model":
            payload["semiconj_samples"] = args.samples * 10
    if args.seed is not None:
        doc["seed"] = args.seed
    tols = doc.setdefault("tolerances", {})
    for flag, key in (("tol_geom", "geometric"), ("tol_semiconj", "semiconjugacy"),
                      ("tol_rotation", "rotation")):
        if getattr(args, flag) is not None:
            tols[key] = getattr(args, flag)
    return doc


def write_outputs(report: Report, out_dir: str, figures: bool = True, argv=None) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    written.append(path)
    meta = {"generated": _dt.datetime.now(_dt.timezone.utc).isoformat(), "version": __version__,
            "argv": list(argv or [])}
    path = os.path.join(out_dir, "metadata.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    written.append(path)
    doc = report.to_dict()
    for name, rows in sorted(doc["tables"].items()):
        if not rows:
            continue
        path = os.path.join(out_dir, f"{name}.csv")
        cols = list(rows[0].keys())
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in rows:
                w.writerow(r)
        written.append(path)
    if figures:
        from .figures import emit_figures
        written += emit_figures(doc, out_dir)
    return written


def _summary(report: Report) -> str:
    lines = []
    for c in report.checks:
        lines.append(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c.get('measured')}")
    return "\n".join(lines)


def run(command: str, scene_file: Optional[str], out_dir: str, args) -> int:
    """Run one subcommand; returns the exit code."""
    if command == "all":
        code = EXIT_OK
        for kind, doc in default_scenes().items():
            code = max(code, _run_doc(_apply_flags_safe(doc, args, kind), os.path.join(out_dir, kind), args))
        return code
    try:
        if scene_file:
            scene = load_scene(scene_file)
            if scene.kind != command:
                raise SchemaMismatch(f"scene kind {scene.kind!r} does not match subcommand {command!r}")
            doc = scene.model_dump()
        else:
            doc = default_scenes()[command]
        doc = _apply_flags(doc, args)
    except (ParseError, SchemaMismatch) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    return _run_doc(doc, out_dir, args)


def _apply_flags_safe(doc, args, kind):
    try:
        return _apply_flags(doc, args)
    except SchemaMismatch:
        return doc


def _run_doc(doc: dict, out_dir: str, args) -> int:
    try:
        scene = scene_from_dict(doc)
    except (ParseError, SchemaMismatch) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = run_scene(scene)
    except INPUT_ERRORS as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INPUT
    except PaError as err:
        # a structural property failed before the suite could run
        report = Report(scene.kind, scene.payload, [check(_error_check(err), False, None,
                                                          datum=f"{type(err).__name__}: {err}")],
                        seed=scene.seed, tolerances=scene.tolerances.model_dump())
    write_outputs(report, out_dir, figures=not getattr(args, "no_figures", False), argv=sys.argv)
    print(f"{scene.kind}: {'PASS' if report.passed else 'FAIL'} -> {out_dir}")
    print(_summary(report))
    if not report.passed:
        print("failed checks: " + ", ".join(report.failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    out = args.out or os.environ.get(OUT_ENV) or "pa-out"
    return run(args.command, getattr(args, "scene", None), out, args)


if __name__ == "__main__":
    sys.exit(main())
