"""Command-line interface.

Subcommands::

    bifkit run <scenario>                 replay a scenario file (or bundled name)
    bifkit list-models                    builtin model registry
    bifkit locate <model> <kind> --near P=V [--near P=V ...]
    bifkit switch <report.json> --case GH [--branch 1] --eps 1e-3 [--out F]
    bifkit diagnose-sweep <report.json> --case GH --eps-range 1e-7:0.2

Exit status is zero on full success; a failing scenario stage exits nonzero
and prints the stage name.  ``BIFKIT_OUTDIR`` overrides output directories.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import BifkitError
from .export import output_dir, write_diagnostics_csv
from .models import load_model, model_names


def _scenario_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    pkg = resources.files("bifkit.app") / "scenarios" / f"{name}.scenario"
    if pkg.is_file():
        return Path(str(pkg))
    raise SystemExit(f"scenario '{name}' not found (no such file or bundled name)")


def _parse_near(pairs, model):
    names = list(model.param_names) if model.param_names else []
    alpha = list(model.active_values(model.params))
    for item in pairs:
        key, _, val = item.partition("=")
        if key in names:
            idx = names.index(key)
            if idx not in model.active:
                raise SystemExit(f"parameter {key} is not an active continuation parameter")
            alpha[model.active.index(idx)] = float(val)
        elif key in ("alpha1", "alpha2"):
            alpha[0 if key == "alpha1" else 1] = float(val)
        else:
            raise SystemExit(f"unknown parameter name {key!r}")
    return np.asarray(alpha, dtype=float)


def cmd_run(args) -> int:
    from .scenario import Scenario, run_scenario

    sc = Scenario.from_file(_scenario_path(args.scenario))
    res = run_scenario(sc, outdir=args.outdir)
    print(f"outputs in {res.outdir}")
    for p in res.points:
        print(f"  {p.kind} at alpha = {np.array2string(p.alpha, precision=8)} scaled={p.scaled}")
    if not res.ok:
        print(f"FAILED at stage: {res.failed_stage}", file=sys.stderr)
        return 1
    return 0


def cmd_list_models(args) -> int:
    for name in model_names():
        model = load_model(name)
        active = (
            ", ".join(model.param_names[i] for i in model.active)
            if model.param_names else f"{model.active}"
        )
        print(f"{name:22s} n={model.n}  active parameters: {active}")
    return 0


def cmd_locate(args) -> int:
    from . import pipeline
    from .export import write_codim2_report

    model = load_model(args.model)
    alpha = _parse_near(args.near or [], model)
    seed = pipeline.STARTING_POINTS.get(args.model)
    if seed is None:
        raise SystemExit(f"no canned starting point for model {args.model}")
    kind = args.kind.upper()
    hopf_events = []
    run_eq = None
    for free in (0, 1):
        for direction in (+1, -1):
            run_eq = pipeline.run_equilibrium(
                model, np.asarray(seed["x"], float), np.asarray(seed["alpha"], float),
                free=free, direction=direction, max_points=args.max_points)
            hopf_events = [e for e in run_eq.branch.events if e.name == "hopf"]
            if hopf_events:
                break
        if hopf_events:
            break
    if not hopf_events:
        raise SystemExit("no Hopf point found on the seed equilibrium branch")
    found = []
    bt_seeds = []
    for ev in hopf_events:
        point = pipeline.codim1_from_event(run_eq, ev)
        for direction in (+1, -1):
            run_h = pipeline.run_hopf_curve(model, point, direction=direction,
                                            max_points=args.max_points)
            for bt_ev in run_h.branch.events:
                if bt_ev.name == "bt":
                    bt_seeds.append(run_h.curve.classify_event("bt", bt_ev.u))
            for p in pipeline.classify_events(model, run_h):
                if p.kind == kind and not any(
                        np.allclose(p.alpha, q.alpha, atol=1e-6) for q in found):
                    found.append(p)
        if found:
            break
    if not found and bt_seeds:
        # cusp (and fold-side zero-Hopf) points live on fold curves, reachable
        # from a Bogdanov-Takens event
        for direction in (+1, -1):
            run_f = pipeline.run_fold_curve(model, bt_seeds[0], direction=direction,
                                            max_points=args.max_points)
            for p in pipeline.classify_events(model, run_f):
                if p.kind == kind and not any(
                        np.allclose(p.alpha, q.alpha, atol=1e-6) for q in found):
                    found.append(p)
    if not found:
        print(f"no {kind} point located", file=sys.stderr)
        return 1
    best = min(found, key=lambda p: np.linalg.norm(p.alpha - alpha))
    print(f"{best.kind} at alpha = {np.array2string(best.alpha, precision=9)}")
    print(f"scaled coefficients: {best.scaled}")
    if args.out:
        write_codim2_report([best], args.out, model_name=model.name)
        print(f"report written to {args.out}")
    return 0


def _predictor_from_report(report, case, branch, model):
    from .records import predictor_from_record

    matches = [p for p in report["points"] if p["kind"] == case]
    if not matches:
        raise SystemExit(f"report has no {case} point")
    return predictor_from_record(matches[0], case, branch)


def cmd_switch(args) -> int:
    with open(args.report) as fh:
        report = json.load(fh)
    model = load_model(report["model"]) if report.get("model") else None
    pred = _predictor_from_report(report, args.case.upper(), args.branch, model)
    sample = pred.sample(args.eps, N=args.N)
    payload = sample.to_dict()
    out = args.out or (Path(args.report).with_suffix("") .as_posix() + f"_{args.case.lower()}_predictor.json")
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"predictor sample (eps={args.eps}) written to {out}")
    print(f"  T = {sample.T:.9g}  alpha = {np.array2string(sample.alpha, precision=9)}"
          + (f"  k = {sample.k:.9g}" if sample.k is not None else ""))
    return 0


def cmd_diagnose_sweep(args) -> int:
    from . import pipeline
    from .figures import render_sweep
    from .records import point_from_record

    with open(args.report) as fh:
        report = json.load(fh)
    model = load_model(report["model"])
    case = args.case.upper()
    matches = [p for p in report["points"] if p["kind"] == case]
    if not matches:
        raise SystemExit(f"report has no {case} point")
    point = point_from_record(matches[0], model)
    lo, hi = (float(v) for v in args.eps_range.split(":"))
    eps_values = np.geomspace(lo, hi, args.count)
    rows = pipeline.sweep_first_step(model, point, case, eps_values,
                                     branch=args.branch, N=args.N, m=args.m)
    outdir = output_dir(args.outdir or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    csv = outdir / f"sweep_{case.lower()}.csv"
    write_diagnostics_csv(rows, csv)
    png = outdir / f"sweep_{case.lower()}.png"
    render_sweep(rows, png, title=f"{report.get('model','')} {case}")
    print(f"sweep written to {csv} and {png}")
    converged = sum(1 for _, _, d in rows if d is not None)
    print(f"{converged}/{len(rows)} amplitudes converged")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bifkit",
                                 description="equilibrium/cycle bifurcation continuation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file or bundled scenario name")
    p.add_argument("scenario")
    p.add_argument("--outdir", default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("list-models", help="list builtin models")
    p.set_defaults(fn=cmd_list_models)

    p = sub.add_parser("locate", help="locate a codim-2 point near given parameters")
    p.add_argument("model")
    p.add_argument("kind", choices=["GH", "ZH", "HH", "BT", "CP", "gh", "zh", "hh", "bt", "cp"])
    p.add_argument("--near", action="append", metavar="NAME=VALUE")
    p.add_argument("--max-points", type=int, default=300, dest="max_points")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_locate)

    p = sub.add_parser("switch", help="emit cycle-branch starting data from a codim-2 report")
    p.add_argument("report")
    p.add_argument("--case", required=True)
    p.add_argument("--branch", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("-N", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_switch)

    p = sub.add_parser("diagnose-sweep", help="first-step corrector sweep over amplitudes")
    p.add_argument("report")
    p.add_argument("--case", required=True)
    p.add_argument("--branch", type=int, default=1)
    p.add_argument("--eps-range", default="1e-7:0.2", dest="eps_range")
    p.add_argument("--count", type=int, default=25)
    p.add_argument("-N", type=int, default=20)
    p.add_argument("-m", type=int, default=4)
    p.add_argument("--outdir", default=None)
    p.set_defaults(fn=cmd_diagnose_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BifkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
