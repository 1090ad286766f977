"""Declarative scenario runner.

A scenario file (YAML key/value text) names a model, numeric settings, an
output directory and an ordered list of stages.  Stages reference objects
produced by earlier stages ("stage/event/index" locators), so a whole
experiment - equilibrium run, codim-1 curves, codim-2 classification,
branch switching, diagnostics sweeps - replays from one checked-in file.
"""

from __future__ import annotations

import json
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..continuation import StepControl
from ..errors import BifkitError
from . import pipeline
from .export import (
    export_diagram,
    output_dir,
    record_from_run,
    write_branch_csv,
    write_codim2_report,
    write_diagnostics_csv,
)
from .models import load_model


@dataclass
class Scenario:
    model: str
    stages: list
    settings: dict = field(default_factory=dict)
    output: str = "out"
    model_kwargs: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "Scenario":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        return cls(
            model=data["model"],
            stages=data.get("stages", []),
            settings=data.get("settings", {}),
            output=data.get("output", "out"),
            model_kwargs=data.get("model_kwargs", {}),
        )


@dataclass
class ScenarioResult:
    scenario: Scenario
    outdir: Path
    runs: dict = field(default_factory=dict)        # stage name -> CurveRun
    points: list = field(default_factory=list)       # classified codim-2 points
    records: list = field(default_factory=list)      # BranchRecords
    sweeps: dict = field(default_factory=dict)
    stage_status: dict = field(default_factory=dict)
    failed_stage: str | None = None

    @property
    def ok(self) -> bool:
        return self.failed_stage is None


def _resolve_codim1(result: ScenarioResult, locator: str):
    stage, kind, idx = locator.split("/")
    run = result.runs[stage]
    events = [e for e in run.branch.events if e.name == kind]
    ev = events[int(idx)]
    return run, ev


def _resolve_point(result: ScenarioResult, locator: str):
    stage, kind, idx = locator.split("/")
    pts = [p for p in result.points if p.kind == kind]
    return pts[int(idx)]


def _step_control(spec: dict | None) -> StepControl | None:
    if not spec:
        return None
    return StepControl(**spec)


def run_scenario(sc: Scenario, outdir=None, progress=print) -> ScenarioResult:
    model = load_model(sc.model, **sc.model_kwargs)
    out = output_dir(outdir if outdir is not None else sc.output)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    res = ScenarioResult(scenario=sc, outdir=out)
    settings = dict(sc.settings)
    N = int(settings.get("N", 20))
    m = int(settings.get("m", 4))
    eps_default = float(settings.get("eps", 1e-3))

    skipped_sources = set()
    for stage in sc.stages:
        name = stage["name"]
        kind = stage["kind"]
        deps = []
        for key in ("from", "point"):
            v = stage.get(key)
            if isinstance(v, str):
                deps.append(v.split("/")[0])
            elif isinstance(v, list):
                deps.extend(s.split("/")[0] for s in v)
        if any(d in skipped_sources for d in deps):
            res.stage_status[name] = {"status": "skipped", "reason": "upstream failure"}
            skipped_sources.add(name)
            continue
        t0 = time.time()
        try:
            _run_stage(model, stage, res, N=N, m=m, eps_default=eps_default)
            res.stage_status[name] = {"status": "ok", "seconds": round(time.time() - t0, 2)}
            progress(f"[stage {name}] ok ({time.time() - t0:.1f}s)")
        except (BifkitError, np.linalg.LinAlgError, KeyError, IndexError, ValueError) as exc:
            res.stage_status[name] = {
                "status": "failed",
                "error": f"{type(exc).__name__}: {exc}",
                "trace": traceback.format_exc(limit=4),
            }
            skipped_sources.add(name)
            if res.failed_stage is None:
                res.failed_stage = name
            progress(f"[stage {name}] FAILED: {exc}")

    _export(res, model)
    return res


def _run_stage(model, stage, res: ScenarioResult, N, m, eps_default):
    name = stage["name"]
    kind = stage["kind"]
    if kind == "equilibrium":
        start = stage["start"]
        run = pipeline.run_equilibrium(
            model, np.asarray(start["x"], float), np.asarray(start["alpha"], float),
            free=int(stage.get("free", 0)), direction=int(stage.get("direction", 1)),
            max_points=int(stage.get("max_points", 100)),
            step=_step_control(stage.get("step")),
        )
        res.runs[name] = run
    elif kind in ("hopf", "fold"):
        run0, ev = _resolve_codim1(res, stage["from"])
        point = pipeline.codim1_from_event(run0, ev)
        if kind == "fold" and point.kind not in ("fold",):
            # fold curves may also start at a Bogdanov-Takens event located
            # on a Hopf curve; reuse the event coordinates
            point.kind = "fold"
        fn = pipeline.run_hopf_curve if kind == "hopf" else pipeline.run_fold_curve
        run = fn(model, point, direction=int(stage.get("direction", 1)),
                 max_points=int(stage.get("max_points", 200)),
                 step=_step_control(stage.get("step")),
                 params=model.with_params(point.alpha),
                 orient=stage.get("orient"))
        res.runs[name] = run
    elif kind == "codim2":
        sources = stage["from"]
        if isinstance(sources, str):
            sources = [sources]
        for src in sources:
            pts = pipeline.classify_events(model, res.runs[src])
            for p in pts:
                if not any(np.allclose(p.alpha, q.alpha, atol=1e-6) and p.kind == q.kind
                           for q in res.points):
                    p.info["source"] = src
                    res.points.append(p)
    elif kind == "switch":
        point = _resolve_point(res, stage["point"])
        case = stage["case"]
        branch = int(stage.get("branch", 1))
        run, pred, info = pipeline.switch_and_continue(
            model, point, case, branch=branch,
            eps=float(stage.get("eps", eps_default)),
            N=N, m=m, max_points=int(stage.get("max_points", 50)),
            step=_step_control(stage.get("step")),
        )
        run.meta["stage"] = name
        res.runs[name] = run
    elif kind == "sweep":
        point = _resolve_point(res, stage["point"])
        lo, hi = stage.get("eps_range", [1e-7, 0.2])
        count = int(stage.get("count", 25))
        eps_values = np.geomspace(float(lo), float(hi), count)
        rows = pipeline.sweep_first_step(
            model, point, stage["case"], eps_values,
            branch=int(stage.get("branch", 1)), N=N, m=m,
        )
        res.sweeps[name] = rows
    else:
        raise ValueError(f"unknown stage kind {kind!r}")


def _export(res: ScenarioResult, model):
    from .figures import render_sweep

    out = res.outdir
    for name, run in res.runs.items():
        rec = record_from_run(run, name)
        res.records.append(rec)
        write_branch_csv(rec, out / f"branch_{name}.csv")
        if run.kind in ("LPC", "NS") and len(run.branch):
            cyc = run.curve.cycle(run.branch.points[-1])
            ts = cyc.time_series()
            with open(out / f"cycle_{name}.csv", "w") as fh:
                fh.write("t," + ",".join(
                    run.curve.model.state_names
                    or [f"x{i+1}" for i in range(run.curve.model.n)]) + "\n")
                for row in ts:
                    fh.write(",".join("%.17g" % v for v in row) + "\n")
    if res.points:
        write_codim2_report(res.points, out / "codim2_report.json",
                            model_name=model.name)
    for name, rows in res.sweeps.items():
        write_diagnostics_csv(rows, out / f"sweep_{name}.csv")
        render_sweep(rows, out / f"sweep_{name}.png", title=name)
    names = tuple(model.param_names[i] for i in model.active) if model.param_names else ("alpha1", "alpha2")
    export_diagram(res.records, out / "diagram", codim2_points=res.points,
                   param_names=names)
    with open(out / "summary.json", "w") as fh:
        json.dump({
            "model": model.name,
            "stages": res.stage_status,
            "codim2": [{"kind": p.kind, "alpha": p.alpha.tolist(), "scaled": p.scaled}
                       for p in res.points],
        }, fh, indent=1, sort_keys=True)
        fh.write("\n")
