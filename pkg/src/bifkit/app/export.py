"""Branch records, delimited output, codim-2 reports and diagram export.

Floats are printed with 17 significant digits so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FMT = "%.17g"

BRANCH_COLUMNS = {
    "EQ": ("alpha1", "alpha2", "norm_x"),
    "LP": ("alpha1", "alpha2", "norm_x"),
    "H": ("alpha1", "alpha2", "norm_x", "kappa"),
    "LPC": ("alpha1", "alpha2", "norm_x", "T"),
    "NS": ("alpha1", "alpha2", "norm_x", "T", "k"),
}


@dataclass
class BranchRecord:
    kind: str                      # EQ | LP | H | LPC | NS
    name: str
    rows: np.ndarray               # columns per BRANCH_COLUMNS[kind]
    events: list = field(default_factory=list)  # (label, alpha1, alpha2)

    @property
    def columns(self):
        return BRANCH_COLUMNS[self.kind]


def record_from_run(run, name: str) -> BranchRecord:
    """Flatten a CurveRun into the fixed column schema of its branch kind."""
    kind = run.kind
    rows = []
    sysobj = run.curve
    model = sysobj.model
    for u in run.branch.points:
        if kind == "EQ":
            x, af = sysobj.unpack(u)
            params = sysobj.full_params(af)
            alpha = params[list(model.active)]
            rows.append([alpha[0], alpha[1], np.linalg.norm(x)])
        elif kind == "LP":
            x, a = sysobj.unpack(u)
            rows.append([a[0], a[1], np.linalg.norm(x)])
        elif kind == "H":
            x, a, kappa = sysobj.unpack(u)
            rows.append([a[0], a[1], np.linalg.norm(x), kappa])
        elif kind == "LPC":
            profile, T, a, _ = sysobj.unpack(u)
            rows.append([a[0], a[1], float(np.linalg.norm(profile) / np.sqrt(len(profile))), T])
        elif kind == "NS":
            profile, T, a, aux = sysobj.unpack(u)
            rows.append([a[0], a[1], float(np.linalg.norm(profile) / np.sqrt(len(profile))),
                         T, float(aux[0])])
        else:
            raise ValueError(kind)
    events = []
    for ev in run.branch.events:
        if kind == "EQ":
            x, af = sysobj.unpack(ev.u)
            alpha = sysobj.full_params(af)[list(model.active)]
        elif kind in ("LP", "H"):
            alpha = sysobj.unpack(ev.u)[1]
        else:
            alpha = sysobj.unpack(ev.u)[2]
        events.append((ev.name, float(alpha[0]), float(alpha[1])))
    return BranchRecord(kind=kind, name=name, rows=np.asarray(rows, dtype=float),
                        events=events)


def write_branch_csv(record: BranchRecord, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# bifkit branch kind={record.kind} name={record.name}\n")
        fh.write(",".join(record.columns) + "\n")
        for row in record.rows:
            fh.write(",".join(FMT % v for v in row) + "\n")
        for name, a1, a2 in record.events:
            fh.write(f"# event {name} at {FMT % a1},{FMT % a2}\n")


def _complexify(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return {"re": np.real(v).tolist(), "im": np.imag(v).tolist()}
    return v.tolist()


def codim2_to_dict(point) -> dict:
    out = {
        "kind": point.kind,
        "x": point.x.tolist(),
        "alpha": point.alpha.tolist(),
        "params": point.params.tolist(),
        "eigenvalues": _complexify(point.eigenvalues),
        "scaled": point.scaled,
        "warnings": point.warnings,
        "info": {k: (_complexify(np.atleast_1d(v)) if isinstance(v, (complex, np.complexfloating))
                     else v) for k, v in point.info.items()},
    }
    nf = point.normal_form
    red = point.reduction
    if point.kind == "GH" and nf is not None:
        out["normal_form"] = {
            "omega": nf.omega, "c1": _complexify(np.atleast_1d(nf.c1)),
            "c2": _complexify(np.atleast_1d(nf.c2)),
            "q": _complexify(nf.q), "p": _complexify(nf.p),
            "h2000": _complexify(nf.h2000), "h1100": _complexify(nf.h1100),
            "h2100": _complexify(nf.h2100),
        }
        if red is not None:
            out["reduction"] = {
                "K": red.K.tolist(), "b12": red.b12,
                "gamma1": _complexify(red.gamma1), "gamma2": _complexify(red.gamma2),
                "h00": [_complexify(h) for h in red.h00],
                "cond": red.K_cond,
            }
    elif point.kind == "ZH" and nf is not None:
        out["normal_form"] = {
            "omega": nf.omega, "f200": nf.f200, "f011": nf.f011,
            "f300": nf.f300, "f111": nf.f111,
            "g110": _complexify(np.atleast_1d(nf.g110)),
            "g210": _complexify(np.atleast_1d(nf.g210)),
            "g021": _complexify(np.atleast_1d(nf.g021)),
            "q1": _complexify(nf.q1), "p1": _complexify(nf.p1),
            "q2": _complexify(nf.q2), "p2": _complexify(nf.p2),
            "h20000": _complexify(nf.h20000), "h11000": _complexify(nf.h11000),
            "h02000": _complexify(nf.h02000), "h01100": _complexify(nf.h01100),
        }
        if red is not None:
            out["reduction"] = {
                "v10": red.v10.tolist(), "v01": red.v01.tolist(),
                "omega_d": red.omega_d.tolist(),
                "deltas": red.deltas.tolist(),
                "h0010": _complexify(red.h0010), "h0001": _complexify(red.h0001),
            }
    elif point.kind == "HH" and nf is not None:
        out["normal_form"] = {
            "omega1": nf.omega1, "omega2": nf.omega2,
            "f2100": _complexify(np.atleast_1d(nf.f2100)),
            "f1011": _complexify(np.atleast_1d(nf.f1011)),
            "g1110": _complexify(np.atleast_1d(nf.g1110)),
            "g0021": _complexify(np.atleast_1d(nf.g0021)),
            "q1": _complexify(nf.q1), "p1": _complexify(nf.p1),
            "q2": _complexify(nf.q2), "p2": _complexify(nf.p2),
            "h2000": _complexify(nf.h2000), "h1100": _complexify(nf.h1100),
            "h0020": _complexify(nf.h0020), "h0011": _complexify(nf.h0011),
        }
        if red is not None:
            out["reduction"] = {
                "K": red.K.tolist(),
                "gamma1": _complexify(red.gamma1), "gamma2": _complexify(red.gamma2),
                "h0000": [_complexify(h) for h in red.h0000],
                "domega_branch1": red.domega_branch1.tolist(),
                "domega_branch2": red.domega_branch2.tolist(),
            }
    return out


def write_codim2_report(points: list, path: Path, model_name: str = "") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"model": model_name, "points": [codim2_to_dict(p) for p in points]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_diagnostics_csv(rows, path: Path) -> None:
    """(eps, first-residual, predicted-to-corrected distance) table; a blank
    distance marks a divergent correction."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("eps,first_residual,distance\n")
        for eps, R, dist in rows:
            d = "" if dist is None else FMT % dist
            fh.write(f"{FMT % eps},{FMT % R},{d}\n")


_GNUPLOT_STYLE = {
    "EQ": "lc rgb 'gray' dt 3",
    "LP": "lc rgb 'black'",
    "H": "lc rgb 'blue' dt 2",
    "LPC": "lc rgb 'red'",
    "NS": "lc rgb 'dark-green'",
}


def export_diagram(records: list[BranchRecord], outdir, codim2_points=(),
                   param_names=("alpha1", "alpha2"), render=True) -> dict:
    """Two-column parameter files per branch, a gnuplot stub, and (optionally)
    a rendered parameter-plane figure.  Returns the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"branches": [], "markers": [], "figure": None, "script": None}
    for rec in records:
        fname = f"{rec.name}.dat"
        with open(outdir / fname, "w") as fh:
            fh.write(f"# {rec.kind} {param_names[0]} {param_names[1]}\n")
            for row in rec.rows:
                fh.write(f"{FMT % row[0]} {FMT % row[1]}\n")
        manifest["branches"].append({"file": fname, "kind": rec.kind, "name": rec.name})
    for p in codim2_points:
        manifest["markers"].append({"kind": p.kind,
                                    "alpha": [float(p.alpha[0]), float(p.alpha[1])]})
    script = outdir / "diagram.gp"
    with open(script, "w") as fh:
        fh.write("# bifurcation diagram stub\n")
        fh.write(f"set xlabel '{param_names[0]}'\nset ylabel '{param_names[1]}'\n")
        if manifest["branches"]:
            parts = [
                f"'{b['file']}' w l {_GNUPLOT_STYLE.get(b['kind'], '')} title '{b['name']}'"
                for b in manifest["branches"]
            ]
            fh.write("plot " + ", \\\n     ".join(parts) + "\n")
        for mk in manifest["markers"]:
            fh.write(f"set label '{mk['kind']}' at {FMT % mk['alpha'][0]},{FMT % mk['alpha'][1]} point pt 7\n")
    manifest["script"] = script.name
    if render and records:
        from .figures import render_diagram

        figure = outdir / "diagram.png"
        render_diagram(records, codim2_points, figure, param_names)
        manifest["figure"] = figure.name
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def output_dir(default) -> Path:
    """Output directory, overridable through the BIFKIT_OUTDIR variable."""
    return Path(os.environ.get("BIFKIT_OUTDIR", default))
