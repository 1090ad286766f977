"""High-level drivers tying continuation, classification and switching
together; used by the scenario runner and the command-line interface."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..continuation import Branch, ContinuationProblem, StepControl, _mp_correct, continue_branch, init_point
from ..equilibria import (
    Codim1Point,
    Codim2Point,
    EquilibriumCurve,
    FoldCurve,
    HopfCurve,
    classify_codim2,
    solve_equilibrium,
)
from ..errors import BifkitError, NoConvergenceError
from ..cycles import LpcProblem, NsProblem, first_step_diagnostics, initial_data_from_sample, nonunit_pair
from ..switching import (
    CyclePredictor,
    predict_gh_lpc,
    predict_hh_ns,
    predict_zh_ns,
    reduce_gh,
    reduce_hh,
    reduce_zh,
)
from ..tensors import OdeModel, bundle_at, jacobian_fd
from ..linalg import eig_with_adjoint

DEFAULT_EPS = 1e-3

# canned equilibrium seeds for the builtin models (state guess at given alpha)
STARTING_POINTS = {
    "lorenz84ext": {"alpha": (2.0, 0.05), "x": (1.179011, -0.031469, 0.207264, -0.404256)},
    "laser": {"alpha": (5.511455, 7.0),
              "x": (6.002725662, 0.284155670, 0.494467584, 0.119891685, -0.000900409,
                    -0.041496708, -0.013949320, 0.074415587, -0.003529075)},
    "bautin": {"alpha": (-0.1, 0.0), "x": (0.0, 0.0)},
}


@dataclass
class CurveRun:
    kind: str                    # EQ | H | LP | LPC | NS
    curve: object                # the defining-system object
    problem: ContinuationProblem
    branch: Branch
    meta: dict = field(default_factory=dict)


def run_equilibrium(model: OdeModel, x0, alpha0, free: int, direction: int = +1,
                    max_points: int = 100, step: StepControl | None = None) -> CurveRun:
    params = model.with_params(alpha0)
    x = solve_equilibrium(model, x0, params)
    curve = EquilibriumCurve(model, free=free, params=params,
                             step=step or StepControl(initial=1e-2, max=0.1))
    prob = curve.problem()
    u0, t0 = init_point(prob, np.concatenate([x, [alpha0[free]]]))
    if direction * t0[-1] < 0:
        t0 = -t0
    branch = continue_branch(prob, u0, t0, max_points=max_points)
    return CurveRun(kind="EQ", curve=curve, problem=prob, branch=branch,
                    meta={"free": free, "alpha0": np.asarray(alpha0, float)})


def codim1_from_event(run: CurveRun, event) -> Codim1Point:
    return run.curve.classify_event(event.name, event.u)


def _orient(t0, n, direction, orient):
    idx = n if orient in (None, "alpha1") else n + 1
    if abs(t0[idx]) < 1e-12:
        idx = n + 1 if idx == n else n
    if direction * t0[idx] < 0:
        return -t0
    return t0


def run_hopf_curve(model: OdeModel, point: Codim1Point, direction: int = +1,
                   max_points: int = 200, step: StepControl | None = None,
                   params=None, orient=None) -> CurveRun:
    curve = HopfCurve(model, params=params, step=step or StepControl(initial=5e-3, max=0.1))
    prob = curve.problem()
    u0, t0 = init_point(prob, curve.initial_point(point))
    t0 = _orient(t0, model.n, direction, orient)
    branch = continue_branch(prob, u0, t0, max_points=max_points)
    return CurveRun(kind="H", curve=curve, problem=prob, branch=branch)


def run_fold_curve(model: OdeModel, point: Codim1Point, direction: int = +1,
                   max_points: int = 200, step: StepControl | None = None,
                   params=None, orient=None) -> CurveRun:
    curve = FoldCurve(model, params=params, step=step or StepControl(initial=5e-3, max=0.1))
    prob = curve.problem()
    u0, t0 = init_point(prob, curve.initial_point(point))
    t0 = _orient(t0, model.n, direction, orient)
    branch = continue_branch(prob, u0, t0, max_points=max_points)
    return CurveRun(kind="LP", curve=curve, problem=prob, branch=branch)


def classify_events(model: OdeModel, run: CurveRun, keep=("gh", "zh", "hh", "bt", "cp")) -> list[Codim2Point]:
    """Classify located events on a codim-1 curve, dropping misconfigured ones."""
    out = []
    for ev in run.branch.events:
        if ev.name not in keep:
            continue
        run.curve.init_borders(ev.u)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                cp = classify_codim2(model, run.curve, ev.name, ev.u)
            except BifkitError as exc:
                cp = None
                msg = str(exc)
        if cp is None:
            continue
        cp.warnings.extend(str(w.message) for w in caught)
        if cp.kind.endswith("?"):
            continue  # spurious sign change (e.g. det test firing at BT)
        if any(np.allclose(cp.alpha, q.alpha, atol=1e-6) and q.kind == cp.kind for q in out):
            continue
        out.append(cp)
    return out


def build_predictor(model: OdeModel, point: Codim2Point, case: str,
                    branch: int = 1) -> CyclePredictor:
    """Reduction plus predictor for a classified codim-2 point."""
    if case == "GH":
        bundle = bundle_at(model, point.x, point.params, order=5)
        red = reduce_gh(bundle, point.normal_form)
        point.reduction = red
        return predict_gh_lpc(red, point.normal_form, point.x, point.alpha)
    if case == "ZH":
        bundle = bundle_at(model, point.x, point.params, order=3)
        red = reduce_zh(bundle, point.normal_form)
        point.reduction = red
        return predict_zh_ns(red, point.normal_form, point.x, point.alpha)
    if case == "HH":
        bundle = bundle_at(model, point.x, point.params, order=5)
        red = reduce_hh(bundle, point.normal_form)
        point.reduction = red
        return predict_hh_ns(red, point.normal_form, point.x, point.alpha, branch=branch)
    raise ValueError(f"no switching implemented for case {case!r}")


def switch_and_continue(model: OdeModel, point: Codim2Point, case: str,
                        branch: int = 1, eps: float = DEFAULT_EPS,
                        N: int = 20, m: int = 4, max_points: int = 50,
                        step: StepControl | None = None,
                        retry: bool = True) -> tuple[CurveRun, CyclePredictor, dict]:
    """Predict, correct and continue the cycle branch emanating at a codim-2
    point; retries at 3*eps and eps/3 if the corrector rejects the sample."""
    pred = build_predictor(model, point, case, branch=branch)
    target = LpcProblem if case == "GH" else NsProblem
    eps_list = [eps, 3 * eps, eps / 3] if retry else [eps]
    last_exc = None
    for e in eps_list:
        # tight corrector: tangents near the organizing center are sensitive
        # to leftover residual
        system = target(model, N=N, m=m, tol=1e-10,
                        step=step or StepControl(initial=1e-4, min=1e-12, max=5e-3))
        system.base_params = point.params.copy()
        sample = pred.sample(e, N=N)
        try:
            u0, tpred = initial_data_from_sample(system, sample)
            prob = system.problem()
            # near the organizing center the branch tangent is sensitive to
            # leftover residual, so the first point is corrected extra tight
            u_corr, t_corr, iters, first = _mp_correct(prob, u0, tpred,
                                                       tol=min(system.tol, 1e-10))
        except (BifkitError, np.linalg.LinAlgError) as exc:
            last_exc = exc
            continue
        if np.dot(t_corr, tpred) < 0:
            t_corr = -t_corr
        br = continue_branch(prob, u_corr, t_corr, max_points=max_points)
        run = CurveRun(kind="LPC" if case == "GH" else "NS",
                       curve=system, problem=prob, branch=br,
                       meta={"case": case, "branch": branch, "eps": e,
                             "predicted_tangent": tpred,
                             "corrector_iters": iters,
                             "classification": pred.classification})
        return run, pred, {"eps_used": e}
    raise NoConvergenceError(f"switching failed for {case} at eps in {eps_list}: {last_exc}")


def tangent_agreement_deg(run: CurveRun) -> float:
    """Angle between the predicted tangent and the tangent after the first
    accepted continuation step."""
    tpred = run.meta["predicted_tangent"]
    if len(run.branch) < 2:
        return float("nan")
    t1 = run.branch.tangents[1]
    d = abs(float(np.dot(t1, tpred)))
    return float(np.degrees(np.arccos(np.clip(d, -1.0, 1.0))))


def ns_branch_classification(run: CurveRun, sample_every: int = 1):
    """Per-point (kind, pair product error) along a converged NS branch."""
    sys = run.curve
    out = []
    for u in run.branch.points[::sample_every]:
        k = float(sys.unpack(u)[3][0])
        mus = sys.multipliers(u)
        pair = nonunit_pair(mus, k)
        if pair is None:
            out.append(("unresolved", np.nan, k))
            continue
        real_pair = abs(np.imag(pair[0])) < 1e-6 * (1 + abs(pair[0]))
        kind = "neutral_saddle" if real_pair else "torus"
        out.append((kind, float(abs(pair[0] * pair[1] - 1.0)), k))
    return out


def sweep_first_step(model: OdeModel, point: Codim2Point, case: str,
                     eps_values, branch: int = 1, N: int = 20, m: int = 4,
                     tol: float = 1e-11):
    """Residual/distance sweep of the first corrector step over amplitudes."""
    pred = build_predictor(model, point, case, branch=branch)
    target = LpcProblem if case == "GH" else NsProblem
    rows = []
    for e in eps_values:
        system = target(model, N=N, m=m)
        system.base_params = point.params.copy()
        try:
            sample = pred.sample(float(e), N=N)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                R, dist = first_step_diagnostics(system, sample, tol=tol)
        except (BifkitError, np.linalg.LinAlgError):
            R, dist = np.nan, None
        rows.append((float(e), R, dist))
    return rows
