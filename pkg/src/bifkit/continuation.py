"""Moore-Penrose predictor-corrector continuation with event location.

A :class:`ContinuationProblem` wraps a residual map F: R^(m+1) -> R^m (one
more unknown than equations), an optional analytic Jacobian, named test
functions for event detection, and step controls.  ``continue_branch``
produces a :class:`Branch` of corrected points with tangents, test-function
values and located events.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import LocationError, NoConvergenceError, StallError

_FD_EPS = np.sqrt(np.finfo(float).eps)


@dataclass
class StepControl:
    initial: float = 1e-2
    min: float = 1e-8
    max: float = 1.0
    grow: float = 1.3
    shrink: float = 0.5
    grow_iters: int = 3


@dataclass
class ContinuationProblem:
    fun: callable
    ndim: int                      # number of unknowns (= equations + 1)
    jac: callable | None = None
    test_functions: dict = field(default_factory=dict)
    tol: float = 1e-6              # corrector tolerance on ||F||_inf
    max_iters: int = 10
    step: StepControl = field(default_factory=StepControl)
    adapt: callable | None = None  # called with u after each accepted point
    bounds: callable | None = None  # u -> bool, False stops the run

    def residual(self, u):
        return np.asarray(self.fun(u), dtype=float)

    def jacobian(self, u):
        if self.jac is not None:
            return np.asarray(self.jac(u), dtype=float)
        return fd_jacobian(self.fun, u)


def fd_jacobian(fun, u, scale=None):
    u = np.asarray(u, dtype=float)
    f0 = np.asarray(fun(u), dtype=float)
    J = np.zeros((f0.size, u.size))
    for j in range(u.size):
        h = _FD_EPS * max(1.0, abs(u[j]))
        up = u.copy()
        up[j] += h
        J[:, j] = (np.asarray(fun(up)) - f0) / h
    return J


@dataclass
class LocatedEvent:
    name: str
    u: np.ndarray
    tangent: np.ndarray
    test_value: float
    segment: int                   # index of the branch point before the event


@dataclass
class Branch:
    points: list = field(default_factory=list)
    tangents: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    test_values: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    stop_reason: str = ""

    def __len__(self):
        return len(self.points)

    def point_array(self) -> np.ndarray:
        return np.asarray(self.points)


def _mp_correct(problem: ContinuationProblem, u0, tangent, tol=None, max_iters=None):
    """Moore-Penrose corrector: Newton on [F; t^T (u - u_k)] with tangent update.

    Returns (u, tangent, iterations, first_residual).
    """
    tol = problem.tol if tol is None else tol
    max_iters = problem.max_iters if max_iters is None else max_iters
    u = np.asarray(u0, dtype=float).copy()
    v = np.asarray(tangent, dtype=float).copy()
    first_res = None
    for it in range(max_iters):
        F = problem.residual(u)
        res = float(np.linalg.norm(F, ord=np.inf))
        if first_res is None:
            first_res = res
        if res <= tol:
            J = problem.jacobian(u)
            B = np.vstack([J, v])
            w = np.linalg.solve(B, np.concatenate([np.zeros(J.shape[0]), [1.0]]))
            v = w / np.linalg.norm(w)
            return u, v, it, first_res
        J = problem.jacobian(u)
        B = np.vstack([J, v])
        try:
            delta = np.linalg.solve(B, np.concatenate([F, [0.0]]))
            w = np.linalg.solve(B, np.concatenate([np.zeros(J.shape[0]), [1.0]]))
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceError(f"singular corrector system: {exc}",
                                     first_residual=first_res)
        u = u - delta
        v = w / np.linalg.norm(w)
    F = problem.residual(u)
    res = float(np.linalg.norm(F, ord=np.inf))
    if res <= tol:
        return u, v, max_iters, first_res
    raise NoConvergenceError(
        f"corrector did not reach tolerance {tol:.2e} (residual {res:.2e})",
        first_residual=first_res,
    )


def init_point(problem: ContinuationProblem, u_guess, tangent_guess=None):
    """Correct an initial guess onto the curve and return (u0, unit tangent)."""
    u = np.asarray(u_guess, dtype=float)
    if tangent_guess is None:
        J = problem.jacobian(u)
        _, _, Vh = np.linalg.svd(J)
        t = Vh[-1]
    else:
        t = np.asarray(tangent_guess, dtype=float)
        t = t / np.linalg.norm(t)
    u, t_new, _, first = _mp_correct(problem, u, t)
    if tangent_guess is not None and np.dot(t_new, tangent_guess) < 0:
        t_new = -t_new
    return u, t_new


def continue_branch(problem: ContinuationProblem, u0, t0, max_points: int = 100,
                    locate_events: bool = True) -> Branch:
    """Extend a branch by Moore-Penrose predictor-corrector steps.

    Stops at ``max_points``, at a domain-bounds violation, or on an
    unrecoverable corrector failure (stall below the minimum step).
    """
    branch = Branch()
    u = np.asarray(u0, dtype=float).copy()
    t = np.asarray(t0, dtype=float).copy()
    t = t / np.linalg.norm(t)
    names = list(problem.test_functions)
    branch.test_values = {k: [] for k in names}

    def record(u, t, h):
        branch.points.append(u.copy())
        branch.tangents.append(t.copy())
        branch.steps.append(h)
        for k in names:
            branch.test_values[k].append(_safe_test(problem.test_functions[k], u))

    record(u, t, 0.0)
    h = problem.step.initial
    while len(branch) < max_points:
        tried_shrink = False
        while True:
            u_pred = u + h * t
            try:
                u_new, t_new, iters, _ = _mp_correct(problem, u_pred, t)
            except NoConvergenceError:
                h *= problem.step.shrink
                tried_shrink = True
                if h < problem.step.min:
                    branch.stop_reason = "stall"
                    return branch
                continue
            if np.dot(t_new, t) < 0:
                t_new = -t_new
            break
        if problem.bounds is not None and not problem.bounds(u_new):
            branch.stop_reason = "bounds"
            return branch
        record(u_new, t_new, h)
        if locate_events and len(branch) >= 2:
            _detect_events(problem, branch, u, t, u_new, h)
        u, t = u_new, t_new
        if problem.adapt is not None:
            problem.adapt(u)
        if iters <= problem.step.grow_iters and not tried_shrink:
            h = min(h * problem.step.grow, problem.step.max)
    branch.stop_reason = "max_points"
    return branch


def _safe_test(fn, u):
    try:
        val = float(fn(u))
    except Exception:
        return np.nan
    return val


def _detect_events(problem, branch, u_prev, t_prev, u_new, h):
    k = len(branch) - 1
    for name in problem.test_functions:
        va = branch.test_values[name][k - 1]
        vb = branch.test_values[name][k]
        if not (np.isfinite(va) and np.isfinite(vb)):
            continue
        if va == 0.0 or va * vb >= 0:
            continue
        try:
            ev = _locate_on_segment(problem, name, u_prev, t_prev, h, va, vb)
        except (LocationError, NoConvergenceError):
            continue
        ev = replace(ev, segment=k - 1)
        branch.events.append(ev)


def _locate_on_segment(problem, name, u_from, t_from, h, va, vb,
                       tol: float = 1e-8, max_iters: int = 60) -> LocatedEvent:
    """Locate a test-function zero between two corrected points.

    Bisection/secant hybrid on the step fraction, correcting each trial point
    onto the curve before evaluating the test function.
    """
    fn = problem.test_functions[name]
    sa, sb = 0.0, 1.0
    fa, fb = va, vb
    cache = {}

    def eval_at(s):
        if s in cache:
            return cache[s]
        u_pred = u_from + s * h * t_from
        u_c, t_c, _, _ = _mp_correct(problem, u_pred, t_from)
        val = _safe_test(fn, u_c)
        if not np.isfinite(val):
            raise LocationError(f"test function {name} not finite during location")
        cache[s] = (u_c, t_c, val)
        return cache[s]

    scale = max(abs(va), abs(vb), 1e-30)
    u_c, t_c, val = None, None, None
    for _ in range(max_iters):
        # secant proposal, guarded by bisection
        s_sec = sa - fa * (sb - sa) / (fb - fa)
        if not (sa + 1e-12 < s_sec < sb - 1e-12):
            s_sec = 0.5 * (sa + sb)
        u_c, t_c, val = eval_at(s_sec)
        if abs(val) <= tol * scale or (sb - sa) * h < 1e-13 * max(1.0, np.linalg.norm(u_from)):
            return LocatedEvent(name=name, u=u_c, tangent=t_c, test_value=val, segment=-1)
        if fa * val < 0:
            sb, fb = s_sec, val
        else:
            sa, fa = s_sec, val
    if u_c is not None and abs(val) <= 1e-5 * scale:
        return LocatedEvent(name=name, u=u_c, tangent=t_c, test_value=val, segment=-1)
    raise LocationError(f"locator for {name} did not converge (last |psi|={abs(val):.2e})")


def detect_and_locate(problem: ContinuationProblem, branch: Branch, name: str) -> list[LocatedEvent]:
    """Scan a finished branch for sign changes of one test function."""
    vals = branch.test_values[name]
    events = []
    for k in range(1, len(branch)):
        va, vb = vals[k - 1], vals[k]
        if not (np.isfinite(va) and np.isfinite(vb)) or va == 0.0 or va * vb >= 0:
            continue
        ev = _locate_on_segment(problem, name, branch.points[k - 1],
                                branch.tangents[k - 1], branch.steps[k], va, vb)
        events.append(replace(ev, segment=k - 1))
    return events
