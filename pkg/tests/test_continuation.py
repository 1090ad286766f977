import numpy as np
import pytest

from bifkit.continuation import (
    Branch,
    ContinuationProblem,
    StepControl,
    continue_branch,
    detect_and_locate,
    init_point,
)
from bifkit.errors import NoConvergenceError


def circle_problem(**kw):
    return ContinuationProblem(
        fun=lambda u: np.array([u[0] ** 2 + u[1] ** 2 - 1.0]),
        ndim=2,
        test_functions={"x": lambda u: u[0]},
        **kw,
    )


def test_init_point_circle():
    prob = circle_problem()
    u0, t0 = init_point(prob, np.array([1.1, 0.0]))
    np.testing.assert_allclose(u0, [1.0, 0.0], atol=1e-8)
    np.testing.assert_allclose(np.abs(t0), [0.0, 1.0], atol=1e-8)


def test_init_point_linear_exact_start():
    prob = ContinuationProblem(fun=lambda u: np.array([u[0] + 2 * u[1] - 1.0]), ndim=2)
    u0, t0 = init_point(prob, np.array([1.0, 0.0]))
    np.testing.assert_allclose(u0, [1.0, 0.0], atol=1e-14)
    assert abs(prob.residual(u0)[0]) < 1e-14


def test_init_point_divergence_carries_residual():
    prob = ContinuationProblem(
        fun=lambda u: np.array([np.exp(u[0]) + 1.0]), ndim=2, max_iters=4)
    with pytest.raises(NoConvergenceError) as err:
        init_point(prob, np.array([3.0, 0.0]))
    assert err.value.first_residual is not None
    assert err.value.first_residual > 1.0


def test_circle_branch_stays_on_curve():
    prob = circle_problem(tol=1e-10)
    u0, t0 = init_point(prob, np.array([1.0, 0.0]))
    branch = continue_branch(prob, u0, t0, max_points=100)
    assert len(branch) == 100
    radii = np.linalg.norm(branch.point_array(), axis=1)
    assert np.max(np.abs(radii - 1.0)) < 1e-10
    # tangent orientation never flips
    dots = [np.dot(branch.tangents[i], branch.tangents[i + 1]) for i in range(98)]
    assert min(dots) > 0


def test_event_location_on_circle():
    prob = circle_problem(tol=1e-12, step=StepControl(initial=0.1, max=0.25))
    u0, t0 = init_point(prob, np.array([1.0, 0.0]), tangent_guess=np.array([0.0, 1.0]))
    branch = continue_branch(prob, u0, t0, max_points=40)
    evts = [e for e in branch.events if e.name == "x"]
    assert evts
    located = evts[0].u
    np.testing.assert_allclose(np.abs(located), [0.0, 1.0], atol=1e-8)
    assert abs(located[0]) <= 1e-8


def test_branch_reversal_retraces():
    prob = circle_problem(tol=1e-12, step=StepControl(initial=0.05, max=0.05))
    u0, t0 = init_point(prob, np.array([1.0, 0.0]), tangent_guess=np.array([0.0, 1.0]))
    fwd = continue_branch(prob, u0, t0, max_points=10, locate_events=False)
    back = continue_branch(prob, fwd.points[-1], -fwd.tangents[-1],
                           max_points=10, locate_events=False)
    # the reversed branch passes within a step of the forward points
    d = np.linalg.norm(back.points[-1] - fwd.points[0])
    assert d < 0.06


def test_quadratic_corrector_convergence():
    # residuals along the Moore-Penrose iteration contract quadratically
    from bifkit.continuation import _mp_correct

    prob = circle_problem(tol=1e-14, max_iters=12)
    prob.jac = lambda u: np.array([[2 * u[0], 2 * u[1]]])
    residuals = []
    orig = prob.fun

    def recording(u):
        r = orig(u)
        residuals.append(abs(float(r[0])))
        return r

    prob.fun = recording
    _mp_correct(prob, np.array([1.18, 0.1]), np.array([0.0, 1.0]))
    rs = [r for r in residuals if r > 1e-15]
    ratios = [rs[i + 1] / rs[i] ** 2 for i in range(len(rs) - 1) if rs[i] < 1e-2]
    assert ratios and all(r < 10.0 for r in ratios)


def test_stall_error_reported():
    calls = {"n": 0}

    def fun(u):
        # curve that ends abruptly: residual jumps to something insoluble
        if u[1] > 0.5:
            return np.array([1.0 + u[0] ** 2])
        return np.array([u[0]])

    prob = ContinuationProblem(fun=fun, ndim=2, max_iters=5,
                               step=StepControl(initial=0.3, min=1e-6))
    branch = continue_branch(prob, np.array([0.0, 0.0]), np.array([0.0, 1.0]),
                             max_points=50, locate_events=False)
    assert branch.stop_reason == "stall"
    assert all(abs(p[0]) < 1e-6 for p in branch.points)


def test_detect_and_locate_on_finished_branch():
    prob = circle_problem(tol=1e-12, step=StepControl(initial=0.12, max=0.3))
    u0, t0 = init_point(prob, np.array([1.0, 0.0]), tangent_guess=np.array([0.0, 1.0]))
    branch = continue_branch(prob, u0, t0, max_points=30, locate_events=False)
    events = detect_and_locate(prob, branch, "x")
    assert len(events) >= 1
    for e in events:
        assert abs(e.u[0]) < 1e-8
        assert abs(abs(e.u[1]) - 1.0) < 1e-8
