"""Defining systems for equilibrium, fold and Hopf curves, and detection /
location / classification of codimension-two points.

Fold and Hopf curves use minimally augmented systems: the state equations
plus one (fold) or two (Hopf) scalar conditions obtained from bordered
evaluations of A respectively A^2 + kappa*I, with borders adapted along the
branch.  The Hopf unknowns are (x, alpha1, alpha2, kappa) with kappa =
omega^2, which lets the branch pass through Bogdanov-Takens points into
neutral-saddle segments (kappa < 0).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .continuation import ContinuationProblem, StepControl
from .errors import DegeneracyError, NoConvergenceError, NotFoundError
from .linalg import BorderedOperator, eig_with_adjoint, inner, smallest_singular_pairs
from .normalform import GhNormalForm, HhNormalForm, ZhNormalForm, critical_gh, critical_hh, critical_zh, hopf_c1
from .tensors import DerivativeBundle, OdeModel, bundle_at, eval_rhs, jacobian_fd


@dataclass
class Codim1Point:
    kind: str                   # "fold" | "hopf" | "neutral_saddle"
    x: np.ndarray
    alpha: np.ndarray           # two active parameter values
    omega: float | None = None
    q: np.ndarray | None = None
    p: np.ndarray | None = None


@dataclass
class Codim2Point:
    kind: str                   # GH | ZH | HH | BT | CP
    x: np.ndarray
    alpha: np.ndarray
    params: np.ndarray          # full parameter vector
    eigenvalues: np.ndarray
    normal_form: object | None = None
    reduction: object | None = None
    scaled: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def solve_equilibrium(model: OdeModel, x_guess, params, tol: float = 1e-12,
                      max_iters: int = 50) -> np.ndarray:
    """Newton solve of f(x, alpha) = 0 at fixed parameters."""
    x = np.asarray(x_guess, dtype=float).copy()
    for _ in range(max_iters):
        f = eval_rhs(model, x, params)
        if np.linalg.norm(f, np.inf) < tol:
            return x
        x = x - np.linalg.solve(jacobian_fd(model, x, params), f)
    f = eval_rhs(model, x, params)
    if np.linalg.norm(f, np.inf) < 1e-8:
        return x
    raise NoConvergenceError("equilibrium Newton did not converge",
                             first_residual=float(np.linalg.norm(f)))


def _pair_sum_product(eigs, exclude=()) -> float:
    keep = [lam for i, lam in enumerate(eigs) if i not in exclude]
    prod = 1.0 + 0.0j
    for i in range(len(keep)):
        for j in range(i + 1, len(keep)):
            prod *= keep[i] + keep[j]
    return float(np.real(prod))


def _det_scalar(A) -> float:
    sign, logdet = np.linalg.slogdet(A)
    if sign == 0:
        return 0.0
    return float(sign * np.exp(logdet / A.shape[0]))


# ---------------------------------------------------------------------------
# equilibrium curve (one free parameter)
# ---------------------------------------------------------------------------

class EquilibriumCurve:
    """f(x, alpha) = 0 continued in one active parameter."""

    def __init__(self, model: OdeModel, free: int, params=None,
                 tol: float = 1e-8, step: StepControl | None = None):
        if free not in (0, 1):
            raise ValueError("free parameter index must be 0 or 1 (active pair)")
        self.model = model
        self.free = free
        self.base_params = np.asarray(params if params is not None else model.params,
                                      dtype=float)
        self.tol = tol
        self.step = step or StepControl(initial=1e-2, max=0.1)

    def full_params(self, a_free: float) -> np.ndarray:
        p = self.base_params.copy()
        p[self.model.active[self.free]] = a_free
        return p

    def unpack(self, u):
        return np.asarray(u[:-1]), float(u[-1])

    def residual(self, u):
        x, af = self.unpack(u)
        return eval_rhs(self.model, x, self.full_params(af))

    def jacobian_model(self, u) -> np.ndarray:
        x, af = self.unpack(u)
        return jacobian_fd(self.model, x, self.full_params(af))

    def problem(self) -> ContinuationProblem:
        return ContinuationProblem(
            fun=self.residual,
            ndim=self.model.n + 1,
            test_functions={
                "fold": lambda u: _det_scalar(self.jacobian_model(u)),
                "hopf": lambda u: _pair_sum_product(np.linalg.eigvals(self.jacobian_model(u))),
            },
            tol=self.tol,
            step=self.step,
        )

    def classify_event(self, name: str, u) -> Codim1Point:
        x, af = self.unpack(u)
        params = self.full_params(af)
        A = jacobian_fd(self.model, x, params)
        eigs = np.linalg.eigvals(A)
        alpha = params[list(self.model.active)]
        if name == "fold":
            return Codim1Point(kind="fold", x=x, alpha=alpha)
        # Hopf test also fires on real pairs with zero sum (neutral saddles)
        cand = eigs[np.abs(np.imag(eigs)) > 1e-8]
        if len(cand):
            k = int(np.argmin(np.abs(np.real(cand))))
            lam = cand[k]
            if abs(np.real(lam)) < 1e-6 * max(1.0, np.linalg.norm(A, 2)):
                omega = abs(float(np.imag(lam)))
                e = eig_with_adjoint(A, 1j * omega)
                return Codim1Point(kind="hopf", x=x, alpha=alpha, omega=omega,
                                   q=e.q, p=e.p)
        return Codim1Point(kind="neutral_saddle", x=x, alpha=alpha)


def equilibrium_system(model: OdeModel, free: int, params=None, **kw) -> ContinuationProblem:
    return EquilibriumCurve(model, free, params, **kw).problem()


# ---------------------------------------------------------------------------
# fold curve
# ---------------------------------------------------------------------------

class FoldCurve:
    """Minimally augmented limit-point curve in two active parameters."""

    def __init__(self, model: OdeModel, params=None, tol: float = 1e-8,
                 step: StepControl | None = None):
        self.model = model
        self.base_params = np.asarray(params if params is not None else model.params,
                                      dtype=float)
        self.tol = tol
        self.step = step or StepControl(initial=1e-2, max=0.1)
        self.borders = None  # (b, c) columns

    def full_params(self, a):
        p = self.base_params.copy()
        p[list(self.model.active)] = a
        return p

    def unpack(self, u):
        n = self.model.n
        return np.asarray(u[:n]), np.asarray(u[n:n + 2])

    def _A(self, u):
        x, a = self.unpack(u)
        return jacobian_fd(self.model, x, self.full_params(a))

    def init_borders(self, u):
        right, left, _ = smallest_singular_pairs(self._A(u), 1)
        b, c = np.real(left[:, 0]), np.real(right[:, 0])
        if self.borders is not None:
            # keep border orientation continuous along the branch so the
            # bordered null vectors (and the bt/cp tests built from them)
            # do not flip sign at every adaptation
            if np.dot(b, self.borders[0]) < 0:
                b = -b
            if np.dot(c, self.borders[1]) < 0:
                c = -c
        self.borders = (b, c)

    def _bordered(self, A):
        b, c = self.borders
        return BorderedOperator(A, b, c)

    def null_vectors(self, u):
        """Right/left null approximations from the bordered solves."""
        A = self._A(u)
        op = self._bordered(A)
        n = self.model.n
        v, _ = op.solve(np.zeros(n), beta=1.0)
        w, _ = op.solve_transposed([1.0])
        return np.real(v), np.real(w), A

    def residual(self, u):
        x, a = self.unpack(u)
        A = self._A(u)
        op = self._bordered(A)
        _, g = op.solve(np.zeros(self.model.n), beta=1.0)
        f = eval_rhs(self.model, x, self.full_params(a))
        return np.concatenate([f, [np.real(g)]])

    def adapt(self, u):
        self.init_borders(u)

    def _bt_test(self, u):
        v, w, _ = self.null_vectors(u)
        return float(w @ v) / (np.linalg.norm(v) * np.linalg.norm(w))

    def _zh_test(self, u):
        eigs = np.linalg.eigvals(self._A(u))
        k = int(np.argmin(np.abs(eigs)))
        return _pair_sum_product(eigs, exclude=(k,))

    def _cp_test(self, u):
        x, a = self.unpack(u)
        v, w, A = self.null_vectors(u)
        q = v / np.linalg.norm(v)
        p = w / (w @ q)
        bundle = bundle_at(self.model, x, self.full_params(a), order=2)
        return float(np.real(inner(p, bundle.B(q, q))))

    def problem(self) -> ContinuationProblem:
        return ContinuationProblem(
            fun=self.residual,
            ndim=self.model.n + 2,
            test_functions={
                "bt": self._bt_test,
                "zh": self._zh_test,
                "cp": self._cp_test,
            },
            tol=self.tol,
            step=self.step,
            adapt=self.adapt,
        )

    def initial_point(self, point: Codim1Point):
        u0 = np.concatenate([point.x, point.alpha])
        self.init_borders(u0)
        return u0

    def classify_event(self, name: str, u) -> Codim1Point:
        x, a = self.unpack(u)
        if name == "zh":
            eigs = np.linalg.eigvals(self._A(u))
            pair = eigs[np.imag(eigs) > 1e-8]
            omega = float(np.imag(pair[np.argmin(np.abs(np.real(pair)))])) if len(pair) else None
            return Codim1Point(kind="hopf", x=x, alpha=a, omega=omega)
        return Codim1Point(kind="fold", x=x, alpha=a)


def fold_system(model: OdeModel, params=None, **kw) -> ContinuationProblem:
    return FoldCurve(model, params, **kw).problem()


# ---------------------------------------------------------------------------
# Hopf curve
# ---------------------------------------------------------------------------

class HopfCurve:
    """Minimally augmented Hopf curve in (x, alpha1, alpha2, kappa=omega^2).

    Two scalar conditions come from a rank-2 bordered evaluation of
    A^2 + kappa*I; the 2x2 bordered block vanishes where A has the pair
    +-i*sqrt(kappa) (or the neutral-saddle pair +-sqrt(-kappa))."""

    def __init__(self, model: OdeModel, params=None, tol: float = 1e-8,
                 step: StepControl | None = None):
        self.model = model
        self.base_params = np.asarray(params if params is not None else model.params,
                                      dtype=float)
        self.tol = tol
        self.step = step or StepControl(initial=1e-2, max=0.1)
        self.borders = None

    def full_params(self, a):
        p = self.base_params.copy()
        p[list(self.model.active)] = a
        return p

    def unpack(self, u):
        n = self.model.n
        return np.asarray(u[:n]), np.asarray(u[n:n + 2]), float(u[n + 2])

    def _A(self, u):
        x, a, _ = self.unpack(u)
        return jacobian_fd(self.model, x, self.full_params(a))

    def _M(self, u):
        A = self._A(u)
        _, _, kappa = self.unpack(u)
        return A @ A + kappa * np.eye(self.model.n), A

    def init_borders(self, u):
        M, _ = self._M(u)
        right, left, _ = smallest_singular_pairs(M, 2)
        b, c = np.real(left), np.real(right)
        if self.borders is not None:
            for j in range(2):
                if np.dot(b[:, j], self.borders[0][:, j]) < 0:
                    b[:, j] = -b[:, j]
                if np.dot(c[:, j], self.borders[1][:, j]) < 0:
                    c[:, j] = -c[:, j]
        self.borders = (b, c)

    def _G(self, u):
        M, A = self._M(u)
        b, c = self.borders
        op = BorderedOperator(M, b, c)
        n = self.model.n
        rhs = np.zeros((n + 2, 2))
        rhs[n:, :] = np.eye(2)
        sol = np.linalg.solve(op.matrix, rhs)
        return np.real(sol[n:, :]), A

    def residual(self, u):
        x, a, _ = self.unpack(u)
        G, _ = self._G(u)
        f = eval_rhs(self.model, x, self.full_params(a))
        return np.concatenate([f, [G[0, 0], G[1, 0]]])

    def adapt(self, u):
        self.init_borders(u)

    # -- test functions ------------------------------------------------
    def _critical_pair(self, u):
        x, a, kappa = self.unpack(u)
        A = self._A(u)
        eigs = np.linalg.eigvals(A)
        if kappa <= 1e-12:
            return None, eigs, A
        omega = np.sqrt(kappa)
        k = int(np.argmin(np.abs(eigs - 1j * omega)))
        return k, eigs, A

    def _re_c1_test(self, u):
        x, a, kappa = self.unpack(u)
        if kappa <= 1e-10:
            return np.nan
        omega = np.sqrt(kappa)
        try:
            bundle = bundle_at(self.model, x, self.full_params(a), order=3)
            e = eig_with_adjoint(bundle.A, 1j * omega, tol=1e-4)
            return float(np.real(hopf_c1(bundle, e)))
        except (NotFoundError, DegeneracyError):
            return np.nan

    def _zh_test(self, u):
        return _det_scalar(self._A(u))

    def _hh_test(self, u):
        k, eigs, A = self._critical_pair(u)
        if k is None:
            return np.nan
        lam = eigs[k]
        kc = int(np.argmin(np.abs(eigs - np.conj(lam) + 0j)
                           + np.where(np.arange(len(eigs)) == k, np.inf, 0.0)))
        return _pair_sum_product(eigs, exclude=(k, kc))

    def _bt_test(self, u):
        return self.unpack(u)[2]

    def problem(self) -> ContinuationProblem:
        return ContinuationProblem(
            fun=self.residual,
            ndim=self.model.n + 3,
            test_functions={
                "gh": self._re_c1_test,
                "zh": self._zh_test,
                "hh": self._hh_test,
                "bt": self._bt_test,
            },
            tol=self.tol,
            step=self.step,
            adapt=self.adapt,
        )

    def initial_point(self, point: Codim1Point):
        if point.kind != "hopf" or point.omega is None:
            raise ValueError("Hopf curve must start from a located Hopf point")
        u0 = np.concatenate([point.x, point.alpha, [point.omega**2]])
        self.init_borders(u0)
        return u0

    def classify_event(self, name: str, u) -> Codim1Point:
        """Codim-1 starting data from an event on this curve (fold curves may
        be seeded at Bogdanov-Takens or zero-Hopf events)."""
        x, a, kappa = self.unpack(u)
        if name in ("bt", "zh"):
            return Codim1Point(kind="fold", x=x, alpha=a)
        omega = float(np.sqrt(max(kappa, 0.0)))
        return Codim1Point(kind="hopf", x=x, alpha=a, omega=omega)


def hopf_system(model: OdeModel, params=None, **kw) -> ContinuationProblem:
    return HopfCurve(model, params, **kw).problem()


# ---------------------------------------------------------------------------
# codim-2 classification
# ---------------------------------------------------------------------------

GH_D2_TOL = 1e-8
ZH_NONDEG_TOL = 1e-10
HH_NONDEG_TOL = 1e-10


def classify_codim2(model: OdeModel, curve, name: str, u) -> Codim2Point:
    """Fill eigendata, normal-form and scaled coefficients at a located event.

    ``curve`` is the HopfCurve/FoldCurve the event was located on; ``name``
    the test function that fired.
    """
    if isinstance(curve, HopfCurve):
        x, a, kappa = curve.unpack(u)
    else:
        x, a = curve.unpack(u)
        kappa = None
    params = curve.full_params(a)
    A = jacobian_fd(model, x, params)
    eigs = np.linalg.eigvals(A)
    point = Codim2Point(kind="?", x=x, alpha=a, params=params, eigenvalues=eigs)
    scale = max(1.0, float(np.linalg.norm(A, 2)))

    if name == "bt":
        point.kind = "BT"
        return point
    if name == "cp":
        point.kind = "CP"
        return point

    if name == "gh":
        omega = np.sqrt(kappa)
        bundle = bundle_at(model, x, params, order=5)
        eig = eig_with_adjoint(bundle.A, 1j * omega, tol=1e-4)
        nf = critical_gh(bundle, eig)
        point.kind = "GH"
        point.normal_form = nf
        point.scaled = nf.scaled()
        point.info = {"omega": nf.omega, "c1": nf.c1, "c2": nf.c2,
                      "bundle_order": 5}
        if abs(nf.d2) < GH_D2_TOL * scale:
            point.warnings.append("degenerate: |d2| below tolerance, switching refused")
        if abs(nf.d1) > 1e-4 * scale:
            point.warnings.append(f"Re c1 = {nf.d1:.2e} not small at located GH")
        return point

    if name == "zh":
        zero_idx = int(np.argmin(np.abs(eigs)))
        pair = [lam for i, lam in enumerate(eigs)
                if i != zero_idx and np.imag(lam) > 1e-8]
        if not pair or abs(eigs[zero_idx]) > 1e-5 * scale:
            point.kind = "ZH?"
            point.warnings.append("eigenvalue configuration does not match zero-Hopf")
            return point
        lam = pair[int(np.argmin(np.abs(np.real(pair))))]
        if abs(np.real(lam)) > 1e-5 * scale:
            point.kind = "ZH?"
            point.warnings.append("no imaginary pair at located zero-eigenvalue point")
            return point
        bundle = bundle_at(model, x, params, order=3)
        eig0 = eig_with_adjoint(bundle.A, 0.0, tol=1e-4)
        eigH = eig_with_adjoint(bundle.A, 1j * np.imag(lam), tol=1e-4)
        nf = critical_zh(bundle, eig0, eigH)
        point.kind = "ZH"
        point.normal_form = nf
        point.scaled = nf.scaled()
        point.info = {"omega": nf.omega, "torus_sign": nf.torus_sign}
        if abs(nf.f200 * np.real(nf.g110)) < ZH_NONDEG_TOL:
            point.warnings.append("degenerate: f200 * Re(g110) ~ 0, switching refused")
        return point

    if name == "hh":
        omega = np.sqrt(kappa)
        k1 = int(np.argmin(np.abs(eigs - 1j * omega)))
        others = [
            (i, lam) for i, lam in enumerate(eigs)
            if i != k1 and np.imag(lam) > 1e-8
            and abs(lam - eigs[k1]) > 1e-8 * scale
        ]
        if not others:
            point.kind = "HH?"
            point.warnings.append("no second imaginary pair at located point")
            return point
        i2, lam2 = min(others, key=lambda t: abs(np.real(t[1])))
        if abs(np.real(lam2)) > 1e-5 * scale:
            point.kind = "HH?"
            point.warnings.append("second pair is not on the imaginary axis")
            return point
        bundle = bundle_at(model, x, params, order=5)
        e1 = eig_with_adjoint(bundle.A, 1j * omega, tol=1e-4)
        e2 = eig_with_adjoint(bundle.A, 1j * np.imag(lam2), tol=1e-4)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            nf = critical_hh(bundle, e1, e2)
        point.kind = "HH"
        point.normal_form = nf
        point.scaled = nf.scaled()
        point.info = {"omega1": nf.omega1, "omega2": nf.omega2,
                      "ratio": nf.omega1 / nf.omega2}
        point.warnings.extend(str(w.message) for w in caught)
        if abs(np.real(nf.f2100) * np.real(nf.g0021)) < HH_NONDEG_TOL:
            point.warnings.append("degenerate: Re f2100 * Re g0021 ~ 0, switching refused")
        return point

    raise ValueError(f"unknown event name {name!r}")
