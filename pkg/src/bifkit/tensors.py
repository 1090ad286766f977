"""ODE models and multilinear derivative forms.

The homological-equation machinery consumes directional applications of the
state derivatives A, B, C, D, E5 and the mixed parameter derivatives J1, A1,
B1, C1 of a vector field at a base point.  Tensors of order >= 3 are never
materialized; only applications to given vectors are exposed.

Two evaluation backends are available:

* ``jet``  -- exact Taylor (automatic-differentiation) arithmetic; requires
  the model right-hand side to be written with plain ``+ - * /`` scalar
  operations (all builtin models are).
* ``fd``   -- central finite differences on directional derivatives, with a
  per-order step ``eps**(1/(order+2)) * max(1, |x|)``.

Complex vector arguments are supported by multilinearity over the real
tensors: the jet backend evaluates complex jets directly, the fd backend
expands into real and imaginary parts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, InputError
from .jets import Jet, directional_series

_EPS = np.finfo(float).eps

# offsets/weights of central stencils for the k-th derivative, O(h^2) accuracy
_CENTRAL_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
    5: ((-3, -2, -1, 1, 2, 3), (-0.5, 2.0, -2.5, 2.5, -2.0, 0.5)),
}


@dataclass(frozen=True)
class OdeModel:
    """Smooth vector field f(x, alpha) with two active continuation parameters.

    ``rhs`` maps (state, params) to a length-``n`` sequence and must accept
    scalar-like components (floats, numpy arrays, jets) so that one
    implementation serves plain evaluation, batched evaluation and automatic
    differentiation.
    """

    name: str
    n: int
    p_total: int
    active: tuple[int, int]
    rhs: Callable
    params: np.ndarray
    diff_mode: str = "jet"  # "jet" or "fd"
    state_names: tuple = ()
    param_names: tuple = ()

    def __post_init__(self):
        if len(self.active) != 2 or self.active[0] == self.active[1]:
            raise InputError("exactly two distinct active parameter indices required")
        for idx in self.active:
            if not (0 <= idx < self.p_total):
                raise InputError(f"active parameter index {idx} out of range")
        object.__setattr__(self, "params", np.asarray(self.params, dtype=float))

    def with_params(self, values) -> np.ndarray:
        """Full parameter vector with the active pair replaced by ``values``."""
        p = self.params.copy()
        p[list(self.active)] = values
        return p

    def active_values(self, params) -> np.ndarray:
        return np.asarray(params, dtype=float)[list(self.active)]


def eval_rhs(model: OdeModel, x, params) -> np.ndarray:
    """Evaluate f(x, alpha); broadcasts over a trailing batch axis of x."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != model.n:
        raise InputError(f"state length {x.shape[0]} != model dimension {model.n}")
    params = np.asarray(params, dtype=float)
    if params.shape[0] != model.p_total:
        raise InputError(f"parameter length {params.shape[0]} != {model.p_total}")
    values = model.rhs(list(x), list(params))
    if len(values) != model.n:
        raise InputError("rhs returned wrong dimension")
    batch = x.shape[1:]
    out = np.stack([np.broadcast_to(np.asarray(v, dtype=float), batch) for v in values])
    return out


class MultilinearForm:
    """Symmetric multilinear application handle of fixed arity."""

    def __init__(self, bundle: "DerivativeBundle", state_arity: int, param_slots: int = 0):
        self.bundle = bundle
        self.state_arity = state_arity
        self.param_slots = param_slots

    @property
    def arity(self) -> int:
        return self.state_arity + self.param_slots

    def __call__(self, *vectors):
        if len(vectors) != self.arity:
            raise InputError(
                f"form of arity {self.arity} applied to {len(vectors)} arguments"
            )
        state_vecs = vectors[: self.state_arity]
        pdir = None
        if self.param_slots:
            pdir = _as_param_direction(vectors[self.state_arity])
        return self.bundle._apply(state_vecs, pdir)


def _as_param_direction(v):
    """Accept an active-parameter index (0/1) or a 2-vector direction."""
    if isinstance(v, (int, np.integer)):
        e = np.zeros(2)
        e[int(v)] = 1.0
        return e
    v = np.asarray(v, dtype=complex)
    if v.shape != (2,):
        raise InputError("parameter direction must be index 0/1 or a 2-vector")
    return v


class DerivativeBundle:
    """All derivative forms of a model at a base point (x0, alpha0).

    Applications are cached by argument content, which pays off in the
    order-by-order center-manifold recursion where the same vectors recur.
    """

    def __init__(self, model: OdeModel, x0, params0, order: int = 3, mode: str | None = None):
        if not (1 <= order <= 5):
            raise InputError("derivative order must be in 1..5")
        self.model = model
        self.x0 = np.asarray(x0, dtype=float)
        self.params0 = np.asarray(params0, dtype=float)
        self.order = order
        self.mode = mode or model.diff_mode
        f0 = eval_rhs(model, self.x0, self.params0)
        if not np.all(np.isfinite(f0)):
            raise EvaluationError("non-finite rhs at bundle base point")
        self.f0 = f0
        self._cache: dict = {}
        self.A = self._jacobian()
        self.J1 = np.column_stack(
            [np.real(self._apply((), _as_param_direction(j))) for j in (0, 1)]
        )

    # -- public forms -----------------------------------------------------
    def form(self, state_arity: int, param_slots: int = 0) -> MultilinearForm:
        return MultilinearForm(self, state_arity, param_slots)

    def B(self, u, v):
        return self._apply((u, v), None)

    def C(self, u, v, w):
        return self._apply((u, v, w), None)

    def D4(self, u, v, w, z):
        return self._apply((u, v, w, z), None)

    def E5(self, u, v, w, z, s):
        return self._apply((u, v, w, z, s), None)

    def A1(self, u, pdir):
        return self._apply((u,), _as_param_direction(pdir))

    def B1(self, u, v, pdir):
        return self._apply((u, v), _as_param_direction(pdir))

    def C1(self, u, v, w, pdir):
        return self._apply((u, v, w), _as_param_direction(pdir))

    def apply_A(self, u):
        return self.A @ np.asarray(u)

    # -- internals ---------------------------------------------------------
    def _jacobian(self) -> np.ndarray:
        n = self.model.n
        cols = []
        for d in range(n):
            e = np.zeros(n)
            e[d] = 1.0
            cols.append(np.real(self._apply((e,), None)))
        return np.column_stack(cols)

    def _apply(self, state_vecs: Sequence, pdir) -> np.ndarray:
        k = len(state_vecs) + (0 if pdir is None else 1)
        if k == 0:
            raise InputError("empty multilinear application")
        if k > self.order:
            raise InputError(f"application of order {k} exceeds bundle order {self.order}")
        key = self._key(state_vecs, pdir)
        hit = self._cache.get(key)
        if hit is not None:
            return hit.copy()
        vecs = [(np.asarray(v, dtype=complex), None) for v in state_vecs]
        for xv, _ in vecs:
            if xv.shape != (self.model.n,):
                raise InputError("state argument has wrong length")
        if pdir is not None:
            vecs.append((np.zeros(self.model.n, dtype=complex), np.asarray(pdir, dtype=complex)))
        if self.mode == "jet":
            out = self._polarize(vecs, self._phi_jet)
        else:
            out = self._apply_fd(vecs)
        if not np.all(np.isfinite(out)):
            raise EvaluationError("non-finite derivative application")
        self._cache[key] = out
        return out.copy()

    def _key(self, state_vecs, pdir):
        parts = sorted(np.asarray(v, dtype=complex).tobytes() for v in state_vecs)
        tail = None if pdir is None else np.asarray(pdir, dtype=complex).tobytes()
        return (len(state_vecs), tuple(parts), tail)

    def _polarize(self, vecs, phi):
        """k-linear form via polarization: D^k f[v1..vk] = sum over subsets S of
        (-1)^(k-|S|) [t^k] f(y0 + t*v_S), with phi returning the raw Taylor
        coefficient (k-th directional derivative divided by k!)."""
        k = len(vecs)
        n = self.model.n
        total = np.zeros(n, dtype=complex)
        for r in range(1, k + 1):
            sign = (-1.0) ** (k - r)
            for subset in itertools.combinations(range(k), r):
                xd = np.sum([vecs[i][0] for i in subset], axis=0)
                pd = None
                pparts = [vecs[i][1] for i in subset if vecs[i][1] is not None]
                if pparts:
                    pd = np.sum(pparts, axis=0)
                total += sign * phi(xd, pd, k)
        return total

    def _phi_jet(self, x_dir, p_dir, k):
        """k-th directional derivative of f along the combined direction (exact)."""
        pfull = None
        if p_dir is not None:
            pfull = np.zeros(self.model.p_total, dtype=complex)
            pfull[list(self.model.active)] = p_dir
        series = directional_series(
            self.model.rhs, self.x0.astype(complex), list(self.params0), x_dir, pfull, k
        )
        return series[k]

    def _phi_fd(self, x_dir, p_dir, k):
        """Central-difference k-th directional derivative (real directions)."""
        offsets, weights = _CENTRAL_STENCILS[k]
        scale = max(1.0, float(np.linalg.norm(self.x0)))
        h = _EPS ** (1.0 / (k + 2)) * scale
        acc = np.zeros(self.model.n)
        for off, w in zip(offsets, weights):
            if off == 0:
                fx = self.f0
            else:
                x = self.x0 + off * h * np.real(x_dir)
                p = self.params0.copy()
                if p_dir is not None:
                    p[list(self.model.active)] += off * h * np.real(p_dir)
                fx = eval_rhs(self.model, x, p)
            acc = acc + w * fx
        return acc / (h**k * _factorial(k))

    def _apply_fd(self, vecs):
        """Expand complex arguments into real/imag parts, then polarize."""
        n = self.model.n
        split = []
        for xv, pv in vecs:
            re = (np.real(xv), None if pv is None else np.real(pv))
            im = (np.imag(xv), None if pv is None else np.imag(pv))
            complexy = bool(np.any(np.imag(xv) != 0) or (pv is not None and np.any(np.imag(pv) != 0)))
            split.append((re, im, complexy))
        total = np.zeros(n, dtype=complex)
        for combo in itertools.product(*[(0, 1) if s[2] else (0,) for s in split]):
            parts = [split[i][c] for i, c in enumerate(combo)]
            factor = 1j ** sum(combo)
            total += factor * self._polarize(parts, self._phi_fd)
        return total


def _factorial(k: int) -> float:
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


def bundle_at(model: OdeModel, x, params, order: int = 3, mode: str | None = None) -> DerivativeBundle:
    """Assemble the derivative bundle at (x, params) up to ``order``."""
    return DerivativeBundle(model, x, params, order=order, mode=mode)


def apply_multilinear(form: MultilinearForm, *vectors):
    """Symmetric multilinear evaluation; complex arguments by bilinearity."""
    return form(*vectors)


def jacobian_batch(model: OdeModel, X: np.ndarray, params) -> np.ndarray:
    """Model Jacobians at a batch of states, shape (batch, n, n).

    Uses first-order jets with array coefficients; one rhs sweep per state
    direction regardless of batch size.  Falls back to finite differences for
    models whose rhs is not jet-safe.
    """
    X = np.asarray(X, dtype=float)
    n, nb = X.shape
    out = np.zeros((nb, n, n))
    params = list(np.asarray(params, dtype=float))
    if model.diff_mode != "jet":
        h = np.sqrt(_EPS) * max(1.0, float(np.max(np.abs(X))))
        for d in range(n):
            e = np.zeros((n, 1))
            e[d] = h
            fp = eval_rhs(model, X + e, np.asarray(params))
            fm = eval_rhs(model, X - e, np.asarray(params))
            out[:, :, d] = ((fp - fm) / (2 * h)).T
        return out
    for d in range(n):
        xj = [Jet.seed(X[i], np.ones(nb) if i == d else np.zeros(nb), 1) for i in range(n)]
        res = model.rhs(xj, params)
        for i, r in enumerate(res):
            if isinstance(r, Jet):
                c1 = r.c[1]
                out[:, i, d] = np.real(c1) if np.ndim(c1) else np.real(np.full(nb, c1))
            # constant rows have zero derivative
    return out


def jacobian_at(model: OdeModel, x, params) -> np.ndarray:
    """Single-point model Jacobian."""
    return jacobian_batch(model, np.asarray(x, dtype=float)[:, None], params)[0]


def param_jacobian_batch(model: OdeModel, X: np.ndarray, params) -> np.ndarray:
    """d f/d alpha_active at a batch of states, shape (batch, n, 2)."""
    X = np.asarray(X, dtype=float)
    n, nb = X.shape
    out = np.zeros((nb, n, 2))
    params = np.asarray(params, dtype=float)
    if model.diff_mode != "jet":
        h = np.sqrt(_EPS)
        for j, idx in enumerate(model.active):
            pp, pm = params.copy(), params.copy()
            pp[idx] += h
            pm[idx] -= h
            out[:, :, j] = ((eval_rhs(model, X, pp) - eval_rhs(model, X, pm)) / (2 * h)).T
        return out
    for j, idx in enumerate(model.active):
        pj = []
        for q in range(model.p_total):
            if q == idx:
                pj.append(Jet.seed(params[q], 1.0, 1))
            else:
                pj.append(params[q])
        xj = [Jet.seed(X[i], np.zeros(nb), 1) for i in range(n)]
        res = model.rhs(xj, pj)
        for i, r in enumerate(res):
            if isinstance(r, Jet):
                c1 = r.c[1]
                out[:, i, j] = np.real(c1) if np.ndim(c1) else np.real(np.full(nb, c1))
    return out


def jacobian_fd(model: OdeModel, x, params) -> np.ndarray:
    """Central-difference Jacobian in one batched rhs sweep (fast path for
    defining-system assembly; bundles keep the exact backend)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _EPS ** (1.0 / 3.0) * max(1.0, float(np.max(np.abs(x))))
    pts = np.empty((n, 2 * n))
    for d in range(n):
        pts[:, d] = x
        pts[d, d] += h
        pts[:, n + d] = x
        pts[d, n + d] -= h
    F = eval_rhs(model, pts, np.asarray(params, dtype=float))
    return (F[:, :n] - F[:, n:]) / (2.0 * h)
