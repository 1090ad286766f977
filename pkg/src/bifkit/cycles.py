"""Minimally augmented defining systems for limit-point-of-cycles and
Neimark-Sacker curves, plus cycle diagnostics.

Both systems share the collocation residuals, an integral phase condition
against the previous profile, and bordered scalar conditions built from the
ring of interval transfer maps:

* LPC: rank-1 bordering of ``Q = [[M - I, y], [f(x0)^T, 0]]`` where M is the
  monodromy and y the period column; Q drops rank exactly where the trivial
  multiplier 1 has algebraic multiplicity two.
* NS: rank-2 bordering of ``M^2 - 2kM + I`` with the multiplier real part k
  as an extra unknown; the 2x2 bordered block vanishes on cycles carrying a
  multiplier pair with product one (torus for |k|<1, neutral saddle beyond).

Scalar-row derivatives use the bordered adjoint identity with transfer-map
differentials obtained from simultaneous (colored) finite differences, one
batched assembly per independent perturbation class.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .collocation import CollocationCycle, CycleSpace, equidistant_to_collocation
from .continuation import ContinuationProblem, StepControl
from .errors import NoConvergenceError, RankError
from .linalg import smallest_singular_pairs
from .switching import PredictorSample
from .tensors import eval_rhs, jacobian_fd, param_jacobian_batch

_CLASS_FD_STEP = 3e-5


def _fd_A_batch(model, X, params):
    """Cheap central-difference Jacobians at a batch of states (class-FD path)."""
    n, nb = X.shape
    h = 6e-6 * max(1.0, float(np.max(np.abs(X))))
    out = np.empty((nb, n, n))
    for d in range(n):
        e = np.zeros((n, 1))
        e[d] = h
        out[:, :, d] = ((eval_rhs(model, X + e, params) - eval_rhs(model, X - e, params)) / (2 * h)).T
    return out


class _CycleSystem:
    """Shared machinery: unknown packing, residual blocks, transfer maps."""

    n_aux = 0  # extra scalar unknowns beyond (T, alpha)

    def __init__(self, model, N=20, m=4, tol=1e-8, step=None):
        self.model = model
        self.space = CycleSpace.equidistant(model, N, m)
        self.tol = tol
        self.step = step or StepControl(initial=5e-3, min=1e-10, max=0.1)
        self.ref_profile = None
        self.borders = None
        self.base_params = np.asarray(model.params, dtype=float)

    # -- packing ----------------------------------------------------------
    @property
    def ndim(self):
        return self.space.nprofile + 3 + self.n_aux

    def pack(self, profile, T, alpha, aux=()):
        return np.concatenate([np.asarray(profile, float).ravel(),
                               [T], np.asarray(alpha, float), list(aux)])

    def unpack(self, u):
        nprof = self.space.nprofile
        profile = np.asarray(u[:nprof]).reshape(self.space.npoints, self.model.n)
        T = float(u[nprof])
        alpha = np.asarray(u[nprof + 1:nprof + 3])
        aux = np.asarray(u[nprof + 3:])
        return profile, T, alpha, aux

    def full_params(self, alpha):
        p = self.base_params.copy()
        p[list(self.model.active)] = alpha
        return p

    def cycle(self, u) -> CollocationCycle:
        profile, T, alpha, aux = self.unpack(u)
        return CollocationCycle(space=self.space, profile=profile, T=T, alpha=alpha,
                                k=float(aux[0]) if len(aux) else None)

    # -- shared pieces ------------------------------------------------------
    def _core_residual(self, profile, T, alpha):
        params = self.full_params(alpha)
        col = self.space.collocation_residual(profile, T, params)
        phase = self.space.phase_residual(profile, self.ref_profile)
        return col, phase, params

    def _maps(self, profile, T, params, fast=False):
        if fast:
            n = self.model.n
            XG = self.space.gauss_states(profile).reshape(-1, n).T
            A = _fd_A_batch(self.model, XG, params).reshape(self.space.N, self.space.m, n, n)
            return self.space.transfer_maps(profile, T, params, A=A)
        return self.space.transfer_maps(profile, T, params)

    def monodromy_data(self, u, fast=False):
        profile, T, alpha, aux = self.unpack(u)
        params = self.full_params(alpha)
        S = self._maps(profile, T, params, fast=fast)
        Mt = self.space.ring_product(S)
        n = self.model.n
        return S, Mt[:n, :n], Mt[:n, n], Mt[:n, n + 1:], params

    # -- scalar-condition derivative machinery ------------------------------
    def _class_members(self):
        """Perturbation classes for profile unknowns: (member point list, l)."""
        m, N = self.space.m, self.space.N
        classes = []
        for l in range(1, m):
            classes.append([j * m + l for j in range(N)])
        classes.append([j * m for j in range(0, N, 2)])
        classes.append([j * m for j in range(1, N, 2)])
        return classes

    def _interval_of_points(self, pts):
        """Intervals affected by each perturbed point (owner, plus previous
        interval when the point sits on a mesh boundary)."""
        m, N = self.space.m, self.space.N
        out = {}
        for g in pts:
            j, l = divmod(g, m)
            out.setdefault(g, []).append(j)
            if l == 0:
                out[g].append((j - 1) % N)
        return out

    def _scalar_rows(self, u, S, contractions):
        """Rows d(scalar)/du for scalar conditions defined via transfer maps.

        ``contractions(dS_by_interval, interval_list) -> array of per-scalar
        increments`` consumes class-FD transfer-map differentials; analytic
        parts (T, alpha columns handled by FD classes too) are appended by the
        caller.
        """
        raise NotImplementedError

    def _chain_vectors(self, S):
        """Prefix/suffix products of the augmented maps."""
        N = S.shape[0]
        dim = S.shape[1]
        prefix = np.empty((N + 1, dim, dim))
        prefix[0] = np.eye(dim)
        for j in range(N):
            prefix[j + 1] = S[j] @ prefix[j]
        suffix = np.empty((N + 1, dim, dim))
        suffix[N] = np.eye(dim)
        for j in range(N - 1, -1, -1):
            suffix[j] = suffix[j + 1] @ S[j]
        return prefix, suffix

    def _dS_for_class(self, u, members):
        profile, T, alpha, aux = self.unpack(u)
        params = self.full_params(alpha)
        h = _CLASS_FD_STEP * max(1.0, float(np.max(np.abs(profile))))
        n = self.model.n
        out = []
        for c in range(n):
            pp = profile.copy()
            pm = profile.copy()
            for g in members:
                pp[g, c] += h
                pm[g, c] -= h
            Sp = self._maps(pp, T, params, fast=True)
            Sm = self._maps(pm, T, params, fast=True)
            out.append((c, (Sp - Sm) / (2.0 * h)))
        return out

    def _dS_for_scalars(self, u):
        """Yields (column index, [(interval, dS)]) for every profile/T/alpha class.

        Central differences on the fast Jacobian backend throughout."""
        profile, T, alpha, aux = self.unpack(u)
        params = self.full_params(alpha)
        n = self.model.n
        nprof = self.space.nprofile
        affected = {}
        for members in self._class_members():
            owners = self._interval_of_points(members)
            dss = self._dS_for_class(u, members)
            for c, dS in dss:
                for g in members:
                    col = g * n + c
                    affected[col] = [(j, dS[j]) for j in owners[g]]
        hT = _CLASS_FD_STEP * max(1.0, abs(T))
        Sp = self._maps(profile, T + hT, params, fast=True)
        Sm = self._maps(profile, T - hT, params, fast=True)
        affected[nprof] = [(j, (Sp[j] - Sm[j]) / (2 * hT)) for j in range(self.space.N)]
        for a in (0, 1):
            ha = _CLASS_FD_STEP * max(1.0, abs(alpha[a]))
            ap = alpha.copy()
            am = alpha.copy()
            ap[a] += ha
            am[a] -= ha
            Sp = self._maps(profile, T, self.full_params(ap), fast=True)
            Sm = self._maps(profile, T, self.full_params(am), fast=True)
            affected[nprof + 1 + a] = [(j, (Sp[j] - Sm[j]) / (2 * ha)) for j in range(self.space.N)]
        return affected


def _bordered_block(Mat, W, V, rank):
    n = Mat.shape[0]
    big = np.zeros((n + rank, n + rank))
    big[:n, :n] = Mat
    big[:n, n:] = W
    big[n:, :n] = V.T
    rhs = np.zeros((n + rank, rank))
    rhs[n:, :] = np.eye(rank)
    try:
        sol = np.linalg.solve(big, rhs)
        solT = np.linalg.solve(big.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankError(f"bordered scalar system singular: {exc}")
    X, G = sol[:n], sol[n:]
    Y, _ = solT[:n], solT[n:]
    return X, G, Y


class LpcProblem(_CycleSystem):
    """Fold-of-cycles curve: unknowns (profile, T, alpha1, alpha2)."""

    n_aux = 0

    def _Q(self, u, fast=False):
        S, M, y, Ya, params = self.monodromy_data(u, fast=fast)
        profile, T, alpha, aux = self.unpack(u)
        n = self.model.n
        f0 = eval_rhs(self.model, profile[0], params)
        Q = np.zeros((n + 1, n + 1))
        Q[:n, :n] = M - np.eye(n)
        Q[:n, n] = y
        Q[n, :n] = f0
        return Q, S, params, f0

    def init_borders(self, u):
        Q, S, _, _ = self._Q(u)
        right, left, _ = smallest_singular_pairs(Q, 1)
        self.borders = (np.real(left), np.real(right))

    def g_value(self, u, fast=False):
        Q, S, params, f0 = self._Q(u, fast=fast)
        W, V = self.borders[0], self.borders[1]
        X, G, Y = _bordered_block(Q, W, V, 1)
        return float(G[0, 0]), (Q, S, X[:, 0], Y[:, 0], params, f0)

    def residual(self, u):
        profile, T, alpha, aux = self.unpack(u)
        col, phase, params = self._core_residual(profile, T, alpha)
        g, _ = self.g_value(u, fast=True)
        return np.concatenate([col, [phase, g]])

    def jacobian(self, u):
        profile, T, alpha, aux = self.unpack(u)
        params = self.full_params(alpha)
        top = self.space.collocation_jacobian(profile, T, params)
        phase = np.zeros(self.ndim)
        phase[: self.space.nprofile] = self.space.phase_row(self.ref_profile)
        g, (Q, S, zhat, yhat, params, f0) = self.g_value(u)
        n = self.model.n
        grow = np.zeros(self.ndim)
        # transfer-map part: d g = -yhat^T dQ zhat with homogeneous embedding
        ytil = np.zeros(n + 3)
        ytil[:n] = yhat[:n]
        ztil = np.zeros(n + 3)
        ztil[:n] = zhat[:n]
        ztil[n] = zhat[n]
        prefix, suffix = self._chain_vectors(S)
        arows = np.einsum("k,jkl->jl", ytil, suffix[1:])       # a_j = ytil^T suffix_{j+1}
        bcols = np.einsum("jkl,l->jk", prefix[:-1], ztil)      # b_j = prefix_j ztil
        for col, pieces in self._dS_for_scalars(u).items():
            acc = 0.0
            for j, dS in pieces:
                acc += arows[j] @ dS @ bcols[j]
            grow[col] -= acc
        # bottom-row part: d(f0)^T zhat_top, f0 = f(x(0), alpha)
        A0 = jacobian_fd(self.model, profile[0], params)
        contra = yhat[n] * (A0.T @ zhat[:n])
        grow[: n] -= contra  # x(0) occupies the first representation point
        J10 = param_jacobian_batch(self.model, profile[0][:, None], params)[0]
        grow[self.space.nprofile + 1: self.space.nprofile + 3] -= yhat[n] * (J10.T @ zhat[:n])
        return np.vstack([top, phase[None, :], grow[None, :]])

    def adapt(self, u):
        profile, *_ = self.unpack(u)
        self.ref_profile = profile.copy()
        self.init_borders(u)

    def problem(self):
        return ContinuationProblem(
            fun=self.residual,
            jac=self.jacobian,
            ndim=self.ndim,
            tol=self.tol,
            step=self.step,
            adapt=self.adapt,
        )


class NsProblem(_CycleSystem):
    """Neimark-Sacker / neutral-saddle curve: unknowns (profile, T, alpha, k).

    The quadratic multiplier operator M^2 - 2kM + I is singular at k = 1 for
    every cycle through the trivial multiplier; a frozen rank-one deflation
    along the trivial left/right pair removes that spurious solution manifold
    without touching the genuine pair (biorthogonality)."""

    n_aux = 1
    _DEFLATION_BASE = 4.0

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.deflator = None  # (P, c) with P = outer(v_trivial, w_trivial)

    def _update_deflator(self, u, M):
        profile, T, alpha, aux = self.unpack(u)
        params = self.full_params(alpha)
        f0 = eval_rhs(self.model, profile[0], params)
        f0 = f0 / np.linalg.norm(f0)
        lam, V = np.linalg.eig(M)
        Wl = np.linalg.inv(V)
        cand = [i for i in range(len(lam)) if abs(lam[i] - 1.0) < 0.2]
        if not cand:
            cand = [int(np.argmin(np.abs(lam - 1.0)))]
        align = [abs(np.vdot(V[:, i] / np.linalg.norm(V[:, i]), f0)) for i in cand]
        i = cand[int(np.argmax(align))]
        v = np.real(V[:, i])
        w = np.real(Wl[i, :])
        P = np.outer(v, w) / (w @ v)
        c = self._DEFLATION_BASE * (1.0 + abs(float(aux[0])))
        self.deflator = (P, c)

    def _Tns(self, u, fast=False):
        S, M, y, Ya, params = self.monodromy_data(u, fast=fast)
        k = float(self.unpack(u)[3][0])
        Tm = M @ M - 2.0 * k * M + np.eye(self.model.n)
        if self.deflator is not None:
            P, c = self.deflator
            Tm = Tm + c * P
        return Tm, M, S, params

    def init_borders(self, u):
        M = self.monodromy_data(u)[1]
        self._update_deflator(u, M)
        Tm, M, S, _ = self._Tns(u)
        right, left, _ = smallest_singular_pairs(Tm, 2)
        self.borders = (np.real(left), np.real(right))

    def g_value(self, u, fast=False):
        Tm, M, S, params = self._Tns(u, fast=fast)
        W, V = self.borders[0], self.borders[1]
        X, G, Y = _bordered_block(Tm, W, V, 2)
        return np.array([G[0, 0], G[1, 0]]), (Tm, M, S, X, Y, params)

    def residual(self, u):
        profile, T, alpha, aux = self.unpack(u)
        col, phase, params = self._core_residual(profile, T, alpha)
        g, _ = self.g_value(u, fast=True)
        return np.concatenate([col, [phase], g])

    def jacobian(self, u):
        profile, T, alpha, aux = self.unpack(u)
        k = float(aux[0])
        params = self.full_params(alpha)
        top = self.space.collocation_jacobian(profile, T, params)
        top = np.hstack([top, np.zeros((top.shape[0], 1))])  # k column
        phase = np.zeros(self.ndim)
        phase[: self.space.nprofile] = self.space.phase_row(self.ref_profile)
        g, (Tm, M, S, X, Y, params) = self.g_value(u)
        n = self.model.n
        rows = np.zeros((2, self.ndim))
        # dG[a,0] = -Y[:,a]^T dT_ns X[:,0];  dT_ns = dM M + M dM - 2k dM
        x0 = X[:, 0]
        pairs = []
        for a in (0, 1):
            ya = Y[:, a]
            pairs.append((a, ya, M @ x0 - 2.0 * k * x0))
            pairs.append((a, M.T @ ya, x0))
        prefix, suffix = self._chain_vectors(S)
        embeds = []
        for a, yvec, xvec in pairs:
            ytil = np.zeros(n + 3)
            ytil[:n] = yvec
            ztil = np.zeros(n + 3)
            ztil[:n] = xvec
            arows = np.einsum("k,jkl->jl", ytil, suffix[1:])
            bcols = np.einsum("jkl,l->jk", prefix[:-1], ztil)
            embeds.append((a, arows, bcols))
        for col, pieces in self._dS_for_scalars(u).items():
            for a, arows, bcols in embeds:
                acc = 0.0
                for j, dS in pieces:
                    acc += arows[j] @ dS @ bcols[j]
                rows[a, col] -= acc
        # k column: dT_ns/dk = -2M
        for a in (0, 1):
            rows[a, self.space.nprofile + 3] = 2.0 * (Y[:, a] @ (M @ x0))
        return np.vstack([top, phase[None, :], rows])

    def adapt(self, u):
        profile, *_ = self.unpack(u)
        self.ref_profile = profile.copy()
        self.init_borders(u)

    def multipliers(self, u):
        return floquet_multipliers(self.monodromy_data(u)[0], self.model.n)

    def classify_point(self, u, tol: float = 1e-5):
        """Torus vs neutral-saddle from the unit-product multiplier pair."""
        profile, T, alpha, aux = self.unpack(u)
        k = float(aux[0])
        mus = self.multipliers(u)
        pair = nonunit_pair(mus, k)
        if pair is None:
            return "unresolved", None
        mu1, mu2 = pair
        real_pair = abs(np.imag(mu1)) < 1e-6 * (1 + abs(mu1))
        kind = "neutral_saddle" if real_pair and abs(k) > 1 else "torus"
        return kind, (mu1, mu2)

    def problem(self):
        tests = {
            "resonance_1_1": lambda u: float(self.unpack(u)[3][0]) - 1.0,
            "resonance_1_2": lambda u: float(self.unpack(u)[3][0]) + 1.0,
        }
        return ContinuationProblem(
            fun=self.residual,
            jac=self.jacobian,
            ndim=self.ndim,
            tol=self.tol,
            step=self.step,
            adapt=self.adapt,
            test_functions=tests,
        )


def floquet_multipliers(S: np.ndarray, n: int) -> np.ndarray:
    """Multipliers from the ring of transfer maps, with norm rescaling to
    delay overflow in strongly contracting/expanding products."""
    M = np.eye(n)
    log_scale = 0.0
    for j in range(S.shape[0]):
        M = S[j][:n, :n] @ M
        nrm = np.linalg.norm(M)
        if nrm > 0:
            M /= nrm
            log_scale += np.log(nrm)
    return np.linalg.eigvals(M) * np.exp(log_scale)


def nonunit_pair(mus: np.ndarray, k: float):
    """The multiplier pair with product ~1 closest to sum 2k, excluding the
    trivial multiplier."""
    idx_trivial = int(np.argmin(np.abs(mus - 1.0)))
    rest = [mu for i, mu in enumerate(mus) if i != idx_trivial]
    best, best_err = None, np.inf
    for i in range(len(rest)):
        for j in range(i + 1, len(rest)):
            err = abs(rest[i] * rest[j] - 1.0) + 0.1 * abs(rest[i] + rest[j] - 2 * k)
            if err < best_err:
                best_err, best = err, (rest[i], rest[j])
    return best


def lpc_problem(model, N=20, m=4, **kw) -> LpcProblem:
    return LpcProblem(model, N=N, m=m, **kw)


def ns_problem(model, N=20, m=4, **kw) -> NsProblem:
    return NsProblem(model, N=N, m=m, **kw)


# ---------------------------------------------------------------------------
# predictor gluing and diagnostics
# ---------------------------------------------------------------------------

def initial_data_from_sample(system: _CycleSystem, sample: PredictorSample):
    """Interpolate a predictor sample onto the collocation layout.

    Returns (u0, tangent) in the unknown space of the defining system; also
    installs the predictor profile as the phase reference and initializes the
    borders at the predicted point.
    """
    from .collocation import trig_interp

    space = system.space
    cyc = equidistant_to_collocation(sample.mesh, sample.T, space, alpha=sample.alpha,
                                     k=sample.k)
    dprof = trig_interp(sample.dmesh, space.rep_times())
    aux = () if sample.k is None else (sample.k,)
    u0 = system.pack(cyc.profile, sample.T, sample.alpha, aux)
    daux = () if sample.dk is None else (sample.dk,)
    t0 = system.pack(dprof, sample.dT, sample.dalpha, daux)
    t0 = t0 / np.linalg.norm(t0)
    system.ref_profile = cyc.profile.copy()
    system.init_borders(u0)
    return u0, t0


def first_step_diagnostics(system: _CycleSystem, sample: PredictorSample,
                           tol: float | None = None, max_iters: int = 10):
    """First-Newton residual and predicted-to-corrected distance.

    The corrector runs from the predicted point alone, without a supplied
    tangent: each iteration takes the minimum-norm Newton step, so the
    correction is orthogonal to the branch and the distance measures pure
    defect.  Non-convergence is reported as data (distance None).
    """
    u0, _ = initial_data_from_sample(system, sample)
    prob = system.problem()
    tol = prob.tol if tol is None else tol
    R = float(np.linalg.norm(prob.residual(u0)))
    u = u0.copy()
    for _ in range(max_iters):
        F = prob.residual(u)
        if np.linalg.norm(F, np.inf) <= tol:
            return R, float(np.linalg.norm(u - u0))
        try:
            J = prob.jacobian(u)
            delta, *_ = np.linalg.lstsq(J, F, rcond=None)
        except (RankError, np.linalg.LinAlgError):
            return R, None
        if not np.all(np.isfinite(delta)) or np.linalg.norm(delta) > 1e3 * (1 + np.linalg.norm(u)):
            return R, None
        u = u - delta
    return R, None


def integrate_monodromy(cycle: CollocationCycle, params, rtol=1e-10, atol=1e-12):
    """Monodromy by high-accuracy integration of the variational equation
    along the collocation interpolant (independent of the transfer-map path)."""
    model = cycle.space.model
    n = model.n

    def rhs(t, Y):
        x = cycle.space.eval_profile(cycle.profile, np.array([t]))[0]
        A = jacobian_fd(model, x, params)
        return (cycle.T * A @ Y.reshape(n, n)).ravel()

    sol = solve_ivp(rhs, (0.0, 1.0), np.eye(n).ravel(), rtol=rtol, atol=atol,
                    method="DOP853", dense_output=False)
    if not sol.success:
        raise NoConvergenceError("variational integration failed")
    return sol.y[:, -1].reshape(n, n)


def correct_cycle(space: CycleSpace, profile, T, params, ref_profile=None,
                  tol: float = 1e-10, max_iters: int = 12) -> CollocationCycle:
    """Newton correction of a periodic orbit at fixed parameters.

    Square system: collocation residuals plus the integral phase condition,
    unknowns (profile, T)."""
    model = space.model
    n = model.n
    prof = np.asarray(profile, dtype=float).copy()
    T = float(T)
    ref = prof.copy() if ref_profile is None else np.asarray(ref_profile, dtype=float)
    for _ in range(max_iters):
        res = np.concatenate([
            space.collocation_residual(prof, T, params),
            [space.phase_residual(prof, ref)],
        ])
        if np.linalg.norm(res, np.inf) < tol:
            return CollocationCycle(space=space, profile=prof, T=T, alpha=None)
        Jfull = space.collocation_jacobian(prof, T, params)
        J = np.zeros((res.size, space.nprofile + 1))
        J[:-1, : space.nprofile] = Jfull[:, : space.nprofile]
        J[:-1, -1] = Jfull[:, space.nprofile]
        J[-1, : space.nprofile] = space.phase_row(ref)
        delta = np.linalg.solve(J, res)
        prof = prof - delta[: space.nprofile].reshape(space.npoints, n)
        T = T - delta[-1]
    raise NoConvergenceError(
        f"cycle corrector stalled (residual {np.linalg.norm(res, np.inf):.2e})")
