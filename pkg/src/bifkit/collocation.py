"""Periodic-orbit discretization by orthogonal collocation.

Profiles are piecewise polynomials of degree m represented by their values at
equidistant points inside each mesh interval (the last point of an interval
is the first of the next; periodicity closes the ring).  Collocation
residuals are enforced at Gauss-Legendre nodes.  The same per-interval
linearization that drives Newton also condenses to interval transfer maps,
whose ring product yields the monodromy matrix and the inhomogeneous
period/parameter columns used by the augmented defining systems.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .tensors import OdeModel, eval_rhs, jacobian_batch, param_jacobian_batch


def gauss_nodes(m: int):
    """Gauss-Legendre nodes/weights mapped to (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def lagrange_matrices(m: int):
    """Values/derivatives of the equidistant-node Lagrange basis at Gauss nodes.

    Returns (L, D, nodes, weights): L[l, i] = ell_l(zeta_i), D[l, i] =
    ell_l'(zeta_i) on the reference interval [0, 1] with basis nodes l/m.
    """
    nodes, weights = gauss_nodes(m)
    sigma = np.arange(m + 1) / m
    L = np.zeros((m + 1, m))
    D = np.zeros((m + 1, m))
    for l in range(m + 1):
        for i, z in enumerate(nodes):
            val = 1.0
            dval = 0.0
            for r in range(m + 1):
                if r == l:
                    continue
                val *= (z - sigma[r]) / (sigma[l] - sigma[r])
            for r in range(m + 1):
                if r == l:
                    continue
                term = 1.0 / (sigma[l] - sigma[r])
                for s in range(m + 1):
                    if s in (l, r):
                        continue
                    term *= (z - sigma[s]) / (sigma[l] - sigma[s])
                dval += term
            L[l, i] = val
            D[l, i] = dval
    return L, D, nodes, weights


def trig_interp(points: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of a closed curve sampled uniformly.

    ``points`` has shape (N+1, n) with points[N] == points[0]; evaluation
    times ``t`` live on [0, 1].
    """
    P = np.asarray(points, dtype=float)
    if not np.allclose(P[0], P[-1], atol=1e-9 * (1 + np.abs(P).max())):
        raise InputError("input curve is not closed")
    data = P[:-1]
    N = data.shape[0]
    coef = np.fft.fft(data, axis=0) / N
    freqs = np.fft.fftfreq(N, d=1.0 / N)  # integer frequencies
    t = np.asarray(t, dtype=float)
    out = np.zeros((t.size, data.shape[1]))
    for kidx, k in enumerate(freqs):
        if N % 2 == 0 and abs(k) == N // 2:
            # split the Nyquist mode into a pure cosine
            out += np.real(coef[kidx])[None, :] * np.cos(2 * np.pi * k * t)[:, None]
        else:
            out += np.real(coef[kidx][None, :] * np.exp(2j * np.pi * k * t[:, None]))
    return out


@dataclass
class CycleSpace:
    """Mesh layout and matrices for one (model, N, m) discretization."""

    model: OdeModel
    N: int
    m: int
    taus: np.ndarray  # interval boundaries in [0, 1], length N+1

    @classmethod
    def equidistant(cls, model: OdeModel, N: int = 20, m: int = 4):
        space = cls(model=model, N=N, m=m, taus=np.linspace(0.0, 1.0, N + 1))
        space._init_matrices()
        return space

    def _init_matrices(self):
        self.L, self.D, self.gauss, self.gw = lagrange_matrices(self.m)

    def __post_init__(self):
        self._init_matrices()

    # -- layout ---------------------------------------------------------
    @property
    def npoints(self) -> int:
        return self.N * self.m

    @property
    def nprofile(self) -> int:
        return self.npoints * self.model.n

    def rep_times(self) -> np.ndarray:
        """Times of the representation points (ring of N*m points)."""
        out = np.empty(self.npoints)
        for j in range(self.N):
            dt = self.taus[j + 1] - self.taus[j]
            for l in range(self.m):
                out[j * self.m + l] = self.taus[j] + dt * l / self.m
        return out

    def interval_points(self, profile: np.ndarray) -> np.ndarray:
        """(N, m+1, n) per-interval representation values with wraparound."""
        idx = (np.arange(self.N)[:, None] * self.m + np.arange(self.m + 1)[None, :]) % self.npoints
        return profile[idx]

    def gauss_states(self, profile: np.ndarray) -> np.ndarray:
        X = self.interval_points(profile)
        return np.einsum("li,jln->jin", self.L, X)

    def gauss_derivatives(self, profile: np.ndarray) -> np.ndarray:
        """sigma-derivatives (unscaled by interval length) at Gauss nodes."""
        X = self.interval_points(profile)
        return np.einsum("li,jln->jin", self.D, X)

    def dts(self) -> np.ndarray:
        return np.diff(self.taus)

    # -- residuals and Jacobian blocks -----------------------------------
    def collocation_residual(self, profile, T, params) -> np.ndarray:
        XG = self.gauss_states(profile)
        DX = self.gauss_derivatives(profile)
        n = self.model.n
        F = eval_rhs(self.model, XG.reshape(-1, n).T, params).T.reshape(self.N, self.m, n)
        res = DX - self.dts()[:, None, None] * T * F
        return res.reshape(-1)

    def phase_residual(self, profile, ref_profile) -> float:
        XG = self.gauss_states(profile)
        XR = self.gauss_states(ref_profile)
        DR = self.gauss_derivatives(ref_profile)
        return float(np.einsum("i,jin,jin->", self.gw, XG - XR, DR))

    def phase_row(self, ref_profile) -> np.ndarray:
        DR = self.gauss_derivatives(ref_profile)
        row = np.zeros((self.npoints, self.model.n))
        idx = (np.arange(self.N)[:, None] * self.m + np.arange(self.m + 1)[None, :]) % self.npoints
        contrib = np.einsum("i,li,jin->jln", self.gw, self.L, DR)
        for j in range(self.N):
            for l in range(self.m + 1):
                row[idx[j, l]] += contrib[j, l]
        return row.reshape(-1)

    def collocation_jacobian(self, profile, T, params):
        """Dense block (N*m*n) x (nprofile + 3): profile, T, alpha columns."""
        n = self.model.n
        XG = self.gauss_states(profile)
        flat = XG.reshape(-1, n).T
        A = jacobian_batch(self.model, flat, params).reshape(self.N, self.m, n, n)
        J1 = param_jacobian_batch(self.model, flat, params).reshape(self.N, self.m, n, 2)
        F = eval_rhs(self.model, flat, params).T.reshape(self.N, self.m, n)
        dts = self.dts()
        nrows = self.N * self.m * n
        out = np.zeros((nrows, self.nprofile + 3))
        idx = (np.arange(self.N)[:, None] * self.m + np.arange(self.m + 1)[None, :]) % self.npoints
        I = np.eye(n)
        for j in range(self.N):
            for i in range(self.m):
                r0 = (j * self.m + i) * n
                block_T = -dts[j] * F[j, i]
                out[r0:r0 + n, self.nprofile] = block_T
                out[r0:r0 + n, self.nprofile + 1:self.nprofile + 3] = -dts[j] * T * J1[j, i]
                for l in range(self.m + 1):
                    c0 = idx[j, l] * n
                    out[r0:r0 + n, c0:c0 + n] += self.D[l, i] * I - dts[j] * T * self.L[l, i] * A[j, i]
        return out

    # -- condensation to transfer maps ------------------------------------
    def transfer_maps(self, profile, T, params, A=None, F=None, J1=None):
        """Per-interval augmented transfer maps S~_j of size (n+3, n+3).

        v_end = S v_start + y dT + Y dalpha, stored as the top rows of the
        augmented matrix; the lower identity block carries (dT, dalpha).
        """
        n = self.model.n
        m = self.m
        XG = self.gauss_states(profile)
        flat = XG.reshape(-1, n).T
        if A is None:
            A = jacobian_batch(self.model, flat, params).reshape(self.N, m, n, n)
        if F is None:
            F = eval_rhs(self.model, flat, params).T.reshape(self.N, m, n)
        if J1 is None:
            J1 = param_jacobian_batch(self.model, flat, params).reshape(self.N, m, n, 2)
        dts = self.dts()
        W = np.zeros((self.N, m * n, m * n))
        R = np.zeros((self.N, m * n, n + 3))
        for i in range(m):
            r = slice(i * n, (i + 1) * n)
            for l in range(1, m + 1):
                c = slice((l - 1) * n, l * n)
                W[:, r, c] = (self.D[l, i] * np.eye(n)[None] -
                              (dts[:, None, None] * T) * self.L[l, i] * A[:, i])
            R[:, r, :n] = -(self.D[0, i] * np.eye(n)[None] -
                            (dts[:, None, None] * T) * self.L[0, i] * A[:, i])
            R[:, r, n] = dts[:, None] * F[:, i]
            R[:, r, n + 1:] = (dts[:, None, None] * T) * J1[:, i]
        sol = np.linalg.solve(W, R)
        Vm = sol[:, (m - 1) * n: m * n, :]  # rows of the interval-end point
        S = np.zeros((self.N, n + 3, n + 3))
        S[:, :n, :] = Vm
        S[:, n:, n:] = np.eye(3)[None]
        return S

    @staticmethod
    def ring_product(S: np.ndarray) -> np.ndarray:
        out = S[0]
        for j in range(1, S.shape[0]):
            out = S[j] @ out
        return out

    # -- interpolation / remeshing ----------------------------------------
    def eval_profile(self, profile, t):
        """Evaluate the piecewise collocation polynomial at times t in [0,1)."""
        t = np.atleast_1d(np.asarray(t, dtype=float)) % 1.0
        X = self.interval_points(profile)
        j = np.clip(np.searchsorted(self.taus, t, side="right") - 1, 0, self.N - 1)
        dt = self.dts()
        sigma = (t - self.taus[j]) / dt[j]
        out = np.zeros((t.size, self.model.n))
        nodes = np.arange(self.m + 1) / self.m
        for l in range(self.m + 1):
            basis = np.ones_like(sigma)
            for r in range(self.m + 1):
                if r == l:
                    continue
                basis *= (sigma - nodes[r]) / (nodes[l] - nodes[r])
            out += basis[:, None] * X[j, l]
        return out

    def remesh(self, profile, min_ratio: float = 1e-3):
        """New interval boundaries equidistributing profile arclength."""
        tf = np.linspace(0.0, 1.0, 8 * self.npoints + 1)
        xf = self.eval_profile(profile, tf)
        seg = np.linalg.norm(np.diff(xf, axis=0), axis=1)
        seg = seg + min_ratio * (seg.mean() + 1e-300)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum /= cum[-1]
        targets = np.linspace(0.0, 1.0, self.N + 1)
        new_taus = np.interp(targets, cum, tf)
        new_taus[0], new_taus[-1] = 0.0, 1.0
        new_space = CycleSpace(model=self.model, N=self.N, m=self.m, taus=new_taus)
        new_profile = new_space.eval_profile_from(self, profile)
        return new_space, new_profile

    def eval_profile_from(self, other: "CycleSpace", profile) -> np.ndarray:
        return other.eval_profile(profile, self.rep_times())


@dataclass
class CollocationCycle:
    """Converged (or predicted) cycle snapshot on a collocation mesh."""

    space: CycleSpace
    profile: np.ndarray  # (N*m, n)
    T: float
    alpha: np.ndarray
    k: float | None = None

    def time_series(self) -> np.ndarray:
        """Columns (t, x1..xn) at the representation points, closed."""
        t = np.append(self.space.rep_times(), 1.0) * self.T
        prof = np.vstack([self.profile, self.profile[0]])
        return np.column_stack([t, prof])


def equidistant_to_collocation(points: np.ndarray, T: float, space: CycleSpace,
                               alpha=None, k=None) -> CollocationCycle:
    """Interpolate a closed curve on a uniform phase mesh onto collocation
    representation points (initially equidistant coarse mesh)."""
    profile = trig_interp(points, space.rep_times())
    return CollocationCycle(space=space, profile=profile, T=float(T),
                            alpha=None if alpha is None else np.asarray(alpha, float),
                            k=k)
