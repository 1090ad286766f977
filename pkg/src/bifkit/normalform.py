"""Critical center-manifold normal forms via the homological equation.

The invariance condition ``H_w(w) G(w) = f(H(w))`` is solved order by order:
each Taylor index either yields a regular linear system (nonresonant) or a
singular one whose resonant coefficient is fixed by the Fredholm alternative
and whose particular solution is taken orthogonal to the adjoint null vector.
One recursion serves the generalized-Hopf, zero-Hopf and double-Hopf cases;
only the center basis (eigenvalues, eigenvectors, conjugation layout)
differs.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, InputError
from .linalg import BorderedOperator, EigenData, eig_with_adjoint, fredholm_gamma, inner
from .tensors import DerivativeBundle

NEAR_SINGULAR_WARN = 1e-7


# ---------------------------------------------------------------------------
# generic recursion
# ---------------------------------------------------------------------------

@dataclass
class CenterBasis:
    """Center coordinates: eigenvalues, right vectors, adjoints, conjugation map.

    ``conj[i]`` is the index of the coordinate whose value is the complex
    conjugate of coordinate ``i`` (a real coordinate maps to itself).
    """

    lambdas: tuple
    vectors: tuple      # right eigenvectors, one per coordinate
    adjoints: dict      # coordinate index -> left eigenvector (normalized <p,q>=1)
    conj: tuple

    @property
    def m(self) -> int:
        return len(self.lambdas)


@dataclass
class CenterExpansion:
    basis: CenterBasis
    order: int
    h: dict = field(default_factory=dict)   # multi-index -> state vector
    g: dict = field(default_factory=dict)   # (coord, multi-index) -> coefficient
    notes: list = field(default_factory=list)

    def coefficient(self, coord: int, tau: tuple) -> complex:
        """Normal-form coefficient in monomial convention (factorials divided out)."""
        gval = self.g.get((coord, tuple(tau)), 0.0 + 0.0j)
        return gval / _multi_factorial(tau)


def _multi_factorial(tau) -> float:
    out = 1.0
    for t in tau:
        for i in range(2, t + 1):
            out *= i
    return out


def _graded_indices(m: int, order: int):
    """All multi-indices of length m with |tau| == order, lexicographic."""
    if m == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in _graded_indices(m - 1, order - first):
            yield (first,) + rest


def _conj_index(tau, conj_map):
    out = [0] * len(tau)
    for i, t in enumerate(tau):
        out[conj_map[i]] = t
    return tuple(out)


def _part_candidates(tau):
    ranges = [range(t + 1) for t in tau]
    for cand in itertools.product(*ranges):
        if sum(cand) >= 1:
            yield cand


def _part_multisets(tau, k, max_part=None):
    """Non-increasing k-tuples of multi-indices (each nonzero) summing to tau."""
    total = sum(tau)
    if k == 1:
        if total >= 1 and (max_part is None or tau <= max_part):
            yield (tau,)
        return
    for part in _part_candidates(tau):
        if max_part is not None and part > max_part:
            continue
        rem = tuple(t - p for t, p in zip(tau, part))
        if sum(rem) < k - 1:
            continue
        for rest in _part_multisets(rem, k - 1, part):
            yield (part,) + rest


def expand_center_manifold(bundle: DerivativeBundle, basis: CenterBasis, order: int,
                           h_order: int | None = None,
                           resonance_tol: float = 1e-6) -> CenterExpansion:
    """Solve the homological equation through ``order``.

    ``h_order`` limits the orders at which manifold coefficients are solved
    (resonant normal-form coefficients are still extracted up to ``order``);
    it must be at least ``order - 1`` so that all cross terms are available.
    """
    m = basis.m
    n = bundle.model.n
    A = bundle.A
    lams = np.asarray(basis.lambdas, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    h_order = order if h_order is None else h_order
    if h_order < order - 1:
        raise InputError("h_order must be at least order-1")

    exp = CenterExpansion(basis=basis, order=order)
    for i in range(m):
        e = tuple(1 if j == i else 0 for j in range(m))
        exp.h[e] = np.asarray(basis.vectors[i], dtype=complex)

    def apply_form(parts):
        vecs = [exp.h[p] for p in parts]
        return bundle._apply(tuple(vecs), None)

    def assemble_rhs(tau):
        N = sum(tau)
        R = np.zeros(n, dtype=complex)
        tfac = _multi_factorial(tau)
        for k in range(2, N + 1):
            for parts in _part_multisets(tau, k):
                counts = {}
                denom = 1.0
                for p in parts:
                    denom *= _multi_factorial(p)
                    counts[p] = counts.get(p, 0) + 1
                for c in counts.values():
                    for i in range(2, c + 1):
                        denom *= i
                R += (tfac / denom) * apply_form(parts)
        for (i, mu), gval in list(exp.g.items()):
            if sum(mu) < 2:
                continue
            nu = tuple(t + (1 if j == i else 0) - mu[j] for j, t in enumerate(tau))
            if any(v < 0 for v in nu) or nu[i] < 1 or sum(nu) < 2:
                continue
            coeff = tfac / (_multi_factorial(nu) * _multi_factorial(mu)) * nu[i]
            R -= coeff * gval * exp.h[nu]
        return R

    for N in range(2, order + 1):
        solve_h = N <= h_order
        done = set()
        for tau in _graded_indices(m, N):
            ctau = _conj_index(tau, basis.conj)
            if ctau in done:
                if ctau in exp.h:
                    exp.h[tau] = np.conj(exp.h[ctau])
                for i in range(m):
                    key = (i, ctau)
                    if key in exp.g:
                        exp.g[(basis.conj[i], tau)] = np.conj(exp.g[key])
                done.add(tau)
                continue
            done.add(tau)
            sigma = complex(np.dot(tau, lams))
            gaps = np.abs(lams - sigma)
            res_candidates = np.flatnonzero(gaps <= resonance_tol * scale)
            if len(res_candidates) > 1:
                raise DegeneracyError(f"multiple resonances at index {tau}")
            res_i = int(res_candidates[0]) if len(res_candidates) else None
            if res_i is None and not solve_h:
                continue
            R = assemble_rhs(tau)
            M = sigma * np.eye(n) - A
            if res_i is not None:
                p_i = basis.adjoints[res_i]
                q_i = np.asarray(basis.vectors[res_i], dtype=complex)
                if solve_h:
                    gamma, hvec = fredholm_gamma(M, p_i, R, q_i)
                    exp.h[tau] = hvec
                else:
                    gamma = inner(p_i, R)
                exp.g[(res_i, tau)] = complex(gamma)
            else:
                smin = np.min(np.abs(np.linalg.svd(M, compute_uv=False)))
                if smin < NEAR_SINGULAR_WARN * scale:
                    msg = f"near-singular shifted system at index {tau} (smin={smin:.2e})"
                    exp.notes.append(msg)
                    warnings.warn(msg, stacklevel=2)
                exp.h[tau] = np.linalg.solve(M, R)
    return exp


# ---------------------------------------------------------------------------
# case-specific coefficient containers
# ---------------------------------------------------------------------------

@dataclass
class GhNormalForm:
    omega: float
    c1: complex
    c2: complex
    q: np.ndarray
    p: np.ndarray
    h2000: np.ndarray
    h1100: np.ndarray
    h2100: np.ndarray
    expansion: CenterExpansion

    @property
    def d1(self) -> float:
        return float(np.real(self.c1))

    @property
    def d2(self) -> float:
        return float(np.real(self.c2))

    @property
    def im_c1(self) -> float:
        return float(np.imag(self.c1))

    def scaled(self) -> dict:
        return {"d2": self.d2}


@dataclass
class ZhNormalForm:
    omega: float
    f200: float
    f011: float
    f300: float
    f111: float
    g110: complex
    g210: complex
    g021: complex
    q1: np.ndarray
    p1: np.ndarray
    q2: np.ndarray
    p2: np.ndarray
    h20000: np.ndarray
    h11000: np.ndarray
    h02000: np.ndarray
    h01100: np.ndarray
    expansion: CenterExpansion

    @property
    def torus_sign(self) -> float:
        """Negative sign means a genuine torus branch, positive a neutral saddle."""
        return float(np.sign(np.real(self.g110) * self.f011))

    def cubic_invariant(self) -> float:
        """Coefficient of the xi^2*rho term after removing the removable cubics."""
        d = float(np.real(self.g110))
        e = float(np.real(self.g210))
        f = float(np.real(self.g021))
        return (
            e
            + d * (self.f111 / (2.0 * self.f011) - 3.0 * self.f300 / (2.0 * self.f200))
            + f * (d - self.f200) / self.f011
        )

    def scaled(self) -> dict:
        # theta is stated against the raw quadratic Taylor coefficient 2*f200
        s = float(np.sign(self.f200 * self.f011))
        theta = float(np.real(self.g110)) / (2.0 * self.f200)
        E = float(np.sign(self.cubic_invariant()))
        return {"s": s, "theta": theta, "E": E}


@dataclass
class HhNormalForm:
    omega1: float
    omega2: float
    f2100: complex
    f1011: complex
    g1110: complex
    g0021: complex
    f1022: complex
    g2210: complex
    q1: np.ndarray
    p1: np.ndarray
    q2: np.ndarray
    p2: np.ndarray
    h2000: np.ndarray
    h1100: np.ndarray
    h0020: np.ndarray
    h0011: np.ndarray
    expansion: CenterExpansion

    def amplitude_matrix(self) -> np.ndarray:
        return np.array(
            [[np.real(self.f2100), np.real(self.f1011)],
             [np.real(self.g1110), np.real(self.g0021)]]
        )

    def scaled(self) -> dict:
        # Theta/Delta divide the retained cross quintics (computed with the
        # <p,h>=0 orthogonality convention, no further hypernormalization) by
        # the squared self-coupling; see README on fifth-order conventions
        p11, p12 = np.real(self.f2100), np.real(self.f1011)
        p21, p22 = np.real(self.g1110), np.real(self.g0021)
        return {
            "p11p22": float(np.sign(p11 * p22)),
            "theta": float(p12 / p22),
            "delta": float(p21 / p11),
            "Theta": float(np.real(self.f1022) / p22**2),
            "Delta": float(np.real(self.g2210) / p11**2),
        }


# ---------------------------------------------------------------------------
# case drivers
# ---------------------------------------------------------------------------

def hopf_basis(eig: EigenData) -> CenterBasis:
    lam = eig.eigenvalue
    return CenterBasis(
        lambdas=(lam, np.conj(lam)),
        vectors=(eig.q, np.conj(eig.q)),
        adjoints={0: eig.p, 1: np.conj(eig.p)},
        conj=(1, 0),
    )


def critical_gh(bundle: DerivativeBundle, eig: EigenData) -> GhNormalForm:
    """Cubic and quintic Hopf coefficients at a generalized-Hopf candidate."""
    if bundle.order < 5:
        raise InputError("generalized-Hopf coefficients need a fifth-order bundle")
    omega = float(np.imag(eig.eigenvalue))
    if omega <= 0:
        raise InputError("expected eigenvalue i*omega with omega > 0")
    basis = hopf_basis(eig)
    exp = expand_center_manifold(bundle, basis, order=5, h_order=4)
    c1 = exp.coefficient(0, (2, 1))
    c2 = exp.coefficient(0, (3, 2))
    return GhNormalForm(
        omega=omega, c1=c1, c2=c2, q=eig.q, p=eig.p,
        h2000=exp.h[(2, 0)], h1100=exp.h[(1, 1)], h2100=exp.h[(2, 1)],
        expansion=exp,
    )


def hopf_c1(bundle: DerivativeBundle, eig: EigenData) -> complex:
    """First Lyapunov-coefficient numerator c1 (cubic normal-form coefficient)."""
    omega = float(np.imag(eig.eigenvalue))
    q, p = eig.q, eig.p
    n = bundle.model.n
    A = bundle.A
    Bqq = bundle.B(q, q)
    Bqqb = bundle.B(q, np.conj(q))
    h20 = np.linalg.solve(2j * omega * np.eye(n) - A, Bqq)
    h11 = np.linalg.solve(-A, Bqqb)
    r = bundle.C(q, q, np.conj(q)) + bundle.B(np.conj(q), h20) + 2.0 * bundle.B(q, h11)
    return 0.5 * inner(p, r)


def critical_zh(bundle: DerivativeBundle, eig0: EigenData, eigH: EigenData,
                f200_tol: float = 1e-8) -> ZhNormalForm:
    """Zero-Hopf cubic normal form (coefficients of nf with a real and a complex axis)."""
    omega = float(np.imag(eigH.eigenvalue))
    q1 = np.real(eig0.q)
    q1 = q1 / np.linalg.norm(q1)
    p1 = np.real(eig0.p)
    p1 = p1 / np.dot(p1, q1)
    basis = CenterBasis(
        lambdas=(0.0, 1j * omega, -1j * omega),
        vectors=(q1.astype(complex), eigH.q, np.conj(eigH.q)),
        adjoints={0: p1.astype(complex), 1: eigH.p, 2: np.conj(eigH.p)},
        conj=(0, 2, 1),
    )
    exp = expand_center_manifold(bundle, basis, order=3, h_order=3)
    f200 = float(np.real(exp.coefficient(0, (2, 0, 0))))
    if abs(f200) < f200_tol:
        raise DegeneracyError(f"|f200|={abs(f200):.2e} below tolerance (cusp-like degeneracy)")
    return ZhNormalForm(
        omega=omega,
        f200=f200,
        f011=float(np.real(exp.coefficient(0, (0, 1, 1)))),
        f300=float(np.real(exp.coefficient(0, (3, 0, 0)))),
        f111=float(np.real(exp.coefficient(0, (1, 1, 1)))),
        g110=exp.coefficient(1, (1, 1, 0)),
        g210=exp.coefficient(1, (2, 1, 0)),
        g021=exp.coefficient(1, (0, 2, 1)),
        q1=q1, p1=p1, q2=eigH.q, p2=eigH.p,
        h20000=np.real(exp.h[(2, 0, 0)]),
        h11000=exp.h[(1, 1, 0)],
        h02000=exp.h[(0, 2, 0)],
        h01100=np.real(exp.h[(0, 1, 1)]),
        expansion=exp,
    )


def critical_hh(bundle: DerivativeBundle, eig1: EigenData, eig2: EigenData,
                resonance_warn_order: int = 5) -> HhNormalForm:
    """Double-Hopf coefficients through fifth order (two imaginary pairs)."""
    if bundle.order < 5:
        raise InputError("double-Hopf coefficients need a fifth-order bundle")
    w1 = float(np.imag(eig1.eigenvalue))
    w2 = float(np.imag(eig2.eigenvalue))
    if not (w1 > 0 and w2 > 0):
        raise InputError("expected two eigenvalues with positive imaginary part")
    if w1 < w2:
        eig1, eig2 = eig2, eig1
        w1, w2 = w2, w1
    for k, l in itertools.product(range(1, resonance_warn_order + 1), repeat=2):
        if k + l <= resonance_warn_order + 1 and abs(k * w1 - l * w2) < 1e-3 * max(w1, w2):
            warnings.warn(f"near {k}:{l} resonance between the Hopf pairs", stacklevel=2)
    basis = CenterBasis(
        lambdas=(1j * w1, -1j * w1, 1j * w2, -1j * w2),
        vectors=(eig1.q, np.conj(eig1.q), eig2.q, np.conj(eig2.q)),
        adjoints={0: eig1.p, 1: np.conj(eig1.p), 2: eig2.p, 3: np.conj(eig2.p)},
        conj=(1, 0, 3, 2),
    )
    exp = expand_center_manifold(bundle, basis, order=5, h_order=4)
    return HhNormalForm(
        omega1=w1, omega2=w2,
        f2100=exp.coefficient(0, (2, 1, 0, 0)),
        f1011=exp.coefficient(0, (1, 0, 1, 1)),
        g1110=exp.coefficient(2, (1, 1, 1, 0)),
        g0021=exp.coefficient(2, (0, 0, 2, 1)),
        f1022=exp.coefficient(0, (1, 0, 2, 2)),
        g2210=exp.coefficient(2, (2, 2, 1, 0)),
        q1=eig1.q, p1=eig1.p, q2=eig2.q, p2=eig2.p,
        h2000=exp.h[(2, 0, 0, 0)],
        h1100=exp.h[(1, 1, 0, 0)],
        h0020=exp.h[(0, 0, 2, 0)],
        h0011=exp.h[(0, 0, 1, 1)],
        expansion=exp,
    )


# ---------------------------------------------------------------------------
# residual diagnostics
# ---------------------------------------------------------------------------

def homological_residual(bundle, basis, h_terms: dict, g_terms: dict, v_matrix,
                         z: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Residual of the invariance condition at center coordinates z, parameters beta.

    ``h_terms`` maps (nu, mu) multi-index pairs to state vectors, ``g_terms``
    maps (coord, nu, mu) to coefficients (both in factorial normalization);
    ``v_matrix`` is the linear parameter transformation applied to beta.
    """
    from .tensors import eval_rhs

    m = basis.m
    z = np.asarray(z, dtype=complex)
    beta = np.asarray(beta, dtype=float)

    def mono(nu, mu):
        val = 1.0 + 0.0j
        for zi, e in zip(z, nu):
            val *= zi**e
        for bi, e in zip(beta, mu):
            val *= bi**e
        return val

    x = bundle.x0.astype(complex).copy()
    for (nu, mu), vec in h_terms.items():
        x = x + vec * (mono(nu, mu) / (_multi_factorial(nu) * _multi_factorial(mu)))

    lhs = np.zeros_like(x)
    for i in range(m):
        dHi = np.zeros_like(x)
        for (nu, mu), vec in h_terms.items():
            if nu[i] == 0:
                continue
            nu_d = tuple(v - (1 if j == i else 0) for j, v in enumerate(nu))
            dHi = dHi + vec * (nu[i] * mono(nu_d, mu) / (_multi_factorial(nu) * _multi_factorial(mu)))
        Gi = 0.0 + 0.0j
        for (ci, nu, mu), gval in g_terms.items():
            if ci != i:
                continue
            Gi += gval * mono(nu, mu) / (_multi_factorial(nu) * _multi_factorial(mu))
        lhs = lhs + dHi * Gi

    alpha_full = bundle.params0.copy()
    alpha_full[list(bundle.model.active)] += np.real(np.asarray(v_matrix) @ beta)
    fx = eval_rhs(bundle.model, np.real(x), alpha_full)
    if np.linalg.norm(np.imag(x)) > 1e-8 * (1 + np.linalg.norm(np.real(x))):
        raise InputError("sample point is not conjugation-symmetric")
    return lhs - fx
