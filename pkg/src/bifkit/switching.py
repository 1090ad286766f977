"""Parameter-dependent center-manifold reduction and cycle-branch predictors.

For each codimension-two point the linear-in-parameter coefficients of the
center manifold (h terms), the eigenvalue/coefficient derivatives (gamma
terms) and the unfolding-to-model parameter transformation are computed by
Fredholm solvability, then combined with the critical normal form into
explicit predictors for the emanating limit-point-of-cycles and
Neimark-Sacker branches: parameter curve alpha(eps), period T(eps),
multiplier real part k(eps), state-space cycle on an equidistant phase mesh,
and the tangent obtained by differentiating everything in eps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, TransversalityError
from .linalg import BorderedOperator, inner
from .normalform import GhNormalForm, HhNormalForm, ZhNormalForm
from .tensors import DerivativeBundle

TWO_PI = 2.0 * np.pi
GH_D2_MIN = 1e-8
DEFAULT_EPS = 1e-3


def _unit(j):
    e = np.zeros(2)
    e[j] = 1.0
    return e


# ---------------------------------------------------------------------------
# generalized Hopf
# ---------------------------------------------------------------------------

@dataclass
class GhReduction:
    gamma1: np.ndarray          # d lambda / d alpha_mu, complex pair
    gamma2: np.ndarray          # d c1 / d alpha_mu, complex pair
    K: np.ndarray               # beta -> alpha transformation
    K_cond: float
    b12: float                  # d Im(lambda) / d beta2
    h00: list                   # equilibrium shift per alpha direction
    h10: list
    h01: list
    h20: list
    h11: list
    h21: list
    residuals: dict = field(default_factory=dict)


def reduce_gh(bundle: DerivativeBundle, nf: GhNormalForm) -> GhReduction:
    """Linear parameter terms of the center manifold at a generalized Hopf point."""
    A = bundle.A
    n = A.shape[0]
    omega, q, p, c1 = nf.omega, nf.q, nf.p, nf.c1
    I = np.eye(n)
    M1 = A - 1j * omega * I
    M1_b = BorderedOperator(M1, q, p)
    scale = max(1.0, float(np.linalg.norm(A, 2)))

    gamma1 = np.zeros(2, dtype=complex)
    gamma2 = np.zeros(2, dtype=complex)
    h00, h10, h01, h20, h11, h21 = [], [], [], [], [], []
    resid = {}
    for j in (0, 1):
        v = _unit(j)
        b00 = -bundle.J1 @ v
        h00_j = np.linalg.solve(A, b00)
        r1 = bundle.A1(q, v) + bundle.B(q, h00_j)
        g1 = inner(p, r1)
        h10_j, _ = M1_b.solve(g1 * q - r1)
        h01_j = np.conj(h10_j)

        rhs20 = 2.0 * g1 * nf.h2000 - (
            bundle.C(q, q, h00_j)
            + 2.0 * bundle.B(q, h10_j)
            + bundle.B(nf.h2000, h00_j)
            + bundle.B1(q, q, v)
            + bundle.A1(nf.h2000, v)
        )
        h20_j = np.linalg.solve(A - 2j * omega * I, rhs20)

        rhs11 = 2.0 * np.real(g1) * nf.h1100 - (
            bundle.C(q, np.conj(q), h00_j)
            + bundle.B(nf.h1100, h00_j)
            + bundle.B(np.conj(q), h10_j)
            + bundle.B(q, h01_j)
            + bundle.B1(q, np.conj(q), v)
            + bundle.A1(nf.h1100, v)
        )
        h11_j = np.linalg.solve(A, rhs11)

        bracket = (
            bundle.D4(q, q, np.conj(q), h00_j)
            + 2.0 * bundle.C(q, nf.h1100, h00_j)
            + 2.0 * bundle.C(q, np.conj(q), h10_j)
            + bundle.C(q, q, h01_j)
            + bundle.C(nf.h2000, np.conj(q), h00_j)
            + 2.0 * bundle.B(q, h11_j)
            + 2.0 * bundle.B(nf.h1100, h10_j)
            + bundle.B(nf.h2000, h01_j)
            + bundle.B(nf.h2100, h00_j)
            + bundle.B(h20_j, np.conj(q))
            + bundle.C1(q, q, np.conj(q), v)
            + 2.0 * bundle.B1(nf.h1100, q, v)
            + bundle.B1(nf.h2000, np.conj(q), v)
            + bundle.A1(nf.h2100, v)
        )
        g2 = 0.5 * (
            inner(p, bracket)
            - (2.0 * g1 + np.conj(g1)) * inner(p, nf.h2100)
            - 2.0 * c1 * inner(p, h10_j)
        )
        rhs21 = (
            2.0 * g2 * q
            + nf.h2100 * (2.0 * g1 + np.conj(g1))
            + 2.0 * h10_j * c1
            - bracket
        )
        h21_j, _ = M1_b.solve(rhs21)

        gamma1[j] = g1
        gamma2[j] = g2
        h00.append(h00_j)
        h10.append(h10_j)
        h01.append(h01_j)
        h20.append(h20_j)
        h11.append(h11_j)
        h21.append(h21_j)
        resid[f"h00_{j}"] = float(np.linalg.norm(A @ h00_j - b00)) / scale
        resid[f"h10_{j}"] = float(np.linalg.norm(M1 @ h10_j - (g1 * q - r1))) / scale
        resid[f"h20_{j}"] = float(np.linalg.norm((A - 2j * omega * I) @ h20_j - rhs20)) / scale
        resid[f"h11_{j}"] = float(np.linalg.norm(A @ h11_j - rhs11)) / scale
        resid[f"h21_{j}"] = float(np.linalg.norm(M1 @ h21_j - rhs21)) / scale

    G = np.real(np.vstack([gamma1, gamma2]))
    condG = float(np.linalg.cond(G))
    if condG > 1e12:
        raise TransversalityError(
            "parameter family is not transversal to the generalized-Hopf manifold "
            f"(condition number {condG:.3g})"
        )
    K = np.linalg.inv(G)
    b12 = float(np.imag(gamma1 @ K[:, 1]))
    return GhReduction(gamma1=gamma1, gamma2=gamma2, K=K, K_cond=condG, b12=b12,
                       h00=h00, h10=h10, h01=h01, h20=h20, h11=h11, h21=h21,
                       residuals=resid)


# ---------------------------------------------------------------------------
# zero Hopf
# ---------------------------------------------------------------------------

@dataclass
class ZhReduction:
    gamma: np.ndarray           # p1^T J1
    s1: np.ndarray
    s2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    deltas: np.ndarray          # delta1..delta4
    v10: np.ndarray
    v01: np.ndarray
    h0010: np.ndarray           # equilibrium shift per beta1
    h0001: np.ndarray           # per beta2
    h1010: np.ndarray
    h1001: np.ndarray
    h0110: np.ndarray
    h0101: np.ndarray
    omega_d: np.ndarray         # (d omega/d beta1, d omega/d beta2)
    LL: np.ndarray
    residuals: dict = field(default_factory=dict)


def reduce_zh(bundle: DerivativeBundle, nf: ZhNormalForm) -> ZhReduction:
    """Parameter-dependent reduction at a zero-Hopf point with hypernormalization.

    The frame (s1, s2) solves the solvability constraints of the singular
    equilibrium-shift system; the remaining freedom (multiples of the null
    vector and the beta scalings) is fixed so that no beta*x terms remain in
    the reduced x equation and the beta2 coefficient of the w equation has
    unit real part.
    """
    A = bundle.A
    n = A.shape[0]
    q1, p1, q2, p2 = nf.q1, nf.p1, nf.q2, nf.p2
    omega = nf.omega
    I = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(A, 2)))

    gamma = p1 @ bundle.J1
    if np.linalg.norm(gamma) < 1e-12 * scale:
        raise TransversalityError("p1^T J1 vanishes: family not transversal at zero-Hopf")
    s1 = gamma / (gamma @ gamma)
    s2 = np.array([-gamma[1], gamma[0]])

    A_b = BorderedOperator(A, q1, p1)
    r1, _ = A_b.solve(q1 - bundle.J1 @ s1)
    r2, _ = A_b.solve(-bundle.J1 @ s2)

    def sol1(vpar, hvec):
        # x-equation solvability quantity <p1, A1(q1,.) + B(q1,.)>
        return inner(p1, bundle.A1(q1, vpar) + bundle.B(q1, hvec))

    def sol2(vpar, hvec):
        # w-equation solvability quantity <p2, A1(q2,.) + B(q2,.)>
        return inner(p2, bundle.A1(q2, vpar) + bundle.B(q2, hvec))

    LL = np.array([
        [sol1(s2, r2), inner(p1, bundle.B(q1, q1))],
        [sol2(s2, r2), inner(p2, bundle.B(q2, q1))],
    ])
    ReLL = np.real(LL)
    if abs(np.linalg.det(ReLL)) < 1e-12 * max(1.0, np.linalg.norm(ReLL)) ** 2:
        raise DegeneracyError("hypernormalization system singular at zero-Hopf")

    rhs13 = -np.array([
        np.real(sol1(s1, r1) - inner(p1, nf.h20000)),
        np.real(sol2(s1, r1) - inner(p2, nf.h11000)),
    ])
    d1, d3 = np.linalg.solve(ReLL, rhs13)
    d2, d4 = np.linalg.solve(ReLL, np.array([0.0, 1.0]))

    v10 = s1 + d1 * s2
    v01 = d2 * s2
    h0010 = r1 + d1 * r2 + d3 * q1
    h0001 = d2 * r2 + d4 * q1

    # first-order manifold terms in (x, w) per beta direction, plus the
    # frequency derivatives from the imaginary parts of the w solvability
    M2 = A - 1j * omega * I
    M2_b = BorderedOperator(M2, q2, p2)

    h1010, _ = A_b.solve(nf.h20000 - bundle.A1(q1, v10) - bundle.B(q1, h0010))
    h1001, _ = A_b.solve(-bundle.A1(q1, v01) - bundle.B(q1, h0001))

    c10 = sol2(v10, h0010) - inner(p2, nf.h11000)
    c01 = sol2(v01, h0001)
    omega_d = np.array([np.imag(c10), np.imag(c01)])

    h0110, _ = M2_b.solve(c10 * q2 + nf.h11000 - bundle.A1(q2, v10) - bundle.B(q2, h0010))
    h0101, _ = M2_b.solve(c01 * q2 - bundle.A1(q2, v01) - bundle.B(q2, h0001))

    resid = {
        "h0010": float(np.linalg.norm(A @ h0010 - (q1 - bundle.J1 @ v10))) / scale,
        "h0001": float(np.linalg.norm(A @ h0001 + bundle.J1 @ v01)) / scale,
        "delta24": float(np.linalg.norm(ReLL @ np.array([d2, d4]) - np.array([0.0, 1.0]))),
        "h0110": float(np.linalg.norm(
            M2 @ h0110 - (c10 * q2 + nf.h11000 - bundle.A1(q2, v10) - bundle.B(q2, h0010))
        )) / scale,
    }
    return ZhReduction(gamma=gamma, s1=s1, s2=s2, r1=r1, r2=r2,
                       deltas=np.array([d1, d2, d3, d4]), v10=v10, v01=v01,
                       h0010=h0010, h0001=h0001, h1010=h1010, h1001=h1001,
                       h0110=h0110, h0101=h0101, omega_d=omega_d, LL=LL,
                       residuals=resid)


# ---------------------------------------------------------------------------
# double Hopf
# ---------------------------------------------------------------------------

@dataclass
class HhReduction:
    gamma1: np.ndarray
    gamma2: np.ndarray
    K: np.ndarray
    K_cond: float
    h0000: list
    h1000: list
    h0010: list
    domega_branch1: np.ndarray
    domega_branch2: np.ndarray
    residuals: dict = field(default_factory=dict)


def reduce_hh(bundle: DerivativeBundle, nf: HhNormalForm) -> HhReduction:
    """Linear parameter terms at a double-Hopf point; both eigenvalue pairs."""
    A = bundle.A
    n = A.shape[0]
    I = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    M1 = A - 1j * nf.omega1 * I
    M2 = A - 1j * nf.omega2 * I
    M1_b = BorderedOperator(M1, nf.q1, nf.p1)
    M2_b = BorderedOperator(M2, nf.q2, nf.p2)

    gamma1 = np.zeros(2, dtype=complex)
    gamma2 = np.zeros(2, dtype=complex)
    h0000, h1000, h0010 = [], [], []
    resid = {}
    for j in (0, 1):
        v = _unit(j)
        h00_j = np.linalg.solve(A, -bundle.J1 @ v)
        r1 = bundle.A1(nf.q1, v) + bundle.B(nf.q1, h00_j)
        r2 = bundle.A1(nf.q2, v) + bundle.B(nf.q2, h00_j)
        g1 = inner(nf.p1, r1)
        g2 = inner(nf.p2, r2)
        h10_j, _ = M1_b.solve(g1 * nf.q1 - r1)
        h01_j, _ = M2_b.solve(g2 * nf.q2 - r2)
        gamma1[j] = g1
        gamma2[j] = g2
        h0000.append(h00_j)
        h1000.append(h10_j)
        h0010.append(h01_j)
        resid[f"h0000_{j}"] = float(np.linalg.norm(A @ h00_j + bundle.J1 @ v)) / scale
        resid[f"h1000_{j}"] = float(np.linalg.norm(M1 @ h10_j - (g1 * nf.q1 - r1))) / scale
        resid[f"h0010_{j}"] = float(np.linalg.norm(M2 @ h01_j - (g2 * nf.q2 - r2))) / scale

    G = np.vstack([gamma1, gamma2])
    ReG = np.real(G)
    condG = float(np.linalg.cond(ReG))
    if condG > 1e12:
        raise TransversalityError(
            f"parameter family not transversal at double Hopf (cond {condG:.3g})"
        )
    K = np.linalg.inv(ReG)
    ImGK = np.imag(G) @ K

    def domega(pair):
        re = np.array([np.real(pair[0]), np.real(pair[1])])
        im = np.array([np.imag(pair[0]), np.imag(pair[1])])
        return -ImGK @ re + im

    return HhReduction(
        gamma1=gamma1, gamma2=gamma2, K=K, K_cond=condG,
        h0000=h0000, h1000=h1000, h0010=h0010,
        domega_branch1=domega((nf.f2100, nf.g1110)),
        domega_branch2=domega((nf.f1011, nf.g0021)),
        residuals=resid,
    )


# ---------------------------------------------------------------------------
# predictors
# ---------------------------------------------------------------------------

@dataclass
class PredictorSample:
    """Initial data for a cycle-bifurcation corrector at one amplitude."""

    case: str
    eps: float
    mesh: np.ndarray            # (N+1, n) closed curve at psi = 2 pi nu / N
    T: float
    alpha: np.ndarray           # two active parameter values
    k: float | None
    dmesh: np.ndarray           # d mesh / d eps
    dT: float
    dalpha: np.ndarray
    dk: float | None

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "eps": self.eps,
            "mesh": self.mesh.tolist(),
            "T": self.T,
            "alpha": self.alpha.tolist(),
            "k": self.k,
            "dmesh": self.dmesh.tolist(),
            "dT": self.dT,
            "dalpha": self.dalpha.tolist(),
            "dk": self.dk,
        }


@dataclass
class CyclePredictor:
    """Closed-form one-parameter family of approximate nonhyperbolic cycles.

    ``cycle(eps, psi)`` evaluates the state-space curve, ``alpha``/``period``/
    ``multiplier_k`` the scalar components, and the ``d*`` variants their
    derivatives with respect to the amplitude (the branch tangent).
    """

    case: str
    x0: np.ndarray
    alpha0: np.ndarray
    classification: str
    _alpha: callable = None
    _dalpha: callable = None
    _T: callable = None
    _dT: callable = None
    _k: callable = None
    _dk: callable = None
    _cycle: callable = None
    _dcycle: callable = None
    max_eps: float = 0.3

    def alpha(self, eps):
        return self.alpha0 + self._alpha(eps)

    def period(self, eps):
        return self._T(eps)

    def multiplier_k(self, eps):
        return None if self._k is None else self._k(eps)

    def cycle(self, eps, psi):
        """State-space point(s) of the predicted cycle; psi may be an array."""
        if eps > self.max_eps:
            warnings.warn(
                f"amplitude {eps} beyond configured validity bound {self.max_eps}",
                stacklevel=2,
            )
        return self._cycle(eps, np.asarray(psi, dtype=float))

    def sample(self, eps: float, N: int = 20) -> PredictorSample:
        psi = TWO_PI * np.arange(N + 1) / N
        return PredictorSample(
            case=self.case,
            eps=eps,
            mesh=self.cycle(eps, psi),
            T=float(self._T(eps)),
            alpha=self.alpha(eps),
            k=None if self._k is None else float(self._k(eps)),
            dmesh=self._dcycle(eps, psi),
            dT=float(self._dT(eps)),
            dalpha=self._dalpha(eps),
            dk=None if self._dk is None else float(self._dk(eps)),
        )


def _closed_curve(x0, terms):
    """Builds psi -> x0 + sum of Re(vec * e^(i m psi)) harmonics."""

    def evaluate(psi):
        out = np.broadcast_to(x0[None, :], (psi.size, x0.size)).copy()
        for m, vec in terms:
            if m == 0:
                out = out + np.real(vec)[None, :]
            else:
                out = out + 2.0 * np.real(np.exp(1j * m * psi)[:, None] * vec[None, :])
        return out

    return evaluate


def predict_gh_lpc(red: GhReduction, nf: GhNormalForm, x0, alpha0) -> CyclePredictor:
    """Limit-point-of-cycles predictor emanating from a generalized Hopf point."""
    d2 = nf.d2
    if abs(d2) < GH_D2_MIN:
        raise DegeneracyError(f"|d2|={abs(d2):.2e} too small to switch at generalized Hopf")
    omega, q = nf.omega, nf.q
    im_c1 = nf.im_c1
    K = red.K
    h00 = red.h00

    def beta(eps):
        return np.array([d2 * eps**4, -2.0 * d2 * eps**2])

    def dbeta(eps):
        return np.array([4.0 * d2 * eps**3, -4.0 * d2 * eps])

    def freq(eps):
        return omega + (im_c1 - 2.0 * d2 * red.b12) * eps**2

    def dfreq(eps):
        return 2.0 * (im_c1 - 2.0 * d2 * red.b12) * eps

    def alpha_shift(eps):
        return K @ beta(eps)

    def dalpha(eps):
        return K @ dbeta(eps)

    def cycle(eps, psi):
        da = alpha_shift(eps)
        const = eps**2 * nf.h1100 + h00[0] * da[0] + h00[1] * da[1]
        return _closed_curve(
            np.asarray(x0, dtype=float),
            [(0, const.astype(complex)), (1, eps * q), (2, 0.5 * eps**2 * nf.h2000)],
        )(psi)

    def dcycle(eps, psi):
        da = dalpha(eps)
        const = 2.0 * eps * nf.h1100 + h00[0] * da[0] + h00[1] * da[1]
        return _closed_curve(
            np.zeros_like(np.asarray(x0, dtype=float)),
            [(0, const.astype(complex)), (1, q), (2, eps * nf.h2000)],
        )(psi)

    return CyclePredictor(
        case="GH-LPC", x0=np.asarray(x0, float), alpha0=np.asarray(alpha0, float),
        classification="lpc",
        _alpha=alpha_shift, _dalpha=dalpha,
        _T=lambda e: TWO_PI / freq(e),
        _dT=lambda e: -TWO_PI * dfreq(e) / freq(e) ** 2,
        _k=None, _dk=None,
        _cycle=cycle, _dcycle=dcycle,
    )


def predict_zh_ns(red: ZhReduction, nf: ZhNormalForm, x0, alpha0) -> CyclePredictor:
    """Neimark-Sacker (or neutral-saddle) predictor at a zero-Hopf point."""
    f200, f011, f111 = nf.f200, nf.f011, nf.f111
    re_g110, im_g110 = float(np.real(nf.g110)), float(np.imag(nf.g110))
    re_g021, im_g021 = float(np.real(nf.g021)), float(np.imag(nf.g021))
    omega0 = nf.omega
    q1, q2 = nf.q1, nf.q2

    xc_coef = -(f111 + 2.0 * re_g021) / (2.0 * f200)
    b1_coef = -f011
    b2_coef = (2.0 * (re_g110 - f200) * re_g021 + re_g110 * f111) / (2.0 * f200)
    k_coef = 4.0 * np.pi**2 * re_g110 * f011 / omega0**2
    classification = "torus" if re_g110 * f011 < 0 else "neutral_saddle"

    def beta(eps):
        return np.array([b1_coef, b2_coef]) * eps**2

    def alpha_shift(eps):
        b = beta(eps)
        return red.v10 * b[0] + red.v01 * b[1]

    def dalpha(eps):
        return (red.v10 * b1_coef + red.v01 * b2_coef) * 2.0 * eps

    def freq(eps):
        b = beta(eps)
        return (
            omega0
            + red.omega_d[0] * b[0]
            + red.omega_d[1] * b[1]
            + im_g110 * xc_coef * eps**2
            + im_g021 * eps**2
        )

    dfreq_coef = (
        red.omega_d[0] * b1_coef + red.omega_d[1] * b2_coef
        + im_g110 * xc_coef + im_g021
    )

    def cycle(eps, psi):
        b = beta(eps)
        const = (
            xc_coef * eps**2 * q1.astype(complex)
            + eps**2 * nf.h01100.astype(complex)
            + red.h0010 * b[0]
            + red.h0001 * b[1]
        )
        return _closed_curve(
            np.asarray(x0, dtype=float),
            [(0, const), (1, eps * q2), (2, 0.5 * eps**2 * nf.h02000)],
        )(psi)

    def dcycle(eps, psi):
        const = 2.0 * eps * (
            xc_coef * q1.astype(complex)
            + nf.h01100.astype(complex)
            + red.h0010 * b1_coef
            + red.h0001 * b2_coef
        )
        return _closed_curve(
            np.zeros(len(x0)),
            [(0, const), (1, q2), (2, eps * nf.h02000)],
        )(psi)

    return CyclePredictor(
        case="ZH-NS", x0=np.asarray(x0, float), alpha0=np.asarray(alpha0, float),
        classification=classification,
        _alpha=alpha_shift, _dalpha=dalpha,
        _T=lambda e: TWO_PI / freq(e),
        _dT=lambda e: -TWO_PI * (2.0 * dfreq_coef * e) / freq(e) ** 2,
        _k=lambda e: 1.0 + k_coef * e**2,
        _dk=lambda e: 2.0 * k_coef * e,
        _cycle=cycle, _dcycle=dcycle,
    )


def predict_hh_ns(red: HhReduction, nf: HhNormalForm, x0, alpha0, branch: int) -> CyclePredictor:
    """One of the two Neimark-Sacker predictors at a double-Hopf point."""
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    if branch == 1:
        beta_coef = -np.array([np.real(nf.f2100), np.real(nf.g1110)])
        q = nf.q1
        h20, h11 = nf.h2000, nf.h1100
        w_cycle, w_normal = nf.omega1, nf.omega2
        dw = red.domega_branch1
        dw_cycle, dw_normal = dw[0], dw[1]
    else:
        beta_coef = -np.array([np.real(nf.f1011), np.real(nf.g0021)])
        q = nf.q2
        h20, h11 = nf.h0020, nf.h0011
        w_cycle, w_normal = nf.omega2, nf.omega1
        dw = red.domega_branch2
        dw_cycle, dw_normal = dw[1], dw[0]
    K = red.K
    h00 = red.h0000

    def alpha_shift(eps):
        return K @ (beta_coef * eps**2)

    def dalpha(eps):
        return K @ (beta_coef * 2.0 * eps)

    def period(eps):
        return TWO_PI / (w_cycle + dw_cycle * eps**2)

    def dperiod(eps):
        return -TWO_PI * 2.0 * dw_cycle * eps / (w_cycle + dw_cycle * eps**2) ** 2

    def k_of(eps):
        return np.cos(period(eps) * (w_normal + dw_normal * eps**2))

    def dk_of(eps):
        arg = period(eps) * (w_normal + dw_normal * eps**2)
        darg = dperiod(eps) * (w_normal + dw_normal * eps**2) + period(eps) * 2.0 * dw_normal * eps
        return -np.sin(arg) * darg

    def cycle(eps, psi):
        da = alpha_shift(eps)
        const = eps**2 * h11 + h00[0] * da[0] + h00[1] * da[1]
        return _closed_curve(
            np.asarray(x0, dtype=float),
            [(0, const.astype(complex)), (1, eps * q), (2, 0.5 * eps**2 * h20)],
        )(psi)

    def dcycle(eps, psi):
        da = dalpha(eps)
        const = 2.0 * eps * h11 + h00[0] * da[0] + h00[1] * da[1]
        return _closed_curve(
            np.zeros(len(x0)),
            [(0, const.astype(complex)), (1, q), (2, eps * h20)],
        )(psi)

    return CyclePredictor(
        case=f"HH-NS-branch{branch}", x0=np.asarray(x0, float),
        alpha0=np.asarray(alpha0, float), classification="torus-or-neutral",
        _alpha=alpha_shift, _dalpha=dalpha,
        _T=period, _dT=dperiod,
        _k=k_of, _dk=dk_of,
        _cycle=cycle, _dcycle=dcycle,
    )


def predictor_tangent(pred: CyclePredictor, eps: float, N: int = 20) -> np.ndarray:
    """Normalized concatenated derivative (mesh, T, alpha[, k]) w.r.t. eps."""
    s = pred.sample(eps, N)
    parts = [s.dmesh.ravel(), [s.dT], s.dalpha]
    if s.dk is not None:
        parts.append([s.dk])
    t = np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])
    return t / np.linalg.norm(t)
