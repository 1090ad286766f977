"""Builtin example models and synthetic normal-form test models.

All right-hand sides are written with plain scalar arithmetic so they work
unchanged on floats, numpy batches and Taylor jets (exact derivatives).
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError, ModelSingularityError
from ..jets import Jet
from ..tensors import OdeModel


def _is_zero(v) -> bool:
    if isinstance(v, Jet):
        return bool(np.any(v.c[0] == 0))
    return bool(np.any(np.asarray(v) == 0))


def _matvec(M, vec):
    return [sum(M[i, j] * vec[j] for j in range(len(vec))) for i in range(M.shape[0])]


# ---------------------------------------------------------------------------
# extended Lorenz-84
# ---------------------------------------------------------------------------

def builtin_lorenz84ext(F: float = 2.0, T: float = 0.05) -> OdeModel:
    """Four-variable Lorenz-84 atmosphere model extended with a slow scalar U.

    Fixed parameters alpha=.25, beta=1, G=.25, delta=1.04, gamma=.987;
    continuation parameters are (F, T).
    """

    def rhs(x, p):
        X, Y, Z, U = x[0], x[1], x[2], x[3]
        a, b, G, d, g, Fv, Tv = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
        return [
            -Y * Y - Z * Z - a * X + a * Fv - g * U * U,
            X * Y - b * X * Z - Y + G,
            b * X * Y + X * Z - Z,
            -d * U + g * U * X + Tv,
        ]

    return OdeModel(
        name="lorenz84ext",
        n=4,
        p_total=7,
        active=(5, 6),
        rhs=rhs,
        params=np.array([0.25, 1.0, 0.25, 1.04, 0.987, F, T]),
        state_names=("X", "Y", "Z", "U"),
        param_names=("alpha", "beta", "G", "delta", "gamma", "F", "T"),
    )


# ---------------------------------------------------------------------------
# inversionless laser (realified, 9 states)
# ---------------------------------------------------------------------------

def builtin_laser(Delta_cav: float = 5.0, Omega_p: float = 7.0) -> OdeModel:
    """Single-mode inversionless laser, three complex coherences realified.

    State order: (Omega_l, rho_aa, rho_bb, Re s_ab, Im s_ab, Re s_ac, Im s_ac,
    Re s_cb, Im s_cb).  Continuation parameters are (Delta_cav, Omega_p).
    The field equation divides by Omega_l, so evaluation at Omega_l = 0 is
    rejected.
    """

    def rhs(x, p):
        if _is_zero(x[0]):
            raise ModelSingularityError("laser rhs singular at Omega_l = 0")
        Ol = x[0]
        raa, rbb = x[1], x[2]
        sab_r, sab_i = x[3], x[4]
        sac_r, sac_i = x[5], x[6]
        scb_r, scb_i = x[7], x[8]
        g1, g2, g3, gcav, g, Dp, Dcav, Op = (
            p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7],
        )
        Ra = -0.505 * raa - 0.405 * rbb + 0.45
        Rb = 0.0495 * raa - 0.0505 * rbb + 0.0055
        Dl = Dcav + g * sab_r / Ol
        D3 = Dl - Dp
        return [
            -(gcav / 2.0) * Ol - g * sab_i,
            Ra + Ol * sab_i + Op * sac_i,
            Rb - Ol * sab_i,
            -g1 * sab_r + Dl * sab_i - (Op / 2.0) * scb_i,
            -g1 * sab_i - Dl * sab_r - (Ol / 2.0) * (raa - rbb) + (Op / 2.0) * scb_r,
            -g2 * sac_r + Dp * sac_i + (Ol / 2.0) * scb_i,
            -g2 * sac_i - Dp * sac_r - (Op / 2.0) * (2.0 * raa + rbb - 1.0) + (Ol / 2.0) * scb_r,
            -g3 * scb_r + D3 * scb_i - (Ol / 2.0) * sac_i - (Op / 2.0) * sab_i,
            -g3 * scb_i - D3 * scb_r - (Ol / 2.0) * sac_r + (Op / 2.0) * sab_r,
        ]

    return OdeModel(
        name="laser",
        n=9,
        p_total=8,
        active=(6, 7),
        rhs=rhs,
        params=np.array([0.05, 0.25525, 0.25025, 0.03, 100.0, 0.0, Delta_cav, Omega_p]),
        state_names=(
            "Omega_l", "rho_aa", "rho_bb", "Re_s_ab", "Im_s_ab",
            "Re_s_ac", "Im_s_ac", "Re_s_cb", "Im_s_cb",
        ),
        param_names=(
            "gamma1", "gamma2", "gamma3", "gamma_cav", "g", "Delta_p",
            "Delta_cav", "Omega_p",
        ),
    )


LASER_Z2_FLIP = (0, 4, 5, 7)  # states whose sign flips under Delta_cav -> -Delta_cav


def laser_z2_image(x: np.ndarray) -> np.ndarray:
    """Symmetric partner state under the Delta_cav sign flip."""
    y = np.array(x, dtype=float)
    y[list(LASER_Z2_FLIP)] *= -1.0
    return y


# ---------------------------------------------------------------------------
# embedded normal-form models (oracles)
# ---------------------------------------------------------------------------

def _embed(center_rhs, nc: int, extra: int, ortho, stable_rates, quad, name, premix):
    """Embed a center block in nc+extra dimensions.

    The decoupled system (center block, linearly stable block) is transformed
    by ``y = Q (z + phi(z))`` where phi adds quadratic center terms to the
    stable components only; the inverse is polynomial, so the model stays
    jet-safe and the normal-form data of the center block are preserved
    exactly (Q orthogonal).
    """
    dim = nc + extra
    if ortho is None:
        Q = np.eye(dim)
    else:
        Q = np.asarray(ortho, dtype=float)
        if Q.shape != (dim, dim) or not np.allclose(Q.T @ Q, np.eye(dim), atol=1e-12):
            raise InputError("ortho must be an orthogonal matrix of the embedded dimension")
    rates = np.asarray(stable_rates, dtype=float) if extra else np.zeros(0)
    S = quad  # list of (extra) symmetric nc x nc arrays or None
    premix = np.asarray(premix, dtype=float)

    def rhs(y, p):
        beta = _matvec(premix, [p[0], p[1]])
        z = _matvec(Q.T, list(y))  # Q^T y = z + phi(z)
        zc = z[:nc]
        zs = []
        for j in range(extra):
            sj = z[nc + j]
            if S is not None:
                sj = sj - sum(S[j][a, b] * zc[a] * zc[b] for a in range(nc) for b in range(nc))
            zs.append(sj)
        dzc = center_rhs(zc, beta)
        dz = list(dzc)
        for j in range(extra):
            dsj = -rates[j] * zs[j]
            if S is not None:
                dsj = dsj + sum(
                    (S[j][a, b] + S[j][b, a]) * zc[a] * dzc[b]
                    for a in range(nc) for b in range(nc)
                )
            dz.append(dsj)
        return _matvec(Q, dz)

    return OdeModel(
        name=name, n=dim, p_total=2, active=(0, 1), rhs=rhs,
        params=np.zeros(2),
    )


def build_embedded_gh(omega: float = 1.0, c1: complex = 0.37j, c2: complex = 0.3 - 1.0j,
                      b1: tuple = (0.0, 0.0), premix=None, extra: int = 0,
                      ortho=None, stable_rates=(1.0, 1.5), quad=None,
                      name: str = "bautin"):
    """Planar Bautin normal form, optionally embedded and parameter-premixed.

    Unfolding: lambda(beta) = i*omega + beta1 + i*(b1 . beta), and the cubic
    coefficient is c1 + beta2 (so Re c1' = beta2 when Re c1 = 0); model
    parameters alpha enter through beta = premix @ alpha.
    """
    if premix is None:
        premix = np.eye(2)
    b1 = np.asarray(b1, dtype=float)
    # pre-compensate the <q,q>=1 eigenvector normalization: with w realified
    # as (x, y) = (Re w, Im w), the normalized frame carries w/sqrt(2), which
    # doubles cubic and quadruples quintic coefficients on recovery
    c1c, c2c = c1 / 2.0, c2 / 4.0

    def center_rhs(zc, beta):
        u, v = zc[0], zc[1]
        b1v, b2v = beta[0], beta[1]
        r2 = u * u + v * v
        lam_re = b1v
        lam_im = omega + b1[0] * b1v + b1[1] * b2v
        c1_re = c1c.real + b2v / 2.0
        c1_im = c1c.imag
        du = lam_re * u - lam_im * v + (c1_re * u - c1_im * v) * r2 \
            + (c2c.real * u - c2c.imag * v) * r2 * r2
        dv = lam_im * u + lam_re * v + (c1_im * u + c1_re * v) * r2 \
            + (c2c.imag * u + c2c.real * v) * r2 * r2
        return [du, dv]

    model = _embed(center_rhs, 2, extra, ortho, stable_rates, quad, name, premix)
    info = {"omega": omega, "c1": c1, "c2": c2, "b1": b1, "premix": np.asarray(premix),
            "expected_c1": c1, "expected_c2": c2}
    return model, info


def build_embedded_zh(omega: float = 1.0, f200: float = 1.0, f011: float = -1.0,
                      g110: complex = 0.5 + 0.2j, g021: complex = -0.3 + 0.1j,
                      f111: float = 0.7, f300: float = 0.4, g210: complex = 0.6 - 0.5j,
                      omega_slopes: tuple = (0.0, 0.0), premix=None, extra: int = 0,
                      ortho=None, stable_rates=(1.0,), quad=None,
                      name: str = "zero_hopf_oracle"):
    """Zero-Hopf normal form in R^3: real axis u, complex axis w = x2 + i x3.

    beta1 is the constant term of the u equation, beta2 the real eigenvalue
    shift of the w equation; omega(beta) = omega + omega_slopes . beta.
    """
    if premix is None:
        premix = np.eye(2)
    ws = np.asarray(omega_slopes, dtype=float)
    # pre-compensate the factor 2 per |w|^2 of the normalized frame
    f011c, f111c, g021c = f011 / 2.0, f111 / 2.0, g021 / 2.0

    def center_rhs(zc, beta):
        u, wr, wi = zc[0], zc[1], zc[2]
        b1v, b2v = beta[0], beta[1]
        r2 = wr * wr + wi * wi
        du = b1v + f200 * u * u + f011c * r2 + f300 * u * u * u + f111c * u * r2
        lam_re = b2v + g110.real * u + g210.real * u * u + g021c.real * r2
        lam_im = omega + ws[0] * b1v + ws[1] * b2v + g110.imag * u \
            + g210.imag * u * u + g021c.imag * r2
        dwr = lam_re * wr - lam_im * wi
        dwi = lam_im * wr + lam_re * wi
        return [du, dwr, dwi]

    model = _embed(center_rhs, 3, extra, ortho, stable_rates, quad, name, premix)
    info = {
        "omega": omega, "premix": np.asarray(premix), "omega_slopes": ws,
        "coeffs": {"f200": f200, "f011": f011, "g110": g110, "g021": g021,
                   "f111": f111, "f300": f300, "g210": g210},
        # the recovered real null vector may flip sign, which flips odd-u terms
        "expected": lambda sgn: {
            "f200": sgn * f200, "f011": sgn * f011, "g110": sgn * g110,
            "g021": g021, "f111": f111, "f300": f300, "g210": g210,
        },
    }
    return model, info


def build_embedded_hh(omega1: float = 2.0, omega2: float = 0.87,
                      f2100: complex = -1.0 + 0.3j, f1011: complex = 0.4 - 0.7j,
                      g1110: complex = 0.9 + 0.5j, g0021: complex = -0.6 - 0.2j,
                      f1022: complex = 0.25 + 0.15j, g2210: complex = -0.35 + 0.45j,
                      omega1_slopes: tuple = (0.0, 0.0), omega2_slopes: tuple = (0.0, 0.0),
                      premix=None, extra: int = 0, ortho=None, stable_rates=(1.0,),
                      quad=None, name: str = "double_hopf_oracle"):
    """Double-Hopf normal form in R^4 (w1 = x1 + i x2, w2 = x3 + i x4).

    Unfolding: lambda_j(beta) = i*omega_j(beta) + beta_j with linear
    omega_j(beta); fifth-order cross terms are included so their recovery can
    be checked.
    """
    if premix is None:
        premix = np.eye(2)
    w1s = np.asarray(omega1_slopes, dtype=float)
    w2s = np.asarray(omega2_slopes, dtype=float)
    # pre-compensate the normalized-frame factors (2 per |w|^2, 4 per |w|^4)
    a2100, a1011, a1022 = f2100 / 2.0, f1011 / 2.0, f1022 / 4.0
    b1110, b0021, b2210 = g1110 / 2.0, g0021 / 2.0, g2210 / 4.0

    def center_rhs(zc, beta):
        u1, v1, u2, v2 = zc[0], zc[1], zc[2], zc[3]
        b1v, b2v = beta[0], beta[1]
        r1 = u1 * u1 + v1 * v1
        r2 = u2 * u2 + v2 * v2
        lam1_re = b1v + a2100.real * r1 + a1011.real * r2 + a1022.real * r2 * r2
        lam1_im = omega1 + w1s[0] * b1v + w1s[1] * b2v \
            + a2100.imag * r1 + a1011.imag * r2 + a1022.imag * r2 * r2
        lam2_re = b2v + b1110.real * r1 + b0021.real * r2 + b2210.real * r1 * r1
        lam2_im = omega2 + w2s[0] * b1v + w2s[1] * b2v \
            + b1110.imag * r1 + b0021.imag * r2 + b2210.imag * r1 * r1
        return [
            lam1_re * u1 - lam1_im * v1,
            lam1_im * u1 + lam1_re * v1,
            lam2_re * u2 - lam2_im * v2,
            lam2_im * u2 + lam2_re * v2,
        ]

    model = _embed(center_rhs, 4, extra, ortho, stable_rates, quad, name, premix)
    info = {
        "omega1": omega1, "omega2": omega2, "premix": np.asarray(premix),
        "omega1_slopes": w1s, "omega2_slopes": w2s,
        "expected": {
            "f2100": f2100, "f1011": f1011,
            "g1110": g1110, "g0021": g0021,
            "f1022": f1022, "g2210": g2210,
        },
    }
    return model, info


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def _coerce_complex(kw):
    # declarative files express complex coefficients as [re, im] pairs
    out = {}
    for k, v in kw.items():
        if isinstance(v, (list, tuple)) and len(v) == 2 and k not in ("premix",) \
                and all(isinstance(x, (int, float)) for x in v) \
                and k.startswith(("c", "f", "g")):
            out[k] = complex(v[0], v[1])
        else:
            out[k] = v
    return out


_REGISTRY = {
    "lorenz84ext": lambda **kw: builtin_lorenz84ext(**kw),
    "laser": lambda **kw: builtin_laser(**kw),
    "bautin": lambda **kw: build_embedded_gh(**_coerce_complex(kw))[0],
    "zero_hopf_oracle": lambda **kw: build_embedded_zh(**_coerce_complex(kw))[0],
    "double_hopf_oracle": lambda **kw: build_embedded_hh(**_coerce_complex(kw))[0],
}


def model_names() -> list[str]:
    return sorted(_REGISTRY)


def load_model(name: str, **kwargs) -> OdeModel:
    if name not in _REGISTRY:
        raise InputError(f"unknown model '{name}'; available: {', '.join(model_names())}")
    return _REGISTRY[name](**kwargs)
