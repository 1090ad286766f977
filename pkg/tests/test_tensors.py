import numpy as np
import pytest

from bifkit import bundle_at, eval_rhs
from bifkit.app.models import builtin_laser, builtin_lorenz84ext
from bifkit.errors import InputError
from bifkit.tensors import OdeModel, jacobian_at, jacobian_batch, param_jacobian_batch

RNG = np.random.default_rng(7)


def _poly_model():
    # random degree-4 polynomial field in R^3 with parameter coupling
    n = 3
    A = RNG.normal(size=(n, n))
    Bt = RNG.normal(size=(n, n, n))
    Bt = (Bt + Bt.transpose(0, 2, 1)) / 2
    Ct = RNG.normal(size=(n, n, n, n)) / 6
    J = RNG.normal(size=(n, 2))
    Ax = RNG.normal(size=(n, n, 2))

    def rhs(x, p):
        out = []
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + A[i, j] * x[j] + (Ax[i, j, 0] * p[0] + Ax[i, j, 1] * p[1]) * x[j]
                for k in range(n):
                    acc = acc + Bt[i, j, k] * x[j] * x[k]
                    for l in range(n):
                        acc = acc + Ct[i, j, k, l] * x[j] * x[k] * x[l] * x[l]
            acc = acc + J[i, 0] * p[0] + J[i, 1] * p[1]
            out.append(acc)
        return out

    model = OdeModel(name="poly", n=n, p_total=2, active=(0, 1), rhs=rhs,
                     params=np.zeros(2))
    return model, A, Bt, Ax, J


def test_eval_rhs_lorenz_trivial_point():
    model = builtin_lorenz84ext(F=0.0, T=0.0)
    out = eval_rhs(model, np.zeros(4), model.params)
    np.testing.assert_allclose(out, [0.0, 0.25, 0.0, 0.0], atol=1e-15)


def test_eval_rhs_linear_model():
    M = RNG.normal(size=(3, 3))

    def rhs(x, p):
        return [sum(M[i, j] * x[j] for j in range(3)) for i in range(3)]

    model = OdeModel(name="lin", n=3, p_total=2, active=(0, 1), rhs=rhs, params=np.zeros(2))
    x = RNG.normal(size=3)
    np.testing.assert_allclose(eval_rhs(model, x, model.params), M @ x, rtol=1e-14)


def test_eval_rhs_dimension_mismatch():
    model = builtin_lorenz84ext()
    with pytest.raises(InputError):
        eval_rhs(model, np.zeros(3), model.params)


def test_componentwise_square_bundle():
    def rhs(x, p):
        return [x[0] * x[0], x[1] * x[1]]

    model = OdeModel(name="sq", n=2, p_total=2, active=(0, 1), rhs=rhs, params=np.zeros(2))
    b = bundle_at(model, np.zeros(2), model.params, order=4)
    u = RNG.normal(size=2)
    v = RNG.normal(size=2)
    np.testing.assert_allclose(np.real(b.B(u, v)), 2 * u * v, atol=1e-12)
    np.testing.assert_allclose(np.real(b.C(u, v, u)), 0.0, atol=1e-10)
    np.testing.assert_allclose(np.real(b.D4(u, v, u, v)), 0.0, atol=1e-8)


@pytest.mark.parametrize("mode", ["jet", "fd"])
def test_poly_forms_match_symbolic(mode):
    model, A, Bt, Ax, J = _poly_model()
    x0 = RNG.normal(size=3) * 0.3
    p0 = np.array([0.1, -0.2])
    b = bundle_at(model, x0, p0, order=3, mode=mode)
    tol = 1e-12 if mode == "jet" else 1e-6
    # Jacobian against analytic derivative of the cubic-quartic field
    u = RNG.normal(size=3)
    v = RNG.normal(size=3)

    def symbolic_B(u, v):
        out = np.zeros(3)
        for i in range(3):
            acc = 0.0
            for j in range(3):
                for k in range(3):
                    acc += Bt[i, j, k] * (u[j] * v[k] + v[j] * u[k])
            out[i] = acc
        # quartic term x_j x_k x_l^2 contributes to B as well at x0 != 0
        return out

    # compare pure-quadratic part by moving base point to zero
    b0 = bundle_at(model, np.zeros(3), np.zeros(2), order=3, mode=mode)
    np.testing.assert_allclose(np.real(b0.B(u, v)), symbolic_B(u, v), rtol=5 * tol, atol=5 * tol)
    # A1 as directional derivative of A in parameter direction
    np.testing.assert_allclose(np.real(b0.A1(u, 0)), Ax[:, :, 0] @ u, rtol=tol * 10, atol=tol * 10)
    np.testing.assert_allclose(b0.J1, J, rtol=tol * 10, atol=tol * 10)
    # multilinearity in the first slot
    a, c = 0.7, -1.3
    w = RNG.normal(size=3)
    lhs = b.B(a * u + c * w, v)
    rhs_val = a * b.B(u, v) + c * b.B(w, v)
    np.testing.assert_allclose(lhs, rhs_val, rtol=1e-6 if mode == "fd" else 1e-10, atol=1e-6 if mode == "fd" else 1e-10)


def test_symmetry_under_argument_swap():
    model, *_ = _poly_model()
    b = bundle_at(model, RNG.normal(size=3) * 0.2, np.array([0.05, 0.02]), order=3)
    u, v, w = RNG.normal(size=(3, 3))
    np.testing.assert_allclose(b.B(u, v), b.B(v, u), rtol=1e-12)
    np.testing.assert_allclose(b.C(u, v, w), b.C(w, u, v), rtol=1e-12)


def test_complex_consistency():
    model, *_ = _poly_model()
    b = bundle_at(model, RNG.normal(size=3) * 0.2, np.zeros(2), order=2)
    q = RNG.normal(size=3) + 1j * RNG.normal(size=3)
    lhs = np.real(b.B(q, np.conj(q)))
    rhs_val = np.real(b.B(np.real(q), np.real(q)) + b.B(np.imag(q), np.imag(q)))
    np.testing.assert_allclose(lhs, rhs_val, rtol=1e-10, atol=1e-12)


def test_fd_convergence_order():
    # directional derivatives converge at the expected order while truncation
    # error dominates (rational field, all derivative orders nonzero)
    def rhs(x, p):
        return [1.0 / (1.0 + x[0] + 0.5 * x[1]), x[1] / (2.0 - x[0])]

    model = OdeModel(name="m", n=2, p_total=2, active=(0, 1), rhs=rhs,
                     params=np.zeros(2), diff_mode="fd")
    x0 = np.array([0.4, -0.3])
    u = np.array([1.0, 0.5])
    exact = np.real(bundle_at(model, x0, model.params, order=2, mode="jet").B(u, u))

    from bifkit.tensors import _CENTRAL_STENCILS

    errors = []
    hs = [2e-1, 2e-2]
    for h in hs:
        offsets, weights = _CENTRAL_STENCILS[2]
        acc = np.zeros(2)
        for off, wgt in zip(offsets, weights):
            acc = acc + wgt * eval_rhs(model, x0 + off * h * u, model.params)
        errors.append(np.linalg.norm(acc / h**2 - exact))
    order = np.log(errors[0] / errors[1]) / np.log(hs[0] / hs[1])
    assert abs(order - 2.0) < 0.5


def test_jacobian_batch_matches_bundle():
    model = builtin_lorenz84ext(F=1.3, T=0.02)
    X = RNG.normal(size=(4, 6))
    J = jacobian_batch(model, X, model.params)
    for i in (0, 3, 5):
        b = bundle_at(model, X[:, i], model.params, order=1)
        np.testing.assert_allclose(J[i], b.A, rtol=1e-12, atol=1e-12)


def test_param_jacobian_batch():
    model = builtin_lorenz84ext(F=1.3, T=0.02)
    X = RNG.normal(size=(4, 3))
    JP = param_jacobian_batch(model, X, model.params)
    b = bundle_at(model, X[:, 1], model.params, order=1)
    np.testing.assert_allclose(JP[1], b.J1, rtol=1e-12, atol=1e-12)


def test_laser_realification_against_complex_oracle():
    model = builtin_laser(Delta_cav=1.3, Omega_p=4.2)
    x = RNG.normal(size=9) + np.array([2.0, 0, 0, 0, 0, 0, 0, 0, 0])  # keep Omega_l away from 0
    p = model.params
    g1, g2, g3, gcav, g, Dp, Dcav, Op = p
    Ol = x[0]
    raa, rbb = x[1], x[2]
    sab = x[3] + 1j * x[4]
    sac = x[5] + 1j * x[6]
    scb = x[7] + 1j * x[8]
    Ra = -0.505 * raa - 0.405 * rbb + 0.45
    Rb = 0.0495 * raa - 0.0505 * rbb + 0.0055
    Dl = Dcav + g * np.real(sab) / Ol
    d_Ol = -gcav / 2 * Ol - g * np.imag(sab)
    d_raa = Ra - 0.5j * (Ol * (sab - np.conj(sab)) + Op * (sac - np.conj(sac)))
    d_rbb = Rb + 0.5j * Ol * (sab - np.conj(sab))
    d_sab = -(g1 + 1j * Dl) * sab - 0.5j * (Ol * (raa - rbb) - Op * scb)
    d_sac = -(g2 + 1j * Dp) * sac - 0.5j * (Op * (2 * raa + rbb - 1) - Ol * np.conj(scb))
    d_scb = -(g3 + 1j * (Dl - Dp)) * scb - 0.5j * (Ol * np.conj(sac) - Op * sab)
    expected = np.array([
        d_Ol, np.real(d_raa), np.real(d_rbb),
        np.real(d_sab), np.imag(d_sab),
        np.real(d_sac), np.imag(d_sac),
        np.real(d_scb), np.imag(d_scb),
    ])
    assert abs(np.imag(d_raa)) < 1e-14 and abs(np.imag(d_rbb)) < 1e-14
    np.testing.assert_allclose(eval_rhs(model, x, p), expected, rtol=1e-12, atol=1e-12)


def test_laser_singularity_guard():
    from bifkit.errors import ModelSingularityError

    model = builtin_laser()
    x = np.zeros(9)
    with pytest.raises(ModelSingularityError):
        eval_rhs(model, x, model.params)


def test_lorenz_pure_cubic_state_tensors_vanish():
    model = builtin_lorenz84ext()
    x0 = RNG.normal(size=4)
    b = bundle_at(model, x0, model.params, order=3)
    u, v, w = RNG.normal(size=(3, 4))
    np.testing.assert_allclose(np.real(b.C(u, v, w)), 0.0, atol=1e-12)


def test_multilinear_arity_check():
    model = builtin_lorenz84ext()
    b = bundle_at(model, np.zeros(4), model.params, order=2)
    form = b.form(2)
    with pytest.raises(InputError):
        form(np.zeros(4))
    u = np.zeros(4)
    np.testing.assert_allclose(np.real(form(u, RNG.normal(size=4))), 0.0, atol=1e-14)
