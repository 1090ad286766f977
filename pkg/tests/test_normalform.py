import numpy as np
import pytest
from scipy.stats import ortho_group

from bifkit import bundle_at, critical_gh, critical_hh, critical_zh, eig_with_adjoint
from bifkit.app.models import build_embedded_gh, build_embedded_hh, build_embedded_zh
from bifkit.errors import DegeneracyError

RNG = np.random.default_rng(23)


def _gh_setup(**kwargs):
    model, info = build_embedded_gh(**kwargs)
    bundle = bundle_at(model, np.zeros(model.n), model.params, order=5)
    eig = eig_with_adjoint(bundle.A, 1j * info["omega"])
    return model, info, bundle, eig


def _rand_quad(extra, nc):
    out = []
    for _ in range(extra):
        S = RNG.normal(size=(nc, nc)) * 0.3
        out.append((S + S.T) / 2)
    return out


class TestGh:
    def test_planar_recovery(self):
        c1 = 0.41j
        c2 = 0.3 - 1.0j
        model, info, bundle, eig = _gh_setup(omega=1.3, c1=c1, c2=c2)
        nf = critical_gh(bundle, eig)
        assert abs(nf.c1 - info["expected_c1"]) < 1e-8
        assert abs(nf.c2 - info["expected_c2"]) < 1e-8
        assert abs(nf.d1) < 1e-10

    def test_embedded_with_orthogonal_change(self):
        Q = ortho_group.rvs(4, random_state=5)
        quad = _rand_quad(2, 2)
        model, info, bundle, eig = _gh_setup(
            omega=0.9, c1=-0.7j, c2=-0.45 + 0.8j, extra=2, ortho=Q,
            stable_rates=(1.0, 2.5), quad=quad,
        )
        nf = critical_gh(bundle, eig)
        assert abs(nf.c1 - info["expected_c1"]) < 1e-7
        assert abs(nf.c2 - info["expected_c2"]) < 1e-7

    def test_d2_sign_invariant_under_phase(self):
        model, info, bundle, eig = _gh_setup(omega=1.1, c1=0.2j, c2=0.6 - 0.3j)
        nf1 = critical_gh(bundle, eig)
        eig_rot = eig
        eig_rot.q = eig.q * np.exp(0.7j)
        eig_rot.p = eig.p * np.exp(0.7j)
        nf2 = critical_gh(bundle, eig_rot)
        assert np.sign(nf1.d2) == np.sign(nf2.d2)
        assert abs(nf1.d2 - nf2.d2) < 1e-9


class TestZh:
    def test_planar_recovery(self):
        coeffs = dict(f200=1.0, f011=-1.0, g110=0.5 + 0.2j, g021=-0.3 + 0.1j,
                      f111=0.7, f300=0.4, g210=0.6 - 0.5j)
        model, info = build_embedded_zh(omega=1.0, **coeffs)
        bundle = bundle_at(model, np.zeros(3), model.params, order=3)
        eig0 = eig_with_adjoint(bundle.A, 0.0)
        eigH = eig_with_adjoint(bundle.A, 1j)
        nf = critical_zh(bundle, eig0, eigH)
        sgn = float(np.sign(nf.q1[0]))
        exp = info["expected"](sgn)
        for key in ("f200", "f011", "f111", "f300"):
            assert abs(getattr(nf, key) - exp[key]) < 1e-8, key
        for key in ("g110", "g021", "g210"):
            assert abs(getattr(nf, key) - exp[key]) < 1e-8, key

    def test_embedded_orthogonal(self):
        Q = ortho_group.rvs(4, random_state=9)
        model, info = build_embedded_zh(extra=1, ortho=Q, quad=_rand_quad(1, 3))
        bundle = bundle_at(model, np.zeros(4), model.params, order=3)
        eig0 = eig_with_adjoint(bundle.A, 0.0)
        eigH = eig_with_adjoint(bundle.A, 1j)
        nf = critical_zh(bundle, eig0, eigH)
        sgn = float(np.sign(np.dot(nf.q1, Q[:, 0])))
        exp = info["expected"](sgn)
        for key, val in exp.items():
            assert abs(getattr(nf, key) - val) < 1e-7, key

    def test_phase_invariants(self):
        model, info = build_embedded_zh()
        bundle = bundle_at(model, np.zeros(3), model.params, order=3)
        eig0 = eig_with_adjoint(bundle.A, 0.0)
        eigH = eig_with_adjoint(bundle.A, 1j)
        nf1 = critical_zh(bundle, eig0, eigH)
        eigH.q = eigH.q * np.exp(1.1j)
        eigH.p = eigH.p * np.exp(1.1j)
        nf2 = critical_zh(bundle, eig0, eigH)
        assert abs(abs(nf1.g110) - abs(nf2.g110)) < 1e-10
        assert abs(nf1.f200 * nf1.f011 - nf2.f200 * nf2.f011) < 1e-10

    def test_cusp_like_degeneracy(self):
        model, info = build_embedded_zh(f200=0.0)
        bundle = bundle_at(model, np.zeros(3), model.params, order=3)
        eig0 = eig_with_adjoint(bundle.A, 0.0)
        eigH = eig_with_adjoint(bundle.A, 1j)
        with pytest.raises(DegeneracyError):
            critical_zh(bundle, eig0, eigH)


class TestHh:
    def test_planar_recovery(self):
        model, info = build_embedded_hh(omega1=2.0, omega2=0.8)
        bundle = bundle_at(model, np.zeros(4), model.params, order=5)
        eig1 = eig_with_adjoint(bundle.A, 2.0j)
        eig2 = eig_with_adjoint(bundle.A, 0.8j)
        nf = critical_hh(bundle, eig1, eig2)
        for key, val in info["expected"].items():
            assert abs(getattr(nf, key) - val) < 1e-8, key

    def test_embedded_orthogonal(self):
        Q = ortho_group.rvs(5, random_state=3)
        model, info = build_embedded_hh(omega1=1.7, omega2=0.6, extra=1, ortho=Q,
                                        quad=_rand_quad(1, 4))
        bundle = bundle_at(model, np.zeros(5), model.params, order=5)
        eig1 = eig_with_adjoint(bundle.A, 1.7j)
        eig2 = eig_with_adjoint(bundle.A, 0.6j)
        nf = critical_hh(bundle, eig1, eig2)
        for key, val in info["expected"].items():
            assert abs(getattr(nf, key) - val) < 1e-7, key

    def test_pair_ordering(self):
        # pairs are relabeled so omega1 > omega2 regardless of call order
        model, info = build_embedded_hh(omega1=2.0, omega2=0.8)
        bundle = bundle_at(model, np.zeros(4), model.params, order=5)
        eig1 = eig_with_adjoint(bundle.A, 2.0j)
        eig2 = eig_with_adjoint(bundle.A, 0.8j)
        nf = critical_hh(bundle, eig2, eig1)
        assert nf.omega1 > nf.omega2
        assert abs(nf.f2100 - info["expected"]["f2100"]) < 1e-8


def test_embedded_manifold_is_polynomially_exact():
    # the oracle's center manifold is an exact quadratic graph, so the
    # truncated invariance residual is machine zero at any radius
    from bifkit.normalform import homological_residual

    model, info, bundle, eig = _gh_setup(omega=1.0, c1=0.3j, c2=0.2 - 0.4j,
                                         extra=1, ortho=ortho_group.rvs(3, random_state=2),
                                         stable_rates=(2.0,), quad=_rand_quad(1, 2))
    nf = critical_gh(bundle, eig)
    basis = nf.expansion.basis
    h_terms = {(nu, (0, 0)): vec for nu, vec in nf.expansion.h.items()}
    g_terms = {(i, nu, (0, 0)): val for (i, nu), val in nf.expansion.g.items()}
    for i, lam in enumerate(basis.lambdas):
        e = tuple(1 if j == i else 0 for j in range(basis.m))
        g_terms[(i, e, (0, 0))] = lam
    z = np.array([0.05 * np.exp(0.4j), 0.05 * np.exp(-0.4j)])
    out = homological_residual(bundle, basis, h_terms, g_terms, np.zeros((2, 2)),
                               z, np.zeros(2))
    assert np.linalg.norm(out) < 1e-12


def test_homological_residual_scaling_generic_field():
    # on a field with a curved center manifold the truncated residual decays
    # one order beyond the highest solved manifold coefficient
    from bifkit.normalform import homological_residual
    from bifkit.tensors import OdeModel

    W2 = RNG.normal(size=(3, 3, 3)) * 0.4
    W3 = RNG.normal(size=(3, 3, 3, 3)) * 0.2

    def rhs(x, p):
        lin = [-x[1], x[0], -2.0 * x[2]]
        out = []
        for i in range(3):
            acc = lin[i]
            for j in range(3):
                for k in range(3):
                    acc = acc + W2[i, j, k] * x[j] * x[k]
                    for l in range(3):
                        acc = acc + W3[i, j, k, l] * x[j] * x[k] * x[l]
            out.append(acc)
        return out

    model = OdeModel(name="generic", n=3, p_total=2, active=(0, 1), rhs=rhs,
                     params=np.zeros(2))
    bundle = bundle_at(model, np.zeros(3), model.params, order=5)
    eig = eig_with_adjoint(bundle.A, 1j)
    nf = critical_gh(bundle, eig)
    basis = nf.expansion.basis
    h_terms = {(nu, (0, 0)): vec for nu, vec in nf.expansion.h.items()}
    g_terms = {(i, nu, (0, 0)): val for (i, nu), val in nf.expansion.g.items()}
    for i, lam in enumerate(basis.lambdas):
        e = tuple(1 if j == i else 0 for j in range(basis.m))
        g_terms[(i, e, (0, 0))] = lam
    radii = [3e-2, 3e-3]
    res = []
    for r in radii:
        z = np.array([r * np.exp(0.4j), r * np.exp(-0.4j)])
        out = homological_residual(bundle, basis, h_terms, g_terms, np.zeros((2, 2)),
                                   z, np.zeros(2))
        res.append(np.linalg.norm(out))
    order = np.log(res[0] / res[1]) / np.log(radii[0] / radii[1])
    assert order >= 4.5  # manifold solved through order 4
