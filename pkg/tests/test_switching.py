import numpy as np
import pytest
from scipy.stats import ortho_group

from bifkit import bundle_at, critical_gh, critical_hh, critical_zh, eig_with_adjoint
from bifkit.app.models import build_embedded_gh, build_embedded_hh, build_embedded_zh
from bifkit.errors import TransversalityError
from bifkit.switching import (
    predict_gh_lpc,
    predict_hh_ns,
    predict_zh_ns,
    predictor_tangent,
    reduce_gh,
    reduce_hh,
    reduce_zh,
)

RNG = np.random.default_rng(41)
MIX = np.array([[1.2, -0.4], [0.7, 0.9]])


def _gh_pieces(**kwargs):
    model, info = build_embedded_gh(**kwargs)
    bundle = bundle_at(model, np.zeros(model.n), model.params, order=5)
    eig = eig_with_adjoint(bundle.A, 1j * info["omega"])
    nf = critical_gh(bundle, eig)
    red = reduce_gh(bundle, nf)
    return model, info, bundle, nf, red


def _zh_pieces(**kwargs):
    model, info = build_embedded_zh(**kwargs)
    bundle = bundle_at(model, np.zeros(model.n), model.params, order=3)
    eig0 = eig_with_adjoint(bundle.A, 0.0)
    eigH = eig_with_adjoint(bundle.A, 1j * info["omega"])
    nf = critical_zh(bundle, eig0, eigH)
    red = reduce_zh(bundle, nf)
    return model, info, bundle, nf, red


def _hh_pieces(**kwargs):
    model, info = build_embedded_hh(**kwargs)
    bundle = bundle_at(model, np.zeros(model.n), model.params, order=5)
    eig1 = eig_with_adjoint(bundle.A, 1j * info["omega1"])
    eig2 = eig_with_adjoint(bundle.A, 1j * info["omega2"])
    nf = critical_hh(bundle, eig1, eig2)
    red = reduce_hh(bundle, nf)
    return model, info, bundle, nf, red


class TestGhReduction:
    def test_identity_unfolding(self):
        model, info, bundle, nf, red = _gh_pieces(omega=1.2, c1=0.5j, c2=0.3 - 1.0j)
        np.testing.assert_allclose(red.K, np.eye(2), atol=1e-8)
        assert abs(red.gamma1[0] - 1.0) < 1e-8  # d lambda/d alpha1 = 1
        assert abs(red.gamma1[1]) < 1e-8
        assert abs(np.real(red.gamma2[1]) - info["expected_c1"].real * 0 - 1.0) < 1e-7
        for val in red.residuals.values():
            assert val < 1e-9

    def test_premixed_parameters(self):
        model, info, bundle, nf, red = _gh_pieces(premix=MIX)
        np.testing.assert_allclose(red.K, np.linalg.inv(MIX), atol=1e-7)

    def test_b12_recovery(self):
        model, info, bundle, nf, red = _gh_pieces(b1=(0.3, -0.8))
        assert abs(red.b12 - (-0.8)) < 1e-7

    def test_embedded_reduction(self):
        Q = ortho_group.rvs(4, random_state=8)
        quad = [np.eye(2) * 0.2, np.diag([0.1, -0.3])]
        model, info, bundle, nf, red = _gh_pieces(extra=2, ortho=Q, quad=quad,
                                                  premix=MIX, b1=(0.1, 0.4))
        np.testing.assert_allclose(red.K, np.linalg.inv(MIX), atol=1e-7)
        for val in red.residuals.values():
            assert val < 1e-9


class TestGhPredictor:
    def test_collapse_at_zero(self):
        model, info, bundle, nf, red = _gh_pieces()
        pred = predict_gh_lpc(red, nf, np.zeros(model.n), np.zeros(2))
        np.testing.assert_allclose(pred.alpha(0.0), np.zeros(2), atol=1e-14)
        assert abs(pred.period(0.0) - 2 * np.pi / nf.omega) < 1e-12
        s = pred.sample(0.0, N=12)
        np.testing.assert_allclose(s.mesh, np.zeros_like(s.mesh), atol=1e-14)

    def test_parameter_curve_matches_asymptotics(self):
        model, info, bundle, nf, red = _gh_pieces(c1=0.5j, c2=0.3 - 1.0j)
        d2 = nf.d2
        eps = 0.07
        expected_beta = np.array([d2 * eps**4, -2 * d2 * eps**2])
        np.testing.assert_allclose(pred_alpha := predict_gh_lpc(
            red, nf, np.zeros(2), np.zeros(2)).alpha(eps), expected_beta, atol=1e-9)

    def test_tangent_parameter_components(self):
        model, info, bundle, nf, red = _gh_pieces()
        pred = predict_gh_lpc(red, nf, np.zeros(model.n), np.zeros(2))
        eps = 1e-3
        t = predictor_tangent(pred, eps, N=8)
        s = pred.sample(eps, N=8)
        expected_dalpha = red.K @ np.array([4 * nf.d2 * eps**3, -4 * nf.d2 * eps])
        np.testing.assert_allclose(s.dalpha, expected_dalpha, rtol=1e-10)
        assert abs(np.linalg.norm(t) - 1.0) < 1e-12

    def test_period_formula(self):
        model, info, bundle, nf, red = _gh_pieces(b1=(0.0, 0.6), c1=0.5j)
        pred = predict_gh_lpc(red, nf, np.zeros(2), np.zeros(2))
        eps = 0.05
        freq = nf.omega + (nf.im_c1 - 2 * nf.d2 * red.b12) * eps**2
        assert abs(pred.period(eps) - 2 * np.pi / freq) < 1e-12


class TestZhReduction:
    def test_identity_unfolding(self):
        model, info, bundle, nf, red = _zh_pieces(omega_slopes=(0.25, -0.15))
        sgn = float(np.sign(nf.q1[0]))
        np.testing.assert_allclose(sgn * red.v10, [1.0, 0.0], atol=1e-8)
        np.testing.assert_allclose(red.v01, [0.0, 1.0], atol=1e-8)
        np.testing.assert_allclose(
            red.omega_d, [sgn * 0.25, -0.15], atol=1e-8)
        assert abs(np.linalg.norm(red.deltas[:2] - np.array([0.0, sgn * 1.0]) * red.deltas[1])) < 1e-6

    def test_premixed(self):
        model, info, bundle, nf, red = _zh_pieces(premix=MIX)
        sgn = float(np.sign(nf.q1[0]))
        Minv = np.linalg.inv(MIX)
        np.testing.assert_allclose(sgn * red.v10, Minv @ [1.0, 0.0], atol=1e-8)
        np.testing.assert_allclose(red.v01, Minv @ [0.0, 1.0], atol=1e-8)

    def test_transversality_error(self):
        # parameters that do not move the equilibrium in the null direction
        model, info = build_embedded_zh(premix=np.zeros((2, 2)))
        bundle = bundle_at(model, np.zeros(3), model.params, order=3)
        eig0 = eig_with_adjoint(bundle.A, 0.0)
        eigH = eig_with_adjoint(bundle.A, 1j)
        nf = critical_zh(bundle, eig0, eigH)
        with pytest.raises(TransversalityError):
            reduce_zh(bundle, nf)

    def test_resubstitution(self):
        Q = ortho_group.rvs(4, random_state=12)
        model, info, bundle, nf, red = _zh_pieces(extra=1, ortho=Q, premix=MIX)
        for val in red.residuals.values():
            assert val < 1e-9


class TestZhPredictor:
    def test_collapse(self):
        model, info, bundle, nf, red = _zh_pieces()
        pred = predict_zh_ns(red, nf, np.zeros(3), np.zeros(2))
        np.testing.assert_allclose(pred.alpha(0.0), np.zeros(2), atol=1e-14)
        assert abs(pred.multiplier_k(0.0) - 1.0) < 1e-14
        assert abs(pred.period(0.0) - 2 * np.pi / nf.omega) < 1e-12

    def test_beta_slope_matches_asymptotics(self):
        coeffs = dict(f200=1.0, f011=-1.0, g110=0.5 + 0.2j, g021=-0.3 + 0.1j,
                      f111=0.7, f300=0.4, g210=0.6 - 0.5j)
        model, info, bundle, nf, red = _zh_pieces(**coeffs)
        eps = 1e-2
        pred = predict_zh_ns(red, nf, np.zeros(3), np.zeros(2))
        beta1 = -nf.f011 * eps**2
        beta2 = (
            (2 * (np.real(nf.g110) - nf.f200) * np.real(nf.g021)
             + np.real(nf.g110) * nf.f111) / (2 * nf.f200) * eps**2
        )
        expected_alpha = red.v10 * beta1 + red.v01 * beta2
        np.testing.assert_allclose(pred.alpha(eps), expected_alpha, rtol=1e-12)

    def test_classification_flag(self):
        _, _, _, nf_t, red_t = _zh_pieces(g110=0.5 + 0.2j, f011=-1.0)
        pred = predict_zh_ns(red_t, nf_t, np.zeros(3), np.zeros(2))
        # recovered coefficients may flip sign jointly with the null vector;
        # the product Re(g110)*f011 is invariant
        assert pred.classification == ("torus" if np.real(nf_t.g110) * nf_t.f011 < 0
                                       else "neutral_saddle")
        assert np.real(nf_t.g110) * nf_t.f011 < 0
        _, _, _, nf_n, red_n = _zh_pieces(g110=0.5 + 0.2j, f011=1.0)
        pred_n = predict_zh_ns(red_n, nf_n, np.zeros(3), np.zeros(2))
        assert np.real(nf_n.g110) * nf_n.f011 > 0
        assert pred_n.classification == "neutral_saddle"

    def test_multiplier_consistent_with_classification(self):
        _, _, _, nf, red = _zh_pieces(g110=0.5 + 0.2j, f011=1.0)  # neutral saddle
        pred = predict_zh_ns(red, nf, np.zeros(3), np.zeros(2))
        assert pred.multiplier_k(1e-2) > 1.0


class TestHhReduction:
    def test_identity_unfolding(self):
        model, info, bundle, nf, red = _hh_pieces(omega1=2.1, omega2=0.9)
        np.testing.assert_allclose(red.K, np.eye(2), atol=1e-8)
        for val in red.residuals.values():
            assert val < 1e-9

    def test_premixed(self):
        model, info, bundle, nf, red = _hh_pieces(premix=MIX)
        np.testing.assert_allclose(red.K, np.linalg.inv(MIX), atol=1e-7)

    def test_frequency_corrections(self):
        w1s, w2s = (0.2, -0.1), (0.05, 0.3)
        model, info, bundle, nf, red = _hh_pieces(omega1_slopes=w1s, omega2_slopes=w2s)
        # with identity unfolding: domega_j = omega_j_slopes . beta_dir + Im(coef)
        b1 = np.array([np.real(nf.f2100), np.real(nf.g1110)])
        expected1 = np.array([
            -np.dot(w1s, b1) + np.imag(nf.f2100),
            -np.dot(w2s, b1) + np.imag(nf.g1110),
        ])
        np.testing.assert_allclose(red.domega_branch1, expected1, atol=1e-7)


class TestHhPredictor:
    def test_collapse_multiplier(self):
        model, info, bundle, nf, red = _hh_pieces(omega1=2.0, omega2=0.8)
        pred1 = predict_hh_ns(red, nf, np.zeros(4), np.zeros(2), branch=1)
        assert abs(pred1.multiplier_k(0.0) - np.cos(2 * np.pi * nf.omega2 / nf.omega1)) < 1e-12
        assert abs(pred1.period(0.0) - 2 * np.pi / nf.omega1) < 1e-12
        pred2 = predict_hh_ns(red, nf, np.zeros(4), np.zeros(2), branch=2)
        assert abs(pred2.multiplier_k(0.0) - np.cos(2 * np.pi * nf.omega1 / nf.omega2)) < 1e-12

    def test_beta_directions(self):
        model, info, bundle, nf, red = _hh_pieces()
        eps = 0.02
        pred1 = predict_hh_ns(red, nf, np.zeros(4), np.zeros(2), branch=1)
        np.testing.assert_allclose(
            pred1.alpha(eps),
            red.K @ (-np.array([np.real(nf.f2100), np.real(nf.g1110)]) * eps**2),
            rtol=1e-12,
        )
        pred2 = predict_hh_ns(red, nf, np.zeros(4), np.zeros(2), branch=2)
        np.testing.assert_allclose(
            pred2.alpha(eps),
            red.K @ (-np.array([np.real(nf.f1011), np.real(nf.g0021)]) * eps**2),
            rtol=1e-12,
        )


def test_reparameterization_equivariance():
    # predicted alpha curves in original coordinates are invariant under
    # premixing the model parameters with an invertible matrix
    _, _, _, nf_a, red_a = _gh_pieces(c1=0.4j, c2=0.25 - 0.6j)
    _, _, _, nf_b, red_b = _gh_pieces(c1=0.4j, c2=0.25 - 0.6j, premix=MIX)
    pred_a = predict_gh_lpc(red_a, nf_a, np.zeros(2), np.zeros(2))
    pred_b = predict_gh_lpc(red_b, nf_b, np.zeros(2), np.zeros(2))
    eps = 0.05
    # in model b the parameters alpha relate to model a's by alpha_b = MIX^-1 alpha_a
    np.testing.assert_allclose(
        pred_b.alpha(eps), np.linalg.inv(MIX) @ pred_a.alpha(eps), atol=1e-9)


def test_phase_convention_invariance():
    # rotating q changes only the psi origin, not alpha, T or k
    model, info = build_embedded_zh()
    bundle = bundle_at(model, np.zeros(3), model.params, order=3)
    eig0 = eig_with_adjoint(bundle.A, 0.0)
    eigH1 = eig_with_adjoint(bundle.A, 1j)
    nf1 = critical_zh(bundle, eig0, eigH1)
    red1 = reduce_zh(bundle, nf1)
    eigH2 = eig_with_adjoint(bundle.A, 1j)
    eigH2.q = eigH2.q * np.exp(0.9j)
    eigH2.p = eigH2.p * np.exp(0.9j)
    nf2 = critical_zh(bundle, eig0, eigH2)
    red2 = reduce_zh(bundle, nf2)
    p1 = predict_zh_ns(red1, nf1, np.zeros(3), np.zeros(2))
    p2 = predict_zh_ns(red2, nf2, np.zeros(3), np.zeros(2))
    eps = 0.03
    np.testing.assert_allclose(p1.alpha(eps), p2.alpha(eps), atol=1e-10)
    assert abs(p1.period(eps) - p2.period(eps)) < 1e-10
    assert abs(p1.multiplier_k(eps) - p2.multiplier_k(eps)) < 1e-12
