import numpy as np
import pytest

from bifkit.errors import DegeneracyError, NotFoundError, RankError
from bifkit.linalg import (
    BorderedOperator,
    eig_with_adjoint,
    fredholm_gamma,
    fix_phase,
    inner,
    solve_bordered,
)

RNG = np.random.default_rng(11)


def _rotation_block(omega):
    return np.array([[0.0, -omega], [omega, 0.0]])


def test_eig_diagonal_zero_target():
    A = np.zeros((4, 4))
    A[1, 1] = -1.0
    A[2:, 2:] = _rotation_block(2.0)
    e = eig_with_adjoint(A, 0.0)
    assert abs(e.eigenvalue) < 1e-12
    np.testing.assert_allclose(np.abs(e.q), [1, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(np.abs(e.p), [1, 0, 0, 0], atol=1e-12)
    assert abs(inner(e.p, e.q) - 1) < 1e-14


def test_eig_rotation_block():
    A = _rotation_block(3.5)
    e = eig_with_adjoint(A, 3.5j)
    assert abs(e.eigenvalue - 3.5j) < 1e-12
    r1, r2 = e.residuals(A)
    assert r1 < 1e-12 and r2 < 1e-12
    assert abs(inner(e.q, e.q) - 1) < 1e-13
    assert abs(inner(e.p, e.q) - 1) < 1e-13


def test_eig_not_found_and_degenerate():
    with pytest.raises(NotFoundError):
        eig_with_adjoint(np.diag([1.0, 2.0]), 5.0)
    A = np.diag([1.0, 1.0 + 1e-9, 3.0])
    with pytest.raises(DegeneracyError):
        eig_with_adjoint(A, 1.0)


def test_eig_phase_deterministic():
    A = RNG.normal(size=(5, 5))
    A = A - np.eye(5) * 3  # push eigenvalues left, any target works
    w = np.linalg.eigvals(A)
    target = w[np.argmax(np.abs(np.imag(w)))]
    e1 = eig_with_adjoint(A, target)
    e2 = eig_with_adjoint(A, target)
    assert np.array_equal(e1.q, e2.q)
    i = np.argmax(np.abs(e1.q))
    assert abs(np.imag(e1.q[i])) < 1e-14 and np.real(e1.q[i]) > 0


def test_bordered_regular_matrix():
    M = RNG.normal(size=(5, 5)) + 5 * np.eye(5)
    b = RNG.normal(size=5)
    c = RNG.normal(size=5)
    rhs = RNG.normal(size=5)
    op = BorderedOperator(M, b, c)
    xi, mult = solve_bordered(op, rhs)
    np.testing.assert_allclose(M @ xi + mult * b, rhs, atol=1e-10)
    assert abs(np.vdot(c, xi)) < 1e-10


def test_bordered_decoupled_singular_direction():
    M = np.diag([0.0, 1.0, 1.0])
    e1 = np.array([1.0, 0, 0])
    rhs = np.array([0.0, 1.0, 0.0])
    op = BorderedOperator(M, e1, e1)
    xi, mult = solve_bordered(op, rhs)
    np.testing.assert_allclose(xi, rhs, atol=1e-13)
    assert abs(mult) < 1e-13


def test_bordered_rank_error():
    M = np.zeros((3, 3))  # rank deficiency 3, borders cannot fix it
    with pytest.raises(RankError):
        BorderedOperator(M, np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))


def test_bordered_resubstitution_scaling():
    for _ in range(5):
        n = 6
        M = RNG.normal(size=(n, n))
        M[:, 0] = M[:, 1]  # make singular with rank deficiency 1
        u, s, vh = np.linalg.svd(M)
        q = vh[-1]
        p = u[:, -1]
        rhs = RNG.normal(size=n)
        op = BorderedOperator(M, p, q)  # borders approximating null directions
        xi, mult = op.solve(rhs)
        resid = np.linalg.norm(M @ xi + mult * p - rhs)
        assert resid <= 1e-10 * (np.linalg.norm(M) * np.linalg.norm(xi) + np.linalg.norm(rhs))


def test_fredholm_pure_resonant_input():
    omega = 2.0
    A = np.zeros((4, 4))
    A[:2, :2] = _rotation_block(omega)
    A[2, 2] = -1.0
    A[3, 3] = -2.0
    e = eig_with_adjoint(A, 1j * omega)
    M = 1j * omega * np.eye(4) - A
    gamma, h = fredholm_gamma(M, e.p, e.q.copy(), e.q)
    assert abs(gamma - 1.0) < 1e-12
    assert np.linalg.norm(h) < 1e-12


def test_fredholm_nonresonant_input():
    omega = 2.0
    A = np.zeros((4, 4))
    A[:2, :2] = _rotation_block(omega)
    A[2, 2] = -1.0
    A[3, 3] = -2.0
    e = eig_with_adjoint(A, 1j * omega)
    rhs = RNG.normal(size=4) + 1j * RNG.normal(size=4)
    rhs = rhs - inner(e.p, rhs) * e.q  # project out the resonant part
    M = 1j * omega * np.eye(4) - A
    gamma, h = fredholm_gamma(M, e.p, rhs, e.q)
    assert abs(gamma) < 1e-10
    np.testing.assert_allclose(M @ h, rhs, atol=1e-10)
    assert abs(inner(e.p, rhs - gamma * e.q)) < 1e-10


def test_fix_phase():
    q = np.array([0.3 - 0.4j, 1.2j, 0.1])
    out = fix_phase(q)
    i = np.argmax(np.abs(out))
    assert abs(np.imag(out[i])) < 1e-15 and np.real(out[i]) > 0
    np.testing.assert_allclose(np.abs(out), np.abs(q), atol=1e-15)
