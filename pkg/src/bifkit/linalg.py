"""Dense linear-algebra kernel: eigenpairs with adjoints, bordered solves,
Fredholm-alternative projections.

Conventions: the inner product <p, q> is conjugate-linear in the first slot
(``p.conj() @ q``).  Right eigenvectors satisfy ``A q = lam q`` with
``<q, q> = 1`` and a deterministic phase (largest-magnitude component real
positive); left (adjoint) vectors satisfy ``A.T p = conj(lam) p`` and are
normalized so ``<p, q> = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, NotFoundError, RankError, SolvabilityError

SIMPLICITY_RTOL = 1e-6


def inner(p, q):
    """Conjugate-linear-first inner product."""
    return np.vdot(np.asarray(p), np.asarray(q))


def fix_phase(q: np.ndarray) -> np.ndarray:
    """Rotate q so its largest-magnitude component is real and positive."""
    i = int(np.argmax(np.abs(q)))
    z = q[i]
    if z == 0:
        return q
    return q * (np.conj(z) / np.abs(z))


@dataclass
class EigenData:
    eigenvalue: complex
    q: np.ndarray
    p: np.ndarray
    eigenvalues: np.ndarray  # full spectrum of A

    def residuals(self, A) -> tuple[float, float]:
        r1 = float(np.linalg.norm(A @ self.q - self.eigenvalue * self.q))
        r2 = float(np.linalg.norm(A.T @ self.p - np.conj(self.eigenvalue) * self.p))
        return r1, r2


def eig_with_adjoint(A: np.ndarray, target: complex, tol: float = 1e-6) -> EigenData:
    """Right/left eigenpair of the eigenvalue nearest ``target``.

    Raises ``NotFoundError`` if no eigenvalue lies within ``tol * scale`` of
    the target and ``DegeneracyError`` if the selected eigenvalue is not
    numerically simple.
    """
    A = np.asarray(A, dtype=float)
    scale = max(1.0, float(np.linalg.norm(A, ord=2)))
    w, V = np.linalg.eig(A)
    dist = np.abs(w - target)
    k = int(np.argmin(dist))
    if dist[k] > tol * scale:
        raise NotFoundError(f"no eigenvalue within {tol * scale:.3g} of target {target}")
    gaps = np.abs(w - w[k])
    gaps[k] = np.inf
    if np.min(gaps) < SIMPLICITY_RTOL * scale:
        raise DegeneracyError(
            f"eigenvalue {w[k]:.6g} not simple: nearest neighbour at distance {np.min(gaps):.3g}"
        )
    lam = w[k]
    q = V[:, k]
    q = q / np.sqrt(inner(q, q).real)
    q = fix_phase(q)

    wl, U = np.linalg.eig(A.T)
    kl = int(np.argmin(np.abs(wl - np.conj(lam))))
    p = U[:, kl]
    s = inner(p, q)
    if abs(s) < 1e-12:
        raise DegeneracyError("left/right eigenvectors nearly orthogonal (defective?)")
    p = p / np.conj(s)
    return EigenData(eigenvalue=lam, q=q, p=p, eigenvalues=w)


class BorderedOperator:
    """Square operator M augmented with rank-r borders.

    Solves ``[[M, b], [c*, 0]] [xi; mult] = [rhs; beta]``; with ``b ~ null(M*)``
    and ``c ~ null(M)`` this is nonsingular for rank deficiency <= r and the
    solution satisfies ``<c, xi> = beta``.
    """

    def __init__(self, M: np.ndarray, b: np.ndarray, c: np.ndarray):
        M = np.asarray(M)
        b = np.asarray(b)
        c = np.asarray(c)
        if b.ndim == 1:
            b = b[:, None]
        if c.ndim == 1:
            c = c[:, None]
        n = M.shape[0]
        r = b.shape[1]
        big = np.zeros((n + r, n + r), dtype=np.result_type(M, b, c, float))
        big[:n, :n] = M
        big[:n, n:] = b
        big[n:, :n] = c.conj().T
        self.M = M
        self.n = n
        self.r = r
        self.matrix = big
        cond = np.linalg.cond(big)
        if not np.isfinite(cond) or cond > 1e14:
            raise RankError(f"bordered matrix numerically singular (cond={cond:.3g})")

    def solve(self, rhs: np.ndarray, beta=None):
        rhs = np.asarray(rhs)
        aug = np.zeros(self.n + self.r, dtype=np.result_type(rhs, self.matrix))
        aug[: self.n] = rhs
        if beta is not None:
            aug[self.n:] = beta
        sol = np.linalg.solve(self.matrix, aug)
        xi = sol[: self.n]
        mult = sol[self.n:]
        return xi, (mult[0] if self.r == 1 else mult)

    def solve_transposed(self, rhs_tail):
        """Left bordered solve: returns (eta, nu) with [[M,b],[c*,0]]^H [eta;nu] = [0; rhs_tail]."""
        aug = np.zeros(self.n + self.r, dtype=np.result_type(np.asarray(rhs_tail), self.matrix))
        aug[self.n:] = rhs_tail
        sol = np.linalg.solve(self.matrix.conj().T, aug)
        return sol[: self.n], sol[self.n:]


def solve_bordered(op: BorderedOperator, rhs: np.ndarray):
    """Solve M xi + mult*b = rhs subject to <c, xi> = 0."""
    return op.solve(rhs)


def fredholm_gamma(Mshift: np.ndarray, p: np.ndarray, rhs: np.ndarray, q: np.ndarray,
                   check_tol: float = 1e-8):
    """Resonant coefficient and complement solution of a singular system.

    For ``Mshift`` with one-dimensional kernel span(q) and adjoint kernel
    span(p), returns ``gamma = <p, rhs>`` and the unique ``h`` with
    ``Mshift h = rhs - gamma q`` and ``<p, h> = 0``.
    """
    Mshift = np.asarray(Mshift)
    op = BorderedOperator(Mshift, np.asarray(q), np.asarray(p))
    h, mult = op.solve(rhs)
    gamma = mult
    resid = np.linalg.norm(Mshift @ h + gamma * np.asarray(q) - np.asarray(rhs))
    scale = np.linalg.norm(np.asarray(rhs)) + np.linalg.norm(Mshift) * np.linalg.norm(h) + 1.0
    if resid > max(check_tol, 1e-10 * scale):
        raise SolvabilityError(f"Fredholm projection residual {resid:.3g} above tolerance")
    return gamma, h


def smallest_singular_pairs(M: np.ndarray, r: int):
    """Right/left singular vectors for the r smallest singular values."""
    U, s, Vh = np.linalg.svd(np.asarray(M))
    right = Vh.conj().T[:, -r:]
    left = U[:, -r:]
    return right, left, s[-r:]
