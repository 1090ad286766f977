"""Truncated univariate Taylor arithmetic (jets).

A :class:`Jet` stores the coefficients of a polynomial in one formal variable
``t`` truncated at a fixed order.  Evaluating a rational right-hand side on
jets seeded with ``x0 + t*u`` yields the exact directional Taylor
coefficients of the field along ``u``; combined with polarization this gives
machine-precision multilinear derivative forms without symbolic work.

Coefficients may be scalars or numpy arrays (batched evaluation); all
arithmetic broadcasts over the trailing shape.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @classmethod
    def constant(cls, value, order, shape=()):
        c = np.zeros((order + 1,) + np.shape(value), dtype=complex)
        c[0] = value
        if shape and c.ndim == 1:
            c = np.broadcast_to(c[:, None], (order + 1,) + shape).copy()
        return cls(c)

    @classmethod
    def seed(cls, value, slope, order):
        """Jet of ``value + t * slope`` (truncation order >= 1)."""
        value = np.asarray(value, dtype=complex)
        slope = np.asarray(slope, dtype=complex)
        shape = np.broadcast_shapes(value.shape, slope.shape)
        c = np.zeros((order + 1,) + shape, dtype=complex)
        c[0] = value
        if order >= 1:
            c[1] = slope
        return cls(c)

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        c = np.zeros((self.order + 1,) + np.shape(other), dtype=complex)
        c[0] = other
        return Jet(c)

    @staticmethod
    def _aligned(a: np.ndarray, b: np.ndarray):
        # pad trailing axes so per-scalar jets broadcast against batched ones
        while a.ndim < b.ndim:
            a = a[..., None]
        while b.ndim < a.ndim:
            b = b[..., None]
        return a, b

    def __add__(self, other):
        a, b = self._aligned(self.c, self._coerce(other).c)
        return Jet(a + b)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        a, b = self._aligned(self.c, self._coerce(other).c)
        return Jet(a - b)

    def __rsub__(self, other):
        a, b = self._aligned(self.c, self._coerce(other).c)
        return Jet(b - a)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * complex(other) if np.isscalar(other) else self.c * np.asarray(other))
        a, b = self._aligned(self.c, other.c)
        K = a.shape[0]
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((K,) + shape, dtype=complex)
        for k in range(K):
            for i in range(k + 1):
                out[k] = out[k] + a[i] * b[k - i]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / (complex(other) if np.isscalar(other) else np.asarray(other)))
        a, b = self._aligned(self.c, other.c)
        K = a.shape[0]
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((K,) + shape, dtype=complex)
        for k in range(K):
            acc = a[k] + np.zeros(shape, dtype=complex)
            for i in range(k):
                acc = acc - out[i] * b[k - i]
            out[k] = acc / b[0]
        return Jet(out)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise TypeError("jet powers must be nonnegative integers")
        result = Jet.constant(1.0, self.order)
        base = self
        n = int(n)
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __repr__(self):  # pragma: no cover
        return f"Jet({self.c!r})"


def eval_rhs_jets(rhs, x_jets, p_values, order):
    """Call ``rhs`` on jet state components; returns list of output Jets."""
    out = rhs(x_jets, p_values)
    return [o if isinstance(o, Jet) else Jet.constant(o, order) for o in out]


def directional_series(rhs, x0, params, x_dir, p_dir, order):
    """Taylor coefficients of ``t -> rhs(x0 + t*x_dir, params + t*p_dir)``.

    Returns an array of shape ``(order+1, n)`` (plus any batch shape carried
    by ``x0``/directions).
    """
    x0 = np.asarray(x0)
    n = x0.shape[0]
    x_jets = [Jet.seed(x0[i], x_dir[i], order) for i in range(n)]
    if p_dir is None:
        p_args = list(params)
    else:
        p_args = [
            Jet.seed(params[j], p_dir[j], order) if p_dir[j] != 0 else params[j]
            for j in range(len(params))
        ]
    out = eval_rhs_jets(rhs, x_jets, p_args, order)
    return np.stack([o.c for o in out], axis=1)
