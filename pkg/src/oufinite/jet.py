"""Truncated multivariate Taylor arithmetic (higher-order dual numbers).

A :class:`Jet` carries the Taylor coefficients of a quantity in ``nvar``
independent variables up to total degree ``order``.  Coefficients are numpy
arrays, so one jet evaluates a whole batch of quadrature nodes at once, and
they may be complex.  Elementary functions are applied by composing their
scalar Taylor series with the nilpotent part of the argument.

>>> x = Jet.variable(2.0, 0, nvar=1, order=2)
>>> y = exp(x * x)
>>> float(y.deriv((1,)))  # d/dx exp(x^2) = 2x exp(x^2)
218.39260013257694
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Callable, Sequence

import numpy as np


@functools.lru_cache(maxsize=None)
def _basis(nvar: int, order: int):
    """Multi-indices ordered by total degree, and the product tensor."""
    idx = [
        m
        for deg in range(order + 1)
        for m in sorted(
            (m for m in itertools.product(range(deg + 1), repeat=nvar) if sum(m) == deg),
            reverse=True,
        )
    ]
    pos = {m: k for k, m in enumerate(idx)}
    n = len(idx)
    prod = np.zeros((n, n, n))
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            s = tuple(p + q for p, q in zip(a, b))
            if sum(s) <= order:
                prod[pos[s], i, j] = 1.0
    factorials = np.array([math.prod(math.factorial(k) for k in m) for m in idx], dtype=float)
    return tuple(idx), pos, prod, factorials


class Jet:
    """Truncated Taylor polynomial with array-valued coefficients."""

    __slots__ = ("c", "nvar", "order")
    # make numpy defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, coeffs, nvar: int, order: int):
        self.c = coeffs
        self.nvar = nvar
        self.order = order

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, nvar: int = 1, order: int = 1) -> "Jet":
        value = np.asarray(value)
        idx, _, _, _ = _basis(nvar, order)
        c = np.zeros((len(idx),) + value.shape, dtype=np.result_type(value, float))
        c[0] = value
        return cls(c, nvar, order)

    @classmethod
    def variable(cls, value, index: int, nvar: int = 1, order: int = 1) -> "Jet":
        """The independent variable number ``index`` expanded at ``value``."""
        jet = cls.constant(value, nvar, order)
        if order >= 1:
            unit = tuple(1 if k == index else 0 for k in range(nvar))
            jet.c[_basis(nvar, order)[1][unit]] = 1.0
        return jet

    # access -------------------------------------------------------------
    @property
    def value(self):
        return self.c[0]

    def coef(self, multi: Sequence[int]):
        return self.c[_basis(self.nvar, self.order)[1][tuple(multi)]]

    def deriv(self, multi: Sequence[int]):
        """Partial derivative with the given multi-index, at the expansion point."""
        multi = tuple(multi)
        return self.coef(multi) * math.prod(math.factorial(k) for k in multi)

    def derivatives(self):
        """All partial derivatives, shape (ncoef, *batch), in basis order."""
        fac = _basis(self.nvar, self.order)[3]
        return self.c * fac.reshape((-1,) + (1,) * (self.c.ndim - 1))

    @property
    def multi_indices(self):
        return _basis(self.nvar, self.order)[0]

    # helpers ------------------------------------------------------------
    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvar != self.nvar or other.order != self.order:
                raise ValueError("jets of different shape cannot be combined")
            return other
        return Jet.constant(other, self.nvar, self.order)

    def _new(self, c) -> "Jet":
        return Jet(c, self.nvar, self.order)

    def _mul(self, other: "Jet") -> "Jet":
        prod = _basis(self.nvar, self.order)[2]
        a, b = _align(self.c, other.c.shape[1:]), _align(other.c, self.c.shape[1:])
        return self._new(np.einsum("kij,i...,j...->k...", prod, a, b))

    # arithmetic ---------------------------------------------------------
    def __neg__(self):
        return self._new(-self.c)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            o = self._lift(other).c
            return self._new(_align(self.c, o.shape[1:]) + _align(o, self.c.shape[1:]))
        other = np.asarray(other)
        batch = np.broadcast_shapes(self.c.shape[1:], other.shape)
        c = np.array(
            np.broadcast_to(_align(self.c, other.shape), self.c.shape[:1] + batch),
            dtype=np.result_type(self.c, other),
        )
        c[0] = c[0] + other
        return self._new(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return self._mul(self._lift(other))
        other = np.asarray(other)
        return self._new(_align(self.c, other.shape) * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other)
        return self._new(_align(self.c, other.shape) / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones_like(self.value), self.nvar, self.order)
            base = self
            k = int(p)
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        return self.power(float(p))

    # elementary functions -----------------------------------------------
    def compose(self, derivs: Sequence) -> "Jet":
        """f(self) given f^(k)(self.value) for k = 0..order."""
        h = self._new(self.c.copy())
        h.c[0] = 0
        out = Jet.constant(np.asarray(derivs[0]), self.nvar, self.order)
        term = None
        for k in range(1, self.order + 1):
            term = h if term is None else term * h
            out = out + term * (np.asarray(derivs[k]) / math.factorial(k))
        return out

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self.compose([e] * (self.order + 1))

    def log(self) -> "Jet":
        x = self.value
        d = [np.log(x)]
        for k in range(1, self.order + 1):
            d.append((-1) ** (k - 1) * math.factorial(k - 1) / x**k)
        return self.compose(d)

    def power(self, p: float) -> "Jet":
        x = self.value
        d = []
        coef = 1.0
        for k in range(self.order + 1):
            d.append(coef * x ** (p - k))
            coef *= p - k
        return self.compose(d)

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def reciprocal(self) -> "Jet":
        x = self.value
        d = [(-1) ** k * math.factorial(k) / x ** (k + 1) for k in range(self.order + 1)]
        return self.compose(d)

    def conj(self) -> "Jet":
        return self._new(np.conj(self.c))

    def __repr__(self):
        return f"Jet(nvar={self.nvar}, order={self.order}, value={self.value!r})"


def _align(c: np.ndarray, other_batch: tuple) -> np.ndarray:
    """Insert unit axes after the coefficient axis so batches broadcast."""
    missing = len(other_batch) - (c.ndim - 1)
    if missing <= 0:
        return c
    return c.reshape((c.shape[0],) + (1,) * missing + c.shape[1:])


def _unary(name: str, fallback: Callable):
    def fn(x):
        if isinstance(x, Jet):
            return getattr(x, name)()
        return fallback(x)

    fn.__name__ = name
    return fn


exp = _unary("exp", np.exp)
log = _unary("log", np.log)
sqrt = _unary("sqrt", np.sqrt)


def value_of(x):
    """Constant term of a jet, or ``x`` itself."""
    return x.value if isinstance(x, Jet) else x


def apply_series(x, derivs_fn: Callable[[object, int], list]):
    """Apply a scalar function given by ``derivs_fn(x0, order) -> [f, f', ...]``."""
    if isinstance(x, Jet):
        return x.compose(derivs_fn(x.value, x.order))
    return derivs_fn(x, 0)[0]
