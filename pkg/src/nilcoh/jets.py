"""Forward-mode first derivatives.

A ``Jet`` carries a value and its partials with respect to a fixed list of
input coordinates.  Values may be scalars or numpy sample batches; partials
have shape ``(n_inputs,) + value.shape``.  Arithmetic implements the exact
differentiation rules, so jets can flow through expression trees and the
polynomial group law alike.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("value", "partials")

    def __init__(self, value, partials):
        self.value = value
        self.partials = partials

    @classmethod
    def seed(cls, values, index: int, count: int) -> "Jet":
        """Input coordinate jet: d/dx_index = 1."""
        values = np.asarray(values, dtype=float)
        partials = np.zeros((count,) + values.shape)
        partials[index] = 1.0
        return cls(values, partials)

    @classmethod
    def constant(cls, values, count: int) -> "Jet":
        values = np.asarray(values, dtype=float)
        return cls(values, np.zeros((count,) + values.shape))

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value + other.value, self.partials + other.partials)
        return Jet(self.value + other, self.partials)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.partials)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value - other.value, self.partials - other.partials)
        return Jet(self.value - other, self.partials)

    def __rsub__(self, other):
        return Jet(other - self.value, -self.partials)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(
                self.value * other.value,
                self.partials * other.value + other.partials * self.value,
            )
        return Jet(self.value * other, self.partials * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            inv = 1.0 / other.value
            return Jet(
                self.value * inv,
                (self.partials - other.partials * (self.value * inv)) * inv,
            )
        return Jet(self.value / other, self.partials / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.value
        return Jet(other * inv, -self.partials * (other * inv * inv))

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("jet exponent must be an integer")
        if k == 0:
            return Jet(np.ones_like(np.asarray(self.value, dtype=float)), np.zeros_like(self.partials))
        return Jet(self.value ** k, (k * self.value ** (k - 1)) * self.partials)

    def unary(self, f, df) -> "Jet":
        return Jet(f(self.value), df(self.value) * self.partials)


def value_of(x):
    return x.value if isinstance(x, Jet) else x
