"""
Truncated second-order jets
Forward-mode differentiation carrying value, gradient and Hessian of array expressions
"""

from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

Number = Union[float, int, np.ndarray]


class Jet:
    """Array-valued jet v + g·ε + ½ εᵀHε with respect to n independent variables.

    ``grad`` has shape ``val.shape + (n,)`` and ``hess`` has shape
    ``val.shape + (n, n)``. Arithmetic follows numpy broadcasting on the value
    shape; the trailing derivative axes are carried along.
    """

    __slots__ = ("val", "grad", "hess")
    __array_ufunc__ = None

    def __init__(self, val: Number, grad: np.ndarray, hess: np.ndarray):
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @classmethod
    def variables(cls, x: Sequence[float]) -> "Jet":
        """Seed jet for the independent variables x"""
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        return cls(x.copy(), np.eye(n), np.zeros((n, n, n)))

    @classmethod
    def constant(cls, value: Number, n: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        return cls(value, np.zeros(value.shape + (n,)), np.zeros(value.shape + (n, n)))

    @property
    def n(self) -> int:
        return self.grad.shape[-1]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.val.shape

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, n={self.n})"

    def __getitem__(self, idx) -> "Jet":
        return Jet(self.val[idx], self.grad[idx], self.hess[idx])

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.n)

    # Arithmetic

    def __neg__(self) -> "Jet":
        return Jet(-self.val, -self.grad, -self.hess)

    def __add__(self, other) -> "Jet":
        other = self._lift(other)
        return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Jet":
        return self._lift(other) - self

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(self.val * c, self.grad * c[..., None], self.hess * c[..., None, None])
        a, b = self, other
        ga, gb = a.grad, b.grad
        hess = (
            a.hess * b.val[..., None, None]
            + a.val[..., None, None] * b.hess
            + ga[..., :, None] * gb[..., None, :]
            + gb[..., :, None] * ga[..., None, :]
        )
        grad = ga * b.val[..., None] + a.val[..., None] * gb
        return Jet(a.val * b.val, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, p: float) -> "Jet":
        v = self.val
        return self._chain(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    # Elementwise functions

    def _chain(self, f0, f1, f2) -> "Jet":
        f0, f1, f2 = (np.asarray(f, dtype=float) for f in (f0, f1, f2))
        g = self.grad
        hess = f1[..., None, None] * self.hess + f2[..., None, None] * g[..., :, None] * g[..., None, :]
        return Jet(f0, f1[..., None] * g, hess)

    def reciprocal(self) -> "Jet":
        v = self.val
        return self._chain(1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3)

    def exp(self) -> "Jet":
        e = np.exp(self.val)
        return self._chain(e, e, e)

    def sin(self) -> "Jet":
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self) -> "Jet":
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)

    def sqrt(self) -> "Jet":
        r = np.sqrt(self.val)
        return self._chain(r, 0.5 / r, -0.25 / r ** 3)

    # Linear algebra

    @property
    def T(self) -> "Jet":
        if self.val.ndim != 2:
            raise ValueError("transpose is defined for matrix jets only")
        return Jet(self.val.T, self.grad.transpose(1, 0, 2), self.hess.transpose(1, 0, 2, 3))

    def __matmul__(self, other) -> "Jet":
        return matmul(self, other)

    def __rmatmul__(self, other) -> "Jet":
        return matmul(self._lift(other), self)


def matmul(a: Jet, b: Jet) -> Jet:
    """Matrix product of two matrix jets"""
    if not isinstance(b, Jet):
        b = a._lift(b)
    val = a.val @ b.val
    grad = (np.einsum("ipk,pj->ijk", a.grad, b.val)
            + np.einsum("ip,pjk->ijk", a.val, b.grad))
    hess = (
        np.einsum("ipkl,pj->ijkl", a.hess, b.val)
        + np.einsum("ip,pjkl->ijkl", a.val, b.hess)
        + np.einsum("ipk,pjl->ijkl", a.grad, b.grad)
        + np.einsum("ipl,pjk->ijkl", a.grad, b.grad)
    )
    return Jet(val, grad, hess)


def stack(items: Iterable[Union[Jet, float]], shape: Optional[Tuple[int, ...]] = None) -> Jet:
    """Assemble scalar jets (or plain numbers) into one array jet"""
    items = list(items)
    n = next(item.n for item in items if isinstance(item, Jet))
    jets = [item if isinstance(item, Jet) else Jet.constant(item, n) for item in items]
    val = np.stack([j.val for j in jets])
    grad = np.stack([j.grad for j in jets])
    hess = np.stack([j.hess for j in jets])
    if shape is not None:
        val = val.reshape(shape)
        grad = grad.reshape(tuple(shape) + (n,))
        hess = hess.reshape(tuple(shape) + (n, n))
    return Jet(val, grad, hess)
