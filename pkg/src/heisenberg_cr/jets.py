"""Second-order forward-mode jets and horizontal (Heisenberg) derivatives.

A :class:`Jet2` carries value, Euclidean gradient and Euclidean Hessian of a
scalar with respect to the ``2n+1`` coordinates ``(x, y, t)``. Jets compose
through arithmetic exactly (to rounding), so seeding the coordinate jets at a
point and pushing them through a map and a field gives the full 2-jet of the
composite without finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np

from .core_group import Point, structure_matrices


class JetDomainError(ValueError):
    """An elementary function was applied outside its domain."""

    def __init__(self, op: str, value: float):
        super().__init__(f"{op} undefined at value {value!r}")
        self.op = op
        self.value = value


class Jet2:
    __slots__ = ("val", "grad", "hess")
    # make numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, val, grad, hess):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, c: float, dim: int) -> "Jet2":
        return cls(c, np.zeros(dim), np.zeros((dim, dim)))

    @classmethod
    def variable(cls, value: float, index: int, dim: int) -> "Jet2":
        g = np.zeros(dim)
        g[index] = 1.0
        return cls(value, g, np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.grad.size

    def _lift(self, other) -> "Jet2":
        return other if isinstance(other, Jet2) else Jet2.constant(float(other), self.dim)

    def _chain(self, f0: float, f1: float, f2: float) -> "Jet2":
        # composition g(self) with g, g', g'' = f0, f1, f2 at self.val
        g = self.grad
        return Jet2(f0, f1 * g, f1 * self.hess + f2 * np.outer(g, g))

    def __neg__(self):
        return Jet2(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        if isinstance(other, Real):
            return Jet2(self.val + other, self.grad, self.hess)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.val - other.val, self.grad - other.grad, self.hess - other.hess)
        if isinstance(other, Real):
            return Jet2(self.val - other, self.grad, self.hess)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Real):
            return Jet2(other - self.val, -self.grad, -self.hess)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet2):
            a, b = self, other
            cross = np.outer(a.grad, b.grad)
            return Jet2(a.val * b.val,
                        a.val * b.grad + b.val * a.grad,
                        a.val * b.hess + b.val * a.hess + (cross + cross.T))
        if isinstance(other, Real):
            return Jet2(self.val * other, other * self.grad, other * self.hess)
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        v = self.val
        if v == 0.0:
            raise JetDomainError("division", v)
        inv = 1.0 / v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        if isinstance(other, Real):
            if other == 0:
                raise JetDomainError("division", 0.0)
            return self * (1.0 / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Real):
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, r):
        if isinstance(r, Jet2):
            raise TypeError("jet exponents must be numeric constants")
        r = float(r)
        v = self.val
        if r == 0.0:
            return Jet2.constant(1.0, self.dim)
        if r.is_integer():
            k = int(r)
            if k < 0 and v == 0.0:
                raise JetDomainError(f"pow({k})", v)
            # integer powers stay exact for polynomial fields
            return self._chain(v ** k, k * v ** (k - 1) if k != 1 else 1.0,
                               k * (k - 1) * v ** (k - 2) if k not in (0, 1) else 0.0)
        if v <= 0.0:
            raise JetDomainError(f"pow({r})", v)
        p = v ** r
        return self._chain(p, r * p / v, r * (r - 1.0) * p / (v * v))

    def __rpow__(self, base):
        raise TypeError("jet exponents must be numeric constants")

    def exp(self) -> "Jet2":
        e = math.exp(self.val)
        return self._chain(e, e, e)

    def log(self) -> "Jet2":
        v = self.val
        if v <= 0.0:
            raise JetDomainError("log", v)
        return self._chain(math.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self) -> "Jet2":
        v = self.val
        if v <= 0.0:
            raise JetDomainError("sqrt", v)
        s = math.sqrt(v)
        return self._chain(s, 0.5 / s, -0.25 / (s * v))

    def __float__(self):
        return self.val

    def __repr__(self):
        return f"Jet2(val={self.val!r}, grad={self.grad.tolist()}, hess={self.hess.tolist()})"


def exp(v):
    return v.exp() if isinstance(v, Jet2) else np.exp(v)


def log(v):
    if isinstance(v, Jet2):
        return v.log()
    if np.any(np.asarray(v) <= 0):
        raise JetDomainError("log", float(np.min(v)))
    return np.log(v)


def sqrt(v):
    if isinstance(v, Jet2):
        return v.sqrt()
    if np.any(np.asarray(v) <= 0):
        raise JetDomainError("sqrt", float(np.min(v)))
    return np.sqrt(v)


def seed(p: Point) -> list[Jet2]:
    """Coordinate jets ``[x_1..x_n, y_1..y_n, t]`` at ``p``."""
    arr = p.as_array()
    dim = arr.size
    return [Jet2.variable(arr[i], i, dim) for i in range(dim)]


@dataclass(frozen=True)
class HorizontalJet:
    val: float
    hgrad: np.ndarray
    hhess: np.ndarray
    tu: float

    @property
    def n(self) -> int:
        return self.hgrad.size // 2


def horizontal_from_euclidean(j: Jet2, p: Point) -> HorizontalJet:
    """Convert a Euclidean 2-jet at ``p`` into horizontal data.

    ``hhess[a, b] = W_b(W_a u)`` with ``W = (X_1..X_n, Y_1..Y_n)``, so the
    antisymmetric part is ``2 Tu J``.
    """
    n = p.n
    _, J = structure_matrices(n)
    Jz = J @ p.z
    gz = j.grad[:2 * n]
    ut = j.grad[2 * n]
    Hzz = j.hess[:2 * n, :2 * n]
    uzt = j.hess[:2 * n, 2 * n]
    utt = j.hess[2 * n, 2 * n]
    hgrad = gz + 2.0 * ut * Jz
    mixed = np.outer(uzt, Jz)
    hhess = Hzz + 2.0 * (mixed + mixed.T) + 4.0 * utt * np.outer(Jz, Jz) + 2.0 * ut * J
    return HorizontalJet(j.val, hgrad, hhess, float(ut))


def sublaplacian(h: HorizontalJet) -> float:
    return float(np.trace(h.hhess))


def sublaplacian_explicit(j: Jet2, p: Point) -> float:
    """Coordinate-sum form of the sublaplacian, read straight off a Euclidean jet."""
    n = p.n
    H = j.hess
    total = 0.0
    for k in range(n):
        xk, yk = p.x[k], p.y[k]
        total += (H[k, k] + H[n + k, n + k] + 4.0 * yk * H[k, 2 * n]
                  - 4.0 * xk * H[n + k, 2 * n] + 4.0 * (xk * xk + yk * yk) * H[2 * n, 2 * n])
    return total


def sublaplacian_expanded(j: Jet2, p: Point) -> float:
    """``Delta_z u + 4|z|^2 u_tt + 4 d/dt <Jz, grad_z u>``."""
    n = p.n
    _, J = structure_matrices(n)
    z = p.z
    lap_z = float(np.trace(j.hess[:2 * n, :2 * n]))
    utt = j.hess[2 * n, 2 * n]
    return lap_z + 4.0 * float(z @ z) * utt + 4.0 * float((J @ z) @ j.hess[:2 * n, 2 * n])


def split_hessian(h: HorizontalJet) -> tuple[np.ndarray, float]:
    """Symmetric part of the Heisenberg Hessian and ``Tu``."""
    return 0.5 * (h.hhess + h.hhess.T), h.tu


def _field_coefficients(p: Point) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of ``W_1..W_2n`` in the Euclidean frame, and their derivatives.

    Returns ``C`` with ``W_a = sum_k C[a, k] d_k`` and ``D`` with
    ``D[a, k, m] = d_m C[a, k]``.
    """
    n = p.n
    dim = 2 * n + 1
    C = np.zeros((2 * n, dim))
    D = np.zeros((2 * n, dim, dim))
    for j in range(n):
        C[j, j] = 1.0
        C[j, 2 * n] = 2.0 * p.y[j]
        D[j, 2 * n, n + j] = 2.0
        C[n + j, n + j] = 1.0
        C[n + j, 2 * n] = -2.0 * p.x[j]
        D[n + j, 2 * n, j] = -2.0
    return C, D


def field_product(j: Jet2, p: Point, a: int, b: int) -> float:
    """``W_b(W_a u)(p)`` by composing the two first-order operators directly."""
    C, D = _field_coefficients(p)
    ca, cb = C[a], C[b]
    # W_b (sum_k ca_k d_k u) = cb^T Hess ca + sum_k (W_b ca_k) d_k u
    return float(cb @ j.hess @ ca + (D[a] @ cb) @ j.grad)


def commutator_check(j: Jet2, p: Point, pair: tuple[int, int]) -> tuple[float, float, float]:
    """Residuals of ``[X_i,Y_k]u + 4 Tu delta_ik``, ``[X_i,X_k]u`` and ``[Y_i,Y_k]u``.

    ``pair = (i, k)`` is 0-based. Products of fields come from
    :func:`field_product`, independent of :func:`horizontal_from_euclidean`.
    """
    n = p.n
    i, k = pair
    if not (0 <= i < n and 0 <= k < n):
        raise IndexError(f"field indices {pair} out of range for n={n}")
    ut = j.grad[2 * n]

    def prod(a, b):  # W_a W_b u = W_a(W_b u)
        return field_product(j, p, b, a)

    xy = prod(i, n + k) - prod(n + k, i)
    xx = prod(i, k) - prod(k, i)
    yy = prod(n + i, n + k) - prod(n + k, n + i)
    expected_xy = -4.0 * ut if i == k else 0.0
    return xy - expected_xy, xx, yy
