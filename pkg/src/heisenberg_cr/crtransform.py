"""CR maps as generator words and the transformation laws of horizontal derivatives.

Conventions
-----------
* ``Translate(q)`` acts as ``p -> p o q``. The fields ``X_j = d_xj + 2 y_j d_t``,
  ``Y_j = d_yj - 2 x_j d_t`` commute with this map under the group law of
  :func:`heisenberg_cr.core_group.compose`, so horizontal derivatives transform
  trivially under it.
* Words apply left to right: ``[g1, g2]`` maps ``p`` to ``g2(g1(p))``.
* The transformed function is ``u_psi = |J_psi|^((Q-2)/(2Q)) * (u o psi)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import core_group as grp
from .fields import Field, Scalar, gnorm4, power, znorm2
from .core_group import (Point, SingularPointError, UnitaryRotation, gauge_norm,
                    homogeneous_dimension, structure_matrices)
from .jets import HorizontalJet, Jet2, horizontal_from_euclidean, seed


# -- generators --------------------------------------------------------------

@dataclass(frozen=True)
class Translate:
    q: Point

    def apply(self, p: Point) -> Point:
        return grp.compose(p, self.q)

    def apply_coords(self, c: Sequence[Scalar], n: int) -> list:
        qx, qy = self.q.x, self.q.y
        x, y, t = c[:n], c[n:2 * n], c[2 * n]
        shift = 0.0
        for k in range(n):
            shift = shift + (x[k] * qy[k] - y[k] * qx[k])
        return ([x[k] + qx[k] for k in range(n)] + [y[k] + qy[k] for k in range(n)]
                + [t + self.q.t + 2.0 * shift])

    def factor(self, c, n):
        return 1.0

    def det(self, p: Point) -> float:
        return 1.0


@dataclass(frozen=True)
class Dilate:
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"dilation factor must be positive, got {self.lam}")

    def apply(self, p: Point) -> Point:
        return grp.dilate(self.lam, p)

    def apply_coords(self, c, n):
        lam = self.lam
        return [lam * v for v in c[:2 * n]] + [lam * lam * c[2 * n]]

    def factor(self, c, n):
        return self.lam ** ((homogeneous_dimension(n) - 2) / 2.0)

    def det(self, p: Point) -> float:
        return self.lam ** p.Q


@dataclass(frozen=True)
class Rotate:
    M: UnitaryRotation

    def apply(self, p: Point) -> Point:
        return grp.rotate(self.M, p)

    def apply_coords(self, c, n):
        B, C = self.M.B, self.M.C
        x, y = c[:n], c[n:2 * n]
        nx, ny = [], []
        for i in range(n):
            sx, sy = 0.0, 0.0
            for k in range(n):
                sx = sx + B[i, k] * x[k] - C[i, k] * y[k]
                sy = sy + B[i, k] * y[k] + C[i, k] * x[k]
            nx.append(sx)
            ny.append(sy)
        return nx + ny + [c[2 * n]]

    def factor(self, c, n):
        return 1.0

    def det(self, p: Point) -> float:
        return 1.0


@dataclass(frozen=True)
class Iota:
    def apply(self, p: Point) -> Point:
        return grp.iota(p)

    def apply_coords(self, c, n):
        return list(c[:n]) + [-v for v in c[n:2 * n]] + [-c[2 * n]]

    def factor(self, c, n):
        return 1.0

    def det(self, p: Point) -> float:
        return 1.0


@dataclass(frozen=True)
class CheckInvert:
    def apply(self, p: Point) -> Point:
        return grp.check_invert(p)

    def apply_coords(self, c, n):
        r4 = gnorm4(c)
        _require_nonsingular(r4)
        z2 = znorm2(c)
        x, y, t = c[:n], c[n:2 * n], c[2 * n]
        inv = 1.0 / r4
        return ([-(x[k] * t + y[k] * z2) * inv for k in range(n)]
                + [(y[k] * t - x[k] * z2) * inv for k in range(n)] + [t * inv])

    def factor(self, c, n):
        r4 = gnorm4(c)
        _require_nonsingular(r4)
        return power(r4, -(homogeneous_dimension(n) - 2) / 4.0)

    def det(self, p: Point) -> float:
        r = gauge_norm(p)
        if r < grp.SINGULAR_TOL:
            raise SingularPointError("check_invert is singular at the origin")
        return r ** (-2 * p.Q)


Generator = Union[Translate, Dilate, Rotate, Iota, CheckInvert]


def _require_nonsingular(r4) -> None:
    v = r4.val if isinstance(r4, Jet2) else np.min(np.asarray(r4))
    if not v >= grp.SINGULAR_TOL ** 4:
        raise SingularPointError("check_invert is singular at the origin")


class WordSingularError(SingularPointError):
    def __init__(self, position: int, generator):
        super().__init__(f"word position {position} ({type(generator).__name__}) hit the origin")
        self.position = position


@dataclass(frozen=True)
class CRMap:
    word: tuple

    def __init__(self, word: Sequence[Generator] = ()):
        object.__setattr__(self, "word", tuple(word))

    def apply(self, p: Point) -> Point:
        for i, g in enumerate(self.word):
            try:
                p = g.apply(p)
            except SingularPointError:
                raise WordSingularError(i, g) from None
        return p

    def apply_coords(self, c, n):
        c = list(c)
        for i, g in enumerate(self.word):
            try:
                c = g.apply_coords(c, n)
            except SingularPointError:
                raise WordSingularError(i, g) from None
        return c

    def jacobian_det(self, p: Point) -> float:
        det = 1.0
        for i, g in enumerate(self.word):
            try:
                det *= g.det(p)
                p = g.apply(p)
            except SingularPointError:
                raise WordSingularError(i, g) from None
        return det


def apply_map(m: CRMap | Sequence[Generator], p: Point) -> Point:
    return _as_map(m).apply(p)


def jacobian_det(m: CRMap | Sequence[Generator], p: Point) -> float:
    return _as_map(m).jacobian_det(p)


def jacobian_det_numeric(m: CRMap | Sequence[Generator], p: Point) -> float:
    """``|det|`` of the Euclidean Jacobian of the composite, read off coordinate jets."""
    out = _as_map(m).apply_coords(seed(p), p.n)
    dim = 2 * p.n + 1
    rows = [o.grad if isinstance(o, Jet2) else np.zeros(dim) for o in out]
    return abs(float(np.linalg.det(np.array(rows))))


def _as_map(m) -> CRMap:
    return m if isinstance(m, CRMap) else CRMap(m)


def transform_field(m: CRMap | Sequence[Generator], u: Field) -> Field:
    """``u_psi(xi) = |J_psi(xi)|^((Q-2)/(2Q)) u(psi(xi))``, built generator by generator."""
    word = _as_map(m).word
    n = u.n

    def fn(c):
        c = list(c)
        scale = 1.0
        for i, g in enumerate(word):
            try:
                scale = scale * g.factor(c, n)
                c = g.apply_coords(c, n)
            except SingularPointError:
                raise WordSingularError(i, g) from None
        return scale * u(c)

    names = ", ".join(type(g).__name__ for g in word)
    return Field(fn, n, f"{u.name} via [{names}]", None, u.domain)


# -- closed-form transformation laws ----------------------------------------

def _check_terms(p: Point):
    n = p.n
    G, J = structure_matrices(n)
    z = p.z
    z2 = float(z @ z)
    r = gauge_norm(p)
    if r < grp.SINGULAR_TOL:
        raise SingularPointError("check_invert is singular at the origin")
    return n, G, J, z, z2, p.t, r


def closed_form_first(g: Generator, u: Field, p: Point) -> np.ndarray:
    """``grad_H u_g(p)`` from the horizontal jet of ``u`` at ``g(p)``."""
    img = g.apply(p)
    h = u.horizontal(img)
    n = p.n
    Q = p.Q
    G, J = structure_matrices(n)
    if isinstance(g, Translate):
        return h.hgrad
    if isinstance(g, Rotate):
        return g.M.real_form().T @ h.hgrad
    if isinstance(g, Iota):
        return G @ h.hgrad
    if isinstance(g, Dilate):
        return g.lam ** (Q / 2.0) * h.hgrad
    if isinstance(g, CheckInvert):
        a, b = _check_invert_first_terms(p, h)
        return a + b
    raise TypeError(f"unknown generator {g!r}")


def _check_invert_first_terms(p: Point, h: HorizontalJet) -> tuple[np.ndarray, np.ndarray]:
    n, G, J, z, z2, t, r = _check_terms(p)
    Q = p.Q
    E = matrix_E(p).E
    w = z2 * z + t * (J @ z)
    return -(Q - 2) * r ** (-(Q + 2)) * h.val * w, r ** (-Q) * (E @ h.hgrad)


def closed_form_second(g: Generator, u: Field, p: Point, tables: bool = False) -> np.ndarray:
    """``hess_H u_g(p)``; for ``CheckInvert`` the extra first-order block comes from the
    explicit expansion, or from the second-derivative tables when ``tables`` is set."""
    img = g.apply(p)
    h = u.horizontal(img)
    n = p.n
    Q = p.Q
    G, J = structure_matrices(n)
    if isinstance(g, Translate):
        return h.hhess
    if isinstance(g, Rotate):
        Mt = g.M.real_form()
        return Mt.T @ h.hhess @ Mt
    if isinstance(g, Iota):
        return G @ h.hhess @ G
    if isinstance(g, Dilate):
        return g.lam ** ((Q + 2) / 2.0) * h.hhess
    if isinstance(g, CheckInvert):
        return _check_invert_second(p, h, tables)
    raise TypeError(f"unknown generator {g!r}")


def _check_invert_second(p: Point, h: HorizontalJet, tables: bool) -> np.ndarray:
    return sum(_check_invert_second_terms(p, h, tables))


def _check_invert_second_terms(p: Point, h: HorizontalJet, tables: bool) -> list[np.ndarray]:
    n, G, J, z, z2, t, r = _check_terms(p)
    Q = p.Q
    I = np.eye(2 * n)
    E = matrix_E(p).E
    w = z2 * z + t * (J @ z)
    Eg = E @ h.hgrad
    s = h.val
    terms = [(Q * Q - 4) * r ** (-(Q + 6)) * s * np.outer(w, w),
             -(Q - 2) * r ** (-(Q + 2)) * s * (z2 * I + t * J + 2 * np.outer(z, z)
                                              + 2 * np.outer(J @ z, J @ z)),
             -(Q - 2) * r ** (-(Q + 4)) * (np.outer(w, Eg) + np.outer(Eg, w)),
             r ** (-(Q + 2)) * E @ h.hhess @ E.T]
    if tables:
        terms.append(r ** (-(Q - 2)) * _table_block(p, h.hgrad))
    else:
        terms.append(_extra_block(p, h.hgrad))
    return terms


def closed_form_scale(g: Generator, u: Field, p: Point, order: int) -> float:
    """Largest entry among the separate terms of the closed form of the given order.

    Only the inversion's laws sum several terms; for it the transformed field
    can vanish identically (e.g. the fundamental solution maps to a constant),
    so comparisons use this as a relative-error floor. Zero for other generators.
    """
    if not isinstance(g, CheckInvert):
        return 0.0
    h = u.horizontal(g.apply(p))
    if order == 1:
        terms = _check_invert_first_terms(p, h)
    elif order == 2:
        terms = _check_invert_second_terms(p, h, tables=False)
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    return max(float(np.max(np.abs(a))) for a in terms)


def _extra_block(p: Point, g: np.ndarray) -> np.ndarray:
    """Closed-form expansion of ``|xi|^-(Q-2) sum_h hess_H(x_h) X_h u + hess_H(y_h) Y_h u``."""
    n, G, J, z, z2, t, r = _check_terms(p)
    Q = p.Q
    I = np.eye(2 * n)
    Jz = J @ z
    Gg = G @ g
    GJg = G @ J @ g
    a = float((G @ J @ z) @ g)   # <GJz, grad_H u>
    b = float((G @ z) @ g)       # <Gz, grad_H u>
    d = z2 * z2 - t * t
    c6 = r ** (-(Q + 6))
    c10 = r ** (-(Q + 10))
    v1 = -2 * d * Jz + 4 * t * z2 * z
    v2 = 2 * d * z + 4 * t * z2 * Jz
    m1 = a * z - b * Jz
    m2 = b * z + a * Jz
    w = z2 * z + t * Jz
    return (c6 * (np.outer(Gg, v1) + np.outer(v1, Gg) + np.outer(GJg, v2) + np.outer(v2, GJg))
            + 8 * c6 * (np.outer(m1, z2 * z - t * Jz) + np.outer(m2, t * z + z2 * Jz))
            - 16 * d * c10 * np.outer(m1, w)
            - 32 * t * z2 * c10 * np.outer(m2, w)
            + c6 * (2 * d * a + 4 * t * z2 * b) * I
            + c6 * (-2 * d * b + 4 * t * z2 * a) * J)


def _table_block(p: Point, g: np.ndarray) -> np.ndarray:
    """``sum_h hess_H(x_h) g_h + hess_H(y_h) g_{n+h}`` from the second-derivative tables."""
    tab = appendix_second_derivs(p)
    n = p.n
    out = np.zeros((2 * n, 2 * n))
    for k in range(n):
        out += tab.hess_x(k) * g[k] + tab.hess_y(k) * g[n + k]
    return out


def sublaplacian_transform_sides(u: Field, p: Point) -> tuple[float, float, float]:
    """``(Delta_H u_check(p), |p|^-(Q+2) Delta_H u(check(p)), scale)``.

    ``scale`` is the larger of the two diagonal sums of absolute Hessian
    entries, the natural floor when both sides vanish (harmonic ``u``).
    """
    Q = p.Q
    h_src = transform_field([CheckInvert()], u).horizontal(p)
    h_img = u.horizontal(grp.check_invert(p))
    f = gauge_norm(p) ** (-(Q + 2))
    lhs = float(np.trace(h_src.hhess))
    rhs = f * float(np.trace(h_img.hhess))
    scale = max(float(np.sum(np.abs(np.diag(h_src.hhess)))),
                f * float(np.sum(np.abs(np.diag(h_img.hhess)))))
    return lhs, rhs, scale


def sublaplacian_transform_check(u: Field, p: Point) -> float:
    """Residual ``Delta_H u_check(p) - |p|^-(Q+2) Delta_H u(check(p))``."""
    lhs, rhs, _ = sublaplacian_transform_sides(u, p)
    return lhs - rhs


def _quotient(h: HorizontalJet, Q: int) -> tuple[float, float]:
    f = h.val ** (-(Q + 2) / (Q - 2))
    return f * float(np.trace(h.hhess)), f * float(np.sum(np.abs(np.diag(h.hhess))))


def yamabe_quotient(u: Field, p: Point) -> float:
    """``u^(-(Q+2)/(Q-2)) Delta_H u`` at ``p``."""
    return _quotient(u.horizontal(p), p.Q)[0]


def scalar_invariance_sides(g: Generator, u: Field, p: Point) -> tuple[float, float, float]:
    """Both sides of ``yamabe_quotient(u_g)(p) = yamabe_quotient(u)(g p)`` plus a term scale."""
    a, sa = _quotient(transform_field([g], u).horizontal(p), p.Q)
    b, sb = _quotient(u.horizontal(g.apply(p)), p.Q)
    return a, b, max(sa, sb)


def scalar_invariance_residual(g: Generator, u: Field, p: Point) -> tuple[float, float]:
    """Both sides of ``yamabe_quotient(u_g)(p) = yamabe_quotient(u)(g p)``."""
    a, b, _ = scalar_invariance_sides(g, u, p)
    return a, b


# -- appendix tables ---------------------------------------------------------

@dataclass(frozen=True)
class FirstDerivTable:
    """``Xx[j, h] = X_j(x_h)`` etc. for the coordinates of the involutive inversion."""
    Xx: np.ndarray
    Xy: np.ndarray
    Yx: np.ndarray
    Yy: np.ndarray
    Xt: np.ndarray
    Yt: np.ndarray
    Tx: np.ndarray
    Ty: np.ndarray
    Tt: float

    def hgrad_x(self, h: int) -> np.ndarray:
        return np.concatenate([self.Xx[:, h], self.Yx[:, h]])

    def hgrad_y(self, h: int) -> np.ndarray:
        return np.concatenate([self.Xy[:, h], self.Yy[:, h]])

    def hgrad_t(self) -> np.ndarray:
        return np.concatenate([self.Xt, self.Yt])


def appendix_first_derivs(p: Point) -> FirstDerivTable:
    n, G, J, z, z2, t, r = _check_terms(p)
    x, y = p.x, p.y
    r4, r8 = r ** 4, r ** 8
    d = z2 * z2 - t * t
    I = np.eye(n)
    # index [j, h]
    Xx = -t / r4 * I + (2 * d * (np.outer(x, y) - np.outer(y, x)) + 4 * t * z2 * (np.outer(x, x) + np.outer(y, y))) / r8
    Xy = -z2 / r4 * I + (2 * d * (np.outer(x, x) + np.outer(y, y)) + 4 * t * z2 * (np.outer(y, x) - np.outer(x, y))) / r8
    Xt = (2 * d * y - 4 * t * z2 * x) / r8
    Yt = (-2 * d * x - 4 * t * z2 * y) / r8
    Tx = (-d * x + 2 * t * z2 * y) / r8
    Ty = (d * y + 2 * t * z2 * x) / r8
    return FirstDerivTable(Xx, Xy, Xy.copy(), -Xx, Xt, Yt, Tx, Ty, d / r8)


@dataclass(frozen=True)
class SecondDerivTable:
    """``XX_x[j, i, h] = X_j X_i(x_h)``, ``XY_x[j, i, h] = X_j Y_i(x_h)`` and so on.

    ``*_t[j, i]`` hold the same for the t-coordinate.
    """
    XX_x: np.ndarray
    XY_x: np.ndarray
    YX_x: np.ndarray
    YY_x: np.ndarray
    XX_y: np.ndarray
    XY_y: np.ndarray
    YX_y: np.ndarray
    YY_y: np.ndarray
    XX_t: np.ndarray
    XY_t: np.ndarray
    YX_t: np.ndarray
    YY_t: np.ndarray

    @staticmethod
    def _assemble(XX, XY, YX, YY) -> np.ndarray:
        # hess[a, b] = W_b W_a f with W = (X, Y); the tables are indexed [j, i]
        n = XX.shape[0]
        H = np.zeros((2 * n, 2 * n))
        H[:n, :n] = XX.T
        H[n:, :n] = XY.T
        H[:n, n:] = YX.T
        H[n:, n:] = YY.T
        return H

    def hess_x(self, h: int) -> np.ndarray:
        return self._assemble(self.XX_x[:, :, h], self.XY_x[:, :, h], self.YX_x[:, :, h], self.YY_x[:, :, h])

    def hess_y(self, h: int) -> np.ndarray:
        return self._assemble(self.XX_y[:, :, h], self.XY_y[:, :, h], self.YX_y[:, :, h], self.YY_y[:, :, h])

    def hess_t(self) -> np.ndarray:
        return self._assemble(self.XX_t, self.XY_t, self.YX_t, self.YY_t)


def appendix_second_derivs(p: Point) -> SecondDerivTable:
    n, G, J, z, z2, t, r = _check_terms(p)
    x, y = p.x, p.y
    r8, r12 = r ** 8, r ** 12
    d = z2 * z2 - t * t
    q = 4 * t * z2
    I = np.eye(n)
    # broadcasting axes: j -> 0, i -> 1, h -> 2
    xj, yj = x[:, None, None], y[:, None, None]
    xi, yi = x[None, :, None], y[None, :, None]
    xh, yh = x[None, None, :], y[None, None, :]
    d_ih = I[None, :, :]
    d_ij = I[:, :, None]
    d_jh = I[:, None, :]
    A = xi * yh - yi * xh
    B = xi * xh + yi * yh

    XX = (d_ih * (-2 * d * yj + q * xj) / r8
          - 8 / r12 * (z2 * xj + t * yj) * (2 * d * A + q * B)
          + (8 * (z2 * xj - t * yj) * A + 8 * (t * xj + z2 * yj) * B
             + d_ij * (2 * d * yh + q * xh) + d_jh * (-2 * d * yi + q * xi)) / r8)
    XY = (d_ih * (2 * d * xj + q * yj) / r8
          - 8 / r12 * (z2 * xj + t * yj) * (2 * d * B - q * A)
          + (8 * (z2 * xj - t * yj) * B - 8 * (t * xj + z2 * yj) * A
             + d_ij * (2 * d * xh - q * yh) + d_jh * (2 * d * xi + q * yi)) / r8)
    YX = (d_ih * (2 * d * xj + q * yj) / r8
          + 8 / r12 * (z2 * yj - t * xj) * (-2 * d * A - q * B)
          - (-8 * (z2 * yj + t * xj) * A + 8 * (z2 * xj - t * yj) * B
             + d_ij * (2 * d * xh - q * yh) + d_jh * (-2 * d * xi - q * yi)) / r8)
    YY = (d_ih * (2 * d * yj - q * xj) / r8
          - 8 / r12 * (z2 * yj - t * xj) * (2 * d * B - q * A)
          + (8 * (z2 * yj + t * xj) * B + 8 * (z2 * xj - t * yj) * A
             + d_ij * (2 * d * yh + q * xh) + d_jh * (2 * d * yi - q * xi)) / r8)

    xj2, yj2 = x[:, None], y[:, None]
    xi2, yi2 = x[None, :], y[None, :]
    XXt = (-8 / r12 * (z2 * xj2 + t * yj2) * (2 * d * yi2 - q * xi2)
           + (8 * (z2 * xj2 - t * yj2) * yi2 - 8 * (t * xj2 + z2 * yj2) * xi2 - q * I) / r8)
    XYt = (-8 / r12 * (z2 * xj2 + t * yj2) * (-2 * d * xi2 - q * yi2)
           + (8 * (t * yj2 - z2 * xj2) * xi2 - 8 * (t * xj2 + z2 * yj2) * yi2 - 2 * d * I) / r8)
    YYt = (-8 / r12 * (z2 * yj2 - t * xj2) * (-2 * d * xi2 - q * yi2)
           + (8 * (z2 * xj2 - t * yj2) * yi2 - 8 * (z2 * yj2 + t * xj2) * xi2 - q * I) / r8)
    # Y_j X_i(t) follows from [X_i, Y_j] = -4 delta_ij T
    first = appendix_first_derivs(p)
    YXt = XYt.T + 4 * first.Tt * I
    return SecondDerivTable(XX, XY, YX, YY, XY, -XX, YY, -YX, XXt, XYt, YXt, YYt)


# -- transport matrix --------------------------------------------------------

@dataclass(frozen=True)
class TransportE:
    E: np.ndarray
    R: np.ndarray
    S: np.ndarray


def matrix_E(p: Point) -> TransportE:
    n, G, J, z, z2, t, r = _check_terms(p)
    x, y = p.x, p.y
    Jz = J @ z
    r2, r6 = r ** 2, r ** 6
    d = z2 * z2 - t * t
    I = np.eye(2 * n)
    E = (-t / r2 * I + z2 / r2 * J
         + (2 * d * (np.outer(z, Jz) - np.outer(Jz, z))
            + 4 * t * z2 * (np.outer(z, z) + np.outer(Jz, Jz))) / r6) @ G
    In = np.eye(n)
    R = -t / r2 * In + (2 * d * (np.outer(x, y) - np.outer(y, x)) + 4 * t * z2 * (np.outer(x, x) + np.outer(y, y))) / r6
    S = -z2 / r2 * In + (2 * d * (np.outer(x, x) + np.outer(y, y)) + 4 * t * z2 * (np.outer(y, x) - np.outer(x, y))) / r6
    return TransportE(E, R, S)


def matrix_E_blocks(p: Point) -> np.ndarray:
    """``[[R, S], [S, -R]]`` assembled from the block formulas."""
    T = matrix_E(p)
    return np.block([[T.R, T.S], [T.S, -T.R]])


# -- jet prescription and conjugation lemmas ---------------------------------

def prescribe_jet(xi0: Point, s: float, V, S, c: float, kappa: float = 0.1) -> Field:
    """A positive field with value ``s``, horizontal gradient ``V`` and Heisenberg
    Hessian ``S + cJ`` at ``xi0``.

    The profile is ``w(zeta) = s exp(L(zeta)) exp(-kappa |zeta|^4)`` with ``L`` the
    quadratic matching the Euclidean 2-jet ``(s, (V, c/2), diag(S, 1))`` at 0.
    The quartic envelope keeps ``w`` bounded without touching the 2-jet.
    """
    if not s > 0:
        raise ValueError(f"prescribed value must be positive, got {s}")
    n = xi0.n
    V = np.asarray(V, dtype=float).reshape(2 * n)
    S = np.asarray(S, dtype=float).reshape(2 * n, 2 * n)
    if not np.allclose(S, S.T, atol=1e-14, rtol=0):
        raise ValueError("S must be symmetric")
    dim = 2 * n + 1
    g = np.concatenate([V, [c / 2.0]])
    H = np.zeros((dim, dim))
    H[:2 * n, :2 * n] = S
    H[2 * n, 2 * n] = 1.0
    lin = g / s
    quad = 0.5 * (H / s - np.outer(g, g) / (s * s))
    shift = Translate(grp.invert(xi0))

    def fn(c_):
        zeta = shift.apply_coords(c_, n)
        L = 0.0
        r2 = 0.0
        for i in range(dim):
            L = L + lin[i] * zeta[i]
            r2 = r2 + zeta[i] * zeta[i]
            for j in range(dim):
                if quad[i, j] != 0.0:
                    L = L + quad[i, j] * (zeta[i] * zeta[j])
        return s * _exp(L - kappa * (r2 * r2))

    return Field(fn, n, "prescribed_jet")


def _exp(v):
    from .jets import exp
    return exp(v)


def conjugation_word(lam: float) -> CRMap:
    """``xi -> check_invert(dilate(lam^-2, xi))``; an involution away from the origin."""
    return CRMap([Dilate(lam ** -2), CheckInvert()])


def conjugate_jet(lam: float, sign: int, U) -> np.ndarray:
    """Heisenberg Hessian of the conjugated field at the fixed point ``(0, 0, sign*lam^2)``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    U = np.asarray(U, dtype=float)
    n = U.shape[0] // 2
    G, J = structure_matrices(n)
    Q = homogeneous_dimension(n)
    return -sign * (Q - 2) / lam ** 2 * J + G @ U @ G


def conjugation_anchor(s: float, v) -> tuple[Point, float]:
    """The base point ``xi0`` (with ``t0 = 0``) and ``lambda = |xi0|`` for data ``(s, v)``."""
    v = np.asarray(v, dtype=float)
    n = v.size // 2
    Q = homogeneous_dimension(n)
    nv2 = float(v @ v)
    if nv2 == 0:
        raise ValueError("v must be nonzero")
    z0 = -(Q - 2) * s / nv2 * v
    return Point(z0[:n], z0[n:], 0.0), (Q - 2) * s / np.sqrt(nv2)


def conjugate_jet_general(s: float, v, U) -> np.ndarray:
    """Heisenberg Hessian of the conjugated field at the preimage of the anchor point."""
    v = np.asarray(v, dtype=float)
    U = np.asarray(U, dtype=float)
    n = v.size // 2
    G, J = structure_matrices(n)
    Q = homogeneous_dimension(n)
    I = np.eye(2 * n)
    Jv = J @ v
    nv2 = float(v @ v)
    inner = (-Q / (Q - 2) / s * np.outer(Jv, Jv) + 2 / (Q - 2) / s * np.outer(v, v)
             + nv2 / ((Q - 2) * s) * I + J.T @ U @ J
             + 4 / nv2 ** 2 * (float(v @ U @ v) * np.outer(Jv, Jv) + float(Jv @ U @ Jv) * np.outer(v, v)
                               - float(Jv @ U @ v) * np.outer(v, Jv) - float(v @ U @ Jv) * np.outer(Jv, v))
             + 2 / nv2 * (np.outer(Jv, J.T @ U.T @ v) - np.outer(v, J.T @ U.T @ Jv)
                          + np.outer(J.T @ U @ v, Jv) - np.outer(J.T @ U @ Jv, v)))
    return G @ inner @ G


def conjugation_E(v) -> np.ndarray:
    """Closed form of the transport matrix at the preimage of the anchor point."""
    v = np.asarray(v, dtype=float)
    n = v.size // 2
    G, J = structure_matrices(n)
    Jv = J @ v
    return G @ (2 / float(v @ v) * (np.outer(Jv, v) - np.outer(v, Jv)) + J.T)


def normal_form_target(s: float, v, U) -> np.ndarray:
    """``E^T H E`` for ``H`` the conjugated Hessian: the normal-form argument."""
    v = np.asarray(v, dtype=float)
    n = v.size // 2
    _, J = structure_matrices(n)
    Q = homogeneous_dimension(n)
    Jv = J @ v
    return (-Q / (Q - 2) / s * np.outer(v, v) + 2 / (Q - 2) / s * np.outer(Jv, Jv)
            + float(v @ v) / ((Q - 2) * s) * np.eye(2 * n) + np.asarray(U, dtype=float))


def scaled_translate(w: Field, xi: Point, lam: float) -> Field:
    """``w^{xi,lam}(eta) = lam^((Q-2)/2) w(delta_lam(eta) o xi)``, written out directly."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    n = w.n
    Q = homogeneous_dimension(n)
    pre = lam ** ((Q - 2) / 2.0)
    qx, qy, qt = xi.x, xi.y, xi.t

    def fn(c):
        x = [lam * v for v in c[:n]]
        y = [lam * v for v in c[n:2 * n]]
        t = lam * lam * c[2 * n] + qt
        for k in range(n):
            t = t + 2.0 * (x[k] * qy[k] - y[k] * qx[k])
        return pre * w([x[k] + qx[k] for k in range(n)] + [y[k] + qy[k] for k in range(n)] + [t])

    return Field(fn, n, f"{w.name} scaled-translated", None, w.domain)
