"""The Heisenberg group H^n as a value type.

Points are stored as ``(x, y, t)`` with ``x, y`` real n-vectors and ``t`` a
real scalar. The dimension ``n`` is carried by the point itself; the
homogeneous dimension ``Q = 2n + 2`` is always derived, never stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# gauge norms below this are treated as the origin by singular maps
SINGULAR_TOL = 1e-12


class SingularPointError(ValueError):
    """Raised when a map with a gauge-norm singularity is evaluated at the origin."""


def homogeneous_dimension(n: int) -> int:
    return 2 * n + 2


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, ndmin=1)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Point:
    x: np.ndarray
    y: np.ndarray
    t: float

    def __post_init__(self):
        x = _frozen(self.x)
        y = _frozen(self.y)
        if x.shape != y.shape or x.size == 0:
            raise ValueError(f"x and y must be nonempty n-vectors, got {x.shape} and {y.shape}")
        t = float(self.t)
        # inf - inf and nan both propagate to a non-finite sum
        if not math.isfinite(float(x.sum()) + float(y.sum()) + t):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def Q(self) -> int:
        return homogeneous_dimension(self.n)

    @property
    def z(self) -> np.ndarray:
        """The horizontal part as a real 2n-vector ``(x, y)``."""
        return np.concatenate([self.x, self.y])

    @classmethod
    def origin(cls, n: int = 1) -> "Point":
        return cls(np.zeros(n), np.zeros(n), 0.0)

    @classmethod
    def from_array(cls, arr) -> "Point":
        """Build from a flat ``(x_1..x_n, y_1..y_n, t)`` array of odd length."""
        arr = np.asarray(arr, dtype=float).reshape(-1)
        if arr.size < 3 or arr.size % 2 == 0:
            raise ValueError(f"flat point must have length 2n+1, got {arr.size}")
        n = (arr.size - 1) // 2
        return cls(arr[:n], arr[n:2 * n], arr[2 * n])

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0) -> "Point":
        return cls(rng.uniform(-scale, scale, n), rng.uniform(-scale, scale, n),
                   rng.uniform(-scale, scale))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.y, [self.t]])

    def allclose(self, other: "Point", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        return self.n == other.n and np.allclose(self.as_array(), other.as_array(),
                                                 atol=atol, rtol=rtol)

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.as_array(), other.as_array()))

    def __hash__(self):
        return hash(self.as_array().tobytes())

    def __repr__(self):
        return f"Point(x={self.x.tolist()}, y={self.y.tolist()}, t={self.t!r})"


def structure_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(G, J)``: ``G = diag(I, -I)`` and ``J = [[0, I], [-I, 0]]``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    G = np.block([[eye, zero], [zero, -eye]])
    J = np.block([[zero, eye], [-eye, zero]])
    return G, J


def compose(a: Point, b: Point) -> Point:
    """Group law ``a o b``; the t-component picks up ``2 sum(a.x*b.y - a.y*b.x)``."""
    _check_same_dim(a, b)
    t = a.t + b.t + 2.0 * (float(np.dot(a.x, b.y)) - float(np.dot(a.y, b.x)))
    return Point(a.x + b.x, a.y + b.y, t)


def invert(a: Point) -> Point:
    return Point(-a.x, -a.y, -a.t)


def gauge_norm(a: Point) -> float:
    """Koranyi gauge ``(|z|^4 + t^2)^(1/4)``."""
    z2 = float(np.dot(a.x, a.x) + np.dot(a.y, a.y))
    return (z2 * z2 + a.t * a.t) ** 0.25


def distance(a: Point, b: Point) -> float:
    return gauge_norm(compose(invert(b), a))


def dilate(lam: float, a: Point) -> Point:
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return Point(lam * a.x, lam * a.y, lam * lam * a.t)


def iota(a: Point) -> Point:
    return Point(a.x, -a.y, -a.t)


def _require_nonsingular(a: Point, what: str) -> float:
    r = gauge_norm(a)
    if r < SINGULAR_TOL:
        raise SingularPointError(f"{what} is singular at the origin (gauge norm {r:.3e})")
    return r


def cr_invert(a: Point) -> Point:
    """The CR inversion; maps the gauge sphere of radius r to radius 1/r."""
    r = _require_nonsingular(a, "cr_invert")
    r4 = r ** 4
    z2 = float(np.dot(a.x, a.x) + np.dot(a.y, a.y))
    x = (a.x * a.t + a.y * z2) / r4
    y = (a.y * a.t - a.x * z2) / r4
    return Point(x, y, -a.t / r4)


def check_invert(a: Point) -> Point:
    """``cr_invert o iota``; unlike ``cr_invert`` this one is an involution."""
    r = _require_nonsingular(a, "check_invert")
    r4 = r ** 4
    z2 = float(np.dot(a.x, a.x) + np.dot(a.y, a.y))
    x = -(a.x * a.t + a.y * z2) / r4
    y = (a.y * a.t - a.x * z2) / r4
    return Point(x, y, a.t / r4)


class UnitaryRotation:
    """An element ``M = B + iC`` of U(n) acting on the horizontal coordinates.

    The constructor re-orthonormalizes the complex columns (one Gram-Schmidt
    pass) so the real form ``[[B, -C], [C, B]]`` is orthogonal to rounding.
    """

    def __init__(self, B, C=None):
        B = np.atleast_2d(np.asarray(B, dtype=float))
        C = np.zeros_like(B) if C is None else np.atleast_2d(np.asarray(C, dtype=float))
        if B.shape != C.shape or B.shape[0] != B.shape[1]:
            raise ValueError("B and C must be square matrices of equal shape")
        M = _gram_schmidt(B + 1j * C)
        self.B = M.real.copy()
        self.C = M.imag.copy()
        self.B.flags.writeable = False
        self.C.flags.writeable = False

    @classmethod
    def from_complex(cls, M) -> "UnitaryRotation":
        M = np.asarray(M, dtype=complex)
        return cls(M.real, M.imag)

    @classmethod
    def identity(cls, n: int) -> "UnitaryRotation":
        return cls(np.eye(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "UnitaryRotation":
        Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, r = np.linalg.qr(Z)
        phases = np.diag(r) / np.abs(np.diag(r))
        return cls.from_complex(q * phases)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def complex(self) -> np.ndarray:
        return self.B + 1j * self.C

    def real_form(self) -> np.ndarray:
        return np.block([[self.B, -self.C], [self.C, self.B]])

    def __repr__(self):
        return f"UnitaryRotation(B={self.B.tolist()}, C={self.C.tolist()})"


def _gram_schmidt(M: np.ndarray) -> np.ndarray:
    Q = np.array(M, dtype=complex)
    for k in range(Q.shape[1]):
        v = Q[:, k]
        for j in range(k):
            v = v - np.vdot(Q[:, j], v) * Q[:, j]
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError("rotation matrix columns are linearly dependent")
        Q[:, k] = v / norm
    return Q


def rotate(M: UnitaryRotation, a: Point) -> Point:
    if M.n != a.n:
        raise ValueError(f"rotation is {M.n}-dimensional but point has n={a.n}")
    return Point(M.B @ a.x - M.C @ a.y, M.B @ a.y + M.C @ a.x, a.t)


def _check_same_dim(a: Point, b: Point) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")


# -- batched forms -----------------------------------------------------------
# Rows of an ``(m, 2n+1)`` array are flat points ``(x, y, t)``. These mirror the
# scalar operations above for data-parallel sampling.

def _split(P: np.ndarray):
    P = np.asarray(P, dtype=float)
    n = (P.shape[1] - 1) // 2
    return P[:, :n], P[:, n:2 * n], P[:, 2 * n], n


def compose_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    ax, ay, at, _ = _split(A)
    bx, by, bt, _ = _split(B)
    t = at + bt + 2.0 * (np.sum(ax * by, axis=1) - np.sum(ay * bx, axis=1))
    return np.column_stack([ax + bx, ay + by, t])


def invert_rows(A: np.ndarray) -> np.ndarray:
    return -np.asarray(A, dtype=float)


def gauge_rows(A: np.ndarray) -> np.ndarray:
    x, y, t, _ = _split(A)
    z2 = np.sum(x * x, axis=1) + np.sum(y * y, axis=1)
    return (z2 * z2 + t * t) ** 0.25


def distance_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return gauge_rows(compose_rows(invert_rows(B), A))


def dilate_rows(lam, A: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise ValueError("dilation factors must be positive")
    lam = np.broadcast_to(lam, (A.shape[0],))[:, None]
    x, y, t, _ = _split(A)
    return np.column_stack([lam * x, lam * y, lam[:, 0] ** 2 * t])


def check_invert_rows(A: np.ndarray) -> np.ndarray:
    x, y, t, _ = _split(A)
    r = gauge_rows(A)
    if np.any(r < SINGULAR_TOL):
        raise SingularPointError("check_invert is singular at the origin")
    r4 = (r ** 4)[:, None]
    z2 = (np.sum(x * x, axis=1) + np.sum(y * y, axis=1))[:, None]
    tc = t[:, None]
    return np.column_stack([-(x * tc + y * z2) / r4, (y * tc - x * z2) / r4, t / r4[:, 0]])
