"""Finite-difference sublaplacian on H^1 and the two-sphere barrier Dirichlet problems.

For ``n = 1`` the operator is

    u_xx + u_yy + 4 y u_xt - 4 x u_yt + 4 (x^2 + y^2) u_tt,

discretized with central second differences and 4-point cross stencils.
Nodes are numbered row-major with ``t`` fastest.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core_group import Point, distance, gauge_norm

EXTERIOR, INTERIOR, OUTER, INNER = 0, 1, 2, 3
MASK_NAMES = {EXTERIOR: "exterior", INTERIOR: "interior", OUTER: "boundary-outer",
              INNER: "boundary-inner"}

INNER_CENTER = Point([0.5], [0.0], 0.0)
INNER_RADIUS = 0.25
C0 = 1.0 / 8.0
SOLVER_RTOL = 1e-8
BOUND_SLACK = 1e-9

# the 18 neighbor offsets (di, dj, dk) touched by the stencil, plus the center
_OFFSETS = ([(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
            + [(a, 0, c) for a in (1, -1) for c in (1, -1)]
            + [(0, b, c) for b in (1, -1) for c in (1, -1)])


class GridContractError(RuntimeError):
    """A stencil was requested at a node whose neighbors are not all inside the domain."""


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class GridSpec:
    """Box ``[-zr, zr]^2 x [-tr, tr]`` with ``N`` nodes per horizontal axis.

    The t axis gets ``h_t ~ t_ratio * h_z`` (rounded so the origin is a node),
    reflecting the quadratic scaling of t under dilations.
    """
    N: int
    z_half: float = 1.2
    t_half: float = 1.4
    t_ratio: float = 0.5
    n: int = 1

    def __post_init__(self):
        if self.n != 1:
            raise ValueError("the grid is implemented for n = 1 only")
        if self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"node count must be odd and >= 3, got {self.N}")
        if not (self.z_half > 0 and self.t_half > 0 and self.t_ratio > 0):
            raise ValueError("box half-widths and t_ratio must be positive")

    @property
    def hz(self) -> float:
        return 2 * self.z_half / (self.N - 1)

    @property
    def Nt(self) -> int:
        return 2 * max(1, round(self.t_half / (self.t_ratio * self.hz))) + 1

    @property
    def ht(self) -> float:
        return 2 * self.t_half / (self.Nt - 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.Nt)

    @property
    def size(self) -> int:
        return self.N * self.N * self.Nt

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        z = np.linspace(-self.z_half, self.z_half, self.N)
        return z, z.copy(), np.linspace(-self.t_half, self.t_half, self.Nt)

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def origin_index(self) -> tuple[int, int, int]:
        return (self.N // 2, self.N // 2, self.Nt // 2)


@dataclass
class DomainMask:
    spec: GridSpec
    labels: np.ndarray  # int8 array of shape spec.shape

    def count(self, label: int) -> int:
        return int(np.sum(self.labels == label))

    def is_boundary(self) -> np.ndarray:
        return (self.labels == OUTER) | (self.labels == INNER)


@dataclass
class GridField:
    spec: GridSpec
    values: np.ndarray
    mask: DomainMask | None = None
    residual: float = float("nan")
    iterations: int = 0
    meta: dict = field(default_factory=dict)


# -- masks -------------------------------------------------------------------

def _gauge(x, y, t):
    z2 = x * x + y * y
    return (z2 * z2 + t * t) ** 0.25


def _distance_to(center: Point, x, y, t):
    """Vectorized ``distance(xi, center)`` = gauge of ``center^-1 o xi``."""
    dx, dy = x - center.x[0], y - center.y[0]
    dt = t - center.t + 2.0 * (-center.x[0] * y + center.y[0] * x)
    return _gauge(dx, dy, dt)


def _core(shape) -> tuple[slice, ...]:
    return tuple(slice(1, m - 1) for m in shape)


def _shifted(shape, off) -> tuple[slice, ...]:
    return tuple(slice(1 + d, m - 1 + d) for m, d in zip(shape, off))


def _stencil_closed(inside: np.ndarray) -> np.ndarray:
    """Nodes whose every stencil neighbor is inside (box edges count as outside)."""
    ok = np.zeros_like(inside)
    core = _core(inside.shape)
    acc = inside[core].copy()
    for off in _OFFSETS[1:]:
        acc &= inside[_shifted(inside.shape, off)]
    ok[core] = acc
    return ok


def build_mask(spec: GridSpec, inside: np.ndarray, outer_side: np.ndarray) -> DomainMask:
    """Inside nodes with a complete stencil are interior; other inside nodes are
    boundary nodes, labeled outer where ``outer_side`` holds and inner elsewhere."""
    interior = _stencil_closed(inside)
    labels = np.full(spec.shape, EXTERIOR, dtype=np.int8)
    labels[interior] = INTERIOR
    bnd = inside & ~interior
    labels[bnd & outer_side] = OUTER
    labels[bnd & ~outer_side] = INNER
    return DomainMask(spec, labels)


def barrier_mask(spec: GridSpec) -> DomainMask:
    """Unit gauge ball minus the gauge ball of radius 1/4 about ``((1/2, 0), 0)``."""
    X, Y, T = spec.coords()
    g = _gauge(X, Y, T)
    d = _distance_to(INNER_CENTER, X, Y, T)
    inside = (g < 1.0) & (d > INNER_RADIUS)
    return build_mask(spec, inside, (1.0 - g) <= (d - INNER_RADIUS))


def annulus_mask(spec: GridSpec, r_in: float, r_out: float) -> DomainMask:
    X, Y, T = spec.coords()
    g = _gauge(X, Y, T)
    inside = (g < r_out) & (g > r_in)
    return build_mask(spec, inside, (r_out - g) <= (g - r_in))


def ball_mask(spec: GridSpec, radius: float = 1.0) -> DomainMask:
    X, Y, T = spec.coords()
    g = _gauge(X, Y, T)
    return build_mask(spec, g < radius, np.ones(spec.shape, dtype=bool))


# -- stencil -----------------------------------------------------------------

def _stencil_weights(spec: GridSpec, x, y):
    """Weights for each offset in ``_OFFSETS`` at horizontal position ``(x, y)``."""
    hz2 = spec.hz ** 2
    ht2 = spec.ht ** 2
    ctt = 4.0 * (x * x + y * y) / ht2
    cxt = y / (spec.hz * spec.ht)
    cyt = -x / (spec.hz * spec.ht)
    one = np.ones_like(np.asarray(x, dtype=float))
    return [-4.0 / hz2 * one - 2.0 * ctt,
            one / hz2, one / hz2, one / hz2, one / hz2, ctt, ctt,
            cxt, -cxt, -cxt, cxt,
            cyt, -cyt, -cyt, cyt]


def stencil_apply(g: GridField, node: tuple[int, int, int]) -> float:
    """Discrete sublaplacian at one node; every neighbor must be inside the domain."""
    spec = g.spec
    i, j, k = node
    for di, dj, dk in _OFFSETS:
        a, b, c = i + di, j + dj, k + dk
        if not all(0 <= v < m for v, m in zip((a, b, c), spec.shape)):
            raise GridContractError(f"stencil at {node} leaves the grid")
        if g.mask is not None and g.mask.labels[a, b, c] == EXTERIOR:
            raise GridContractError(f"stencil at {node} touches exterior node {(a, b, c)}")
    x, y, _ = (ax[v] for ax, v in zip(spec.axes(), node))
    w = _stencil_weights(spec, x, y)
    return float(sum(wk * g.values[i + di, j + dj, k + dk] for wk, (di, dj, dk) in zip(w, _OFFSETS)))


def apply_operator(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    """Discrete sublaplacian at every node not on the box faces (NaN on the faces)."""
    X, Y, _ = spec.coords()
    core = _core(spec.shape)
    w = _stencil_weights(spec, X[core], Y[core])
    out = np.full(spec.shape, np.nan)
    acc = np.zeros(X[core].shape)
    for wk, off in zip(w, _OFFSETS):
        acc += wk * values[_shifted(spec.shape, off)]
    out[core] = acc
    return out


def operator_scale(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    """``sum_k |w_k| |u_k|`` per node: the size of the terms the stencil cancels.

    Rounding error of :func:`apply_operator` is a small multiple of this times
    machine epsilon, so exactness checks are stated relative to it.
    """
    X, Y, _ = spec.coords()
    core = _core(spec.shape)
    w = _stencil_weights(spec, X[core], Y[core])
    out = np.full(spec.shape, np.nan)
    acc = np.zeros(X[core].shape)
    for wk, off in zip(w, _OFFSETS):
        acc += np.abs(wk) * np.abs(values[_shifted(spec.shape, off)])
    out[core] = acc
    return out


def stencil_at_points(f: Callable, pts: np.ndarray, hz: float, ht: float) -> np.ndarray:
    """The same stencil applied to an analytic ``f(x, y, t)`` at arbitrary points."""
    x, y, t = pts[:, 0], pts[:, 1], pts[:, 2]
    spec_like = _Spacing(hz, ht)
    w = _stencil_weights(spec_like, x, y)
    acc = np.zeros(len(pts))
    for wk, (di, dj, dk) in zip(w, _OFFSETS):
        acc += wk * f(x + di * hz, y + dj * hz, t + dk * ht)
    return acc


@dataclass(frozen=True)
class _Spacing:
    hz: float
    ht: float


def assemble(mask: DomainMask) -> tuple[sp.csr_matrix, sp.csr_matrix, np.ndarray, np.ndarray]:
    """Sparse operator rows for interior nodes, split into interior and boundary columns."""
    spec = mask.spec
    labels = mask.labels.reshape(-1)
    interior = np.flatnonzero(labels == INTERIOR)
    boundary = np.flatnonzero((labels == OUTER) | (labels == INNER))
    ii, jj, kk = np.unravel_index(interior, spec.shape)
    X, Y, _ = spec.axes()
    w = _stencil_weights(spec, X[ii], Y[jj])
    rows, cols, vals = [], [], []
    for wk, (di, dj, dk) in zip(w, _OFFSETS):
        rows.append(np.arange(interior.size))
        cols.append(np.ravel_multi_index((ii + di, jj + dj, kk + dk), spec.shape))
        vals.append(wk)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    full = sp.csr_matrix((vals, (rows, cols)), shape=(interior.size, spec.size))
    return full[:, interior].tocsr(), full[:, boundary].tocsr(), interior, boundary


# -- Dirichlet solves --------------------------------------------------------

def boundary_data(mask: DomainMask, eps: float, c0: float = C0) -> np.ndarray:
    """``-2 eps`` on the outer sphere and ``c0/2`` on the inner one."""
    vals = np.zeros(mask.spec.shape)
    vals[mask.labels == OUTER] = -2.0 * eps
    vals[mask.labels == INNER] = c0 / 2.0
    return vals


class DirichletSolver:
    """Interior system of one mask with a cached incomplete-LU preconditioner.

    Solves use GMRES; convergence is judged on the true relative residual
    ``|b - A x| / |b|`` and nothing else.
    """

    def __init__(self, mask: DomainMask, rtol: float = SOLVER_RTOL, maxiter: int = 400):
        self.mask = mask
        self.rtol = rtol
        self.maxiter = maxiter
        A_ii, self.A_ib, self.interior, self.boundary = assemble(mask)
        self.A = A_ii.tocsc()
        self._precond = None

    def _preconditioner(self):
        if self._precond is None:
            ilu = spla.spilu(self.A, drop_tol=1e-3, fill_factor=5, permc_spec="COLAMD")
            self._precond = spla.LinearOperator(self.A.shape, ilu.solve)
        return self._precond

    def solve(self, data: np.ndarray) -> GridField:
        """``data`` holds the Dirichlet values on boundary nodes (other entries ignored)."""
        spec = self.mask.spec
        gb = np.asarray(data, dtype=float).reshape(-1)[self.boundary]
        b = -(self.A_ib @ gb)
        values = np.full(spec.size, np.nan)
        values[self.boundary] = gb
        bnorm = float(np.linalg.norm(b))
        if bnorm == 0.0:
            values[self.interior] = 0.0
            return GridField(spec, values.reshape(spec.shape), self.mask, 0.0, 0)
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = spla.gmres(self.A, b, M=self._preconditioner(), rtol=self.rtol * 0.1,
                             atol=0.0, restart=80, maxiter=self.maxiter, callback=cb,
                             callback_type="pr_norm")
        res = float(np.linalg.norm(b - self.A @ x)) / bnorm
        if not res <= self.rtol:
            raise SolverError(f"GMRES did not converge (info={info})", res)
        values[self.interior] = x
        return GridField(spec, values.reshape(spec.shape), self.mask, res, count[0])


def dirichlet_solve(mask: DomainMask, eps: float = 0.0, c0: float = C0,
                    data: np.ndarray | None = None,
                    solver: DirichletSolver | None = None) -> GridField:
    """Barrier problem: ``-2 eps`` on the outer sphere, ``c0/2`` on the inner one
    (or explicit boundary ``data``). Pass ``solver`` to reuse a factorization."""
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if solver is None:
        solver = DirichletSolver(mask)
    if data is None:
        data = boundary_data(mask, eps, c0)
    g = solver.solve(data)
    g.meta.update(eps=eps, c0=c0)
    return g


@dataclass
class SolveReport:
    residual: float
    origin_value: float
    interior_min: float
    interior_max: float
    flagged: int
    interior_count: int
    pole_residual: float


def _pole_points() -> list[tuple[float, float, float]]:
    r2 = INNER_RADIUS ** 2
    cx = INNER_CENTER.x[0]
    return [(0.0, 0.0, 1.0), (0.0, 0.0, -1.0), (cx, 0.0, r2), (cx, 0.0, -r2)]


def solve_report(g: GridField, eps: float, c0: float = C0) -> SolveReport:
    """Residual, origin value, interior range, out-of-bound flags and near-pole residual."""
    mask = g.mask
    interior = mask.labels == INTERIOR
    vals = g.values[interior]
    lo, hi = -2.0 * eps, c0 / 2.0
    flagged = int(np.sum((vals < lo - BOUND_SLACK) | (vals > hi + BOUND_SLACK)))
    oi = g.spec.origin_index()
    resid = apply_operator(g.spec, np.nan_to_num(g.values))
    X, Y, T = g.spec.coords()
    near = np.zeros(g.spec.shape, dtype=bool)
    for (px, py, pt) in _pole_points():
        near |= ((np.abs(X - px) <= 2 * g.spec.hz) & (np.abs(Y - py) <= 2 * g.spec.hz)
                 & (np.abs(T - pt) <= 2 * g.spec.ht))
    pole = resid[interior & near]
    return SolveReport(g.residual, float(g.values[oi]), float(np.min(vals)), float(np.max(vals)),
                       flagged, int(np.sum(interior)),
                       float(np.max(np.abs(pole))) if pole.size else 0.0)


# -- barrier and minimum principle -------------------------------------------

def barrier_term(A: float, r: float, p: Point) -> float:
    """``A r^(Q-2) (|xi|^-(Q-2) - 1)``."""
    Q = p.Q
    return A * r ** (Q - 2) * (gauge_norm(p) ** (-(Q - 2)) - 1.0)


def barrier_value(u_lam: GridField, A: float, r: float, sigma: GridField,
                  node: tuple[int, int, int], tol: float = 1e-12) -> float:
    """``u_lam + A r^(Q-2)(|xi|^-(Q-2) - 1) - sigma`` at a node of the closed annular region."""
    spec = u_lam.spec
    p = Point([spec.axes()[0][node[0]]], [spec.axes()[1][node[1]]], spec.axes()[2][node[2]])
    g = gauge_norm(p)
    if not (r - tol <= g <= 1.0 + tol) or distance(p, INNER_CENTER) < INNER_RADIUS - tol:
        raise GridContractError(f"node {node} is outside the annular region")
    return float(u_lam.values[node] + barrier_term(A, r, p) - sigma.values[node])


@dataclass
class MinPrincipleReport:
    superharmonic: bool
    max_stencil: float
    interior_min: float
    boundary_min: float
    worst_node: tuple
    passed: bool


def min_principle_check(g: GridField, mask: DomainMask, tol: float = 1e-9) -> MinPrincipleReport:
    """Check ``min_interior >= min_boundary - 1e-9``.

    Discrete superharmonicity (stencil <= ``tol`` on interior nodes) is the
    precondition; it is reported in ``superharmonic`` but does not decide the
    verdict, since sampled harmonic fields are only superharmonic up to O(h^2).
    """
    interior = mask.labels == INTERIOR
    with np.errstate(invalid="ignore"):
        lap = apply_operator(mask.spec, g.values)
    max_st = float(np.max(lap[interior]))
    vals = np.where(interior, g.values, np.inf)
    flat = int(np.argmin(vals))
    worst = tuple(int(v) for v in np.unravel_index(flat, mask.spec.shape))
    imin = float(vals.reshape(-1)[flat])
    bmin = float(np.min(g.values[mask.is_boundary()]))
    return MinPrincipleReport(max_st <= tol, max_st, imin, bmin, worst, imin >= bmin - 1e-9)


def sample(spec: GridSpec, f: Callable) -> GridField:
    X, Y, T = spec.coords()
    return GridField(spec, np.asarray(f(X, Y, T), dtype=float))


# -- convergence study -------------------------------------------------------

def fundamental_solution(x, y, t):
    """``|xi|^-(Q-2)`` for ``Q = 4``."""
    z2 = x * x + y * y
    with np.errstate(divide="ignore"):
        return 1.0 / np.sqrt(z2 * z2 + t * t)


def fundamental_residuals(coarse: GridSpec, levels: int = 3,
                          min_gauge: float = 0.3) -> list[float]:
    """Max stencil residual of the fundamental solution at the coarse grid's nodes
    (gauge above ``min_gauge``) for spacings ``h, h/2, h/4, ...``."""
    X, Y, T = coarse.coords()
    core = _core(coarse.shape)
    pts = np.stack([X[core].ravel(), Y[core].ravel(), T[core].ravel()], axis=1)
    keep = _gauge(pts[:, 0], pts[:, 1], pts[:, 2]) > min_gauge
    pts = pts[keep]
    out = []
    for level in range(levels):
        f = 2.0 ** level
        r = stencil_at_points(fundamental_solution, pts, coarse.hz / f, coarse.ht / f)
        out.append(float(np.max(np.abs(r))))
    return out


def observed_orders(errors) -> list[float]:
    return [float(np.log2(a / b)) for a, b in zip(errors[:-1], errors[1:])]


# -- output ------------------------------------------------------------------

def to_csv(g: GridField) -> str:
    spec = g.spec
    X, Y, T = spec.coords()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "t", "value", "mask"])
    labels = g.mask.labels if g.mask is not None else np.full(spec.shape, INTERIOR)
    for x, y, t, v, m in zip(X.ravel(), Y.ravel(), T.ravel(), g.values.ravel(), labels.ravel()):
        w.writerow([repr(float(x)), repr(float(y)), repr(float(t)),
                    "nan" if not np.isfinite(v) else repr(float(v)), MASK_NAMES[int(m)]])
    return buf.getvalue()


def reference_value() -> dict:
    """Pinned fine-grid origin value of the eps = 0 solution."""
    text = resources.files("heisenberg_cr").joinpath("data/reference.json").read_text()
    return json.loads(text)
