"""The CR-conformal tensor A^u, its spectrum and the operators built from it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .crtransform import (CheckInvert, Dilate, Generator, Iota, Rotate, Translate,
                          matrix_E, transform_field)
from .fields import Field, power
from .core_group import Point, UnitaryRotation, homogeneous_dimension, structure_matrices
from .jets import HorizontalJet, exp
from .numerics import max_abs, psd_margin, rel_err


class NonPositiveFieldError(ValueError):
    """The tensor needs ``u(p) > 0``."""


@dataclass(frozen=True)
class SchoutenMatrix:
    A: np.ndarray
    spectrum: np.ndarray
    basis: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, A: np.ndarray) -> "SchoutenMatrix":
        A = 0.5 * (A + A.T)
        w, V = eigen_sym(A)
        return cls(A, w, V)

    def sigma(self, k: int) -> float:
        return sigma_k(self.spectrum, k)


# -- tensor ------------------------------------------------------------------

def schouten_from_horizontal(h: HorizontalJet, Q: int) -> np.ndarray:
    """The four-term tensor from ``(u, grad_H u, hess_H u)``; symmetrized."""
    if not h.val > 0:
        raise NonPositiveFieldError(f"field value must be positive, got {h.val}")
    return canonical_args_matrix(h.val, h.hgrad, h.hhess, Q)


def canonical_args_matrix(s: float, v, U, Q: int | None = None) -> np.ndarray:
    if not s > 0:
        raise NonPositiveFieldError(f"s must be positive, got {s}")
    v = np.asarray(v, dtype=float)
    U = np.asarray(U, dtype=float)
    n = v.size // 2
    if Q is None:
        Q = homogeneous_dimension(n)
    _, J = structure_matrices(n)
    Jv = J @ v
    a = s ** (-2 * Q / (Q - 2))
    A = (2 * Q / (Q - 2) ** 2 * a * np.outer(v, v)
         - 4 / (Q - 2) ** 2 * a * np.outer(Jv, Jv)
         - 2 / (Q - 2) ** 2 * a * float(v @ v) * np.eye(2 * n)
         - 2 / (Q - 2) * s ** (-(Q + 2) / (Q - 2)) * 0.5 * (U + U.T))
    return 0.5 * (A + A.T)


def canonical_args(s: float, v, U) -> SchoutenMatrix:
    """Normal form ``A(s, v, U)``; agrees with :func:`schouten_tensor` on jets."""
    return SchoutenMatrix.from_matrix(canonical_args_matrix(s, v, U))


def schouten_tensor(u: Field, p: Point) -> SchoutenMatrix:
    return SchoutenMatrix.from_matrix(schouten_from_horizontal(u.horizontal(p), p.Q))


def a_phi_from_horizontal(h: HorizontalJet) -> np.ndarray:
    """``phi sym(hess_H phi) - |grad_H phi|^2 I / 2 - J grad_H phi (x) J grad_H phi``."""
    n = h.n
    _, J = structure_matrices(n)
    g = h.hgrad
    Jg = J @ g
    sym = 0.5 * (h.hhess + h.hhess.T)
    A = h.val * sym - 0.5 * float(g @ g) * np.eye(2 * n) - np.outer(Jg, Jg)
    return 0.5 * (A + A.T)


def phi_field(u: Field) -> Field:
    """``u^(-2/(Q-2))`` as a new field."""
    Q = homogeneous_dimension(u.n)
    return u.map(lambda v: power(v, -2.0 / (Q - 2)), f"({u.name})^(-2/(Q-2))")


def schouten_from_phi(u: Field, p: Point) -> SchoutenMatrix:
    if not u.value(p) > 0:
        raise NonPositiveFieldError(f"field value must be positive at {p}")
    return SchoutenMatrix.from_matrix(a_phi_from_horizontal(phi_field(u).horizontal(p)))


def schouten_term_scale(h: HorizontalJet, Q: int) -> float:
    """Largest entry among the individual terms of the tensor.

    Used as the relative-error floor: for fields whose tensor vanishes
    identically the terms still cancel only to rounding relative to this size.
    """
    s, g = h.val, h.hgrad
    a = s ** (-2 * Q / (Q - 2))
    return max(2 / (Q - 2) * s ** (-(Q + 2) / (Q - 2)) * max_abs(h.hhess),
               2 * Q / (Q - 2) ** 2 * a * float(g @ g))


def trace_identity_scale(h: HorizontalJet, Q: int) -> float:
    return 2.0 / (Q - 2) * h.val ** (-(Q + 2) / (Q - 2)) * float(np.sum(np.abs(np.diag(h.hhess))))


def trace_identity_rhs(h: HorizontalJet, Q: int) -> float:
    """``-2/(Q-2) u^(-(Q+2)/(Q-2)) Delta_H u``."""
    return -2.0 / (Q - 2) * h.val ** (-(Q + 2) / (Q - 2)) * float(np.trace(h.hhess))


# -- eigenvalues and symmetric functions -------------------------------------

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 50
ASYMMETRY_TOL = 1e-10


def eigen_sym(A) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations; returns ascending eigenvalues and orthonormal columns."""
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, max_abs(A))
    asym = max_abs(A - A.T)
    if asym > ASYMMETRY_TOL * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    A = 0.5 * (A + A.T)
    m = A.shape[0]
    V = np.eye(m)
    # work at unit size so the Frobenius norms neither underflow nor overflow
    amax = max_abs(A)
    if amax == 0.0:
        return np.zeros(m), V
    A = A / amax
    fro = float(np.linalg.norm(A))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= JACOBI_TOL * fro or off == 0.0:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(diff) + 100.0 * abs(apq) == abs(diff):
                    t = apq / diff  # rotation angle below rounding: first-order angle
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ rot
                A[idx, :] = rot.T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                V[:, idx] = V[:, idx] @ rot
    w = amax * np.diag(A)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sigma_k(lam: Sequence[float], k: int) -> float:
    """Elementary symmetric polynomial of degree ``k`` via ``prod(1 + lam_i x)``."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    m = lam.size
    if not 1 <= k <= m:
        raise ValueError(f"k must lie in 1..{m}, got {k}")
    e = np.zeros(m + 1)
    e[0] = 1.0
    for x in lam:
        e[1:] = e[1:] + x * e[:-1]
    return float(e[k])


def sym_part(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


# -- invariance --------------------------------------------------------------

@dataclass
class InvarianceRecord:
    point: Point
    matrix_residual: float
    spectrum_residual: float
    sigma_residual: float


def _conjugate(g: Generator, A: np.ndarray, p: Point) -> np.ndarray:
    n = p.n
    G, _ = structure_matrices(n)
    if isinstance(g, (Translate, Dilate)):
        return A
    if isinstance(g, Rotate):
        Mt = g.M.real_form()
        return Mt.T @ A @ Mt
    if isinstance(g, Iota):
        return G @ A @ G
    if isinstance(g, CheckInvert):
        E = matrix_E(p).E
        return E @ A @ E.T
    raise TypeError(f"unknown generator {g!r}")


def invariance_suite(u: Field, g: Generator, points: Iterable[Point]) -> list[InvarianceRecord]:
    """Per-point residuals of ``A^{u_g}(p)`` against the conjugated ``A^u(g p)``."""
    ug = transform_field([g], u)
    out = []
    for p in points:
        h_img = u.horizontal(g.apply(p))
        h_src = ug.horizontal(p)
        lhs = SchoutenMatrix.from_matrix(schouten_from_horizontal(h_src, p.Q))
        img = SchoutenMatrix.from_matrix(schouten_from_horizontal(h_img, p.Q))
        rhs = _conjugate(g, img.A, p)
        scale = max(schouten_term_scale(h_src, p.Q), schouten_term_scale(h_img, p.Q))
        # size of an eigenvalue; the term scale floors it where the tensor vanishes
        lam = max(max_abs(lhs.spectrum), max_abs(img.spectrum), scale)
        m = lhs.spectrum.size
        sig = max(rel_err(lhs.sigma(k), img.sigma(k), lam ** k) for k in range(1, m + 1))
        out.append(InvarianceRecord(p, rel_err(lhs.A, rhs, scale),
                                    rel_err(lhs.spectrum, img.spectrum, scale), sig))
    return out


def random_structured(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """A random element of ``S^{2n} + J R``."""
    _, J = structure_matrices(n)
    S = rng.normal(scale=scale, size=(2 * n, 2 * n))
    return 0.5 * (S + S.T) + rng.normal(scale=scale) * J


def sigma_sym_functional(k: int) -> Callable[[np.ndarray], float]:
    def F(A):
        return sigma_k(eigen_sym(sym_part(A))[0], k)
    F.__name__ = f"sigma_{k}_sym"
    return F


@dataclass
class FInvarianceReport:
    name: str
    rotation: float
    iota: float
    shear: float

    @property
    def worst(self) -> float:
        return max(self.rotation, self.iota, self.shear)


def f_invariance_conditions(F: Callable[[np.ndarray], float], n: int, samples: int,
                            rng: np.random.Generator, alpha_scale: float = 10.0) -> FInvarianceReport:
    """Worst relative residuals of the three invariance conditions over random samples."""
    G, J = structure_matrices(n)
    rot = io = sh = 0.0
    for _ in range(samples):
        A = random_structured(n, rng)
        Mt = UnitaryRotation.random(n, rng).real_form()
        alpha = rng.uniform(-alpha_scale, alpha_scale)
        f0 = F(A)
        rot = max(rot, rel_err(f0, F(Mt.T @ A @ Mt)))
        io = max(io, rel_err(f0, F(G @ A @ G)))
        sh = max(sh, rel_err(f0, F(A + alpha * J)))
    return FInvarianceReport(getattr(F, "__name__", "F"), rot, io, sh)


# -- cones -------------------------------------------------------------------

INTERIOR, CLOSURE, COMPLEMENT = "interior", "closure", "complement"


@dataclass(frozen=True)
class ConePredicate:
    name: str
    k: int            # 0 for the trace cone
    extension: bool   # not one of the cones discussed for the comparison principle
    tol: float = 1e-12

    def values(self, A: np.ndarray) -> list[float]:
        lam = eigen_sym(sym_part(A))[0]
        if self.k == 0:
            return [float(np.sum(lam))]
        return [sigma_k(lam, j) for j in range(1, self.k + 1)]

    def classify(self, A: np.ndarray) -> str:
        vals = self.values(A)
        slack = self.tol * max(1.0, max_abs(A)) ** max(1, self.k)
        if all(v > slack for v in vals):
            return INTERIOR
        if all(v >= -slack for v in vals):
            return CLOSURE
        return COMPLEMENT

    def in_closure(self, A) -> bool:
        return self.classify(A) != COMPLEMENT

    def boundary_sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """A random symmetric matrix shifted by ``mu I`` onto the cone boundary."""
        S = rng.normal(size=(2 * n, 2 * n))
        S = 0.5 * (S + S.T)
        lo, hi = -10.0 - 2 * max_abs(S) * 2 * n, 10.0 + 2 * max_abs(S) * 2 * n
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._strict(S + mid * np.eye(2 * n)):
                hi = mid
            else:
                lo = mid
        return S + hi * np.eye(2 * n)

    def _strict(self, A) -> bool:
        return all(v > 0 for v in self.values(A))

    def self_test(self, n: int, samples: int, rng: np.random.Generator) -> tuple[bool, bool]:
        """Check positive scaling and positive-definite perturbation on random samples."""
        scaling = monotone = True
        for _ in range(samples):
            A = self.boundary_sample(n, rng)
            c = float(np.exp(rng.uniform(-3, 3)))
            scaling &= self.in_closure(c * A)
            L = rng.normal(size=(2 * n, 2 * n))
            B = L @ L.T + 0.1 * np.eye(2 * n)
            monotone &= self.classify(A + B) == INTERIOR
        return scaling, monotone


def cone_predicates(n: int) -> list[ConePredicate]:
    out = [ConePredicate("trace", 0, extension=False)]
    out += [ConePredicate(f"gamma_{k}", k, extension=True) for k in range(1, 2 * n + 1)]
    return out


# -- perturbation inequality -------------------------------------------------

def admissible_delta(sup_z: float) -> float:
    return 1.0 / (8.0 * sup_z * sup_z)


def bump_field(n: int, delta: float) -> Field:
    """``exp(delta |z|^2)``."""
    def fn(c):
        z2 = c[0] * c[0]
        for v in c[1:2 * n]:
            z2 = z2 + v * v
        return exp(delta * z2)
    return Field(fn, n, f"exp({delta}*znorm2)")


@dataclass
class PerturbationRecord:
    point: Point
    eps: float
    margin: float          # min eigenvalue / (1 + |A_phi|_max)
    margin_u_form: float   # same inequality computed through u = phi^(-(Q-2)/2)
    bump_margin: float     # min eig of A_eta - (5/4) delta eta^2 I, normalized
    form_gap: float        # relative gap between the two computations of the left side


@dataclass
class PerturbationReport:
    delta: float
    delta_admissible: bool
    records: list

    @property
    def worst_margin(self) -> float:
        return min(min(r.margin, r.margin_u_form) for r in self.records)

    @property
    def worst_bump_margin(self) -> float:
        return min(r.bump_margin for r in self.records)


def perturbation_inequality(phi: Field, delta: float, eps_values: Sequence[float],
                            points: Sequence[Point], sup_z: float) -> PerturbationReport:
    """Evaluate ``A_{phi+eps eta} - (1 + eps eta/phi) A_phi - eps delta eta phi I`` at points."""
    n = phi.n
    Q = homogeneous_dimension(n)
    I = np.eye(2 * n)
    eta = bump_field(n, delta)
    records = []
    for eps in eps_values:
        summed = Field(lambda c, e=eps: phi(c) + e * eta(c), n, "phi+eps*eta")
        u_form = summed.map(lambda v: power(v, -(Q - 2) / 2.0), "(phi+eps*eta)^(-(Q-2)/2)")
        for p in points:
            hphi = phi.horizontal(p)
            if not hphi.val > 0:
                raise NonPositiveFieldError(f"phi must be positive, got {hphi.val} at {p}")
            A_phi = a_phi_from_horizontal(hphi)
            heta = eta.horizontal(p)
            et, ph = heta.val, hphi.val
            rhs = (1 + eps * et / ph) * A_phi + eps * delta * et * ph * I
            lhs = a_phi_from_horizontal(summed.horizontal(p))
            lhs_u = schouten_from_horizontal(u_form.horizontal(p), Q)
            m1 = eigen_sym(lhs - rhs)[0][0]
            m2 = eigen_sym(lhs_u - rhs)[0][0]
            A_eta = a_phi_from_horizontal(heta)
            m3 = eigen_sym(A_eta - 1.25 * delta * et * et * I)[0][0]
            records.append(PerturbationRecord(p, eps, psd_margin(A_phi, m1), psd_margin(A_phi, m2),
                                              psd_margin(A_eta, m3), rel_err(lhs, lhs_u)))
    sup_ok = 0 < delta <= admissible_delta(sup_z) * (1 + 1e-12)
    return PerturbationReport(delta, sup_ok, records)


# -- ellipticity -------------------------------------------------------------

ELLIPTICITY_STEP = 1e-5


def ellipticity_probe(T: Callable[[float, np.ndarray, np.ndarray], float],
                      s: float, v, U, step: float = ELLIPTICITY_STEP) -> float:
    """Minimum eigenvalue of the symmetrized ``[-dT/dU_ij]`` by central differences."""
    v = np.asarray(v, dtype=float)
    U = np.asarray(U, dtype=float)
    m = U.shape[0]
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            dU = np.zeros((m, m))
            dU[i, j] = step
            fp, fm = T(s, v, U + dU), T(s, v, U - dU)
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise ValueError(f"probe produced a non-finite value at entry ({i}, {j})")
            D[i, j] = -(fp - fm) / (2 * step)
    return float(eigen_sym(sym_part(D))[0][0])


def sigma_of_canonical(k: int) -> Callable[[float, np.ndarray, np.ndarray], float]:
    def T(s, v, U):
        return sigma_k(eigen_sym(canonical_args_matrix(s, v, U))[0], k)
    return T
