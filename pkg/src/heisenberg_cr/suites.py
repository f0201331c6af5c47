"""Verification suites and the JSON report they produce.

Each suite returns :class:`CheckRecord` objects. A record's residual is the
worst value over all points it tested; it passes when that residual is finite
and at most the tolerance. Inequality checks report ``max(0, -margin)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

import numpy as np

from . import __version__
from . import crtransform as crt
from . import subelliptic_grid as grd
from . import core_group as grp
from . import schouten as sch
from .fields import FieldDomain, builtin_corpus
from .core_group import (Point, UnitaryRotation, check_invert, compose, cr_invert, dilate, distance,
                    gauge_norm, iota, structure_matrices)
from .jets import (commutator_check, horizontal_from_euclidean, seed, sublaplacian_expanded,
                   sublaplacian_explicit)
from .numerics import max_abs, psd_margin, rel_err


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    anchor: str
    points: int
    max_residual: float
    tolerance: float
    passed: bool
    value: float | None = None  # an observed quantity worth recording (not asserted)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.value is None:
            del d["value"]
        for k in ("max_residual", "value"):
            if k in d and not math.isfinite(d[k]):
                d[k] = repr(d[k])
        return d


class _Collector:
    """Accumulates the worst residual per check id."""

    def __init__(self, tol_scale: float):
        self.tol_scale = tol_scale
        self.records: list[CheckRecord] = []

    def add(self, check_id: str, anchor: str, residuals: Iterable[float], tol: float,
            value: float | None = None) -> CheckRecord:
        res = [float(r) for r in residuals]
        worst = max(res) if res else 0.0
        if any(not math.isfinite(r) for r in res):
            worst = math.nan
        tol = tol * self.tol_scale
        rec = CheckRecord(check_id, anchor, len(res), worst, tol,
                          bool(math.isfinite(worst) and worst <= tol), value)
        self.records.append(rec)
        return rec


def _rng(seed_: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed_, salt])


def shell_points(n: int, count: int, rng: np.random.Generator,
                 lo: float, hi: float) -> list[Point]:
    """Random points with gauge norm log-uniform in ``(lo, hi)``."""
    out = []
    while len(out) < count:
        p = Point.random(n, rng)
        r = gauge_norm(p)
        if r < 1e-3:
            continue
        target = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        out.append(dilate(target / r, p))
    return out


def ball_points(n: int, count: int, rng: np.random.Generator, radius: float) -> list[Point]:
    """Uniform (rejection) samples of the gauge ball of the given radius."""
    out = []
    while len(out) < count:
        p = Point.random(n, rng, radius)
        p = Point(p.x, p.y, p.t * radius)
        if gauge_norm(p) < radius:
            out.append(p)
    return out


def _generators(n: int, rng: np.random.Generator) -> list:
    return [crt.Translate(Point.random(n, rng, 0.5)), crt.Dilate(float(rng.uniform(0.6, 1.4))),
            crt.Rotate(UnitaryRotation.random(n, rng)), crt.Iota(), crt.CheckInvert()]


def _admissible(domain: FieldDomain, g, n: int, rng: np.random.Generator,
                count: int) -> list[Point]:
    """Points ``p`` of the domain with ``g(p)`` also in it (and away from the origin)."""
    out: list[Point] = []
    for _ in range(200 * count):
        if len(out) == count:
            break
        p = domain.sample(n, 1, rng)[0]
        if gauge_norm(p) < 0.2:
            continue
        if domain.contains(g.apply(p)):
            out.append(p)
    if len(out) < count:
        raise RuntimeError(f"could not sample {count} admissible points for {g!r}")
    return out


# -- group -------------------------------------------------------------------

GROUP_SAMPLES = 10_000


def suite_group(n: int, seed_: int, tol_scale: float = 1.0) -> list[CheckRecord]:
    c = _Collector(tol_scale)
    rng = _rng(seed_, 1)
    m = GROUP_SAMPLES
    d = 2 * n + 1
    A, B, C = (rng.uniform(-1, 1, (m, d)) for _ in range(3))
    E = np.zeros((m, d))

    def coord_err(P, R):
        return np.max(np.abs(P - R), axis=1)

    def rel(a, b):
        return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-30)

    c.add("group.associativity", "associativity of the group law",
          coord_err(grp.compose_rows(grp.compose_rows(A, B), C),
                    grp.compose_rows(A, grp.compose_rows(B, C))), 1e-12)
    c.add("group.identity", "origin is the identity",
          np.maximum(coord_err(grp.compose_rows(A, E), A), coord_err(grp.compose_rows(E, A), A)),
          1e-12)
    Ai = grp.invert_rows(A)
    c.add("group.inverse", "inverse is the negation",
          np.maximum(coord_err(grp.compose_rows(A, Ai), E), coord_err(grp.compose_rows(Ai, A), E)),
          1e-12)
    lams = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), m))
    c.add("group.norm_homogeneity", "gauge norm is 1-homogeneous under dilations",
          rel(grp.gauge_rows(grp.dilate_rows(lams, A)), lams * grp.gauge_rows(A)), 1e-12)
    c.add("group.distance_left_invariance", "gauge distance is left-invariant",
          rel(grp.distance_rows(grp.compose_rows(C, A), grp.compose_rows(C, B)),
              grp.distance_rows(A, B)), 1e-12)
    r = grp.gauge_rows(A)
    S = grp.dilate_rows(np.exp(rng.uniform(math.log(0.1), math.log(10.0), m)) / r, A)
    c.add("group.check_invert_involution", "the involutive CR inversion squares to the identity",
          coord_err(grp.check_invert_rows(grp.check_invert_rows(S)), S), 1e-10)

    # the batched forms above must agree with the point API
    k = 500
    pts = [Point.from_array(row) for row in np.vstack([A[:k], B[:k], S[:k]])]
    scalar = [(compose(p, q), check_invert(p), gauge_norm(p), distance(p, q))
              for p, q in zip(pts, pts[1:] + pts[:1])]
    P = np.array([p.as_array() for p in pts])
    Pn = np.roll(P, -1, axis=0)
    batch = (grp.compose_rows(P, Pn), grp.check_invert_rows(P), grp.gauge_rows(P),
             grp.distance_rows(P, Pn))
    agree = [max(rel_err(batch[0][i], s[0].as_array()), rel_err(batch[1][i], s[1].as_array()),
                 rel_err(batch[2][i], s[2]), rel_err(batch[3][i], s[3]))
             for i, s in enumerate(scalar)]
    c.add("group.batch_agreement", "batched and pointwise group operations agree", agree, 1e-14)

    pts = pts[2 * k:]
    c.add("group.inversion_factorization", "involutive inversion is the inversion after iota",
          (rel_err(check_invert(p).as_array(), cr_invert(iota(p)).as_array()) for p in pts), 1e-12)
    c.add("group.inversion_radius", "CR inversion maps gauge radius r to 1/r",
          (rel_err(gauge_norm(cr_invert(p)), 1.0 / gauge_norm(p)) for p in pts), 1e-12)
    rots = [UnitaryRotation.random(n, rng) for _ in range(200)]
    c.add("group.rotation_orthogonality", "real form of a unitary matrix is orthogonal", (
        max_abs(M.real_form() @ M.real_form().T - np.eye(2 * n)) for M in rots), 1e-12)
    return c.records


# -- jets --------------------------------------------------------------------

JET_POINTS = 100
FD_POINTS = 10
FD_STEP = 1e-4


def _fd_derivatives(f, p: Point, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient and Hessian from vectorized field values."""
    x0 = p.as_array()
    d = x0.size
    eye = np.eye(d)
    rows = [x0]
    for i in range(d):
        rows += [x0 + h * eye[i], x0 - h * eye[i]]
    for i in range(d):
        for j in range(i + 1, d):
            for si in (1, -1):
                for sj in (1, -1):
                    rows.append(x0 + h * (si * eye[i] + sj * eye[j]))
    v = f.values(np.array(rows))
    f0 = v[0]
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    for i in range(d):
        fp, fm = v[1 + 2 * i], v[2 + 2 * i]
        grad[i] = (fp - fm) / (2 * h)
        hess[i, i] = (fp - 2 * f0 + fm) / (h * h)
    k = 1 + 2 * d
    for i in range(d):
        for j in range(i + 1, d):
            pp, pm, mp, mm = v[k:k + 4]
            k += 4
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4 * h * h)
    return grad, hess


def suite_jets(n: int, seed_: int, tol_scale: float = 1.0) -> list[CheckRecord]:
    c = _Collector(tol_scale)
    rng = _rng(seed_, 2)
    corpus = builtin_corpus(n, seed_)
    _, J = structure_matrices(n)
    comm, anti, lap, fd = [], [], [], []
    for entry in corpus:
        u = entry.field
        for p in entry.domain.sample(n, JET_POINTS, rng):
            j = u.jet(p)
            h = horizontal_from_euclidean(j, p)
            scale = max(max_abs(h.hhess), 4 * abs(h.tu))
            for i in range(n):
                for k in range(n):
                    comm.append(max(abs(r) for r in commutator_check(j, p, (i, k)))
                                / max(scale, 1e-30))
            anti.append(rel_err(h.hhess - h.hhess.T, 4 * h.tu * J, max_abs(h.hhess)))
            tr = float(np.trace(h.hhess))
            lscale = float(np.sum(np.abs(np.diag(h.hhess))))
            lap.append(max(rel_err(tr, sublaplacian_explicit(j, p), lscale),
                           rel_err(tr, sublaplacian_expanded(j, p), lscale)))
        for p in entry.domain.sample(n, FD_POINTS, rng):
            j = u.jet(p)
            g, H = _fd_derivatives(u, p, FD_STEP)
            scale = max(abs(j.val), max_abs(j.grad), max_abs(j.hess))
            fd.append(max(rel_err(j.grad, g, scale), rel_err(j.hess, H, scale)))
    c.add("jets.commutators", "commutation relations of the horizontal fields", comm, 1e-10)
    c.add("jets.hessian_antisymmetry", "antisymmetric part of the horizontal Hessian is 2 Tu J",
          anti, 1e-12)
    c.add("jets.sublaplacian_forms", "sublaplacian as trace, coordinate sum and expanded form",
          lap, 1e-11)
    c.add("jets.finite_differences", "exact 2-jets agree with central differences", fd, 1e-6)
    return c.records


# -- transformation laws -----------------------------------------------------

TRANSFORM_FIELDS = ("exp_quadratic_0", "bump_0.1", "jerison_lee", "gauge_power",
                    "shifted_quadratic_0")
TRANSFORM_POINTS = 100
TABLE_POINTS = 200
CONJUGATION_DRAWS = 50
YAMABE_POINTS = 500

_GEN_NAMES = {"Translate": "translation", "Dilate": "dilation", "Rotate": "unitary rotation",
              "Iota": "iota", "CheckInvert": "involutive inversion"}


def _gname(g) -> str:
    return type(g).__name__


def suite_transform(n: int, seed_: int, tol_scale: float = 1.0) -> list[CheckRecord]:
    c = _Collector(tol_scale)
    rng = _rng(seed_, 3)
    corpus = builtin_corpus(n, seed_)
    G, J = structure_matrices(n)
    gens = _generators(n, rng)
    for g in gens:
        name = _gname(g)
        inv = isinstance(g, crt.CheckInvert)
        tol = 1e-8 if inv else 1e-10
        first, second, second_tab, scalar = [], [], [], []
        for fname in TRANSFORM_FIELDS:
            entry = corpus.by_name(fname)
            u = entry.field
            ug = crt.transform_field([g], u)
            for p in _admissible(entry.domain, g, n, rng, TRANSFORM_POINTS):
                h = ug.horizontal(p)
                first.append(rel_err(h.hgrad, crt.closed_form_first(g, u, p),
                                     crt.closed_form_scale(g, u, p, 1)))
                s2 = crt.closed_form_scale(g, u, p, 2)
                second.append(rel_err(h.hhess, crt.closed_form_second(g, u, p), s2))
                if inv:
                    second_tab.append(rel_err(h.hhess, crt.closed_form_second(g, u, p, True), s2))
                a, b, sc = crt.scalar_invariance_sides(g, u, p)
                scalar.append(rel_err(a, b, sc))
        what = _GEN_NAMES[name]
        c.add(f"transform.first.{name}", f"horizontal gradient law under the {what}", first, tol)
        c.add(f"transform.second.{name}", f"horizontal Hessian law under the {what}", second, tol)
        if inv:
            c.add(f"transform.second_tables.{name}",
                  "inversion Hessian law with the extra block from the second-derivative tables",
                  second_tab, tol)
        c.add(f"transform.scalar_invariance.{name}",
              f"u^(-(Q+2)/(Q-2)) Delta_H u is invariant under the {what}", scalar, 1e-10)

    lap = []
    for fname in TRANSFORM_FIELDS:
        entry = corpus.by_name(fname)
        for p in _admissible(entry.domain, crt.CheckInvert(), n, rng, TRANSFORM_POINTS):
            a, b, sc = crt.sublaplacian_transform_sides(entry.field, p)
            lap.append(rel_err(a, b, sc))
    c.add("transform.sublaplacian_inversion", "sublaplacian intertwining under the inversion",
          lap, 1e-9)

    # coordinate tables of the involutive inversion
    pts = shell_points(n, TABLE_POINTS, rng, 0.2, 5.0)
    t1, t2, r63 = [], [], []
    for p in pts:
        coords = crt.CRMap([crt.CheckInvert()]).apply_coords(seed(p), n)
        f1 = crt.appendix_first_derivs(p)
        f2 = crt.appendix_second_derivs(p)
        ht = horizontal_from_euclidean(coords[2 * n], p)
        e1 = [rel_err(ht.hgrad, f1.hgrad_t()), rel_err(coords[2 * n].grad[2 * n], f1.Tt)]
        e2 = [rel_err(ht.hhess, f2.hess_t())]
        for k in range(n):
            hx = horizontal_from_euclidean(coords[k], p)
            hy = horizontal_from_euclidean(coords[n + k], p)
            e1 += [rel_err(hx.hgrad, f1.hgrad_x(k)), rel_err(hy.hgrad, f1.hgrad_y(k)),
                   rel_err(coords[k].grad[2 * n], f1.Tx[k]),
                   rel_err(coords[n + k].grad[2 * n], f1.Ty[k])]
            e2 += [rel_err(hx.hhess, f2.hess_x(k)), rel_err(hy.hhess, f2.hess_y(k))]
            r63.append(max(rel_err(f1.hgrad_x(k), -J @ f1.hgrad_y(k)),
                           rel_err(f2.hess_x(k), -J @ f2.hess_y(k))))
        t1.append(max(e1))
        t2.append(max(e2))
    c.add("transform.tables_first", "first horizontal derivatives of the inversion coordinates",
          t1, 1e-9)
    c.add("transform.tables_second", "second horizontal derivatives of the inversion coordinates",
          t2, 1e-9)
    c.add("transform.tables_relations", "x-coordinate derivatives are -J times the y ones",
          r63, 1e-10)

    orth, unit, blocks, jac = [], [], [], []
    for p in pts:
        T = crt.matrix_E(p)
        M = T.R + 1j * T.S
        orth.append(max_abs(T.E @ T.E.T - np.eye(2 * n)))
        unit.append(float(np.max(np.abs(M @ M.conj().T - np.eye(n)))))
        blocks.append(rel_err(T.E, crt.matrix_E_blocks(p)))
    for _ in range(50):
        word = crt.CRMap([crt.Translate(Point.random(n, rng)), crt.Dilate(rng.uniform(0.5, 2)),
                          crt.CheckInvert(), crt.Rotate(UnitaryRotation.random(n, rng)),
                          crt.Iota(), crt.CheckInvert()])
        p = shell_points(n, 1, rng, 0.3, 3.0)[0]
        try:
            jac.append(rel_err(crt.jacobian_det(word, p), crt.jacobian_det_numeric(word, p)))
        except crt.WordSingularError:
            continue
    c.add("transform.E_orthogonal", "transport matrix E is orthogonal", orth, 1e-12)
    c.add("transform.E_unitary", "R + iS is unitary", unit, 1e-12)
    c.add("transform.E_block_form", "transport matrix from its block formula", blocks, 1e-12)
    c.add("transform.E_pole", "E = -G on the positive t-axis",
          (max_abs(crt.matrix_E(Point(np.zeros(n), np.zeros(n), lam * lam)).E + G)
           for lam in (0.5, 1.0, 3.0)), 1e-12)
    c.add("transform.jacobian", "Jacobian determinant of CR words", jac, 1e-10)

    # jet prescription and conjugation lemmas
    presc, gen98, pole = [], [], []
    for _ in range(CONJUGATION_DRAWS):
        s = float(rng.uniform(0.5, 2.0))
        v = rng.normal(size=2 * n)
        S = rng.normal(size=(2 * n, 2 * n))
        S = 0.5 * (S + S.T)
        cc = float(rng.normal())
        U = S + cc * J
        xi0, lam = crt.conjugation_anchor(s, v)
        phi = crt.prescribe_jet(xi0, s, v, S, cc)
        h = phi.horizontal(xi0)
        presc.append(max(rel_err(h.val, s), rel_err(h.hgrad, v), rel_err(h.hhess, U)))
        word = crt.conjugation_word(lam)
        pre = word.apply(xi0)
        hp = crt.transform_field(word, phi).horizontal(pre)
        gen98.append(max(rel_err(hp.val, s), max_abs(hp.hgrad) / max(1.0, max_abs(v)),
                         rel_err(hp.hhess, crt.conjugate_jet_general(s, v, U))))
        sign = 1 if rng.uniform() < 0.5 else -1
        lam = float(rng.uniform(0.3, 2.0))
        xi0 = Point(np.zeros(n), np.zeros(n), sign * lam * lam)
        phi = crt.prescribe_jet(xi0, 1.0, np.zeros(2 * n), S, cc)
        word = crt.conjugation_word(lam)
        pre = word.apply(xi0)
        hp = crt.transform_field(word, phi).horizontal(pre)
        pole.append(max(rel_err(pre.as_array(), xi0.as_array()), rel_err(hp.val, 1.0),
                        rel_err(hp.hhess, crt.conjugate_jet(lam, sign, U))))
    c.add("transform.prescribe_jet", "a field with prescribed value, gradient and Hessian",
          presc, 1e-10)
    c.add("transform.conjugation_general", "Hessian after conjugating a generic jet to the pole",
          gen98, 1e-8)
    c.add("transform.conjugation_pole", "Hessian conjugation at points of the t-axis", pole, 1e-8)

    # constancy of the scalar quotient for the standard bubble
    u = corpus.by_name("jerison_lee").field
    q = np.array([-crt.yamabe_quotient(u, p) for p in ball_points(n, YAMABE_POINTS, rng, 3.0)])
    mean = float(np.mean(q))
    c.add("transform.yamabe_constancy", "-Delta_H u / u^((Q+2)/(Q-2)) is constant for the bubble",
          [float(np.std(q)) / max(abs(mean), 1e-30)], 1e-8, value=mean)
    return c.records


# -- schouten ----------------------------------------------------------------

SCHOUTEN_POINTS = 100
F_SAMPLES = 200


def suite_schouten(n: int, seed_: int, tol_scale: float = 1.0) -> list[CheckRecord]:
    c = _Collector(tol_scale)
    rng = _rng(seed_, 4)
    corpus = builtin_corpus(n, seed_)
    Q = 2 * n + 2
    phi_path, trace, canon, sym = [], [], [], []
    for entry in corpus:
        u = entry.field
        phi = sch.phi_field(u)
        for p in entry.domain.sample(n, SCHOUTEN_POINTS // 4, rng):
            h = u.horizontal(p)
            A = sch.schouten_from_horizontal(h, Q)
            scale = sch.schouten_term_scale(h, Q)
            phi_path.append(rel_err(A, sch.a_phi_from_horizontal(phi.horizontal(p)), scale))
            trace.append(rel_err(np.trace(A), sch.trace_identity_rhs(h, Q),
                                 sch.trace_identity_scale(h, Q)))
            canon.append(rel_err(sch.canonical_args(h.val, h.hgrad, h.hhess).A, A, scale))
            sym.append(max_abs(A - A.T))
    c.add("schouten.phi_path", "tensor through phi = u^(-2/(Q-2)) equals the direct formula",
          phi_path, 1e-10)
    c.add("schouten.trace_identity", "trace of the tensor is -2/(Q-2) u^(-(Q+2)/(Q-2)) Delta_H u",
          trace, 1e-11)
    c.add("schouten.canonical_args", "tensor from (value, gradient, Hessian) arguments", canon,
          1e-11)
    c.add("schouten.symmetric", "stored tensor is symmetric", sym, 1e-13)

    scal = []
    for _ in range(50):
        s = float(rng.uniform(0.3, 3.0))
        U = sch.random_structured(n, rng)
        scal.append(rel_err(sch.canonical_args_matrix(1.0, np.zeros(2 * n),
                                                      s ** (-(Q + 2) / (Q - 2)) * U),
                            sch.canonical_args_matrix(s, np.zeros(2 * n), U)))
    c.add("schouten.scaling", "critical points: value s rescales the Hessian argument", scal,
          1e-11)

    rec, orth = [], []
    for _ in range(200):
        A = rng.normal(size=(2 * n, 2 * n))
        A = A + A.T
        w, V = sch.eigen_sym(A)
        rec.append(max_abs(V @ np.diag(w) @ V.T - A) / max_abs(A))
        orth.append(max_abs(V.T @ V - np.eye(2 * n)))
    c.add("schouten.eigen_reconstruction", "Jacobi eigen-decomposition reconstructs A", rec, 1e-11)
    c.add("schouten.eigen_orthogonality", "Jacobi eigenbasis is orthogonal", orth, 1e-12)

    gens = _generators(n, rng)
    for g in gens:
        mat, spec, sig = [], [], []
        for entry in corpus:
            pts = _admissible(entry.domain, g, n, rng, SCHOUTEN_POINTS)
            for r in sch.invariance_suite(entry.field, g, pts):
                mat.append(r.matrix_residual)
                spec.append(r.spectrum_residual)
                sig.append(r.sigma_residual)
        name = _gname(g)
        what = _GEN_NAMES[name]
        c.add(f"schouten.invariance_matrix.{name}", f"tensor transforms by conjugation under the {what}",
              mat, 1e-8 if name == "CheckInvert" else 1e-10)
        c.add(f"schouten.invariance_spectrum.{name}", f"spectrum is invariant under the {what}",
              spec, 1e-8)
        c.add(f"schouten.invariance_sigma.{name}", f"sigma_k values are invariant under the {what}",
              sig, 1e-8)

    for k in range(1, 2 * n + 1):
        rep = sch.f_invariance_conditions(sch.sigma_sym_functional(k), n, F_SAMPLES, rng)
        c.add(f"schouten.f_invariance.sigma_{k}",
              "operator invariance conditions: rotation, iota and J-shift",
              [rep.rotation, rep.iota, rep.shear], 1e-10)

    bad = []
    for cone in sch.cone_predicates(n):
        ok_in, ok_bd = cone.self_test(n, 20, rng)
        bad.append(0.0 if (ok_in and ok_bd) else 1.0)
    c.add("schouten.cones", "cones are open, scale-invariant and stable under positive shifts",
          bad, 0.0)

    ell = []
    for _ in range(20):
        s = float(rng.uniform(0.5, 2.0))
        v = rng.normal(size=2 * n)
        U = sch.random_structured(n, rng)
        got = sch.ellipticity_probe(sch.sigma_of_canonical(1), s, v, U)
        ell.append(rel_err(got, 2 / (Q - 2) * s ** (-(Q + 2) / (Q - 2))))
    c.add("schouten.ellipticity_sigma_1", "sigma_1 of the tensor is elliptic with known modulus",
          ell, 1e-6)
    return c.records


# -- perturbation ------------------------------------------------------------

PERTURBATION_POINTS = 200
PERTURBATION_EPS = (1e-3, 1e-2, 1e-1)


def suite_perturbation(n: int, seed_: int, tol_scale: float = 1.0,
                       points: int = PERTURBATION_POINTS) -> list[CheckRecord]:
    c = _Collector(tol_scale)
    rng = _rng(seed_, 5)
    corpus = builtin_corpus(n, seed_)
    ineq, bump, forms, deltas = [], [], [], []
    for entry in corpus:
        sup_z = math.sqrt(2 * n) * entry.domain.z_half
        delta = sch.admissible_delta(sup_z)
        rep = sch.perturbation_inequality(entry.field, delta, PERTURBATION_EPS,
                                          entry.domain.sample(n, points, rng), sup_z)
        deltas.append(0.0 if rep.delta_admissible else 1.0)
        for r in rep.records:
            ineq.append(max(0.0, -min(r.margin, r.margin_u_form)))
            bump.append(max(0.0, -r.bump_margin))
            forms.append(r.form_gap)
    c.add("perturbation.inequality", "min eigenvalue of the bump-perturbed tensor difference",
          ineq, 1e-10)
    c.add("perturbation.bump_bound", "tensor of the exponential bump dominates (5/4) delta eta^2",
          bump, 1e-10)
    c.add("perturbation.equivalent_form", "phi-form and u-form of the perturbed tensor agree",
          forms, 1e-10)
    c.add("perturbation.delta_admissible", "bump rate delta = 1/(8 sup|z|^2)", deltas, 0.0)
    return c.records


# -- grid (lite) -------------------------------------------------------------

GRID_LITE_N = 25


def suite_grid_lite(n: int, seed_: int, tol_scale: float = 1.0) -> list[CheckRecord]:
    """Desk-scale grid checks; the grid itself is n = 1 regardless of ``n``."""
    c = _Collector(tol_scale)
    spec = grd.GridSpec(GRID_LITE_N)
    X, Y, T = spec.coords()
    core = grd._core(spec.shape)
    for cid, anchor, vals, exact in (
            ("grid.stencil_quadratic", "stencil is exact on x^2", X * X, 2.0 + 0 * X),
            ("grid.stencil_tx", "stencil on t x gives 4y", T * X, 4.0 * Y)):
        q = grd.apply_operator(spec, vals)[core]
        scale = grd.operator_scale(spec, vals)[core]
        c.add(cid, anchor, [max_abs((q - exact[core]) / np.maximum(scale, 1.0))], 1e-14)

    errs = grd.fundamental_residuals(grd.GridSpec(49))
    orders = grd.observed_orders(errs)
    c.add("grid.fundamental_order", "fundamental solution residual is second order",
          [max(0.0, 1.85 - o) for o in orders], 0.0, value=min(orders))

    mask = grd.barrier_mask(spec)
    solver = grd.DirichletSolver(mask)
    const = solver.solve(np.full(spec.shape, 0.3))
    interior = mask.labels == grd.INTERIOR
    c.add("grid.constant_solution", "constant boundary data gives the constant",
          [max_abs(const.values[interior] - 0.3)], 1e-8)
    g0 = grd.dirichlet_solve(mask, 0.0, solver=solver)
    r0 = grd.solve_report(g0, 0.0)
    c.add("grid.solver_residual", "barrier problem solved to relative residual 1e-8",
          [r0.residual], grd.SOLVER_RTOL)
    c.add("grid.origin_positive", "barrier solution is positive at the origin",
          [max(0.0, -r0.origin_value)], 0.0, value=r0.origin_value)
    c.add("grid.nonnegative", "barrier solution with eps = 0 is nonnegative",
          [max(0.0, -r0.interior_min)], 1e-9)
    diffs = []
    for eps in (0.02, 0.01, 0.005):
        ge = grd.dirichlet_solve(mask, eps, solver=solver)
        diffs.append(max_abs(ge.values[interior] - g0.values[interior]))
    c.add("grid.eps_monotone", "sup|sigma_eps - sigma_0| decreases with eps",
          [max(0.0, b - a) for a, b in zip(diffs, diffs[1:])], 0.0)

    ann = grd.annulus_mask(spec, 0.3, 1.0)
    mp = [grd.min_principle_check(grd.sample(spec, f), ann) for f in (
        lambda x, y, t: np.ones_like(x), grd.fundamental_solution,
        lambda x, y, t: -(x * x + y * y))]
    c.add("grid.min_principle", "superharmonic samples attain their minimum on the boundary",
          [0.0 if r.passed else 1.0 for r in mp], 0.0)
    return c.records


# -- registry and report -----------------------------------------------------

SUITES: dict[str, Callable[..., list[CheckRecord]]] = {
    "group": suite_group,
    "jets": suite_jets,
    "transform": suite_transform,
    "schouten": suite_schouten,
    "perturbation": suite_perturbation,
    "grid-lite": suite_grid_lite,
}


class UnknownSuiteError(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unknown suite {self.name!r}; known suites: {', '.join(SUITES)}, all"


@dataclass
class Report:
    version: str
    config: dict
    records: list

    @property
    def verdict(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {"artifact_version": self.version, "config": self.config,
                "records": [r.to_dict() for r in self.records],
                "verdict": "pass" if self.verdict else "fail"}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def resolve_suites(name: str) -> list[str]:
    if name == "all":
        return list(SUITES)
    if name not in SUITES:
        raise UnknownSuiteError(name)
    return [name]


def run_suites(name: str, n: int = 1, seed_: int = 0, tol_scale: float = 1.0) -> Report:
    names = resolve_suites(name)
    records: list[CheckRecord] = []
    for s in names:
        records.extend(SUITES[s](n, seed_, tol_scale))
    records.sort(key=lambda r: r.check_id)
    config = {"n": n, "seed": seed_, "suites": names, "tol_scale": tol_scale,
              "canonical": tol_scale == 1.0}
    return Report(__version__, config, records)
