import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from heisenberg_cr import crtransform as crt
from heisenberg_cr.fields import Field, builtin_corpus
from heisenberg_cr.core_group import Point, UnitaryRotation, gauge_norm, structure_matrices
from heisenberg_cr.numerics import max_abs, rel_err
from heisenberg_cr.schouten import (INTERIOR, COMPLEMENT, NonPositiveFieldError, SchoutenMatrix,
                                    admissible_delta, canonical_args, canonical_args_matrix,
                                    cone_predicates, eigen_sym, ellipticity_probe,
                                    f_invariance_conditions, invariance_suite,
                                    perturbation_inequality, random_structured,
                                    schouten_from_horizontal, schouten_from_phi,
                                    schouten_tensor, schouten_term_scale, sigma_k,
                                    sigma_of_canonical, sigma_sym_functional, sym_part,
                                    trace_identity_rhs, trace_identity_scale)


def rand_point(n, rng, lo=0.3, hi=2.0):
    while True:
        p = Point.random(n, rng, scale=1.5)
        if lo < gauge_norm(p) < hi:
            return p


# -- the tensor --------------------------------------------------------------

def test_constant_field_has_zero_tensor(n):
    p = Point(np.full(n, 0.4), np.full(n, 0.1), -0.3)
    S = schouten_tensor(Field.constant(3.0, n), p)
    assert not S.A.any()
    assert all(S.sigma(k) == 0 for k in range(1, 2 * n + 1))
    assert not schouten_from_phi(Field.constant(3.0, n), p).A.any()


def test_phi_path_hand_value():
    # [DERIVED] phi = 1 + x1^2 at (1,0,0): phi = 2, grad (2, 0), sym hess diag(2, 0)
    u = Field.from_expr("(1 + x1^2)^(-1)", 1)
    p = Point([1.0], [0.0], 0.0)
    assert np.allclose(schouten_from_phi(u, p).A, np.diag([2.0, -6.0]), atol=1e-14)
    assert np.allclose(schouten_tensor(u, p).A, np.diag([2.0, -6.0]), atol=1e-13)


def test_nonpositive_field_rejected():
    u = Field.from_expr("x1", 1)
    p = Point([-1.0], [0.0], 0.0)
    with pytest.raises(NonPositiveFieldError):
        schouten_tensor(u, p)
    with pytest.raises(NonPositiveFieldError):
        canonical_args(0.0, [0, 0], np.zeros((2, 2)))


@pytest.mark.parametrize("name", ["exp_quadratic_0", "exp_quadratic_2", "jerison_lee",
                                  "shifted_quadratic_0", "bump_0.1"])
def test_two_paths_and_trace_identity(name, n, rng):
    u = builtin_corpus(n).by_name(name).field
    Q = 2 * n + 2
    for _ in range(10):
        p = rand_point(n, rng)
        h = u.horizontal(p)
        A = schouten_from_horizontal(h, Q)
        sc = schouten_term_scale(h, Q)
        assert rel_err(A, schouten_from_phi(u, p).A, sc) <= 1e-10
        assert rel_err(np.trace(A), trace_identity_rhs(h, Q), trace_identity_scale(h, Q)) <= 1e-11
        assert rel_err(canonical_args(h.val, h.hgrad, h.hhess).A, A) <= 1e-11
        assert np.array_equal(A, A.T)


def test_canonical_zero_data(n):
    assert not canonical_args(2.0, np.zeros(2 * n), np.zeros((2 * n, 2 * n))).A.any()


@given(st.floats(0.2, 5), st.integers(0, 2 ** 31))
def test_canonical_scaling(s, seed_):
    rng = np.random.default_rng(seed_)
    n = 2
    Q = 6
    U = random_structured(n, rng)
    a = canonical_args_matrix(1.0, np.zeros(2 * n), s ** (-(Q + 2) / (Q - 2)) * U)
    b = canonical_args_matrix(s, np.zeros(2 * n), U)
    assert rel_err(a, b) <= 1e-11


def test_cli_example_trace_at_origin():
    # sigma_1 = -2/(Q-2) Delta_H u(0) for u = exp(0.1|z|^2), u(0) = 1, Delta_H u(0) = 0.4
    u = Field.from_expr("exp(0.1*znorm2)", 1)
    S = schouten_tensor(u, Point.origin(1))
    assert S.sigma(1) == pytest.approx(-0.4, rel=1e-14)


# -- eigenvalues -------------------------------------------------------------

def test_eigen_identity_and_diagonal():
    w, V = eigen_sym(np.eye(3))
    assert np.array_equal(w, np.ones(3))
    w, _ = eigen_sym(np.diag([3.0, -1.0, 0.0, 0.0]))
    assert np.array_equal(w, [-1.0, 0.0, 0.0, 3.0])


def test_eigen_two_by_two_closed_form():
    w, V = eigen_sym([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(w, [1.0, 3.0], atol=1e-15)
    assert abs(abs(V[0, 1]) - 2 ** -0.5) <= 1e-15


def test_eigen_rejects_bad_input():
    with pytest.raises(ValueError):
        eigen_sym(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigen_sym([[0.0, 1.0], [0.0, 0.0]])


def test_eigen_nearly_diagonal_regression(rng):
    # the stopping test once lost tiny off-diagonal mass to cancellation
    for _ in range(50):
        B = rng.normal(size=(4, 4))
        A = np.diag([1.0, 2.0, 3.0, 4.0]) + 1e-8 * (B + B.T)
        w, V = eigen_sym(A)
        assert max_abs(V @ np.diag(w) @ V.T - A) <= 1e-11 * max_abs(A)
        assert max_abs(A @ V - V * w) <= 1e-13


@given(arrays(np.float64, (4, 4), elements=st.floats(-1e3, 1e3)))
def test_eigen_reconstruction(B):
    A = B + B.T
    w, V = eigen_sym(A)
    scale = max(max_abs(A), 1e-300)
    assert max_abs(V @ np.diag(w) @ V.T - A) <= 1e-11 * scale
    assert max_abs(V.T @ V - np.eye(4)) <= 1e-12
    assert np.all(np.diff(w) >= 0)
    assert abs(w.sum() - np.trace(A)) <= 1e-11 * scale * 4


# -- symmetric functions -----------------------------------------------------

@given(arrays(np.float64, 4, elements=st.floats(-10, 10)))
def test_sigma_endpoints(lam):
    assert math.isclose(sigma_k(lam, 1), float(np.sum(lam)), rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(sigma_k(lam, 4), float(np.prod(lam)), rel_tol=1e-12, abs_tol=1e-9)


@pytest.mark.parametrize("m", [2, 4, 6])
def test_sigma_of_ones_is_binomial(m):
    for k in range(1, m + 1):
        assert sigma_k(np.ones(m), k) == math.comb(m, k)


def test_sigma_index_range():
    with pytest.raises(ValueError):
        sigma_k([1.0, 2.0], 0)
    with pytest.raises(ValueError):
        sigma_k([1.0, 2.0], 3)


# -- invariance --------------------------------------------------------------

def _generators(n, rng):
    return [crt.Translate(Point.random(n, rng, 0.5)), crt.Dilate(rng.uniform(0.6, 1.4)),
            crt.Rotate(UnitaryRotation.random(n, rng)), crt.Iota(), crt.CheckInvert()]


def test_invariance_under_all_generators(n, rng):
    u = builtin_corpus(n).by_name("exp_quadratic_1").field
    for g in _generators(n, rng):
        pts = []
        while len(pts) < 8:
            p = rand_point(n, rng, lo=0.6)
            if u.domain.contains(g.apply(p)):
                pts.append(p)
        tol = 1e-8 if isinstance(g, crt.CheckInvert) else 1e-10
        for r in invariance_suite(u, g, pts):
            assert r.matrix_residual <= tol, type(g).__name__
            assert r.spectrum_residual <= 1e-8
            assert r.sigma_residual <= 1e-8


def test_invariance_of_constant(n, rng):
    for g in _generators(n, rng)[:4]:
        for r in invariance_suite(Field.constant(2.0, n), g, [rand_point(n, rng)]):
            assert r.matrix_residual == 0 and r.spectrum_residual == 0


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_sigma_sym_invariance_conditions(k, rng):
    rep = f_invariance_conditions(sigma_sym_functional(k), 2, 50, rng)
    assert rep.worst <= 1e-10


def test_shear_condition_exact(rng):
    _, J = structure_matrices(2)
    A = random_structured(2, rng)
    # equal up to the rounding of the 1e3 shift
    assert max_abs(sym_part(A + 1e3 * J) - sym_part(A)) <= 1e3 * 2.3e-16


# -- cones -------------------------------------------------------------------

def test_cones_basic(n, rng):
    I = np.eye(2 * n)
    for cone in cone_predicates(n):
        assert cone.classify(I) == INTERIOR
        assert cone.classify(-I) == COMPLEMENT
        scaling, monotone = cone.self_test(n, 3, rng)
        assert scaling and monotone
    trace = cone_predicates(n)[0]
    for _ in range(20):
        A = trace.boundary_sample(n, rng)
        L = rng.normal(size=(2 * n, 2 * n))
        assert trace.classify(A + L @ L.T + 1e-3 * I) == INTERIOR


# -- perturbation ------------------------------------------------------------

def test_perturbation_with_unit_phi(rng):
    delta = admissible_delta(1.5 * 2 ** 0.5)
    pts = [Point.random(1, rng, 1.0) for _ in range(20)]
    rep = perturbation_inequality(Field.constant(1.0, 1), delta, [1e-3, 1e-2, 1e-1], pts,
                                  1.5 * 2 ** 0.5)
    assert rep.delta_admissible
    assert rep.worst_margin >= -1e-10
    assert rep.worst_bump_margin >= -1e-10


def test_perturbation_on_shifted_quadratic(n, rng):
    sup_z = 1.5 * (2 * n) ** 0.5
    delta = admissible_delta(sup_z)
    phi = builtin_corpus(n).by_name("shifted_quadratic_0").field
    pts = phi.domain.sample(n, 30, rng)
    rep = perturbation_inequality(phi, delta, [1e-3, 1e-2, 1e-1], pts, sup_z)
    assert rep.worst_margin >= -1e-10
    assert rep.worst_bump_margin >= -1e-10
    assert max(r.form_gap for r in rep.records) <= 1e-10


def test_inadmissible_delta_flagged():
    rep = perturbation_inequality(Field.constant(1.0, 1), 1.0, [1e-2], [Point.origin(1)], 2.0)
    assert not rep.delta_admissible


# -- ellipticity -------------------------------------------------------------

def test_ellipticity_of_trace_functionals():
    U = np.zeros((2, 2))
    v = np.zeros(2)
    assert ellipticity_probe(lambda s, v, U: -np.trace(U), 1.0, v, U) == pytest.approx(1.0, abs=1e-9)
    assert ellipticity_probe(lambda s, v, U: np.trace(U), 1.0, v, U) == pytest.approx(-1.0, abs=1e-9)


def test_ellipticity_of_sigma_one(n, rng):
    Q = 2 * n + 2
    s = 1.3
    v = rng.normal(size=2 * n)
    U = random_structured(n, rng)
    got = ellipticity_probe(sigma_of_canonical(1), s, v, U)
    assert got == pytest.approx(2 / (Q - 2) * s ** (-(Q + 2) / (Q - 2)), abs=1e-6)


def test_matrix_wrapper_symmetrizes():
    S = SchoutenMatrix.from_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert np.allclose(S.spectrum, [-1.0, 3.0], atol=1e-15)
    assert S.sigma(2) == pytest.approx(-3.0, rel=1e-14)
