import csv
import io

import numpy as np
import pytest

from heisenberg_cr import subelliptic_grid as sg
from heisenberg_cr.core_group import Point


@pytest.fixture(scope="module")
def spec25():
    return sg.GridSpec(25)


@pytest.fixture(scope="module")
def barrier25(spec25):
    mask = sg.barrier_mask(spec25)
    return mask, sg.DirichletSolver(mask)


# -- grid geometry -----------------------------------------------------------

def test_spec_shape_and_spacing():
    s = sg.GridSpec(49)
    assert s.shape == (49, 49, 113)
    assert s.hz == pytest.approx(0.05)
    assert s.ht == pytest.approx(2.8 / 112)
    x, y, t = s.axes()
    i, j, k = s.origin_index()
    assert x[i] == 0.0 and y[j] == 0.0 and t[k] == 0.0


@pytest.mark.parametrize("kwargs", [dict(N=4), dict(N=1), dict(N=5, n=2), dict(N=5, t_ratio=0.0)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        sg.GridSpec(**kwargs)


def test_barrier_mask_labels(spec25):
    mask = sg.barrier_mask(spec25)
    labels = mask.labels
    assert labels[spec25.origin_index()] == sg.INTERIOR
    assert mask.count(sg.OUTER) > 0 and mask.count(sg.INNER) > 0
    # no interior node may see an exterior node through its stencil
    inside = labels != sg.EXTERIOR
    assert not np.any((labels == sg.INTERIOR) & ~sg._stencil_closed(inside))
    X, Y, T = spec25.coords()
    g = (np.square(X * X + Y * Y) + T * T) ** 0.25
    assert np.all(g[labels != sg.EXTERIOR] < 1.0)
    assert np.all(labels[0] == sg.EXTERIOR)


# -- stencil -----------------------------------------------------------------

def test_stencil_exact_on_quadratic(spec25):
    X, Y, T = spec25.coords()
    u = X * X
    lap = sg.apply_operator(spec25, u)
    scale = sg.operator_scale(spec25, u)
    core = sg._core(spec25.shape)
    assert np.all(np.abs(lap[core] - 2.0) <= 1e-14 * scale[core])
    assert np.all(np.isnan(lap[0]))


def test_stencil_on_tx(spec25):
    # [DERIVED] Delta_H (t x) = 4y exactly, the cross stencil is exact on bilinear terms
    X, Y, T = spec25.coords()
    u = T * X
    lap = sg.apply_operator(spec25, u)
    scale = sg.operator_scale(spec25, u)
    core = sg._core(spec25.shape)
    assert np.all(np.abs(lap[core] - 4 * Y[core]) <= 1e-14 * scale[core])


def test_stencil_apply_single_node(spec25):
    X, Y, T = spec25.coords()
    g = sg.GridField(spec25, X * X + Y * Y + 0.5 * T)
    assert sg.stencil_apply(g, (12, 12, 20)) == pytest.approx(4.0, abs=1e-11)
    with pytest.raises(sg.GridContractError):
        sg.stencil_apply(g, (0, 12, 20))


def test_stencil_apply_refuses_exterior(spec25, barrier25):
    mask, _ = barrier25
    X, Y, T = spec25.coords()
    g = sg.GridField(spec25, X * 0.0, mask)
    node = tuple(int(v) for v in np.argwhere(mask.labels == sg.OUTER)[0])
    with pytest.raises(sg.GridContractError):
        sg.stencil_apply(g, node)


def test_fundamental_solution_order():
    errs = sg.fundamental_residuals(sg.GridSpec(49), levels=3)
    orders = sg.observed_orders(errs)
    assert errs[0] > errs[1] > errs[2]
    assert min(orders) >= 1.85


def test_observed_orders():
    assert sg.observed_orders([4.0, 1.0, 0.25]) == [2.0, 2.0]


# -- Dirichlet solves --------------------------------------------------------

def test_constant_boundary_gives_constant(barrier25):
    mask, solver = barrier25
    data = np.full(mask.spec.shape, 0.7)
    g = sg.dirichlet_solve(mask, data=data, solver=solver)
    vals = g.values[mask.labels == sg.INTERIOR]
    assert np.max(np.abs(vals - 0.7)) <= 1e-8
    assert g.residual <= sg.SOLVER_RTOL


def test_zero_data_shortcut(barrier25):
    mask, solver = barrier25
    g = solver.solve(np.zeros(mask.spec.shape))
    assert g.residual == 0.0 and g.iterations == 0
    assert np.all(g.values[mask.labels == sg.INTERIOR] == 0.0)


def test_barrier_solution_properties(barrier25):
    mask, solver = barrier25
    g0 = sg.dirichlet_solve(mask, 0.0, solver=solver)
    rep = sg.solve_report(g0, 0.0)
    assert rep.residual <= 1e-8
    assert rep.origin_value > 0
    assert rep.interior_min >= -1e-9
    assert rep.interior_max <= sg.C0 / 2 + 1e-9
    assert rep.flagged < 0.005 * rep.interior_count
    assert g0.meta == {"eps": 0.0, "c0": sg.C0}
    diffs = []
    for eps in (0.02, 0.01, 0.005):
        ge = sg.dirichlet_solve(mask, eps, solver=solver)
        diffs.append(float(np.max(np.abs(ge.values - g0.values)[mask.labels == sg.INTERIOR])))
    assert diffs[0] > diffs[1] > diffs[2]
    # the data differ by 2 eps on the outer sphere only, so the gap is at most 2 eps
    assert diffs[0] <= 2 * 0.02 + 1e-9


def test_negative_eps_rejected(barrier25):
    mask, solver = barrier25
    with pytest.raises(ValueError):
        sg.dirichlet_solve(mask, -0.1, solver=solver)


def test_solver_reports_failure(spec25):
    mask = sg.barrier_mask(spec25)
    solver = sg.DirichletSolver(mask, rtol=1e-30, maxiter=1)
    with pytest.raises(sg.SolverError) as info:
        sg.dirichlet_solve(mask, 0.0, solver=solver)
    assert info.value.residual > 1e-30


def test_reference_value():
    ref = sg.reference_value()
    assert ref["N"] == 97 and ref["eps"] == 0
    assert 0.005 <= ref["origin_value"] <= sg.C0 / 2
    assert ref["residual"] <= 1e-8


# -- barrier and minimum principle -------------------------------------------

def test_barrier_term_values():
    A, r = 3.0, 0.125
    assert sg.barrier_term(A, r, Point([1.0], [0.0], 0.0)) == 0.0
    on_r = Point([0.0], [0.0], r * r)
    assert sg.barrier_term(A, r, on_r) == pytest.approx(A * (1 - r ** 2), rel=1e-14)
    assert sg.barrier_term(A, r, on_r) == pytest.approx(A * (1 - 8.0 ** -2), rel=1e-14)


def test_barrier_value_domain(spec25, barrier25):
    mask, solver = barrier25
    g = sg.dirichlet_solve(mask, 0.0, solver=solver)
    u = sg.GridField(spec25, np.ones(spec25.shape))
    X, Y, T = spec25.coords()
    gauge = (np.square(X * X + Y * Y) + T * T) ** 0.25
    ok = np.argwhere((mask.labels == sg.INTERIOR) & (gauge > 0.5))[0]
    node = tuple(int(v) for v in ok)
    p = Point([X[node]], [Y[node]], T[node])
    expect = 1.0 + sg.barrier_term(2.0, 0.5, p) - g.values[node]
    assert sg.barrier_value(u, 2.0, 0.5, g, node) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(sg.GridContractError):
        sg.barrier_value(u, 2.0, 0.5, g, spec25.origin_index())


@pytest.mark.parametrize("f", [lambda x, y, t: 0 * x + 2.0, sg.fundamental_solution,
                               lambda x, y, t: -(x * x + y * y)],
                         ids=["constant", "fundamental", "minus_znorm2"])
def test_min_principle(f, spec25):
    mask = sg.annulus_mask(spec25, 0.3, 1.0)
    rep = sg.min_principle_check(sg.sample(spec25, f), mask)
    assert rep.passed
    assert rep.interior_min >= rep.boundary_min - 1e-9


def test_min_principle_detects_interior_dip(spec25):
    mask = sg.annulus_mask(spec25, 0.3, 1.0)
    g = sg.sample(spec25, lambda x, y, t: 0 * x + 1.0)
    node = tuple(int(v) for v in np.argwhere(mask.labels == sg.INTERIOR)[0])
    g.values[node] = 0.5
    rep = sg.min_principle_check(g, mask)
    assert not rep.passed and rep.worst_node == node and not rep.superharmonic


def test_minus_znorm2_is_superharmonic(spec25):
    mask = sg.annulus_mask(spec25, 0.3, 1.0)
    rep = sg.min_principle_check(sg.sample(spec25, lambda x, y, t: -(x * x + y * y)), mask)
    assert rep.superharmonic and rep.max_stencil == pytest.approx(-4.0, abs=1e-10)


# -- output ------------------------------------------------------------------

def test_csv_layout():
    spec = sg.GridSpec(5, t_half=0.3)
    mask = sg.ball_mask(spec, 1.0)
    X, Y, T = spec.coords()
    values = np.where(mask.labels != sg.EXTERIOR, X + 10 * T, np.nan)
    text = sg.to_csv(sg.GridField(spec, values, mask))
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["x", "y", "t", "value", "mask"]
    assert len(rows) == 1 + spec.size
    # t varies fastest
    assert rows[1][:2] == rows[2][:2] and rows[1][2] != rows[2][2]
    ext = [r for r in rows[1:] if r[4] == "exterior"]
    assert ext and all(r[3] == "nan" for r in ext)
    assert {r[4] for r in rows[1:]} <= set(sg.MASK_NAMES.values())
    assert text == sg.to_csv(sg.GridField(spec, values, mask))
