"""Verification harness: flow maps, pullback errors, residuals, order fits."""

import math

import numpy as np
import pytest

from rsflow.exterior import wedge
from rsflow.fields import Grid, ScalarField, VectorField
from rsflow.rsf import component_vorticities, decomposition_plan
from rsflow.solver import SolverConfig, run_simulation
from rsflow.trig import TrigPoly
from rsflow.verify import (VelocityHistory, advect_flowmap, fit_order,
                           identity_suite, lemma1_check, pullback_error,
                           residual_pde)


def _constant_history(grid, u, times):
    comps = [np.full(grid.dims, v) for v in u]
    return VelocityHistory(grid, times, [comps] * len(times))


# ----------------------------------------------------------------------
# velocity histories
# ----------------------------------------------------------------------

def test_history_rejects_non_uniform_times():
    g = Grid.cube(3, 8)
    with pytest.raises(ValueError, match="uniformly spaced"):
        _constant_history(g, (1.0, 0.0, 0.0), [0.0, 0.1, 0.3, 0.4])


def test_history_rejects_too_few_snapshots():
    g = Grid.cube(3, 8)
    with pytest.raises(ValueError, match="at least 3"):
        _constant_history(g, (1.0, 0.0, 0.0), [0.0, 0.1])


def test_history_detects_steady_components():
    g = Grid.cube(3, 8)
    h = _constant_history(g, (0.3, -0.2, 0.1), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert h._steady == [True, True, True]


# ----------------------------------------------------------------------
# flow maps
# ----------------------------------------------------------------------

def test_flowmap_constant_velocity_is_exact():
    g = Grid.cube(3, 16)
    u = (0.3, -0.2, 0.1)
    h = _constant_history(g, u, [0.0, 0.25, 0.5, 0.75, 1.0])
    fmap = advect_flowmap(h, 0.0, 1.0, substeps=4)
    pts = g.points()
    for c in range(3):
        np.testing.assert_allclose(fmap.map.images.components[c].values,
                                   pts[..., c] + u[c], atol=1e-13)
    for r in range(3):
        for c in range(3):
            expect = 1.0 if r == c else 0.0
            np.testing.assert_allclose(fmap.map.jacobian.entry(r, c).values,
                                       expect, atol=1e-13)


def test_flowmap_volume_preserved_by_divergence_free_flow():
    cfg = SolverConfig(mode="kinematic_tg", dims=(32, 32, 32), t_end=0.5,
                       amplitude=0.1, kmax=1, snapshot_stride=1)
    h = VelocityHistory.from_result(run_simulation(cfg))
    fmap = advect_flowmap(h, 0.0, 0.5, substeps=2 * (len(h.times) - 1))
    det = fmap.map.jacobian_det()
    # horizontal TG is divergence-free but u3 self-advection is not
    assert np.max(np.abs(det - 1.0)) < 0.2
    assert np.min(det) > 0.5


def test_flowmap_rejects_interval_outside_history():
    g = Grid.cube(3, 8)
    h = _constant_history(g, (1.0, 0.0, 0.0), [0.0, 0.5, 1.0])
    with pytest.raises(ValueError, match="outside history"):
        advect_flowmap(h, 0.0, 2.0, substeps=4)


def test_flowmap_substep_self_convergence():
    cfg = SolverConfig(mode="kinematic_tg", dims=(32, 32, 32), t_end=0.25,
                       amplitude=0.1, kmax=1, snapshot_stride=1)
    h = VelocityHistory.from_result(run_simulation(cfg))
    coarse = advect_flowmap(h, 0.0, 0.25, substeps=4, stride=2)
    fine = advect_flowmap(h, 0.0, 0.25, substeps=16, stride=2)
    gap = max((a - b).max_abs() for a, b in
              zip(coarse.map.images.components, fine.map.images.components))
    assert gap < 1e-6  # RK4: refining dt barely moves the particles


# ----------------------------------------------------------------------
# pullback error
# ----------------------------------------------------------------------

def test_pullback_error_vanishes_for_trivial_interval():
    g = Grid.cube(3, 16)
    h = _constant_history(g, (0.0, 0.0, 0.0), [0.0, 0.5, 1.0, 1.5, 2.0])
    fmap = advect_flowmap(h, 0.0, 0.0, substeps=1)
    plan = decomposition_plan(3)
    rng = np.random.default_rng(0)
    arrays = [TrigPoly.random(3, 2, rng).sample([g.axis_coords(a)
                                                 for a in range(3)])
              for _ in range(3)]
    u = VectorField.from_arrays(g, arrays)
    omega = component_vorticities(u, plan)[0]
    err = pullback_error(omega, fmap, omega)
    assert err["linf"] == 0.0 and err["l2_normalized"] == 0.0


# ----------------------------------------------------------------------
# PDE residuals and operator linearity
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def short_kinematic_history():
    cfg = SolverConfig(mode="kinematic_tg", dims=(32, 32, 32), t_end=0.4,
                       amplitude=0.1, kmax=1, snapshot_stride=1)
    return VelocityHistory.from_result(run_simulation(cfg))


def test_residual_pde_linearity(short_kinematic_history):
    h = short_kinematic_history
    plan = decomposition_plan(3)
    series = [[], []]
    for i in range(len(h.times)):
        omegas = component_vorticities(h.velocity_field(i), plan)
        series[0].append(omegas[0])
        series[1].append(omegas[1])
    out = residual_pde(h, series)
    assert out["linearity_rel_discrepancy"] <= 1e-12
    assert len(out["components"]) == 2
    assert all(np.isfinite(v) for v in out["components"][0]["linf"])


def test_residual_pde_is_small_for_true_solution(short_kinematic_history):
    h = short_kinematic_history
    plan = decomposition_plan(3)
    series = [[component_vorticities(h.velocity_field(i), plan)[0]
               for i in range(len(h.times))]]
    out = residual_pde(h, series)
    # omega_h is exactly steady and Lie-invariant; only stencil error remains
    assert max(out["components"][0]["linf"]) <= 1e-3


# ----------------------------------------------------------------------
# closed-form identities
# ----------------------------------------------------------------------

def test_lemma1_positive_and_negative_controls():
    assert lemma1_check(5, 2, seed=0) <= 1e-13
    assert lemma1_check(5, 2, seed=0, violate=True) >= 1e-3


def test_lemma1_argument_validation():
    with pytest.raises(ValueError):
        lemma1_check(3, 3, seed=0)


def test_identity_suite_small_slice():
    worst = identity_suite(dims=[3, 4], seeds=3)
    assert set(worst) == {"dd_zero", "cartan_vs_components", "d_commutes_lie",
                          "leibniz", "lemma1"}
    assert all(v <= 1e-12 for v in worst.values())


def test_wedge_of_3d_components_is_trivial():
    # in d = 3 the wedge of two component 2-forms exceeds the top degree
    g = Grid.cube(3, 8)
    rng = np.random.default_rng(1)
    u = VectorField.from_arrays(
        g, [TrigPoly.random(3, 1, rng).sample([g.axis_coords(a)
                                               for a in range(3)])
            for _ in range(3)])
    omegas = component_vorticities(u, decomposition_plan(3))
    assert not wedge(omegas[0], omegas[1]).coeffs


# ----------------------------------------------------------------------
# order fitting
# ----------------------------------------------------------------------

def test_fit_order_recovers_exact_slope():
    ns = [32, 64, 128]
    errors = [1e-2 * (32.0 / n) ** 4 for n in ns]
    assert fit_order(ns, errors) == pytest.approx(4.0, abs=1e-12)


def test_fit_order_first_order_data():
    assert fit_order([16, 32, 64], [0.2, 0.1, 0.05]) == pytest.approx(1.0)


def test_fit_order_handles_floor():
    assert fit_order([16, 32], [1e-3, 0.0]) == math.inf


def test_fit_order_needs_two_points():
    with pytest.raises(ValueError):
        fit_order([16], [1e-3])
