import numpy as np
import pytest

from h3kernel.errors import DomainError, ResolutionError
from h3kernel.kernel import kernel_density
from h3kernel.params import DiffusionParams, RadialGrid
from h3kernel.pde import (
    SolverRun, bootstrap_initial, discrete_mass, evolve, evolve_with_report, gaussian_initial,
    node_weights, oracle_error,
)

P = DiffusionParams(1.0, 0.5)


def test_bootstrap_single_peak_near_source():
    grid = RadialGrid.with_spacing(15.0, 0.005)
    prof = bootstrap_initial(1.0, 0.01, P, grid)
    peak = grid.nodes[np.argmax(prof)]
    assert abs(peak - 1.0) < 0.05
    # one local maximum
    d = np.diff(prof)
    assert np.count_nonzero((d[:-1] > 0) & (d[1:] <= 0)) == 1


def test_bootstrap_mass():
    grid = RadialGrid.with_spacing(15.0, 0.005)
    prof = bootstrap_initial(1.0, 0.01, P, grid)
    trapezoid = 4 * np.pi * np.trapezoid(prof * np.sinh(grid.nodes) ** 2, grid.nodes)
    assert trapezoid == pytest.approx(1.0, abs=1e-4)
    assert discrete_mass(prof, grid) == pytest.approx(1.0, abs=1e-4)


def test_bootstrap_origin_peak_is_flat():
    grid = RadialGrid.with_spacing(15.0, 0.005)
    prof = bootstrap_initial(0.0, 0.01, P, grid)
    assert np.argmax(prof) == 0
    slope = (prof[1] - prof[0]) / grid.h
    assert abs(slope) < 1e-3 * prof[0] / grid.h


def test_bootstrap_resolution_error():
    grid = RadialGrid.with_spacing(15.0, 0.1)
    with pytest.raises(ResolutionError):
        bootstrap_initial(1.0, 0.01, P, grid)


def test_gaussian_initial_unit_mass():
    grid = RadialGrid.with_spacing(10.0, 0.01)
    prof = gaussian_initial(2.0, 0.1, grid)
    assert discrete_mass(prof, grid) == pytest.approx(1.0, rel=1e-14)


def test_origin_weight_matches_ghost_node():
    grid = RadialGrid.with_spacing(5.0, 0.01)
    w = node_weights(grid)
    h = grid.h
    # ghost node f_{-1} = f_1 gives df0/dt = 6 D (f1 - f0)/h^2
    conductance = np.sinh(h / 2) ** 2 / h
    assert conductance / w[0] == pytest.approx(6.0 / h ** 2, rel=1e-12)


def test_oracle_accuracy_and_order():
    coarse = oracle_error(1.0, 0.01, 0.5, 1.0, 15.0, 0.01, 500)
    fine = oracle_error(1.0, 0.01, 0.5, 1.0, 15.0, 0.005, 1000)
    assert coarse.l2_error < 1e-3
    assert 3.2 <= coarse.l2_error / fine.l2_error <= 4.8


def test_mass_conservation():
    rep = oracle_error(1.0, 0.01, 0.5, 1.0, 15.0, 0.01, 500)
    assert rep.mass_drift < 1e-6
    assert rep.mass_history.size == 501


@pytest.mark.parametrize("rho0", [0.0, 1.0])
def test_oracle_runs_stay_positive(rho0):
    rep = oracle_error(rho0, 0.01, 0.5, 1.0, 15.0, 0.01, 500)
    assert not rep.undershoot and not rep.notes


def test_zero_steps_is_identity():
    grid = RadialGrid.with_spacing(15.0, 0.01)
    exact = kernel_density(grid.nodes, 1.0, 0.5)
    exact[-1] = 0.0
    out = evolve(SolverRun(grid, 0.5, 0.5, 0, P, exact))
    assert np.array_equal(out, exact)


def test_zero_steps_needs_equal_times():
    grid = RadialGrid.with_spacing(5.0, 0.01)
    with pytest.raises(DomainError):
        SolverRun(grid, 0.1, 0.5, 0, P, np.zeros(grid.n_points))


def test_report_records_undershoot():
    # a sharp step is not smooth enough for CN to stay positive
    grid = RadialGrid.with_spacing(5.0, 0.01)
    init = np.where(np.abs(grid.nodes - 2.0) < 0.02, 1.0, 0.0)
    rep = evolve_with_report(SolverRun(grid, 0.01, 0.11, 2, P, init))
    assert rep.min_value == rep.profile.min()
    assert rep.undershoot == (rep.min_value < 0)
    if rep.undershoot:
        assert rep.notes


def test_origin_source_evolution():
    grid = RadialGrid.with_spacing(15.0, 0.01)
    params = DiffusionParams(1.0, 0.5)
    init = bootstrap_initial(0.0, 0.01, params, grid)
    out = evolve(SolverRun(grid, 0.01, 0.5, 500, params, init))
    exact = kernel_density(grid.nodes, 0.0, 0.5)
    assert np.linalg.norm(out - exact) / np.linalg.norm(exact) < 1e-3


def test_invalid_profile():
    grid = RadialGrid.with_spacing(5.0, 0.01)
    with pytest.raises(DomainError):
        SolverRun(grid, 0.1, 0.5, 10, P, np.zeros(3))
    with pytest.raises(DomainError):
        SolverRun(grid, 0.1, 0.5, 10, P, -np.ones(grid.n_points))
