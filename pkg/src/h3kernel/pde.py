"""Crank-Nicolson solver for the radial diffusion equation on a uniform grid.

Solves ``f_t = D sinh(rho)^-2 d/drho(sinh(rho)^2 f_rho)`` in conservative
form, independently of the closed-form kernel algebra.  The kernel is only
used to bootstrap the initial profile (a delta cannot be put on a grid) and
as a reference for error reports.

Discretization
--------------
Node ``i`` sits at ``rho_i = i*h``.  Fluxes use ``sinh^2`` at half nodes and
the node weights are ``h*sinh(rho_i)^2``.  At the origin the symmetric ghost
node ``f_{-1} = f_1`` gives ``df_0/dt = 6 D (f_1 - f_0)/h^2``; its weight
``h*sinh(h/2)^2/6`` makes the discrete mass ``4 pi sum_i w_i f_i`` exactly
conserved up to the outflow through the zero-Dirichlet node at ``rho_max``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import DomainError, NumericalError, ResolutionError
from .kernel import kernel_density
from .params import DiffusionParams, RadialGrid


@dataclass
class SolverRun:
    grid: RadialGrid
    t_start: float
    t_end: float
    n_steps: int
    params: DiffusionParams
    initial_profile: np.ndarray

    def __post_init__(self):
        self.initial_profile = np.asarray(self.initial_profile, dtype=float)
        if self.initial_profile.shape != (self.grid.n_points,):
            raise DomainError("initial_profile must have one value per grid node")
        if not np.all(np.isfinite(self.initial_profile)) or np.any(self.initial_profile < 0):
            raise DomainError("initial_profile must be finite and non-negative")
        if not (self.t_start > 0 and self.t_end >= self.t_start):
            raise DomainError("need 0 < t_start <= t_end")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise DomainError("n_steps must be a non-negative integer")
        if self.n_steps == 0 and self.t_end != self.t_start:
            raise DomainError("n_steps = 0 only allowed when t_end == t_start")

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps if self.n_steps else 0.0


@dataclass
class SolverReport:
    """Per-run diagnostics."""

    profile: np.ndarray
    mass_history: np.ndarray
    min_value: float
    l2_error: float = None
    notes: list = field(default_factory=list)

    @property
    def undershoot(self) -> bool:
        return self.min_value < 0

    @property
    def mass_drift(self) -> float:
        return float(np.max(np.abs(self.mass_history - self.mass_history[0])))


def node_weights(grid: RadialGrid) -> np.ndarray:
    """Volume weight of each node (without the ``4 pi``)."""
    h = grid.h
    w = h * np.sinh(grid.nodes) ** 2
    w[0] = h * np.sinh(0.5 * h) ** 2 / 6.0
    return w


def discrete_mass(profile, grid: RadialGrid) -> float:
    """``4 pi sum_i w_i f_i``."""
    return float(4.0 * np.pi * np.dot(node_weights(grid), profile))


def bootstrap_initial(rho0, t0, params: DiffusionParams, grid: RadialGrid) -> np.ndarray:
    """Closed-form kernel at a small time ``t0`` sampled on the grid.

    Raises
    ------
    ResolutionError
        If the kernel width ``sqrt(4 D t0)`` is below ``4 h``.
    """
    width = np.sqrt(4.0 * params.diffusion_constant * t0)
    if width < 4.0 * grid.h:
        raise ResolutionError(f"kernel width {width:.3g} is below 4h = {4 * grid.h:.3g}")
    return kernel_density(grid.nodes, rho0, params.diffusion_constant * t0)


def gaussian_initial(rho0, width, grid: RadialGrid) -> np.ndarray:
    """Narrow Gaussian shell around ``rho0`` with unit discrete mass.

    Closed-form free initializer; even about the origin.
    """
    if width < 4.0 * grid.h:
        raise ResolutionError(f"width {width:.3g} is below 4h = {4 * grid.h:.3g}")
    r = grid.nodes
    prof = np.exp(-0.5 * ((r - rho0) / width) ** 2) + np.exp(-0.5 * ((r + rho0) / width) ** 2)
    prof[-1] = 0.0
    return prof / discrete_mass(prof, grid)


def _system(grid: RadialGrid, D: float):
    """Weights and the symmetric tridiagonal stiffness on the free nodes."""
    h = grid.h
    w = node_weights(grid)[:-1]
    half = np.sinh(grid.nodes[:-1] + 0.5 * h) ** 2 * (D / h)  # conductance i -> i+1
    diag = half.copy()
    diag[1:] += half[:-1]
    off = half[:-1]
    return w, diag, off


def _apply(diag, off, x):
    """Multiply the stiffness (positive semidefinite, ``-A``) by ``x``."""
    y = diag * x
    y[:-1] -= off * x[1:]
    y[1:] -= off * x[:-1]
    return y


def evolve_with_report(run: SolverRun, reference=None) -> SolverReport:
    """Run Crank-Nicolson and collect diagnostics.

    ``reference`` is an optional exact profile at ``t_end`` for the L2 error.
    Negative undershoots are recorded, never clamped.
    """
    grid = run.grid
    f = run.initial_profile.copy()
    f[-1] = 0.0
    masses = [discrete_mass(f, grid)]
    if run.n_steps:
        k = run.step
        w, diag, off = _system(grid, run.params.diffusion_constant)
        # upper-form band storage of W + k/2 K
        band = np.zeros((2, w.size))
        band[0, 1:] = -0.5 * k * off
        band[1] = w + 0.5 * k * diag
        factor = (cholesky_banded(band), False)
        u = f[:-1]
        for _ in range(run.n_steps):
            rhs = w * u - 0.5 * k * _apply(diag, off, u)
            u = cho_solve_banded(factor, rhs)
            if not np.all(np.isfinite(u)):
                raise NumericalError("non-finite values in Crank-Nicolson solution")
            masses.append(float(4.0 * np.pi * np.dot(w, u)))
        f = np.append(u, 0.0)

    report = SolverReport(profile=f, mass_history=np.array(masses), min_value=float(f.min()))
    if report.undershoot:
        report.notes.append(f"negative undershoot, min = {report.min_value:.3e}")
    if reference is not None:
        report.l2_error = l2_relative_error(f, reference)
    return report


def evolve(run: SolverRun) -> np.ndarray:
    """Profile at ``run.t_end``."""
    return evolve_with_report(run).profile


def l2_relative_error(approx, exact) -> float:
    approx = np.asarray(approx)
    exact = np.asarray(exact)
    return float(np.linalg.norm(approx - exact) / np.linalg.norm(exact))


def oracle_error(rho0, t0, t_end, D, rho_max, h, n_steps) -> SolverReport:
    """Bootstrap at ``t0``, evolve to ``t_end``, compare to the closed form."""
    params = DiffusionParams(D, t_end)
    grid = RadialGrid.with_spacing(rho_max, h)
    init = bootstrap_initial(rho0, t0, params, grid)
    run = SolverRun(grid, t0, t_end, n_steps, params, init)
    exact = kernel_density(grid.nodes, rho0, D * t_end)
    exact[-1] = 0.0
    return evolve_with_report(run, reference=exact)
