"""Transverse-momentum spectra from the radial kernel.

The radius is read as radial rapidity, ``|p| = m sinh(rho)``, and the polar
angle is isotropic (``cos(theta)`` uniform on ``[-1, 1]``), so
``p_T = m sinh(rho) sin(theta)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import csvio
from .errors import DomainError, NumericalError
from .kernel import log_kernel
from .params import DiffusionParams, tail_cutoff
from .special import log_sinhc, logsinh
from .stochastic import _chunked, sample_inverse_cdf

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-10


@dataclass(frozen=True)
class ParticleKinematics:
    mass: float
    momentum_magnitude: float

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError("mass must be > 0")
        if not self.momentum_magnitude >= 0:
            raise DomainError("momentum must be >= 0")

    @property
    def energy(self) -> float:
        return float(np.hypot(self.mass, self.momentum_magnitude))

    @property
    def rho(self) -> float:
        return rho_from_momentum(self.momentum_magnitude, self.mass)

    @classmethod
    def from_rho(cls, rho, mass):
        return cls(mass, float(momentum_from_rho(rho, mass)))


@dataclass(frozen=True)
class SpectrumRequest:
    mass: float
    pt_grid: np.ndarray
    rho0: float
    params: DiffusionParams

    def __post_init__(self):
        pt = np.asarray(self.pt_grid, dtype=float)
        object.__setattr__(self, "pt_grid", pt)
        if not self.mass > 0:
            raise DomainError("mass must be > 0")
        if pt.ndim != 1 or pt.size == 0 or np.any(pt <= 0) or np.any(np.diff(pt) <= 0):
            raise DomainError("pt_grid must be a strictly increasing vector of positive values")
        if not self.rho0 >= 0:
            raise DomainError("rho0 must be >= 0")


@dataclass
class Spectrum:
    pt: np.ndarray
    density: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self, target=None):
        csvio.write_csv(target, {"pt": self.pt, "density": self.density}, self.metadata)


def rho_from_momentum(p, mass):
    """Radial rapidity ``ln((E + p)/m) = asinh(p/m)``."""
    if not np.all(np.asarray(mass) > 0):
        raise DomainError("mass must be > 0")
    return np.arcsinh(np.asarray(p, dtype=float) / mass)


def momentum_from_rho(rho, mass):
    return mass * np.sinh(rho)


def _log_pt_integrand(u, rho_min, pt, mass, rho0, dt):
    """Log integrand of the p_T density after ``rho = rho_min + u**2``."""
    u2 = u * u
    rho = rho_min + u2
    with np.errstate(divide="ignore"):
        return (
            np.log(8.0 * np.pi)
            + log_kernel(rho, rho0, dt)
            + logsinh(rho)
            + np.log(pt)
            - 2.0 * np.log(mass)
            - 0.5 * log_sinhc(u2)
            - 0.5 * logsinh(2.0 * rho_min + u2)
        )


def _pt_integrate(log_integrand, pt, mass, rho0, dt, upper):
    """``int_0^U exp(log_integrand(u)) du`` for every p_T, with ``U = sqrt(upper - rho_min)``."""
    rho_min = rho_from_momentum(pt, mass)
    span = np.sqrt(np.maximum(upper - rho_min, 0.0))

    def fun(w):
        u = w * span
        return span * np.exp(log_integrand(u, rho_min, pt, mass, rho0, dt))

    val, err = integrate.quad_vec(fun, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                                  limit=2000)
    if not np.all(np.isfinite(val)):
        raise NumericalError("p_T quadrature produced non-finite values")
    return val


def pt_density(req: SpectrumRequest) -> Spectrum:
    """Probability density of ``p_T`` on ``req.pt_grid``.

    For each ``p_T`` the radius runs from ``asinh(p_T/m)`` to the tail cutoff;
    both polar hemispheres contribute.  The inverse square-root endpoint
    singularity is removed by ``rho = rho_min + u**2``.
    """
    dt = req.params.dt
    upper = tail_cutoff(req.rho0, dt)
    dens = _pt_integrate(_log_pt_integrand, req.pt_grid, req.mass, req.rho0, dt, upper)
    meta = {"mass": csvio.fmt(req.mass), "rho0": csvio.fmt(req.rho0),
            "Dt": csvio.fmt(dt), "D": csvio.fmt(req.params.diffusion_constant),
            "t": csvio.fmt(req.params.time)}
    return Spectrum(req.pt_grid.copy(), dens, meta)


def _log_survival_integrand(u, rho_min, pt, mass, rho0, dt):
    # p(rho) * sqrt(1 - pt^2/P^2) * 2u
    u2 = u * u
    rho = rho_min + u2
    with np.errstate(divide="ignore"):
        return (
            np.log(8.0 * np.pi)
            + log_kernel(rho, rho0, dt)
            + logsinh(rho)
            + np.log(u)
            + 0.5 * (logsinh(u2) + logsinh(2.0 * rho_min + u2))
        )


def pt_cdf(pt, mass, rho0, params: DiffusionParams):
    """``P(p_T <= pt)`` without differentiating in ``p_T``.

    Uses ``P(sin(theta) <= c) = 1 - sqrt(1 - c**2)`` for isotropic angles and
    integrates that over the radial law.
    """
    pt = np.atleast_1d(np.asarray(pt, dtype=float))
    dt = params.dt
    upper = tail_cutoff(rho0, dt)
    surv = _pt_integrate(_log_survival_integrand, pt, mass, rho0, dt, upper)
    return 1.0 - surv


def support_max(mass, rho0, params: DiffusionParams) -> float:
    """``p_T`` beyond which the density is negligible."""
    return float(momentum_from_rho(tail_cutoff(rho0, params.dt), mass))


def rapidity_grid(mass, rho0, params: DiffusionParams, n=2000) -> np.ndarray:
    """``n`` positive p_T values uniform in ``asinh(p_T/m)`` up to the tail cutoff."""
    x = np.linspace(0.0, tail_cutoff(rho0, params.dt), n + 1)[1:]
    return momentum_from_rho(x, mass)


def total_mass(mass, rho0, params: DiffusionParams) -> float:
    """``int_0^inf pt_density dp_T`` by quadrature in ``x = asinh(p_T/m)``."""
    dt = params.dt
    upper = tail_cutoff(rho0, dt)

    def fun(x):
        pt = np.atleast_1d(mass * np.sinh(x))
        if pt[0] <= 0:
            return 0.0
        d = _pt_integrate(_log_pt_integrand, pt, mass, rho0, dt, upper)[0]
        return mass * np.cosh(x) * d

    peak = min(rho0 + 2.0 * dt, upper)
    val, _ = integrate.quad(fun, 0.0, upper, points=[peak], epsabs=1e-12, epsrel=1e-10, limit=200)
    return val


def cumulative_spectrum(spec: Spectrum) -> np.ndarray:
    """CDF of ``p_T`` at ``spec.pt`` by cumulative Simpson on the density.

    The grid is expected to start close to 0, where the density vanishes
    linearly.
    """
    pt = np.concatenate([[0.0], spec.pt])
    dens = np.concatenate([[0.0], spec.density])
    return integrate.cumulative_simpson(dens, x=pt, initial=0.0)[1:]


def sample_pt(n, mass, rho0, params: DiffusionParams, seed=42, *, workers=None):
    """Monte Carlo ``p_T = m sinh(rho) sin(theta)`` with isotropic angles."""
    rho = sample_inverse_cdf(n, rho0, params, seed, workers=workers).values
    cos = _chunked(int(n), seed + 0x9E3779B9, lambda rng, size: rng.uniform(-1.0, 1.0, size), workers)
    return mass * np.sinh(rho) * np.sqrt(1.0 - cos * cos)
