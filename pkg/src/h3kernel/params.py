"""Parameter containers shared by every module."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class DiffusionParams:
    """Diffusion constant ``D`` and elapsed time ``t``.

    The kernel shape depends on these only through the product ``D*t``
    (exposed as :attr:`dt`).
    """

    diffusion_constant: float
    time: float

    def __post_init__(self):
        if not (np.isfinite(self.diffusion_constant) and self.diffusion_constant > 0):
            raise DomainError(f"diffusion_constant must be > 0, got {self.diffusion_constant}")
        if not (np.isfinite(self.time) and self.time > 0):
            raise DomainError(f"time must be > 0, got {self.time}")

    @property
    def dt(self) -> float:
        return self.diffusion_constant * self.time

    @classmethod
    def from_product(cls, dt: float) -> "DiffusionParams":
        """Params with ``D = 1`` and ``t = dt``."""
        return cls(1.0, dt)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid on ``[0, rho_max]`` with ``n_points`` nodes."""

    rho_max: float
    n_points: int
    rho_min: float = 0.0

    def __post_init__(self):
        if self.rho_min != 0.0:
            raise DomainError("radial grids start at rho = 0")
        if not (np.isfinite(self.rho_max) and self.rho_max > 0):
            raise DomainError(f"rho_max must be > 0, got {self.rho_max}")
        if int(self.n_points) != self.n_points or self.n_points < 16:
            raise DomainError(f"n_points must be an integer >= 16, got {self.n_points}")

    @classmethod
    def with_spacing(cls, rho_max: float, h: float) -> "RadialGrid":
        """Grid whose spacing is ``h`` (``rho_max`` rounded to a whole number of steps)."""
        n = int(round(rho_max / h)) + 1
        return cls(rho_max=(n - 1) * h, n_points=n)

    @property
    def h(self) -> float:
        return self.rho_max / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.rho_max, self.n_points)


def tail_cutoff(rho0: float, dt: float) -> float:
    """Radius beyond which the radial mass of the kernel is below ~1e-16.

    The radial law is close to a Gaussian centred at ``rho0 + 2*dt`` with
    variance ``2*dt``; the margin covers more than 12 standard deviations.
    """
    return rho0 + 2.0 * dt + max(20.0, 12.0 * np.sqrt(4.0 * dt))
