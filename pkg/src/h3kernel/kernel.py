r"""Radial heat kernel of Brownian motion in three-dimensional hyperbolic space.

The transition density with respect to the volume element
``4*pi*sinh(rho)**2 d rho`` of a diffusion started on the sphere of radius
``rho0`` is

.. math::
    f(\rho, \rho_0, t) = \frac{e^{-Dt}}{2\pi\sqrt{4\pi Dt}}
        \frac{\sinh(\rho_0\rho / 2Dt)}{\sinh\rho_0 \sinh\rho}
        \exp\left[-\frac{\rho^2 + \rho_0^2}{4Dt}\right]

Everything here works in log space so that large radii and short times do
not overflow.  Besides the closed form, the module carries the intermediate
objects of its derivation (the one-dimensional function ``g``, its Hermite
series and its Laplace transform) together with numerical checks of the
identities linking them.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, NonConvergenceError, TailTruncationWarning
from .params import DiffusionParams, RadialGrid, tail_cutoff
from .special import LOGSINH_CROSSOVER, log_sinh_excess, log_sinhc, logsinh

#: The constant of the ``f1`` component; fixed to zero by normalization.
C0 = 0.0

#: Tolerances of the normalization quadrature.
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12
TAIL_WARN = 1e-10


@dataclass(frozen=True)
class KernelQuery:
    rho: float
    rho0: float
    params: DiffusionParams

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho >= 0):
            raise DomainError(f"rho must be >= 0, got {self.rho}")
        if not (np.isfinite(self.rho0) and self.rho0 >= 0):
            raise DomainError(f"rho0 must be >= 0, got {self.rho0}")


@dataclass(frozen=True)
class LogDensity:
    """Natural log of a density w.r.t. the hyperbolic volume element."""

    log_value: float

    @property
    def underflow(self) -> bool:
        """True when ``exp(log_value)`` is not representable as a normal float."""
        return bool(self.log_value < np.log(np.finfo(float).tiny))

    @property
    def value(self) -> float:
        """Plain density; flushed to exactly 0.0 when :attr:`underflow` is set."""
        if self.underflow:
            return 0.0
        return float(np.exp(self.log_value))

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class SeriesConfig:
    max_terms: int = 40
    relative_tolerance: float = 1e-12

    def __post_init__(self):
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms}")
        if not self.relative_tolerance > 0:
            raise DomainError("relative_tolerance must be > 0")


@dataclass(frozen=True)
class LaplaceQuery:
    rho: float
    rho0: float
    s: float
    diffusion_constant: float

    def __post_init__(self):
        if not (self.rho > self.rho0 > 0):
            raise DomainError(
                f"the Laplace-domain form needs rho > rho0 > 0, got rho={self.rho}, rho0={self.rho0}"
            )
        if not self.s > 0:
            raise DomainError(f"s must be > 0, got {self.s}")
        if not self.diffusion_constant > 0:
            raise DomainError("diffusion_constant must be > 0")

    @property
    def kappa(self) -> float:
        return float(np.sqrt(self.s / self.diffusion_constant))


def _check_dt(dt):
    dt = np.asarray(dt, dtype=float)
    if np.any(~(dt > 0)) or np.any(~np.isfinite(dt)):
        raise DomainError("D*t must be positive and finite")
    return dt


def log_kernel(rho, rho0, dt):
    """Vectorized ``log f(rho, rho0, t)`` as a function of the product ``dt = D*t``.

    The arguments broadcast.  The result is exactly symmetric in
    ``(rho, rho0)``.  With ``y = rho*rho0/(2 dt)`` two algebraically equal
    forms are used:

    * ``y < 20``: the ratio of ``sinh`` factors is written through
      ``sinh(x)/x``, which is exact down to ``rho0 = 0`` (and ``rho = 0``);
    * ``y >= 20``: the exponent is combined into ``-(rho - rho0)**2/(4 dt)``
      before adding the bounded ``log(sinh y) - y``, which avoids cancelling
      two huge exponents.
    """
    rho = np.asarray(rho, dtype=float)
    rho0 = np.asarray(rho0, dtype=float)
    dt = _check_dt(dt)
    if np.any(rho < 0) or np.any(rho0 < 0):
        raise DomainError("rho and rho0 must be >= 0")

    y = rho * rho0 / (2.0 * dt)
    prefactor = -np.log(2.0 * np.pi) - 0.5 * np.log(4.0 * np.pi * dt) - dt

    near = y < LOGSINH_CROSSOVER
    with np.errstate(divide="ignore", invalid="ignore"):
        shape_near = (
            -(rho * rho + rho0 * rho0) / (4.0 * dt)
            - np.log(2.0 * dt)
            + log_sinhc(np.where(near, y, 0.0))
            - (log_sinhc(rho) + log_sinhc(rho0))
        )
        rf = np.where(near, 1.0, rho)
        r0f = np.where(near, 1.0, rho0)
        shape_far = (
            -((rho - rho0) ** 2) / (4.0 * dt)
            + log_sinh_excess(np.where(near, 1.0, y))
            - (logsinh(rf) + logsinh(r0f))
        )
    out = prefactor + np.where(near, shape_near, shape_far)
    return out[()] if out.ndim == 0 else out


def log_kernel_origin(rho, dt):
    """Vectorized log of the kernel for a source at the origin."""
    rho = np.asarray(rho, dtype=float)
    dt = _check_dt(dt)
    if np.any(rho < 0):
        raise DomainError("rho must be >= 0")
    out = -1.5 * np.log(4.0 * np.pi * dt) - dt - log_sinhc(rho) - rho * rho / (4.0 * dt)
    return out[()] if out.ndim == 0 else out


def kernel_density(rho, rho0, dt):
    """``exp(log_kernel(...))``; underflows silently to 0."""
    return np.exp(log_kernel(rho, rho0, dt))


def eval_kernel(q: KernelQuery) -> LogDensity:
    """Log of the transition density at ``q.rho`` for a source at ``q.rho0``."""
    return LogDensity(float(log_kernel(q.rho, q.rho0, q.params.dt)))


def eval_kernel_origin(rho: float, params: DiffusionParams) -> LogDensity:
    """Log of the transition density for a source at the origin."""
    if not (np.isfinite(rho) and rho >= 0):
        raise DomainError(f"rho must be >= 0, got {rho}")
    return LogDensity(float(log_kernel_origin(rho, params.dt)))


def log_g(rho, rho0, dt):
    """Vectorized ``log g`` where ``g = sinh(rho) * exp(D t) * f``."""
    rho = np.asarray(rho, dtype=float)
    rho0 = np.asarray(rho0, dtype=float)
    if np.any(rho <= 0) or np.any(rho0 <= 0):
        raise DomainError("g is defined for rho > 0 and rho0 > 0")
    return log_kernel(rho, rho0, dt) + logsinh(rho) + dt


def eval_g(rho: float, rho0: float, params: DiffusionParams) -> float:
    """Solution ``g`` of the one-dimensional heat equation ``g_t = D g_rr``.

    Related to the kernel by ``f = exp(-D t) g / sinh(rho)``.
    """
    return float(np.exp(log_g(rho, rho0, params.dt)))


def eval_hermite_series(q: KernelQuery, cfg: SeriesConfig = SeriesConfig(), *, strict=True):
    """Partial sum of the odd Hermite series for ``g``.

    .. math::
        g = \\frac{e^{-x^2}}{4\\pi\\sqrt{\\pi Dt}\\,\\sinh\\rho_0}
            \\sum_{m\\ge0} \\frac{\\tau^{2m+1}}{(2m+1)!} H_{2m+1}(x),
        \\quad x = \\frac{\\rho}{\\sqrt{4Dt}},\\ \\tau = \\frac{\\rho_0}{2\\sqrt{Dt}}

    Summation stops once two consecutive terms fall below
    ``cfg.relative_tolerance`` relative to the running sum.

    Returns
    -------
    value : float
    terms_used : int

    Raises
    ------
    NonConvergenceError
        If ``cfg.max_terms`` terms are used without meeting the tolerance and
        ``strict`` is true.
    """
    if not q.rho0 > 0:
        raise DomainError("the Hermite series needs rho0 > 0")
    dt = q.params.dt
    x = q.rho / np.sqrt(4.0 * dt)
    tau = q.rho0 / (2.0 * np.sqrt(dt))
    tau2 = tau * tau

    coef = tau  # tau^(2m+1)/(2m+1)!, carries any rescaling of the Hermite values
    h_even = 1.0  # H_{2m}(x)
    h_odd = 2.0 * x  # H_{2m+1}(x)
    total = 0.0
    quiet = 0
    residual = np.inf
    m = 0
    for m in range(cfg.max_terms):
        term = coef * h_odd
        total += term
        residual = abs(term) / abs(total) if total != 0 else np.inf
        quiet = quiet + 1 if residual < cfg.relative_tolerance else 0
        if quiet >= 2:
            break
        n = 2 * m + 1
        h_next_even = 2.0 * x * h_odd - 2.0 * n * h_even
        h_next_odd = 2.0 * x * h_next_even - 2.0 * (n + 1) * h_odd
        h_even, h_odd = h_next_even, h_next_odd
        coef *= tau2 / ((n + 1) * (n + 2))
        if abs(h_odd) > 1e200:
            h_even *= 1e-200
            h_odd *= 1e-200
            coef *= 1e200
    else:
        if strict and residual >= cfg.relative_tolerance:
            raise NonConvergenceError(
                f"Hermite series did not converge in {cfg.max_terms} terms", residual
            )

    prefactor = np.exp(-x * x) / (4.0 * np.pi * np.sqrt(np.pi * dt) * np.sinh(q.rho0))
    return float(prefactor * total), m + 1


def eval_laplace_G(lq: LaplaceQuery) -> float:
    """Laplace transform in time of ``g`` for ``rho > rho0``.

    ``G = sinh(kappa rho0) exp(-kappa rho) / (4 pi D kappa sinh rho0)`` with
    ``kappa = sqrt(s/D)``; the ``C0`` term vanishes.
    """
    k = lq.kappa
    d = lq.diffusion_constant
    log_ratio = logsinh(k * lq.rho0) - logsinh(lq.rho0)
    main = np.exp(log_ratio - k * lq.rho) / (4.0 * np.pi * d * k)
    return float(C0 * np.exp(-k * lq.rho) + main)


def laplace_transform_g(rho, rho0, s, diffusion_constant):
    """Numerical ``int_0^inf g(rho, t) exp(-s t) dt`` by adaptive quadrature."""
    d = diffusion_constant

    def integrand(t):
        if t <= 0:
            return 0.0
        return float(np.exp(log_g(rho, rho0, d * t) - s * t))

    # g(rho, t) peaks near t ~ (rho - rho0)^2 / (2D) and decays like t^(-3/2)
    t_peak = max((rho - rho0) ** 2 / (2.0 * d), 1e-3)
    breaks = [0.0, t_peak, 10.0 * t_peak]
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
        total += val
    val, _ = integrate.quad(integrand, breaks[-1], np.inf, epsabs=0.0, epsrel=1e-11, limit=200)
    return total + val


def default_grid(rho0: float, params: DiffusionParams, n_points: int = 2049) -> RadialGrid:
    """Grid on ``[0, tail_cutoff]``."""
    return RadialGrid(rho_max=tail_cutoff(rho0, params.dt), n_points=n_points)


def normalization_integral(rho0, params: DiffusionParams, grid: RadialGrid = None, *, log_density=None):
    """``4 pi int_0^rho_max f sinh^2(rho) d rho`` by adaptive Gauss-Kronrod quadrature.

    ``log_density`` replaces the kernel by another log density of ``rho``
    (used to check the ``f1`` component).  A :class:`TailTruncationWarning`
    is emitted when the mass beyond ``grid.rho_max`` exceeds 1e-10.
    """
    if not rho0 >= 0:
        raise DomainError("rho0 must be >= 0")
    dt = params.dt
    if grid is None:
        grid = default_grid(rho0, params)
    if log_density is None:
        def log_density(r):
            return log_kernel(r, rho0, dt)

    def integrand(r):
        if r <= 0:
            return 0.0
        return float(np.exp(np.log(4.0 * np.pi) + 2.0 * logsinh(r) + log_density(r)))

    peak = rho0 + 2.0 * dt
    total, _ = integrate.quad(
        integrand, 0.0, grid.rho_max, points=[peak] if peak < grid.rho_max else None,
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400,
    )
    tail, _ = integrate.quad(integrand, grid.rho_max, np.inf, epsabs=1e-14, limit=200)
    if tail > TAIL_WARN:
        warnings.warn(f"mass beyond rho_max={grid.rho_max:g} is {tail:.2e}", TailTruncationWarning)
    return total


def log_f1(rho, dt):
    """Log of the ``f1`` component: the origin-source kernel."""
    return log_kernel_origin(rho, dt)


def pde_terms(q: KernelQuery, h_rho: float, h_t: float):
    """Central-difference estimates of both sides of the radial diffusion equation.

    Returns ``(df/dt, (D/sinh^2) d/drho(sinh^2 df/drho))`` at ``q``.
    """
    if q.rho < 2 * h_rho:
        raise DomainError("rho must be at least 2*h_rho")
    if q.params.time < 2 * h_t:
        raise DomainError("time must be at least 2*h_t")
    d = q.params.diffusion_constant
    t = q.params.time
    r = q.rho

    def f(rr, tt):
        return float(np.exp(log_kernel(rr, q.rho0, d * tt)))

    dfdt = (f(r, t + h_t) - f(r, t - h_t)) / (2.0 * h_t)
    f0 = f(r, t)
    s_plus = np.sinh(r + 0.5 * h_rho) ** 2
    s_minus = np.sinh(r - 0.5 * h_rho) ** 2
    flux = s_plus * (f(r + h_rho, t) - f0) - s_minus * (f0 - f(r - h_rho, t))
    rhs = d * flux / (h_rho * h_rho * np.sinh(r) ** 2)
    return dfdt, rhs


def pde_residual(q: KernelQuery, h_rho: float, h_t: float) -> float:
    """``|df/dt - D sinh^-2 d/drho(sinh^2 df/drho)|`` by central differences."""
    dfdt, rhs = pde_terms(q, h_rho, h_t)
    return abs(dfdt - rhs)


def chapman_kolmogorov(rho, rho0, t1, t2, diffusion_constant=1.0):
    """Compose the kernel over ``t1`` then ``t2``.

    Returns ``(composed, direct)`` where ``composed`` integrates over the
    intermediate radius and ``direct`` is the kernel at ``t1 + t2``.
    """
    d = diffusion_constant
    dt1, dt2 = d * t1, d * t2
    log4pi = np.log(4.0 * np.pi)

    def integrand(r):
        if r <= 0:
            return 0.0
        return float(np.exp(
            log_kernel(rho, r, dt1) + log_kernel(r, rho0, dt2) + log4pi + 2.0 * logsinh(r)
        ))

    upper = tail_cutoff(max(rho, rho0), max(dt1, dt2))
    pts = [p for p in (rho, rho0) if 0 < p < upper]
    composed, _ = integrate.quad(integrand, 0.0, upper, points=pts or None,
                                 epsabs=0.0, epsrel=1e-12, limit=400)
    direct = float(np.exp(log_kernel(rho, rho0, dt1 + dt2)))
    return composed, direct
