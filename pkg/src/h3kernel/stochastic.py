"""Monte Carlo samplers whose law should be the radial kernel.

Two independent routes:

* inverse-CDF sampling of the exact radial density ``4 pi f sinh^2(rho)``
  from a cumulative table built by adaptive Gauss-Legendre quadrature;
* Euler-Maruyama simulation of ``d rho = 2 D coth(rho) dt + sqrt(2 D) dW``,
  the radial process generated by the diffusion operator, reflected at 0.

Random streams are keyed by ``(seed, chunk index)`` with fixed-size chunks,
so results do not depend on how many worker threads are used.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from . import csvio
from .errors import DomainError, StepSizeError, TailTruncationWarning
from .kernel import log_kernel
from .params import DiffusionParams, tail_cutoff
from .special import logsinh

CHUNK = 1 << 16
TABLE_TOL = 1e-13

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


@dataclass
class SampleBatch:
    values: np.ndarray
    seed: int
    generator_id: str
    meta: dict = field(default_factory=dict)

    def to_csv(self, target=None):
        meta = {"seed": self.seed, "method": self.generator_id, **self.meta}
        csvio.write_csv(target, {"rho": self.values}, meta)


@dataclass(frozen=True)
class SdeConfig:
    """Time discretization of the radial SDE.

    ``reflection_epsilon=None`` selects ``sqrt(2 D step)``, the smallest guard
    compatible with the step (see :func:`simulate_sde`).
    """

    step: float
    n_steps: int
    reflection_epsilon: float = None

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError("step must be > 0")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise DomainError("n_steps must be a non-negative integer")
        if self.reflection_epsilon is not None and not self.reflection_epsilon > 0:
            raise DomainError("reflection_epsilon must be > 0")

    @classmethod
    def for_params(cls, params: DiffusionParams, step: float, reflection_epsilon=None):
        n = max(1, int(round(params.time / step)))
        return cls(params.time / n, n, reflection_epsilon)

    def epsilon(self, D: float) -> float:
        if self.reflection_epsilon is None:
            return float(np.sqrt(2.0 * D * self.step))
        return self.reflection_epsilon


def radial_density(rho, rho0, dt):
    """``4 pi f(rho, rho0, t) sinh^2(rho)``, the density of the radius."""
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.log(4.0 * np.pi) + 2.0 * logsinh(np.maximum(rho, 0.0)) + log_kernel(
            np.maximum(rho, 0.0), rho0, dt
        )
    return np.where(rho > 0, np.exp(logp), 0.0)


def exact_radial_cdf(r, rho0, dt):
    """Closed-form ``P(rho <= r)``.

    Integrating ``sinh(rho)`` against the two image Gaussians (variance
    ``2 dt``) gives normal CDFs; the ``rho0 -> 0`` limit is taken analytically.
    Independent of any quadrature.
    """
    r = np.asarray(r, dtype=float)
    sig = np.sqrt(2.0 * dt)
    if rho0 < 1e-7:
        a = (r - 2.0 * dt) / sig
        b = (-r - 2.0 * dt) / sig
        phi = lambda z: np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)  # noqa: E731
        out = ndtr(a) - ndtr(b) - (phi(a) - phi(b)) / sig
    else:
        e2 = np.exp(-2.0 * rho0)
        up = 1.0 / (1.0 - e2)  # e^rho0 / (2 sinh rho0)
        dn = e2 / (1.0 - e2)  # e^-rho0 / (2 sinh rho0)
        plus = ndtr((r - rho0 - 2 * dt) / sig) - ndtr((-r - rho0 - 2 * dt) / sig)
        minus = ndtr((r - rho0 + 2 * dt) / sig) - ndtr((-r - rho0 + 2 * dt) / sig)
        out = up * plus - dn * minus
    out = np.clip(out, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def _gl(fun, a, b, x=_GL_X, w=_GL_W):
    """Fixed Gauss-Legendre on each of the intervals ``[a_k, b_k]``."""
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b) + half * x
    return np.sum(w * fun(pts), axis=-1) * half[..., 0]


class CdfTable:
    """Cumulative table of the radial law with exact in-panel refinement."""

    def __init__(self, rho0, params: DiffusionParams, upper=None, tol=TABLE_TOL):
        self.rho0 = float(rho0)
        self.dt = params.dt
        self.upper = tail_cutoff(self.rho0, self.dt) if upper is None else float(upper)
        self._pdf = lambda r: radial_density(r, self.rho0, self.dt)

        edges = np.linspace(0.0, self.upper, 65)
        for _ in range(40):
            a, b = edges[:-1], edges[1:]
            coarse = _gl(self._pdf, a, b, _GL8_X, _GL8_W)
            fine = _gl(self._pdf, a, b)
            bad = np.abs(fine - coarse) > tol
            if not bad.any():
                break
            mids = 0.5 * (a[bad] + b[bad])
            edges = np.sort(np.concatenate([edges, mids]))
        masses = _gl(self._pdf, edges[:-1], edges[1:])
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        tail, _ = integrate.quad(self._pdf, self.upper, np.inf, epsabs=1e-15)
        if tail > 1e-10:
            warnings.warn(f"radial mass beyond {self.upper:g} is {tail:.2e}", TailTruncationWarning)
        self.total = cum[-1]
        self.edges = edges
        self.values = cum / self.total

    def pdf(self, r):
        return self._pdf(r) / self.total

    def cdf(self, r):
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.upper)
        k = np.clip(np.searchsorted(self.edges, r, side="right") - 1, 0, self.edges.size - 2)
        part = _gl(self._pdf, self.edges[k], r) / self.total
        out = self.values[k] + part
        return out[()] if out.ndim == 0 else out

    def ppf(self, u, max_iter=60):
        """Invert the table: bisection on the nodes, then safeguarded Newton."""
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(self.values, u, side="right") - 1, 0, self.edges.size - 2)
        lo, hi = self.edges[k], self.edges[k + 1]
        c_lo = self.values[k]
        span = self.values[k + 1] - c_lo
        frac = np.where(span > 0, (u - c_lo) / np.where(span > 0, span, 1.0), 0.5)
        x = lo + frac * (hi - lo)
        active = np.arange(u.size)
        for _ in range(max_iter):
            xa = x[active]
            g = c_lo[active] + _gl(self._pdf, self.edges[k[active]], xa) / self.total - u[active]
            lo[active] = np.where(g < 0, xa, lo[active])
            hi[active] = np.where(g > 0, xa, hi[active])
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = xa - g / self.pdf(xa)
            la, ha = lo[active], hi[active]
            ok = (newton >= la) & (newton <= ha) & np.isfinite(newton)
            solved = np.abs(g) <= 1e-15
            x_new = np.where(solved, xa, np.where(ok, newton, 0.5 * (la + ha)))
            x[active] = x_new
            moving = (np.abs(x_new - xa) > 1e-13 * np.maximum(1.0, xa)) & ~solved
            active = active[moving]
            if active.size == 0:
                break
        return x

    def mean(self):
        val, _ = integrate.quad(lambda r: r * float(self.pdf(r)), 0.0, self.upper,
                                points=[min(self.rho0 + 2 * self.dt, self.upper / 2)],
                                epsabs=1e-13, epsrel=1e-12, limit=400)
        return val

    def moment(self, k):
        val, _ = integrate.quad(lambda r: r ** k * float(self.pdf(r)), 0.0, self.upper,
                                points=[min(self.rho0 + 2 * self.dt, self.upper / 2)],
                                epsabs=1e-13, epsrel=1e-12, limit=400)
        return val


def _rng(seed, chunk):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


def _chunked(n, seed, job, workers=None):
    sizes = [min(CHUNK, n - start) for start in range(0, n, CHUNK)]
    tasks = [(_rng(seed, c), size) for c, size in enumerate(sizes)]
    if workers and workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda t: job(*t), tasks))
    else:
        parts = [job(*t) for t in tasks]
    return np.concatenate(parts) if parts else np.empty(0)


def sample_inverse_cdf(n, rho0, params: DiffusionParams, seed=42, *, table=None, workers=None):
    """Draw ``n`` radii from the exact radial law by inverting its CDF table."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if not rho0 >= 0:
        raise DomainError("rho0 must be >= 0")
    table = table or CdfTable(rho0, params)
    values = _chunked(int(n), seed, lambda rng, size: table.ppf(rng.random(size)), workers)
    meta = {"rho0": csvio.fmt(rho0), "D": csvio.fmt(params.diffusion_constant),
            "t": csvio.fmt(params.time)}
    return SampleBatch(values, seed, "cdf", meta)


def simulate_sde(n, rho0, params: DiffusionParams, cfg: SdeConfig, seed=42, *, workers=None):
    """Terminal radii of ``n`` Euler-Maruyama paths.

    Each step applies ``rho += 2 D coth(rho) dt + sqrt(2 D dt) Z``, then
    ``rho = max(|rho|, eps)``.

    Raises
    ------
    StepSizeError
        If ``2 D dt > eps**2``: the drift kick from the guard would exceed
        the typical diffusive step many times over.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if not rho0 >= 0:
        raise DomainError("rho0 must be >= 0")
    D = params.diffusion_constant
    eps = cfg.epsilon(D)
    if cfg.n_steps and not np.isclose(cfg.step * cfg.n_steps, params.time, rtol=1e-9, atol=0):
        raise DomainError("step * n_steps must equal params.time")
    if 2.0 * D * cfg.step > eps * eps * (1.0 + 1e-12):
        raise StepSizeError(f"2*D*step = {2 * D * cfg.step:.3g} exceeds epsilon^2 = {eps * eps:.3g}")
    # an origin start needs one guard step off 0; with no steps the law is the source itself
    start = rho0 if rho0 > 0 or not cfg.n_steps else eps
    drift = 2.0 * D * cfg.step
    vol = np.sqrt(2.0 * D * cfg.step)

    def job(rng, size):
        r = np.full(size, float(start))
        for _ in range(cfg.n_steps):
            r += drift / np.tanh(r) + vol * rng.standard_normal(size)
            np.abs(r, out=r)
            np.maximum(r, eps, out=r)
        return r

    values = _chunked(int(n), seed, job, workers)
    meta = {"rho0": csvio.fmt(rho0), "D": csvio.fmt(D), "t": csvio.fmt(params.time),
            "step": csvio.fmt(cfg.step), "epsilon": csvio.fmt(eps)}
    return SampleBatch(values, seed, "sde", meta)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov sup distance between the sample ECDF and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_critical(n, level=0.01) -> float:
    """Asymptotic KS critical value; 1.63/sqrt(n) at the 1% level."""
    c = {0.01: 1.63, 0.05: 1.36, 0.1: 1.22}[level]
    return c / np.sqrt(n)
