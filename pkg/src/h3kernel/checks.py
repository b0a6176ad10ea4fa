"""Verification suites run by ``h3kernel check``.

Each suite returns :class:`CheckResult` records comparing a measured error
with its tolerance.  Default tolerances live in :data:`TOLERANCES` and can
be overridden by name.
"""

from dataclasses import dataclass

import mpmath
import numpy as np

from .kernel import (
    KernelQuery, LaplaceQuery, SeriesConfig, chapman_kolmogorov, eval_g,
    eval_hermite_series, eval_laplace_G, laplace_transform_g, log_kernel,
    log_kernel_origin, normalization_integral, pde_residual, pde_terms,
)
from .params import DiffusionParams
from .pde import oracle_error

TOLERANCES = {
    "limit.max_rel_diff": 1e-6,
    "normalization.max_abs_error": 1e-8,
    "series.max_rel_error": 1e-10,
    "series.max_terms": 40,
    "laplace.max_rel_error": 1e-6,
    "pde.residual_rel": 1e-6,
    "pde.l2_rel_error": 1e-3,
    "pde.ratio_low": 3.2,
    "pde.ratio_high": 4.8,
    "pde.mass_drift": 1e-6,
    "image.max_rel_diff": 1e-12,
    "semigroup.max_rel_error": 1e-6,
    "mc.ks_cdf_over_critical": 1.0,
    "mc.ks_sde": 0.02,
    "spectrum.max_mass_error": 1e-6,
    "spectrum.ks_mc": 0.01,
}


@dataclass
class CheckResult:
    suite: str
    metric: str
    value: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"suite={self.suite} metric={self.metric} value={self.value:.6e} "
                f"tolerance={self.tolerance:.6e} status={status}")


def _below(suite, metric, value, tol):
    return CheckResult(suite, metric, float(value), tol[f"{suite}.{metric}"],
                       bool(value < tol[f"{suite}.{metric}"]))


def image_form_g(rho, rho0, dt, dps=40):
    """``g`` as a difference of Gaussians centred at ``+-rho0``.

    Evaluated with ``dps`` decimal digits; the difference cancels badly in
    double precision when ``rho*rho0/dt`` is small.
    """
    with mpmath.workdps(dps):
        rho, rho0, dt = mpmath.mpf(rho), mpmath.mpf(rho0), mpmath.mpf(dt)
        norm = 1 / (4 * mpmath.pi * mpmath.sinh(rho0) * mpmath.sqrt(4 * mpmath.pi * dt))
        val = norm * (mpmath.exp(-(rho - rho0) ** 2 / (4 * dt)) - mpmath.exp(-(rho + rho0) ** 2 / (4 * dt)))
        return float(val)


def suite_limit(tol, **_):
    worst = 0.0
    for rho in (0.1, 0.5, 1, 2, 5, 10, 20):
        for dt in (0.01, 0.1, 1, 10):
            # exact relative difference, also where the densities underflow
            diff = log_kernel(rho, 1e-12, dt) - log_kernel_origin(rho, dt)
            worst = max(worst, abs(np.expm1(diff)))
    return [_below("limit", "max_rel_diff", worst, tol)]


def suite_normalization(tol, **_):
    worst = 0.0
    for rho0 in (0.0, 0.5, 2.0, 5.0):
        for dt in (0.05, 0.5, 5.0):
            worst = max(worst, abs(normalization_integral(rho0, DiffusionParams(1.0, dt)) - 1.0))
    return [_below("normalization", "max_abs_error", worst, tol)]


def suite_series(tol, seed=42, n_points=100, **_):
    rng = np.random.default_rng(seed)
    worst, most_terms = 0.0, 0
    cfg = SeriesConfig(int(tol["series.max_terms"]), 1e-13)
    for _ in range(n_points):
        dt = 10 ** rng.uniform(-2, 1)
        tau = rng.uniform(0.01, 2.0)
        x = rng.uniform(0.01, 4.0)
        rho0, rho = 2 * tau * np.sqrt(dt), 2 * x * np.sqrt(dt)
        params = DiffusionParams(1.0, dt)
        val, used = eval_hermite_series(KernelQuery(rho, rho0, params), cfg)
        ref = eval_g(rho, rho0, params)
        worst = max(worst, abs(val - ref) / abs(ref))
        most_terms = max(most_terms, used)
    return [
        _below("series", "max_rel_error", worst, tol),
        CheckResult("series", "max_terms", most_terms, tol["series.max_terms"],
                    most_terms <= tol["series.max_terms"]),
    ]


def suite_laplace(tol, **_):
    worst = 0.0
    for s in (0.5, 1.0, 4.0):
        exact = eval_laplace_G(LaplaceQuery(2.0, 1.0, s, 1.0))
        num = laplace_transform_g(2.0, 1.0, s, 1.0)
        worst = max(worst, abs(num - exact) / exact)
    return [_below("laplace", "max_rel_error", worst, tol)]


def suite_image(tol, seed=42, n_points=1000, **_):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        dt = 10 ** rng.uniform(-2, 1)
        rho0 = rng.uniform(1e-3, 5.0)
        rho = rng.uniform(1e-3, 5.0)
        g = eval_g(rho, rho0, DiffusionParams(1.0, dt))
        ref = image_form_g(rho, rho0, dt)
        worst = max(worst, abs(g - ref) / abs(ref))
    return [_below("image", "max_rel_diff", worst, tol)]


def suite_pde(tol, **_):
    q = KernelQuery(1.0, 0.5, DiffusionParams(1.0, 1.0))
    dfdt, _ = pde_terms(q, 1e-4, 1e-4)
    res_rel = pde_residual(q, 1e-4, 1e-4) / abs(dfdt)
    coarse = oracle_error(1.0, 0.01, 0.5, 1.0, 15.0, 0.01, 500)
    fine = oracle_error(1.0, 0.01, 0.5, 1.0, 15.0, 0.005, 1000)
    ratio = coarse.l2_error / fine.l2_error
    return [
        _below("pde", "residual_rel", res_rel, tol),
        _below("pde", "l2_rel_error", coarse.l2_error, tol),
        CheckResult("pde", "ratio_low", ratio, tol["pde.ratio_low"], ratio >= tol["pde.ratio_low"]),
        CheckResult("pde", "ratio_high", ratio, tol["pde.ratio_high"], ratio <= tol["pde.ratio_high"]),
        _below("pde", "mass_drift", coarse.mass_drift, tol),
    ]


def suite_semigroup(tol, **_):
    worst = 0.0
    for t1, t2 in ((0.2, 0.3), (0.5, 0.5)):
        composed, direct = chapman_kolmogorov(1.5, 0.7, t1, t2, 1.0)
        worst = max(worst, abs(composed - direct) / direct)
    return [_below("semigroup", "max_rel_error", worst, tol)]


def suite_mc(tol, seed=42, n_samples=100_000, **_):
    from .stochastic import (SdeConfig, exact_radial_cdf, ks_critical, ks_distance,
                             sample_inverse_cdf, simulate_sde)

    p = DiffusionParams(1.0, 1.0)
    batch = sample_inverse_cdf(n_samples, 0.0, p, seed)
    ks = ks_distance(batch.values, lambda r: exact_radial_cdf(r, 0.0, p.dt))
    p2 = DiffusionParams(1.0, 0.5)
    sde = simulate_sde(n_samples, 1.0, p2, SdeConfig.for_params(p2, 1e-4), seed)
    ks_sde = ks_distance(sde.values, lambda r: exact_radial_cdf(r, 1.0, p2.dt))
    return [
        _below("mc", "ks_cdf_over_critical", ks / ks_critical(n_samples), tol),
        _below("mc", "ks_sde", ks_sde, tol),
    ]


def suite_spectrum(tol, seed=42, n_samples=1_000_000, **_):
    from .spectra import (SpectrumRequest, cumulative_spectrum, pt_density, rapidity_grid,
                          sample_pt, total_mass)
    from .stochastic import ks_distance

    m = 0.14
    worst = 0.0
    for rho0 in (0.0, 1.0):
        for dt in (0.5, 2.0):
            worst = max(worst, abs(total_mass(m, rho0, DiffusionParams(1.0, dt)) - 1.0))
    p = DiffusionParams(1.0, 0.5)
    grid = rapidity_grid(m, 1.0, p, 4000)
    cdf = cumulative_spectrum(pt_density(SpectrumRequest(m, grid, 1.0, p)))
    pts = sample_pt(n_samples, m, 1.0, p, seed)
    ks = ks_distance(pts, lambda q: np.interp(q, grid, cdf, left=0.0, right=1.0))
    return [_below("spectrum", "max_mass_error", worst, tol), _below("spectrum", "ks_mc", ks, tol)]


SUITES = {
    "limit": suite_limit,
    "normalization": suite_normalization,
    "series": suite_series,
    "laplace": suite_laplace,
    "image": suite_image,
    "pde": suite_pde,
    "semigroup": suite_semigroup,
    "mc": suite_mc,
    "spectrum": suite_spectrum,
}


def run_suites(names, overrides=None, **options):
    tol = dict(TOLERANCES)
    tol.update(overrides or {})
    results = []
    for name in names:
        results.extend(SUITES[name](tol, **options))
    return results
