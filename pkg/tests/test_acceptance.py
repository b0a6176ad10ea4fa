"""Acceptance gate: each criterion at its stated tolerance and time budget.

Every test appends ``criterion N <name>: ... PASS|FAIL`` to the session
summary, whether or not the assertion holds.
"""

import time

import mpmath
import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from h3kernel.fit import FitParams, FitProblem, minimize, synthetic_dataset
from h3kernel.kernel import (
    KernelQuery, LaplaceQuery, SeriesConfig, chapman_kolmogorov, eval_g, eval_hermite_series,
    eval_kernel, eval_kernel_origin, eval_laplace_G, laplace_transform_g, normalization_integral,
)
from h3kernel.params import DiffusionParams
from h3kernel.pde import oracle_error
from h3kernel.spectra import (
    SpectrumRequest, cumulative_spectrum, pt_density, rapidity_grid, sample_pt, total_mass,
)
from h3kernel.stochastic import (
    SdeConfig, exact_radial_cdf, ks_critical, ks_distance, sample_inverse_cdf, simulate_sde,
)


class Gate:
    def __init__(self, number, name, budget):
        self.number, self.name, self.budget = number, name, budget
        self.items = []

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def check(self, label, value, ok, tol):
        self.items.append((label, value, bool(ok), tol))

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        in_time = elapsed < self.budget
        ok = exc_type is None and in_time and all(i[2] for i in self.items)
        parts = [f"{lab}={val:.3e} (tol {tol})" for lab, val, _, tol in self.items]
        if exc_type is not None:
            parts.append(f"error={exc_type.__name__}")
        parts.append(f"runtime={elapsed:.2f}s (limit {self.budget}s)")
        ACCEPTANCE_LINES.append(f"criterion {self.number} {self.name}: {'; '.join(parts)} "
                                f"{'PASS' if ok else 'FAIL'}")
        for lab, val, passed, tol in self.items:
            assert passed, f"{lab}={val} violates {tol}"
        assert in_time, f"runtime {elapsed:.2f}s exceeds {self.budget}s"
        return False


def test_criterion_01_limit():
    with Gate(1, "limit", 1.0) as g:
        worst = 0.0
        for rho in (0.1, 0.5, 1, 2, 5, 10, 20):
            for dt in (0.01, 0.1, 1, 10):
                p = DiffusionParams.from_product(dt)
                # relative difference taken in log space; some points underflow as plain floats
                a = eval_kernel(KernelQuery(rho, 1e-12, p)).log_value
                b = eval_kernel_origin(rho, p).log_value
                worst = max(worst, abs(np.expm1(a - b)))
        g.check("max_rel_diff", worst, worst < 1e-6, "< 1e-6")


def test_criterion_02_normalization():
    with Gate(2, "normalization", 5.0) as g:
        worst = 0.0
        for rho0 in (0.0, 0.5, 2.0, 5.0):
            for dt in (0.05, 0.5, 5.0):
                err = abs(normalization_integral(rho0, DiffusionParams.from_product(dt)) - 1.0)
                worst = max(worst, err)
        g.check("max_abs_error", worst, worst < 1e-8, "< 1e-8")


def test_criterion_03_series():
    rng = np.random.default_rng(42)
    with Gate(3, "series", 1.0) as g:
        worst, most = 0.0, 0
        cfg = SeriesConfig(40, 1e-13)
        for _ in range(100):
            dt = 10 ** rng.uniform(-2, 1)
            tau, x = rng.uniform(0.0, 2.0), rng.uniform(0.0, 4.0)
            rho0, rho = 2 * max(tau, 1e-6) * np.sqrt(dt), 2 * max(x, 1e-6) * np.sqrt(dt)
            p = DiffusionParams.from_product(dt)
            val, used = eval_hermite_series(KernelQuery(rho, rho0, p), cfg)
            worst = max(worst, abs(val / eval_g(rho, rho0, p) - 1.0))
            most = max(most, used)
        g.check("max_rel_error", worst, worst < 1e-10, "< 1e-10")
        g.check("max_terms", most, most <= 40, "<= 40")


def test_criterion_04_laplace():
    with Gate(4, "laplace", 10.0) as g:
        worst = 0.0
        for s in (0.5, 1.0, 4.0):
            exact = eval_laplace_G(LaplaceQuery(2.0, 1.0, s, 1.0))
            worst = max(worst, abs(laplace_transform_g(2.0, 1.0, s, 1.0) / exact - 1.0))
        g.check("max_rel_error", worst, worst < 1e-6, "< 1e-6")


def test_criterion_05_pde():
    with Gate(5, "pde", 60.0) as g:
        coarse = oracle_error(1.0, 0.01, 0.5, 1.0, 15.0, 0.01, 500)
        fine = oracle_error(1.0, 0.01, 0.5, 1.0, 15.0, 0.005, 1000)
        ratio = coarse.l2_error / fine.l2_error
        g.check("l2_rel_error", coarse.l2_error, coarse.l2_error < 1e-3, "< 1e-3")
        g.check("halving_ratio", ratio, 3.2 <= ratio <= 4.8, "in [3.2, 4.8]")


def _image_form(rho, rho0, dt):
    with mpmath.workdps(40):
        rho, rho0, dt = mpmath.mpf(rho), mpmath.mpf(rho0), mpmath.mpf(dt)
        pre = 1 / (4 * mpmath.pi * mpmath.sinh(rho0) * mpmath.sqrt(4 * mpmath.pi * dt))
        return float(pre * (mpmath.exp(-(rho - rho0) ** 2 / (4 * dt))
                            - mpmath.exp(-(rho + rho0) ** 2 / (4 * dt))))


def test_criterion_06_image():
    rng = np.random.default_rng(42)
    pts = [(rng.uniform(1e-3, 5.0), rng.uniform(1e-3, 5.0), 10 ** rng.uniform(-2, 1))
           for _ in range(1000)]
    refs = [_image_form(*p) for p in pts]
    with Gate(6, "image", 1.0) as g:
        vals = [eval_g(r, r0, DiffusionParams.from_product(dt)) for r, r0, dt in pts]
        worst = max(abs(v / ref - 1.0) for v, ref in zip(vals, refs))
        g.check("max_rel_diff", worst, worst < 1e-12, "< 1e-12")


def test_criterion_07_semigroup():
    with Gate(7, "semigroup", 10.0) as g:
        worst = 0.0
        for t1, t2 in ((0.2, 0.3), (0.5, 0.5)):
            composed, direct = chapman_kolmogorov(1.5, 0.7, t1, t2, 1.0)
            worst = max(worst, abs(composed / direct - 1.0))
        g.check("max_rel_error", worst, worst < 1e-6, "< 1e-6")


def test_criterion_08_monte_carlo():
    n = 100_000
    with Gate(8, "monte_carlo", 120.0) as g:
        p = DiffusionParams(1.0, 1.0)
        x = sample_inverse_cdf(n, 0.0, p, seed=42).values
        ks = ks_distance(x, lambda r: exact_radial_cdf(r, 0.0, p.dt))
        g.check("ks_cdf", ks, ks < ks_critical(n, 0.01), f"< {ks_critical(n, 0.01):.3e}")
        p = DiffusionParams(1.0, 0.5)
        y = simulate_sde(n, 1.0, p, SdeConfig.for_params(p, 1e-4), seed=42).values
        ks_sde = ks_distance(y, lambda r: exact_radial_cdf(r, 1.0, p.dt))
        g.check("ks_sde", ks_sde, ks_sde < 0.02, "< 0.02")


def test_criterion_09_spectrum():
    m = 0.14
    with Gate(9, "spectrum", 120.0) as g:
        worst = 0.0
        for rho0 in (0.0, 1.0):
            for dt in (0.5, 2.0):
                worst = max(worst, abs(total_mass(m, rho0, DiffusionParams.from_product(dt)) - 1.0))
        g.check("max_mass_error", worst, worst < 1e-6, "< 1e-6")
        p = DiffusionParams(1.0, 0.5)
        grid = rapidity_grid(m, 1.0, p, 4000)
        cdf = cumulative_spectrum(pt_density(SpectrumRequest(m, grid, 1.0, p)))
        pts = sample_pt(1_000_000, m, 1.0, p, seed=42)
        ks = ks_distance(pts, lambda q: np.interp(q, grid, cdf, left=0.0, right=1.0))
        g.check("ks_mc", ks, ks < 0.01, "< 0.01")


def test_criterion_10_fit():
    m = 0.14
    truth = FitParams(0.8, 1.2, 100.0)
    # design fixed before looking at any fit result: 20 log-spaced points, 3% noise, seed 42
    pt = np.geomspace(0.1, 20.0, 20)
    with Gate(10, "fit", 60.0) as g:
        data = synthetic_dataset(m, pt, truth, rel_noise=0.03, seed=42)
        res = minimize(FitProblem(data, m, FitParams(0.5, 0.8, 50.0)))
        for name, true in truth.as_dict().items():
            got = getattr(res.best_params, name)
            dev = abs(got / true - 1.0)
            g.check(f"{name}_rel_dev", dev, dev < 0.05, "< 0.05")
        g.check("converged", float(res.converged), res.converged, "== true")
