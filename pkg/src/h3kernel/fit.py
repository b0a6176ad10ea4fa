"""Chi-square fit of the p_T spectrum to measured yields.

Free parameters are the product ``Dt``, the source offset ``rho0`` and an
overall normalization.  Minimization is a Nelder-Mead simplex in log space
(``rho0`` is shifted by :data:`RHO0_FLOOR` so that 0 is reachable), folded
back into the parameter box when a vertex leaves it.
"""

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .params import DiffusionParams
from .spectra import SpectrumRequest, pt_density

log = logging.getLogger(__name__)

RHO0_FLOOR = 1e-9
MAX_EVALUATIONS = 2000
SPREAD_TOL = 1e-8
INITIAL_STEP = 0.1

DEFAULT_BOUNDS = {
    "dt_product": (1e-3, 50.0),
    "rho0": (0.0, 10.0),
    "norm": (1e-12, 1e12),
}


class DataError(ValueError):
    """Malformed or empty input data."""


@dataclass
class DataSet:
    pt: np.ndarray
    yields: np.ndarray
    sigma: np.ndarray
    source: str = ""
    rejected: list = field(default_factory=list)

    def __post_init__(self):
        self.pt = np.asarray(self.pt, dtype=float)
        self.yields = np.asarray(self.yields, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if not (self.pt.shape == self.yields.shape == self.sigma.shape) or self.pt.ndim != 1:
            raise DataError("pt, yields and sigma must be 1-D arrays of equal length")
        if self.pt.size == 0:
            raise DataError("empty dataset")
        if np.any(self.sigma <= 0):
            raise DataError("every sigma must be > 0")
        if np.any(self.pt <= 0):
            raise DataError("every pt must be > 0")
        order = np.argsort(self.pt, kind="stable")
        self.pt, self.yields, self.sigma = self.pt[order], self.yields[order], self.sigma[order]
        if np.any(np.diff(self.pt) <= 0):
            raise DataError("duplicate pt values")

    def __len__(self):
        return self.pt.size

    def scaled(self, c):
        """Yields and uncertainties multiplied by ``c``."""
        return DataSet(self.pt, self.yields * c, self.sigma * c, self.source)


def ingest_csv(path, column_map=None) -> DataSet:
    """Read ``pt, yield, sigma`` triples.

    ``column_map`` maps ``"pt"``, ``"yield"`` and ``"sigma"`` to a header name
    or a 0-based column index; by default the columns of those names are used
    when a header is present, otherwise the first three columns.  ``#`` lines
    are comments.  Rows with non-positive ``sigma`` or ``pt`` are dropped and
    listed in ``DataSet.rejected`` as ``(line_number, reason)``.
    """
    keys = ("pt", "yield", "sigma")
    column_map = dict(column_map or {})
    header = None
    rows = []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in raw]
            if not cells or not any(cells) or cells[0].startswith("#"):
                continue
            if header is None and not rows and not _numeric(cells[0]):
                header = cells
                continue
            rows.append((lineno, cells))

    index = {}
    for k in keys:
        col = column_map.get(k, k if header and k in header else keys.index(k))
        if isinstance(col, str):
            if not header or col not in header:
                raise DataError(f"column {col!r} not found in header")
            col = header.index(col)
        index[k] = int(col)

    pt, y, s, rejected = [], [], [], []
    for lineno, cells in rows:
        try:
            vals = {k: float(cells[i]) for k, i in index.items()}
        except (ValueError, IndexError) as exc:
            raise DataError(f"line {lineno}: cannot parse {cells!r} ({exc})") from None
        if not all(np.isfinite(v) for v in vals.values()):
            raise DataError(f"line {lineno}: non-finite value")
        if vals["sigma"] <= 0:
            rejected.append((lineno, f"sigma={vals['sigma']:g} is not positive"))
            continue
        if vals["pt"] <= 0:
            rejected.append((lineno, f"pt={vals['pt']:g} is not positive"))
            continue
        pt.append(vals["pt"])
        y.append(vals["yield"])
        s.append(vals["sigma"])
    for lineno, reason in rejected:
        log.warning("%s line %d rejected: %s", path, lineno, reason)
    if not pt:
        raise DataError(f"{path}: no usable data rows")
    return DataSet(pt, y, s, source=str(path), rejected=rejected)


def _numeric(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class FitParams:
    dt_product: float
    rho0: float
    norm: float

    def as_dict(self):
        return {"dt_product": self.dt_product, "rho0": self.rho0, "norm": self.norm}


@dataclass
class FitProblem:
    data: DataSet
    mass: float
    initial: FitParams
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError("mass must be > 0")
        merged = dict(DEFAULT_BOUNDS)
        merged.update(self.bounds)
        self.bounds = merged
        for name, (lo, hi) in self.bounds.items():
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise DomainError(f"bounds for {name} must be finite with lower < upper")
        if self.bounds["dt_product"][0] <= 0 or self.bounds["norm"][0] <= 0:
            raise DomainError("dt_product and norm must be bounded away from 0")
        if self.bounds["rho0"][0] < 0:
            raise DomainError("rho0 lower bound must be >= 0")
        for name, val in self.initial.as_dict().items():
            lo, hi = self.bounds[name]
            if not lo <= val <= hi:
                raise DomainError(f"initial {name}={val} outside [{lo}, {hi}]")

    @property
    def n_dof(self) -> int:
        return len(self.data) - 3


@dataclass
class FitResult:
    best_params: FitParams
    chi2: float
    n_dof: int
    converged: bool
    n_evaluations: int
    initial_chi2: float = None

    def report(self) -> dict:
        return {
            "params.dt_product": self.best_params.dt_product,
            "params.rho0": self.best_params.rho0,
            "params.norm": self.best_params.norm,
            "chi2": self.chi2,
            "n_dof": self.n_dof,
            "converged": self.converged,
            "n_evaluations": self.n_evaluations,
        }

    def to_text(self) -> str:
        return json.dumps(self.report(), indent=2)


def model_yields(problem: FitProblem, params: FitParams) -> np.ndarray:
    req = SpectrumRequest(problem.mass, problem.data.pt, params.rho0,
                          DiffusionParams.from_product(params.dt_product))
    return params.norm * pt_density(req).density


def chi2(problem: FitProblem, params: FitParams) -> float:
    """``sum(((norm * model - yield) / sigma)**2)``."""
    for name, val in params.as_dict().items():
        lo, hi = problem.bounds[name]
        if not lo <= val <= hi:
            raise DomainError(f"{name}={val} outside [{lo}, {hi}]")
    resid = (model_yields(problem, params) - problem.data.yields) / problem.data.sigma
    return float(np.dot(resid, resid))


def _to_log(p: FitParams):
    return np.log([p.dt_product, p.rho0 + RHO0_FLOOR, p.norm])


def _from_log(z) -> FitParams:
    e = np.exp(z)
    return FitParams(float(e[0]), float(max(e[1] - RHO0_FLOOR, 0.0)), float(e[2]))


def _fold(z, lo, hi):
    """Reflect each coordinate back into ``[lo, hi]``."""
    width = hi - lo
    t = np.mod(z - lo, 2.0 * width)
    return lo + np.where(t > width, 2.0 * width - t, t)


def _nelder_mead(fun, x0, lo, hi, max_evals, step=INITIAL_STEP):
    n = x0.size
    simplex = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] += step if x0[i] + step <= hi[i] else -step
        simplex.append(_fold(v, lo, hi))
    simplex = np.array(simplex)
    values = np.array([fun(v) for v in simplex])
    evals = n + 1
    converged = False
    while evals < max_evals:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if values[-1] - values[0] < SPREAD_TOL * (1.0 + abs(values[0])):
            converged = True
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = _fold(centroid + (centroid - worst), lo, hi)
        fr = fun(xr)
        evals += 1
        if fr < values[0]:
            xe = _fold(centroid + 2.0 * (centroid - worst), lo, hi)
            fe = fun(xe)
            evals += 1
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = _fold(centroid + 0.5 * (xr - centroid), lo, hi)
            else:
                xc = _fold(centroid + 0.5 * (worst - centroid), lo, hi)
            fc = fun(xc)
            evals += 1
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [fun(v) for v in simplex[1:]]
                evals += n
    best = int(np.argmin(values))
    return simplex[best], float(values[best]), evals, converged


def minimize(problem: FitProblem, max_evaluations=MAX_EVALUATIONS) -> FitResult:
    """Nelder-Mead in log-parameter space with one restart from the incumbent.

    Convergence means the spread of simplex values dropped below
    ``1e-8 * (1 + |best|)`` in the restarted run.  If the evaluation budget
    runs out first, the best point so far is returned with
    ``converged=False``.
    """
    b = problem.bounds
    lo = np.log([b["dt_product"][0], b["rho0"][0] + RHO0_FLOOR, b["norm"][0]])
    hi = np.log([b["dt_product"][1], b["rho0"][1] + RHO0_FLOOR, b["norm"][1]])

    def fun(z):
        return chi2(problem, _clip(_from_log(z), b))

    x0 = _to_log(problem.initial)
    f0 = fun(x0)
    x1, f1, e1, c1 = _nelder_mead(fun, x0, lo, hi, max_evaluations - 1)
    used = 1 + e1
    converged = False
    xb, fb = (x1, f1) if f1 <= f0 else (x0, f0)
    if c1 and used < max_evaluations:
        x2, f2, e2, converged = _nelder_mead(fun, xb, lo, hi, max_evaluations - used)
        used += e2
        if f2 <= fb:
            xb, fb = x2, f2
    log.info("fit finished: chi2=%.6g after %d evaluations (converged=%s)", fb, used, converged)
    return FitResult(_clip(_from_log(xb), b), fb, problem.n_dof, converged, used, f0)


def _clip(p: FitParams, bounds) -> FitParams:
    vals = {k: float(np.clip(v, *bounds[k])) for k, v in p.as_dict().items()}
    return FitParams(**vals)


def synthetic_dataset(mass, pt, truth: FitParams, rel_noise=0.03, seed=42) -> DataSet:
    """Yields ``norm * density`` with Gaussian noise of relative size ``rel_noise``."""
    req = SpectrumRequest(mass, np.asarray(pt, dtype=float), truth.rho0,
                          DiffusionParams.from_product(truth.dt_product))
    exact = truth.norm * pt_density(req).density
    sigma = rel_noise * exact
    rng = np.random.default_rng(seed)
    noisy = exact + sigma * rng.standard_normal(exact.size) if rel_noise > 0 else exact
    if rel_noise == 0:
        sigma = np.full_like(exact, 1e-3 * exact.max())
    return DataSet(req.pt_grid, noisy, sigma, source="synthetic")
