"""Radial heat kernel of Brownian motion in hyperbolic 3-space.

Closed-form evaluation and its cross-checks (Hermite series, Laplace
transform, image form, Crank-Nicolson, Monte Carlo), plus transverse
momentum spectra and a chi-square fit built on top of the kernel.
"""

from .errors import (DomainError, NonConvergenceError, NumericalError, ResolutionError,
                     StepSizeError, TailTruncationWarning)
from .fit import DataSet, FitParams, FitProblem, FitResult, chi2, ingest_csv, minimize
from .kernel import (KernelQuery, LaplaceQuery, LogDensity, SeriesConfig, eval_g,
                     eval_hermite_series, eval_kernel, eval_kernel_origin, eval_laplace_G,
                     log_kernel, log_kernel_origin, normalization_integral)
from .params import DiffusionParams, RadialGrid
from .pde import SolverRun, evolve, evolve_with_report
from .spectra import ParticleKinematics, Spectrum, SpectrumRequest, pt_density, rho_from_momentum
from .stochastic import SampleBatch, SdeConfig, sample_inverse_cdf, simulate_sde

__version__ = "0.1.0"
