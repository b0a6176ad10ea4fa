"""Log-space hyperbolic helpers used by the kernel evaluators."""

import math

import numpy as np

LOG2 = np.log(2.0)

#: Above this argument ``log(sinh x)`` is evaluated through its exponential form.
LOGSINH_CROSSOVER = 20.0

#: Below this argument ``log(sinh x / x)`` uses its Taylor expansion.
SINHC_TAYLOR_MAX = 1.0

# 1/(2k+1)! for k = 1..10; the truncation error at x = 1 is below 1e-21
_SINHC_COEF = np.array([1.0 / math.factorial(2 * k + 1) for k in range(1, 11)])


def logsinh(x):
    r"""Natural log of :math:`\sinh x` for ``x > 0``, without overflow.

    .. math::
        \log\sinh x = x - \log 2 + \log(1 - e^{-2x})

    is used for ``x > LOGSINH_CROSSOVER``; below that the direct form is exact
    to rounding and keeps full relative precision near 0.
    """
    x = np.asarray(x, dtype=float)
    big = x > LOGSINH_CROSSOVER
    xs = np.where(big, 1.0, x)
    with np.errstate(divide="ignore"):
        small = np.log(np.sinh(xs))
    xb = np.where(big, x, LOGSINH_CROSSOVER + 1.0)
    large = xb - LOG2 + np.log1p(-np.exp(-2.0 * xb))
    out = np.where(big, large, small)
    return out[()] if out.ndim == 0 else out


def log_sinh_excess(x):
    """``log(sinh x) - x`` for ``x > 0``; bounded above by ``-log 2``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(-np.expm1(-2.0 * x)) - LOG2
    return out[()] if out.ndim == 0 else out


def log_sinhc(x):
    """``log(sinh x / x)`` for ``x >= 0``, equal to 0 at the origin."""
    x = np.abs(np.asarray(x, dtype=float))
    tiny = x < SINHC_TAYLOR_MAX
    x2 = np.where(tiny, x, 0.0) ** 2
    # sinh(x)/x - 1 summed directly, so the log keeps full relative precision
    taylor = np.log1p(x2 * np.polynomial.polynomial.polyval(x2, _SINHC_COEF))
    xl = np.where(tiny, 1.0, x)
    direct = logsinh(xl) - np.log(xl)
    out = np.where(tiny, taylor, direct)
    return out[()] if out.ndim == 0 else out


def coth(x):
    """Hyperbolic cotangent, ``1/tanh(x)``."""
    return 1.0 / np.tanh(x)
