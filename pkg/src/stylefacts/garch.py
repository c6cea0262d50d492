"""GARCH(1,1) quasi-maximum-likelihood estimation, simulation and volatility bands.

The model for demeaned returns ``eps_t`` is::

    sigma2_t = omega + alpha * eps_{t-1}**2 + beta * sigma2_{t-1}

with ``sigma2_1`` set to the sample variance of ``eps``.  Estimation maximises
the Gaussian log-likelihood by Nelder-Mead over unconstrained coordinates::

    omega = var(eps) * exp(a)
    (alpha, beta) = (e^b, e^c) / (1 + e^b + e^c)

so every trial point satisfies ``omega > 0, alpha, beta > 0, alpha + beta < 1``.
"""

from __future__ import annotations

import datetime as dt
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import DegenerateSeriesError, DomainError, EstimationError, InsufficientDataError
from .series import ReturnSeries, as_array, business_days

__all__ = [
    "GarchParams",
    "GarchFit",
    "VolatilityBands",
    "garch_loglik",
    "garch_loglik_grad",
    "garch_fit",
    "garch_simulate",
    "volatility_bands",
    "DEFAULT_STARTS",
]

_LOG_2PI = math.log(2.0 * math.pi)

# (alpha, beta) start pairs; omega is set so the start matches the sample variance
DEFAULT_STARTS = ((0.05, 0.90), (0.10, 0.80), (0.15, 0.60), (0.03, 0.95), (0.30, 0.30))

MIN_OBS = 30
LOW_SAMPLE_OBS = 100


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise DomainError(f"omega must be > 0, got {self.omega!r}")
        if not (self.alpha >= 0 and self.beta >= 0):
            raise DomainError(f"alpha and beta must be >= 0, got {self.alpha!r}, {self.beta!r}")
        if not self.alpha + self.beta < 1:
            raise DomainError(f"alpha + beta must be < 1, got {self.alpha + self.beta!r}")

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)

    def as_tuple(self):
        return (self.omega, self.alpha, self.beta)


@dataclass(frozen=True, eq=False)
class GarchFit:
    params: GarchParams
    log_likelihood: float
    cond_variance: np.ndarray = field(repr=False)
    iterations: int
    converged: bool
    mean_subtracted: float
    starts: tuple = field(default=(), repr=False)

    @property
    def n(self) -> int:
        return len(self.cond_variance)

    @property
    def cond_volatility(self) -> np.ndarray:
        return np.sqrt(self.cond_variance)

    def standardized_residuals(self, r) -> np.ndarray:
        return (as_array(r) - self.mean_subtracted) / self.cond_volatility


def _variance_path(eps2, omega, alpha, beta, sigma2_1):
    n = len(eps2)
    out = np.empty(n)
    out[0] = sigma2_1
    if n > 1:
        drive = omega + alpha * eps2[:-1]
        out[1:] = lfilter([1.0], [1.0, -beta], drive, zi=[beta * sigma2_1])[0]
    return out


def _check_eps(eps):
    eps = as_array(eps)
    if len(eps) < 2:
        raise InsufficientDataError("GARCH likelihood needs at least 2 observations")
    return eps


def garch_loglik(eps, params: GarchParams):
    """Gaussian log-likelihood of demeaned returns and the conditional-variance path.

    Returns
    -------
    log_likelihood : float
    cond_variance : ndarray
    """
    eps = _check_eps(eps)
    if not isinstance(params, GarchParams):
        params = GarchParams(*params)
    eps2 = eps * eps
    sigma2 = _variance_path(eps2, *params.as_tuple(), float(eps.var()))
    ll = -0.5 * float(np.sum(_LOG_2PI + np.log(sigma2) + eps2 / sigma2))
    return ll, sigma2


def garch_loglik_grad(eps, params: GarchParams) -> np.ndarray:
    """Analytic gradient of :func:`garch_loglik` with respect to ``(omega, alpha, beta)``."""
    eps = _check_eps(eps)
    if not isinstance(params, GarchParams):
        params = GarchParams(*params)
    omega, alpha, beta = params.as_tuple()
    eps2 = eps * eps
    sigma2 = _variance_path(eps2, omega, alpha, beta, float(eps.var()))
    weight = -0.5 * (1.0 / sigma2 - eps2 / sigma2 ** 2)
    grad = np.empty(3)
    # d sigma2_t / d theta obeys the same recursion with a zero start
    for i, drive in enumerate((np.ones(len(eps) - 1), eps2[:-1], sigma2[:-1])):
        deriv = lfilter([1.0], [1.0, -beta], drive)
        grad[i] = float(weight[1:] @ deriv)
    return grad


def _to_params(u, var):
    a, b, c = u
    top = max(0.0, b, c)
    eb, ec, e0 = math.exp(b - top), math.exp(c - top), math.exp(-top)
    total = e0 + eb + ec
    return var * math.exp(a), eb / total, ec / total


def _from_params(omega, alpha, beta, var):
    rest = 1.0 - alpha - beta
    return np.array([math.log(omega / var), math.log(alpha / rest), math.log(beta / rest)])


def _objective(u, eps2, var):
    if not np.all(np.abs(u) < 700.0):
        return np.inf
    omega, alpha, beta = _to_params(u, var)
    if not omega > 0:
        return np.inf
    sigma2 = _variance_path(eps2, omega, alpha, beta, var)
    if not np.all(sigma2 > 0):
        return np.inf
    val = 0.5 * float(np.sum(_LOG_2PI + np.log(sigma2) + eps2 / sigma2))
    return val if math.isfinite(val) else np.inf


def garch_fit(
    r,
    starts=DEFAULT_STARTS,
    maxiter: int = 2000,
    fatol: float = 1e-8,
    simplex_step: float = 0.5,
) -> GarchFit:
    """Fit GARCH(1,1) to mean-subtracted returns by multi-start Nelder-Mead.

    Parameters
    ----------
    r : ReturnSeries or array_like
        Returns; the sample mean is removed before fitting.
    starts : sequence of (alpha, beta)
        Initial points; omega starts at ``var * (1 - alpha - beta)``.
    maxiter : int
        Iteration cap per start.
    fatol : float
        Convergence when the simplex's function-value spread drops below this.
    simplex_step : float
        Edge length of the initial simplex in the unconstrained coordinates.

    Raises
    ------
    InsufficientDataError
        Fewer than 30 observations.
    EstimationError
        No start produced a finite likelihood.
    """
    x = as_array(r)
    n = len(x)
    if n < MIN_OBS:
        raise InsufficientDataError(f"GARCH fit needs n >= {MIN_OBS}, got {n}")
    if n < LOW_SAMPLE_OBS:
        warnings.warn(f"GARCH fit on only {n} observations; estimates are unreliable", stacklevel=2)
    mean = float(x.mean())
    eps = x - mean
    eps2 = eps * eps
    var = float(eps.var())
    if not var > 0:
        raise DegenerateSeriesError("zero variance: GARCH is not identified")

    runs = []
    for alpha0, beta0 in starts:
        u0 = _from_params(var * (1.0 - alpha0 - beta0), alpha0, beta0, var)
        simplex = np.vstack([u0, u0 + simplex_step * np.eye(3)])
        f0 = _objective(u0, eps2, var)
        res = minimize(
            _objective, u0, args=(eps2, var), method="Nelder-Mead",
            options={"maxiter": maxiter, "maxfev": 4 * maxiter, "xatol": np.inf,
                     "fatol": fatol, "initial_simplex": simplex},
        )
        runs.append({
            "start": (var * (1.0 - alpha0 - beta0), alpha0, beta0),
            "start_loglik": -f0,
            "loglik": -float(res.fun),
            "params": _to_params(res.x, var),
            "iterations": int(res.nit),
            "converged": bool(res.status == 0),
            "message": str(res.message),
        })

    finite = [run for run in runs if math.isfinite(run["loglik"])]
    if not finite:
        raise EstimationError("no start produced a finite log-likelihood", {"starts": runs})
    best = max(finite, key=lambda run: run["loglik"])
    params = GarchParams(*best["params"])
    ll, sigma2 = garch_loglik(eps, params)
    return GarchFit(
        params=params,
        log_likelihood=ll,
        cond_variance=sigma2,
        iterations=best["iterations"],
        converged=best["converged"],
        mean_subtracted=mean,
        starts=tuple(runs),
    )


def garch_simulate(
    params: GarchParams,
    n: int,
    seed=None,
    innovation: str = "normal",
    nu: float = None,
    start=None,
) -> ReturnSeries:
    """Simulate ``n`` GARCH(1,1) returns with unit-variance i.i.d. innovations.

    ``innovation`` is ``"normal"`` or ``"student_t"`` (then ``nu > 2`` is
    required).  The variance recursion starts at the unconditional variance.
    Output is dated on consecutive business days from ``start``.
    """
    if not isinstance(params, GarchParams):
        params = GarchParams(*params)
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if innovation == "normal":
        z = rng.standard_normal(n)
    elif innovation == "student_t":
        if nu is None or not nu > 2:
            raise DomainError(f"student_t innovations need nu > 2, got {nu!r}")
        z = rng.standard_t(nu, n) * math.sqrt((nu - 2.0) / nu)
    else:
        raise DomainError(f"unknown innovation {innovation!r}")

    omega, alpha, beta = params.as_tuple()
    out = np.empty(n)
    s2 = params.unconditional_variance
    for t in range(n):
        e = math.sqrt(s2) * z[t]
        out[t] = e
        s2 = omega + alpha * e * e + beta * s2
    dates = business_days(start or dt.date(2000, 1, 3), n)
    return ReturnSeries("simulated", "daily", dates, out)


@dataclass(frozen=True, eq=False)
class VolatilityBands:
    dates: tuple
    normalized: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    k: float = 2.0

    def __len__(self):
        return len(self.normalized)

    def exceedance_rate(self) -> float:
        return float(np.mean(np.abs(self.normalized) > self.upper))


def volatility_bands(r: ReturnSeries, fit: GarchFit, k: float = 2.0) -> VolatilityBands:
    """Normalized returns with ``+/- k`` conditional-volatility bands.

    Both are divided by the model's unconditional volatility
    ``sqrt(omega / (1 - alpha - beta))``.
    """
    x = as_array(r)
    if len(x) != fit.n:
        raise DomainError("fit does not belong to this return series")
    scale = math.sqrt(fit.params.unconditional_variance)
    band = k * fit.cond_volatility / scale
    dates = r.dates if isinstance(r, ReturnSeries) else tuple(range(len(x)))
    return VolatilityBands(dates, (x - fit.mean_subtracted) / scale, band, -band, k)
