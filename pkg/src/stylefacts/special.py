"""Special functions and the reference distributions behind every p-value.

Scalar kernels are plain :mod:`math`; the distribution methods accept either
a scalar or an array and map elementwise.  Nothing here depends on scipy so
that scipy can serve as an independent oracle in the test-suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import wraps

import numpy as np

from .errors import DomainError

__all__ = [
    "ln_gamma",
    "erf",
    "erfc",
    "reg_inc_gamma",
    "reg_inc_gamma_upper",
    "reg_inc_beta",
    "Normal",
    "ChiSquare",
    "StudentT",
    "Kolmogorov",
    "Distribution",
    "cdf",
    "sf",
    "pdf",
    "quantile",
]

_EPS = 1e-16
_FPMIN = 1e-300
_MAXIT = 10_000
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def erf(x: float) -> float:
    return math.erf(x)


def erfc(x: float) -> float:
    return math.erfc(x)


# ---------------------------------------------------------------------------
# incomplete gamma
# ---------------------------------------------------------------------------

def _gamma_series(s, x):
    # P(s, x) by its power series, valid for x < s + 1
    ap = s
    total = delta = 1.0 / s
    for _ in range(_MAXIT):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _gamma_cont_frac(s, x):
    # Q(s, x) by modified Lentz, valid for x >= s + 1
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def _check_gamma_args(s, x):
    if not s > 0:
        raise DomainError(f"incomplete gamma requires s > 0, got {s!r}")
    if x < 0 or math.isnan(x):
        raise DomainError(f"incomplete gamma requires x >= 0, got {x!r}")


def reg_inc_gamma(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x)."""
    _check_gamma_args(s, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return _gamma_series(s, x)
    return 1.0 - _gamma_cont_frac(s, x)


def reg_inc_gamma_upper(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x), without cancellation."""
    _check_gamma_args(s, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return 1.0 - _gamma_series(s, x)
    return _gamma_cont_frac(s, x)


# ---------------------------------------------------------------------------
# incomplete beta
# ---------------------------------------------------------------------------

def _beta_cont_frac(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def _inc_beta(a, b, x, y):
    # I_x(a, b) with y = 1 - x supplied exactly by the caller
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x) / a
    return 1.0 - front * _beta_cont_frac(b, a, y) / b


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for ``a, b > 0`` and ``0 <= x <= 1``."""
    if not (a > 0 and b > 0):
        raise DomainError(f"incomplete beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete beta requires 0 <= x <= 1, got {x!r}")
    return _inc_beta(a, b, x, 1.0 - x)


# ---------------------------------------------------------------------------
# inversion helpers
# ---------------------------------------------------------------------------

def _elementwise(method):
    """Let a scalar method accept array_like input."""

    @wraps(method)
    def wrapper(self, x):
        if np.ndim(x) == 0:
            return method(self, float(x))
        arr = np.asarray(x, dtype=float)
        out = np.fromiter((method(self, v) for v in arr.ravel()), dtype=float, count=arr.size)
        return out.reshape(arr.shape)

    return wrapper


def _check_prob(p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile requires 0 < p < 1, got {p!r}")


def _invert(cdf, pdf, p, x0, lo=-math.inf, hi=math.inf, tol=1e-12):
    """Safeguarded Newton on ``cdf(x) = p`` keeping a shrinking bracket.

    Steps leaving the bracket are replaced by bisection (or by expansion
    while one side of the bracket is still unbounded).
    """
    x = x0
    for _ in range(500):
        f = cdf(x) - p
        if f == 0.0:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        dens = pdf(x)
        x_new = x - f / dens if dens > 0.0 else math.nan
        if not lo < x_new < hi:
            if math.isfinite(lo) and math.isfinite(hi):
                x_new = 0.5 * (lo + hi)
            elif f < 0.0:
                x_new = x + max(1.0, abs(x))
            else:
                x_new = x - max(1.0, abs(x))
        scale = max(1.0, abs(x_new))
        if abs(x_new - x) <= tol * scale or (hi - lo) <= tol * scale:
            return x_new
        x = x_new
    return x


# Acklam's rational approximation to the normal quantile (rel. error ~1e-9)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def _acklam(p):
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - 0.02425:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def _std_normal_cdf(z):
    return 0.5 * math.erfc(-z / _SQRT2)


def _std_normal_pdf(z):
    return math.exp(-0.5 * z * z) / _SQRT2PI


def _std_normal_quantile(p):
    z = _acklam(p)
    # two Halley polishes take the seed to full double precision
    for _ in range(2):
        if p < 0.5:
            e = _std_normal_cdf(z) - p
        else:
            # cdf(z) - p evaluated through the upper tail
            e = (1.0 - p) - 0.5 * math.erfc(z / _SQRT2)
        u = e * _SQRT2PI * math.exp(0.5 * z * z)
        z = z - u / (1.0 + 0.5 * z * u)
    return z


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"normal requires sigma > 0, got {self.sigma!r}")

    @property
    def name(self):
        return f"normal({self.mu:g}, {self.sigma:g})"

    @_elementwise
    def cdf(self, x):
        return _std_normal_cdf((x - self.mu) / self.sigma)

    @_elementwise
    def sf(self, x):
        return _std_normal_cdf(-(x - self.mu) / self.sigma)

    @_elementwise
    def pdf(self, x):
        return _std_normal_pdf((x - self.mu) / self.sigma) / self.sigma

    @_elementwise
    def quantile(self, p):
        _check_prob(p)
        return self.mu + self.sigma * _std_normal_quantile(p)


@dataclass(frozen=True)
class ChiSquare:
    df: float

    def __post_init__(self):
        if not self.df > 0:
            raise DomainError(f"chi-square requires df > 0, got {self.df!r}")

    @property
    def name(self):
        return f"chi_square({self.df:g})"

    @_elementwise
    def cdf(self, x):
        if x <= 0.0:
            return 0.0
        return reg_inc_gamma(0.5 * self.df, 0.5 * x)

    @_elementwise
    def sf(self, x):
        if x <= 0.0:
            return 1.0
        return reg_inc_gamma_upper(0.5 * self.df, 0.5 * x)

    @_elementwise
    def pdf(self, x):
        if x < 0.0:
            return 0.0
        k = 0.5 * self.df
        if x == 0.0:
            if k < 1.0:
                return math.inf
            return 0.5 if k == 1.0 else 0.0
        return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))

    @_elementwise
    def quantile(self, p):
        _check_prob(p)
        k = self.df
        z = _std_normal_quantile(p)
        # Wilson-Hilferty seed
        h = 2.0 / (9.0 * k)
        x0 = k * (1.0 - h + z * math.sqrt(h)) ** 3
        if not x0 > 0.0:
            x0 = min(1.0, k) * 1e-3
        return _invert(self.cdf, self.pdf, p, x0, lo=0.0)


@dataclass(frozen=True)
class StudentT:
    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError(f"student-t requires nu > 0, got {self.nu!r}")

    @property
    def name(self):
        return f"student_t({self.nu:g})"

    def _tail(self, x):
        # P(T > |x|)
        x2 = x * x
        denom = self.nu + x2
        return 0.5 * _inc_beta(0.5 * self.nu, 0.5, self.nu / denom, x2 / denom)

    @_elementwise
    def cdf(self, x):
        if x == 0.0:
            return 0.5
        if math.isinf(x):
            return 1.0 if x > 0 else 0.0
        tail = self._tail(x)
        return 1.0 - tail if x > 0 else tail

    @_elementwise
    def sf(self, x):
        if x == 0.0:
            return 0.5
        if math.isinf(x):
            return 0.0 if x > 0 else 1.0
        tail = self._tail(x)
        return tail if x > 0 else 1.0 - tail

    @_elementwise
    def pdf(self, x):
        nu = self.nu
        log_c = math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu) - 0.5 * math.log(nu * math.pi)
        return math.exp(log_c - 0.5 * (nu + 1.0) * math.log1p(x * x / nu))

    @_elementwise
    def quantile(self, p):
        _check_prob(p)
        if p == 0.5:
            return 0.0
        if p > 0.5:
            return -self._lower_quantile(1.0 - p)
        return self._lower_quantile(p)

    def _lower_quantile(self, p):
        nu = self.nu
        z = _std_normal_quantile(p)
        # Cornish-Fisher expansion seed
        z2 = z * z
        g1 = (z2 + 1.0) * z / 4.0
        g2 = ((5.0 * z2 + 16.0) * z2 + 3.0) * z / 96.0
        g3 = (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / 384.0
        x0 = z + g1 / nu + g2 / nu ** 2 + g3 / nu ** 3
        if not (math.isfinite(x0) and x0 < 0.0):
            x0 = z
        return _invert(self.cdf, self.pdf, p, x0, hi=0.0)


@dataclass(frozen=True)
class Kolmogorov:
    """Limiting law of ``sqrt(n) * D_n`` for the one-sample KS statistic."""

    @property
    def name(self):
        return "kolmogorov"

    @staticmethod
    def _alternating_sf(x):
        total = 0.0
        k = 1
        while True:
            term = math.exp(-2.0 * k * k * x * x)
            total += term if k % 2 else -term
            if term < 1e-12:
                break
            k += 1
        return min(1.0, max(0.0, 2.0 * total))

    @staticmethod
    def _theta_cdf(x):
        # Jacobi-theta form; converges fast exactly where the alternating sum is slow
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8.0 * x * x))
            total += term
            if term < 1e-12 * max(total, _FPMIN) or term == 0.0:
                break
            k += 1
        return min(1.0, _SQRT2PI / x * total)

    @_elementwise
    def cdf(self, x):
        if x <= 0.0:
            return 0.0
        if x < 1.0:
            return self._theta_cdf(x)
        return 1.0 - self._alternating_sf(x)

    @_elementwise
    def sf(self, x):
        if x <= 0.0:
            return 1.0
        if x < 1.0:
            return 1.0 - self._theta_cdf(x)
        return self._alternating_sf(x)

    @_elementwise
    def pdf(self, x):
        if x <= 0.0:
            return 0.0
        if x < 1.0:
            # derivative of the theta form
            total = 0.0
            k = 1
            while True:
                a = (2 * k - 1) ** 2 * math.pi ** 2 / 8.0
                term = math.exp(-a / (x * x)) * (2.0 * a / (x * x) - 1.0)
                total += term
                if abs(term) < 1e-16 * max(abs(total), _FPMIN) or term == 0.0:
                    break
                k += 1
            return max(0.0, _SQRT2PI / (x * x) * total)
        total = 0.0
        k = 1
        while True:
            term = k * k * math.exp(-2.0 * k * k * x * x)
            total += term if k % 2 else -term
            if term < 1e-17:
                break
            k += 1
        return max(0.0, 8.0 * x * total)

    @_elementwise
    def quantile(self, p):
        _check_prob(p)
        lo, hi = 0.0, 1.0
        while self.cdf(hi) < p:
            hi *= 2.0
        while hi - lo > 1e-12 * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < p:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


Distribution = Normal | ChiSquare | StudentT | Kolmogorov


def cdf(dist, x):
    return dist.cdf(x)


def sf(dist, x):
    return dist.sf(x)


def pdf(dist, x):
    return dist.pdf(x)


def quantile(dist, p):
    return dist.quantile(p)
