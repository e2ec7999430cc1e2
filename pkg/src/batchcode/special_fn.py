"""Special functions for integer-shape gamma laws and order statistics.

``P(b, m)`` here is the regularized lower incomplete gamma function with a
positive integer shape ``b``.  For integer shape it equals the probability
that a Poisson(m) count is at least ``b``, which is how it is evaluated:
the smaller of the two Poisson tails is summed directly, starting from its
largest term, with that term computed in the log domain (Loader's
saddle-point form) so nothing overflows for shapes up to ~1e6.
"""

from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np
from scipy import special

__all__ = [
    "NumericalError",
    "regularized_gamma_p",
    "regularized_gamma_q",
    "gamma_pq",
    "gamma_pq_array",
    "poisson_log_pmf",
    "inverse_gamma_p",
    "std_normal_cdf",
    "std_normal_quantile",
    "batch_from_m_normal_approx",
    "order_stat_cdf",
    "order_stat_sf",
    "harmonic",
]

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_TAIL_EPS = 1e-17
_STD_NORMAL = NormalDist()


class NumericalError(ArithmeticError):
    """A numerical routine failed to converge or hit an unexpected state."""


def _check_shape(b: int) -> int:
    if isinstance(b, bool) or int(b) != b or b < 1:
        raise ValueError(f"shape b must be a positive integer, got {b!r}")
    return int(b)


# Log-domain Poisson pmf -------------------------------------------------------

_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


def _stirlerr(n: int) -> float:
    """log(n!) - log(sqrt(2 pi n) (n/e)^n) for integer n >= 1."""
    if n <= 15:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LN_SQRT_2PI
    nn = float(n) * n
    if n > 500:
        return (_S0 - _S1 / nn) / n
    if n > 80:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def _bd0(x: float, mu: float) -> float:
    """x log(x/mu) + mu - x without cancellation when x ~ mu."""
    d = x - mu
    if abs(d) < 0.1 * (x + mu):
        v = d / (x + mu)
        s = d * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 1000):
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * math.log(x / mu) + mu - x


def _bd0_array(x: int, mu: np.ndarray) -> np.ndarray:
    d = x - mu
    close = np.abs(d) < 0.1 * (x + mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = x * np.log(x / mu) + mu - x
    v = np.where(close, d / (x + mu), 0.0)
    s = d * v
    ej = 2.0 * x * v
    v2 = v * v
    # |v| < 0.1 on the series branch, so 20 terms reach far below 1e-17.
    for j in range(1, 21):
        ej = ej * v2
        s = s + ej / (2 * j + 1)
    return np.where(close, s, direct)


def poisson_log_pmf(j: int, m: float) -> float:
    """log of e^{-m} m^j / j! for integer j >= 0 and m > 0."""
    if j == 0:
        return -m
    return -_stirlerr(j) - _bd0(float(j), m) - _LN_SQRT_2PI - 0.5 * math.log(j)


def _poisson_log_pmf_array(j: int, m: np.ndarray) -> np.ndarray:
    if j == 0:
        return -m
    return -_stirlerr(j) - _bd0_array(j, m) - _LN_SQRT_2PI - 0.5 * math.log(j)


# Regularized incomplete gamma, integer shape ---------------------------------


def gamma_pq(b: int, m: float) -> tuple[float, float]:
    """Return ``(P(b, m), Q(b, m))`` with the smaller one summed directly."""
    b = _check_shape(b)
    if not m >= 0.0:
        raise ValueError(f"argument m must be nonnegative, got {m!r}")
    if m == 0.0:
        return 0.0, 1.0
    if math.isinf(m):
        return 1.0, 0.0
    if b > m:
        # Upper Poisson tail sum_{j>=b}: terms shrink as j grows.
        term = math.exp(poisson_log_pmf(b, m))
        total = 0.0
        j = b
        while term > 0.0:
            total += term
            j += 1
            term *= m / j
            if term < _TAIL_EPS * total:
                break
        return total, 1.0 - total
    # Lower Poisson tail sum_{j<b}: terms shrink as j falls from b-1.
    j = b - 1
    term = math.exp(poisson_log_pmf(j, m))
    total = 0.0
    while term > 0.0:
        total += term
        if j == 0:
            break
        term *= j / m
        j -= 1
        if term < _TAIL_EPS * total:
            break
    return 1.0 - total, total


def regularized_gamma_p(b: int, m: float) -> float:
    """Regularized lower incomplete gamma ``P(b, m)`` for integer ``b >= 1``.

    Equal to ``1 - exp(-m) * sum_{k<b} m**k / k!``.

    >>> round(regularized_gamma_p(2, 1.0), 10)
    0.2642411177
    """
    return gamma_pq(b, m)[0]


def regularized_gamma_q(b: int, m: float) -> float:
    """Upper complement ``Q(b, m) = 1 - P(b, m)``, accurate when small."""
    return gamma_pq(b, m)[1]


def gamma_pq_array(b: int, m) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`gamma_pq` over an array of arguments ``m``."""
    b = _check_shape(b)
    m = np.asarray(m, dtype=float)
    if np.any(~(m >= 0.0)):
        raise ValueError("argument m must be nonnegative")
    p = np.zeros(m.shape)
    q = np.ones(m.shape)

    upper = (m > 0.0) & (m < b)
    if np.any(upper):
        mu = m[upper]
        term = np.exp(_poisson_log_pmf_array(b, mu))
        total = term.copy()
        j = b
        while True:
            j += 1
            term = term * (mu / j)
            total += term
            if np.all(term <= _TAIL_EPS * total):
                break
        p[upper] = total
        q[upper] = 1.0 - total

    lower = m >= b
    if np.any(lower):
        mu = m[lower]
        j = b - 1
        term = np.exp(_poisson_log_pmf_array(j, mu))
        total = term.copy()
        while j > 0:
            term = term * (j / mu)
            j -= 1
            total += term
            if np.all(term <= _TAIL_EPS * total):
                break
        p[lower] = 1.0 - total
        q[lower] = total
    return p, q


def inverse_gamma_p(R: float, b: int, tol: float = 1e-13) -> float:
    """Solve ``P(b, m) = R`` for ``m``.

    Newton steps seeded by the normal approximation ``b ~ Z sqrt(m) + m + 1``,
    falling back to bisection whenever a step leaves the current bracket.
    ``b == 1`` uses the closed form ``-log(1 - R)``.
    """
    b = _check_shape(b)
    if not 0.0 < R < 1.0:
        if R == 1.0:
            raise ValueError("inverse_gamma_p undefined at R=1 (m would be infinite)")
        raise ValueError(f"R must lie in (0, 1), got {R!r}")
    if b == 1:
        return -math.log1p(-R)

    def residual(x: float) -> float:
        p, q = gamma_pq(b, x)
        # Compare in whichever tail keeps precision.
        return p - R if R <= 0.5 else (1.0 - R) - q

    z = std_normal_quantile(1.0 - R)
    root = 0.5 * (-z + math.sqrt(z * z + 4.0 * (b - 1)))
    m = root * root

    lo, hi = 0.0, max(2.0 * m, b + 10.0 * math.sqrt(b) + 10.0)
    while residual(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise NumericalError("could not bracket the root of P(b, m) = R")
    if not lo < m < hi:
        m = 0.5 * (lo + hi)

    for _ in range(200):
        f = residual(m)
        if abs(f) <= tol:
            return m
        if f < 0.0:
            lo = m
        else:
            hi = m
        dens = math.exp(poisson_log_pmf(b - 1, m))
        step = f / dens if dens > 0.0 else math.inf
        new = m - step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - m) <= 4e-16 * m:
            m = new
            break
        m = new
    if abs(residual(m)) > 1e-10:
        raise NumericalError(f"inverse_gamma_p did not converge for R={R}, b={b}")
    return m


# Normal law ------------------------------------------------------------------


def std_normal_cdf(z: float) -> float:
    return _STD_NORMAL.cdf(z)


def std_normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile needs p in (0, 1), got {p!r}")
    return _STD_NORMAL.inv_cdf(p)


def batch_from_m_normal_approx(m: float, R: float) -> float:
    """Normal approximation to the Poisson tail: ``b ~ Z sqrt(m) + m + 1``.

    ``Z`` is the standard normal quantile at ``1 - R``.
    """
    if not m > 0.0:
        raise ValueError(f"m must be positive, got {m!r}")
    z = std_normal_quantile(1.0 - R)
    return z * math.sqrt(m) + m + 1.0


# Order statistics ------------------------------------------------------------


def _check_order(k: int, n: int) -> None:
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"order statistic needs 1 <= k <= n, got k={k}, n={n}")


def order_stat_cdf(k: int, n: int, F):
    """CDF of the k-th smallest of n i.i.d. draws, given their common CDF value F.

    ``sum_{j=k}^{n} C(n, j) F^j (1-F)^(n-j)``, i.e. the regularized incomplete
    beta ``I_F(k, n-k+1)``.  Accepts scalars or arrays.
    """
    _check_order(k, n)
    out = special.betainc(k, n - k + 1, F)
    return float(out) if np.ndim(out) == 0 else out


def order_stat_sf(k: int, n: int, Fbar):
    """Survival of the k-th smallest of n draws, given the common survival Fbar.

    Equals ``1 - order_stat_cdf(k, n, 1 - Fbar)`` but keeps precision when the
    result is small.
    """
    _check_order(k, n)
    out = special.betainc(n - k + 1, k, Fbar)
    return float(out) if np.ndim(out) == 0 else out


def harmonic(n: int) -> float:
    """n-th harmonic number ``1 + 1/2 + ... + 1/n``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"harmonic needs a positive integer, got {n!r}")
    return math.fsum(1.0 / i for i in range(1, int(n) + 1))
