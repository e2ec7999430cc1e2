"""Deterministic evaluators of the expected job completion time.

All evaluators return the expected time to finish ``G`` batch generations,
``G * E[Y_{k:n}]`` where ``Y_{k:n}`` is the k-th smallest of ``n`` i.i.d.
batch task times.

* :func:`asymptotic_ejct` -- large-n limit for shifted-exponential CUs,
  ``l*delta/R + l*w*m/(R*b)`` with ``P(b, m) = R``.
* :func:`quadrature_ejct` -- exact finite-n value for shifted-exponential CUs
  by integrating the order-statistic survival function.
* :func:`exact_b1_ejct` -- closed form at ``b = 1`` via harmonic numbers.
* :func:`exact_bimodal_ejct` -- exact finite sum for the bi-modal law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .service_models import BiModal, ShiftedExponential
from .special_fn import (
    NumericalError,
    gamma_pq_array,
    harmonic,
    inverse_gamma_p,
    order_stat_sf,
    std_normal_quantile,
)

__all__ = [
    "AsymptoticResult",
    "ThresholdResult",
    "ScanRow",
    "ScanResult",
    "asymptotic_ejct",
    "survival_integral",
    "quadrature_ejct",
    "exact_b1_ejct",
    "exact_bimodal_ejct",
    "solve_r_prime",
    "f_value",
    "f_derivative_approx",
    "classify_signs",
    "f_derivative_scan",
]


@dataclass(frozen=True)
class AsymptoticResult:
    expected_time: float
    m: float
    f_value: float


@dataclass(frozen=True)
class ThresholdResult:
    m1: float
    r_prime: float


def _check_order(n: int, k: int) -> None:
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")


def _require_se(model, what: str) -> ShiftedExponential:
    if not isinstance(model, ShiftedExponential):
        raise ValueError(f"{what} is defined for the shifted exponential model only")
    return model


def asymptotic_ejct(model: ShiftedExponential, l: float, R: float, b: int) -> AsymptoticResult:
    """Large-n expected completion time for shifted-exponential CUs."""
    _require_se(model, "asymptotic formula")
    if not 0.0 < R < 1.0:
        raise ValueError(f"asymptotic formula needs R in (0, 1), got {R!r}")
    if not l > 0:
        raise ValueError(f"job scale factor l must be positive, got {l!r}")
    m = inverse_gamma_p(R, b)
    f = m / (R * b)
    return AsymptoticResult(
        expected_time=l * model.delta / R + l * model.w * f,
        m=m,
        f_value=f,
    )


def survival_integral(n: int, k: int, b: int, rel_tol: float = 1e-9, tail: float = 1e-12) -> float:
    """``E`` of the k-th smallest of n Erlang(b, 1) draws, by quadrature.

    Integrates the survival function ``I_{Q(b,t)}(n-k+1, k)`` over
    ``[0, T]`` where ``T`` is doubled until the survival drops below
    ``tail``.  Adaptive Simpson with Richardson correction; all panels of a
    refinement level are evaluated together.
    """
    _check_order(n, k)

    def surv(t):
        _, q = gamma_pq_array(b, t)
        return special.betainc(n - k + 1, k, q)

    upper = float(b)
    while surv(np.array([upper]))[0] >= tail:
        upper *= 2.0
        if upper > 1e12:
            raise NumericalError("survival function does not decay")

    edges = np.linspace(0.0, upper, 65)
    a, c = edges[:-1], edges[1:]
    fa, fc = surv(a), surv(c)
    mid = 0.5 * (a + c)
    fm = surv(mid)
    whole = (c - a) / 6.0 * (fa + 4.0 * fm + fc)
    abs_tol = rel_tol * abs(whole.sum())
    tol = abs_tol * (c - a) / upper

    accepted: list[np.ndarray] = []
    for _ in range(60):
        mid = 0.5 * (a + c)
        lm, rm = 0.5 * (a + mid), 0.5 * (mid + c)
        flm, frm = surv(lm), surv(rm)
        left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (c - mid) / 6.0 * (fm + 4.0 * frm + fc)
        err = left + right - whole
        ok = np.abs(err) <= 15.0 * tol
        accepted.append((left + right + err / 15.0)[ok])
        if ok.all():
            break
        bad = ~ok
        a, mid, c = a[bad], mid[bad], c[bad]
        fa, fm, fc, flm, frm = fa[bad], fm[bad], fc[bad], flm[bad], frm[bad]
        a, c = np.concatenate([a, mid]), np.concatenate([mid, c])
        fa, fc, fm = np.concatenate([fa, fm]), np.concatenate([fm, fc]), np.concatenate([flm, frm])
        whole = np.concatenate([left[bad], right[bad]])
        tol = np.concatenate([tol[bad], tol[bad]]) / 2.0
    else:
        raise NumericalError("adaptive Simpson did not reach the requested tolerance")
    return math.fsum(np.concatenate(accepted))


def quadrature_ejct(model, n: int, k: int, b: int, G: int, rel_tol: float = 1e-9) -> float:
    """Exact finite-n ``G * E[Y_{k:n}]`` for shifted-exponential CUs."""
    _require_se(model, "quadrature (use exact_bimodal_ejct for bi-modal)")
    _check_order(n, k)
    return G * (b * model.delta + model.w * survival_integral(n, k, b, rel_tol=rel_tol))


def _harmonic0(n: int) -> float:
    return 0.0 if n == 0 else harmonic(n)


def exact_b1_ejct(model, n: int, k: int, G: int) -> float:
    """Closed form at unit batch size: ``G (delta + w (H_n - H_{n-k}))``."""
    _require_se(model, "exact_b1_ejct")
    _check_order(n, k)
    return G * (model.delta + model.w * (harmonic(n) - _harmonic0(n - k)))


def exact_bimodal_ejct(model, n: int, k: int, b: int, G: int) -> float:
    """Exact ``G * E[Y_{k:n}]`` for bi-modal CUs.

    The batch time lives on ``y_j = b t_fast + j (t_slow - t_fast)`` with
    Binomial(b, eps) weights, so
    ``E[Y_{k:n}] = y_0 + gap * sum_{j=1}^{b} P(Y_{k:n} > y_{j-1})``.
    """
    if not isinstance(model, BiModal):
        raise ValueError("exact_bimodal_ejct needs the bi-modal model")
    _check_order(n, k)
    gap = model.t_slow - model.t_fast
    j = np.arange(b)
    # P(Y > y_j) for j = 0..b-1, summed from the tail side.
    batch_sf = special.bdtrc(j, b, model.eps)
    order_sf = order_stat_sf(k, n, batch_sf)
    return G * (b * model.t_fast + gap * math.fsum(np.atleast_1d(order_sf)))


def solve_r_prime(tol: float = 1e-14) -> ThresholdResult:
    """Code-rate threshold: ``e^{m1} = 1 + 2 m1`` on m1 > 0, ``R' = 1 - e^{-m1}``."""

    def g(m: float) -> float:
        return math.expm1(m) - 2.0 * m

    lo, hi = 0.5, 3.0
    if not (g(lo) < 0.0 < g(hi)):
        raise NumericalError(f"bracket [{lo}, {hi}] does not straddle the root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    m1 = 0.5 * (lo + hi)
    return ThresholdResult(m1=m1, r_prime=-math.expm1(-m1))


# Batch-size derivative diagnostics --------------------------------------------


def f_value(b: int, R: float) -> float:
    """Normalized random part of the asymptotic time, ``m / (R b)``."""
    return inverse_gamma_p(R, b) / (R * b)


def f_derivative_approx(b: float, R: float, m: float) -> float:
    """Approximate df/db using ``dm/db = 2 sqrt(m) / (Z + 2 sqrt(m))``.

    ``Z`` is the standard normal quantile at ``1 - R``.
    """
    z = std_normal_quantile(1.0 - R)
    root = 2.0 * math.sqrt(m)
    return (root / (z + root) - m / b) / (R * b)


def classify_signs(signs) -> str:
    """Shape label for a sequence of slope signs (+1, -1, 0).

    ``increasing``, ``decreasing``, ``unimodal`` (one + to - change) or
    ``other``.  Zero slopes are ignored.
    """
    nz = [s for s in signs if s != 0]
    if not nz:
        return "other"
    if all(s > 0 for s in nz):
        return "increasing"
    if all(s < 0 for s in nz):
        return "decreasing"
    changes = [(a, c) for a, c in zip(nz, nz[1:]) if a != c]
    if len(changes) == 1 and changes[0] == (1, -1):
        return "unimodal"
    return "other"


@dataclass(frozen=True)
class ScanRow:
    b: int
    f_value: float
    m: float
    approx_sign: int
    fd_sign: int  # sign of f(next b) - f(b); 0 on the last row


@dataclass(frozen=True)
class ScanResult:
    R: float
    rows: list
    classification: str  # shape of the f sequence itself
    approx_classification: str
    discrepancies: list  # b values where approx_sign != fd_sign

    @property
    def argmin_b(self) -> int:
        return min(self.rows, key=lambda r: (r.f_value, r.b)).b


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def f_derivative_scan(R: float, b_grid) -> ScanResult:
    """Evaluate ``f(b, R)`` on a grid and compare two views of its slope.

    The closed-form slope sign is cross-checked against forward differences
    of ``f`` itself; disagreements are listed rather than reconciled.
    """
    grid = [int(b) for b in b_grid]
    if not grid:
        raise ValueError("b_grid must not be empty")
    if grid != sorted(grid) or grid[0] < 1 or len(set(grid)) != len(grid):
        raise ValueError("b_grid must be strictly ascending positive integers")
    ms = [inverse_gamma_p(R, b) for b in grid]
    fs = [m / (R * b) for m, b in zip(ms, grid)]
    rows = []
    for i, (b, m, f) in enumerate(zip(grid, ms, fs)):
        fd = _sign(fs[i + 1] - f) if i + 1 < len(grid) else 0
        rows.append(ScanRow(b=b, f_value=f, m=m, approx_sign=_sign(f_derivative_approx(b, R, m)), fd_sign=fd))
    body = rows[:-1] if len(rows) > 1 else rows
    return ScanResult(
        R=R,
        rows=rows,
        classification=classify_signs(r.fd_sign for r in body),
        approx_classification=classify_signs(r.approx_sign for r in body),
        discrepancies=[r.b for r in body if r.approx_sign != r.fd_sign],
    )
