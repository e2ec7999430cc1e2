"""Exhaustive search over feasible (k, b) policies.

Candidate sets are divisor lists, so everything is enumerated and evaluated
with one of four estimators (see :func:`evaluate`).  Ties go to the smaller
batch, then the smaller k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .analytic import asymptotic_ejct, exact_b1_ejct, exact_bimodal_ejct, quadrature_ejct
from .service_models import BiModal, ServiceModel, ShiftedExponential
from .simulator import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    METHODS,
    CompletionEstimate,
    InfeasiblePolicyError,
    Policy,
    SystemSpec,
    simulate_ejct,
)

__all__ = [
    "SimOptions",
    "OptimizationReport",
    "StrategyRecommendation",
    "feasible_batches",
    "feasible_k",
    "evaluate",
    "optimize_batch",
    "optimize_joint",
    "recommend_strategy",
]

# Relative gap under which two deterministic estimates count as tied.
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class SimOptions:
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    workers: int = 1


@dataclass
class OptimizationReport:
    best_policy: Policy
    best_value: float
    table: list  # (Policy, CompletionEstimate) in enumeration order
    estimator: str
    restricted: bool = False
    inconclusive: bool = False
    skipped: list = field(default_factory=list)  # (k, b, reason)

    @property
    def best_estimate(self) -> CompletionEstimate:
        return next(est for pol, est in self.table if pol == self.best_policy)


def feasible_batches(s: int) -> list[int]:
    """All divisors of ``s`` in ascending order."""
    if s < 1:
        raise ValueError(f"task size must be positive, got {s}")
    small, large = [], []
    for d in range(1, math.isqrt(s) + 1):
        if s % d == 0:
            small.append(d)
            if d != s // d:
                large.append(s // d)
    return small + large[::-1]


def feasible_k(spec: SystemSpec) -> list[int]:
    return [k for k in range(1, spec.n + 1) if spec.j % k == 0]


def evaluate(
    spec: SystemSpec,
    policy: Policy,
    model: ServiceModel,
    estimator: str = "quadrature",
    sim: SimOptions = SimOptions(),
) -> CompletionEstimate:
    """Expected completion time of one policy under the named estimator.

    ``exact`` means the bi-modal finite sum, or the harmonic closed form for
    shifted-exponential CUs at ``b = 1``.
    """
    if estimator not in METHODS:
        raise ValueError(f"estimator must be one of {METHODS}, got {estimator!r}")
    n, k, b, g = spec.n, policy.k, policy.b, policy.g
    if estimator == "monte_carlo":
        return simulate_ejct(spec, policy, model, sim.samples, sim.seed, sim.workers)
    if estimator == "quadrature":
        value = quadrature_ejct(model, n, k, b, g)
    elif estimator == "asymptotic":
        if isinstance(model, BiModal):
            raise ValueError("asymptotic formula defined for shifted exponential only")
        if k == n:
            raise ValueError("asymptotic formula undefined at R=1 (splitting); use quadrature")
        value = asymptotic_ejct(model, spec.l, policy.r, b).expected_time
    else:
        if isinstance(model, BiModal):
            value = exact_bimodal_ejct(model, n, k, b, g)
        elif b == 1:
            value = exact_b1_ejct(model, n, k, g)
        else:
            raise ValueError("exact estimator for shifted exponential needs b=1; use quadrature")
    return CompletionEstimate(mean=value, std_err=0.0, samples=0, method=estimator)


def _pick_best(table, key, noisy: bool = False) -> tuple[Policy, float, bool]:
    # Deterministic minimum with tie-break; then, for Monte Carlo, check that
    # the winner is separated from every rival by 3 combined standard errors.
    best_pol, best_est = table[0]
    for pol, est in table[1:]:
        tied = math.isclose(est.mean, best_est.mean, rel_tol=TIE_RTOL, abs_tol=0.0)
        if est.mean < best_est.mean and not tied:
            best_pol, best_est = pol, est
        elif tied and key(pol) < key(best_pol):
            best_pol, best_est = pol, est
    inconclusive = False
    if noisy:
        for pol, est in table:
            if pol == best_pol:
                continue
            combined = math.hypot(best_est.std_err, est.std_err)
            if not est.mean - best_est.mean > 3.0 * combined:
                inconclusive = True
                break
    return best_pol, best_est.mean, inconclusive


def optimize_batch(
    spec: SystemSpec,
    model: ServiceModel,
    k: int,
    estimator: str = "quadrature",
    restricted: bool = False,
    sim: SimOptions = SimOptions(),
) -> OptimizationReport:
    """Best batch size at fixed ``k``.

    ``restricted`` evaluates only the endpoints ``b = 1`` and ``b = s``.
    """
    if k not in feasible_k(spec):
        raise InfeasiblePolicyError(f"k={k} is infeasible for n={spec.n}, J={spec.j} (need k <= n and k | J)")
    if estimator == "asymptotic" and isinstance(model, BiModal):
        raise ValueError("asymptotic formula defined for shifted exponential only")
    s = spec.j // k
    batches = sorted({1, s}) if restricted else feasible_batches(s)
    table = []
    for b in batches:
        policy = Policy(spec, k, b)
        table.append((policy, evaluate(spec, policy, model, estimator, sim)))
    best, value, inconclusive = _pick_best(table, key=lambda p: p.b, noisy=estimator == "monte_carlo")
    return OptimizationReport(best, value, table, estimator, restricted, inconclusive)


def optimize_joint(
    spec: SystemSpec,
    model: ServiceModel,
    estimator: str = "quadrature",
    sim: SimOptions = SimOptions(),
) -> OptimizationReport:
    """Best (k, b) over all feasible pairs.

    With the asymptotic estimator the splitting candidates (k = n) are
    skipped and listed in ``report.skipped``.
    """
    if estimator == "asymptotic" and isinstance(model, BiModal):
        raise ValueError("asymptotic formula defined for shifted exponential only")
    table, skipped = [], []
    for k in feasible_k(spec):
        for b in feasible_batches(spec.j // k):
            policy = Policy(spec, k, b)
            if estimator == "asymptotic" and k == spec.n:
                skipped.append((k, b, "asymptotic formula undefined at R=1"))
                continue
            table.append((policy, evaluate(spec, policy, model, estimator, sim)))
    if not table:
        raise ValueError("no policy could be evaluated with this estimator")
    best, value, inconclusive = _pick_best(table, key=lambda p: (p.b, p.k), noisy=estimator == "monte_carlo")
    return OptimizationReport(best, value, table, estimator, False, inconclusive, skipped)


@dataclass
class StrategyRecommendation:
    label: str  # replication_b1 | splitting_bmax | coding_b1
    policy: Policy
    values: dict  # label -> CompletionEstimate (only strategies that exist)
    policies: dict  # label -> Policy
    w_over_delta: float
    l: float


def recommend_strategy(
    spec: SystemSpec,
    model: ServiceModel,
    estimator: str = "quadrature",
    sim: SimOptions = SimOptions(),
) -> StrategyRecommendation:
    """Compare replication at b=1, splitting at b=s, and the best coding at b=1.

    A strategy is omitted when it has no feasible policy (e.g. no k with
    1 < k < n divides J).
    """
    if not isinstance(model, ShiftedExponential):
        raise ValueError("recommend_strategy needs the shifted exponential model")
    n = spec.n
    policies: dict = {"replication_b1": Policy(spec, 1, 1)}
    values: dict = {"replication_b1": evaluate(spec, policies["replication_b1"], model, estimator, sim)}
    if n in feasible_k(spec) and estimator != "asymptotic":
        split = Policy(spec, n, spec.j // n)
        policies["splitting_bmax"] = split
        values["splitting_bmax"] = evaluate(spec, split, model, estimator, sim)
    coding = [Policy(spec, k, 1) for k in feasible_k(spec) if 1 < k < n]
    if coding:
        table = [(p, evaluate(spec, p, model, estimator, sim)) for p in coding]
        best, _, _ = _pick_best(table, key=lambda p: p.k)
        policies["coding_b1"] = best
        values["coding_b1"] = next(est for p, est in table if p == best)
    table = [(policies[name], values[name]) for name in policies]
    best, _, _ = _pick_best(table, key=lambda p: (p.b, p.k))
    label = next(name for name, p in policies.items() if p == best)
    ratio = model.w / model.delta if model.delta > 0 else math.inf
    return StrategyRecommendation(label, best, values, policies, ratio, spec.l)
