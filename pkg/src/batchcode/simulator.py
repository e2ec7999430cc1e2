"""Monte Carlo engine for batched, MDS-coded job execution.

One replication runs ``G`` batch generations.  In each, all ``n`` workers
execute a batch of ``b`` CUs and the generation ends when the k-th fastest
worker finishes; the job time is the sum over generations.

Reproducibility: replications are grouped in fixed-size blocks and block
``i`` draws from its own Philox stream keyed by ``(seed, i)``.  Block size
depends only on the problem shape, so results are bit-identical however
many worker threads are used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .service_models import ServiceModel, sample_cu

__all__ = [
    "InfeasiblePolicyError",
    "SystemSpec",
    "Policy",
    "CompletionEstimate",
    "METHODS",
    "DEFAULT_SAMPLES",
    "DEFAULT_SEED",
    "block_rng",
    "simulate_ejct",
    "PathCheck",
    "check_min_superadditivity",
    "check_max_subadditivity",
    "contiguous_grouping",
    "BatteryResult",
    "path_property_battery",
]

METHODS = ("monte_carlo", "quadrature", "asymptotic", "exact")
DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 42
_MAX_BLOCK_DRAWS = 1 << 22


class InfeasiblePolicyError(ValueError):
    """A (k, b) policy violates the equal-task / equal-batch divisibility rules."""


def _positive_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class SystemSpec:
    n: int
    j: int

    def __post_init__(self):
        object.__setattr__(self, "n", _positive_int("n", self.n))
        object.__setattr__(self, "j", _positive_int("job size j", self.j))

    @property
    def l(self) -> float:
        return self.j / self.n


@dataclass(frozen=True)
class Policy:
    """Redundancy ``k`` and batch size ``b`` for a given system."""

    spec: SystemSpec
    k: int
    b: int

    def __post_init__(self):
        n, j = self.spec.n, self.spec.j
        k = _positive_int("k", self.k)
        b = _positive_int("b", self.b)
        if k > n:
            raise InfeasiblePolicyError(f"k={k} exceeds worker count n={n}")
        if j % k:
            raise InfeasiblePolicyError(
                f"k={k} does not divide job size J={j} (tasks must have equal size)"
            )
        s = j // k
        if s % b:
            raise InfeasiblePolicyError(
                f"b={b} does not divide task size s=J/k={s} (batches must have equal size)"
            )
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "b", b)

    @property
    def r(self) -> float:
        return self.k / self.spec.n

    @property
    def s(self) -> int:
        return self.spec.j // self.k

    @property
    def g(self) -> int:
        return self.s // self.b


@dataclass(frozen=True)
class CompletionEstimate:
    mean: float
    std_err: float
    samples: int
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.std_err < 0:
            raise ValueError("std_err must be nonnegative")


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for replication block ``block``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _block_size(policy: Policy) -> int:
    per_rep = policy.spec.n * policy.s
    return max(1, min(4096, _MAX_BLOCK_DRAWS // per_rep))


def _run_block(policy: Policy, model: ServiceModel, seed: int, block: int, reps: int) -> np.ndarray:
    rng = block_rng(seed, block)
    n, k, b, g = policy.spec.n, policy.k, policy.b, policy.g
    cu = sample_cu(model, rng, (reps, g, n, b))
    batch = cu.sum(axis=-1)
    kth = np.partition(batch, k - 1, axis=-1)[..., k - 1]
    return kth.sum(axis=-1)


def simulate_ejct(
    spec: SystemSpec,
    policy: Policy,
    model: ServiceModel,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> CompletionEstimate:
    """Monte Carlo estimate of the expected job completion time.

    ``std_err`` is the sample standard deviation over ``sqrt(samples)``;
    it is NaN for a single sample.
    """
    if policy.spec != spec:
        raise ValueError("policy was built for a different SystemSpec")
    samples = _positive_int("samples", samples)
    size = _block_size(policy)
    blocks = [(i, min(size, samples - i * size)) for i in range(math.ceil(samples / size))]

    def run(item):
        return _run_block(policy, model, seed, *item)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(item) for item in blocks]
    totals = np.concatenate(parts)
    mean = float(totals.mean())
    if samples > 1:
        std_err = float(totals.std(ddof=1)) / math.sqrt(samples)
    else:
        std_err = math.nan
    return CompletionEstimate(mean=mean, std_err=std_err, samples=samples, method="monte_carlo")


# Sample-path checks -------------------------------------------------------------


@dataclass(frozen=True)
class PathCheck:
    holds: bool
    lhs: float
    rhs: float


def _block_sums(cu_matrix, grouping: Sequence[Sequence[int]]) -> np.ndarray:
    cu = np.asarray(cu_matrix, dtype=float)
    if cu.ndim != 2 or cu.shape[0] < 1 or cu.shape[1] < 1:
        raise ValueError("cu_matrix must be a non-empty 2-D array (workers x CUs)")
    if np.any(cu < 0) or not np.all(np.isfinite(cu)):
        raise ValueError("CU times must be finite and nonnegative")
    s = cu.shape[1]
    blocks = [list(block) for block in grouping]
    if not blocks or any(not block for block in blocks):
        raise ValueError("grouping must be a non-empty list of non-empty blocks")
    flat = [c for block in blocks for c in block]
    if sorted(flat) != list(range(s)):
        raise ValueError(f"grouping must cover columns 0..{s - 1} exactly once")
    for block in blocks:
        if block != list(range(block[0], block[0] + len(block))):
            raise ValueError(f"block {block} is not a contiguous run of columns")
    return np.stack([cu[:, block].sum(axis=1) for block in blocks], axis=1)


def _ordered_sum(values: np.ndarray) -> np.ndarray:
    # Left-to-right accumulation; rounding is monotone, so both sides of the
    # inequalities below compare exactly in floating point.
    return np.cumsum(values, axis=-1)[..., -1]


def check_min_superadditivity(cu_matrix, grouping) -> PathCheck:
    """``min_i sum_B Y_iB >= sum_B min_i Y_iB`` on one sample path.

    Rows are workers, columns are CUs; each block of ``grouping`` is one batch
    generation.  Left side: fastest worker doing the whole task in one go.
    Right side: per-generation fastest worker, summed.
    """
    sums = _block_sums(cu_matrix, grouping)
    lhs = float(_ordered_sum(sums).min())
    rhs = float(_ordered_sum(sums.min(axis=0)))
    return PathCheck(holds=lhs >= rhs, lhs=lhs, rhs=rhs)


def check_max_subadditivity(cu_matrix, grouping) -> PathCheck:
    """``max_i sum_B Y_iB <= sum_B max_i Y_iB``; mirror of the min check."""
    sums = _block_sums(cu_matrix, grouping)
    lhs = float(_ordered_sum(sums).max())
    rhs = float(_ordered_sum(sums.max(axis=0)))
    return PathCheck(holds=lhs <= rhs, lhs=lhs, rhs=rhs)


def contiguous_grouping(s: int, b: int) -> list[list[int]]:
    """Split columns ``0..s-1`` into consecutive blocks of ``b``."""
    if s % b:
        raise ValueError(f"b={b} does not divide s={s}")
    return [list(range(i, i + b)) for i in range(0, s, b)]


@dataclass(frozen=True)
class BatteryResult:
    trials: int
    checks: int
    min_violations: int
    max_violations: int

    @property
    def ok(self) -> bool:
        return self.min_violations == 0 and self.max_violations == 0


def path_property_battery(trials: int = 1000, seed: int = 0, max_n: int = 8, max_s: int = 12) -> BatteryResult:
    """Run both sample-path checks on random CU matrices and every divisor grouping.

    Trial ``t`` draws its shape and entries from ``block_rng(seed, t)``;
    even trials use uniform entries, odd trials shifted-exponential ones.
    """
    checks = min_bad = max_bad = 0
    for t in range(trials):
        rng = block_rng(seed, t)
        n = int(rng.integers(1, max_n + 1))
        s = int(rng.integers(1, max_s + 1))
        if t % 2 == 0:
            cu = rng.uniform(0.0, 10.0, size=(n, s))
        else:
            cu = rng.uniform(0.0, 2.0) + rng.exponential(rng.uniform(0.1, 3.0), size=(n, s))
        for b in range(1, s + 1):
            if s % b:
                continue
            grouping = contiguous_grouping(s, b)
            checks += 1
            min_bad += not check_min_superadditivity(cu, grouping).holds
            max_bad += not check_max_subadditivity(cu, grouping).holds
    return BatteryResult(trials, checks, min_bad, max_bad)
