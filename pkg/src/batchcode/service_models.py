"""Per-CU service-time laws and their additive scaling to batch tasks.

A worker executing a batch of ``b`` computing units (CUs) takes
``Y = X_1 + ... + X_b`` with the ``X_i`` i.i.d. per-CU times.  Two per-CU
laws are supported:

* :class:`ShiftedExponential` -- ``delta + Exp(mean=w)``; the batch time is a
  shifted Erlang.
* :class:`BiModal` -- ``t_fast`` with probability ``1 - eps`` and ``t_slow``
  with probability ``eps``; the batch time is ``b*t_fast + (t_slow -
  t_fast) * Binomial(b, eps)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np
from scipy import special

from .special_fn import regularized_gamma_p

__all__ = [
    "ShiftedExponential",
    "BiModal",
    "ServiceModel",
    "BatchTaskLaw",
    "sample_cu",
    "sample_batch",
    "batch_cdf",
    "batch_mean",
    "model_from_dict",
    "model_to_dict",
]


def _finite(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ShiftedExponential:
    delta: float
    w: float

    type_name = "shifted_exponential"

    def __post_init__(self):
        delta = _finite("delta", self.delta)
        w = _finite("w", self.w)
        if delta < 0:
            raise ValueError(f"delta must be >= 0, got {delta}")
        if w <= 0:
            raise ValueError(f"w must be > 0, got {w}")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class BiModal:
    """Two-point per-CU law: ``t_slow`` with probability ``eps``, else ``t_fast``."""

    t_fast: float
    t_slow: float
    eps: float

    type_name = "bimodal"

    def __post_init__(self):
        t_fast = _finite("t_fast", self.t_fast)
        t_slow = _finite("t_slow", self.t_slow)
        eps = _finite("eps", self.eps)
        if t_fast <= 0:
            raise ValueError(f"t_fast must be > 0, got {t_fast}")
        if t_slow < t_fast:
            raise ValueError(f"t_slow must be >= t_fast, got t_slow={t_slow}, t_fast={t_fast}")
        if not 0.0 <= eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {eps}")
        object.__setattr__(self, "t_fast", t_fast)
        object.__setattr__(self, "t_slow", t_slow)
        object.__setattr__(self, "eps", eps)

    def support(self, b: int) -> np.ndarray:
        """Batch-time support points ``b*t_fast + j*(t_slow - t_fast)``, j = 0..b."""
        j = np.arange(b + 1)
        return b * self.t_fast + j * (self.t_slow - self.t_fast)

    def weights(self, b: int) -> np.ndarray:
        """Binomial(b, eps) probabilities of the support points."""
        j = np.arange(b + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return special.binom(b, j) * np.power(self.eps, j) * np.power(1.0 - self.eps, b - j)


ServiceModel = Union[ShiftedExponential, BiModal]


@dataclass(frozen=True)
class BatchTaskLaw:
    model: ServiceModel
    b: int

    def __post_init__(self):
        if isinstance(self.b, bool) or int(self.b) != self.b or self.b < 1:
            raise ValueError(f"batch size b must be a positive integer, got {self.b!r}")
        object.__setattr__(self, "b", int(self.b))


def sample_cu(model: ServiceModel, rng: np.random.Generator, size=None):
    """Draw per-CU service times; a float when ``size`` is None, else an array."""
    if isinstance(model, ShiftedExponential):
        return model.delta + model.w * rng.standard_exponential(size)
    if isinstance(model, BiModal):
        slow = rng.random(size) < model.eps
        return np.where(slow, model.t_slow, model.t_fast) if size is not None else (
            model.t_slow if slow else model.t_fast
        )
    raise TypeError(f"unknown service model {model!r}")


def sample_batch(law: BatchTaskLaw, rng: np.random.Generator, size=None):
    """Draw batch task times as sums of ``law.b`` consecutive per-CU draws.

    The CU draws for one batch are contiguous in the stream, so
    ``sample_batch`` consumes exactly what ``b`` calls of :func:`sample_cu`
    would and returns their sum.
    """
    shape = (law.b,) if size is None else (*np.atleast_1d(size), law.b)
    cus = sample_cu(law.model, rng, shape)
    total = cus.sum(axis=-1)
    return float(total) if size is None else total


def batch_cdf(law: BatchTaskLaw, y):
    """Exact CDF of the batch task time at ``y`` (scalar or array)."""
    model, b = law.model, law.b
    y_arr = np.asarray(y, dtype=float)
    if isinstance(model, ShiftedExponential):
        floor = b * model.delta
        x = np.maximum((y_arr - floor) / model.w, 0.0)
        flat = np.array([regularized_gamma_p(b, float(v)) for v in x.ravel()])
        out = np.where(y_arr < floor, 0.0, flat.reshape(x.shape))
    elif isinstance(model, BiModal):
        gap = model.t_slow - model.t_fast
        base = b * model.t_fast
        if gap == 0.0:
            out = np.where(y_arr >= base, 1.0, 0.0)
        else:
            # Tolerance keeps y exactly at a support point from rounding down.
            j = np.floor((y_arr - base) / gap + 1e-9)
            out = np.where(j < 0, 0.0, special.bdtr(np.clip(j, 0, b), b, model.eps))
            out = np.where(j >= b, 1.0, out)
    else:
        raise TypeError(f"unknown service model {model!r}")
    return float(out) if out.ndim == 0 else out


def batch_mean(law: BatchTaskLaw) -> float:
    model, b = law.model, law.b
    if isinstance(model, ShiftedExponential):
        return b * (model.delta + model.w)
    if isinstance(model, BiModal):
        return b * (model.t_fast + model.eps * (model.t_slow - model.t_fast))
    raise TypeError(f"unknown service model {model!r}")


_FIELDS = {
    "shifted_exponential": (ShiftedExponential, ("delta", "w")),
    "bimodal": (BiModal, ("t_fast", "t_slow", "eps")),
}


def model_from_dict(desc: dict) -> ServiceModel:
    """Build a model from its config description, e.g.
    ``{"type": "bimodal", "t_fast": 1, "t_slow": 5, "eps": 0.1}``.

    Raises ``ValueError`` naming the offending field.
    """
    if not isinstance(desc, dict):
        raise ValueError(f"model description must be an object, got {desc!r}")
    kind = desc.get("type")
    if kind not in _FIELDS:
        raise ValueError(f"model.type must be one of {sorted(_FIELDS)}, got {kind!r}")
    cls, names = _FIELDS[kind]
    unknown = set(desc) - {"type", *names}
    if unknown:
        raise ValueError(f"unknown key(s) for {kind} model: {sorted(unknown)}")
    missing = [name for name in names if name not in desc]
    if missing:
        raise ValueError(f"missing field(s) for {kind} model: {missing}")
    return cls(**{name: desc[name] for name in names})


def model_to_dict(model: ServiceModel) -> dict:
    return {"type": model.type_name, **asdict(model)}
