"""Config-driven sweeps, plot-ready records, and named experiment presets.

A sweep config is one JSON document::

    {
      "scenario_id": "demo",
      "system": {"n": 10, "j": 60},
      "model": {"type": "shifted_exponential", "delta": 1, "w": 1},
      "policies": {"k": "all_feasible", "b": "all_feasible"},
      "estimators": ["quadrature", "monte_carlo"],
      "sim": {"samples": 100000, "seed": 42},
      "output": {"format": "csv", "path": "demo.csv"}
    }

``policies`` is either an explicit list of ``{"k": .., "b": ..}`` pairs or a
sweep whose ``k`` and ``b`` entries are integer lists or ``"all_feasible"``.
Output paths are resolved against the current directory.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .analytic import solve_r_prime
from .optimizer import SimOptions, evaluate, feasible_batches, feasible_k, optimize_batch, optimize_joint
from .service_models import ServiceModel, ShiftedExponential, model_from_dict, model_to_dict
from .simulator import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    METHODS,
    CompletionEstimate,
    InfeasiblePolicyError,
    Policy,
    SystemSpec,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepRecord",
    "parse_config",
    "load_config",
    "expand_policies",
    "make_record",
    "run_sweep",
    "run_config",
    "write_records",
    "records_to_csv",
    "records_from_csv",
    "records_to_json",
    "PRESETS",
    "PresetResult",
    "preset",
]

log = logging.getLogger(__name__)

_TOP_KEYS = {"scenario_id", "system", "model", "policies", "estimators", "sim", "output"}
_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid experiment config; the message starts with the offending key path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario_id: str
    spec: SystemSpec
    model: ServiceModel
    policies: tuple  # expanded, validated Policy objects
    estimators: tuple
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    output_format: str = "csv"
    output_path: str | None = None


@dataclass(frozen=True)
class SweepRecord:
    scenario_id: str
    n: int
    j: int
    l: float
    k: int
    r: float
    b: int
    g: int
    model_type: str
    model_params: str  # JSON object of the model's parameters
    estimator: str
    mean: float
    std_err: float
    samples: int
    seed: int | None


FIELDNAMES = [f.name for f in fields(SweepRecord)]
_INT_FIELDS = {"n", "j", "k", "b", "g", "samples"}
_FLOAT_FIELDS = {"l", "r", "mean", "std_err"}


# Parsing ----------------------------------------------------------------------


def _object(value, path: str, allowed: set) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    return value


def _int(value, path: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(path, f"expected an integer >= {minimum}, got {value!r}")
    return value


def _int_list(value, path: str) -> list | str:
    if value == "all_feasible":
        return value
    if not isinstance(value, list) or not value:
        raise ConfigError(path, 'expected a non-empty integer list or "all_feasible"')
    return [_int(v, f"{path}[{i}]") for i, v in enumerate(value)]


def expand_policies(spec: SystemSpec, policies, path: str = "policies") -> list[Policy]:
    """Expand an explicit list or a k/b sweep into validated policies."""
    out = []
    if isinstance(policies, list):
        if not policies:
            raise ConfigError(path, "policy list is empty")
        for i, item in enumerate(policies):
            item = _object(item, f"{path}[{i}]", {"k", "b"})
            for key in ("k", "b"):
                if key not in item:
                    raise ConfigError(f"{path}[{i}].{key}", "missing")
            k, b = _int(item["k"], f"{path}[{i}].k"), _int(item["b"], f"{path}[{i}].b")
            try:
                out.append(Policy(spec, k, b))
            except InfeasiblePolicyError as exc:
                raise ConfigError(f"{path}[{i}]", str(exc)) from None
        return out
    sweep = _object(policies, path, {"k", "b"})
    ks = _int_list(sweep.get("k", "all_feasible"), f"{path}.k")
    bs = _int_list(sweep.get("b", "all_feasible"), f"{path}.b")
    for k in feasible_k(spec) if ks == "all_feasible" else ks:
        if k > spec.n or spec.j % k:
            raise ConfigError(f"{path}.k", f"k={k} infeasible: need k <= n={spec.n} and k | J={spec.j}")
        s = spec.j // k
        for b in feasible_batches(s) if bs == "all_feasible" else bs:
            try:
                out.append(Policy(spec, k, b))
            except InfeasiblePolicyError as exc:
                raise ConfigError(f"{path}.b", str(exc)) from None
    return out


def parse_config(doc: dict, default_id: str = "sweep") -> ExperimentConfig:
    doc = _object(doc, "", _TOP_KEYS)
    for key in ("system", "model", "policies", "estimators"):
        if key not in doc:
            raise ConfigError(key, "missing")
    system = _object(doc["system"], "system", {"n", "j"})
    for key in ("n", "j"):
        if key not in system:
            raise ConfigError(f"system.{key}", "missing")
    spec = SystemSpec(_int(system["n"], "system.n"), _int(system["j"], "system.j"))

    model_doc = doc["model"]
    try:
        model = model_from_dict(model_doc)
    except ValueError as exc:
        msg = str(exc)
        field = next((name for name in ("delta", "w", "t_fast", "t_slow", "eps", "type")
                      if msg.startswith(name)), None)
        raise ConfigError(f"model.{field}" if field else "model", msg) from None

    estimators = doc["estimators"]
    if not isinstance(estimators, list) or not estimators:
        raise ConfigError("estimators", "expected a non-empty list")
    for i, name in enumerate(estimators):
        if name not in METHODS:
            raise ConfigError(f"estimators[{i}]", f"unknown estimator {name!r}; choose from {METHODS}")

    sim = _object(doc.get("sim", {}), "sim", {"samples", "seed"})
    samples = _int(sim.get("samples", DEFAULT_SAMPLES), "sim.samples")
    seed = _int(sim.get("seed", DEFAULT_SEED), "sim.seed", minimum=0)

    output = _object(doc.get("output", {}), "output", {"format", "path"})
    fmt = output.get("format", "csv")
    if fmt not in _FORMATS:
        raise ConfigError("output.format", f"expected one of {_FORMATS}, got {fmt!r}")
    out_path = output.get("path")
    if out_path is not None and not isinstance(out_path, str):
        raise ConfigError("output.path", "expected a string")

    scenario = doc.get("scenario_id", default_id)
    if not isinstance(scenario, str):
        raise ConfigError("scenario_id", "expected a string")

    return ExperimentConfig(
        scenario_id=scenario,
        spec=spec,
        model=model,
        policies=tuple(expand_policies(spec, doc["policies"])),
        estimators=tuple(estimators),
        samples=samples,
        seed=seed,
        output_format=fmt,
        output_path=out_path,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    return parse_config(doc, default_id=path.stem)


# Records ------------------------------------------------------------------------


def make_record(scenario_id: str, policy: Policy, model: ServiceModel,
                est: CompletionEstimate, seed: int | None) -> SweepRecord:
    spec = policy.spec
    params = {k: v for k, v in model_to_dict(model).items() if k != "type"}
    return SweepRecord(
        scenario_id=scenario_id,
        n=spec.n,
        j=spec.j,
        l=spec.l,
        k=policy.k,
        r=policy.r,
        b=policy.b,
        g=policy.g,
        model_type=model.type_name,
        model_params=json.dumps(params, sort_keys=True),
        estimator=est.method,
        mean=est.mean,
        std_err=est.std_err,
        samples=est.samples,
        seed=seed if est.method == "monte_carlo" else None,
    )


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(FIELDNAMES)
    for rec in records:
        row = []
        for name in FIELDNAMES:
            value = getattr(rec, name)
            row.append("" if value is None else repr(value) if isinstance(value, float) else str(value))
        writer.writerow(row)
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames != FIELDNAMES:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        values = {}
        for name in FIELDNAMES:
            raw = row[name]
            if name == "seed":
                values[name] = None if raw == "" else int(raw)
            elif name in _INT_FIELDS:
                values[name] = int(raw)
            elif name in _FLOAT_FIELDS:
                values[name] = float(raw)
            else:
                values[name] = raw
        out.append(SweepRecord(**values))
    return out


def records_to_json(records) -> str:
    return json.dumps([asdict(r) for r in records], indent=2) + "\n"


def write_records(records, path, fmt: str = "csv") -> None:
    """Write records atomically (temp file in the target directory, then rename)."""
    if fmt not in _FORMATS:
        raise ValueError(f"format must be one of {_FORMATS}, got {fmt!r}")
    text = records_to_csv(records) if fmt == "csv" else records_to_json(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# Running ------------------------------------------------------------------------


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[SweepRecord]:
    """Evaluate every (policy, estimator) cell.

    Cells an estimator cannot handle (asymptotic at k = n, exact for
    shifted-exponential with b > 1, ...) are skipped with a warning.
    """
    sim = SimOptions(cfg.samples, cfg.seed, workers)
    records = []
    for policy in cfg.policies:
        for name in cfg.estimators:
            try:
                est = evaluate(cfg.spec, policy, cfg.model, name, sim)
            except InfeasiblePolicyError:
                raise
            except ValueError as exc:
                log.warning("skipping k=%d b=%d with %s: %s", policy.k, policy.b, name, exc)
                continue
            records.append(make_record(cfg.scenario_id, policy, cfg.model, est, cfg.seed))
    return records


def run_config(path, out: str | None = None, fmt: str | None = None, workers: int = 1) -> list[SweepRecord]:
    cfg = load_config(path)
    records = run_sweep(cfg, workers=workers)
    target = out or cfg.output_path
    if target:
        write_records(records, target, fmt or cfg.output_format)
    return records


# Presets ------------------------------------------------------------------------


@dataclass(frozen=True)
class PresetDef:
    name: str
    kind: str  # batch | joint | threshold
    n: int = 0
    j: int = 0
    delta: float = 1.0
    w: float = 1.0
    ks: tuple = ()
    expected: str = ""
    note: str = ""


PRESETS = {
    p.name: p
    for p in [
        PresetDef("fig2a", "batch", 10, 112, ks=(4, 8), expected="b* = 1 at k=4; b* = 14 at k=8"),
        PresetDef("fig2b", "batch", 10, 112, ks=(7,), expected="b* = 16 at k=7"),
        PresetDef("fig2c", "batch", 10, 56, ks=(7,), expected="b* = 1 at k=7"),
        PresetDef("fig3a", "joint", 10, 60, delta=0.1, expected="(k,b)* = (1,1)"),
        PresetDef(
            "fig3b", "joint", 10, 60, delta=3.0, expected="(k,b)* = (10,6)",
            note="figure caption says delta=10 with minimum batch; body text says delta=3 "
                 "with maximum batch; this preset follows the body text",
        ),
        PresetDef("fig3c", "joint", 12, 12, delta=1.0, expected="(k,b)* = (k,1) with 1<k<12"),
        PresetDef("fig3d", "joint", 10, 60, delta=1.0, expected="(k,b)* = (10,6)"),
        PresetDef("table_rprime", "threshold", expected="R' ~ 0.72"),
    ]
}


@dataclass
class PresetResult:
    name: str
    records: list
    verdict: str
    expected: str
    matches: bool
    note: str = ""


def _joint_matches(name: str, k: int, b: int, n: int) -> bool:
    if name == "fig3c":
        return 1 < k < n and b == 1
    want = PRESETS[name].expected.split("= ")[1].strip("()").split(",")
    return (k, b) == (int(want[0]), int(want[1]))


def preset(name: str, estimator: str = "quadrature", sim: SimOptions = SimOptions()) -> PresetResult:
    """Run a named scenario; Fig. 2 presets use delta = w = 1."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[name]
    if p.kind == "threshold":
        res = solve_r_prime()
        verdict = f"m1 = {res.m1:.6f}, R' = {res.r_prime:.6f}"
        return PresetResult(name, [], verdict, p.expected, round(res.r_prime, 2) == 0.72)

    spec = SystemSpec(p.n, p.j)
    model = ShiftedExponential(p.delta, p.w)
    seed = sim.seed
    records = []
    if p.kind == "batch":
        parts = []
        for k in p.ks:
            rep = optimize_batch(spec, model, k, estimator, sim=sim)
            records += [make_record(name, pol, model, est, seed) for pol, est in rep.table]
            flag = " (inconclusive)" if rep.inconclusive else ""
            parts.append(f"b* = {rep.best_policy.b} at k={k}{flag}")
        verdict = "; ".join(parts)
        matches = verdict == p.expected
    else:
        rep = optimize_joint(spec, model, estimator, sim=sim)
        records = [make_record(name, pol, model, est, seed) for pol, est in rep.table]
        k, b = rep.best_policy.k, rep.best_policy.b
        verdict = f"(k,b)* = ({k},{b})" + (" (inconclusive)" if rep.inconclusive else "")
        matches = _joint_matches(name, k, b, p.n) and not rep.inconclusive
    return PresetResult(name, records, verdict, p.expected, matches, p.note)
