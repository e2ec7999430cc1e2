"""Command-line entry point.

Records go to ``--out`` (or stdout when omitted); human-readable summary
lines go to stderr.  Exit status: 0 success, 1 validation error, 2
numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .analytic import asymptotic_ejct, quadrature_ejct
from .experiments import (
    PRESETS,
    load_config,
    make_record,
    preset,
    records_to_csv,
    records_to_json,
    run_sweep,
    write_records,
)
from .optimizer import SimOptions, optimize_batch, optimize_joint, recommend_strategy
from .service_models import BiModal, ShiftedExponential
from .simulator import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    METHODS,
    CompletionEstimate,
    Policy,
    SystemSpec,
    path_property_battery,
    simulate_ejct,
)
from .special_fn import NumericalError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _system_args(p: argparse.ArgumentParser, need_k: bool, need_b: bool) -> None:
    p.add_argument("--n", type=int, required=True, help="number of workers")
    p.add_argument("--job-size", type=int, required=True, help="job size J in CUs")
    if need_k:
        p.add_argument("--k", type=int, required=True, help="tasks needed to finish (code rate k/n)")
    if need_b:
        p.add_argument("--b", type=int, required=True, help="batch size in CUs")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["shifted_exponential", "bimodal"], default="shifted_exponential")
    p.add_argument("--delta", type=float, default=1.0, help="shifted exponential: per-CU floor")
    p.add_argument("--w", type=float, default=1.0, help="shifted exponential: mean of the random part")
    p.add_argument("--t-fast", type=float, default=1.0, help="bi-modal: fast CU time")
    p.add_argument("--t-slow", type=float, default=5.0, help="bi-modal: slow CU time")
    p.add_argument("--eps", type=float, default=0.1, help="bi-modal: probability a CU is slow")


def _run_args(p: argparse.ArgumentParser, estimator: str | None = "quadrature") -> None:
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo blocks")
    if estimator is not None:
        p.add_argument("--estimator", choices=METHODS, default=estimator)
    p.add_argument("--out", help="write records here instead of stdout")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="batchcode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="Monte Carlo estimate for one policy")
    _system_args(p, True, True)
    _model_args(p)
    _run_args(p, estimator=None)

    p = sub.add_parser("analytic", help="large-n formula for one policy (shifted exponential)")
    _system_args(p, True, True)
    _model_args(p)
    _run_args(p, estimator=None)

    p = sub.add_parser("quadrature", help="exact finite-n value for one policy (shifted exponential)")
    _system_args(p, True, True)
    _model_args(p)
    _run_args(p, estimator=None)

    p = sub.add_parser("optimize-batch", help="best batch size at fixed k")
    _system_args(p, True, False)
    _model_args(p)
    _run_args(p)
    p.add_argument("--restricted", action="store_true", help="only compare b=1 and b=s")

    p = sub.add_parser("optimize-joint", help="best (k, b) pair")
    _system_args(p, False, False)
    _model_args(p)
    _run_args(p)

    p = sub.add_parser("recommend", help="replication vs splitting vs coding")
    _system_args(p, False, False)
    _model_args(p)
    _run_args(p)

    p = sub.add_parser("sweep", help="run a JSON sweep config")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("preset", help="run a named experiment scenario")
    p.add_argument("name", choices=sorted(PRESETS))
    _run_args(p)

    p = sub.add_parser("check", help="run the sample-path property battery")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _model(args):
    if args.model == "bimodal":
        return BiModal(args.t_fast, args.t_slow, args.eps)
    return ShiftedExponential(args.delta, args.w)


def _emit(records, args) -> None:
    if args.out:
        write_records(records, args.out, args.format or "csv")
    else:
        text = records_to_json(records) if args.format == "json" else records_to_csv(records)
        sys.stdout.write(text)


def _say(line: str) -> None:
    print(line, file=sys.stderr)


def _single(args, method: str):
    spec = SystemSpec(args.n, args.job_size)
    policy = Policy(spec, args.k, args.b)
    model = _model(args)
    if method == "monte_carlo":
        est = simulate_ejct(spec, policy, model, args.samples, args.seed, args.workers)
    elif method == "asymptotic":
        res = asymptotic_ejct(model, spec.l, policy.r, policy.b)
        _say(f"m = {res.m:.12g}, f(b,R) = {res.f_value:.12g}")
        est = CompletionEstimate(res.expected_time, 0.0, 0, "asymptotic")
    else:
        value = quadrature_ejct(model, spec.n, policy.k, policy.b, policy.g)
        est = CompletionEstimate(value, 0.0, 0, "quadrature")
    _say(f"E[job time] = {est.mean:.12g}" + (f" +/- {est.std_err:.3g}" if est.std_err else ""))
    _emit([make_record("cli", policy, model, est, args.seed)], args)


def _dispatch(args) -> int:
    cmd = args.command
    if cmd in ("simulate", "analytic", "quadrature"):
        _single(args, {"simulate": "monte_carlo", "analytic": "asymptotic", "quadrature": "quadrature"}[cmd])
    elif cmd in ("optimize-batch", "optimize-joint"):
        spec, model = SystemSpec(args.n, args.job_size), _model(args)
        sim = SimOptions(args.samples, args.seed, args.workers)
        if cmd == "optimize-batch":
            rep = optimize_batch(spec, model, args.k, args.estimator, args.restricted, sim)
        else:
            rep = optimize_joint(spec, model, args.estimator, sim)
        best = rep.best_policy
        _say(f"best (k,b) = ({best.k},{best.b}), E[job time] = {rep.best_value:.12g}"
             + (" (inconclusive: rerun with more samples)" if rep.inconclusive else ""))
        for k, b, why in rep.skipped:
            _say(f"skipped (k,b) = ({k},{b}): {why}")
        _emit([make_record("cli", p, model, e, args.seed) for p, e in rep.table], args)
    elif cmd == "recommend":
        spec, model = SystemSpec(args.n, args.job_size), _model(args)
        sim = SimOptions(args.samples, args.seed, args.workers)
        rec = recommend_strategy(spec, model, args.estimator, sim)
        _say(f"recommended: {rec.label} (k={rec.policy.k}, b={rec.policy.b}); "
             f"W/delta = {rec.w_over_delta:.6g}, l = {rec.l:.6g}")
        records = [make_record("cli", rec.policies[name], model, est, args.seed)
                   for name, est in rec.values.items()]
        for name, est in rec.values.items():
            _say(f"  {name}: {est.mean:.12g}")
        _emit(records, args)
    elif cmd == "sweep":
        cfg = load_config(args.config)
        records = run_sweep(cfg, workers=args.workers)
        target = args.out or cfg.output_path
        fmt = args.format or cfg.output_format
        if target:
            write_records(records, target, fmt)
        else:
            sys.stdout.write(records_to_json(records) if fmt == "json" else records_to_csv(records))
        _say(f"{cfg.scenario_id}: {len(records)} records")
    elif cmd == "preset":
        res = preset(args.name, args.estimator, SimOptions(args.samples, args.seed, args.workers))
        _say(f"{res.name}: {res.verdict}  [expected {res.expected}: {'match' if res.matches else 'MISMATCH'}]")
        if res.note:
            _say(f"note: {res.note}")
        if res.records:
            _emit(res.records, args)
    elif cmd == "check":
        result = path_property_battery(args.trials, args.seed)
        _say(f"{result.trials} matrices, {result.checks} groupings: "
             f"{result.min_violations} min-superadditivity and "
             f"{result.max_violations} max-subadditivity violations")
        return EXIT_OK if result.ok else EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ArithmeticError, NumericalError) as exc:
        _say(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
