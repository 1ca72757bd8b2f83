"""Command line interface: fit, simulate, evaluate, loglik, diagnose.

Reports go to stdout as JSON lines; diagnostics go to stderr. Exit status is
0 on success, 2 for input or validation errors and 3 for numerical or
contract errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import dataio, evaluation
from .core import ContractError, FitConfig, ValidationError
from .likelihood import IMPOSSIBLE, process_loglik
from .sampler import fit
from .simulator import SimulationConfig, simulate

log = logging.getLogger("woldgranger")

EXIT_INPUT = 2
EXIT_NUMERIC = 3
DEFAULT_METRICS = "precision@5,precision@10,precision@20,kendall,relerr"


def _emit(record: dict):
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else ("-inf" if v < 0 else "inf")
        return v

    print(json.dumps({k: clean(v) for k, v in record.items()}))


def _float_or_auto(text):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def cmd_fit(args):
    collection, id_map, _ = dataio.load_input(args.input, args.format, args.top_k)
    mode = {"mh": "mh_fptree", "gibbs": "exact_gibbs"}[args.sampler]
    config = FitConfig(iterations=args.iters, alpha_prior=args.alpha_prior, sampler_mode=mode,
                       seed=args.seed, workers=args.workers, mu_floor=args.mu_floor)
    log.info("fitting K=%d N=%d for %d iterations (%s)", collection.K,
             collection.total_events, args.iters, mode)
    result = fit(collection, config)
    dataio.save_model(result, args.output, id_map)
    last = result.trace[-1]
    _emit({"command": "fit", "K": collection.K, "N": collection.total_events,
           "iterations": args.iters, "exogenous_fraction": last["exogenous_fraction"],
           "output": args.output})


def cmd_simulate(args):
    model = dataio.load_model(args.model)
    config = SimulationConfig(model.params, args.horizon, seed=args.seed,
                              max_events=args.max_events, zero_wold=args.zero_wold)
    collection = simulate(config)
    if collection.truncated:
        log.warning("stopped after %d events (max-events cap)", collection.total_events)
    dataio.save_events(collection, args.output, model.id_map or None)
    _emit({"command": "simulate", "K": collection.K, "N": collection.total_events,
           "horizon": collection.horizon, "truncated": collection.truncated,
           "output": args.output})


def _metric(name, estimate, truth, no_diagonal):
    if name.startswith("precision@"):
        n = int(name.split("@", 1)[1])
        rows = evaluation.precision_per_row(estimate, truth, n, exclude_diagonal=no_diagonal)
        return evaluation.precision_at_n(estimate, truth, n, exclude_diagonal=no_diagonal), rows
    if name == "kendall":
        rows = evaluation.kendall_per_row(estimate, truth)
        return evaluation.kendall_avg(estimate, truth), rows
    if name == "relerr":
        cells = evaluation.relative_error_cells(estimate, truth)
        return float(cells.mean()), cells.mean(axis=1)
    raise ValidationError(f"unknown metric {name!r}")


def cmd_evaluate(args):
    model = dataio.load_model(args.model)
    k = model.params.K
    id_map = model.id_map or {str(i): i for i in range(k)}
    truth = dataio.truth_from_file(args.ground_truth, args.truth_format, id_map)
    if truth.K != k:
        raise ValidationError(f"ground truth has K={truth.K} but model has K={k}")
    estimate = np.array(model.params.granger)
    scored = [("model", estimate)]
    if args.null_model_seed is not None:
        scored.append(("null", evaluation.null_model_ranking(k, args.null_model_seed)))
    for name in [m.strip() for m in args.metrics.split(",") if m.strip()]:
        for source, matrix in scored:
            value, rows = _metric(name, matrix, truth, args.no_diagonal)
            record = {"metric": name, "source": source, "value": value}
            if args.per_row:
                record["per_row"] = [None if math.isnan(x) else float(x) for x in rows]
            _emit(record)


def cmd_loglik(args):
    model = dataio.load_model(args.model)
    collection, _, _ = dataio.load_input(args.input, args.format)
    collection.check_params(model.params)
    parts = [process_loglik(model.params, collection, a, censored=args.censored)
             for a in range(collection.K)]
    total = IMPOSSIBLE if IMPOSSIBLE in parts else math.fsum(parts)
    for a, value in enumerate(parts):
        _emit({"process": a, "loglik": value})
    _emit({"total_loglik": total, "N": collection.total_events})


def cmd_diagnose(args):
    collection, id_map, _ = dataio.load_input(args.input, args.format)
    labels = {i: lbl for lbl, i in id_map.items()}
    report = evaluation.wold_adequacy(collection)
    for a, r in sorted(report.per_process.items()):
        _emit({"process": labels.get(a, a), "pearson_consecutive_gaps": r})
    _emit({"median_pearson": report.median, "scored_processes": len(report.per_process),
           "K": collection.K})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="woldgranger", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="learn a Granger matrix from event data")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("triples", "events"), default="triples")
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--alpha-prior", type=_float_or_auto, default=None, help="FLOAT or auto (1/K)")
    p.add_argument("--sampler", choices=("mh", "gibbs"), default="mh")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--mu-floor", type=_float_or_auto, default=None, help="FLOAT or auto (1/horizon)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw events from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-events", type=int, default=None)
    p.add_argument("--zero-wold", action="store_true", help="background rates only")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score a model against a ground truth")
    p.add_argument("--model", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--truth-format", choices=("triples", "matrix"), default="triples")
    p.add_argument("--metrics", default=DEFAULT_METRICS)
    p.add_argument("--no-diagonal", action="store_true")
    p.add_argument("--null-model-seed", type=int, default=None)
    p.add_argument("--per-row", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("loglik", help="exact log-likelihood of data under a model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("triples", "events"), default="triples")
    p.add_argument("--censored", action="store_true", help="integrate up to the horizon")
    p.set_defaults(func=cmd_loglik)

    p = sub.add_parser("diagnose", help="correlation of consecutive inter-event times")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("triples", "events"), default="triples")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
