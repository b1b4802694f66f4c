"""Command-line entry point.

Exit codes: 0 success, 1 failed check (gradcheck), 2 usage, configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiment as ex
from .grad import analytic_gradient_single_layer, fd_partial, psr_partial
from .model import EvalTag, Executor, ExecutorConfig, ReuploadingModel
from .sim import derive_rng

_GRADCHECK_KEY = (4000,)


class UsageError(Exception):
    pass


def _shared_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--seed", dest="master_seed", type=int, default=S, help="master seed (default 1234)")
    p.add_argument("--layers", dest="n_layers", type=int, default=S, help="re-uploading layers L (default 3)")
    p.add_argument("--shots", dest="n_shots", type=int, default=S, help="shots per estimation (default 1024)")
    p.add_argument("--exact", dest="exact", action="store_true", default=S, help="use the exact executor")
    p.add_argument("--out", dest="out", default="out", help="output directory (default ./out)")
    p.add_argument("--config", dest="config", default=None, help="JSON file with run settings")
    return p


def _training_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--epochs", dest="n_epochs", type=int, default=S)
    p.add_argument("--eta", dest="eta", type=float, default=S)
    p.add_argument("--eps-j", dest="eps_j", type=float, default=S)
    p.add_argument("--data", dest="n_data", type=int, default=S)
    p.add_argument("--sigma0", dest="sigma0", type=float, default=S, help="CMA-ES initial step size")
    p.add_argument("--reduction", dest="reduction", choices=("mean", "sum"), default=S)
    _prediction_flags(p)


def _prediction_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--points", dest="n_points", type=int, default=S)
    p.add_argument("--reps", dest="n_reps", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_parser()
    parser = argparse.ArgumentParser(
        prog="psrqubit",
        description="Parameter-shift training of a single-qubit re-uploading regressor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[shared], help="train and write report/predictions")
    _training_flags(train)
    train.add_argument("--optimizer", dest="optimizer", choices=ex.OPTIMIZERS, default=argparse.SUPPRESS)

    compare = sub.add_parser("compare", parents=[shared], help="train with both optimizers")
    _training_flags(compare)

    predict = sub.add_parser("predict", parents=[shared], help="prediction statistics of a saved model")
    predict.add_argument("--model", required=True, help="model.json written by train")
    _prediction_flags(predict)

    grad = sub.add_parser("gradcheck", parents=[shared], help="shift rule vs finite differences")
    grad.add_argument("--trials", type=int, default=200)
    grad.add_argument("--tolerance", type=float, default=1e-6)
    grad.add_argument("--h", type=float, default=1e-5, help="finite-difference step")

    fig = sub.add_parser("figure1", parents=[shared], help="corrected vs naive shift rule with feature scaling")
    fig.add_argument("--thetas", type=int, default=5)
    fig.add_argument("--points", type=int, default=41)
    fig.add_argument("--c", type=float, default=0.2)
    return parser


def resolve_config(args: argparse.Namespace) -> ex.RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values: dict = {}
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError(f"config {args.config} must hold a JSON object")
        unknown = set(loaded) - ex.RunConfig.field_names()
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
    for name in ex.RunConfig.field_names():
        if name in vars(args):
            values[name] = getattr(args, name)
    try:
        return ex.RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_train(args, config: ex.RunConfig) -> int:
    result = ex.run_regression_experiment(config)[config.optimizer]
    ex.write_regression_outputs(Path(args.out), result, config)
    r = result.report
    print(
        f"{config.optimizer}: {r.stop_reason.value} after {r.epochs_run} epochs, "
        f"J={r.final_loss:.3e} (best {r.best_loss:.3e}), {r.total_circuit_evals} circuit evals"
    )
    return 0


def cmd_compare(args, config: ex.RunConfig) -> int:
    results = ex.run_regression_experiment(config, optimizers=ex.OPTIMIZERS)
    for name, result in results.items():
        ex.write_regression_outputs(Path(args.out) / name, result, replace(config, optimizer=name))
        r = result.report
        print(
            f"{name}: {r.stop_reason.value} after {r.epochs_run} epochs, "
            f"best J={r.best_loss:.3e}, band coverage {result.coverage:.2f}"
        )
    return 0


def cmd_predict(args, config: ex.RunConfig) -> int:
    try:
        model = ReuploadingModel.from_json(Path(args.model).read_text())
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot load model {args.model}: {exc}") from exc
    stats, curve, view = ex.evaluate_model(model, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ex.write_predictions_csv(out / "predictions.csv", stats, curve, view)
    print(f"band coverage {ex.band_coverage(stats, curve):.2f} over {stats.grid.size} points")
    return 0


def gradcheck_rows(n_layers: int, trials: int, h: float, executor: Executor, master_seed: int):
    rng = derive_rng(master_seed, _GRADCHECK_KEY)
    n_params = 3 * n_layers
    for trial in range(trials):
        model = ReuploadingModel(n_layers, rng.uniform(-np.pi, np.pi, n_params))
        x = float(rng.uniform(-1, 1))
        analytic = analytic_gradient_single_layer(model, x) if n_layers == 1 else None
        for i in range(n_params):
            psr = psr_partial(model, x, executor, i, EvalTag(epoch=trial))
            fd = fd_partial(model, x, i, h)
            yield {
                "param_index": i,
                "psr": psr,
                "fd": fd,
                "analytic": None if analytic is None else float(analytic[i]),
                "abs_err_psr_fd": abs(psr - fd),
            }


def cmd_gradcheck(args, config: ex.RunConfig) -> int:
    if args.trials < 1:
        raise UsageError("trials must be ≥ 1")
    if not args.h > 0:
        raise UsageError("h must be > 0")
    # exact by default here; an explicit --shots switches to sampled estimation
    sampled = "n_shots" in vars(args) and not config.exact
    exec_cfg = (
        ExecutorConfig.shots(config.n_shots, config.master_seed)
        if sampled
        else ExecutorConfig.exact(config.master_seed)
    )
    rows = list(gradcheck_rows(config.n_layers, args.trials, args.h, Executor(exec_cfg), config.master_seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ex.write_csv(
        out / "gradcheck.csv",
        ("param_index", "psr", "fd", "analytic", "abs_err_psr_fd"),
        (
            [r["param_index"], repr(r["psr"]), repr(r["fd"]),
             "" if r["analytic"] is None else repr(r["analytic"]), repr(r["abs_err_psr_fd"])]
            for r in rows
        ),
    )
    worst = max(r["abs_err_psr_fd"] for r in rows)
    ok = worst <= args.tolerance
    print(f"{len(rows)} partials, max |psr - fd| = {worst:.3e}, tolerance {args.tolerance:g}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_figure1(args, config: ex.RunConfig) -> int:
    if args.thetas < 1:
        raise UsageError("thetas must be ≥ 1")
    if args.points < 1:
        raise UsageError("points must be ≥ 1")
    rows = ex.run_figure1_experiment(args.thetas, ex.equispaced_grid(args.points), config.master_seed, args.c)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ex.write_figure1_csv(out / "figure1.csv", rows)
    worst_good = max(r["discrepancy_corrected"] for r in rows)
    worst_naive = max(r["discrepancy_uncorrected"] for r in rows)
    print(f"max discrepancy: corrected {worst_good:.3e}, uncorrected {worst_naive:.3e}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "compare": cmd_compare,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
    "figure1": cmd_figure1,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"psrqubit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"psrqubit {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
