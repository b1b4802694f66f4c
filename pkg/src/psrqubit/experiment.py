"""End-to-end experiments: the shift-correction study and the sin(2x) regression."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grad import figure1_discrepancy
from .model import EvalTag, Executor, ExecutorConfig, ExecMode, ReuploadingModel, Stage, estimate
from .optim import Dataset, Reduction, TrainConfig, TrainReport, train_adam, train_cmaes
from .sim import derive_rng

NORMALIZATION_OFFSET = 10.0
OPTIMIZERS = ("psr_adam", "cmaes")

# spawn keys for non-circuit randomness
_INIT_KEY = (2000,)
_FIGURE1_KEY = (3000,)


def sin2x(x):
    return np.sin(2 * np.asarray(x, dtype=float))


def equispaced_grid(n: int) -> np.ndarray:
    """``n`` equally spaced points on [-1, 1] with endpoints; a single point sits at 0."""
    if n < 1:
        raise ValueError(f"grid size must be >= 1, got {n}")
    if n == 1:
        return np.zeros(1)
    return np.linspace(-1.0, 1.0, n)


def make_dataset(n_data: int, law: Callable = sin2x) -> Dataset:
    xs = equispaced_grid(n_data)
    return Dataset(xs, law(xs))


def initial_params(n_layers: int, master_seed: int) -> np.ndarray:
    """theta_0, uniform on [-pi, pi] per parameter."""
    return derive_rng(master_seed, _INIT_KEY).uniform(-math.pi, math.pi, 3 * n_layers)


@dataclass(frozen=True)
class RunConfig:
    n_layers: int = 3
    n_data: int = 25
    n_shots: int = 1024
    eta: float = 0.1
    n_epochs: int = 100
    eps_j: float = 5e-3
    master_seed: int = 1234
    exact: bool = False
    optimizer: str = "psr_adam"
    n_points: int = 100
    n_reps: int = 100
    sigma0: float = 1.0
    reduction: str = "mean"

    def __post_init__(self):
        checks = [
            (self.n_layers >= 1, "n_layers must be ≥ 1"),
            (self.n_data >= 1, "n_data must be ≥ 1"),
            (self.n_shots >= 1, "n_shots must be ≥ 1"),
            (self.eta > 0, "eta must be > 0"),
            (self.n_epochs >= 1, "n_epochs must be ≥ 1"),
            (self.eps_j >= 0, "eps_j must be ≥ 0"),
            (0 <= self.master_seed < 2**64, "seed must be a 64-bit unsigned integer"),
            (self.optimizer in OPTIMIZERS, f"optimizer must be one of {', '.join(OPTIMIZERS)}"),
            (self.n_points >= 1, "n_points must be ≥ 1"),
            (self.n_reps >= 1, "n_reps must be ≥ 1"),
            (self.sigma0 > 0, "sigma0 must be > 0"),
            (self.reduction in ("mean", "sum"), "reduction must be 'mean' or 'sum'"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)

    @classmethod
    def field_names(cls) -> set[str]:
        return set(cls.__dataclass_fields__)

    def train_executor_config(self) -> ExecutorConfig:
        mode = ExecMode.EXACT if self.exact else ExecMode.SHOTS
        return ExecutorConfig(mode, self.n_shots, self.master_seed)

    def shots_executor_config(self) -> ExecutorConfig:
        return ExecutorConfig.shots(self.n_shots, self.master_seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            eta=self.eta,
            n_epochs=self.n_epochs,
            eps_j=self.eps_j,
            reduction=Reduction(self.reduction),
            sigma0=self.sigma0,
        )


@dataclass
class PredictionStats:
    grid: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_reps: int


@dataclass
class NormalizedView:
    k_offset: float
    normalized_mean: np.ndarray
    normalized_band_low: np.ndarray
    normalized_band_high: np.ndarray

    def recover_mean(self, law_values: np.ndarray) -> np.ndarray:
        return self.normalized_mean * (law_values + self.k_offset) - self.k_offset


def prediction_statistics(
    model: ReuploadingModel,
    executor: Executor,
    grid: Sequence[float],
    n_reps: int = 100,
) -> PredictionStats:
    """Repeat the estimation ``n_reps`` times per grid point.

    ``std`` is the spread of single predictions around their mean (ddof=0),
    so the standard error of the mean is ``std / sqrt(n_reps)``.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    grid = np.asarray(grid, dtype=float)
    samples = np.empty((grid.size, n_reps))
    for j, x in enumerate(grid):
        for rep in range(n_reps):
            samples[j, rep] = estimate(model, x, executor, EvalTag(Stage.PREDICT, rep, j))
    return PredictionStats(grid, samples.mean(axis=1), samples.std(axis=1), n_reps)


def exact_curve(model: ReuploadingModel, grid: Sequence[float]) -> np.ndarray:
    executor = Executor(ExecutorConfig.exact())
    return np.array([estimate(model, x, executor) for x in grid])


def normalized_view(
    stats: PredictionStats, law: Callable = sin2x, k: float = NORMALIZATION_OFFSET
) -> NormalizedView:
    denom = law(stats.grid) + k
    if np.any(denom <= 0):
        raise ValueError("law + k must be positive on the grid")
    return NormalizedView(
        k_offset=k,
        normalized_mean=(stats.mean + k) / denom,
        normalized_band_low=(stats.mean - stats.std + k) / denom,
        normalized_band_high=(stats.mean + stats.std + k) / denom,
    )


def band_coverage(stats: PredictionStats, curve: np.ndarray) -> float:
    """Fraction of grid points where ``curve`` lies inside mean +- std."""
    inside = np.abs(curve - stats.mean) <= stats.std
    return float(np.mean(inside))


@dataclass
class RegressionResult:
    optimizer: str
    report: TrainReport
    model: ReuploadingModel
    stats: PredictionStats
    exact: np.ndarray
    view: NormalizedView
    dataset: Dataset

    @property
    def coverage(self) -> float:
        return band_coverage(self.stats, self.exact)


def evaluate_model(
    model: ReuploadingModel,
    config: RunConfig,
    law: Callable = sin2x,
) -> tuple[PredictionStats, np.ndarray, NormalizedView]:
    grid = equispaced_grid(config.n_points)
    stats = prediction_statistics(model, Executor(config.shots_executor_config()), grid, config.n_reps)
    return stats, exact_curve(model, grid), normalized_view(stats, law)


def run_regression_experiment(
    config: RunConfig,
    optimizers: Sequence[str] | None = None,
    law: Callable = sin2x,
) -> dict[str, RegressionResult]:
    """Train on the law, then run the repeated-prediction protocol with theta_best.

    Predictions always use the shot-sampled executor; ``config.exact`` only
    switches the training executor.
    """
    if optimizers is None:
        optimizers = (config.optimizer,)
    data = make_dataset(config.n_data, law)
    start = ReuploadingModel(config.n_layers, initial_params(config.n_layers, config.master_seed))
    train_cfg = config.train_config()
    results = {}
    for name in optimizers:
        executor = Executor(config.train_executor_config())
        if name == "psr_adam":
            report = train_adam(start, data, executor, train_cfg)
        elif name == "cmaes":
            report = train_cmaes(start, data, executor, train_cfg)
        else:
            raise ValueError(f"unknown optimizer {name!r}")
        trained = start.with_params(report.theta_best)
        stats, curve, view = evaluate_model(trained, config, law)
        results[name] = RegressionResult(name, report, trained, stats, curve, view, data)
    return results


def run_figure1_experiment(
    n_thetas: int = 5,
    x_grid: Sequence[float] | None = None,
    master_seed: int = 1234,
    c: float = 0.2,
) -> list[dict]:
    """Corrected vs naive shift-rule error for ``n_thetas`` random single-RX circuits."""
    if n_thetas < 1:
        raise ValueError("n_thetas must be ≥ 1")
    if x_grid is None:
        x_grid = equispaced_grid(41)
    x_grid = np.asarray(x_grid, dtype=float)
    thetas = derive_rng(master_seed, _FIGURE1_KEY).uniform(-math.pi, math.pi, n_thetas)
    rows = []
    for theta_id, theta in enumerate(thetas):
        good = figure1_discrepancy(theta, x_grid, c, corrected=True)
        naive = figure1_discrepancy(theta, x_grid, c, corrected=False)
        for x, d_good, d_naive in zip(x_grid, good, naive):
            rows.append(
                {
                    "theta_id": theta_id,
                    "theta": float(theta),
                    "x": float(x),
                    "discrepancy_corrected": float(d_good),
                    "discrepancy_uncorrected": float(d_naive),
                }
            )
    return rows


# --- serialization -----------------------------------------------------------

PREDICTION_COLUMNS = (
    "x",
    "mean_shots",
    "std_shots",
    "exact_theoretical",
    "normalized_mean",
    "normalized_low",
    "normalized_high",
)
FIGURE1_COLUMNS = ("theta_id", "x", "discrepancy_corrected", "discrepancy_uncorrected")


def write_csv(path: Path, columns: Sequence[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def write_predictions_csv(
    path: Path, stats: PredictionStats, exact: np.ndarray, view: NormalizedView
) -> None:
    rows = zip(
        map(repr, map(float, stats.grid)),
        map(repr, map(float, stats.mean)),
        map(repr, map(float, stats.std)),
        map(repr, map(float, exact)),
        map(repr, map(float, view.normalized_mean)),
        map(repr, map(float, view.normalized_band_low)),
        map(repr, map(float, view.normalized_band_high)),
    )
    write_csv(path, PREDICTION_COLUMNS, rows)


def read_predictions_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {col: np.array([float(r[col]) for r in rows]) for col in PREDICTION_COLUMNS}


def write_figure1_csv(path: Path, rows: list[dict]) -> None:
    write_csv(
        path,
        FIGURE1_COLUMNS,
        ([r["theta_id"], repr(r["x"]), repr(r["discrepancy_corrected"]), repr(r["discrepancy_uncorrected"])] for r in rows),
    )


def report_payload(result: RegressionResult, config: RunConfig) -> dict:
    payload = result.report.to_dict()
    payload.update(
        optimizer=result.optimizer,
        master_seed=config.master_seed,
        config=asdict(config),
        dataset={"xs": result.dataset.xs.tolist(), "ys": result.dataset.ys.tolist()},
        model=result.model.to_dict(),
        band_coverage=result.coverage,
    )
    return payload


def write_json(path: Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_regression_outputs(out_dir: Path, result: RegressionResult, config: RunConfig) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "report.json", report_payload(result, config))
    write_json(out_dir / "model.json", result.model.to_dict())
    write_predictions_csv(out_dir / "predictions.csv", result.stats, result.exact, result.view)
