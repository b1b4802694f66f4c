"""MSE loss, its shift-rule gradient, and the two training loops."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .adam import AdamState, adam_step
from .cmaes import CmaEs
from .grad import GradientReport, psr_gradient
from .model import EvalTag, Executor, ReuploadingModel, Shift, Stage, estimate
from .sim import derive_rng

# spawn-key namespace for optimizer randomness, kept apart from EvalTag streams
_CMAES_SAMPLING_KEY = (1000,)


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        if xs.size != ys.size:
            raise ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})")
        if xs.size < 1:
            raise ValueError("dataset must contain at least one point")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __len__(self):
        return self.xs.size


class Reduction(str, Enum):
    MEAN = "mean"
    SUM = "sum"


def _normalizer(n: int, reduction: Reduction) -> float:
    return 1.0 / n if Reduction(reduction) is Reduction.MEAN else 1.0


def mse_loss(
    model: ReuploadingModel,
    data: Dataset,
    executor: Executor,
    eval_tag: EvalTag = EvalTag(Stage.LOSS),
    reduction: Reduction = Reduction.MEAN,
) -> float:
    """Squared error over ``data``; one circuit estimation per point."""
    total = 0.0
    for j, (x, y) in enumerate(zip(data.xs, data.ys)):
        b = estimate(model, x, executor, eval_tag._replace(data_index=j, shift=Shift.BASE))
        total += (b - y) ** 2
    return total * _normalizer(len(data), reduction)


def mse_gradient(
    model: ReuploadingModel,
    data: Dataset,
    executor: Executor,
    eval_tag: EvalTag = EvalTag(Stage.GRADIENT),
    reduction: Reduction = Reduction.MEAN,
) -> GradientReport:
    """Loss gradient from per-point ``2 (<B> - y) d<B>``.

    Each point costs one base estimation plus two shifted ones per parameter.
    """
    start = executor.n_calls
    total = np.zeros(model.n_params)
    for j, (x, y) in enumerate(zip(data.xs, data.ys)):
        tag = eval_tag._replace(data_index=j)
        b = estimate(model, x, executor, tag._replace(param_index=0, shift=Shift.BASE))
        d_b = psr_gradient(model, x, executor, tag).partials
        total += 2 * (b - y) * d_b
    total *= _normalizer(len(data), reduction)
    return GradientReport(total, executor.n_calls - start)


class StopReason(str, Enum):
    THRESHOLD = "Threshold"
    MAX_EPOCHS = "MaxEpochs"


@dataclass
class TrainConfig:
    eta: float = 0.1
    n_epochs: int = 100
    eps_j: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    reduction: Reduction = Reduction.MEAN
    sigma0: float = 1.0
    popsize: int | None = None

    def __post_init__(self):
        self.reduction = Reduction(self.reduction)
        if self.n_epochs < 1:
            raise ValueError("n_epochs must be ≥ 1")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if not self.eps_j >= 0:
            raise ValueError("eps_j must be ≥ 0")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be > 0")
        if self.popsize is not None and self.popsize < 2:
            raise ValueError("popsize must be ≥ 2")


@dataclass
class TrainReport:
    loss_history: list[float]
    theta_best: np.ndarray
    epochs_run: int
    total_circuit_evals: int
    stop_reason: StopReason
    initial_loss: float = math.nan
    best_loss: float = math.nan

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]

    def to_dict(self) -> dict:
        return {
            "loss_history": [float(v) for v in self.loss_history],
            "theta_best": [float(v) for v in self.theta_best],
            "epochs_run": self.epochs_run,
            "total_circuit_evals": self.total_circuit_evals,
            "stop_reason": self.stop_reason.value,
            "initial_loss": float(self.initial_loss),
            "best_loss": float(self.best_loss),
        }


@dataclass
class _Tracker:
    history: list[float] = field(default_factory=list)
    best_loss: float = math.inf
    best_theta: np.ndarray | None = None

    def record(self, loss: float, theta: np.ndarray) -> None:
        self.history.append(float(loss))
        if loss < self.best_loss:
            self.best_loss = float(loss)
            self.best_theta = np.array(theta, dtype=float)


def train_adam(
    model: ReuploadingModel,
    data: Dataset,
    executor: Executor,
    config: TrainConfig = TrainConfig(),
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> TrainReport:
    """Full-batch Adam on the shift-rule gradient.

    Every epoch takes one gradient step and then logs the loss at the new
    parameters; training stops as soon as a logged loss is ``<= eps_j``.
    """
    start = executor.n_calls
    initial = mse_loss(model, data, executor, EvalTag(Stage.INITIAL_LOSS), config.reduction)
    state = AdamState(
        model.n_params, config.eta, config.beta1, config.beta2, config.adam_epsilon
    )
    theta = np.array(model.params)
    tracker = _Tracker()
    stop = StopReason.MAX_EPOCHS
    for epoch in range(1, config.n_epochs + 1):
        current = model.with_params(theta)
        grad = mse_gradient(current, data, executor, EvalTag(Stage.GRADIENT, epoch), config.reduction)
        state, theta = adam_step(state, theta, grad.partials)
        loss = mse_loss(
            model.with_params(theta), data, executor, EvalTag(Stage.LOSS, epoch), config.reduction
        )
        tracker.record(loss, theta)
        if callback is not None:
            callback(epoch, loss, theta)
        if loss <= config.eps_j:
            stop = StopReason.THRESHOLD
            break
    return TrainReport(
        loss_history=tracker.history,
        theta_best=tracker.best_theta,
        epochs_run=len(tracker.history),
        total_circuit_evals=executor.n_calls - start,
        stop_reason=stop,
        initial_loss=initial,
        best_loss=tracker.best_loss,
    )


def train_cmaes(
    model: ReuploadingModel,
    data: Dataset,
    executor: Executor,
    config: TrainConfig = TrainConfig(),
    callback: Callable[[int, float, CmaEs], None] | None = None,
) -> TrainReport:
    """CMA-ES on the loss as a black box, started from the model's parameters.

    One epoch is one generation; its logged loss is the best fitness in the
    population.  Each fitness evaluation costs ``len(data)`` estimations.
    """
    start = executor.n_calls
    initial = mse_loss(model, data, executor, EvalTag(Stage.INITIAL_LOSS), config.reduction)
    rng = derive_rng(executor.config.master_seed, _CMAES_SAMPLING_KEY)
    es = CmaEs(model.params, config.sigma0, rng, config.popsize)
    tracker = _Tracker()
    stop = StopReason.MAX_EPOCHS
    for generation in range(1, config.n_epochs + 1):
        candidates = es.ask()
        fitness = np.array(
            [
                mse_loss(
                    model.with_params(cand),
                    data,
                    executor,
                    EvalTag(Stage.CMAES, generation, param_index=k),
                    config.reduction,
                )
                for k, cand in enumerate(candidates)
            ]
        )
        es.tell(candidates, fitness)
        k = int(np.argmin(fitness))
        tracker.record(fitness[k], candidates[k])
        if callback is not None:
            callback(generation, float(fitness[k]), es)
        if fitness[k] <= config.eps_j:
            stop = StopReason.THRESHOLD
            break
    return TrainReport(
        loss_history=tracker.history,
        theta_best=tracker.best_theta,
        epochs_run=len(tracker.history),
        total_circuit_evals=executor.n_calls - start,
        stop_reason=stop,
        initial_loss=initial,
        best_loss=tracker.best_loss,
    )
