"""Parameter-shift gradients of <B> and independent derivative oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .model import (
    EvalTag,
    Executor,
    ExecutorConfig,
    ReuploadingModel,
    Shift,
    build_circuit,
    estimate,
)
from .sim import Axis, RotationGate


@dataclass(frozen=True)
class ShiftRuleConstants:
    """Shift rule for a gate ``exp(-i mu G)`` whose generator has eigenvalues ``+-r``."""

    r: float = 0.5
    s: float = math.pi / 2

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("eigenvalue magnitude r must be positive")
        if self.s != math.pi / (4 * self.r):
            raise ValueError(f"shift s={self.s} is not pi/(4r) for r={self.r}")

    @classmethod
    def for_eigenvalue(cls, r: float) -> "ShiftRuleConstants":
        return cls(r, math.pi / (4 * r))


# Generators sigma/2 of the implemented rotations.
ROTATION_SHIFT = ShiftRuleConstants()


@dataclass
class GradientReport:
    partials: np.ndarray
    n_circuit_evals: int


def _shift_tags(tag: EvalTag, param_index: int) -> tuple[EvalTag, EvalTag]:
    return (
        tag._replace(param_index=param_index, shift=Shift.PLUS),
        tag._replace(param_index=param_index, shift=Shift.MINUS),
    )


def psr_partial_plain(
    model: ReuploadingModel,
    x: float,
    executor: Executor,
    param_index: int,
    eval_tag: EvalTag = EvalTag(),
    constants: ShiftRuleConstants = ROTATION_SHIFT,
) -> float:
    """d<B>/d theta_i for a parameter that enters its angle additively."""
    if model.is_scale_param(param_index):
        raise ValueError(f"parameter {param_index} multiplies the feature; use psr_partial_scaled")
    theta = model.params[param_index]
    tag_plus, tag_minus = _shift_tags(eval_tag, param_index)
    f_plus = estimate(model.with_param(param_index, theta + constants.s), x, executor, tag_plus)
    f_minus = estimate(model.with_param(param_index, theta - constants.s), x, executor, tag_minus)
    return constants.r * (f_plus - f_minus)


def psr_partial_scaled(
    model: ReuploadingModel,
    x: float,
    executor: Executor,
    param_index: int,
    eval_tag: EvalTag = EvalTag(),
    corrected: bool = True,
    constants: ShiftRuleConstants = ROTATION_SHIFT,
) -> float:
    """d<B>/d theta_i for a parameter multiplying the feature ``x``.

    The corrected rule shifts the whole rotation angle by ``+-s`` and applies
    the chain-rule factor ``x``.  This is the same as shifting ``theta_i`` by
    ``+-s/x`` but never divides, so ``x = 0`` gives exactly zero.

    ``corrected=False`` gives the naive rule: shift ``theta_i`` by ``+-s``
    and leave the result unscaled.  It is wrong whenever ``x != 0``.
    """
    position, is_scale = model.locate(param_index)
    if not is_scale:
        raise ValueError(f"parameter {param_index} is not a feature scale; use psr_partial_plain")
    tag_plus, tag_minus = _shift_tags(eval_tag, param_index)
    if not corrected:
        theta = model.params[param_index]
        f_plus = estimate(model.with_param(param_index, theta + constants.s), x, executor, tag_plus)
        f_minus = estimate(model.with_param(param_index, theta - constants.s), x, executor, tag_minus)
        return constants.r * (f_plus - f_minus)

    gates = build_circuit(model, x)
    target = gates[position]
    gates[position] = replace(target, angle=target.angle + constants.s)
    f_plus = executor.run(gates, tag_plus)
    gates[position] = replace(target, angle=target.angle - constants.s)
    f_minus = executor.run(gates, tag_minus)
    return constants.r * (f_plus - f_minus) * x


def psr_partial(
    model: ReuploadingModel,
    x: float,
    executor: Executor,
    param_index: int,
    eval_tag: EvalTag = EvalTag(),
) -> float:
    if model.is_scale_param(param_index):
        return psr_partial_scaled(model, x, executor, param_index, eval_tag)
    return psr_partial_plain(model, x, executor, param_index, eval_tag)


def psr_gradient(
    model: ReuploadingModel,
    x: float,
    executor: Executor,
    eval_tag_base: EvalTag = EvalTag(),
) -> GradientReport:
    """Full gradient of <B> at one feature value: two estimations per parameter."""
    start = executor.n_calls
    partials = np.array(
        [psr_partial(model, x, executor, i, eval_tag_base) for i in range(model.n_params)]
    )
    return GradientReport(partials, executor.n_calls - start)


def _exact_value(model: ReuploadingModel, x: float) -> float:
    return estimate(model, x, Executor(ExecutorConfig.exact()))


def fd_partial(model: ReuploadingModel, x: float, param_index: int, h: float = 1e-5) -> float:
    """Central finite difference of the exact expectation."""
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    theta = model.params[param_index]
    f_plus = _exact_value(model.with_param(param_index, theta + h), x)
    f_minus = _exact_value(model.with_param(param_index, theta - h), x)
    return (f_plus - f_minus) / (2 * h)


def fd_gradient(model: ReuploadingModel, x: float, h: float = 1e-5) -> np.ndarray:
    return np.array([fd_partial(model, x, i, h) for i in range(model.n_params)])


def analytic_gradient_single_layer(model: ReuploadingModel, x: float) -> np.ndarray:
    """Closed-form gradient of ``cos(theta1 * x + theta2)``, valid only for one layer."""
    if model.n_layers != 1:
        raise ValueError("closed form exists only for n_layers = 1")
    t1, t2, _ = model.params
    d = -math.sin(t1 * x + t2)
    return np.array([d * x, d, 0.0])


def figure1_discrepancy(
    theta: float,
    x_grid: Sequence[float],
    c: float = 0.2,
    corrected: bool = True,
    constants: ShiftRuleConstants = ROTATION_SHIFT,
) -> np.ndarray:
    """|analytic - shift-rule| derivative of ``(<B> - c)^2`` for a single ``RX(theta * x)``.

    Evaluated exactly, without shot noise.
    """
    executor = Executor(ExecutorConfig.exact())
    out = np.empty(len(x_grid))
    for j, x in enumerate(x_grid):
        angle = theta * x
        b = executor.run([RotationGate(Axis.X, angle)])
        analytic = 2 * (math.cos(angle) - c) * (-math.sin(angle)) * x
        if corrected:
            f_plus = executor.run([RotationGate(Axis.X, angle + constants.s)])
            f_minus = executor.run([RotationGate(Axis.X, angle - constants.s)])
            d_b = constants.r * (f_plus - f_minus) * x
        else:
            f_plus = executor.run([RotationGate(Axis.X, (theta + constants.s) * x)])
            f_minus = executor.run([RotationGate(Axis.X, (theta - constants.s) * x)])
            d_b = constants.r * (f_plus - f_minus)
        out[j] = abs(analytic - 2 * (b - c) * d_b)
    return out
