"""Data re-uploading ansatz and the executors that estimate <B> for it.

Each layer k applies ``RY(theta[3k] * x + theta[3k+1])`` followed by
``RZ(theta[3k+2])``; layers act on |0> in index order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .sim import (
    Axis,
    RotationGate,
    derive_rng,
    estimate_b,
    exact_expectation_z,
    run_circuit,
    sample_counts,
)

PARAMS_PER_LAYER = 3


@dataclass(frozen=True)
class AngleSpec:
    """Affine angle ``theta[scale] * x + theta[offset]``; either term may be absent."""

    scale_param_index: int | None = None
    offset_param_index: int | None = None
    uses_feature: bool = False

    def __post_init__(self):
        if self.scale_param_index is None and self.offset_param_index is None:
            raise ValueError("AngleSpec needs at least one parameter index")
        if self.uses_feature and self.scale_param_index is None:
            raise ValueError("a feature-dependent angle needs a scale parameter")

    def angle(self, params: np.ndarray, x: float) -> float:
        value = 0.0
        if self.uses_feature:
            value += params[self.scale_param_index] * x
        if self.offset_param_index is not None:
            value += params[self.offset_param_index]
        return float(value)


@dataclass(frozen=True)
class GateSpec:
    axis: Axis
    angle: AngleSpec


class ReuploadingModel:
    """Single-qubit re-uploading circuit with ``3 * n_layers`` parameters.

    Instances are immutable; ``with_params``/``with_param`` return copies.
    """

    def __init__(self, n_layers: int, params: Sequence[float] | None = None):
        if n_layers < 1:
            raise ValueError(f"n_layers must be >= 1, got {n_layers}")
        n_params = PARAMS_PER_LAYER * n_layers
        if params is None:
            params = np.zeros(n_params)
        arr = np.array(params, dtype=float).reshape(-1)
        if arr.size != n_params:
            raise ValueError(
                f"expected {n_params} parameters for {n_layers} layers, got {arr.size}"
            )
        arr.setflags(write=False)
        self._n_layers = n_layers
        self._params = arr
        self._gate_specs = tuple(_layer_gate_specs(n_layers))

    @property
    def n_layers(self) -> int:
        return self._n_layers

    @property
    def params(self) -> np.ndarray:
        return self._params

    @property
    def n_params(self) -> int:
        return self._params.size

    @property
    def gate_specs(self) -> tuple[GateSpec, ...]:
        return self._gate_specs

    def with_params(self, params: Sequence[float]) -> "ReuploadingModel":
        return ReuploadingModel(self._n_layers, params)

    def with_param(self, index: int, value: float) -> "ReuploadingModel":
        self._check_index(index)
        params = self._params.copy()
        params[index] = value
        return ReuploadingModel(self._n_layers, params)

    def locate(self, index: int) -> tuple[int, bool]:
        """Return ``(gate_position, is_scale)`` for the gate that uses parameter ``index``."""
        self._check_index(index)
        for pos, spec in enumerate(self._gate_specs):
            if spec.angle.scale_param_index == index:
                return pos, True
            if spec.angle.offset_param_index == index:
                return pos, False
        raise AssertionError(f"parameter {index} is not bound to any gate")

    def is_scale_param(self, index: int) -> bool:
        return self.locate(index)[1]

    def _check_index(self, index: int) -> None:
        if not 0 <= index < self.n_params:
            raise IndexError(f"parameter index {index} out of range [0, {self.n_params})")

    def to_dict(self) -> dict:
        return {"n_layers": self._n_layers, "params": [float(p) for p in self._params]}

    @classmethod
    def from_dict(cls, data: dict) -> "ReuploadingModel":
        return cls(int(data["n_layers"]), data["params"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ReuploadingModel":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, ReuploadingModel):
            return NotImplemented
        return self._n_layers == other._n_layers and np.array_equal(self._params, other._params)

    def __repr__(self):
        return f"ReuploadingModel(n_layers={self._n_layers}, params={self._params.tolist()})"


def _layer_gate_specs(n_layers: int):
    for k in range(n_layers):
        base = PARAMS_PER_LAYER * k
        yield GateSpec(Axis.Y, AngleSpec(base, base + 1, uses_feature=True))
        yield GateSpec(Axis.Z, AngleSpec(offset_param_index=base + 2))


def build_circuit(model: ReuploadingModel, x: float) -> list[RotationGate]:
    return [RotationGate(spec.axis, spec.angle.angle(model.params, x)) for spec in model.gate_specs]


class ExecMode(str, Enum):
    EXACT = "exact"
    SHOTS = "shots"


@dataclass(frozen=True)
class ExecutorConfig:
    mode: ExecMode = ExecMode.SHOTS
    n_shots: int = 1024
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", ExecMode(self.mode))
        if self.mode is ExecMode.SHOTS and self.n_shots < 1:
            raise ValueError(f"n_shots must be >= 1, got {self.n_shots}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @classmethod
    def exact(cls, master_seed: int = 0) -> "ExecutorConfig":
        return cls(ExecMode.EXACT, 1024, master_seed)

    @classmethod
    def shots(cls, n_shots: int = 1024, master_seed: int = 0) -> "ExecutorConfig":
        return cls(ExecMode.SHOTS, n_shots, master_seed)


class Stage:
    """First field of an :class:`EvalTag`: which part of the workflow asked."""

    ESTIMATE = 0
    INITIAL_LOSS = 1
    LOSS = 2
    GRADIENT = 3
    CMAES = 4
    PREDICT = 5


class Shift:
    BASE = 0
    PLUS = 1
    MINUS = 2


class EvalTag(NamedTuple):
    """Identity of one circuit estimation; keys its shot-noise stream."""

    stage: int = Stage.ESTIMATE
    epoch: int = 0
    data_index: int = 0
    param_index: int = 0
    shift: int = Shift.BASE


@dataclass
class Executor:
    """Turns a gate list into an estimate of <B> and counts how often it did so."""

    config: ExecutorConfig = field(default_factory=ExecutorConfig.exact)
    n_calls: int = 0

    def run(self, gates: Sequence[RotationGate], tag: EvalTag = EvalTag()) -> float:
        self.n_calls += 1
        state = run_circuit(gates)
        if self.config.mode is ExecMode.EXACT:
            return exact_expectation_z(state)
        rng = derive_rng(self.config.master_seed, tag)
        return estimate_b(sample_counts(state, self.config.n_shots, rng))


def estimate(
    model: ReuploadingModel,
    x: float,
    executor: Executor,
    eval_tag: EvalTag = EvalTag(),
) -> float:
    """One circuit execution of ``model`` at feature ``x``."""
    return executor.run(build_circuit(model, x), eval_tag)
