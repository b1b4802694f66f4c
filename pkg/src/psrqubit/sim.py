"""Single-qubit statevector simulation.

Rotation gates use the half-angle convention R_a(phi) = exp(-i phi sigma_a / 2),
so every gate generator has eigenvalues +-1/2.  Measurement is in the Z basis
and the observable estimate is Prob(|0>) - Prob(|1>).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Axis",
    "StateVector",
    "RotationGate",
    "MeasurementResult",
    "apply_rotation",
    "run_circuit",
    "exact_expectation_z",
    "sample_counts",
    "estimate_b",
    "derive_rng",
]


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


@dataclass(frozen=True)
class StateVector:
    """Pure state of one qubit, ``amp0|0> + amp1|1>``."""

    amp0: complex
    amp1: complex

    @classmethod
    def zero(cls) -> "StateVector":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def one(cls) -> "StateVector":
        return cls(0j, 1.0 + 0j)

    def norm(self) -> float:
        return math.sqrt(abs(self.amp0) ** 2 + abs(self.amp1) ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)


@dataclass(frozen=True)
class RotationGate:
    axis: Axis
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))

    def matrix(self) -> np.ndarray:
        c = math.cos(self.angle / 2)
        s = math.sin(self.angle / 2)
        if self.axis is Axis.X:
            return np.array([[c, -1j * s], [-1j * s, c]])
        if self.axis is Axis.Y:
            return np.array([[c, -s], [s, c]], dtype=complex)
        phase = cmath.exp(-0.5j * self.angle)
        return np.array([[phase, 0], [0, phase.conjugate()]])


@dataclass(frozen=True)
class MeasurementResult:
    n0: int
    n1: int
    n_shots: int

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0:
            raise ValueError("counts must be non-negative")
        if self.n0 + self.n1 != self.n_shots:
            raise ValueError(
                f"n0 + n1 = {self.n0 + self.n1} does not match n_shots = {self.n_shots}"
            )


def apply_rotation(state: StateVector, gate: RotationGate) -> StateVector:
    a0, a1 = state.amp0, state.amp1
    half = gate.angle / 2
    if gate.axis is Axis.Z:
        phase = cmath.exp(-1j * half)
        return StateVector(phase * a0, phase.conjugate() * a1)
    c = math.cos(half)
    s = math.sin(half)
    if gate.axis is Axis.Y:
        return StateVector(c * a0 - s * a1, s * a0 + c * a1)
    return StateVector(c * a0 - 1j * s * a1, -1j * s * a0 + c * a1)


def run_circuit(gates: Iterable[RotationGate], state: StateVector | None = None) -> StateVector:
    """Apply ``gates`` in order, starting from |0> unless ``state`` is given."""
    if state is None:
        state = StateVector.zero()
    for gate in gates:
        state = apply_rotation(state, gate)
    return state


def _prob_zero(state: StateVector) -> float:
    p0 = abs(state.amp0) ** 2
    return min(1.0, max(0.0, p0))


def exact_expectation_z(state: StateVector) -> float:
    return abs(state.amp0) ** 2 - abs(state.amp1) ** 2


def sample_counts(state: StateVector, n_shots: int, rng: np.random.Generator) -> MeasurementResult:
    """Measure ``state`` ``n_shots`` times in the Z basis.

    The number of |0> outcomes is drawn as a single binomial variate, which is
    distributionally identical to ``n_shots`` independent Bernoulli trials.
    """
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    n0 = int(rng.binomial(n_shots, _prob_zero(state)))
    return MeasurementResult(n0, n_shots - n0, n_shots)


def estimate_b(result: MeasurementResult) -> float:
    if result.n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    return (result.n0 - result.n1) / result.n_shots


def derive_rng(master_seed: int, tag: Sequence[int]) -> np.random.Generator:
    """Independent random stream keyed by ``(master_seed, *tag)``.

    The stream depends only on the key, never on how many other streams were
    drawn before it, so results do not depend on evaluation order.
    """
    return np.random.default_rng(
        np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(t) for t in tag))
    )
