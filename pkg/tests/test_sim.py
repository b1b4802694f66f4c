import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psrqubit.sim import (
    Axis,
    MeasurementResult,
    RotationGate,
    StateVector,
    apply_rotation,
    derive_rng,
    estimate_b,
    exact_expectation_z,
    run_circuit,
    sample_counts,
)

angles = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)
axes = st.sampled_from(list(Axis))


def test_identity_rotation():
    out = apply_rotation(StateVector.zero(), RotationGate(Axis.Y, 0.0))
    assert out == StateVector.zero()


def test_half_turn_about_y():
    out = apply_rotation(StateVector.zero(), RotationGate(Axis.Y, math.pi))
    assert abs(out.amp0) < 1e-15
    assert out.amp1 == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("phi", [0.3, -1.2, math.pi])
def test_z_rotation_is_phase_on_zero(phi):
    out = apply_rotation(StateVector.zero(), RotationGate(Axis.Z, phi))
    assert out.amp0 == pytest.approx(cmath.exp(-0.5j * phi), abs=1e-15)
    assert out.amp1 == 0
    assert exact_expectation_z(out) == pytest.approx(1.0, abs=1e-15)


@given(axes, angles)
def test_gate_matrix_is_unitary(axis, angle):
    m = RotationGate(axis, angle).matrix()
    assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12)


@given(axes, angles, angles, angles)
def test_apply_matches_matrix_product(axis, angle, a, b):
    state = run_circuit([RotationGate(Axis.Y, a), RotationGate(Axis.Z, b)])
    out = apply_rotation(state, RotationGate(axis, angle))
    expected = RotationGate(axis, angle).matrix() @ state.as_array()
    assert np.allclose(out.as_array(), expected, atol=1e-12)


PAULI = {
    Axis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Axis.Y: np.array([[0, -1j], [1j, 0]]),
    Axis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


@given(axes, angles)
def test_gate_is_exponential_of_half_pauli(axis, angle):
    # exp(-i phi sigma / 2) = cos(phi/2) I - i sin(phi/2) sigma since sigma^2 = I
    expected = math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * PAULI[axis]
    assert np.allclose(RotationGate(axis, angle).matrix(), expected, atol=1e-12)


def test_norm_conservation_long_sequences():
    rng = np.random.default_rng(11)
    for _ in range(20):
        gates = [
            RotationGate(Axis("XYZ"[k]), a)
            for k, a in zip(rng.integers(0, 3, 1000), rng.uniform(-2 * np.pi, 2 * np.pi, 1000))
        ]
        assert abs(run_circuit(gates).norm() - 1) <= 1e-10


def test_ry_expectation_law():
    rng = np.random.default_rng(3)
    for theta in rng.uniform(-2 * np.pi, 2 * np.pi, 100):
        state = apply_rotation(StateVector.zero(), RotationGate(Axis.Y, theta))
        assert abs(exact_expectation_z(state) - math.cos(theta)) <= 1e-12


def test_exact_expectation_basis_states():
    assert exact_expectation_z(StateVector.zero()) == 1.0
    assert exact_expectation_z(StateVector.one()) == -1.0
    half = apply_rotation(StateVector.zero(), RotationGate(Axis.Y, math.pi / 2))
    assert abs(exact_expectation_z(half)) <= 1e-12


def test_sample_counts_deterministic_outcomes():
    rng = derive_rng(0, (1,))
    assert sample_counts(StateVector.zero(), 1024, rng) == MeasurementResult(1024, 0, 1024)
    assert sample_counts(StateVector.one(), 100, rng) == MeasurementResult(0, 100, 100)


def test_sample_counts_concentration():
    half = apply_rotation(StateVector.zero(), RotationGate(Axis.Y, math.pi / 2))
    res = sample_counts(half, 10**6, derive_rng(42, (0,)))
    assert 0.498 <= res.n0 / res.n_shots <= 0.502


def test_sample_counts_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_counts(StateVector.zero(), 0, derive_rng(0, ()))


def test_measurement_result_invariants():
    with pytest.raises(ValueError):
        MeasurementResult(3, 2, 6)
    with pytest.raises(ValueError):
        MeasurementResult(-1, 7, 6)


@pytest.mark.parametrize(
    "n0, n1, n, expected", [(768, 256, 1024, 0.5), (1024, 0, 1024, 1.0), (512, 512, 1024, 0.0)]
)
def test_estimate_b(n0, n1, n, expected):
    assert estimate_b(MeasurementResult(n0, n1, n)) == expected


def test_shot_estimator_unbiased_with_binomial_spread():
    theta = 1.1
    state = apply_rotation(StateVector.zero(), RotationGate(Axis.Y, theta))
    exact = exact_expectation_z(state)
    reps = np.array(
        [estimate_b(sample_counts(state, 1024, derive_rng(5, (r,)))) for r in range(1000)]
    )
    sigma = math.sqrt((1 - exact**2) / 1024)
    assert abs(reps.mean() - exact) <= 5 * sigma / math.sqrt(1000)
    assert abs(reps.std(ddof=1) / sigma - 1) <= 0.2


def test_identical_seeds_identical_results():
    state = run_circuit([RotationGate(Axis.X, 0.7)])
    a = sample_counts(state, 999, derive_rng(17, (1, 2, 3)))
    b = sample_counts(state, 999, derive_rng(17, (1, 2, 3)))
    c = sample_counts(state, 999, derive_rng(17, (1, 2, 4)))
    assert a == b
    assert a != c
