import json
import math

import numpy as np
import pytest

from psrqubit.model import (
    AngleSpec,
    EvalTag,
    Executor,
    ExecutorConfig,
    ReuploadingModel,
    Stage,
    build_circuit,
    estimate,
)
from psrqubit.sim import Axis, RotationGate


def exact():
    return Executor(ExecutorConfig.exact())


def test_build_circuit_identity_layer():
    assert build_circuit(ReuploadingModel(1, [0, 0, 0]), 0.7) == [
        RotationGate(Axis.Y, 0.0),
        RotationGate(Axis.Z, 0.0),
    ]


def test_build_circuit_substitution():
    gates = build_circuit(ReuploadingModel(1, [2, 1, math.pi]), 0.5)
    assert gates == [RotationGate(Axis.Y, 2.0), RotationGate(Axis.Z, math.pi)]


def test_build_circuit_two_layers():
    a, b, c, d, e, f = 0.3, -1.1, 2.0, 0.7, 0.25, -0.4
    x = 0.6
    gates = build_circuit(ReuploadingModel(2, [a, b, c, d, e, f]), x)
    assert [g.axis for g in gates] == [Axis.Y, Axis.Z, Axis.Y, Axis.Z]
    assert [g.angle for g in gates] == [a * x + b, c, d * x + e, f]


def test_param_length_mismatch():
    with pytest.raises(ValueError):
        ReuploadingModel(2, [0.0] * 5)
    with pytest.raises(ValueError):
        ReuploadingModel(0)


def test_angle_spec_requires_a_parameter():
    with pytest.raises(ValueError):
        AngleSpec()
    spec = AngleSpec(0, 1, uses_feature=True)
    assert spec.angle(np.array([2.0, 0.5]), 3.0) == 6.5
    assert AngleSpec(offset_param_index=1).angle(np.array([2.0, 0.5]), 3.0) == 0.5


def test_parameter_roles():
    model = ReuploadingModel(3)
    assert [model.is_scale_param(i) for i in range(9)] == [True, False, False] * 3
    assert model.locate(4) == (2, False)
    assert model.locate(5) == (3, False)
    with pytest.raises(IndexError):
        model.locate(9)


def test_model_is_immutable():
    model = ReuploadingModel(1, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        model.params[0] = 5.0
    changed = model.with_param(0, 5.0)
    assert model.params[0] == 1.0 and changed.params[0] == 5.0


def test_json_round_trip():
    model = ReuploadingModel(2, np.linspace(-1, 1, 6))
    payload = json.loads(model.to_json())
    assert set(payload) == {"n_layers", "params"}
    assert ReuploadingModel.from_json(model.to_json()) == model


def test_estimate_identity_circuit():
    for x in (-1.0, 0.0, 0.3):
        assert estimate(ReuploadingModel(1), x, exact()) == 1.0


def test_estimate_quarter_turn():
    assert abs(estimate(ReuploadingModel(1, [1, 0, 0]), math.pi / 2, exact())) <= 1e-12


def test_single_layer_closed_form():
    rng = np.random.default_rng(8)
    for _ in range(200):
        params = rng.uniform(-np.pi, np.pi, 3)
        x = rng.uniform(-1, 1)
        expected = math.cos(params[0] * x + params[1])
        assert abs(estimate(ReuploadingModel(1, params), x, exact()) - expected) <= 1e-12


def test_estimate_counts_one_execution():
    ex = exact()
    estimate(ReuploadingModel(2), 0.1, ex)
    assert ex.n_calls == 1


def test_shots_estimate_within_binomial_bound():
    rng = np.random.default_rng(21)
    model = ReuploadingModel(1, [1, 0, 0])
    for k, x in enumerate(rng.uniform(-3, 3, 50)):
        value = estimate(model, x, Executor(ExecutorConfig.shots(1024, 99)), EvalTag(epoch=k))
        assert -1 <= value <= 1
        assert abs(value - math.cos(x)) <= 5 * math.sqrt((1 - math.cos(x) ** 2) / 1024)


@pytest.mark.parametrize("n_shots", [10**2, 10**4, 10**6])
def test_shots_converge_to_exact(n_shots):
    rng = np.random.default_rng(n_shots)
    for k in range(20):
        model = ReuploadingModel(2, rng.uniform(-np.pi, np.pi, 6))
        x = rng.uniform(-1, 1)
        exact_value = estimate(model, x, exact())
        sampled = estimate(model, x, Executor(ExecutorConfig.shots(n_shots, 4)), EvalTag(epoch=k))
        assert abs(sampled - exact_value) <= 5 * math.sqrt((1 - exact_value**2) / n_shots) + 1e-12


def test_tag_reproducibility():
    model = ReuploadingModel(1, [0.4, 0.9, 0.0])
    tag = EvalTag(Stage.GRADIENT, 3, 7, 1, 2)
    first = estimate(model, 0.2, Executor(ExecutorConfig.shots(1024, 5)), tag)
    second = estimate(model, 0.2, Executor(ExecutorConfig.shots(1024, 5)), tag)
    others = {
        estimate(model, 0.2, Executor(ExecutorConfig.shots(1024, 5)), tag._replace(epoch=e))
        for e in range(10)
    }
    assert first == second
    assert len(others) > 1


def test_exact_mode_ignores_tags():
    model = ReuploadingModel(2, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    values = {estimate(model, 0.3, exact(), EvalTag(epoch=e)) for e in range(5)}
    assert len(values) == 1


def test_executor_config_validation():
    with pytest.raises(ValueError):
        ExecutorConfig.shots(0)
    with pytest.raises(ValueError):
        ExecutorConfig.exact(-1)
    assert ExecutorConfig.exact().mode.value == "exact"
