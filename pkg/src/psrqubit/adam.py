from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """Moment estimates and hyperparameters of the Adam update.

    ``m`` and ``v`` start at zero and ``t`` counts completed steps.
    """

    n_params: int
    eta: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)
    t: int = 0

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.m is None:
            self.m = np.zeros(self.n_params)
        if self.v is None:
            self.v = np.zeros(self.n_params)


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update.  Returns a new state and new parameters."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if not (theta.shape == grad.shape == state.m.shape):
        raise ValueError(
            f"shape mismatch: theta {theta.shape}, grad {grad.shape}, state {state.m.shape}"
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_theta = theta - state.eta * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        state.n_params, state.eta, state.beta1, state.beta2, state.epsilon, m=m, v=v, t=t
    )
    return new_state, new_theta
