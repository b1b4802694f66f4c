"""(mu/mu_w, lambda)-CMA-ES with the usual default strategy parameters."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


def default_popsize(n: int) -> int:
    return 4 + int(math.floor(3 * math.log(n)))


class CmaEs:
    """Ask/tell CMA-ES minimizer.

    The covariance matrix is re-symmetrized and eigendecomposed after every
    ``tell``; a failed Cholesky factorization raises ``LinAlgError``.
    """

    def __init__(
        self,
        mean: np.ndarray,
        sigma: float,
        rng: np.random.Generator,
        popsize: int | None = None,
    ):
        mean = np.array(mean, dtype=float).reshape(-1)
        n = mean.size
        if n < 1:
            raise ValueError("dimension must be >= 1")
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.n = n
        self.rng = rng
        self.mean = mean
        self.sigma = float(sigma)

        self.lam = popsize if popsize is not None else default_popsize(n)
        if self.lam < 2:
            raise ValueError("population size must be >= 2")
        self.mu = self.lam // 2
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)

        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(
            1 - self.c1,
            2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff),
        )
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.generation = 0

    def ask(self) -> np.ndarray:
        """Sample ``lam`` candidates as rows of an array."""
        z = self.rng.standard_normal((self.lam, self.n))
        y = (z * self.D) @ self.B.T
        return self.mean + self.sigma * y

    def tell(self, candidates: np.ndarray, fitness: np.ndarray) -> None:
        candidates = np.asarray(candidates, dtype=float)
        fitness = np.asarray(fitness, dtype=float)
        if candidates.shape != (self.lam, self.n) or fitness.shape != (self.lam,):
            raise ValueError("tell() expects one fitness value per asked candidate")
        order = np.argsort(fitness, kind="stable")
        elite = candidates[order[: self.mu]]

        old_mean = self.mean
        self.mean = self.weights @ elite
        y_w = (self.mean - old_mean) / self.sigma

        c_inv_sqrt = self.B @ np.diag(1 / self.D) @ self.B.T
        self.ps = (1 - self.cs) * self.ps + math.sqrt(
            self.cs * (2 - self.cs) * self.mueff
        ) * (c_inv_sqrt @ y_w)
        self.generation += 1
        ps_norm = np.linalg.norm(self.ps)
        hsig = ps_norm / math.sqrt(1 - (1 - self.cs) ** (2 * self.generation)) / self.chi_n < (
            1.4 + 2 / (self.n + 1)
        )
        self.pc = (1 - self.cc) * self.pc + hsig * math.sqrt(
            self.cc * (2 - self.cc) * self.mueff
        ) * y_w

        steps = (elite - old_mean) / self.sigma
        rank_one = np.outer(self.pc, self.pc) + (1 - hsig) * self.cc * (2 - self.cc) * self.C
        rank_mu = steps.T @ (self.weights[:, None] * steps)
        self.C = (1 - self.c1 - self.cmu) * self.C + self.c1 * rank_one + self.cmu * rank_mu
        self.C = (self.C + self.C.T) / 2

        self.sigma *= math.exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1))

        np.linalg.cholesky(self.C)
        eigvals, self.B = np.linalg.eigh(self.C)
        self.D = np.sqrt(np.maximum(eigvals, 1e-300))


def minimize(
    objective: Callable[[np.ndarray], float],
    x0: np.ndarray,
    sigma0: float,
    rng: np.random.Generator,
    max_generations: int,
    ftarget: float = -math.inf,
    popsize: int | None = None,
) -> tuple[np.ndarray, float, CmaEs]:
    """Plain black-box loop; returns best point, its value and the final strategy."""
    es = CmaEs(x0, sigma0, rng, popsize)
    best_x, best_f = np.array(x0, dtype=float), math.inf
    for _ in range(max_generations):
        xs = es.ask()
        fs = np.array([objective(x) for x in xs])
        es.tell(xs, fs)
        k = int(np.argmin(fs))
        if fs[k] < best_f:
            best_x, best_f = xs[k].copy(), float(fs[k])
        if best_f <= ftarget:
            break
    return best_x, best_f, es
