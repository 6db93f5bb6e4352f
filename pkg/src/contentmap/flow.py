"""Stationary visit distribution of the teleporting random surfer.

With probability 1 - tau the surfer follows an out-arc proportionally to the
normalized weights, with probability tau it teleports to a node chosen
uniformly at random.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .netcore import Network

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITERS = 10_000


class ConvergenceError(RuntimeError):
    """Power iteration did not reach the requested residual."""


@dataclass(frozen=True)
class FlowDistribution:
    """Node visit rates summing to one at teleportation rate tau."""

    p: np.ndarray
    tau: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("visit rates must be a probability distribution")
        object.__setattr__(self, "p", np.maximum(p, 0.0))


def _power_iteration(network: Network, tau: float, tol: float, max_iters: int) -> np.ndarray:
    n = network.n
    W = csr_matrix(
        (network.arc_weight, (network.arc_src, network.arc_dst)), shape=(n, n)
    )
    dangling = network.dangling
    p = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        walk = p @ W
        # mass stuck at dangling nodes is spread uniformly, like a teleport
        walk += p[dangling].sum() / n
        nxt = tau / n + (1.0 - tau) * walk
        if np.abs(nxt - p).sum() < tol:
            return nxt
        p = nxt
    raise ConvergenceError(
        f"stationary distribution did not converge in {max_iters} iterations"
    )


def stationary_distribution(
    network: Network,
    tau: float = 0.0,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> FlowDistribution:
    """Compute the surfer's stationary visit rates.

    For undirected networks at tau = 0 the closed form (out-strength over
    total strength) is exact and used directly; every other regime runs
    power iteration to an L1 residual below ``tol``.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if tol <= 0 or max_iters <= 0:
        raise ValueError("tol and max_iters must be positive")
    n = network.n
    if tau == 1.0:
        return FlowDistribution(np.full(n, 1.0 / n), tau)
    if tau == 0.0:
        network.require_tau0_compatible()
        if not network.directed:
            strength = network.out_strength
            return FlowDistribution(strength / strength.sum(), tau)
    p = _power_iteration(network, tau, tol, max_iters)
    return FlowDistribution(p / p.sum(), tau)
