"""Full-information Hedge with a data-dependent learning rate, used inside cliques."""

from __future__ import annotations

import math

import numpy as np

from ..mirror import DecisionSet, RegularizerSpec, omd_step


class AdaHedge:
    """Exponential weights on ``active_set`` with ``eta_t = 1/sqrt(1 + sum p~ l~^2)``.

    The iterate lives in ``{p_i >= 1/(|C| T) on C, 0 off C}``.

    Parameters
    ----------
    num_arms : int
    active_set : sequence of int
    horizon : int
    record : bool
        Keep the (distribution, loss) trajectory for later checks.
    """

    def __init__(self, num_arms: int, active_set, horizon: int, record: bool = False):
        self.active = np.array(sorted(set(int(i) for i in active_set)), dtype=np.intp)
        if self.active.size == 0:
            raise ValueError("active set must be nonempty")
        if self.active[0] < 0 or self.active[-1] >= num_arms:
            raise ValueError("active set index out of range")
        self.num_arms = int(num_arms)
        self.horizon = int(horizon)
        n = self.active.size
        self.omega = DecisionSet(n, np.full(n, 1.0 / (n * horizon)))
        self._q = np.full(n, 1.0 / n)
        self.second_moment = 0.0
        self.eta = 1.0
        self.record = record
        self.trajectory: list[tuple[np.ndarray, np.ndarray]] = []

    @property
    def dist(self) -> np.ndarray:
        """Current distribution as a length-``K`` vector."""
        out = np.zeros(self.num_arms)
        out[self.active] = self._q
        return out

    def propose(self) -> np.ndarray:
        return self.dist

    def update(self, loss: np.ndarray) -> None:
        loss = np.asarray(loss, dtype=float)
        if loss.shape != (self.num_arms,):
            raise ValueError("loss vector has the wrong length")
        if np.any(loss < 0):
            raise ValueError("AdaHedge losses must be nonnegative")
        lc = loss[self.active]
        if self.record:
            self.trajectory.append((self.dist, loss.copy()))
        if not lc.any():
            # zero loss leaves both the accumulator and the iterate unchanged
            return
        self.second_moment += float(self._q @ lc**2)
        self.eta = 1.0 / math.sqrt(1.0 + self.second_moment)
        if self.active.size == 1:
            return
        n = self.active.size
        reg = RegularizerSpec(np.full(n, 1.0 / self.eta), np.zeros(n))
        self._q = omd_step(reg, self._q, lc, self.omega)
