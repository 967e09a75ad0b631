"""Shared policy machinery: sampling, step records and epoch bookkeeping."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from ..estimators import FeedbackEvent
from ..graph import FeedbackGraph, GraphClass, classify, greedy_independent_set
from ..mirror import DecisionSet, RegularizerSpec


class PolicyConfigError(ValueError):
    """Parameters or graph incompatible with the chosen algorithm."""


def sample_index(p: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from ``p`` given one uniform ``u`` in [0, 1)."""
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    i = min(i, p.size - 1)
    # guard against landing on a zero-probability tail after rounding
    while p[i] <= 0:
        i -= 1
    return i


@dataclass
class StepRecord:
    """One OMD update, kept for diagnostics.

    ``center`` is the iterate the Bregman term is anchored at (it differs
    from the sampling distribution ``p`` only for clipping algorithms).
    """

    t: int
    p: np.ndarray
    center: np.ndarray
    est: np.ndarray
    correction: np.ndarray | None
    next_center: np.ndarray
    reg: RegularizerSpec
    omega: DecisionSet


@dataclass
class EpochInfo:
    epoch: int
    start: int
    params: dict = field(default_factory=dict)
    meta_epoch: int | None = None
    stage: int | None = None


def default_alpha(graph: FeedbackGraph) -> int:
    return len(greedy_independent_set(graph))


def require_class(graph: FeedbackGraph, *allowed: GraphClass) -> None:
    gc = classify(graph).graph_class
    if gc not in allowed:
        names = ", ".join(a.value for a in allowed)
        raise PolicyConfigError(f"graph is {gc.value}; this algorithm needs {names}")


def require_horizon(graph: FeedbackGraph, horizon: int) -> None:
    if horizon < 2 * graph.num_arms:
        raise PolicyConfigError(f"horizon T={horizon} must be at least 2K={2 * graph.num_arms}")


class Policy(ABC):
    """Learner interface.

    Each round the harness calls :meth:`act` (which calls :meth:`propose`
    and samples from it) and then :meth:`update` with the feedback.

    Parameters
    ----------
    graph : FeedbackGraph
    horizon : int
        Number of rounds ``T``.
    seed : int or numpy.random.SeedSequence, optional
        Seeds the policy's own generator, used only for sampling arms.
    """

    algo_id = "base"

    def __init__(self, graph: FeedbackGraph, horizon: int, seed=None):
        self.graph = graph
        self.horizon = int(horizon)
        self.rng = np.random.default_rng(seed)
        self.t = 0
        self.epoch = 1
        self.meta_epoch: int | None = None
        self.stage: int | None = None
        self.epoch_history: list[EpochInfo] = []
        self.last_step: StepRecord | None = None
        self._p: np.ndarray | None = None
        self._arm: int | None = None

    @property
    def num_arms(self) -> int:
        return self.graph.num_arms

    @property
    def log_T(self) -> float:
        return math.log(self.horizon)

    @abstractmethod
    def propose(self) -> np.ndarray:
        """Sampling distribution over arms for the current round."""

    @abstractmethod
    def _update(self, event: FeedbackEvent, p: np.ndarray) -> None:
        ...

    @property
    @abstractmethod
    def decision_set(self) -> DecisionSet:
        """Constraint set the proposed distribution must satisfy (arm space)."""

    def act(self) -> int:
        p = self.propose()
        self._p = p
        self._arm = sample_index(p, self.rng.random())
        return self._arm

    def update(self, event: FeedbackEvent) -> None:
        if self._p is None:
            raise RuntimeError("update() called before act()")
        if event.chosen_arm != self._arm:
            raise ValueError(f"feedback for arm {event.chosen_arm}, but arm {self._arm} was played")
        p, self._p = self._p, None
        self._update(event, p)
        self.t += 1

    def _log_epoch(self, start: int | None = None, **params) -> None:
        """Record the epoch that begins after ``start`` completed rounds (default: now)."""
        start = self.t if start is None else start
        self.epoch_history.append(
            EpochInfo(self.epoch, start, dict(params), self.meta_epoch, self.stage)
        )
