"""Exponential weights with clique clipping and nested doubling, for self-aware graphs."""

from __future__ import annotations

import math

import numpy as np

from ..estimators import FeedbackEvent, importance_weighted
from ..graph import greedy_clique_partition
from ..mirror import DecisionSet, RegularizerSpec
from .base import Policy, PolicyConfigError, StepRecord, default_alpha, require_horizon
from .hybrid import Exp3GHybrid


def clip_cliques(p_hat: np.ndarray, cliques, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero every clique whose mass is at most ``eps`` and renormalise.

    Returns the clipped distribution and a boolean mask of clipped cliques.
    """
    masses = np.array([p_hat[list(c)].sum() for c in cliques])
    clipped = masses <= eps
    if clipped.all():
        raise PolicyConfigError("clipping removed every clique")
    p = p_hat.copy()
    for c, off in zip(cliques, clipped):
        if off:
            p[list(c)] = 0.0
    return p / p.sum(), clipped


class ClippedTwoStage(Policy):
    """Stage one: entropy OMD on ``p_hat`` over the simplex, sampling from the
    clique-clipped ``p``. Epochs halve ``eta`` on
    ``1/eta <= 4 eta kappa min_i sum_{tau in epoch} l^_{tau,i}``; meta-epochs
    restart ``eta`` once it falls to ``sqrt(1/(alpha T))``. After
    ``floor(log2 T)`` meta-epochs a fresh ``exp3g_hybrid`` takes over.

    Parameters
    ----------
    graph : FeedbackGraph
        Must be self-aware.
    horizon : int
    partition : CliquePartition, optional
    alpha_hint : int, optional
    """

    algo_id = "clipped_two_stage"

    def __init__(self, graph, horizon, partition=None, alpha_hint=None, seed=None):
        if graph.s != graph.num_arms:
            raise PolicyConfigError("clipped_two_stage needs a self-aware graph (every arm has a self-loop)")
        require_horizon(graph, horizon)
        super().__init__(graph, horizon, seed)
        self.partition = partition if partition is not None else greedy_clique_partition(graph)
        self.partition.validate(graph)
        self.cliques = self.partition.cliques
        self.kappa = self.partition.kappa
        self.alpha_hint = int(alpha_hint) if alpha_hint is not None else default_alpha(graph)
        self.eta_init = 1.0 / (4 * self.kappa)
        self.eta_floor = math.sqrt(1.0 / (self.alpha_hint * horizon))
        self.max_meta_epochs = int(math.floor(math.log2(horizon)))
        self.meta_epoch = 1
        self.stage = 1
        self.inner: Exp3GHybrid | None = None
        self.clip_history: list[np.ndarray] = []
        self.eta = self.eta_init
        self._simplex = DecisionSet.simplex(graph.num_arms)
        self._reset_epoch()

    @property
    def eps(self) -> float:
        return max(2 * self.eta, 1.0 / self.horizon)

    def _reset_epoch(self, start=None):
        k = self.num_arms
        self._log_w = np.zeros(k)
        self.p_hat = np.full(k, 1.0 / k)
        self.p = self.p_hat.copy()
        self.accumulator = np.zeros(k)
        self._log_epoch(start, eta=self.eta, eps=self.eps)

    @property
    def decision_set(self) -> DecisionSet:
        if self.inner is not None:
            return self.inner.decision_set
        return self._simplex

    def propose(self) -> np.ndarray:
        if self.inner is not None:
            return self.inner.propose()
        return self.p

    def _update(self, event: FeedbackEvent, p: np.ndarray) -> None:
        if self.inner is not None:
            self.inner._update(event, p)
            self.inner.t += 1
            self.last_step = self.inner.last_step
            return
        est = importance_weighted(self.graph, p, event)
        center = self.p_hat
        self._log_w -= self.eta * est
        w = np.exp(self._log_w - self._log_w.max())
        self.p_hat = w / w.sum()
        self.p, clipped = clip_cliques(self.p_hat, self.cliques, self.eps)
        self.clip_history.append(clipped)
        reg = RegularizerSpec(np.full(self.num_arms, 1.0 / self.eta), np.zeros(self.num_arms))
        self.last_step = StepRecord(self.t + 1, p, center, est, None, self.p_hat, reg, self._simplex)
        self.accumulator += est
        if 1.0 / self.eta <= 4 * self.eta * self.kappa * self.accumulator.min():
            self._next_epoch()

    def _next_epoch(self):
        start = self.t + 1
        self.eta /= 2
        self.epoch += 1
        if self.eta <= self.eta_floor:
            if self.meta_epoch >= self.max_meta_epochs:
                self._enter_stage_two(start)
                return
            self.meta_epoch += 1
            self.eta = self.eta_init
        self._reset_epoch(start)

    def _enter_stage_two(self, start):
        self.stage = 2
        self.inner = Exp3GHybrid(
            self.graph, self.horizon, alpha_hint=self.alpha_hint, seed=0
        )
        self._log_epoch(start, eta=self.inner.eta, c=self.inner.c)
