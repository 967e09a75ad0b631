"""Two-level learner: OMD over meta-nodes (cliques and no-loop arms), Hedge inside cliques."""

from __future__ import annotations

import math

import numpy as np

from ..estimators import FeedbackEvent, clique_estimator, meta_estimator
from ..graph import CliquePartition, FeedbackGraph, GraphClass, greedy_clique_partition
from ..mirror import DecisionSet, RegularizerSpec, init_point, omd_step
from .adahedge import AdaHedge
from .base import Policy, PolicyConfigError, StepRecord, require_class, require_horizon


def eta_max(num_arms: int, beta: int, horizon: int) -> float:
    """Largest admissible base rate ``min{1/(64 beta), 1/(1000 ln T ln^2(KT))}``."""
    lt = math.log(horizon)
    return min(1.0 / (64 * beta), 1.0 / (1000 * lt * math.log(num_arms * horizon) ** 2))


def adaptive_eta_init(num_arms: int, kappa: int, horizon: int) -> float:
    """Starting rate ``1/(2000 ln T ln^2(KT) + 80 kappa ln T)`` of the doubling variant."""
    lt = math.log(horizon)
    return 1.0 / (2000 * lt * math.log(num_arms * horizon) ** 2 + 80 * kappa * lt)


def _arm_space_set(partition: CliquePartition, horizon: int) -> DecisionSet:
    k = partition.num_arms
    lb = np.zeros(k)
    lb[list(partition.no_loop)] = 1.0 / horizon
    groups = [(c, 1.0 / horizon) for c in partition.cliques]
    return DecisionSet(k, lb, groups)


class MetaLearner:
    """State of one run of the two-level algorithm with fixed base rate ``eta``.

    Attributes
    ----------
    p_meta : ndarray
        Distribution over the ``beta`` meta-nodes.
    eta_clique, rho : ndarray
        Per-clique rates and thresholds.
    hedges : list of AdaHedge
    loss_sum : float
        Running ``sum_t <p_meta_t, l^_t>``.
    """

    def __init__(self, partition: CliquePartition, horizon: int, eta: float, c: float, record_hedge=False):
        self.partition = partition
        self.horizon = horizon
        self.eta = eta
        self.c = c
        kappa, beta = partition.kappa, partition.beta
        self.sigma = math.exp(1.0 / math.log(horizon))
        self.eta_clique = np.full(kappa, eta)
        self.rho = np.full(kappa, 2.0 * kappa)
        self.increases = np.zeros(kappa, dtype=int)
        self.hedges = [AdaHedge(partition.num_arms, cl, horizon, record_hedge) for cl in partition.cliques]
        self.omega = DecisionSet(beta, np.full(beta, 1.0 / horizon))
        self._entropy = np.zeros(beta)
        self._entropy[kappa:] = 1.0 / eta
        self.reg = self._make_reg()
        self.p_meta = init_point(self.reg, self.omega)
        self.loss_sum = 0.0
        self.last_step: StepRecord | None = None

    def _make_reg(self) -> RegularizerSpec:
        kappa = self.partition.kappa
        b = np.full(self.partition.beta, self.c)
        b[:kappa] = 1.0 / self.eta_clique
        return RegularizerSpec(self._entropy, b)

    def marginal(self) -> np.ndarray:
        part = self.partition
        q = np.zeros(part.num_arms)
        for j, h in enumerate(self.hedges):
            q[h.active] = self.p_meta[j] * h._q
        if part.no_loop:
            q[list(part.no_loop)] = self.p_meta[part.kappa:]
        return q

    def update(self, event: FeedbackEvent, t: int) -> float:
        """Process one round; returns ``<p_meta_t, l^_t>``."""
        part = self.partition
        i_t = event.chosen_arm
        j_t = int(part.arm_meta[i_t])
        p = self.p_meta
        tilde = clique_estimator(part, p, j_t, i_t, event)
        dists = [h.dist for h in self.hedges]
        est = meta_estimator(part, dists, tilde)
        for h in self.hedges:
            h.update(tilde)
        reg = self.reg
        nxt = omd_step(reg, p, est, self.omega)
        self.last_step = StepRecord(t, p, p, est, None, nxt, reg, self.omega)
        # increasing-rate rule for cliques whose probability dropped too low
        inv = 1.0 / nxt[: part.kappa]
        fire = inv > self.rho
        if fire.any():
            self.rho[fire] = 2.0 * inv[fire]
            self.eta_clique[fire] *= self.sigma
            self.increases[fire] += 1
            self.reg = self._make_reg()
        self.p_meta = nxt
        inner = float(p @ est)
        self.loss_sum += inner
        return inner


def _resolve_partition(graph: FeedbackGraph, partition) -> CliquePartition:
    part = partition if partition is not None else greedy_clique_partition(graph)
    part.validate(graph)
    return part


class CliqueMeta(Policy):
    """Meta-level OMD with per-clique AdaHedge and increasing clique rates.

    Parameters
    ----------
    graph : FeedbackGraph
        Strongly observable.
    horizon : int
    partition : CliquePartition, optional
        Defaults to the greedy partition.
    eta : float, optional
        Base rate; default ``min{eta_max, sqrt((kappa+1)/L_star)}`` or ``eta_max``.
    c : float, optional
        Barrier weight on no-loop meta-nodes, default ``64 beta``.
    L_star : float, optional
        Oracle for the best arm's cumulative loss.
    record_hedge : bool
        Keep AdaHedge trajectories for diagnostics.
    """

    algo_id = "clique_meta"

    def __init__(self, graph, horizon, partition=None, eta=None, c=None, L_star=None,
                 seed=None, record_hedge=False):
        require_class(graph, GraphClass.STRONGLY_OBSERVABLE)
        require_horizon(graph, horizon)
        super().__init__(graph, horizon, seed)
        self.partition = _resolve_partition(graph, partition)
        beta = self.partition.beta
        self.eta_max = eta_max(graph.num_arms, beta, horizon)
        if eta is None:
            eta = self.eta_max
            if L_star is not None and L_star > 0:
                eta = min(eta, math.sqrt((self.partition.kappa + 1) / L_star))
        self.eta = float(eta)
        if not 0 < self.eta <= self.eta_max * (1 + 1e-12):
            raise PolicyConfigError(f"eta={self.eta:g} exceeds eta_max={self.eta_max:g}")
        self.c = float(c) if c is not None else 64.0 * beta
        self.core = MetaLearner(self.partition, horizon, self.eta, self.c, record_hedge)
        self._omega = _arm_space_set(self.partition, horizon)
        self._log_epoch(eta=self.eta, c=self.c)

    @property
    def decision_set(self) -> DecisionSet:
        return self._omega

    def propose(self) -> np.ndarray:
        return self.core.marginal()

    def _update(self, event, p):
        self.core.update(event, self.t + 1)
        self.last_step = self.core.last_step


class CliqueMetaAdaptive(Policy):
    """Doubling-trick wrapper: restart the two-level learner and halve ``eta``
    once ``(kappa+1)/eta <= eta * sum_{tau in epoch} <p_tau, l^_tau>``.

    ``eta_init`` overrides the default starting rate
    ``1/(2000 ln T ln^2(KT) + 80 kappa ln T)``.
    """

    algo_id = "clique_meta_adaptive"

    def __init__(self, graph, horizon, partition=None, eta_init=None, seed=None, record_hedge=False):
        require_class(graph, GraphClass.STRONGLY_OBSERVABLE)
        require_horizon(graph, horizon)
        super().__init__(graph, horizon, seed)
        self.partition = _resolve_partition(graph, partition)
        self.c = 64.0 * self.partition.beta
        if eta_init is None:
            eta_init = adaptive_eta_init(graph.num_arms, self.partition.kappa, horizon)
        if not eta_init > 0:
            raise PolicyConfigError("eta_init must be positive")
        self.eta_init = float(eta_init)
        self.eta = self.eta_init
        self.record_hedge = record_hedge
        self._omega = _arm_space_set(self.partition, horizon)
        self._start_epoch()

    def _start_epoch(self, start=None):
        self.core = MetaLearner(self.partition, self.horizon, self.eta, self.c, self.record_hedge)
        self.accumulator = 0.0
        self._log_epoch(start, eta=self.eta, c=self.c)

    @property
    def decision_set(self) -> DecisionSet:
        return self._omega

    def propose(self) -> np.ndarray:
        return self.core.marginal()

    def _update(self, event, p):
        self.accumulator += self.core.update(event, self.t + 1)
        self.last_step = self.core.last_step
        if (self.partition.kappa + 1) / self.eta <= self.eta * self.accumulator:
            self.eta /= 2
            self.epoch += 1
            # the reset takes effect from the next round
            self._start_epoch(start=self.t + 1)
