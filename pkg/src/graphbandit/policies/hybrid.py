"""OMD learners with a fixed hybrid regularizer over ``{p_i >= 1/T}``."""

from __future__ import annotations

import math

import numpy as np

from ..estimators import FeedbackEvent, importance_weighted
from ..graph import FeedbackGraph, GraphClass
from ..mirror import DecisionSet, RegularizerSpec, init_point, omd_step
from .base import (
    Policy,
    PolicyConfigError,
    StepRecord,
    default_alpha,
    require_class,
    require_horizon,
)


class HybridOMD(Policy):
    """OMD with importance-weighted estimates and a fixed regularizer.

    Parameters
    ----------
    graph : FeedbackGraph
    horizon : int
    reg : RegularizerSpec
    omega : DecisionSet
    seed : optional
    """

    algo_id = "hybrid_omd"

    def __init__(self, graph, horizon, reg: RegularizerSpec, omega: DecisionSet, seed=None):
        super().__init__(graph, horizon, seed)
        self.reg = reg
        self.omega = omega
        self.p = init_point(reg, omega)
        self.p1 = self.p.copy()

    @property
    def decision_set(self) -> DecisionSet:
        return self.omega

    def propose(self) -> np.ndarray:
        return self.p

    def _update(self, event: FeedbackEvent, p: np.ndarray) -> None:
        est = importance_weighted(self.graph, p, event)
        nxt = omd_step(self.reg, p, est, self.omega)
        self.last_step = StepRecord(self.t + 1, p, p, est, None, nxt, self.reg, self.omega)
        self.p = nxt


class Exp3GHybrid(HybridOMD):
    """Entropy ``1/eta`` plus log-barrier ``c`` on every arm, ``p_i >= 1/T``.

    Parameters
    ----------
    graph : FeedbackGraph
        Must be strongly observable.
    horizon : int
    eta : float, optional
        Defaults to ``1/sqrt(alpha_hint * T)``.
    alpha_hint : int, optional
        Independence-number proxy; defaults to a greedy maximal independent set.
    c : float, optional
        Barrier weight, default ``64 K``.
    """

    algo_id = "exp3g_hybrid"

    def __init__(self, graph, horizon, eta=None, alpha_hint=None, c=None, seed=None):
        require_class(graph, GraphClass.STRONGLY_OBSERVABLE)
        require_horizon(graph, horizon)
        k = graph.num_arms
        self.alpha_hint = int(alpha_hint) if alpha_hint is not None else default_alpha(graph)
        if self.alpha_hint < 1:
            raise PolicyConfigError("alpha_hint must be at least 1")
        self.eta = float(eta) if eta is not None else 1.0 / math.sqrt(self.alpha_hint * horizon)
        self.c = float(c) if c is not None else 64.0 * k
        if not self.eta > 0 or not self.c > 0:
            raise PolicyConfigError("eta and c must be positive")
        reg = RegularizerSpec.hybrid(k, 1.0 / self.eta, self.c)
        omega = DecisionSet(k, np.full(k, 1.0 / horizon))
        super().__init__(graph, horizon, reg, omega, seed)
        self._log_epoch(eta=self.eta, c=self.c)


def smallloss_eta(graph: FeedbackGraph, L_star: float | None) -> float:
    """``min{sqrt((s+1)/L*), 1/(64K)}``; the cap alone when no oracle is given."""
    cap = 1.0 / (64 * graph.num_arms)
    if L_star is None or L_star <= 0:
        return cap
    return min(math.sqrt((graph.s + 1) / L_star), cap)


class SmallLossHybrid(HybridOMD):
    """Log-barrier ``1/eta`` on self-loop arms; entropy ``1/eta`` plus barrier ``64K`` elsewhere.

    Parameters
    ----------
    graph : FeedbackGraph
        Must be strongly observable.
    horizon : int
    eta : float, optional
        Explicit rate, must be at most ``1/(64K)``.
    L_star : float, optional
        Oracle for the best arm's cumulative loss, used when ``eta`` is absent.
    """

    algo_id = "smallloss_hybrid"

    def __init__(self, graph, horizon, eta=None, L_star=None, seed=None):
        require_class(graph, GraphClass.STRONGLY_OBSERVABLE)
        require_horizon(graph, horizon)
        k = graph.num_arms
        cap = 1.0 / (64 * k)
        self.eta = float(eta) if eta is not None else smallloss_eta(graph, L_star)
        if not 0 < self.eta <= cap * (1 + 1e-12):
            raise PolicyConfigError(f"eta={self.eta:g} must lie in (0, 1/(64K)] = (0, {cap:g}]")
        self.c = 64.0 * k
        a = np.zeros(k)
        b = np.full(k, 1.0 / self.eta)
        nl = list(graph.no_loop_set)
        a[nl] = 1.0 / self.eta
        b[nl] = self.c
        reg = RegularizerSpec(a, b)
        omega = DecisionSet(k, np.full(k, 1.0 / horizon))
        super().__init__(graph, horizon, reg, omega, seed)
        self._log_epoch(eta=self.eta, c=self.c)
