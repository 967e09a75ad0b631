"""OMD with second-order loss corrections for weakly observable graphs."""

from __future__ import annotations

import math

import numpy as np

from ..estimators import FeedbackEvent, importance_weighted
from ..graph import DominatingSet, GraphClass, classify, greedy_weak_dominating_set
from ..mirror import DecisionSet, RegularizerSpec, bregman_projection, omd_step
from .base import Policy, PolicyConfigError, StepRecord, require_class


def corrections(est, p, s_mask, eta, eta_bar) -> np.ndarray:
    """``2 eta p_i l^_i^2`` on self-loop arms, ``2 eta_bar l^_i^2`` elsewhere."""
    sq = est * est
    return np.where(s_mask, 2.0 * eta * p * sq, 2.0 * eta_bar * sq)


def bipartite_tuning(s: int, L: float | None) -> tuple[float, float]:
    """``eta = min{sqrt(s/L), 1/5}``, ``eta_bar = min{L^{-2/3}, 1/25}``."""
    if L is None or L <= 0:
        return 0.2, 1.0 / 25
    return min(math.sqrt(s / L), 0.2), min(L ** (-2.0 / 3.0), 1.0 / 25)


def delta_cap(s: int, d: int) -> float:
    """``min{1/125, 1/(4d), 1/(4s)}``, dropping the ``s`` term when ``s = 0``."""
    cap = min(1.0 / 125, 1.0 / (4 * d))
    return min(cap, 1.0 / (4 * s)) if s else cap


def general_tuning(s: int, d: int, L: float | None, gamma: float) -> tuple[float, float, float]:
    """``(delta, eta, eta_bar)`` for the dominating-set variant given an ``L_D`` oracle."""
    delta = delta_cap(s, d)
    if L is None or L <= 0:
        return delta, 1.0 / 25, delta ** (4.0 / 3.0)
    delta = min(delta, L ** (-gamma))
    eta = min(math.sqrt(1.0 / L), 1.0 / 25)
    eta_bar = min(math.sqrt(delta / L), delta ** (4.0 / 3.0))
    return delta, eta, eta_bar


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 1.0 / 3 - 1e-12 <= gamma <= 0.5 + 1e-12:
        raise PolicyConfigError(f"gamma={gamma:g} must lie in [1/3, 1/2]")
    return gamma


class CorrectedOMD(Policy):
    """Log-barrier ``1/eta`` on self-loop arms, entropy ``1/eta_bar`` on the rest,
    OMD on ``l^ + a``.

    Subclasses choose ``eta``, ``eta_bar`` and the decision set. The
    per-round precondition ``W_i >= 5 eta_bar`` on no-loop arms is
    monitored, and violations are counted in ``precondition_failures``.
    """

    algo_id = "corrected_omd"

    def __init__(self, graph, horizon, seed=None):
        super().__init__(graph, horizon, seed)
        self.s_mask = np.zeros(graph.num_arms, dtype=bool)
        self.s_mask[list(graph.self_loop_set)] = True
        self.precondition_failures = 0

    def _configure(self, eta: float, eta_bar: float, omega: DecisionSet) -> None:
        self.eta, self.eta_bar, self.omega = float(eta), float(eta_bar), omega
        k = self.num_arms
        a = np.where(self.s_mask, 0.0, 1.0 / self.eta_bar)
        b = np.where(self.s_mask, 1.0 / self.eta, 0.0)
        self.reg = RegularizerSpec(a, b)
        s, sb = self.graph.s, self.graph.s_bar
        if s and sb:
            q = np.where(self.s_mask, 1.0 / (2 * s), 1.0 / (2 * sb))
        else:
            q = np.full(k, 1.0 / k)
        self.p1 = bregman_projection(self.reg, q, omega)

    @property
    def decision_set(self) -> DecisionSet:
        return self.omega

    def _step(self, p_sample, center, event):
        """Estimator, correction and OMD update; returns ``(est, a, next_center)``."""
        w = self.graph.observation_mass(p_sample)
        if np.any(w[~self.s_mask] < 5 * self.eta_bar * (1 - 1e-12)):
            self.precondition_failures += 1
        est = importance_weighted(self.graph, p_sample, event)
        a = corrections(est, p_sample, self.s_mask, self.eta, self.eta_bar)
        nxt = omd_step(self.reg, center, est + a, self.omega)
        self.last_step = StepRecord(self.t + 1, p_sample, center, est, a, nxt, self.reg, self.omega)
        return est, a, nxt


def _require_bipartite(graph):
    r = classify(graph)
    if not r.is_directed_complete_bipartite:
        raise PolicyConfigError("graph must be a directed complete bipartite graph")
    if graph.s == 0 or graph.s_bar == 0:
        raise PolicyConfigError("both the self-loop and no-loop sides must be nonempty")


class WeaklyBipartite(CorrectedOMD):
    """Corrected OMD over ``{sum_S p >= sqrt(eta_bar)}``.

    Parameters
    ----------
    graph : FeedbackGraph
        Directed complete bipartite.
    horizon : int
    eta, eta_bar : float, optional
        Explicit rates (``eta <= 1/5``, ``eta_bar <= 1/25``).
    L_oracle : float, optional
        Cumulative loss of the best self-loop arm, used for default tuning.
    """

    algo_id = "weakly_bipartite"

    def __init__(self, graph, horizon, eta=None, eta_bar=None, L_oracle=None, seed=None):
        _require_bipartite(graph)
        super().__init__(graph, horizon, seed)
        d_eta, d_bar = bipartite_tuning(graph.s, L_oracle)
        eta = d_eta if eta is None else float(eta)
        eta_bar = d_bar if eta_bar is None else float(eta_bar)
        if not 0 < eta <= 0.2 * (1 + 1e-12):
            raise PolicyConfigError(f"eta={eta:g} must lie in (0, 1/5]")
        if not 0 < eta_bar <= (1 + 1e-12) / 25:
            raise PolicyConfigError(f"eta_bar={eta_bar:g} must lie in (0, 1/25]")
        s_arms = graph.self_loop_set
        self._configure(eta, eta_bar, DecisionSet(graph.num_arms, groups=[(s_arms, math.sqrt(eta_bar))]))
        self.p = self.p1
        self._log_epoch(eta=self.eta, eta_bar=self.eta_bar)

    def propose(self):
        return self.p

    def _update(self, event, p):
        _, _, self.p = self._step(p, p, event)


def _resolve_dominating(graph, dominating_set) -> DominatingSet:
    ds = dominating_set if dominating_set is not None else greedy_weak_dominating_set(graph)
    if not isinstance(ds, DominatingSet):
        ds = DominatingSet(tuple(sorted(int(i) for i in ds)))
    r = classify(graph)
    for w in r.weak_nodes:
        if not graph.in_neighbors[w] & set(ds.members):
            raise PolicyConfigError(f"dominating set does not cover weak arm {w}")
    return ds


class WeaklyGeneral(CorrectedOMD):
    """Corrected OMD over ``{p_i >= delta on D}`` for a weakly dominating set ``D``.

    Parameters
    ----------
    graph : FeedbackGraph
        Weakly observable.
    horizon : int
    dominating_set : DominatingSet or sequence of int, optional
    delta, eta, eta_bar : float, optional
        Explicit parameters; defaults follow the ``L_D`` tuning.
    gamma : float
        Exponent in ``[1/3, 1/2]``.
    L_oracle : float, optional
        Cumulative loss of the best arm in ``D``.
    """

    algo_id = "weakly_general"

    def __init__(self, graph, horizon, dominating_set=None, delta=None, gamma=0.5,
                 eta=None, eta_bar=None, L_oracle=None, seed=None):
        require_class(graph, GraphClass.WEAKLY_OBSERVABLE)
        super().__init__(graph, horizon, seed)
        self.gamma = _check_gamma(gamma)
        self.dominating = _resolve_dominating(graph, dominating_set)
        d = self.dominating.d
        t_delta, t_eta, t_bar = general_tuning(graph.s, d, L_oracle, self.gamma)
        delta = t_delta if delta is None else float(delta)
        eta = t_eta if eta is None else float(eta)
        eta_bar = t_bar if eta_bar is None else float(eta_bar)
        cap = delta_cap(graph.s, d)
        tol = 1 + 1e-12
        if not 1.0 / horizon <= delta * tol or not delta <= cap * tol:
            raise PolicyConfigError(f"delta={delta:g} must lie in [1/T, {cap:g}]")
        if not 0 < eta <= tol / 25:
            raise PolicyConfigError(f"eta={eta:g} must lie in (0, 1/25]")
        if not 0 < eta_bar <= delta ** (4.0 / 3.0) * tol:
            raise PolicyConfigError(f"eta_bar={eta_bar:g} must lie in (0, delta^(4/3)]")
        self.delta = delta
        lb = np.zeros(graph.num_arms)
        lb[list(self.dominating.members)] = delta
        self._configure(eta, eta_bar, DecisionSet(graph.num_arms, lb))
        self.p = self.p1
        self._log_epoch(delta=self.delta, eta=self.eta, eta_bar=self.eta_bar)

    def propose(self):
        return self.p

    def _update(self, event, p):
        _, _, self.p = self._step(p, p, event)


def clip_self_loop_side(p_hat: np.ndarray, s_mask: np.ndarray, mu: float) -> np.ndarray:
    """Zero self-loop coordinates below ``mu`` and rescale the rest so the
    self-loop mass is unchanged."""
    keep = s_mask & (p_hat >= mu)
    total = p_hat[s_mask].sum()
    kept = p_hat[keep].sum()
    if kept <= 0:
        raise PolicyConfigError("clipping removed every self-loop arm")
    p = p_hat.copy()
    p[s_mask & ~keep] = 0.0
    p[keep] *= total / kept
    return p


class Chrome(CorrectedOMD):
    """Parameter-free bipartite variant: clipped sampling plus halving of ``eta``
    when ``s/eta <= eta min_{i in S} sum_{tau in epoch} l^_{tau,i}``.
    """

    algo_id = "chrome"

    def __init__(self, graph, horizon, seed=None):
        _require_bipartite(graph)
        super().__init__(graph, horizon, seed)
        self.eta_init = min(0.2, 1.0 / graph.s)
        self._s_idx = np.asarray(graph.self_loop_set)
        self._start_epoch(self.eta_init)

    def _start_epoch(self, eta, start=None):
        s = self.graph.s
        eta_bar = s ** (-2.0 / 3.0) * eta ** (4.0 / 3.0)
        omega = DecisionSet(self.num_arms, groups=[(self.graph.self_loop_set, math.sqrt(eta_bar))])
        self._configure(eta, eta_bar, omega)
        self.mu = eta * math.sqrt(eta_bar) / s
        self.p_hat = self.p1.copy()
        self.p = self.p1.copy()
        self.accumulator = np.zeros(s)
        self._log_epoch(start, eta=self.eta, eta_bar=self.eta_bar, mu=self.mu)

    def propose(self):
        return self.p

    def _update(self, event, p):
        est, _, nxt = self._step(p, self.p_hat, event)
        self.p_hat = nxt
        self.p = clip_self_loop_side(nxt, self.s_mask, self.mu)
        self.accumulator += est[self._s_idx]
        if self.graph.s / self.eta <= self.eta * self.accumulator.min():
            self.epoch += 1
            self._start_epoch(self.eta / 2, start=self.t + 1)


class WeaklyGeneralAdaptive(CorrectedOMD):
    """Parameter-free dominating-set variant: epochs over ``delta`` with
    ``eta = delta^{1/(2 gamma)}``, ``eta_bar = delta^{1/2 + 1/(2 gamma)}``,
    halving ``delta`` when ``delta^{-1/gamma} <= sum_{tau in epoch} sum_{i in D} l^_{tau,i}``.

    ``delta_init`` defaults to ``min{1/125, 1/(4d), 1/(4s)}``.
    """

    algo_id = "weakly_general_adaptive"

    def __init__(self, graph, horizon, dominating_set=None, gamma=0.5, delta_init=None, seed=None):
        require_class(graph, GraphClass.WEAKLY_OBSERVABLE)
        super().__init__(graph, horizon, seed)
        self.gamma = _check_gamma(gamma)
        self.dominating = _resolve_dominating(graph, dominating_set)
        self._d_idx = np.asarray(self.dominating.members)
        cap = delta_cap(graph.s, self.dominating.d)
        self.delta_init = cap if delta_init is None else float(delta_init)
        if not 0 < self.delta_init <= cap * (1 + 1e-12):
            raise PolicyConfigError(f"delta_init must lie in (0, {cap:g}]")
        self._start_epoch(self.delta_init)

    def _start_epoch(self, delta, start=None):
        self.delta = delta
        g = self.gamma
        lb = np.zeros(self.num_arms)
        lb[self._d_idx] = delta
        self._configure(delta ** (1 / (2 * g)), delta ** (0.5 + 1 / (2 * g)), DecisionSet(self.num_arms, lb))
        self.p = self.p1.copy()
        self.accumulator = 0.0
        self._log_epoch(start, delta=self.delta, eta=self.eta, eta_bar=self.eta_bar)

    def propose(self):
        return self.p

    def _update(self, event, p):
        est, _, self.p = self._step(p, p, event)
        self.accumulator += float(est[self._d_idx].sum())
        if self.delta ** (-1.0 / self.gamma) <= self.accumulator:
            self.epoch += 1
            self._start_epoch(self.delta / 2, start=self.t + 1)
