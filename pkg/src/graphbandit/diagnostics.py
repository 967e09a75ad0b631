"""Deterministic per-sequence and per-round inequalities, evaluated on recorded runs."""

from __future__ import annotations

import math

import numpy as np

from .graph import FeedbackGraph
from .mirror import DecisionSet, bregman, best_shift, local_norm_shifted
from .policies.adahedge import AdaHedge
from .policies.base import StepRecord


def hedge_regret_bound(hedge: AdaHedge) -> tuple[np.ndarray, np.ndarray]:
    """Left and right sides of the AdaHedge regret bound for each comparator in ``C``.

    ``lhs_i = sum_t <p~_t - e_i, l~_t>`` and
    ``rhs_i = 25 rho ln^2(KT) + 10 ln(KT) sqrt(rho sum_t l~_{t,i})`` with
    ``rho = max{1, max_{t, i in C} l~_{t,i}}``. Needs ``record=True``.
    """
    if not hedge.record:
        raise ValueError("the AdaHedge instance did not record its trajectory")
    c = hedge.active
    if not hedge.trajectory:
        z = np.zeros(c.size)
        return z, z + 25 * math.log(hedge.num_arms * hedge.horizon) ** 2
    dists = np.array([d for d, _ in hedge.trajectory])[:, c]
    losses = np.array([l for _, l in hedge.trajectory])[:, c]
    learner = float(np.sum(dists * losses))
    cum = losses.sum(axis=0)
    rho = max(1.0, float(losses.max()))
    lkt = math.log(hedge.num_arms * hedge.horizon)
    lhs = learner - cum
    rhs = 25 * rho * lkt**2 + 10 * lkt * np.sqrt(rho * cum)
    return lhs, rhs


def observation_precondition(graph: FeedbackGraph, p: np.ndarray, eta_bar: float) -> bool:
    """``W_i(p) >= 5 eta_bar`` for every arm without a self-loop."""
    nl = list(graph.no_loop_set)
    if not nl:
        return True
    return bool(np.all(graph.observation_mass(p)[nl] >= 5 * eta_bar))


def corrected_step_gap(step: StepRecord, u: np.ndarray) -> float:
    """``<p_t - u, l^> - [D(u, p_t) - D(u, p_{t+1}) + <u, a>]``; nonpositive when the
    per-round inequality of corrected OMD holds."""
    if step.correction is None:
        raise ValueError("step carries no correction term")
    u = np.asarray(u, dtype=float)
    lhs = float((step.center - u) @ step.est)
    rhs = bregman(step.reg, u, step.center) - bregman(step.reg, u, step.next_center) + float(u @ step.correction)
    return lhs - rhs


def shifted_step_gap(step: StepRecord, u: np.ndarray) -> float:
    """``<p_t - u, l^> - [D(u, p_t) - D(u, p_{t+1}) + 8 min_z ||l^ - z 1||^2_{H^{-1}}]``."""
    u = np.asarray(u, dtype=float)
    z = best_shift(step.reg, step.center, step.est)
    local = local_norm_shifted(step.reg, step.center, step.est, z)
    lhs = float((step.center - u) @ step.est)
    rhs = bregman(step.reg, u, step.center) - bregman(step.reg, u, step.next_center) + 8 * local
    return lhs - rhs


def gap_scale(step: StepRecord, u: np.ndarray) -> float:
    """Magnitude of the terms entering the gap; used to express float slack."""
    u = np.asarray(u, dtype=float)
    terms = [
        abs(float(step.center @ step.est)),
        abs(float(u @ step.est)),
        bregman(step.reg, u, step.center),
        bregman(step.reg, u, step.next_center),
    ]
    if step.correction is not None:
        terms.append(abs(float(u @ step.correction)))
    return max(1.0, max(terms))


def sample_feasible(omega: DecisionSet, anchor: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` strictly positive points of ``omega`` (on its free coordinates).

    Each point mixes a random Dirichlet or near-vertex direction with the
    feasible ``anchor``, halving the mixing weight until feasible; convexity
    of ``omega`` makes the loop terminate.
    """
    anchor = np.asarray(anchor, dtype=float)
    free = omega.free
    out = np.empty((n, omega.dim))
    for r in range(n):
        v = np.zeros(omega.dim)
        if r % 2:
            v[free] = rng.dirichlet(np.full(free.size, 0.5))
        else:
            v[free] = 1e-6
            v[rng.choice(free)] = 1.0
            v /= v.sum()
        lam = float(rng.uniform(0.5, 1.0))
        while True:
            u = lam * v + (1 - lam) * anchor
            if omega.is_feasible(u, tol=1e-12) and np.all(u[free] > 0):
                break
            lam /= 2
            if lam < 1e-12:
                u = anchor.copy()
                break
        out[r] = u
    return out
