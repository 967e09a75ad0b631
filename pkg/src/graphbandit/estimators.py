"""Importance-weighted loss estimators for graph feedback."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import CliquePartition, FeedbackGraph

W_MIN = 1e-12


class EstimatorError(ArithmeticError):
    """An observed arm had (numerically) zero probability of being observed."""


@dataclass(frozen=True)
class FeedbackEvent:
    """What the learner sees after playing ``chosen_arm``.

    ``arms`` lists the revealed arms (sorted) and ``losses`` their losses.
    """

    chosen_arm: int
    arms: np.ndarray
    losses: np.ndarray

    @property
    def observed(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.arms, self.losses)}

    def loss_vector(self, k: int) -> np.ndarray:
        """Revealed losses embedded in a length-``k`` vector (0 elsewhere)."""
        out = np.zeros(k)
        out[self.arms] = self.losses
        return out

    def validate(self, g: FeedbackGraph) -> None:
        expected = g.out_neighbors[self.chosen_arm]
        if tuple(int(i) for i in self.arms) != expected:
            raise ValueError(
                f"observed arms {self.arms.tolist()} differ from out-neighbours {list(expected)}"
            )
        if np.any(self.losses < 0) or np.any(self.losses > 1):
            raise ValueError("observed losses must lie in [0, 1]")


def reveal(g: FeedbackGraph, loss_row: np.ndarray, arm: int) -> FeedbackEvent:
    """Feedback for playing ``arm`` against the full loss vector ``loss_row``."""
    arms = g.out_neighbor_arrays[arm]
    return FeedbackEvent(int(arm), arms, np.asarray(loss_row, dtype=float)[arms])


def importance_weighted(
    g: FeedbackGraph, p: np.ndarray, event: FeedbackEvent, zero_convention: bool = True
) -> np.ndarray:
    """``l_i 1{i observed} / W_i`` with ``W_i`` the probability of observing ``i``.

    Parameters
    ----------
    g : FeedbackGraph
    p : ndarray
        The distribution ``i_t`` was drawn from.
    event : FeedbackEvent
    zero_convention : bool
        Coordinates with ``p_i == 0`` (clipped arms) get estimate 0.

    Raises
    ------
    EstimatorError
        An observed arm with ``W_i < 1e-12`` that is not covered by the zero
        convention.
    """
    p = np.asarray(p, dtype=float)
    est = np.zeros(g.num_arms)
    arms = event.arms
    if arms.size == 0:
        return est
    w = p @ g.adjacency[:, arms]
    keep = w >= W_MIN
    if zero_convention:
        pinned = p[arms] == 0
        bad = ~keep & ~pinned
        keep &= ~pinned
    else:
        bad = ~keep
    if np.any(bad):
        raise EstimatorError(
            f"arm(s) {arms[bad].tolist()} observed with W={w[bad].min():.3g} < {W_MIN:g}"
        )
    est[arms[keep]] = event.losses[keep] / w[keep]
    return est


def _observed_loss(event: FeedbackEvent, k: int) -> tuple[np.ndarray, np.ndarray]:
    seen = np.zeros(k, dtype=bool)
    seen[event.arms] = True
    return event.loss_vector(k), seen


def clique_estimator(
    partition: CliquePartition,
    p_meta: np.ndarray,
    j_t: int,
    i_t: int,
    event: FeedbackEvent,
) -> np.ndarray:
    """Estimator fed to the within-clique learners and the meta learner.

    For a self-loop arm ``i``: ``l_i 1{i in C_{j_t}} / p_meta[j_t]``.
    For a no-loop arm ``i``: ``l_i 1{i != i_t} / (1 - p_meta[meta(i)])``.
    """
    k = partition.num_arms
    kappa = partition.kappa
    losses, seen = _observed_loss(event, k)
    if partition.arm_meta[i_t] != j_t:
        raise ValueError(f"arm {i_t} does not belong to meta-node {j_t}")
    est = np.zeros(k)
    if j_t < kappa:
        members = np.asarray(partition.cliques[j_t])
        if not seen[members].all():
            raise EstimatorError(f"clique {j_t} was not fully revealed by arm {i_t}")
        if p_meta[j_t] < W_MIN:
            raise EstimatorError(f"meta-node {j_t} sampled with probability {p_meta[j_t]:.3g}")
        est[members] = losses[members] / p_meta[j_t]
    if partition.no_loop:
        nl = np.asarray(partition.no_loop)
        others = nl[nl != i_t]
        if others.size:
            if not seen[others].all():
                raise EstimatorError("a no-loop arm other than the played one was not revealed")
            rest = 1.0 - p_meta[partition.arm_meta[others]]
            if np.any(rest < W_MIN):
                raise EstimatorError("no-loop meta-node holds (numerically) all the mass")
            est[others] = losses[others] / rest
    return est


def meta_estimator(
    partition: CliquePartition, hedge_dists, tilde_loss: np.ndarray, atol: float = 0.0
) -> np.ndarray:
    """Meta-node losses: ``<p~^(j), l~>`` for cliques, ``l~_i`` for no-loop arms.

    ``hedge_dists[j]`` is a length-``K`` distribution supported on clique ``j``.
    """
    kappa = partition.kappa
    if len(hedge_dists) != kappa:
        raise ValueError(f"expected {kappa} within-clique distributions, got {len(hedge_dists)}")
    tilde_loss = np.asarray(tilde_loss, dtype=float)
    out = np.empty(partition.beta)
    for j, (clique, dist) in enumerate(zip(partition.cliques, hedge_dists)):
        dist = np.asarray(dist, dtype=float)
        off = np.ones(dist.size, dtype=bool)
        off[list(clique)] = False
        if np.any(np.abs(dist[off]) > atol):
            raise ValueError(f"distribution {j} puts mass outside its clique")
        out[j] = float(dist[list(clique)] @ tilde_loss[list(clique)])
    if partition.no_loop:
        out[kappa:] = tilde_loss[list(partition.no_loop)]
    return out
