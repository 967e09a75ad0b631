"""Learners for bandits with feedback graphs, selectable by id."""

from __future__ import annotations

import inspect

from .adahedge import AdaHedge
from .base import Policy, PolicyConfigError, StepRecord, sample_index
from .clipped import ClippedTwoStage, clip_cliques
from .clique_meta import CliqueMeta, CliqueMetaAdaptive, MetaLearner, adaptive_eta_init, eta_max
from .hybrid import Exp3GHybrid, HybridOMD, SmallLossHybrid, smallloss_eta
from .weakly import (
    Chrome,
    CorrectedOMD,
    WeaklyBipartite,
    WeaklyGeneral,
    WeaklyGeneralAdaptive,
    bipartite_tuning,
    clip_self_loop_side,
    delta_cap,
    general_tuning,
)

REGISTRY: dict[str, type[Policy]] = {
    cls.algo_id: cls
    for cls in (
        Exp3GHybrid,
        SmallLossHybrid,
        CliqueMeta,
        CliqueMetaAdaptive,
        ClippedTwoStage,
        WeaklyBipartite,
        WeaklyGeneral,
        Chrome,
        WeaklyGeneralAdaptive,
    )
}


def policy_params(algo: str) -> tuple[str, ...]:
    """Keyword parameters accepted by ``algo`` beyond graph, horizon and seed."""
    sig = inspect.signature(REGISTRY[algo].__init__)
    return tuple(n for n in sig.parameters if n not in ("self", "graph", "horizon", "seed"))


def make_policy(algo: str, graph, horizon: int, seed=None, **params) -> Policy:
    """Instantiate the policy registered as ``algo``.

    Raises
    ------
    PolicyConfigError
        Unknown id or parameter, or a parameter outside its admissible range.
    """
    if algo not in REGISTRY:
        raise PolicyConfigError(f"unknown algorithm {algo!r}; choose from {sorted(REGISTRY)}")
    allowed = policy_params(algo)
    extra = set(params) - set(allowed)
    if extra:
        raise PolicyConfigError(f"{algo} does not accept {sorted(extra)}; allowed: {list(allowed)}")
    return REGISTRY[algo](graph, horizon, seed=seed, **params)


__all__ = [
    "AdaHedge",
    "Chrome",
    "ClippedTwoStage",
    "CliqueMeta",
    "CliqueMetaAdaptive",
    "CorrectedOMD",
    "Exp3GHybrid",
    "HybridOMD",
    "MetaLearner",
    "Policy",
    "PolicyConfigError",
    "REGISTRY",
    "SmallLossHybrid",
    "StepRecord",
    "WeaklyBipartite",
    "WeaklyGeneral",
    "WeaklyGeneralAdaptive",
    "adaptive_eta_init",
    "bipartite_tuning",
    "clip_cliques",
    "clip_self_loop_side",
    "delta_cap",
    "eta_max",
    "general_tuning",
    "make_policy",
    "policy_params",
    "sample_index",
    "smallloss_eta",
]
