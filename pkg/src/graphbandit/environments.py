"""Oblivious loss sequences: CSV-backed matrices and seeded generators."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import FeedbackGraph, GraphClass, classify


class LossFormatError(ValueError):
    """Malformed or out-of-range loss data."""


@dataclass(frozen=True)
class LossMatrix:
    """``T x K`` losses in [0, 1] plus a provenance tag."""

    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise LossFormatError(f"loss matrix must be 2-D and nonempty, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise LossFormatError("every loss must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    @property
    def cumulative(self) -> np.ndarray:
        """Per-arm totals ``L_i``."""
        return self.values.sum(axis=0)

    @property
    def best_arm(self) -> int:
        return int(np.argmin(self.cumulative))

    @property
    def L_star(self) -> float:
        return float(self.cumulative.min())

    def check_shape(self, T: int, K: int) -> None:
        if self.values.shape != (T, K):
            raise LossFormatError(f"loss matrix is {self.values.shape}, run needs ({T}, {K})")

    def to_csv(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.values, delimiter=",", fmt="%.17g")
        return buf.getvalue()


def load_losses(text: str, T: int | None = None, K: int | None = None, provenance: str = "text") -> LossMatrix:
    """Parse a headerless CSV with one row per round.

    Raises
    ------
    LossFormatError
        Non-numeric cells, ragged rows, a shape mismatch or a value outside [0, 1].
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise LossFormatError("no loss rows")
    width = len(rows[0])
    data = []
    for n, row in enumerate(rows, 1):
        if len(row) != width:
            raise LossFormatError(f"row {n} has {len(row)} entries, expected {width}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise LossFormatError(f"row {n}: {exc}") from None
        bad = [v for v in vals if not 0.0 <= v <= 1.0]
        if bad:
            raise LossFormatError(f"row {n}: loss {bad[0]} outside [0, 1]")
        data.append(vals)
    lm = LossMatrix(np.array(data), provenance)
    if K is not None and lm.K != K:
        raise LossFormatError(f"rows have {lm.K} entries, graph has K={K}")
    if T is not None and lm.T != T:
        raise LossFormatError(f"file has {lm.T} rows, run needs T={T}")
    return lm


def load_losses_file(path, T: int | None = None, K: int | None = None) -> LossMatrix:
    return load_losses(Path(path).read_text(), T, K, provenance=f"file:{path}")


def write_losses(lm: LossMatrix, path) -> None:
    Path(path).write_text(lm.to_csv())


def _bernoulli(rng, means: np.ndarray, T: int) -> np.ndarray:
    return (rng.random((T, means.size)) < means).astype(float)


def gen_stochastic_smallloss(K: int, T: int, best_arm: int = 0, mu_star: float = 0.05,
                             gap: float = 0.3, seed=None) -> LossMatrix:
    """Independent Bernoulli losses: mean ``mu_star`` for ``best_arm``, ``mu_star + gap`` otherwise."""
    if not 0 <= best_arm < K:
        raise ValueError(f"best_arm {best_arm} out of range for K={K}")
    if not (0 <= mu_star and gap >= 0 and mu_star + gap <= 1):
        raise ValueError("need 0 <= mu_star and mu_star + gap <= 1 with gap >= 0")
    means = np.full(K, mu_star + gap)
    means[best_arm] = mu_star
    vals = _bernoulli(np.random.default_rng(seed), means, T)
    return LossMatrix(vals, f"smallloss(K={K},T={T},best_arm={best_arm},mu_star={mu_star},gap={gap},seed={seed})")


def gen_uniform(K: int, T: int, seed=None) -> LossMatrix:
    """I.i.d. Uniform[0, 1] losses."""
    return LossMatrix(np.random.default_rng(seed).random((T, K)), f"uniform(K={K},T={T},seed={seed})")


def gen_shifted_best(K: int, T: int, switch_round: int, seed=None,
                     mu_best: float = 0.1, mu_other: float = 0.5) -> LossMatrix:
    """Arm 0 is best before ``switch_round`` (1-indexed), arm ``K-1`` from it onwards."""
    if K < 2:
        raise ValueError("need at least two arms")
    if not 1 <= switch_round <= T:
        raise ValueError(f"switch_round must lie in [1, T={T}]")
    if not 0 <= mu_best <= mu_other <= 1:
        raise ValueError("need 0 <= mu_best <= mu_other <= 1")
    means = np.full((T, K), mu_other)
    cut = switch_round - 1
    means[:cut, 0] = mu_best
    means[cut:, K - 1] = mu_best
    vals = (np.random.default_rng(seed).random((T, K)) < means).astype(float)
    return LossMatrix(vals, f"shifted(K={K},T={T},switch_round={switch_round},seed={seed})")


def lower_bound_pair_nodes(graph: FeedbackGraph) -> tuple[int, int]:
    """Lowest no-loop ``u`` that some arm cannot observe, and the lowest such ``v``."""
    for u in graph.no_loop_set:
        blind = [v for v in range(graph.num_arms) if v != u and v not in graph.in_neighbors[u]]
        if blind:
            return u, blind[0]
    raise RuntimeError("no (u, v) pair found; the graph cannot be weakly observable")


@dataclass(frozen=True)
class LowerBoundPair:
    A: LossMatrix
    B: LossMatrix
    u: int
    v: int
    interval: tuple[int, int]


def gen_lower_bound_pair(graph: FeedbackGraph, T: int, b: float = 0.4,
                         interval_start: int | None = None, interval_len: int | None = None) -> LowerBoundPair:
    """Two environments that differ only in arm ``u``'s loss on one interval.

    In ``A`` arm ``u`` has loss 0, arm ``v`` has ``T^{-b}`` and every other
    arm 1. ``B`` additionally sets ``u``'s loss to 1 on the rounds
    ``[interval_start, interval_start + interval_len)`` (0-indexed rows);
    the default interval is the middle third.
    """
    if classify(graph).graph_class is not GraphClass.WEAKLY_OBSERVABLE:
        raise ValueError("the lower-bound construction needs a weakly observable graph")
    if not 0 < b < 1:
        raise ValueError("b must lie in (0, 1)")
    start = T // 3 if interval_start is None else int(interval_start)
    length = T // 3 if interval_len is None else int(interval_len)
    if start < 0 or length < 0 or start + length > T:
        raise ValueError("interval does not fit in the horizon")
    u, v = lower_bound_pair_nodes(graph)
    a = np.ones((T, graph.num_arms))
    a[:, u] = 0.0
    a[:, v] = float(T) ** (-b)
    bm = a.copy()
    bm[start:start + length, u] = 1.0
    tag = f"lowerbound(T={T},b={b},u={u},v={v},interval=[{start},{start + length}))"
    return LowerBoundPair(LossMatrix(a, tag + ":A"), LossMatrix(bm, tag + ":B"), u, v, (start, start + length))


# --- environment strings used by the CLI and the harness ---------------


def parse_env_spec(spec: str) -> tuple[str, dict[str, str]]:
    """``name[:k=v,k=v]`` or ``file:PATH``."""
    name, _, rest = spec.partition(":")
    name = name.strip()
    if name == "file":
        if not rest:
            raise ValueError("file spec needs a path: file:PATH")
        return name, {"path": rest}
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        k, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"environment parameter {item!r} is not key=value")
        params[k.strip()] = val.strip()
    return name, params


ENV_NAMES = ("file", "smallloss", "uniform", "shifted", "lowerbound")


def make_environment(spec: str, graph: FeedbackGraph, T: int, seed=None) -> LossMatrix:
    """Build the loss matrix described by ``spec`` for ``graph`` and horizon ``T``.

    ``seed`` feeds the stochastic generators; file-backed and lower-bound
    environments ignore it.
    """
    name, p = parse_env_spec(spec)
    K = graph.num_arms
    if name == "file":
        return load_losses_file(p["path"], T, K)
    if name == "smallloss":
        return gen_stochastic_smallloss(
            K, T, int(p.get("best_arm", 0)), float(p.get("mu_star", 0.05)), float(p.get("gap", 0.3)), seed
        )
    if name == "uniform":
        return gen_uniform(K, T, seed)
    if name == "shifted":
        return gen_shifted_best(
            K, T, int(p.get("switch_round", T // 2)), seed,
            float(p.get("mu_best", 0.1)), float(p.get("mu_other", 0.5)),
        )
    if name == "lowerbound":
        pair = gen_lower_bound_pair(
            graph, T, float(p.get("b", 0.4)),
            int(p["interval_start"]) if "interval_start" in p else None,
            int(p["interval_len"]) if "interval_len" in p else None,
        )
        variant = p.get("variant", "A").upper()
        if variant not in ("A", "B"):
            raise ValueError("lowerbound variant must be A or B")
        return pair.A if variant == "A" else pair.B
    raise ValueError(f"unknown environment {name!r}; choose from {ENV_NAMES}")
