"""Run policies against loss sequences, record traces and compute regret reports."""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .environments import LossMatrix, make_environment, parse_env_spec
from .estimators import reveal
from .graph import FeedbackGraph, greedy_weak_dominating_set, load_graph
from .policies import REGISTRY, Policy, PolicyConfigError, make_policy

AUTO = "auto"
# oracle parameters that "auto" resolves from the realised loss matrix
_ORACLE_PARAMS = {"L_star", "L_oracle"}


class TrialError(RuntimeError):
    """A policy failed during a run; the message carries the round index."""


def parse_param_value(text: str):
    """CLI parameter value: int, float, ``auto`` or ``none``."""
    t = text.strip()
    if t.lower() in ("none", "null"):
        return None
    if t.lower() == AUTO:
        return AUTO
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        raise ValueError(f"parameter value {text!r} is not numeric, 'auto' or 'none'") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a batch of trials.

    ``params`` values may be ``"auto"`` for oracle quantities (``L_star``,
    ``L_oracle``), which are then computed from each trial's loss matrix.
    """

    graph: FeedbackGraph
    algo: str
    T: int
    env: str
    seeds: tuple[int, ...] = (0,)
    params: dict = field(default_factory=dict)
    out: Path | None = None
    trace: str = "summary"
    graph_path: str | None = None

    @classmethod
    def from_paths(cls, graph_path, **kw) -> "ExperimentConfig":
        return cls(graph=load_graph(graph_path), graph_path=str(graph_path), **kw)

    def validate(self) -> None:
        if self.algo not in REGISTRY:
            raise PolicyConfigError(f"unknown algorithm {self.algo!r}; choose from {sorted(REGISTRY)}")
        if self.T < 2 * self.graph.num_arms:
            raise PolicyConfigError(f"T={self.T} must be at least 2K={2 * self.graph.num_arms}")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if self.trace not in ("summary", "per-round"):
            raise ValueError("trace must be 'summary' or 'per-round'")
        parse_env_spec(self.env)
        # construct once with placeholder oracles to surface graph-class errors early
        make_policy(self.algo, self.graph, self.T, seed=0, **self._resolved_params(None))

    def _resolved_params(self, losses: LossMatrix | None) -> dict:
        out = {}
        for k, v in self.params.items():
            if v == AUTO:
                if k not in _ORACLE_PARAMS:
                    raise PolicyConfigError(f"'auto' is only allowed for {sorted(_ORACLE_PARAMS)}")
                v = None if losses is None else oracle_value(self.algo, k, self.graph, losses)
            out[k] = v
        return out


def oracle_value(algo: str, key: str, graph: FeedbackGraph, losses: LossMatrix) -> float:
    """The comparator loss a non-adaptive tuning asks for, read off the realised losses."""
    cum = losses.cumulative
    if key == "L_star":
        return float(cum.min())
    if algo == "weakly_bipartite":
        return float(cum[list(graph.self_loop_set)].min())
    if algo == "weakly_general":
        return float(cum[list(greedy_weak_dominating_set(graph).members)].mean())
    raise PolicyConfigError(f"{algo} has no oracle parameter {key!r}")


def policy_seed(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), 0])


def env_seed(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), 1])


@dataclass(frozen=True)
class RoundRecord:
    t: int
    arm: int
    loss: float
    observed: tuple[int, ...]
    p: np.ndarray | None = None
    epoch: int = 1
    meta_epoch: int | None = None


@dataclass
class Trace:
    """Columnar per-round record of one trial."""

    arms: np.ndarray
    incurred: np.ndarray
    epochs: np.ndarray
    meta_epochs: np.ndarray
    observed: list
    probs: np.ndarray | None = None

    def __len__(self) -> int:
        return self.arms.size

    def records(self) -> list[RoundRecord]:
        out = []
        for n in range(len(self)):
            me = int(self.meta_epochs[n])
            out.append(RoundRecord(
                n + 1, int(self.arms[n]), float(self.incurred[n]), tuple(int(i) for i in self.observed[n]),
                None if self.probs is None else self.probs[n], int(self.epochs[n]), me if me > 0 else None,
            ))
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.arms.astype(np.int64).tobytes())
        h.update(self.incurred.astype(np.float64).tobytes())
        h.update(self.epochs.astype(np.int64).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SummaryRow:
    """One line of the summary CSV."""

    seed: int
    T: int
    algo: str
    learner_loss: float
    L_star: float
    best_arm: int
    regret: float
    L_iS_star: float | None
    L_D: float | None
    epochs_used: int


@dataclass
class RegretReport:
    """Per-trial regret bookkeeping.

    ``regrets[i] = learner_loss - L[i]`` exactly; ``regret`` is the entry of
    the lowest-index best arm.
    """

    seed: int
    T: int
    algo: str
    L: np.ndarray
    learner_loss: float
    regrets: np.ndarray
    best_arm: int
    L_star: float
    regret: float
    L_iS_star: float | None
    L_D: float | None
    epochs_used: int

    def summary_row(self) -> SummaryRow:
        return SummaryRow(self.seed, self.T, self.algo, self.learner_loss, self.L_star, self.best_arm,
                          self.regret, self.L_iS_star, self.L_D, self.epochs_used)


def regret_report(seed, algo, graph: FeedbackGraph, losses: LossMatrix, learner_loss: float,
                  epochs_used: int = 1, dominating=None) -> RegretReport:
    L = losses.cumulative
    regrets = learner_loss - L
    best = int(np.argmin(L))
    s = list(graph.self_loop_set)
    return RegretReport(
        seed=int(seed), T=losses.T, algo=algo, L=L, learner_loss=float(learner_loss), regrets=regrets,
        best_arm=best, L_star=float(L[best]), regret=float(regrets[best]),
        L_iS_star=float(L[s].min()) if s else None,
        L_D=float(L[list(dominating)].mean()) if dominating else None,
        epochs_used=int(epochs_used),
    )


@dataclass
class TrialResult:
    trace: Trace
    report: RegretReport
    policy: Policy
    losses: LossMatrix

    @property
    def trace_hash(self) -> str:
        return self.trace.digest()


def run_policy(policy: Policy, graph: FeedbackGraph, losses: LossMatrix, keep_probs: bool = False,
               callback=None) -> Trace:
    """Play ``policy`` against ``losses`` for every row; ``callback(t, policy)`` runs after each update."""
    T, K = losses.T, graph.num_arms
    losses.check_shape(T, K)
    vals = losses.values
    arms = np.empty(T, dtype=np.int64)
    incurred = np.empty(T)
    epochs = np.empty(T, dtype=np.int64)
    metas = np.zeros(T, dtype=np.int64)
    observed = []
    probs = np.empty((T, K)) if keep_probs else None
    for n in range(T):
        try:
            if keep_probs:
                probs[n] = policy.propose()
            epochs[n] = policy.epoch
            metas[n] = policy.meta_epoch or 0
            arm = policy.act()
            event = reveal(graph, vals[n], arm)
            policy.update(event)
        except Exception as exc:
            raise TrialError(f"round {n + 1}: {type(exc).__name__}: {exc}") from exc
        arms[n] = arm
        incurred[n] = vals[n, arm]
        observed.append(event.arms)
        if callback is not None:
            callback(n + 1, policy)
    return Trace(arms, incurred, epochs, metas, observed, probs)


def run_trial(config: ExperimentConfig, seed: int, losses: LossMatrix | None = None,
              callback=None) -> TrialResult:
    """One seeded trial: build the environment and the policy, play ``T`` rounds."""
    g = config.graph
    if losses is None:
        losses = make_environment(config.env, g, config.T, env_seed(seed))
    losses.check_shape(config.T, g.num_arms)
    try:
        policy = make_policy(config.algo, g, config.T, seed=policy_seed(seed), **config._resolved_params(losses))
    except TypeError as exc:
        raise PolicyConfigError(str(exc)) from exc
    trace = run_policy(policy, g, losses, keep_probs=config.trace == "per-round", callback=callback)
    dom = getattr(policy, "dominating", None)
    report = regret_report(seed, config.algo, g, losses, float(trace.incurred.sum()), policy.epoch,
                           dom.members if dom is not None else None)
    return TrialResult(trace, report, policy, losses)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    reports: list[RegretReport]
    hashes: list[str]

    @property
    def rows(self) -> list[SummaryRow]:
        return [r.summary_row() for r in self.reports]

    @property
    def mean_regret(self) -> float:
        return float(np.mean([r.regret for r in self.reports]))

    @property
    def std_regret(self) -> float:
        return float(np.std([r.regret for r in self.reports]))

    @property
    def mean_L_star(self) -> float:
        return float(np.mean([r.L_star for r in self.reports]))


def _trial_summary(args):
    config, seed = args
    res = run_trial(config, seed)
    extra = None
    if config.trace == "per-round":
        extra = (res.trace, res.losses.values[:, res.report.best_arm].copy())
    return res.report, res.trace_hash, extra


def run_experiment(config: ExperimentConfig, workers: int = 1, executor: str = "process") -> ExperimentReport:
    """Run every seed, write CSVs when ``config.out`` is set.

    Trials are independent, so results do not depend on scheduling; they
    are collected in seed-list order.
    """
    config.validate()
    jobs = [(config, s) for s in config.seeds]
    if workers > 1 and len(jobs) > 1:
        pool = ProcessPoolExecutor if executor == "process" else ThreadPoolExecutor
        with pool(max_workers=workers) as ex:
            results = list(ex.map(_trial_summary, jobs))
    else:
        results = [_trial_summary(j) for j in jobs]
    rep = ExperimentReport(config, [r for r, _, _ in results], [h for _, h, _ in results])
    if config.out is not None:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        write_summary_csv(rep.rows, out / "summary.csv")
        if config.trace == "per-round":
            for report, _, (trace, best) in results:
                write_round_csv(trace, best, out / f"rounds_seed{report.seed}.csv")
    return rep


# --- CSV -----------------------------------------------------------------

SUMMARY_COLUMNS = [f.name for f in fields(SummaryRow)]
ROUND_COLUMNS = ["t", "arm", "loss", "cum_learner", "cum_best", "epoch"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_summary_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in SUMMARY_COLUMNS])


def read_summary_csv(path) -> list[SummaryRow]:
    conv = {"seed": int, "T": int, "algo": str, "best_arm": int, "epochs_used": int}
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SUMMARY_COLUMNS:
            raise ValueError(f"unexpected summary columns {reader.fieldnames}")
        for row in reader:
            vals = {}
            for c in SUMMARY_COLUMNS:
                raw = row[c]
                if c in conv:
                    vals[c] = conv[c](raw)
                else:
                    vals[c] = None if raw == "" else float(raw)
            out.append(SummaryRow(**vals))
    return out


def write_round_csv(trace: Trace, best_losses: np.ndarray, path) -> None:
    """Per-round CSV; ``cum_best`` is the running loss of the hindsight-best arm."""
    cum_l = np.cumsum(trace.incurred)
    cum_b = np.cumsum(best_losses)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ROUND_COLUMNS)
        for n in range(len(trace)):
            w.writerow([n + 1, int(trace.arms[n]), repr(float(trace.incurred[n])), repr(float(cum_l[n])),
                        repr(float(cum_b[n])), int(trace.epochs[n])])


# --- scaling ---------------------------------------------------------------


def with_env_param(env: str, key: str, value) -> str:
    name, params = parse_env_spec(env)
    if name == "file":
        raise ValueError("file environments have no parameters to scale")
    params[key] = str(value)
    return name + ":" + ",".join(f"{k}={v}" for k, v in params.items())


@dataclass(frozen=True)
class ScalingRow:
    grid: float
    mean_L_star: float
    mean_regret: float
    slope: float | None


def pairwise_slopes(x, y) -> list[float | None]:
    """``log(y_{k+1}/y_k) / log(x_{k+1}/x_k)``; ``None`` for the first point."""
    out: list[float | None] = [None]
    for k in range(1, len(x)):
        try:
            out.append(math.log(y[k] / y[k - 1]) / math.log(x[k] / x[k - 1]))
        except (ValueError, ZeroDivisionError):
            out.append(float("nan"))
    return out


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("need at least two points")
    return float(np.polyfit(lx, ly, 1)[0])


def scaling_suite(template: ExperimentConfig, key: str, values, workers: int = 1):
    """Run ``template`` at each grid value of ``key`` (``T`` or an environment parameter).

    Returns ``(rows, reports)``; writes ``scaling.csv`` and per-point
    summaries under ``template.out`` when set.
    """
    values = list(values)
    if len(values) < 2:
        raise ValueError("a scaling grid needs at least two points")
    reports = []
    for v in values:
        if key == "T":
            cfg = replace(template, T=int(v))
        else:
            cfg = replace(template, env=with_env_param(template.env, key, v))
        if template.out is not None:
            cfg = replace(cfg, out=Path(template.out) / f"{key}={v}")
        reports.append(run_experiment(cfg, workers=workers))
    regs = [r.mean_regret for r in reports]
    slopes = pairwise_slopes([float(v) for v in values], regs)
    rows = [ScalingRow(float(v), r.mean_L_star, r.mean_regret, s) for v, r, s in zip(values, reports, slopes)]
    if template.out is not None:
        Path(template.out).mkdir(parents=True, exist_ok=True)
        with open(Path(template.out) / "scaling.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["grid", "mean_L_star", "mean_regret", "slope"])
            for r in rows:
                w.writerow([_fmt(r.grid), _fmt(r.mean_L_star), _fmt(r.mean_regret), _fmt(r.slope)])
    return rows, reports
