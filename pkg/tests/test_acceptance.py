"""Acceptance suite.

Every test checks one criterion at its stated tolerance and records a single
PASS/FAIL line, collected in the "acceptance criteria" section of the pytest
terminal summary. The desk-scale experiments are marked ``slow``.
"""

import math
import time

import numpy as np
import pytest

from oracles import grid_minimum, omd_objective

from graphbandit.diagnostics import corrected_step_gap, hedge_regret_bound, sample_feasible
from graphbandit.environments import gen_lower_bound_pair
from graphbandit.estimators import clique_estimator, importance_weighted, meta_estimator, reveal
from graphbandit.graph import (
    FeedbackGraph,
    GraphClass,
    classify,
    clique_union_graph,
    greedy_clique_partition,
    greedy_independent_set,
)
from graphbandit.harness import ExperimentConfig, loglog_slope, run_experiment, run_trial, scaling_suite
from graphbandit.mirror import DecisionSet, RegularizerSpec, check_multiplicative_stability, omd_step
from graphbandit.policies import REGISTRY, AdaHedge, CliqueMeta, WeaklyBipartite, WeaklyGeneral

STRONG5 = FeedbackGraph(
    5, [(0, 0), (1, 1), (0, 1), (1, 0), (2, 2)] + [(j, i) for i in (3, 4) for j in range(5) if j != i]
)
BIPARTITE6 = FeedbackGraph(6, [(i, i) for i in range(3)] + [(i, j) for i in range(3) for j in range(3, 6)])
WEAK5 = FeedbackGraph(5, [(0, 0), (1, 1), (2, 2), (0, 3), (1, 4), (0, 1), (1, 0), (2, 0)])
WEAK4 = FeedbackGraph(4, [(0, 0), (1, 1), (0, 1), (1, 0), (0, 2), (1, 3)])
SELF_AWARE6 = clique_union_graph([2, 2, 2])
SEEDS10 = tuple(range(10))


def random_strong_graph(rng, k):
    adj = rng.random((k, k)) < 0.4
    for i in range(k):
        if rng.random() < 0.6:
            adj[i, i] = True
        else:
            adj[i, i] = False
            adj[np.arange(k) != i, i] = True
    g = FeedbackGraph(k, [(i, j) for i in range(k) for j in range(k) if adj[i, j]])
    assert classify(g).graph_class is GraphClass.STRONGLY_OBSERVABLE
    return g


def random_observable_graph(rng, k):
    while True:
        adj = rng.random((k, k)) < 0.35
        if adj.any(axis=0).all():
            return FeedbackGraph(k, [(i, j) for i in range(k) for j in range(k) if adj[i, j]])


def random_solver_instance(rng, k):
    """Hybrid weights with absent components, optional lower bounds and one group."""
    a = rng.uniform(0.05, 2.0, k) * (rng.random(k) < 0.7)
    b = rng.uniform(0.05, 2.0, k) * (rng.random(k) < 0.7)
    a[(a == 0) & (b == 0)] = 0.5
    lower = rng.uniform(0, 0.5 / k, k) * (rng.random(k) < 0.5)
    groups = ()
    if k >= 3 and rng.random() < 0.5:
        idx = tuple(sorted(rng.choice(k, size=2, replace=False).tolist()))
        groups = ((idx, float(rng.uniform(0.05, 0.6))),)
    p_t = 0.5 * rng.dirichlet(np.ones(k)) + 0.5 / k
    loss = rng.uniform(0, 2, k) * rng.choice([0.1, 1.0, 5.0])
    return RegularizerSpec(a, b), DecisionSet(k, lower, groups), p_t, loss


# --- 1 -----------------------------------------------------------------------


def test_c01_solver_matches_grid_oracle(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst, bad = 0.0, 0
    for n in range(200):
        k = (2, 3, 4)[n % 3]
        reg, om, p_t, loss = random_solver_instance(rng, k)
        p = omd_step(reg, p_t, loss, om)
        obj = omd_objective(p, p_t, loss, reg.entropy, reg.barrier)[0]
        best = grid_minimum(p_t, loss, reg.entropy, reg.barrier, om.lower_bounds, om.groups, 1e-3)
        gap = abs(obj - best)
        worst = max(worst, gap)
        bad += gap > 1e-4
    elapsed = time.perf_counter() - start
    verdict("C1 solver vs grid oracle", bad == 0 and elapsed < 60,
            f"max |gap|={worst:.2e}, {bad} over 1e-4, {elapsed:.1f}s")


# --- 2 -----------------------------------------------------------------------


def _clique_instance(rng):
    sizes = rng.integers(1, 3, size=rng.integers(1, 4)).tolist()
    k0 = sum(sizes)
    n_bar = int(rng.integers(1 if k0 == 1 else 0, 6 - len(sizes)))
    k = k0 + n_bar
    edges = set()
    start = 0
    for size in sizes:
        block = range(start, start + size)
        edges |= {(i, j) for i in block for j in block}
        start += size
    for r in range(k0, k):
        edges |= {(j, r) for j in range(k) if j != r}
    return FeedbackGraph(k, edges)


def test_c02_estimators_unbiased(verdict):
    rng = np.random.default_rng(2)
    worst_iw = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 8))
        g = random_observable_graph(rng, k)
        p = rng.dirichlet(np.ones(k)) * 0.9 + 0.1 / k
        loss = rng.random(k)
        mean = sum(p[i] * importance_weighted(g, p, reveal(g, loss, i)) for i in range(k))
        worst_iw = max(worst_iw, float(np.max(np.abs(mean - loss))))

    worst_cl, worst_meta, checked = 0.0, 0.0, 0
    while checked < 100:
        g = _clique_instance(rng)
        pt = greedy_clique_partition(g)
        if pt.beta > 5:
            continue
        checked += 1
        k = g.num_arms
        p_meta = rng.dirichlet(np.ones(pt.beta)) * 0.8 + 0.2 / pt.beta
        inner = [np.zeros(k) for _ in range(pt.kappa)]
        for j, c in enumerate(pt.cliques):
            inner[j][list(c)] = rng.dirichlet(np.ones(len(c)))
        loss = rng.random(k)
        mean_t, mean_meta = np.zeros(k), np.zeros(pt.beta)
        for j in range(pt.beta):
            arms = pt.cliques[j] if j < pt.kappa else (pt.no_loop[j - pt.kappa],)
            for i in arms:
                q = inner[j][i] if j < pt.kappa else 1.0
                est = clique_estimator(pt, p_meta, j, i, reveal(g, loss, i))
                mean_t += p_meta[j] * q * est
                mean_meta += p_meta[j] * q * meta_estimator(pt, inner, est)
        expected_meta = np.array([inner[j] @ loss for j in range(pt.kappa)] + [loss[i] for i in pt.no_loop])
        worst_cl = max(worst_cl, float(np.max(np.abs(mean_t - loss))))
        worst_meta = max(worst_meta, float(np.max(np.abs(mean_meta - expected_meta))))
    ok = max(worst_iw, worst_cl, worst_meta) <= 1e-12
    verdict("C2 estimator unbiasedness", ok,
            f"importance {worst_iw:.1e}, clique {worst_cl:.1e}, meta {worst_meta:.1e}")


# --- 3 -----------------------------------------------------------------------


def _hedge_losses(rng, kind, T, k, rho):
    if kind == 0:
        return rng.random((T, k)) * rho
    if kind == 1:
        # sparse heavy losses
        return (rng.random((T, k)) < 0.1) * rho
    if kind == 2:
        # one good arm, the rest near the ceiling
        x = rng.uniform(0.7, 1.0, (T, k)) * rho
        x[:, rng.integers(k)] *= 0.1
        return x
    # switching leader
    x = np.full((T, k), 0.9 * rho)
    half = T // 2
    x[:half, 0] = 0.0
    x[half:, k - 1] = 0.0
    return x


def test_c03_adahedge_deterministic_bound(verdict):
    rng = np.random.default_rng(3)
    violations = 0
    min_slack = np.inf
    for n in range(100):
        rho = (1.0, 5.0)[n % 2]
        k = int(rng.integers(2, 9))
        T = int(rng.choice([200, 1000]))
        h = AdaHedge(k, range(k), T, record=True)
        for row in _hedge_losses(rng, n % 4, T, k, rho):
            h.update(row)
        # the bound uses the observed rho = max(1, max loss), never looser than the nominal one
        lhs, rhs = hedge_regret_bound(h)
        violations += int(np.sum(lhs > rhs))
        min_slack = min(min_slack, float(np.min(rhs - lhs)))
    verdict("C3 AdaHedge bound", violations == 0, f"{violations} violations, min slack {min_slack:.3g}")


# --- 4 -----------------------------------------------------------------------


def _corrected_gap_run(policy, losses, rng, n_u=10):
    worst, viol = -np.inf, 0
    for t in range(losses.shape[0]):
        arm = policy.act()
        policy.update(reveal(policy.graph, losses[t], arm))
        for u in sample_feasible(policy.omega, policy.p, rng, n_u):
            g = corrected_step_gap(policy.last_step, u)
            worst = max(worst, g)
            viol += g > 1e-8
    return worst, viol


def test_c04_corrected_step_inequality(verdict):
    rng = np.random.default_rng(4)
    T = 500
    worst, viol, pre = -np.inf, 0, 0
    for run in range(20):
        if run % 2 == 0:
            pol = WeaklyBipartite(BIPARTITE6, T, L_oracle=float(rng.uniform(20, 300)), seed=run)
            k = 6
        else:
            pol = WeaklyGeneral(WEAK5, T, L_oracle=float(rng.uniform(20, 300)), seed=run)
            k = 5
        losses = rng.random((T, k)) if run % 4 < 2 else (rng.random((T, k)) < 0.3).astype(float)
        w, v = _corrected_gap_run(pol, losses, rng)
        worst, viol, pre = max(worst, w), viol + v, pre + pol.precondition_failures
    verdict("C4 per-round corrected OMD inequality", viol == 0,
            f"{viol} violations beyond 1e-8, max gap {worst:.2e}, {pre} precondition misses")


# --- 5 -----------------------------------------------------------------------


def test_c05_multiplicative_stability(verdict):
    rng = np.random.default_rng(5)
    fails = 0
    worst_ratio = 1.0
    for n in range(500):
        k = int(rng.integers(2, 8))
        g = random_strong_graph(rng, k)
        eta = float(10 ** rng.uniform(-3, 0))
        if n % 2 == 0:
            reg = RegularizerSpec.hybrid(k, 1 / eta, 64.0 * k)
        else:
            # small-loss form: barrier 1/eta on self-loop arms, entropy plus 64K barrier elsewhere
            eta = min(eta, 1 / (64 * k))
            loops = np.isin(np.arange(k), list(g.self_loop_set))
            reg = RegularizerSpec(np.where(loops, 0.0, 1 / eta), np.where(loops, 1 / eta, 64.0 * k))
        p = rng.dirichlet(np.full(k, rng.choice([0.3, 1.0, 5.0])))
        p = np.maximum(p, 1e-5)
        p /= p.sum()
        if n % 3 == 0:
            # worst case allowed by the estimator bound
            est = np.maximum(1 / p, 1 / (1 - p)) * rng.random(k)
        else:
            arm = int(rng.choice(k, p=p))
            est = importance_weighted(g, p, reveal(g, rng.random(k), arm))
        q = omd_step(reg, p, est, DecisionSet(k))
        ratio = float(np.max(np.maximum(q / p, p / q)))
        worst_ratio = max(worst_ratio, ratio)
        fails += not check_multiplicative_stability(p, q)
    verdict("C5 multiplicative stability", fails == 0, f"{fails} failures, max ratio {worst_ratio:.3f}")


# --- 6 -----------------------------------------------------------------------


@pytest.mark.slow
def test_c06_increasing_rate_cap(verdict):
    T = 5000
    graphs = [STRONG5, clique_union_graph([1, 1, 1]), clique_union_graph([2, 3]),
              FeedbackGraph(4, [(0, 0), (1, 1), (0, 1), (1, 0)] + [(j, i) for i in (2, 3) for j in range(4) if j != i])]
    viol, worst, fired = 0, 0.0, 0
    for run in range(20):
        g = graphs[run % len(graphs)]
        rng = np.random.default_rng(600 + run)
        k = g.num_arms
        if run % 2:
            losses = (rng.random((T, k)) < 0.5).astype(float)
        else:
            losses = np.ones((T, k))
            losses[:, rng.integers(k)] = 0.0
        pol = CliqueMeta(g, T, seed=run)
        for t in range(T):
            arm = pol.act()
            pol.update(reveal(g, losses[t], arm))
        ratio = float(np.max(pol.core.eta_clique / pol.eta))
        worst = max(worst, ratio)
        viol += ratio > 5
        fired += int(np.sum(pol.core.increases))
    verdict("C6 increasing-rate cap", viol == 0, f"max eta_T,j/eta={worst:.4f}, {fired} increases")


# --- 7 -----------------------------------------------------------------------


@pytest.mark.slow
def test_c07_small_loss_scaling(verdict, tmp_path):
    g = SELF_AWARE6
    kappa = greedy_clique_partition(g).kappa
    T = 20000
    cfg = ExperimentConfig(g, "clipped_two_stage", T, "smallloss:mu_star=0.02,gap=0.3", SEEDS10,
                           params={"alpha_hint": 3}, out=tmp_path)
    rows, _ = scaling_suite(cfg, "mu_star", [0.02, 0.08, 0.32])
    L = [r.mean_L_star for r in rows]
    R = [r.mean_regret for r in rows]
    slope = loglog_slope(L, R)
    bounds = [10 * math.sqrt((kappa + 1) * l * math.log(g.num_arms * T)) for l in L]
    ok = 0.3 <= slope <= 0.7 and all(r <= b for r, b in zip(R, bounds))
    pts = ", ".join(f"L*={l:.0f} Reg={r:.1f} (bound {b:.0f})" for l, r, b in zip(L, R, bounds))
    verdict("C7 small-loss scaling", ok, f"slope {slope:.3f}; {pts}")


# --- 8 -----------------------------------------------------------------------


def _exponent(env, tmp_path):
    cfg = ExperimentConfig(BIPARTITE6, "weakly_bipartite", 10000, env, SEEDS10,
                           params={"L_oracle": "auto"}, out=tmp_path)
    rows, _ = scaling_suite(cfg, "T", [10000, 40000])
    return rows[1].slope, rows


@pytest.mark.slow
def test_c08_weak_dichotomy_best_in_S(verdict, tmp_path):
    slope, rows = _exponent("smallloss:mu_star=0.1,gap=0.5,best_arm=0", tmp_path)
    verdict("C8a weakly observable, best arm in S", slope <= 0.65,
            f"exponent {slope:.3f}; Reg {rows[0].mean_regret:.1f} -> {rows[1].mean_regret:.1f}")


@pytest.mark.slow
def test_c08_weak_dichotomy_best_outside_S(verdict, tmp_path):
    slope, rows = _exponent("smallloss:mu_star=0.1,gap=0.3,best_arm=5", tmp_path)
    verdict("C8b weakly observable, best arm outside S", slope >= 0.6,
            f"exponent {slope:.3f}; Reg {rows[0].mean_regret:.1f} -> {rows[1].mean_regret:.1f}")


# --- 9 -----------------------------------------------------------------------


@pytest.mark.slow
def test_c09_worst_case_sanity(verdict):
    g = STRONG5
    T = 20000
    alpha = len(greedy_independent_set(g))
    rep = run_experiment(ExperimentConfig(g, "exp3g_hybrid", T, "uniform", SEEDS10))
    bound = 10 * math.sqrt(alpha * T * math.log(g.num_arms * T))
    ok = rep.mean_regret <= bound and rep.mean_regret / T <= 0.1
    verdict("C9 worst-case sanity", ok,
            f"mean Reg {rep.mean_regret:.1f} vs bound {bound:.0f}, Reg/T {rep.mean_regret / T:.4f}")


# --- 10 ----------------------------------------------------------------------


@pytest.mark.slow
def test_c10_lower_bound_pair(verdict):
    T = 30000
    pair = gen_lower_bound_pair(WEAK4, T)
    cfg = ExperimentConfig(WEAK4, "weakly_general_adaptive", T, "lowerbound", (0,))
    reg_a = run_trial(cfg, 0, losses=pair.A).report.regret
    reg_b = run_trial(cfg, 0, losses=pair.B).report.regret
    bound = 5 * T ** (2 / 3) * math.log(T)
    verdict("C10 lower-bound pair, environment A", reg_a <= bound,
            f"Reg_A {reg_a:.1f} vs bound {bound:.0f}; report-only Reg_B {reg_b:.1f}")


# --- 11 ----------------------------------------------------------------------

DET_GRAPH = {
    "exp3g_hybrid": STRONG5,
    "smallloss_hybrid": STRONG5,
    "clique_meta": STRONG5,
    "clique_meta_adaptive": STRONG5,
    "clipped_two_stage": SELF_AWARE6,
    "weakly_bipartite": BIPARTITE6,
    "weakly_general": WEAK5,
    "chrome": BIPARTITE6,
    "weakly_general_adaptive": WEAK5,
}


def test_c11_determinism(verdict):
    assert set(DET_GRAPH) == set(REGISTRY)
    mismatched = []
    for algo, g in DET_GRAPH.items():
        cfg = ExperimentConfig(g, algo, 600, "smallloss:mu_star=0.2,gap=0.2", (0, 7, 3))
        first = run_experiment(cfg)
        second = run_experiment(cfg)
        threaded = run_experiment(cfg, workers=3, executor="thread")
        if not (first.hashes == second.hashes == threaded.hashes):
            mismatched.append(algo)
    verdict("C11 determinism", not mismatched,
            f"{len(DET_GRAPH)} algorithms x 3 seeds" + (f"; mismatched {mismatched}" if mismatched else ""))
