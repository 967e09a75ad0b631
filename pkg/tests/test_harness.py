import math

import numpy as np
import pytest

from graphbandit.environments import LossMatrix
from graphbandit.graph import FeedbackGraph, clique_union_graph
from graphbandit.harness import (
    ExperimentConfig,
    TrialError,
    loglog_slope,
    pairwise_slopes,
    read_summary_csv,
    run_experiment,
    run_trial,
    scaling_suite,
    with_env_param,
    write_summary_csv,
)
from graphbandit.policies import PolicyConfigError

STRONG = FeedbackGraph(
    5, [(0, 0), (1, 1), (0, 1), (1, 0), (2, 2)] + [(j, i) for i in (3, 4) for j in range(5) if j != i]
)
FULL2 = FeedbackGraph(2, [(0, 0), (0, 1), (1, 0), (1, 1)])
WEAK = FeedbackGraph(5, [(0, 0), (1, 1), (2, 2), (0, 3), (1, 4), (0, 1), (1, 0), (2, 0)])


def cfg(**kw):
    base = dict(graph=STRONG, algo="exp3g_hybrid", T=200, env="smallloss:mu_star=0.1", seeds=(0,))
    base.update(kw)
    return ExperimentConfig(**base)


class TestRunTrial:
    def test_zero_losses(self):
        res = run_trial(cfg(env="smallloss:mu_star=0,gap=0"), 0)
        np.testing.assert_array_equal(res.report.regrets, 0)

    def test_full_information_bookkeeping(self):
        T = 100
        losses = LossMatrix(np.tile([1.0, 0.0], (T, 1)))
        res = run_trial(cfg(graph=FULL2, T=T), 0, losses=losses)
        rep = res.report
        assert rep.best_arm == 1
        assert rep.L_star == 0
        assert rep.regret == rep.learner_loss
        assert rep.learner_loss == float(np.sum(res.trace.arms == 0))

    def test_bookkeeping_identity(self):
        res = run_trial(cfg(T=300), 3)
        rep = res.report
        np.testing.assert_array_equal(rep.regrets + rep.L, rep.learner_loss)
        assert rep.L_star == rep.L.min()
        assert rep.learner_loss == res.trace.incurred.sum()

    def test_observed_sets(self):
        res = run_trial(cfg(T=100), 1)
        for r in res.trace.records():
            assert set(r.observed) == {i for i in range(5) if r.arm in STRONG.in_neighbors[i]}

    def test_hash_reproducible(self):
        a = run_trial(cfg(T=150), 7)
        b = run_trial(cfg(T=150), 7)
        c = run_trial(cfg(T=150), 8)
        assert a.trace_hash == b.trace_hash != c.trace_hash

    def test_epochs_in_trace(self):
        res = run_trial(cfg(graph=clique_union_graph([2, 2]), algo="clipped_two_stage", T=3000,
                            env="smallloss:mu_star=0.3,gap=0.2"), 0)
        assert res.report.epochs_used == res.policy.epoch
        assert res.trace.epochs[-1] <= res.policy.epoch
        assert np.all(np.diff(res.trace.epochs) >= 0)

    def test_oracle_auto(self):
        c = cfg(algo="smallloss_hybrid", params={"L_star": "auto"}, T=200)
        res = run_trial(c, 0)
        expect = min(math.sqrt((STRONG.s + 1) / res.losses.L_star), 1 / 320)
        assert res.policy.eta == pytest.approx(expect)

    def test_l_quantities(self):
        res = run_trial(cfg(graph=WEAK, algo="weakly_general", T=300, params={"L_oracle": "auto"}), 0)
        rep = res.report
        members = list(res.policy.dominating.members)
        assert rep.L_D == pytest.approx(rep.L[members].mean())
        assert rep.L_iS_star == rep.L[[0, 1, 2]].min()
        assert res.policy.eta == pytest.approx(min(math.sqrt(1 / rep.L_D), 1 / 25))

    def test_failure_reports_round(self, monkeypatch):
        from graphbandit.policies import hybrid

        calls = {"n": 0}
        real = hybrid.omd_step

        def flaky(*a, **k):
            calls["n"] += 1
            if calls["n"] == 5:
                raise RuntimeError("boom")
            return real(*a, **k)

        monkeypatch.setattr(hybrid, "omd_step", flaky)
        with pytest.raises(TrialError, match="round 5"):
            run_trial(cfg(T=50), 0)


class TestValidation:
    def test_short_horizon(self):
        with pytest.raises(PolicyConfigError):
            cfg(T=9).validate()

    def test_graph_class(self):
        with pytest.raises(PolicyConfigError):
            cfg(graph=WEAK).validate()

    def test_auto_only_for_oracles(self):
        with pytest.raises(PolicyConfigError):
            cfg(params={"eta": "auto"}).validate()

    def test_empty_seeds(self):
        with pytest.raises(ValueError):
            cfg(seeds=()).validate()


class TestExperiment:
    def test_single_seed_matches_trial(self):
        rep = run_experiment(cfg(seeds=(4,)))
        trial = run_trial(cfg(), 4)
        assert rep.reports[0].summary_row() == trial.report.summary_row()
        assert rep.hashes == [trial.trace_hash]

    def test_duplicate_seeds(self):
        rep = run_experiment(cfg(seeds=(2, 2)))
        assert rep.rows[0] == rep.rows[1]

    def test_mean(self):
        rep = run_experiment(cfg(seeds=(0, 1, 2)))
        assert rep.mean_regret == pytest.approx(np.mean([r.regret for r in rep.rows]))
        assert rep.std_regret == pytest.approx(np.std([r.regret for r in rep.rows]))

    def test_schedule_independent(self):
        seeds = (5, 1, 3)
        serial = run_experiment(cfg(seeds=seeds))
        threaded = run_experiment(cfg(seeds=seeds), workers=3, executor="thread")
        procs = run_experiment(cfg(seeds=seeds), workers=2, executor="process")
        assert serial.hashes == threaded.hashes == procs.hashes
        assert serial.rows == threaded.rows == procs.rows

    def test_csv_outputs(self, tmp_path):
        rep = run_experiment(cfg(seeds=(0, 1), out=tmp_path, trace="per-round", T=120))
        rows = read_summary_csv(tmp_path / "summary.csv")
        assert rows == rep.rows
        lines = (tmp_path / "rounds_seed1.csv").read_text().splitlines()
        assert lines[0] == "t,arm,loss,cum_learner,cum_best,epoch"
        assert len(lines) == 121
        last = lines[-1].split(",")
        r = rep.reports[1]
        assert float(last[3]) == r.learner_loss
        assert float(last[4]) == r.L_star
        assert float(last[3]) - float(last[4]) == pytest.approx(r.regret)

    def test_summary_round_trip_with_blanks(self, tmp_path):
        rep = run_experiment(cfg(graph=WEAK, algo="weakly_general_adaptive", seeds=(0,), T=150))
        path = tmp_path / "s.csv"
        write_summary_csv(rep.rows, path)
        assert read_summary_csv(path) == rep.rows
        assert rep.rows[0].L_D is not None
        row = run_experiment(cfg(seeds=(0,))).rows[0]
        write_summary_csv([row], path)
        assert read_summary_csv(path)[0].L_D is None


class TestScaling:
    def test_slopes_definition(self):
        s = pairwise_slopes([1, 4, 16], [2, 4, 8])
        assert s[0] is None
        assert s[1] == pytest.approx(0.5)
        assert s[2] == pytest.approx(0.5)
        assert loglog_slope([1, 4, 16], [2, 4, 8]) == pytest.approx(0.5)

    def test_with_env_param(self):
        assert with_env_param("smallloss:mu_star=0.1,gap=0.2", "mu_star", 0.4) == "smallloss:mu_star=0.4,gap=0.2"
        assert with_env_param("uniform", "x", 1) == "uniform:x=1"

    def test_constant_losses_unit_slope(self):
        # every arm costs 1 each round, so learner loss is exactly T
        tot = []
        for T in (100, 400):
            res = run_trial(cfg(graph=FULL2, T=T), 0, losses=LossMatrix(np.ones((T, 2))))
            tot.append(res.report.learner_loss)
        assert pairwise_slopes([100, 400], tot)[1] == pytest.approx(1.0)

    def test_mu_star_grid(self, tmp_path):
        rows, reports = scaling_suite(cfg(seeds=(0, 1), T=4000, out=tmp_path), "mu_star", [0.05, 0.2])
        assert rows[1].mean_L_star / rows[0].mean_L_star == pytest.approx(4, rel=0.15)
        expected = math.log(rows[1].mean_regret / rows[0].mean_regret) / math.log(4)
        assert rows[1].slope == pytest.approx(expected)
        assert (tmp_path / "scaling.csv").exists()
        assert (tmp_path / "mu_star=0.05" / "summary.csv").exists()

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            scaling_suite(cfg(), "T", [100])
