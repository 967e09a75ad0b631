import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphbandit.environments import (
    LossFormatError,
    LossMatrix,
    gen_lower_bound_pair,
    gen_shifted_best,
    gen_stochastic_smallloss,
    gen_uniform,
    load_losses,
    load_losses_file,
    lower_bound_pair_nodes,
    make_environment,
    parse_env_spec,
    write_losses,
)
from graphbandit.graph import FeedbackGraph, self_aware_graph

WEAK4 = FeedbackGraph(4, [(0, 0), (1, 1), (0, 1), (1, 0), (0, 2), (1, 3)])


class TestLoad:
    def test_valid(self):
        lm = load_losses("0,1\n1,0", T=2, K=2)
        np.testing.assert_array_equal(lm.values, [[0, 1], [1, 0]])

    def test_range(self):
        with pytest.raises(LossFormatError, match="outside"):
            load_losses("0,1.5\n1,0")

    def test_shape_mismatch(self):
        with pytest.raises(LossFormatError):
            load_losses("0,1\n1,0", K=3)
        with pytest.raises(LossFormatError):
            load_losses("0,1\n1,0", T=3)

    def test_ragged(self):
        with pytest.raises(LossFormatError, match="row 2"):
            load_losses("0,1\n1\n")

    def test_non_numeric(self):
        with pytest.raises(LossFormatError):
            load_losses("0,x\n")

    def test_file_round_trip(self, tmp_path):
        lm = gen_uniform(3, 20, seed=4)
        write_losses(lm, tmp_path / "l.csv")
        back = load_losses_file(tmp_path / "l.csv", 20, 3)
        np.testing.assert_array_equal(back.values, lm.values)

    def test_matrix_validation(self):
        with pytest.raises(LossFormatError):
            LossMatrix(np.array([[0.5, -0.1]]))
        with pytest.raises(LossFormatError):
            LossMatrix(np.array([0.5, 0.1]))


class TestSmallLoss:
    def test_zero_mean_best(self):
        lm = gen_stochastic_smallloss(4, 500, best_arm=2, mu_star=0.0, gap=0.3, seed=1)
        assert lm.L_star == 0
        assert lm.best_arm == 2

    def test_zero_gap_same_distribution(self):
        lm = gen_stochastic_smallloss(3, 20000, mu_star=0.3, gap=0.0, seed=2)
        means = lm.values.mean(axis=0)
        assert np.all(np.abs(means - 0.3) < 3 * np.sqrt(0.21 / 20000) * 2)

    @given(st.floats(0.01, 0.5), st.integers(0, 1000))
    def test_concentration(self, mu, seed):
        T = 5000
        lm = gen_stochastic_smallloss(3, T, best_arm=0, mu_star=mu, gap=0.2, seed=seed)
        L = lm.cumulative[0]
        # a 5-sigma band keeps the property test from flaking while checking the mean
        assert abs(L - mu * T) <= 5 * np.sqrt(T * mu * (1 - mu))

    def test_range_errors(self):
        with pytest.raises(ValueError):
            gen_stochastic_smallloss(3, 10, mu_star=0.8, gap=0.3)
        with pytest.raises(ValueError):
            gen_stochastic_smallloss(3, 10, best_arm=3)

    def test_deterministic(self):
        a = gen_stochastic_smallloss(3, 100, seed=9)
        b = gen_stochastic_smallloss(3, 100, seed=9)
        np.testing.assert_array_equal(a.values, b.values)


class TestShifted:
    def test_switch_at_one(self):
        lm = gen_shifted_best(4, 4000, 1, seed=0, mu_best=0.1, mu_other=0.5)
        means = lm.values.mean(axis=0)
        assert np.argmin(means) == 3
        assert means[0] > 0.4

    def test_switch_at_end(self):
        T = 4000
        lm = gen_shifted_best(4, T, T, seed=0)
        assert lm.values[: T - 1].mean(axis=0).argmin() == 0

    def test_segment_means(self):
        T, s = 20000, 8001
        lm = gen_shifted_best(3, T, s, seed=5, mu_best=0.1, mu_other=0.4)
        before, after = lm.values[: s - 1], lm.values[s - 1 :]
        for seg, best in ((before, 0), (after, 2)):
            n = seg.shape[0]
            for i in range(3):
                mu = 0.1 if i == best else 0.4
                assert abs(seg[:, i].mean() - mu) <= 4 * np.sqrt(mu * (1 - mu) / n)

    def test_range(self):
        with pytest.raises(ValueError):
            gen_shifted_best(3, 10, 0)
        with pytest.raises(ValueError):
            gen_shifted_best(3, 10, 11)


class TestLowerBoundPair:
    def test_nodes(self):
        assert lower_bound_pair_nodes(WEAK4) == (2, 1)

    def test_environment_A(self):
        pair = gen_lower_bound_pair(WEAK4, 300)
        a = pair.A.values
        assert pair.A.L_star == 0
        assert pair.A.best_arm == pair.u
        np.testing.assert_allclose(a[:, pair.v], 300 ** -0.4)
        others = [i for i in range(4) if i not in (pair.u, pair.v)]
        assert np.all(a[:, others] == 1)

    def test_environment_B(self):
        T = 3000
        pair = gen_lower_bound_pair(WEAK4, T, b=0.4)
        assert pair.B.best_arm == pair.v
        assert pair.B.L_star == pytest.approx(T ** 0.6)

    def test_loss_value_example(self):
        pair = gen_lower_bound_pair(WEAK4, 10**4, b=0.4)
        assert pair.A.values[0, pair.v] == pytest.approx(0.02512, rel=1e-3)

    def test_differ_only_on_interval(self):
        pair = gen_lower_bound_pair(WEAK4, 90, interval_start=10, interval_len=20)
        diff = pair.A.values != pair.B.values
        expected = np.zeros_like(diff)
        expected[10:30, pair.u] = True
        np.testing.assert_array_equal(diff, expected)
        assert pair.interval == (10, 30)

    def test_default_interval_middle_third(self):
        assert gen_lower_bound_pair(WEAK4, 300).interval == (100, 200)

    def test_needs_weak_graph(self):
        with pytest.raises(ValueError):
            gen_lower_bound_pair(self_aware_graph(3), 100)


class TestEnvSpec:
    def test_parse(self):
        assert parse_env_spec("smallloss:mu_star=0.1, gap=0.2") == ("smallloss", {"mu_star": "0.1", "gap": "0.2"})
        assert parse_env_spec("file:/a/b:c.csv") == ("file", {"path": "/a/b:c.csv"})
        assert parse_env_spec("uniform") == ("uniform", {})
        with pytest.raises(ValueError):
            parse_env_spec("smallloss:mu_star")

    def test_make(self, tmp_path):
        g = WEAK4
        assert make_environment("uniform", g, 50, seed=1).values.shape == (50, 4)
        lm = make_environment("smallloss:mu_star=0,best_arm=1", g, 50, seed=1)
        assert lm.cumulative[1] == 0
        b = make_environment("lowerbound:variant=B,interval_start=0,interval_len=10", g, 60)
        assert b.values[:10, 2].sum() == 10
        path = tmp_path / "x.csv"
        write_losses(lm, path)
        np.testing.assert_array_equal(make_environment(f"file:{path}", g, 50).values, lm.values)
        with pytest.raises(ValueError):
            make_environment("nope", g, 50)

    @pytest.mark.parametrize("spec", ["uniform", "smallloss", "shifted:switch_round=7", "lowerbound"])
    def test_generated_round_trip(self, spec):
        lm = make_environment(spec, WEAK4, 30, seed=3)
        back = load_losses(lm.to_csv(), 30, 4)
        np.testing.assert_array_equal(back.values, lm.values)
