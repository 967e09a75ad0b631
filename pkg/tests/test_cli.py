import csv
import subprocess
import sys

import pytest

from graphbandit.cli import main
from graphbandit.graph import FeedbackGraph

STRONG = FeedbackGraph(
    5, [(0, 0), (1, 1), (0, 1), (1, 0), (2, 2)] + [(j, i) for i in (3, 4) for j in range(5) if j != i]
)
WEAK = FeedbackGraph(5, [(0, 0), (1, 1), (2, 2), (0, 3), (1, 4), (0, 1), (1, 0), (2, 0)])


@pytest.fixture
def strong_path(tmp_path):
    p = tmp_path / "strong.txt"
    p.write_text(STRONG.to_text())
    return p


@pytest.fixture
def weak_path(tmp_path):
    p = tmp_path / "weak.txt"
    p.write_text("# weakly observable\n" + WEAK.to_text())
    return p


def test_graph_info(strong_path, capsys):
    assert main(["graph-info", "--graph", str(strong_path)]) == 0
    out = capsys.readouterr().out
    assert "K: 5" in out
    assert "class: strongly_observable" in out or "class: strong" in out
    assert "self_loop_set: [0, 1, 2]" in out
    assert "kappa: 2" in out


def test_graph_info_weak(weak_path, capsys):
    assert main(["graph-info", "--graph", str(weak_path)]) == 0
    out = capsys.readouterr().out
    assert "weak_nodes: [3, 4]" in out
    assert "dominating_set:" in out


def test_run_writes_csv(strong_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--graph", str(strong_path), "--algo", "exp3g_hybrid", "--T", "120",
                 "--seeds", "0,1", "--env", "smallloss:mu_star=0.1", "--out", str(out),
                 "--trace", "per-round"])
    assert code == 0
    with open(out / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["seed"] for r in rows] == ["0", "1"]
    assert {"seed", "T", "algo", "learner_loss", "L_star", "best_arm", "regret"} <= set(rows[0])
    assert (out / "rounds_seed0.csv").exists()
    assert "mean_regret=" in capsys.readouterr().out


def test_run_params_and_auto(weak_path, tmp_path):
    code = main(["run", "--graph", str(weak_path), "--algo", "weakly_general", "--T", "200",
                 "--env", "uniform", "--param", "L_oracle=auto", "--param", "gamma=0.5",
                 "--out", str(tmp_path / "o")])
    assert code == 0


def test_scaling(strong_path, tmp_path, capsys):
    out = tmp_path / "sc"
    code = main(["scaling", "--graph", str(strong_path), "--algo", "exp3g_hybrid", "--T", "100",
                 "--env", "smallloss", "--out", str(out), "--grid", "T=100,200"])
    assert code == 0
    with open(out / "scaling.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert rows[0]["slope"] == ""
    assert float(rows[1]["slope"]) == pytest.approx(float(capsys.readouterr().out.splitlines()[2].split(",")[3]),
                                                    abs=1e-4)


@pytest.mark.parametrize("argv", [
    ["--algo", "exp3g_hybrid", "--T", "100", "--env", "nope"],
    ["--algo", "exp3g_hybrid", "--T", "5", "--env", "uniform"],
    ["--algo", "weakly_general", "--T", "200", "--env", "uniform"],
    ["--algo", "exp3g_hybrid", "--T", "100", "--env", "uniform", "--param", "bogus=1"],
])
def test_errors_exit_2(strong_path, tmp_path, argv, capsys):
    code = main(["run", "--graph", str(strong_path), "--out", str(tmp_path / "e"), *argv])
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_graph_file(tmp_path, capsys):
    assert main(["graph-info", "--graph", str(tmp_path / "none.txt")]) == 2


def test_bad_arguments_rejected(strong_path):
    with pytest.raises(SystemExit):
        main(["run", "--graph", str(strong_path), "--algo", "exp3g_hybrid", "--T", "100",
              "--env", "uniform", "--out", "x", "--seeds", "a,b"])


def test_module_entry_point(strong_path):
    res = subprocess.run([sys.executable, "-m", "graphbandit", "graph-info", "--graph", str(strong_path)],
                         capture_output=True, text=True, check=True)
    assert "K: 5" in res.stdout
