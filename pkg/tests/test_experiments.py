from dataclasses import replace
import os

import numpy as np
import pytest

from gsfw.experiments import (RECIPES, ExperimentConfig, SensingProblem, SolverSpec,
                              gen_gaussian_matrix, gen_grid_signal, gen_measurements,
                              gen_pm1_signal, ksupport_fig, load_config, load_grid_image,
                              make_problem, n_measurements, parse_config, ratio_sweep,
                              run_experiment)
from gsfw.graph import SubgraphModel, connected_components, is_member, support_of
from gsfw.objectives import save_matrix
from gsfw.solvers import IterateTrace, read_meta

# medians of the fig4-desk recipe at its default seed, from the first recorded run
FIG4_GOLDEN_H = {"DmoAccFw-I": 0.051555, "DmoFw-I": 0.049401, "IHT": 0.24735,
                 "GenMP": 0.0040576, "CoSaMP-lite": 0.042549}
FIG4_GOLDEN_ERR = {"DmoAccFw-I": 0.84274, "DmoFw-I": 0.84563, "IHT": 1.1340,
                   "GenMP": 0.83618, "CoSaMP-lite": 0.99765}


def test_gaussian_matrix():
    A = gen_gaussian_matrix(500, 200, 3)
    assert abs(np.mean(np.linalg.norm(A, axis=0) ** 2) - 1.0) < 0.05
    np.testing.assert_array_equal(A, gen_gaussian_matrix(500, 200, 3))
    assert not np.array_equal(A, gen_gaussian_matrix(500, 200, 4))
    with pytest.raises(ValueError):
        gen_gaussian_matrix(0, 3, 1)


def test_measurements():
    A = gen_gaussian_matrix(1000, 10, 1)
    x = np.ones(10) / np.sqrt(10)
    np.testing.assert_array_equal(gen_measurements(A, x, 0.0, 1), A @ x)
    e = gen_measurements(A, x, 0.3, 1) - A @ x
    assert abs(np.mean(e ** 2) / 0.09 - 1.0) < 0.1
    np.testing.assert_array_equal(gen_measurements(A, x, 0.3, 1), gen_measurements(A, x, 0.3, 1))


def test_grid_signal():
    graph, x = gen_grid_signal(4, 4, 4, 1, seed=0)
    sup = support_of(x)
    assert len(sup) == 4 and len(connected_components(graph, sup)) == 1
    assert np.linalg.norm(x) == pytest.approx(1.0) and np.all(x[list(sup)] > 0)
    graph, x = gen_grid_signal(16, 16, 30, 3, seed=5)
    sup = support_of(x)
    assert len(sup) == 30 and len(connected_components(graph, sup)) == 3
    assert is_member(sup, SubgraphModel(graph, 30, 3))
    with pytest.raises(ValueError):
        gen_grid_signal(3, 3, 6, 6, seed=0)
    with pytest.raises(ValueError):
        gen_grid_signal(3, 3, 10, 1, seed=0)


def test_grid_signal_collisions():
    supports = [support_of(gen_grid_signal(16, 16, 20, 1, seed=k)[1]) for k in range(100)]
    assert len(supports) - len(set(supports)) < 5


def test_pm1_signal():
    x = gen_pm1_signal(50, 10, 2)
    assert np.count_nonzero(x) == 10 and np.linalg.norm(x) == pytest.approx(1.0)
    assert len(set(np.abs(x[x != 0]).round(12))) == 1


def test_load_grid_image(tmp_path):
    zero = tmp_path / "zero.txt"
    save_matrix(zero, np.zeros((3, 4)))
    with pytest.raises(ValueError, match="empty support"):
        load_grid_image(zero)
    one = tmp_path / "one.txt"
    img = np.zeros((3, 4))
    img[1, 2] = 7.0
    save_matrix(one, img)
    graph, x, comps = load_grid_image(one)
    assert graph.d == 12 and support_of(x) == (6,) and x[6] == 1.0 and comps == 1
    board = tmp_path / "board.txt"
    cb = np.indices((5, 6)).sum(axis=0) % 2 == 0
    save_matrix(board, cb.astype(float))
    graph, x, comps = load_grid_image(board)
    assert comps == int(cb.sum()) == len(connected_components(graph, support_of(x)))
    with pytest.raises(OSError):
        load_grid_image(tmp_path / "missing.txt")


def test_sensing_problem_invariants():
    with pytest.raises(ValueError):
        SensingProblem(np.eye(2), np.zeros(2), np.array([1.0, 1.0]), 0.0, None, 0, s=1)
    cfg = load_config("fig3-desk")
    prob = make_problem(cfg, 3)
    assert prob.n == n_measurements(5.0, 20) == 100
    assert prob.f_star == 0.0
    assert make_problem(replace(cfg, sigma=0.1), 3).f_star is None


def test_config_parse():
    cfg = load_config("fig4-desk")
    assert (cfg.width, cfg.height, cfg.support_size, cfg.ratio, cfg.trials) == (32, 32, 50, 2.5, 20)
    assert [s.name for s in cfg.solvers] == ["DmoAccFw-I", "DmoFw-I", "IHT", "GenMP", "CoSaMP-lite"]
    assert cfg.solvers[0].L == 1.0 and cfg.solvers[1].L is None
    assert set(RECIPES) == {"fig4-desk", "fig3-desk"}
    text = "[problem]\nwidth = 5\nheight = 5\nsupport_size = 3\n[solver DmoFw-II]\ndelta = 0.5\n"
    cfg = parse_config(text)
    assert cfg.solvers == [SolverSpec("DmoFw-II", delta=0.5)] and cfg.trials == 20


@pytest.mark.parametrize("text", [
    "[problem]\nwidth = 4\n",
    "[problem]\nwdith = 4\n[solver IHT]\n",
    "[run]\ntrials = 0\n[solver IHT]\n",
    "[problem]\nratio = -1\n[solver IHT]\n",
    "[solver Lasso]\n",
    "[problem]\nwidth = four\n[solver IHT]\n",
])
def test_config_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_config_missing_file():
    with pytest.raises(FileNotFoundError):
        load_config("/nonexistent/config.ini")
    with pytest.raises(ValueError):
        ExperimentConfig(solvers=[])


def small_config(**kw):
    base = dict(width=8, height=8, support_size=6, ratio=3.0, trials=1, max_iter=20,
                solvers=[SolverSpec("DmoFw-I")])
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_trial_outputs(tmp_path):
    res = run_experiment(small_config(), out=str(tmp_path))
    files = sorted(os.listdir(tmp_path))
    assert files == ["meta.txt", "summary.csv", "timings.csv", "trial000_DmoFw-I.csv"]
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("DmoFw-I,1,0,")
    tr = IterateTrace.from_csv(tmp_path / "trial000_DmoFw-I.csv")
    assert len(tr) == 21
    meta = read_meta(tmp_path / "meta.txt")
    assert meta["rng"] and meta["failures"] == "0"
    assert res.row("DmoFw-I").n_ok == 1


def test_same_seed_same_summary(tmp_path):
    cfg = small_config(trials=3, solvers=[SolverSpec("DmoAccFw-I", L=1.0), SolverSpec("IHT")])
    a = run_experiment(cfg, out=str(tmp_path / "a"))
    b = run_experiment(cfg, out=str(tmp_path / "b"), jobs=2)
    assert a.rows == b.rows
    for name in os.listdir(tmp_path / "a"):
        if name != "timings.csv":
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_failures_are_recorded(tmp_path):
    cfg = small_config(solvers=[SolverSpec("DmoFw-I", oracle="external:none-registered"),
                                SolverSpec("GenMP", oracle="top-s")])
    res = run_experiment(cfg, out=str(tmp_path))
    assert res.row("DmoFw-I").n_failed == 1 and res.row("GenMP").n_ok == 1
    assert "DmoFw-I" in (tmp_path / "errors.txt").read_text()


def test_ratio_sweep_monotone():
    cfg = replace(load_config("fig3-desk"), trials=5, max_iter=100)
    medians, inversions = ratio_sweep(cfg)
    assert len(medians) == 5 and inversions <= 1


def test_ksupport_small(tmp_path):
    res = ksupport_fig(seeds=[0, 1], deltas=(1.0, 0.1), T=50, n=40, d=80, k=10, s=3,
                       out=str(tmp_path))
    assert len(res.final_f[1.0]) == 2
    assert all(h >= 0 for v in res.final_h.values() for h in v)
    assert (tmp_path / "summary.csv").exists() and (tmp_path / "seed000_delta0.1.csv").exists()


def test_fig4_golden_medians():
    res = run_experiment(load_config("fig4-desk"), jobs=2)
    for name, h in FIG4_GOLDEN_H.items():
        row = res.row(name)
        assert row.n_ok == 20
        assert row.median_h == pytest.approx(h, rel=0.2)
        assert row.median_err == pytest.approx(FIG4_GOLDEN_ERR[name], rel=0.2)
    assert res.verdicts["compared_trials"] == 20
