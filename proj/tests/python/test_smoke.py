"""End-to-end smoke tests for the gclab python module and the CLI binary.

The ctest harness sets PYTHONPATH to the built package and GCLAB_CLI to the
command-line binary; the tests skip CLI checks when the binary is absent.
"""

import csv
import math
import os
import subprocess

import numpy as np
import pytest

import gclab as g


def shift_inputs(m=1.0, delta=0.5, r_src=5.0, r_tgt=3.0, d_src=10.0, d_tgt=10.0):
    inp = g.ShiftInputs()
    inp.m, inp.delta = m, delta
    inp.r_src, inp.r_tgt = r_src, r_tgt
    inp.D_src, inp.D_tgt = d_src, d_tgt
    return inp


def test_numerics():
    assert g.std_normal_cdf(0.0) == 0.5
    assert g.std_normal_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-14)
    assert g.std_normal_quantile(g.std_normal_cdf(1.3)) == pytest.approx(1.3, abs=1e-10)
    assert g.roc_auc([0.1, 0.2, 0.8, 0.9], [-1, -1, 1, 1]) == 1.0
    assert g.pearson_r([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(1.0)


def test_closed_forms_match_frozen_values():
    rep = g.closed_form_report(shift_inputs())
    assert rep.delta_yh == pytest.approx(0.24960864943549936, rel=1e-12)
    assert rep.eps_t_fg == pytest.approx(0.25039135056450064, rel=1e-12)
    assert rep.eps_s_fg == pytest.approx(0.056923149003329025, rel=1e-12)
    s1, s_neg1 = g.latent_centroids(shift_inputs())
    assert s1 == pytest.approx(0.0, abs=1e-12)  # a - b with a = b
    assert s_neg1 == pytest.approx(-2.0 * 1.5811388300841897, rel=1e-12)
    # The shift bounds the error gap at both levels.
    assert rep.delta_yx >= abs(rep.eps_t_f - rep.eps_s_f) - 1e-9
    assert rep.delta_yh >= abs(rep.eps_t_fg - rep.eps_s_fg) - 1e-9


def test_monte_carlo_agrees_with_closed_form():
    est = g.mc_conditional_shift_feature(1.0, 0.5, 50_000, seed=5)
    cf = g.conditional_shift_x(1.0, 0.5)
    assert abs(est.estimate - cf) <= max(4 * est.std_error, 0.01)


def test_generator_is_deterministic_and_homophilous():
    params = g.CsbmParams()
    params.n, params.d = 64, 16
    a = g.generate_csbm(params, 42)
    b = g.generate_csbm(params, 42)
    c = g.generate_csbm(params, 43)
    assert a == b
    assert a != c
    assert a.features.shape == (64, 16)
    assert sorted(set(a.labels)) == [-1, 1]
    assert a.homophily() > 0.5  # ratio 5 favors intra-class edges


def test_graph_file_roundtrip(tmp_path):
    params = g.CsbmParams()
    params.n, params.d = 32, 8
    graph = g.generate_csbm(params, 9)
    path = str(tmp_path / "a.graph")
    g.write_graph(graph, path)
    assert g.read_graph(path) == graph


def test_exact_transport_plan():
    plan = g.solve_emd(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert plan.total_cost == 0.0
    assert plan.gamma.tolist() == [[0.5, 0.0], [0.0, 0.5]]
    rng = np.random.default_rng(3)
    cost = rng.random((8, 8))
    exact = g.solve_emd(cost)
    assert np.allclose(exact.gamma.sum(axis=0), 1 / 8)
    assert np.allclose(exact.gamma.sum(axis=1), 1 / 8)
    soft = g.sinkhorn_emd(cost, epsilon=0.01)
    assert soft.total_cost >= exact.total_cost - 1e-9
    assert soft.total_cost <= exact.total_cost + 0.05


def test_cmd_discrepancy():
    x = np.random.default_rng(1).random((20, 4))
    assert g.cmd_discrepancy(x, x, 5) == 0.0
    assert g.cmd_discrepancy(x, x + 1.0, 5) > 0.5


def test_training_loop_and_metrics(tmp_path):
    params = g.CsbmParams()
    params.n, params.d = 48, 8
    spec = g.ShiftSpec.identity(params)
    spec.delta = 0.25
    src, tgt = g.generate_shifted_pair(params, spec, 11)

    cfg = g.TrainConfig()
    cfg.epochs, cfg.seed, cfg.hidden = 20, 3, [8]
    report = g.train(cfg, src, tgt)
    assert report.ok
    assert len(report.history) == cfg.epochs
    assert 0 <= report.chosen_epoch < cfg.epochs
    metrics = g.evaluate(report.model, tgt)
    assert 0.0 <= metrics.auc <= 1.0
    assert 0.0 <= metrics.accuracy <= 1.0

    cfg.method = g.Method.gconda
    cfg.beta, cfg.lambda_ = 1.0, 1.0
    ot_report = g.train(cfg, src, tgt)
    assert ot_report.ok
    assert any(e.discrepancy > 0 for e in ot_report.history)
    pm = g.pair_metrics(ot_report.model, src, tgt, cfg)
    assert math.isfinite(pm.w1_hat) and math.isfinite(pm.cmd_value)

    path = str(tmp_path / "model.txt")
    g.save_model(report.model, path)
    reloaded = g.load_model(path)
    assert g.evaluate(reloaded, tgt).auc == metrics.auc


CLI = os.environ.get("GCLAB_CLI")


@pytest.mark.skipif(not CLI, reason="GCLAB_CLI not set")
def test_cli_gen_and_read(tmp_path):
    out = str(tmp_path / "g.graph")
    proc = subprocess.run(
        [CLI, "gen", "--n", "40", "--d", "6", "--seed", "5", "--out", out],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    graph = g.read_graph(out)
    assert graph.n == 40 and graph.d == 6


@pytest.mark.skipif(not CLI, reason="GCLAB_CLI not set")
def test_cli_theory_suite(tmp_path):
    proc = subprocess.run(
        [
            CLI, "theory", "--out-dir", str(tmp_path),
            "--m-grid", "1", "--delta-grid", "0.5", "--rtgt-grid", "3",
            "--feature-samples", "5000", "--graphs", "2", "--graph-nodes", "300",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    with open(tmp_path / "theory.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    row = rows[0]
    cf = g.closed_form_report(shift_inputs(m=1.0, delta=0.5, r_tgt=3.0))
    assert float(row["delta_yh_cf"]) == pytest.approx(cf.delta_yh, rel=1e-12)
    assert abs(float(row["delta_yh_mc"]) - cf.delta_yh) < 0.2


@pytest.mark.skipif(not CLI, reason="GCLAB_CLI not set")
def test_cli_usage_exit_code():
    proc = subprocess.run([CLI, "no-such-command"], capture_output=True, text=True)
    assert proc.returncode == 2
