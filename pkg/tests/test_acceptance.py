"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import time
from datetime import timedelta

import numpy as np

from fastgcrnn.bench import benchmark_layer, loglog_slope, single_thread
from fastgcrnn.cli import dispatch
from fastgcrnn.evaluation import ha_window_forecasts, rmse
from fastgcrnn.graph import importance_distribution, normalize_adjacency, random_road_graph, uniform_distribution
from fastgcrnn.ingest import (DEFAULT_BEGIN, FlowScaler, IngestSummary, build_flow_matrix, chronological_split,
                              read_gps_records, window_arrays)
from fastgcrnn.layers import (GcnLayerParams, NodeSampler, ReplaySampler, draw_nodes, fastgcn_sample_forward,
                              gcn_dense_forward)
from fastgcrnn.model import (FastGcrnnModel, ModelConfig, TrainConfig, loss, mse_loss, predict, train)
from fastgcrnn.numerics import Param, finite_diff_grad, max_relative_error
from fastgcrnn.synthetic import SynthConfig, generate_synthetic

try:
    from conftest import FIXTURES, star_graph
except ImportError:  # run as a script from the repository root
    import sys
    from pathlib import Path

    sys.path.insert(0, str(Path(__file__).parent))
    from conftest import FIXTURES, star_graph

RESULTS: list[str] = []


def report(num: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {num} {'PASS' if passed else 'FAIL'}: {title} -- {detail}"
    RESULTS.append(line)
    print(line)
    assert passed, line


# 1 -----------------------------------------------------------------------------


def test_criterion_1_unbiased_estimator():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    na = normalize_adjacency(random_road_graph(20, 4.0, seed=20))
    # nonnegative features like traffic counts; zero-mean features put the 1% bar within ~1.4 sigma of the noise
    h = rng.uniform(0.0, 1.0, size=(20, 3))
    p = GcnLayerParams(Param(rng.standard_normal((3, 4))), "linear")
    dense, _ = gcn_dense_forward(na, h, p)
    errors = {}
    for name, dist in (("uniform", uniform_distribution(20, (4,))), ("importance", importance_distribution(na, (4,)))):
        total = np.zeros_like(dense)
        for _ in range(100_000):
            total += fastgcn_sample_forward(na, h, p, draw_nodes(dist, 0, rng))[0]
        errors[name] = np.linalg.norm(total / 100_000 - dense) / np.linalg.norm(dense)
    elapsed = time.perf_counter() - start
    ok = max(errors.values()) < 0.01 and elapsed < 60
    report(1, "sampled pre-activation mean matches dense", ok,
           f"rel err uniform={errors['uniform']:.4%} importance={errors['importance']:.4%} (<1%), {elapsed:.1f}s (<60s)")


# 2 -----------------------------------------------------------------------------


def test_criterion_2_variance_reduction():
    # features entering the second spatial layer: positive flows after one propagation step
    na = normalize_adjacency(star_graph(19))
    rng = np.random.default_rng(7)
    h = na.a_hat @ rng.uniform(10.0, 40.0, size=(20, 1))
    p = GcnLayerParams(Param(rng.standard_normal((1, 4))), "linear")
    var = {}
    for name, dist in (("uniform", uniform_distribution(20, (4,))), ("importance", importance_distribution(na, (4,)))):
        draws_rng = np.random.default_rng(11)
        outs = np.stack([fastgcn_sample_forward(na, h, p, draw_nodes(dist, 0, draws_rng))[0] for _ in range(10_000)])
        var[name] = float(outs.var(axis=0).mean())
    ratio = var["importance"] / var["uniform"]
    report(2, "importance sampling lowers estimator variance on a 1-hub/19-leaf star", ratio < 1.0,
           f"variance ratio importance/uniform={ratio:.4f} (<1.0)")


# 3 -----------------------------------------------------------------------------


def test_criterion_3_exhaustive_equals_dense():
    na = normalize_adjacency(random_road_graph(30, 4.0, seed=3))
    model = FastGcrnnModel(ModelConfig(), seed=3)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        x = rng.standard_normal((30, 12)) * 2.0
        dense, _ = model.forward(na, x)
        exh, _ = model.forward(na, x, sampler=NodeSampler(exhaustive=True))
        worst = max(worst, float(np.max(np.abs(exh - dense)) / np.max(np.abs(dense))))
    report(3, "exhaustive-sampler model equals the unsampled path", worst <= 1e-12,
           f"max relative error {worst:.2e} over 50 inputs (<=1e-12)")


# 4 -----------------------------------------------------------------------------


def test_criterion_4_gradient_check():
    start = time.perf_counter()
    na = normalize_adjacency(random_road_graph(5, 2.5, seed=4))
    model = FastGcrnnModel(ModelConfig(d_in=3, d_out=2, hidden=4, spatial_dims=(3, 3)), seed=4)
    rng = np.random.default_rng(4)
    x, y = rng.standard_normal((2, 5, 3)), rng.standard_normal((2, 5, 2))
    rec = NodeSampler(importance_distribution(na, (3, 3)), np.random.default_rng(0), record=True)
    pred, cache = model.forward(na, x, y, 0.5, rec, np.random.default_rng(1))
    model.zero_grads()
    model.backward(mse_loss(pred, y)[1], cache)
    analytic = model.flat_grad()
    replay = ReplaySampler(rec.draws)

    def f(theta):
        model.set_flat(theta)
        replay.reset()
        return loss(model.forward(na, x, y, 0.5, replay, np.random.default_rng(1))[0], y)

    err = max_relative_error(analytic, finite_diff_grad(f, model.get_flat().copy()))
    elapsed = time.perf_counter() - start
    report(4, "full-model gradients match central differences", err < 1e-4 and elapsed < 30,
           f"max relative error {err:.2e} over {analytic.size} parameters (<1e-4), {elapsed:.1f}s (<30s)")


# 5 and 8 -----------------------------------------------------------------------

FORECAST_RECIPE = dict(hidden=32, stride=2, epochs=10, lr=3e-3, batch_size=32, tf_ratio=0.5)


@functools.lru_cache(maxsize=None)
def forecast_setup():
    g = random_road_graph(50, 4.0, seed=1)
    fm = generate_synthetic(g, SynthConfig(seed=1))  # 20 days of 5-minute buckets
    tr, _, te = chronological_split(fm.T)
    scaler = FlowScaler.fit(fm.values[:, tr])
    z = scaler.transform(fm.values)
    X, Y, _ = window_arrays(z[:, tr], 12, 12, FORECAST_RECIPE["stride"])
    Xte, _, t0 = window_arrays(z[:, te], 12, 12, 1)
    t0 = t0 + te.start
    truth = np.stack([fm.values[:, t + 12:t + 24] for t in t0])
    ha = rmse(ha_window_forecasts(fm.values, t0, 12, 12, 288), truth)
    return normalize_adjacency(g), scaler, X, Y, Xte, truth, ha


@functools.lru_cache(maxsize=None)
def forecast_rmse(t_l: int) -> tuple[float, float, float, int]:
    na, scaler, X, Y, Xte, truth, ha = forecast_setup()
    r = FORECAST_RECIPE
    start = time.perf_counter()
    with single_thread():
        model = FastGcrnnModel(ModelConfig(hidden=r["hidden"]), seed=0)
        cfg = TrainConfig(epochs=r["epochs"], lr=r["lr"], batch_size=r["batch_size"], tf_ratio=r["tf_ratio"],
                          seed=0, sampler_mode="importance", t_per_layer=(t_l, t_l))
        train(model, na, X, Y, cfg)
        # test-time inference uses every node, so the reported RMSE is deterministic
        pred = scaler.inverse(predict(model, na, Xte))
    return rmse(pred, truth), ha, time.perf_counter() - start, r["epochs"]


def test_criterion_5_beats_historical_average():
    model_rmse, ha, elapsed, epochs = forecast_rmse(5)
    ok = model_rmse < ha and elapsed < 300 and epochs <= 50
    report(5, "sampled model (t_l=5) beats HA on synthetic data", ok,
           f"test RMSE model={model_rmse:.3f} HA={ha:.3f}, {epochs} epochs, {elapsed:.0f}s (<300s)")


def test_criterion_8_sample_size_insensitivity():
    scores = {t: forecast_rmse(t)[0] for t in (2, 5, 10, 25)}
    best = min(scores.values())
    spread = (max(scores.values()) - best) / best
    detail = ", ".join(f"t_l={t}: {v:.3f}" for t, v in scores.items())
    report(8, "test RMSE varies <20% across t_l in {2,5,10,25}", spread < 0.20,
           f"{detail}; spread {spread:.1%} of best (<20%)")


# 6 -----------------------------------------------------------------------------


def test_criterion_6_complexity_scaling():
    start = time.perf_counter()
    ns = [500, 1000, 2000, 4000]
    res = benchmark_layer(ns, t_l=5, reps=7)
    dense_slope = loglog_slope(ns, [r.dense_ms for r in res])
    sampled_slope = loglog_slope(ns, [r.sampled_ms for r in res])
    ratios = [r.ratio for r in res]
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    elapsed = time.perf_counter() - start
    ok = dense_slope >= 1.7 and sampled_slope <= 1.3 and decreasing and elapsed < 300
    report(6, "dense time ~ n^2, sampled ~ n", ok,
           f"slopes dense={dense_slope:.2f} (>=1.7) sampled={sampled_slope:.2f} (<=1.3), "
           f"ratios {', '.join(f'{r:.4f}' for r in ratios)} (decreasing), {elapsed:.0f}s")


# 7 -----------------------------------------------------------------------------


def test_criterion_7_ingestion_fixture():
    summary = IngestSummary()
    fm, summary = build_flow_matrix(read_gps_records(FIXTURES / "records.csv", summary), ["R1", "R2", "R3"],
                                    DEFAULT_BEGIN, timedelta(minutes=5), T=4, summary=summary)
    expected = np.array([[2, 0, 1, 1], [0, 2, 0, 1], [0, 1, 2, 0]])
    exact = fm.values.shape == expected.shape and np.array_equal(fm.values.astype(np.int64), expected)
    counts = (summary.records_read, summary.duplicates, summary.out_of_horizon, summary.counted)
    report(7, "12-record fixture yields the hand-computed flow matrix", exact and counts == (12, 1, 1, 10),
           f"matrix exact={exact}, read/duplicates/out_of_horizon/counted={counts} (expected (12, 1, 1, 10))")


# 9 -----------------------------------------------------------------------------


def test_criterion_9_cli_training_determinism(tmp_path):
    g, f = tmp_path / "g.txt", tmp_path / "flow.csv"
    assert dispatch(["build-graph", "--n", "10", "--seed", "9", "--out", str(g)]) == 0
    assert dispatch(["synth", "--graph", str(g), "--days", "2", "--seed", "9", "--out", str(f)]) == 0
    blobs = []
    for k in range(2):
        ck = tmp_path / f"run{k}.ckpt"
        code = dispatch(["train", "--flow", str(f), "--graph", str(g), "--checkpoint", str(ck), "--seed", "7",
                         "--epochs", "2", "--hidden", "8", "--stride", "4"])
        assert code == 0
        blobs.append((ck.read_bytes(), (tmp_path / f"run{k}.ckpt.history.csv").read_bytes()))
    same_ckpt, same_hist = blobs[0][0] == blobs[1][0], blobs[0][1] == blobs[1][1]
    report(9, "train --seed 7 twice is bit-identical", same_ckpt and same_hist,
           f"checkpoints identical={same_ckpt}, loss histories identical={same_hist}")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = [test_criterion_1_unbiased_estimator, test_criterion_2_variance_reduction,
             test_criterion_3_exhaustive_equals_dense, test_criterion_4_gradient_check,
             test_criterion_5_beats_historical_average, test_criterion_6_complexity_scaling,
             test_criterion_7_ingestion_fixture, test_criterion_8_sample_size_insensitivity]
    for fn in tests:
        try:
            fn()
        except AssertionError:
            pass
    with tempfile.TemporaryDirectory() as d:
        try:
            test_criterion_9_cli_training_determinism(Path(d))
        except AssertionError:
            pass
