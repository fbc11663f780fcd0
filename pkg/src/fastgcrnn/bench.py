"""Wall-clock comparison of dense and sampled graph convolution across graph sizes."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .graph import importance_distribution, normalize_adjacency, random_road_graph
from .layers import GcnLayerParams, draw_nodes, fastgcn_sample_forward, gcn_backward, gcn_dense_forward
from .numerics import Param


@dataclass(frozen=True)
class BenchResult:
    n: int
    t_l: int
    dense_ms: float
    sampled_ms: float
    peak_alloc_estimate: int
    sampled_alloc_estimate: int
    reps: int

    @property
    def ratio(self) -> float:
        return self.sampled_ms / self.dense_ms


@contextmanager
def single_thread():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        yield
        return
    with threadpool_limits(limits=1):
        yield


def _median_ms(fn, reps: int) -> float:
    fn()  # warm-up
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) * 1e3


def benchmark_layer(n_list: Sequence[int], t_l: int = 5, reps: int = 7, feat_dim: int = 16,
                    out_dim: int = 16, seed: int = 0, train_step: bool = False,
                    avg_degree: float = 4.0) -> list[BenchResult]:
    """Median forward time (or forward+backward+update with ``train_step``) per graph size."""
    if reps < 5:
        raise InputError("use at least 5 repetitions")
    results = []
    with single_thread():
        for n in n_list:
            if n < t_l:
                raise InputError(f"graph size {n} is smaller than the sample size {t_l}")
            rng = np.random.default_rng(seed + n)
            na = normalize_adjacency(random_road_graph(n, avg_degree, seed=seed + n))
            dist = importance_distribution(na, (t_l,))
            h = rng.standard_normal((n, feat_dim))
            layer = GcnLayerParams(Param(rng.standard_normal((feat_dim, out_dim)) * 0.1), "relu")
            dout = np.ones((n, out_dim))

            def dense():
                out, cache = gcn_dense_forward(na, h, layer)
                if train_step:
                    gcn_backward(dout, cache)
                    layer.w.value -= 1e-9 * layer.w.grad
                    layer.w.zero_grad()
                return out

            def sampled():
                out, cache = fastgcn_sample_forward(na, h, layer, draw_nodes(dist, 0, rng))
                if train_step:
                    gcn_backward(dout, cache)
                    layer.w.value -= 1e-9 * layer.w.grad
                    layer.w.zero_grad()
                return out

            dense_ms = _median_ms(dense, reps)
            sampled_ms = _median_ms(sampled, reps)
            # dominant float64 buffers only: full adjacency vs gathered columns
            dense_bytes = 8 * (n * n + n * (feat_dim + 2 * out_dim))
            sampled_bytes = 8 * (n * t_l + n * feat_dim + (n + t_l) * out_dim)
            results.append(BenchResult(n, t_l, dense_ms, sampled_ms, dense_bytes, sampled_bytes, reps))
    return results


def loglog_slope(ns: Sequence[int], times: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(times, float)), 1)[0])


def results_csv(results: Sequence[BenchResult]) -> str:
    lines = ["n,t_l,dense_ms,sampled_ms,ratio"]
    lines += [f"{r.n},{r.t_l},{r.dense_ms:.6f},{r.sampled_ms:.6f},{r.ratio:.6f}" for r in results]
    return "\n".join(lines) + "\n"


def plot_data(results: Sequence[BenchResult]) -> str:
    """One two-column block per curve, separated by blank lines (gnuplot ``index`` style)."""
    blocks = []
    for name, attr in (("dense_ms", "dense_ms"), ("sampled_ms", "sampled_ms")):
        rows = [f"# {name}"] + [f"{r.n} {getattr(r, attr):.6f}" for r in results]
        blocks.append("\n".join(rows))
    return "\n\n\n".join(blocks) + "\n"
