"""Synthetic per-road traffic counts with daily periodicity, trend and spatial coupling."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from .errors import InputError
from .graph import RoadGraph
from .ingest import DEFAULT_BEGIN, FlowMatrix


@dataclass(frozen=True)
class SynthConfig:
    T: int = 288 * 20
    period: int = 288
    slope: float = 0.001
    noise_std: float = 2.0
    alpha: float = 0.3
    base_range: tuple[float, float] = (10.0, 40.0)
    amp_range: tuple[float, float] = (5.0, 20.0)
    phase_spread: float = 2.0 * 3.141592653589793
    seed: int = 0
    interval_s: int = 300

    def __post_init__(self):
        if self.period < 2:
            raise InputError("period must be >= 2")
        if self.noise_std < 0:
            raise InputError("noise_std must be >= 0")
        if self.T < 1:
            raise InputError("T must be >= 1")


def generate_synthetic(g: RoadGraph, cfg: SynthConfig = SynthConfig()) -> FlowMatrix:
    """Counts ``round+(base + amp*sin(2 pi t/period + phase) + slope*t + alpha*nbr + noise)``.

    ``nbr`` is the mean noiseless level of a node's neighbours at the previous
    bucket, so the spatial term propagates along edges.
    """
    rng = np.random.default_rng(cfg.seed)
    n, T = g.n, cfg.T
    base = rng.uniform(*cfg.base_range, size=n)
    amp = rng.uniform(*cfg.amp_range, size=n)
    phase = rng.uniform(0.0, cfg.phase_spread, size=n)
    noise = rng.normal(0.0, cfg.noise_std, size=(n, T)) if cfg.noise_std > 0 else np.zeros((n, T))

    t = np.arange(T)
    own = base[:, None] + amp[:, None] * np.sin(2.0 * np.pi * t[None, :] / cfg.period + phase[:, None])
    own += cfg.slope * t[None, :]

    deg = g.adjacency.sum(axis=1)
    mean_op = np.divide(g.adjacency, deg[:, None], out=np.zeros_like(g.adjacency), where=deg[:, None] > 0)
    clean = own
    if cfg.alpha != 0.0:
        clean = np.empty((n, T))
        prev = base + amp * np.sin(phase - 2.0 * np.pi / cfg.period) - cfg.slope
        for k in range(T):
            clean[:, k] = own[:, k] + cfg.alpha * (mean_op @ prev)
            prev = clean[:, k]
    values = np.maximum(np.rint(clean + noise), 0.0)
    return FlowMatrix(values, g.node_ids, DEFAULT_BEGIN, timedelta(seconds=cfg.interval_s))
