"""Graph convolution, sampled graph convolution and GRU kernels.

Every kernel follows the ``out, cache = forward(...)`` / ``grads = backward(dout, cache)``
convention. Parameter gradients are accumulated into ``Param.grad``; input
gradients are returned. Inputs may carry leading batch dimensions: a node
feature block is ``(..., n, d)`` and the graph operator acts on axis ``-2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CacheError, InputError, ShapeError
from .graph import NormAdj, SamplerDist
from .numerics import ACTIVATIONS, Param, activation_backward, apply_activation, glorot_uniform, sigmoid


def _adj(a_hat) -> np.ndarray:
    return a_hat.a_hat if isinstance(a_hat, NormAdj) else a_hat


# ---------------------------------------------------------------------------
# node draws


@dataclass(frozen=True)
class SampleDraw:
    layer: int
    indices: np.ndarray
    probs_used: np.ndarray
    exhaustive: bool = False

    @property
    def t(self) -> int:
        return self.indices.size

    def weights(self) -> np.ndarray:
        """Per-draw importance weights 1 / (t * q(u_j))."""
        if self.exhaustive:
            return np.ones(self.t)
        return 1.0 / (self.t * self.probs_used)


def exhaustive_draw(n: int, layer: int = 0) -> SampleDraw:
    return SampleDraw(layer, np.arange(n), np.full(n, 1.0 / n), exhaustive=True)


def draw_nodes(dist: SamplerDist, layer: int, rng: np.random.Generator, t: int | None = None) -> SampleDraw:
    """i.i.d. draws with replacement from ``dist`` (inverse-CDF lookup)."""
    if t is None:
        t = dist.t_per_layer[min(layer, len(dist.t_per_layer) - 1)]
    idx = np.searchsorted(dist.cdf, rng.random(t), side="right")
    np.minimum(idx, dist.n - 1, out=idx)
    return SampleDraw(layer, idx, dist.probs[idx])


class NodeSampler:
    """Supplies one draw per layer call; ``exhaustive=True`` yields every node once.

    With ``record=True`` every draw handed out is appended to ``self.draws`` so a
    forward pass can be replayed exactly through :class:`ReplaySampler`.
    """

    def __init__(self, dist: SamplerDist | None = None, rng: np.random.Generator | None = None,
                 exhaustive: bool = False, record: bool = False):
        if not exhaustive and (dist is None or rng is None):
            raise InputError("a sampling NodeSampler needs both a distribution and a generator")
        self.dist = dist
        self.rng = rng
        self.exhaustive = exhaustive
        self.draws: list[SampleDraw] | None = [] if record else None

    def draw(self, layer: int, n: int) -> SampleDraw:
        if self.exhaustive:
            d = exhaustive_draw(n, layer)
        else:
            if self.dist.n != n:
                raise ShapeError(f"distribution covers {self.dist.n} nodes, graph has {n}")
            d = draw_nodes(self.dist, layer, self.rng)
        if self.draws is not None:
            self.draws.append(d)
        return d


class ReplaySampler:
    """Hands back a fixed sequence of draws, in order."""

    def __init__(self, draws: Sequence[SampleDraw]):
        self._draws = list(draws)
        self._pos = 0

    def reset(self) -> None:
        self._pos = 0

    def draw(self, layer: int, n: int) -> SampleDraw:
        if self._pos >= len(self._draws):
            raise CacheError("replay sampler ran out of recorded draws")
        d = self._draws[self._pos]
        self._pos += 1
        if d.layer != layer:
            raise CacheError(f"recorded draw is for layer {d.layer}, requested layer {layer}")
        return d


# ---------------------------------------------------------------------------
# graph convolution


@dataclass
class GcnLayerParams:
    w: Param
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @classmethod
    def init(cls, in_dim: int, out_dim: int, activation: str, rng: np.random.Generator) -> "GcnLayerParams":
        return cls(Param(glorot_uniform(rng, in_dim, out_dim)), activation)

    def params(self) -> list[tuple[str, Param]]:
        return [("w", self.w)]


def _check_features(a: np.ndarray, h: np.ndarray, p: GcnLayerParams) -> None:
    if h.ndim < 2 or h.shape[-2] != a.shape[0] or h.shape[-1] != p.w.shape[0]:
        raise ShapeError(f"features {h.shape} incompatible with adjacency {a.shape} and weight {p.w.shape}")


def gcn_dense_forward(a_hat, h: np.ndarray, p: GcnLayerParams):
    """act(A_hat @ H @ W) over all nodes."""
    a = _adj(a_hat)
    _check_features(a, h, p)
    support = h @ p.w.value
    pre = a @ support
    out = apply_activation(p.activation, pre)
    return out, ("dense", a, h, p, pre, out)


def fastgcn_sample_forward(a_hat, h: np.ndarray, p: GcnLayerParams, draw: SampleDraw):
    """Monte-Carlo graph convolution using only the drawn nodes.

    Pre-activation for node v is ``(1/t) sum_j A_hat[v,u_j] H[u_j] W / q(u_j)``;
    one draw serves every output node.
    """
    a = _adj(a_hat)
    _check_features(a, h, p)
    idx = draw.indices
    n = a.shape[0]
    if idx.size == 0:
        raise InputError("empty sample draw")
    if idx.min() < 0 or idx.max() >= n:
        raise InputError(f"draw index out of range [0, {n})")
    if np.any(draw.probs_used <= 0):
        raise InputError("drawn node has zero sampling probability")
    scale = draw.weights()
    # NormAdj is symmetric, so contiguous rows stand in for strided columns
    cols = a[idx].T if isinstance(a_hat, NormAdj) else a[:, idx]
    h_s = h[..., idx, :]
    support = (h_s @ p.w.value) * scale[:, None]
    pre = cols @ support
    out = apply_activation(p.activation, pre)
    return out, ("sampled", cols, h_s, idx, scale, h.shape, p, pre, out)


def gcn_backward(dout: np.ndarray, cache):
    """Backward for either graph-convolution forward; returns the input gradient."""
    if not cache or cache[0] not in ("dense", "sampled"):
        raise CacheError("gcn_backward needs the cache returned by a graph-convolution forward")
    if cache[0] == "dense":
        _, a, h, p, pre, out = cache
        dpre = activation_backward(p.activation, pre, out, dout)
        dsupport = a.T @ dpre
        p.w.grad += h.reshape(-1, h.shape[-1]).T @ dsupport.reshape(-1, dsupport.shape[-1])
        return dsupport @ p.w.value.T
    _, cols, h_s, idx, scale, h_shape, p, pre, out = cache
    dpre = activation_backward(p.activation, pre, out, dout)
    dsupport = (cols.T @ dpre) * scale[:, None]
    p.w.grad += h_s.reshape(-1, h_s.shape[-1]).T @ dsupport.reshape(-1, dsupport.shape[-1])
    dh_s = dsupport @ p.w.value.T
    dh = np.zeros(h_shape)
    # repeated indices must accumulate
    np.add.at(np.moveaxis(dh, -2, 0), idx, np.moveaxis(dh_s, -2, 0))
    return dh


gcn_dense_backward = gcn_backward
fastgcn_sample_backward = gcn_backward


def spatial_extractor_forward(a_hat, x: np.ndarray, layers: Sequence[GcnLayerParams], sampler=None):
    """Two stacked graph convolutions; ``sampler=None`` runs them densely.

    Each layer takes its own draw from ``sampler``.
    """
    if len(layers) != 2:
        raise ShapeError(f"the spatial extractor has exactly two layers, got {len(layers)}")
    n = _adj(a_hat).shape[0]
    caches = []
    h = x
    for l, p in enumerate(layers):
        if sampler is None:
            h, c = gcn_dense_forward(a_hat, h, p)
        else:
            h, c = fastgcn_sample_forward(a_hat, h, p, sampler.draw(l, n))
        caches.append(c)
    return h, ("spatial", caches)


def spatial_extractor_backward(dout: np.ndarray, cache):
    if not cache or cache[0] != "spatial":
        raise CacheError("spatial_extractor_backward needs a spatial_extractor_forward cache")
    d = dout
    for c in reversed(cache[1]):
        d = gcn_backward(d, c)
    return d


# ---------------------------------------------------------------------------
# GRU


_GRU_NAMES = ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")


@dataclass
class GruParams:
    w_z: Param
    u_z: Param
    b_z: Param
    w_r: Param
    u_r: Param
    b_r: Param
    w_h: Param
    u_h: Param
    b_h: Param

    @property
    def in_dim(self) -> int:
        return self.w_z.shape[0]

    @property
    def hidden(self) -> int:
        return self.u_z.shape[0]

    @classmethod
    def init(cls, in_dim: int, hidden: int, rng: np.random.Generator) -> "GruParams":
        kw = {}
        for gate in "zrh":
            kw[f"w_{gate}"] = Param(glorot_uniform(rng, in_dim, hidden))
            kw[f"u_{gate}"] = Param(glorot_uniform(rng, hidden, hidden))
            kw[f"b_{gate}"] = Param(np.zeros(hidden))
        return cls(**kw)

    def params(self) -> list[tuple[str, Param]]:
        return [(name, getattr(self, name)) for name in _GRU_NAMES]


def gru_cell_forward(x: np.ndarray, h_prev: np.ndarray, p: GruParams):
    """One GRU step applied to every node with shared weights.

    z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br),
    c = tanh(x Wh + (r*h) Uh + bh), h' = (1-z)*h + z*c
    """
    if x.shape[-1] != p.in_dim or h_prev.shape[-1] != p.hidden or x.shape[:-1] != h_prev.shape[:-1]:
        raise ShapeError(f"GRU input {x.shape} / state {h_prev.shape} do not fit in={p.in_dim}, hidden={p.hidden}")
    z = sigmoid(x @ p.w_z.value + h_prev @ p.u_z.value + p.b_z.value)
    r = sigmoid(x @ p.w_r.value + h_prev @ p.u_r.value + p.b_r.value)
    rh = r * h_prev
    c = np.tanh(x @ p.w_h.value + rh @ p.u_h.value + p.b_h.value)
    h = (1.0 - z) * h_prev + z * c
    return h, ("gru", x, h_prev, p, z, r, rh, c)


def gru_cell_backward(dh: np.ndarray, cache):
    """Returns ``(dx, dh_prev)`` and accumulates parameter gradients."""
    if not cache or cache[0] != "gru":
        raise CacheError("gru_cell_backward needs a gru_cell_forward cache")
    _, x, h_prev, p, z, r, rh, c = cache
    flat = lambda m: m.reshape(-1, m.shape[-1])  # noqa: E731

    dz = dh * (c - h_prev)
    dc = dh * z
    dh_prev = dh * (1.0 - z)

    da_c = dc * (1.0 - c * c)
    p.w_h.grad += flat(x).T @ flat(da_c)
    p.u_h.grad += flat(rh).T @ flat(da_c)
    p.b_h.grad += flat(da_c).sum(axis=0)
    drh = da_c @ p.u_h.value.T
    dr = drh * h_prev
    dh_prev += drh * r

    da_r = dr * r * (1.0 - r)
    da_z = dz * z * (1.0 - z)
    for da, w, u, b in ((da_z, p.w_z, p.u_z, p.b_z), (da_r, p.w_r, p.u_r, p.b_r)):
        w.grad += flat(x).T @ flat(da)
        u.grad += flat(h_prev).T @ flat(da)
        b.grad += flat(da).sum(axis=0)
        dh_prev += da @ u.value.T

    dx = da_z @ p.w_z.value.T + da_r @ p.w_r.value.T + da_c @ p.w_h.value.T
    return dx, dh_prev
