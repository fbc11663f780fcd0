"""FastGCRNN encoder-decoder: training, prediction and checkpoints.

Each input frame goes through a two-layer (sampled) graph convolution before
entering a GRU. The encoder's last hidden state seeds the decoder GRU, which
rolls out ``d_out`` steps autoregressively; a shared linear readout maps every
node's hidden state to its predicted flow.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, ShapeError, TrainingError
from .graph import NormAdj, SamplerDist, make_distribution
from .ingest import FlowScaler
from .io import atomic_write_bytes
from .layers import (
    GcnLayerParams,
    GruParams,
    NodeSampler,
    gru_cell_backward,
    gru_cell_forward,
    spatial_extractor_backward,
    spatial_extractor_forward,
)
from .numerics import Param, glorot_uniform

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"FGCRNN1\n"


@dataclass
class ModelConfig:
    d_in: int = 12
    d_out: int = 12
    hidden: int = 64
    spatial_dims: tuple[int, int] = (16, 16)
    activations: tuple[str, str] = ("relu", "relu")
    tie_spatial: bool = False
    input_dim: int = 1

    def __post_init__(self):
        self.spatial_dims = tuple(int(d) for d in self.spatial_dims)
        self.activations = tuple(self.activations)
        if min(self.d_in, self.d_out, self.hidden, self.input_dim, *self.spatial_dims) < 1:
            raise InputError("all model dimensions must be >= 1")


@dataclass
class TrainConfig:
    epochs: int = 10
    lr: float = 1e-3
    batch_size: int = 32
    tf_ratio: float = 0.5
    clip: float = 5.0
    seed: int = 0
    sampler_mode: str = "importance"  # importance | uniform | exhaustive
    t_per_layer: tuple[int, int] = (5, 5)
    frozen: tuple[str, ...] = ()

    def __post_init__(self):
        self.t_per_layer = tuple(int(t) for t in self.t_per_layer)
        self.frozen = tuple(self.frozen)
        if self.epochs < 1 or self.batch_size < 1:
            raise InputError("epochs and batch_size must be >= 1")
        if self.lr < 0 or self.clip <= 0:
            raise InputError("lr must be >= 0 and clip > 0")
        if not 0.0 <= self.tf_ratio <= 1.0:
            raise InputError("tf_ratio must lie in [0, 1]")
        if self.sampler_mode not in ("importance", "uniform", "exhaustive"):
            raise InputError(f"unknown sampler mode {self.sampler_mode!r}")
        if any(t < 1 for t in self.t_per_layer):
            raise InputError("sample sizes must be >= 1")


def _check_rng(tf_ratio: float, rng):
    if 0.0 < tf_ratio < 1.0 and rng is None:
        raise InputError("a random generator is required for fractional teacher forcing")


class FastGcrnnModel:
    def __init__(self, cfg: ModelConfig | None = None, seed: int = 0):
        self.cfg = cfg = cfg or ModelConfig()
        rng = np.random.default_rng(seed)
        d1, d2 = cfg.spatial_dims
        a1, a2 = cfg.activations

        def extractor():
            return [GcnLayerParams.init(cfg.input_dim, d1, a1, rng), GcnLayerParams.init(d1, d2, a2, rng)]

        self.enc_spatial = extractor()
        self.dec_spatial = self.enc_spatial if cfg.tie_spatial else extractor()
        self.enc_gru = GruParams.init(d2, cfg.hidden, rng)
        self.dec_gru = GruParams.init(d2, cfg.hidden, rng)
        self.readout = Param(glorot_uniform(rng, cfg.hidden, 1))

    # -- parameter bookkeeping ------------------------------------------------

    def named_params(self) -> list[tuple[str, Param]]:
        out = []
        for l, p in enumerate(self.enc_spatial):
            out.append((f"enc_spatial.{l}.w", p.w))
        if not self.cfg.tie_spatial:
            for l, p in enumerate(self.dec_spatial):
                out.append((f"dec_spatial.{l}.w", p.w))
        out += [(f"enc_gru.{k}", v) for k, v in self.enc_gru.params()]
        out += [(f"dec_gru.{k}", v) for k, v in self.dec_gru.params()]
        out.append(("readout", self.readout))
        return out

    def params(self) -> list[Param]:
        return [p for _, p in self.named_params()]

    def zero_grads(self) -> None:
        for p in self.params():
            p.zero_grad()

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.value.ravel() for p in self.params()])

    def set_flat(self, theta: np.ndarray) -> None:
        pos = 0
        for p in self.params():
            size = p.value.size
            p.value[...] = np.asarray(theta[pos:pos + size]).reshape(p.value.shape)
            pos += size

    def flat_grad(self) -> np.ndarray:
        return np.concatenate([p.grad.ravel() for p in self.params()])

    # -- forward / backward ---------------------------------------------------

    def _check_input(self, a_hat, x: np.ndarray, cols: int, what: str) -> None:
        a = a_hat.a_hat if isinstance(a_hat, NormAdj) else a_hat
        if x.ndim < 2 or x.shape[-2] != a.shape[0] or x.shape[-1] != cols:
            raise ShapeError(f"{what} must be (..., {a.shape[0]}, {cols}), got {x.shape}")

    def _encode(self, a, x, sampler):
        self._check_input(a, x, self.cfg.d_in, "encoder input")
        h = np.zeros(x.shape[:-1] + (self.cfg.hidden,))
        caches = []
        for t in range(self.cfg.d_in):
            z, sc = spatial_extractor_forward(a, x[..., t:t + 1], self.enc_spatial, sampler)
            h, gc = gru_cell_forward(z, h, self.enc_gru)
            caches.append((sc, gc))
        return h, caches

    def _decode(self, a, c, last_frame, y_teacher, tf_ratio, sampler, rng, hook):
        if tf_ratio > 0 and y_teacher is None:
            raise InputError("teacher forcing requested but no target frames were supplied")
        if y_teacher is not None:
            self._check_input(a, y_teacher, self.cfg.d_out, "teacher targets")
        _check_rng(tf_ratio, rng)
        h = c
        inp = last_frame
        preds, caches, sources = [], [], []
        source = "input"
        for s in range(self.cfg.d_out):
            if s > 0:
                use_teacher = tf_ratio >= 1.0 or (tf_ratio > 0.0 and rng.random() < tf_ratio)
                if use_teacher:
                    inp, source = y_teacher[..., s - 1:s], "teacher"
                else:
                    inp, source = preds[-1], "pred"
            if hook is not None:
                hook(s, inp)
            z, sc = spatial_extractor_forward(a, inp, self.dec_spatial, sampler)
            h, gc = gru_cell_forward(z, h, self.dec_gru)
            pred = h @ self.readout.value
            preds.append(pred)
            caches.append((sc, gc, h))
            sources.append(source)
        return np.concatenate(preds, axis=-1), (caches, sources)

    def forward(self, a_hat, x, y_teacher=None, tf_ratio: float = 0.0, sampler=None,
                rng: np.random.Generator | None = None, hook: Callable | None = None):
        """Full encode/decode pass; ``sampler=None`` is the dense (unsampled) path."""
        x = np.asarray(x, dtype=np.float64)
        c, enc_caches = self._encode(a_hat, x, sampler)
        pred, dec_cache = self._decode(a_hat, c, x[..., -1:], y_teacher, tf_ratio, sampler, rng, hook)
        return pred, (enc_caches, dec_cache)

    def backward(self, dpred: np.ndarray, cache) -> None:
        """Accumulate parameter gradients for ``sum(dpred * pred)``."""
        enc_caches, (dec_caches, sources) = cache
        dh = 0.0
        dnext_input = None
        for s in reversed(range(self.cfg.d_out)):
            sc, gc, h = dec_caches[s]
            dp = dpred[..., s:s + 1]
            if dnext_input is not None and sources[s + 1] == "pred":
                dp = dp + dnext_input
            self.readout.grad += h.reshape(-1, h.shape[-1]).T @ dp.reshape(-1, 1)
            dh = dh + dp @ self.readout.value.T
            dz, dh = gru_cell_backward(dh, gc)
            dnext_input = spatial_extractor_backward(dz, sc)
        for sc, gc in reversed(enc_caches):
            dz, dh = gru_cell_backward(dh, gc)
            spatial_extractor_backward(dz, sc)

    def encode(self, a_hat, x, sampler=None) -> np.ndarray:
        return self._encode(a_hat, np.asarray(x, dtype=np.float64), sampler)[0]

    def decode(self, a_hat, c, last_frame, y_teacher=None, tf_ratio: float = 0.0, sampler=None,
               rng=None, hook=None) -> np.ndarray:
        return self._decode(a_hat, c, last_frame, y_teacher, tf_ratio, sampler, rng, hook)[0]


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. ``pred``."""
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def loss(pred, target) -> float:
    return mse_loss(np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64))[0]


class Adam:
    def __init__(self, params: Sequence[Param], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            p.value -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_global_norm(params: Sequence[Param], max_norm: float) -> float:
    norm = float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))
    if norm > max_norm:
        scale = max_norm / norm
        for p in params:
            p.grad *= scale
    return norm


def make_sampler(mode: str, a_hat: NormAdj, t_per_layer, rng: np.random.Generator | None = None):
    """``exhaustive`` gives every node once per layer; other modes draw from ``rng``."""
    if mode == "exhaustive":
        return NodeSampler(exhaustive=True)
    if not isinstance(a_hat, NormAdj):
        a_hat = NormAdj(np.asarray(a_hat, dtype=np.float64))
    dist: SamplerDist = make_distribution(mode, a_hat, t_per_layer)
    return NodeSampler(dist, rng if rng is not None else np.random.default_rng(0))


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    rmse: float
    val_rmse: float | None = None


def train(model: FastGcrnnModel, a_hat: NormAdj, X: np.ndarray, Y: np.ndarray, cfg: TrainConfig,
          val: tuple[np.ndarray, np.ndarray] | None = None, scaler: FlowScaler | None = None,
          log_every: int = 0) -> list[EpochRecord]:
    """Mini-batch Adam with global-norm clipping; deterministic for a fixed ``cfg.seed``.

    ``X``/``Y`` are stacked windows ``(N, n, d_in)``/``(N, n, d_out)`` in model
    (normalized) units. ``val`` windows are scored densely; with ``scaler`` the
    validation RMSE is reported in raw counts.
    """
    if X.shape[0] == 0:
        raise InputError("training set is empty")
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} windows, Y has {Y.shape[0]}")
    shuffle_ss, sample_ss, tf_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    tf_rng = np.random.default_rng(tf_ss)
    sampler = make_sampler(cfg.sampler_mode, a_hat, cfg.t_per_layer, np.random.default_rng(sample_ss))

    trainable = [p for name, p in model.named_params() if not (cfg.frozen and name.startswith(cfg.frozen))]
    opt = Adam(trainable, lr=cfg.lr)
    history = []
    N = X.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(N)
        total, count = 0.0, 0
        for step, start in enumerate(range(0, N, cfg.batch_size)):
            batch = order[start:start + cfg.batch_size]
            xb, yb = X[batch], Y[batch]
            model.zero_grads()
            pred, cache = model.forward(a_hat, xb, yb, cfg.tf_ratio, sampler, tf_rng)
            value, dpred = mse_loss(pred, yb)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite loss at epoch {epoch}, step {step}")
            model.backward(dpred, cache)
            clip_global_norm(trainable, cfg.clip)
            opt.step()
            total += value * len(batch)
            count += len(batch)
        mean_loss = total / count
        rec = EpochRecord(epoch, mean_loss, float(np.sqrt(mean_loss)))
        if val is not None and val[0].shape[0] > 0:
            rec.val_rmse = evaluate_rmse(model, a_hat, val[0], val[1], scaler)
        history.append(rec)
        if log_every and epoch % log_every == 0:
            log.info("epoch %d loss %.5f val_rmse %s", epoch, mean_loss, rec.val_rmse)
    return history


def predict(model: FastGcrnnModel, a_hat: NormAdj, x: np.ndarray, sampler=None,
            batch_size: int = 256) -> np.ndarray:
    """Forecast ``d_out`` steps without teacher forcing.

    The default sampler is exhaustive, so the result is deterministic and equal
    to the dense path. Pass a seeded :class:`NodeSampler` for sampled inference.
    """
    if sampler is None:
        sampler = NodeSampler(exhaustive=True)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return model.forward(a_hat, x, sampler=sampler)[0]
    outs = [model.forward(a_hat, x[i:i + batch_size], sampler=sampler)[0] for i in range(0, x.shape[0], batch_size)]
    return np.concatenate(outs, axis=0)


def evaluate_rmse(model, a_hat, X, Y, scaler: FlowScaler | None = None, sampler=None) -> float:
    """RMSE over stacked windows; with ``scaler`` both sides are mapped back to raw counts."""
    from .evaluation import rmse

    pred = predict(model, a_hat, X, sampler)
    if scaler is not None:
        pred, Y = scaler.inverse(pred), scaler.inverse(Y)
    return rmse(pred, Y)


# -- checkpoints ---------------------------------------------------------------


def save_checkpoint(path: str | os.PathLike, model: FastGcrnnModel, scaler: FlowScaler | None = None,
                    node_ids: Sequence[str] | None = None, extra: dict | None = None) -> None:
    doc = {
        "format": "fastgcrnn-checkpoint",
        "version": 1,
        "model": asdict(model.cfg),
        "node_ids": list(node_ids) if node_ids is not None else None,
        "scaler": None if scaler is None else {"mean": scaler.mean.tolist(), "std": scaler.std.tolist()},
        "extra": extra or {},
        "params": {
            name: {"shape": list(p.value.shape), "data": p.value.ravel().tolist()}
            for name, p in model.named_params()
        },
    }
    atomic_write_bytes(path, CHECKPOINT_MAGIC + json.dumps(doc, sort_keys=True).encode("utf-8") + b"\n")


@dataclass
class Checkpoint:
    model: FastGcrnnModel
    scaler: FlowScaler | None
    node_ids: list[str] | None
    extra: dict = field(default_factory=dict)


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise InputError(f"{path}: not a FGCRNN1 checkpoint")
    doc = json.loads(raw[len(CHECKPOINT_MAGIC):].decode("utf-8"))
    model = FastGcrnnModel(ModelConfig(**doc["model"]))
    stored = doc["params"]
    for name, p in model.named_params():
        if name not in stored:
            raise InputError(f"{path}: missing parameter {name}")
        entry = stored[name]
        if tuple(entry["shape"]) != p.value.shape:
            raise InputError(f"{path}: parameter {name} has shape {entry['shape']}, expected {list(p.value.shape)}")
        p.value[...] = np.array(entry["data"], dtype=np.float64).reshape(p.value.shape)
    sc = doc.get("scaler")
    scaler = None if sc is None else FlowScaler(np.array(sc["mean"]), np.array(sc["std"]))
    return Checkpoint(model, scaler, doc.get("node_ids"), doc.get("extra") or {})
