"""Road-dual graph construction, normalized adjacency and node sampling distributions.

Roads become nodes; two roads are joined by an edge when they meet at an
intersection (a shared segment endpoint) or when an explicit edge list says so.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class RoadGraph:
    node_ids: tuple[str, ...]
    edges: frozenset[tuple[int, int]]
    adjacency: np.ndarray = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def index(self) -> dict[str, int]:
        return {rid: i for i, rid in enumerate(self.node_ids)}

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)


@dataclass(frozen=True)
class NormAdj:
    a_hat: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.a_hat.shape[0]


@dataclass(frozen=True)
class SamplerDist:
    """Per-node sampling probabilities plus the number of draws per layer."""

    probs: np.ndarray = field(repr=False)
    mode: str
    t_per_layer: tuple[int, ...]
    cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise InputError("probs must be a non-empty vector")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise InputError("probs must be nonnegative and sum to 1")
        if self.mode not in ("uniform", "importance"):
            raise InputError(f"unknown sampler mode {self.mode!r}")
        if not self.t_per_layer or any(int(t) < 1 for t in self.t_per_layer):
            raise InputError("every per-layer sample size must be >= 1")
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "t_per_layer", tuple(int(t) for t in self.t_per_layer))
        object.__setattr__(self, "cdf", cdf)

    @property
    def n(self) -> int:
        return self.probs.size


def _from_edges(node_ids: Sequence[str], pairs: Iterable[tuple[int, int]]) -> RoadGraph:
    n = len(node_ids)
    edges = set()
    for i, j in pairs:
        if i == j:
            continue
        edges.add((min(i, j), max(i, j)))
    adj = np.zeros((n, n), dtype=np.float64)
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1.0
    return RoadGraph(tuple(node_ids), frozenset(edges), adj)


def build_road_graph(segments=None, *, road_ids=None, edges=None, tol: float = 1e-6) -> RoadGraph:
    """Build the road-dual graph.

    Either pass ``segments`` as ``(road_id, (ax, ay), (bx, by))`` tuples, in which
    case roads sharing an endpoint within ``tol`` are adjacent, or pass
    ``road_ids`` with an explicit ``edges`` list of road-id pairs. Nodes are
    ordered by sorted road id so the result does not depend on input order.
    """
    if segments is not None:
        segments = list(segments)
        ids = [str(s[0]) for s in segments]
        _check_unique(ids)
        ends = {}
        for rid, a, b in segments:
            pts = [tuple(float(c) for c in a), tuple(float(c) for c in b)]
            for p in pts:
                if not all(math.isfinite(c) for c in p):
                    raise InputError(f"non-finite coordinate on road {rid}")
            ends[str(rid)] = pts
        node_ids = sorted(ids)
        index = {rid: i for i, rid in enumerate(node_ids)}
        pairs = _snap_pairs(ends, index, tol)
        return _from_edges(node_ids, pairs)

    if road_ids is None:
        raise InputError("need either segments or road_ids (+ edges)")
    ids = [str(r) for r in road_ids]
    _check_unique(ids)
    node_ids = sorted(ids)
    index = {rid: i for i, rid in enumerate(node_ids)}
    pairs = []
    for a, b in edges or ():
        a, b = str(a), str(b)
        for rid in (a, b):
            if rid not in index:
                raise InputError(f"edge references unknown road_id {rid!r}")
        pairs.append((index[a], index[b]))
    return _from_edges(node_ids, pairs)


def _check_unique(ids: list[str]) -> None:
    seen = set()
    for rid in ids:
        if rid in seen:
            raise InputError(f"duplicate road_id {rid!r}")
        seen.add(rid)


def _snap_pairs(ends: dict[str, list[tuple[float, ...]]], index: dict[str, int], tol: float):
    # grid hash with cell size tol; a match can only sit in a neighbouring cell
    cell = tol if tol > 0 else 1e-12
    grid: dict[tuple[int, ...], list[tuple[int, tuple[float, ...]]]] = {}
    pairs = set()
    for rid in sorted(ends):
        i = index[rid]
        for p in ends[rid]:
            key = tuple(int(math.floor(c / cell)) for c in p)
            for off in _offsets(len(key)):
                for j, q in grid.get(tuple(k + o for k, o in zip(key, off)), ()):
                    if j != i and math.dist(p, q) <= tol:
                        pairs.add((min(i, j), max(i, j)))
            grid.setdefault(key, []).append((i, p))
    return sorted(pairs)


def _offsets(dim: int):
    if dim == 0:
        yield ()
        return
    for rest in _offsets(dim - 1):
        for o in (-1, 0, 1):
            yield rest + (o,)


def normalize_adjacency(g: RoadGraph | np.ndarray) -> NormAdj:
    """Symmetric normalization with self loops: D^-1/2 (A + I) D^-1/2."""
    adj = g.adjacency if isinstance(g, RoadGraph) else np.asarray(g, dtype=np.float64)
    a_tilde = adj + np.eye(adj.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return NormAdj(a_tilde * d_inv_sqrt[:, None] * d_inv_sqrt[None, :])


def uniform_distribution(n: int, t_per_layer: Sequence[int] = (5, 5)) -> SamplerDist:
    return SamplerDist(np.full(n, 1.0 / n), "uniform", tuple(t_per_layer))


def importance_distribution(na: NormAdj, t_per_layer: Sequence[int] = (5, 5)) -> SamplerDist:
    """q(u) proportional to the squared norm of column u of the normalized adjacency."""
    col_sq = np.einsum("ij,ij->j", na.a_hat, na.a_hat)
    return SamplerDist(col_sq / col_sq.sum(), "importance", tuple(t_per_layer))


def make_distribution(mode: str, na: NormAdj, t_per_layer: Sequence[int]) -> SamplerDist:
    if mode == "importance":
        return importance_distribution(na, t_per_layer)
    if mode == "uniform":
        return uniform_distribution(na.n, t_per_layer)
    raise InputError(f"unknown sampler mode {mode!r}")


@dataclass(frozen=True)
class DegreeHistogram:
    counts: dict[int, int]
    cumulative: dict[int, float]

    def share_below(self, degree: int) -> float:
        """Fraction of nodes with degree strictly below ``degree``."""
        total = sum(self.counts.values())
        return sum(c for d, c in self.counts.items() if d < degree) / total if total else 0.0


def degree_histogram(g: RoadGraph) -> DegreeHistogram:
    # raw adjacency, no self loops
    deg = g.degrees()
    values, counts = np.unique(deg, return_counts=True)
    hist = {int(d): int(c) for d, c in zip(values, counts)}
    cum, running = {}, 0
    for d in sorted(hist):
        running += hist[d]
        cum[d] = running / g.n
    return DegreeHistogram(hist, cum)


def random_road_graph(n: int, avg_degree: float = 4.0, seed: int = 0, prefix: str = "r") -> RoadGraph:
    """Erdos-Renyi graph with the requested expected degree; ids are zero-padded."""
    rng = np.random.default_rng(seed)
    p = min(1.0, avg_degree / max(n - 1, 1))
    width = len(str(max(n - 1, 0)))
    ids = [f"{prefix}{i:0{width}d}" for i in range(n)]
    upper = np.triu(rng.random((n, n)) < p, k=1)
    i, j = np.nonzero(upper)
    return _from_edges(ids, zip(i.tolist(), j.tolist()))


def write_graph(g: RoadGraph, path: str | os.PathLike) -> None:
    from .io import atomic_write_text

    lines = [f"#node {rid}" for rid in g.node_ids]
    lines += [f"{g.node_ids[i]},{g.node_ids[j]}" for i, j in sorted(g.edges)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_graph(path: str | os.PathLike) -> RoadGraph:
    nodes, edges = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#node"):
                rid = line[len("#node"):].strip()
                if not rid:
                    raise InputError(f"{path}:{lineno}: empty node id")
                nodes.append(rid)
            elif line.startswith("#"):
                continue
            else:
                parts = [p.strip() for p in line.split(",")]
                if len(parts) != 2 or not all(parts):
                    raise InputError(f"{path}:{lineno}: expected 'road_id_a,road_id_b'")
                edges.append((parts[0], parts[1]))
    return build_road_graph(road_ids=nodes, edges=edges)


def read_segments(path: str | os.PathLike) -> list:
    """CSV with header ``road_id,ax,ay,bx,by``."""
    import csv

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"road_id", "ax", "ay", "bx", "by"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise InputError(f"{path}: header must contain {sorted(need)}")
        for row in reader:
            try:
                a = (float(row["ax"]), float(row["ay"]))
                b = (float(row["bx"]), float(row["by"]))
            except ValueError as exc:
                raise InputError(f"{path}: bad coordinate in row {row}") from exc
            out.append((row["road_id"].strip(), a, b))
    return out
