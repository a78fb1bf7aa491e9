"""Weighted graphs and seed-deterministic Louvain clustering.

The Louvain loop alternates local moving (nodes greedily change
community while any move improves modularity by more than 1e-12) with
aggregation of communities into supernodes, until a level stops
improving.  Node visit order is shuffled once per sweep with a
splitmix64-driven Fisher-Yates permutation, so a run is fully
determined by its integer seed on every platform; the PRNG name is
recorded on the resulting partition.

The whole per-run loop is compiled with numba and releases the GIL, so
ensemble callers can thread over runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, ClusterMixin

from ._rng import PRNG_ID
from .core import NodeRoster, SimilarityMatrix
from .errors import ValidationError
from .validation import check_finite, readonly

GAIN_TOL = 1e-12

_U64 = np.uint64
_LEVEL_SALT = _U64(0x9E3779B97F4A7C15)
_PASS_SALT = _U64(0xD1B54A32D192ED03)


@njit(cache=True, nogil=True)
def _sm_next(state):
    state = state + _U64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return state, z ^ (z >> _U64(31))


@njit(cache=True, nogil=True)
def _sm_mix(value):
    return _sm_next(value)[1]


@njit(cache=True, nogil=True)
def _shuffled_range(n, seed):
    order = np.arange(n, dtype=np.int64)
    state = seed
    for i in range(n - 1, 0, -1):
        state, z = _sm_next(state)
        j = np.int64(z % _U64(i + 1))
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp
    return order


@njit(cache=True, nogil=True)
def _local_moving(indptr, indices, weights, degree, comm_tot, node2com,
                  m2, resolution, tol, level_stream):
    """Greedy node sweeps; returns the number of accepted moves.

    ``comm_tot`` and ``node2com`` are updated in place.  Candidate
    communities are scored by w(i->C) - resolution * k_i * tot(C) / m2;
    the first community reaching the best score in adjacency order wins,
    and a move must beat staying by more than ``tol`` in modularity.
    """
    n = node2com.shape[0]
    neigh_w = np.zeros(n, dtype=np.float64)
    touched = np.empty(n, dtype=np.int64)
    total_moves = 0
    sweep = 0
    while True:
        pass_seed = _sm_mix(level_stream ^ (_PASS_SALT * _U64(sweep + 1)))
        order = _shuffled_range(n, pass_seed)
        moves = 0
        for idx in range(n):
            node = order[idx]
            cur = node2com[node]
            n_touched = 0
            for p in range(indptr[node], indptr[node + 1]):
                c = node2com[indices[p]]
                if neigh_w[c] == 0.0:
                    touched[n_touched] = c
                    n_touched += 1
                neigh_w[c] += weights[p]
            ki = degree[node]
            comm_tot[cur] -= ki
            stay = neigh_w[cur] - resolution * ki * comm_tot[cur] / m2
            best_c = cur
            best_score = stay
            for t in range(n_touched):
                c = touched[t]
                if c == cur:
                    continue
                score = neigh_w[c] - resolution * ki * comm_tot[c] / m2
                if score > best_score:
                    best_score = score
                    best_c = c
            # gain in actual modularity units
            if best_c != cur and 2.0 * (best_score - stay) / m2 > tol:
                node2com[node] = best_c
                comm_tot[best_c] += ki
                moves += 1
            else:
                comm_tot[cur] += ki
            for t in range(n_touched):
                neigh_w[touched[t]] = 0.0
        total_moves += moves
        sweep += 1
        if moves == 0:
            break
    return total_moves


@njit(cache=True, nogil=True)
def _renumber(node2com):
    n = node2com.shape[0]
    new_id = np.full(n, -1, dtype=np.int64)
    count = 0
    for i in range(n):
        c = node2com[i]
        if new_id[c] < 0:
            new_id[c] = count
            count += 1
        node2com[i] = new_id[c]
    return count


@njit(cache=True, nogil=True)
def _level_modularity(indptr, indices, weights, loops, degree, node2com,
                      n_comms, m2, resolution):
    internal = 0.0
    n = node2com.shape[0]
    for i in range(n):
        internal += 2.0 * loops[i]
        for p in range(indptr[i], indptr[i + 1]):
            if node2com[indices[p]] == node2com[i]:
                internal += weights[p]
    tot = np.zeros(n_comms, dtype=np.float64)
    for i in range(n):
        tot[node2com[i]] += degree[i]
    q = internal / m2
    for c in range(n_comms):
        share = tot[c] / m2
        q -= resolution * share * share
    return q


@njit(cache=True, nogil=True)
def _aggregate(indptr, indices, weights, loops, node2com, n_comms):
    n = node2com.shape[0]
    block = np.zeros((n_comms, n_comms), dtype=np.float64)
    new_loops = np.zeros(n_comms, dtype=np.float64)
    for i in range(n):
        ci = node2com[i]
        new_loops[ci] += loops[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            cj = node2com[j]
            if ci == cj:
                if i < j:
                    new_loops[ci] += weights[p]
            else:
                block[ci, cj] += weights[p]
    new_indptr = np.empty(n_comms + 1, dtype=np.int64)
    new_indptr[0] = 0
    nnz = 0
    for ci in range(n_comms):
        for cj in range(n_comms):
            if block[ci, cj] != 0.0:
                nnz += 1
        new_indptr[ci + 1] = nnz
    new_indices = np.empty(nnz, dtype=np.int64)
    new_weights = np.empty(nnz, dtype=np.float64)
    pos = 0
    for ci in range(n_comms):
        for cj in range(n_comms):
            if block[ci, cj] != 0.0:
                new_indices[pos] = cj
                new_weights[pos] = block[ci, cj]
                pos += 1
    return new_indptr, new_indices, new_weights, new_loops


@njit(cache=True, nogil=True)
def _louvain_kernel(indptr, indices, weights, seed, resolution, tol):
    """Full multi-level run on a CSR graph without self-loops.

    Returns (labels, level_modularities).  Labels are dense community
    ids in order of first appearance along the original node order.
    """
    n0 = indptr.shape[0] - 1
    labels = np.arange(n0, dtype=np.int64)
    degree = np.zeros(n0, dtype=np.float64)
    for i in range(n0):
        for p in range(indptr[i], indptr[i + 1]):
            degree[i] += weights[p]
    m2 = degree.sum()
    q_levels = np.empty(n0 + 1, dtype=np.float64)
    if m2 <= 0.0:
        q_levels[0] = 0.0
        return labels, q_levels[:1]
    loops = np.zeros(n0, dtype=np.float64)
    q_prev = _level_modularity(indptr, indices, weights, loops, degree,
                               labels.copy(), n0, m2, resolution)
    q_levels[0] = q_prev
    n_levels = 1
    level = 0
    while True:
        n = indptr.shape[0] - 1
        node2com = np.arange(n, dtype=np.int64)
        comm_tot = degree.copy()
        level_stream = _sm_mix(seed ^ (_LEVEL_SALT * _U64(level + 1)))
        moves = _local_moving(indptr, indices, weights, degree, comm_tot,
                              node2com, m2, resolution, tol, level_stream)
        n_comms = _renumber(node2com)
        q_new = _level_modularity(indptr, indices, weights, loops, degree,
                                  node2com, n_comms, m2, resolution)
        if moves == 0 or q_new - q_prev <= tol:
            break
        for i in range(labels.shape[0]):
            labels[i] = node2com[labels[i]]
        q_levels[n_levels] = q_new
        n_levels += 1
        q_prev = q_new
        if n_comms == n:
            break
        indptr, indices, weights, loops = _aggregate(
            indptr, indices, weights, loops, node2com, n_comms)
        degree = np.zeros(n_comms, dtype=np.float64)
        for i in range(n_comms):
            degree[i] = 2.0 * loops[i]
            for p in range(indptr[i], indptr[i + 1]):
                degree[i] += weights[p]
        level += 1
    # final dense renumbering over original node order
    _renumber(labels)
    return labels, q_levels[:n_levels]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph with no self-loops.

    Edges are stored once with u < v (row indices into the roster) and
    strictly positive weights.
    """

    roster: NodeRoster
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.int64)
        v = np.asarray(self.v, dtype=np.int64)
        w = np.asarray(self.w, dtype=np.float64)
        if not (u.shape == v.shape == w.shape) or u.ndim != 1:
            raise ValidationError("edge arrays must be 1-D and equally long")
        n = len(self.roster)
        if u.size:
            check_finite(w[:, None], "edge weights")
            if (u < 0).any() or (v < 0).any() or (u >= n).any() or (v >= n).any():
                raise ValidationError("edge endpoint out of roster range")
            if (u >= v).any():
                i = int(np.flatnonzero(u >= v)[0])
                raise ValidationError(
                    f"edge {i} has u >= v ({u[i]}, {v[i]}); self-loops are not allowed"
                )
            if (w <= 0).any():
                i = int(np.flatnonzero(w <= 0)[0])
                raise ValidationError(f"edge {i} has non-positive weight {w[i]!r}")
        object.__setattr__(self, "u", readonly(u))
        object.__setattr__(self, "v", readonly(v))
        object.__setattr__(self, "w", readonly(w))

    @classmethod
    def from_edges(
        cls, roster: NodeRoster, edges: Iterable[tuple[str, str, float]]
    ) -> "WeightedGraph":
        us, vs, ws = [], [], []
        for a, b, weight in edges:
            i, j = roster.index(a), roster.index(b)
            if i == j:
                raise ValidationError(f"self-loop on node {a!r}")
            us.append(min(i, j))
            vs.append(max(i, j))
            ws.append(float(weight))
        return cls(roster, np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64),
                   np.array(ws, dtype=np.float64))

    @classmethod
    def from_similarity(cls, sim: SimilarityMatrix, threshold: float = 0.0) -> "WeightedGraph":
        """Off-diagonal similarities above ``threshold`` become edge weights."""
        iu, iv = np.triu_indices(len(sim), k=1)
        vals = sim.values[iu, iv]
        keep = vals > threshold
        return cls(sim.roster, iu[keep], iv[keep], vals[keep])

    @property
    def n_nodes(self) -> int:
        return len(self.roster)

    @property
    def n_edges(self) -> int:
        return int(self.u.size)

    @property
    def total_weight(self) -> float:
        return float(self.w.sum())

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.float64)
        np.add.at(deg, self.u, self.w)
        np.add.at(deg, self.v, self.w)
        return deg

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric CSR arrays (indptr, indices, weights), neighbors ascending."""
        n = self.n_nodes
        src = np.concatenate([self.u, self.v])
        dst = np.concatenate([self.v, self.u])
        ww = np.concatenate([self.w, self.w])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, dst[order].astype(np.int64), ww[order]

    def restrict(self, nodes: Sequence[str]) -> "WeightedGraph":
        """Subgraph over ``nodes`` (kept in the given order)."""
        roster = NodeRoster.from_ids(nodes)
        old = self.roster.indices(roster.ids)
        remap = np.full(self.n_nodes, -1, dtype=np.int64)
        remap[old] = np.arange(len(roster))
        keep = (remap[self.u] >= 0) & (remap[self.v] >= 0)
        u, v = remap[self.u[keep]], remap[self.v[keep]]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        return WeightedGraph(roster, lo, hi, self.w[keep])


def graph_from_similarity(sim: SimilarityMatrix, threshold: float = 0.0) -> WeightedGraph:
    return WeightedGraph.from_similarity(sim, threshold)


@dataclass(frozen=True)
class Partition:
    """A node-to-community assignment with its recomputed modularity."""

    roster: NodeRoster
    assignment: tuple[int, ...]
    modularity: float
    seed: int
    resolution: float = 1.0
    prng: str = PRNG_ID

    def __post_init__(self):
        if len(self.assignment) != len(self.roster):
            raise ValidationError(
                f"assignment length {len(self.assignment)} != roster size {len(self.roster)}"
            )

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment)) if self.assignment else 0

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.assignment, dtype=np.int64)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.roster.ids, self.assignment))

    def communities(self) -> tuple[tuple[str, ...], ...]:
        groups: dict[int, list[str]] = {}
        for node, c in zip(self.roster.ids, self.assignment):
            groups.setdefault(c, []).append(node)
        return tuple(tuple(groups[c]) for c in sorted(groups))


def _assignment_array(graph: WeightedGraph, assignment) -> np.ndarray:
    if isinstance(assignment, Partition):
        return assignment.labels
    if isinstance(assignment, Mapping):
        try:
            return np.array([int(assignment[n]) for n in graph.roster.ids], dtype=np.int64)
        except KeyError as exc:
            raise ValidationError(f"assignment is missing node {exc.args[0]!r}") from None
    arr = np.asarray(assignment, dtype=np.int64)
    if arr.shape != (graph.n_nodes,):
        raise ValidationError(
            f"assignment shape {arr.shape} does not match {graph.n_nodes} nodes"
        )
    return arr


def modularity(graph: WeightedGraph, assignment, resolution: float = 1.0) -> float:
    """Newman weighted modularity of a partition; 0.0 for an empty graph."""
    labels = _assignment_array(graph, assignment)
    if graph.n_edges == 0:
        return 0.0
    _, dense = np.unique(labels, return_inverse=True)
    m2 = 2.0 * graph.total_weight
    same = dense[graph.u] == dense[graph.v]
    internal = 2.0 * graph.w[same].sum()
    tot = np.bincount(dense, weights=graph.degrees())
    return float(internal / m2 - resolution * ((tot / m2) ** 2).sum())


def louvain(graph: WeightedGraph, seed: int = 0, resolution: float = 1.0) -> Partition:
    """Seed-deterministic Louvain partition of a weighted graph."""
    if graph.n_edges == 0:
        labels = tuple(range(graph.n_nodes))
        return Partition(graph.roster, labels, 0.0, int(seed), float(resolution))
    indptr, indices, weights = graph.csr()
    labels, _ = _louvain_kernel(indptr, indices, weights,
                                _U64(int(seed) & 0xFFFFFFFFFFFFFFFF),
                                float(resolution), GAIN_TOL)
    q = modularity(graph, labels, resolution)
    return Partition(graph.roster, tuple(int(c) for c in labels), q,
                     int(seed), float(resolution))


def louvain_labels(indptr, indices, weights, seed: int, resolution: float = 1.0) -> np.ndarray:
    """Low-level entry for ensemble callers that reuse one CSR across runs."""
    labels, _ = _louvain_kernel(indptr, indices, weights,
                                _U64(int(seed) & 0xFFFFFFFFFFFFFFFF),
                                float(resolution), GAIN_TOL)
    return labels


def write_partition_csv(path, assignment: Mapping[str, int]) -> None:
    """node_id,community rows in roster (insertion) order."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node_id", "community"])
        for node, c in assignment.items():
            writer.writerow([node, int(c)])


def read_partition_csv(path) -> dict[str, int]:
    import csv

    mapping: dict[str, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["node_id", "community"]:
        raise ValidationError(f"{path}: expected a node_id,community header")
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise ValidationError(f"{path}:{lineno}: expected node_id,community")
        mapping[row[0]] = int(row[1])
    return mapping


class LouvainCommunities(ClusterMixin, BaseEstimator):
    """Clusterer interface over :func:`louvain`.

    ``fit`` accepts a SimilarityMatrix, a square similarity array, or a
    WeightedGraph.  Attributes: ``labels_``, ``modularity_``,
    ``partition_``.
    """

    def __init__(self, seed: int = 0, resolution: float = 1.0, threshold: float = 0.0):
        self.seed = seed
        self.resolution = resolution
        self.threshold = threshold

    def _as_graph(self, X) -> WeightedGraph:
        if isinstance(X, WeightedGraph):
            return X
        if isinstance(X, SimilarityMatrix):
            return WeightedGraph.from_similarity(X, self.threshold)
        arr = np.asarray(X, dtype=np.float64)
        n = arr.shape[0]
        width = len(str(max(n - 1, 0)))
        roster = NodeRoster.from_ids(f"n{i:0{width}d}" for i in range(n))
        return WeightedGraph.from_similarity(SimilarityMatrix(roster, arr), self.threshold)

    def fit(self, X, y=None):
        partition = louvain(self._as_graph(X), seed=self.seed, resolution=self.resolution)
        self.partition_ = partition
        self.labels_ = partition.labels
        self.modularity_ = partition.modularity
        return self
