"""Ensemble consensus communities across several similarity matrices.

Each input matrix is clustered ``runs_per_matrix`` times with seeds
derived from a master seed (a stable 64-bit hash of (master, matrix
index, run index)), and all runs are pooled into one co-occurrence
graph over the union of the rosters.  A pair's weight is the share of
runs that placed both nodes in the same community, relative to the
pair's exposure (runs where both nodes were present) or, optionally,
to the total run count.  Edges at or above the threshold survive;
nodes with no surviving edge become isolates, and one final seeded
clustering of the surviving graph yields the consensus partition.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ._rng import PRNG_ID, derive_seed
from .community import Partition, WeightedGraph, louvain, louvain_labels
from .core import Multiplex, NodeRoster, SimilarityMatrix
from .errors import EmptyInput, ValidationError
from .validation import readonly

DENOMINATORS = ("exposure", "total")


@dataclass(frozen=True)
class CooccurrenceGraph:
    """Pooled co-assignment evidence over the union roster."""

    roster: NodeRoster
    counts: np.ndarray = field(repr=False)
    exposure: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    runs_per_matrix: int
    n_matrices: int
    denominator: str
    master_seed: int
    prng: str = PRNG_ID

    def __post_init__(self):
        n = len(self.roster)
        for name in ("counts", "exposure", "weights"):
            arr = getattr(self, name)
            if arr.shape != (n, n):
                raise ValidationError(f"{name} shape {arr.shape} != ({n}, {n})")
        object.__setattr__(self, "counts", readonly(self.counts))
        object.__setattr__(self, "exposure", readonly(self.exposure))
        object.__setattr__(self, "weights", readonly(self.weights))


@dataclass(frozen=True)
class ConsensusResult:
    """Final consensus partition plus the evidence that produced it."""

    roster: NodeRoster
    assignment: Mapping[str, int]
    isolates: tuple[str, ...]
    modularity: float
    tau: float
    runs_per_matrix: int
    denominator: str
    master_seed: int
    cooccurrence: CooccurrenceGraph
    prng: str = PRNG_ID

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values())) if self.assignment else 0

    def labels_over_roster(self) -> np.ndarray:
        """Labels aligned to the union roster; isolates get -1."""
        return np.array(
            [self.assignment.get(node, -1) for node in self.roster.ids], dtype=np.int64
        )


def _coerce_matrices(matrices) -> list[SimilarityMatrix]:
    if isinstance(matrices, Multiplex):
        return [m for _, m in matrices.layers]
    out = list(matrices)
    if not out:
        raise EmptyInput("no matrices given")
    for m in out:
        if not isinstance(m, SimilarityMatrix):
            raise ValidationError("consensus inputs must be SimilarityMatrix objects")
    return out


def _count_runs(csr, union_idx: np.ndarray, n_union: int, seeds: Sequence[int]) -> np.ndarray:
    """Co-assignment counts for a block of runs on one matrix."""
    indptr, indices, weights = csr
    counts = np.zeros((n_union, n_union), dtype=np.int64)
    for seed in seeds:
        labels = louvain_labels(indptr, indices, weights, seed)
        order = np.argsort(labels, kind="stable")
        sorted_labels = labels[order]
        boundaries = np.flatnonzero(np.diff(sorted_labels)) + 1
        for members in np.split(order, boundaries):
            mapped = union_idx[members]
            counts[np.ix_(mapped, mapped)] += 1
    return counts


def run_ensemble(
    matrices,
    runs_per_matrix: int = 1000,
    master_seed: int = 0,
    denominator: str = "exposure",
    jobs: int = 1,
) -> CooccurrenceGraph:
    """Pool seeded clustering runs into a co-occurrence graph.

    Seeds are ``derive_seed(master_seed, matrix_index, run_index)``, so
    the pooled counts are independent of scheduling and of ``jobs``.
    """
    mats = _coerce_matrices(matrices)
    if runs_per_matrix < 1:
        raise ValidationError(f"runs_per_matrix must be >= 1, got {runs_per_matrix}")
    if denominator not in DENOMINATORS:
        raise ValidationError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    union_ids = sorted(set().union(*(m.roster.ids for m in mats)))
    roster = NodeRoster.from_ids(union_ids)
    n = len(roster)

    counts = np.zeros((n, n), dtype=np.int64)
    exposure = np.zeros((n, n), dtype=np.int64)
    tasks = []
    for mi, matrix in enumerate(mats):
        union_idx = roster.indices(matrix.roster.ids)
        exposure[np.ix_(union_idx, union_idx)] += runs_per_matrix
        csr = WeightedGraph.from_similarity(matrix).csr()
        seeds = [derive_seed(master_seed, mi, r) for r in range(runs_per_matrix)]
        if jobs <= 1:
            counts += _count_runs(csr, union_idx, n, seeds)
        else:
            chunk = max(1, (len(seeds) + jobs - 1) // jobs)
            tasks.extend(
                (csr, union_idx, seeds[lo : lo + chunk])
                for lo in range(0, len(seeds), chunk)
            )
    if tasks:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_count_runs, csr, idx, n, seeds) for csr, idx, seeds in tasks
            ]
            for future in futures:
                counts += future.result()

    np.fill_diagonal(counts, 0)
    np.fill_diagonal(exposure, 0)
    if denominator == "exposure":
        weights = np.divide(
            counts, exposure, out=np.zeros((n, n), dtype=np.float64), where=exposure > 0
        )
    else:
        weights = counts / float(runs_per_matrix * len(mats))
    return CooccurrenceGraph(
        roster, counts, exposure, weights, runs_per_matrix, len(mats),
        denominator, int(master_seed),
    )


def threshold_graph(
    coocc: CooccurrenceGraph, tau: float = 0.8
) -> tuple[WeightedGraph, tuple[str, ...]]:
    """Keep pairs with weight >= tau; report nodes left without edges.

    The threshold is inclusive: a pair co-assigned in exactly tau of its
    exposed runs survives.
    """
    if not 0.0 < tau <= 1.0:
        raise ValidationError(f"tau must be in (0, 1], got {tau}")
    n = len(coocc.roster)
    iu, iv = np.triu_indices(n, k=1)
    keep = coocc.weights[iu, iv] >= tau
    graph = WeightedGraph(coocc.roster, iu[keep], iv[keep], coocc.weights[iu, iv][keep])
    connected = np.zeros(n, dtype=bool)
    connected[graph.u] = True
    connected[graph.v] = True
    isolates = tuple(coocc.roster.ids[i] for i in np.flatnonzero(~connected))
    return graph, isolates


def final_partition(
    graph: WeightedGraph, isolates: Sequence[str], master_seed: int
) -> Partition:
    """One seeded clustering of the surviving graph, isolates excluded."""
    members = [node for node in graph.roster.ids if node not in set(isolates)]
    if not members:
        raise EmptyInput("every node is an isolate; nothing to partition")
    survivors = graph.restrict(members)
    return louvain(survivors, seed=derive_seed(master_seed, "final"))


def consensus_communities(
    matrices,
    runs_per_matrix: int = 1000,
    tau: float = 0.8,
    master_seed: int = 0,
    denominator: str = "exposure",
    jobs: int = 1,
) -> ConsensusResult:
    """Full consensus procedure over a set of similarity matrices."""
    coocc = run_ensemble(matrices, runs_per_matrix, master_seed, denominator, jobs)
    graph, isolates = threshold_graph(coocc, tau)
    partition = final_partition(graph, isolates, master_seed)
    return ConsensusResult(
        roster=coocc.roster,
        assignment=partition.as_dict(),
        isolates=isolates,
        modularity=partition.modularity,
        tau=float(tau),
        runs_per_matrix=runs_per_matrix,
        denominator=denominator,
        master_seed=int(master_seed),
        cooccurrence=coocc,
    )


class ConsensusClustering(ClusterMixin, BaseEstimator):
    """Clusterer interface over :func:`consensus_communities`.

    ``fit`` accepts a sequence of SimilarityMatrix (or a Multiplex).
    ``labels_`` aligns with the union roster, isolates marked -1.
    """

    def __init__(
        self,
        runs_per_matrix: int = 1000,
        tau: float = 0.8,
        master_seed: int = 0,
        denominator: str = "exposure",
        jobs: int = 1,
    ):
        self.runs_per_matrix = runs_per_matrix
        self.tau = tau
        self.master_seed = master_seed
        self.denominator = denominator
        self.jobs = jobs

    def fit(self, X, y=None):
        result = consensus_communities(
            X,
            runs_per_matrix=self.runs_per_matrix,
            tau=self.tau,
            master_seed=self.master_seed,
            denominator=self.denominator,
            jobs=self.jobs,
        )
        self.result_ = result
        self.labels_ = result.labels_over_roster()
        self.isolates_ = result.isolates
        self.roster_ = result.roster
        return self
